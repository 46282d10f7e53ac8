//! Acceptance spectra `B_ab(theta)`: the fraction of the phase-fluctuation
//! power at reduced frequency `theta` that one elementary phase wave moves from
//! mode `a` into mode `b` (off-diagonal, `B >= 0`) or removes from `a`
//! (diagonal, `B <= 0`).
//!
//! The `alpha_K^2 / 2` factor of the transition probability is not part of
//! `B`; it is accounted for by the phase spectrum in the rate integrals.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::{laguerre, laguerre_factors, laguerre_minus_one, log_factorial};
use crate::modes::ModeId;

/// Default number of trapezoid intervals on `[0, pi/2]` for direction averages.
///
/// The direction dependence of an HG spectrum is a polynomial of degree
/// `m + n + k + t` in `cos 2xi`, which the rule integrates exactly whenever that
/// degree is below `2 * XI_INTERVALS`.
pub const XI_INTERVALS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Direction {
    /// Phase wave along `(cos xi, sin xi)`.
    Fixed(f64),
    /// Mean over all directions.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LaguerreTerm {
    n: u32,
    a: i32,
}

impl LaguerreTerm {
    fn eval(&self, x: f64) -> f64 {
        laguerre(self.n, self.a, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kernel {
    /// `coef * theta^power * exp(-2 theta) * [L1(theta) L2(theta)]^2`
    LgOff { coef: f64, power: u32, first: LaguerreTerm, second: LaguerreTerm },
    /// `[L_{n1}(theta) L_{n2}(theta)]^2 exp(-2 theta) - 1`
    LgDiag { n1: u32, n2: u32 },
    Hg { m: u32, n: u32, k: u32, t: u32, direction: Direction, intervals: usize },
}

/// Precomputed acceptance spectrum of one mode pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceSpectrum {
    a: ModeId,
    b: ModeId,
    kernel: Kernel,
}

// The two branches of the LG closed form with the vanishing factors of
// negative-superscript Laguerre polynomials pulled out as explicit powers.
// Returns None when the net power of theta is negative for this orientation.
fn lg_offdiagonal(p: u32, l: i32, q: u32, s: i32) -> Option<Kernel> {
    let (al, as_) = (l.unsigned_abs() as i32, s.unsigned_abs() as i32);
    let (pi, qi) = (p as i32, q as i32);
    let mut log_coef = log_factorial(q as u64) - log_factorial((q + as_ as u32) as u64);
    let (n1, a1, n2, a2, mut power);
    if l * s >= 0 {
        log_coef += log_factorial((p + al as u32) as u64) - log_factorial(p as u64);
        (n1, a1) = (pi + al, qi - pi + as_ - al);
        (n2, a2) = (qi, pi - qi);
        power = as_ - al;
    } else {
        log_coef += log_factorial(p as u64) - log_factorial((p + al as u32) as u64);
        (n1, a1) = (pi, qi - pi + as_);
        (n2, a2) = (qi, pi - qi + al);
        power = as_ + al;
    }
    let f1 = laguerre_factors(n1 as u32, a1, 0.0);
    let f2 = laguerre_factors(n2 as u32, a2, 0.0);
    power += 2 * (f1.power + f2.power) as i32;
    if power < 0 {
        return None;
    }
    let coef = log_coef.exp() * (f1.coefficient * f2.coefficient).powi(2);
    // A factored term L_n^{-k} continues as L_{n-k}^{k}.
    let term = |n: i32, a: i32, k: u32| {
        if k > 0 {
            LaguerreTerm { n: (n - k as i32) as u32, a: k as i32 }
        } else {
            LaguerreTerm { n: n as u32, a }
        }
    };
    let first = term(n1, a1, f1.power);
    let second = term(n2, a2, f2.power);
    Some(Kernel::LgOff { coef, power: power as u32, first, second })
}

impl AcceptanceSpectrum {
    pub fn new(a: ModeId, b: ModeId) -> Result<Self> {
        Self::with_direction(a, b, Direction::Averaged)
    }

    /// `direction` only matters for HG pairs; LG spectra are isotropic.
    pub fn with_direction(a: ModeId, b: ModeId, direction: Direction) -> Result<Self> {
        Self::build(a, b, direction, XI_INTERVALS)
    }

    pub fn with_intervals(a: ModeId, b: ModeId, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::invalid("direction average needs at least one interval"));
        }
        Self::build(a, b, Direction::Averaged, intervals)
    }

    fn build(a: ModeId, b: ModeId, direction: Direction, intervals: usize) -> Result<Self> {
        let kernel = match (a, b) {
            (ModeId::Lg { p, l }, ModeId::Lg { p: q, l: s }) => {
                if a == b {
                    Kernel::LgDiag { n1: p + l.unsigned_abs(), n2: p }
                } else {
                    lg_offdiagonal(p, l, q, s)
                        .or_else(|| lg_offdiagonal(q, s, p, l))
                        .ok_or_else(|| Error::Invariant(format!("no regular closed form for {a} / {b}")))?
                }
            }
            (ModeId::Hg { m, n }, ModeId::Hg { m: k, n: t }) => {
                Kernel::Hg { m, n, k, t, direction, intervals }
            }
            _ => return Err(Error::BasisMismatch(format!("{a} and {b} belong to different families"))),
        };
        Ok(AcceptanceSpectrum { a, b, kernel })
    }

    pub fn modes(&self) -> (ModeId, ModeId) {
        (self.a, self.b)
    }

    pub fn is_diagonal(&self) -> bool {
        self.a == self.b
    }

    /// `B_ab(theta)`.
    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_scaled(theta, false)
    }

    /// `B_ab(theta) / theta`, finite as `theta -> 0`.
    pub fn eval_over_theta(&self, theta: f64) -> f64 {
        self.eval_scaled(theta, true)
    }

    fn eval_scaled(&self, theta: f64, over_theta: bool) -> f64 {
        match self.kernel {
            Kernel::LgOff { coef, power, first, second } => {
                let prod = first.eval(theta) * second.eval(theta);
                let pw = if over_theta { power as i32 - 1 } else { power as i32 };
                coef * theta.powi(pw) * (-2.0 * theta).exp() * prod * prod
            }
            Kernel::LgDiag { n1, n2 } => {
                let v = diagonal_value(laguerre_minus_one(n1, theta), laguerre_minus_one(n2, theta), 2.0 * theta);
                if over_theta {
                    v / theta
                } else {
                    v
                }
            }
            Kernel::Hg { m, n, k, t, direction, intervals } => match direction {
                Direction::Fixed(xi) => hg_fixed(m, n, k, t, theta, xi, over_theta),
                Direction::Averaged => {
                    let h = FRAC_PI_2 / intervals as f64;
                    let mut acc = 0.5
                        * (hg_fixed(m, n, k, t, theta, 0.0, over_theta)
                            + hg_fixed(m, n, k, t, theta, FRAC_PI_2, over_theta));
                    for j in 1..intervals {
                        acc += hg_fixed(m, n, k, t, theta, j as f64 * h, over_theta);
                    }
                    acc / intervals as f64
                }
            },
        }
    }

    /// Leading power of `theta` as `theta -> 0`.
    pub fn small_theta_order(&self) -> u32 {
        match self.kernel {
            Kernel::LgOff { power, .. } => power,
            Kernel::LgDiag { .. } => 1,
            Kernel::Hg { m, n, k, t, .. } => {
                if (m, n) == (k, t) {
                    1
                } else {
                    m.abs_diff(k) + n.abs_diff(t)
                }
            }
        }
    }
}

// exp(-x) P^2 - 1 for P = (1 + d1)(1 + d2). The split form avoids
// cancellation near x = 0; for large x, P grows like a polynomial and the
// two split terms cancel instead, so the direct form is used there.
fn diagonal_value(d1: f64, d2: f64, x: f64) -> f64 {
    let dp = d1 * d2 + d1 + d2;
    let p = 1.0 + dp;
    if x < 1.0 {
        (-x).exp_m1() * p * p + dp * (p + 1.0)
    } else {
        let q = (-0.5 * x).exp() * p;
        q * q - 1.0
    }
}

fn hg_fixed(m: u32, n: u32, k: u32, t: u32, theta: f64, xi: f64, over_theta: bool) -> f64 {
    let (c2, s2) = (xi.cos().powi(2), xi.sin().powi(2));
    let (x, y) = (2.0 * theta * c2, 2.0 * theta * s2);
    if (m, n) == (k, t) {
        let v = diagonal_value(laguerre_minus_one(m, x), laguerre_minus_one(n, y), 2.0 * theta);
        return if over_theta { v / theta } else { v };
    }
    let (lo_x, dx) = (m.min(k), m.abs_diff(k));
    let (lo_y, dy) = (n.min(t), n.abs_diff(t));
    let log_coef = log_factorial(lo_x as u64) - log_factorial(lo_x as u64 + dx as u64)
        + log_factorial(lo_y as u64)
        - log_factorial(lo_y as u64 + dy as u64);
    let lx = laguerre(lo_x, dx as i32, x);
    let ly = laguerre(lo_y, dy as i32, y);
    // X^dx Y^dy = (2 theta)^(dx+dy) cos^(2dx) sin^(2dy)
    let total = (dx + dy) as i32;
    let pw = if over_theta { total - 1 } else { total };
    log_coef.exp()
        * 2f64.powi(total)
        * theta.powi(pw)
        * c2.powi(dx as i32)
        * s2.powi(dy as i32)
        * (lx * ly).powi(2)
        * (-2.0 * theta).exp()
}

/// LG acceptance spectrum between `(p, l)` and `(q, s)`.
pub fn b_lg(p: u32, l: i32, q: u32, s: i32, theta: f64) -> f64 {
    AcceptanceSpectrum::new(ModeId::lg(p, l), ModeId::lg(q, s))
        .expect("LG pairs always have a closed form")
        .eval(theta)
}

/// HG acceptance spectrum for a phase wave travelling at angle `xi`.
pub fn b_hg_fixed(m: u32, n: u32, k: u32, t: u32, theta: f64, xi: f64) -> f64 {
    hg_fixed(m, n, k, t, theta, xi, false)
}

/// Direction-averaged HG acceptance spectrum.
pub fn b_hg_avg(m: u32, n: u32, k: u32, t: u32, theta: f64) -> f64 {
    AcceptanceSpectrum::new(ModeId::hg(m, n), ModeId::hg(k, t))
        .expect("HG pair")
        .eval(theta)
}

/// Loss from the fundamental mode into the whole group of order `N`:
/// `(2 theta)^N exp(-2 theta) / N!`.
pub fn b_group_00(order: u32, theta: f64) -> Result<f64> {
    if order == 0 {
        return Err(Error::invalid("group order must be at least 1"));
    }
    Ok((order as f64 * (2.0 * theta).ln() - 2.0 * theta - log_factorial(order as u64)).exp())
}

/// `B_ab(theta)` for two modes of the same family, direction averaged for HG.
pub fn acceptance(a: ModeId, b: ModeId, theta: f64) -> Result<f64> {
    Ok(AcceptanceSpectrum::new(a, b)?.eval(theta))
}

pub fn small_theta_order(a: ModeId, b: ModeId) -> Result<u32> {
    Ok(AcceptanceSpectrum::new(a, b)?.small_theta_order())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::binomial;
    use std::f64::consts::PI;

    #[test]
    fn lg_examples() {
        for &th in &[0.0f64, 0.3, 2.0, 9.0] {
            let want = (-2.0f64 * th).exp() - 1.0;
            assert!((b_lg(0, 0, 0, 0, th) - want).abs() < 1e-15);
        }
        assert_eq!(b_lg(0, 0, 0, 0, 0.0), 0.0);
        assert!((b_lg(0, 0, 0, 1, 0.5) - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
    }

    // Both branches of the LG formula, evaluated literally with plain Laguerre
    // calls and no power bookkeeping.
    fn lg_branch(p: u32, l: i32, q: u32, s: i32, th: f64, positive: bool) -> f64 {
        let fact = |v: i32| (1..=v).map(f64::from).product::<f64>();
        let (al, as_, pi, qi) = (l.abs(), s.abs(), p as i32, q as i32);
        let pre = fact(qi) / fact(qi + as_) * th.powi(as_) * (-2.0 * th).exp();
        if positive {
            let v = laguerre((pi + al) as u32, qi - pi + as_ - al, th) * laguerre(q, pi - qi, th);
            pre * fact(pi + al) / fact(pi) * th.powi(-al) * v * v
        } else {
            let v = laguerre(p, qi - pi + as_, th) * laguerre(q, pi - qi + al, th);
            pre * fact(pi) / fact(pi + al) * th.powi(al) * v * v
        }
    }

    #[test]
    fn lg_branches_coincide_when_one_index_is_zero() {
        for p in 0..4 {
            for q in 0..4 {
                for l in -4..=4 {
                    for &th in &[0.2, 1.3, 4.0] {
                        let a = lg_branch(p, l, q, 0, th, true);
                        let b = lg_branch(p, l, q, 0, th, false);
                        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-3), "{p},{l},{q}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn lg_matches_literal_branches() {
        for p in 0..4 {
            for q in 0..4 {
                for l in -3..=3 {
                    for s in -3..=3 {
                        if (p, l) == (q, s) {
                            continue;
                        }
                        for &th in &[0.4, 1.7, 5.0] {
                            let lit = lg_branch(p, l, q, s, th, l * s >= 0);
                            let got = b_lg(p, l, q, s, th);
                            assert!((lit - got).abs() <= 1e-11 * lit.abs().max(1e-6), "{p},{l},{q},{s}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hg_fixed_examples() {
        for &xi in &[0.0, 0.7, 2.0] {
            let th = 0.8;
            assert!((b_hg_fixed(0, 0, 0, 0, th, xi) - ((-2.0 * th).exp() - 1.0)).abs() < 1e-15);
            let a = b_hg_fixed(2, 1, 0, 3, th, xi);
            let b = b_hg_fixed(2, 1, 0, 3, th, xi + PI);
            assert!((a - b).abs() < 1e-14);
        }
        let th = 0.6;
        assert!((b_hg_fixed(0, 0, 1, 0, th, 0.0) - 2.0 * th * (-2.0 * th).exp()).abs() < 1e-15);
        assert!(b_hg_fixed(0, 0, 1, 0, th, FRAC_PI_2).abs() < 1e-30);
    }

    #[test]
    fn hg_average_closed_forms() {
        for &th in &[0.1f64, 1.0, 3.5] {
            let e = (-2.0f64 * th).exp();
            assert!((b_hg_avg(0, 0, 1, 1, th) - th * th * e / 2.0).abs() < 1e-14);
            assert!((b_hg_avg(0, 0, 2, 0, th) - 0.75 * th * th * e).abs() < 1e-14);
        }
        // Directional moment: mean of cos^2 sin^2 over a period is 1/8.
        let n = 64;
        let mean: f64 = (0..n)
            .map(|j| {
                let xi = 2.0 * PI * j as f64 / n as f64;
                (xi.cos() * xi.sin()).powi(2)
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.125).abs() < 1e-15);
    }

    #[test]
    fn hg_average_fundamental_row() {
        for k in 0..7u32 {
            for t in 0..7u32 {
                if k + t == 0 {
                    continue;
                }
                let big_n = k + t;
                for &th in &[0.05f64, 0.9, 4.0] {
                    let fact: f64 = (1..=big_n).map(f64::from).product();
                    let closed = th.powi(big_n as i32) * (-2.0 * th).exp() / (2f64.powi(big_n as i32) * fact)
                        * binomial(2 * k as u64, k as u64).unwrap()
                        * binomial(2 * t as u64, t as u64).unwrap();
                    let avg = b_hg_avg(0, 0, k, t, th);
                    assert!((avg - closed).abs() <= 1e-10 * closed, "{k},{t}");
                }
            }
        }
    }

    #[test]
    fn doubling_direction_nodes_changes_nothing() {
        for &(m, n, k, t) in &[(0, 0, 3, 2), (2, 1, 1, 4), (3, 3, 3, 3), (5, 0, 1, 6)] {
            let a = AcceptanceSpectrum::with_intervals(ModeId::hg(m, n), ModeId::hg(k, t), 64).unwrap();
            let b = AcceptanceSpectrum::with_intervals(ModeId::hg(m, n), ModeId::hg(k, t), 128).unwrap();
            for &th in &[0.01, 0.5, 2.0, 7.0] {
                assert!((a.eval(th) - b.eval(th)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn group_examples() {
        assert!((b_group_00(1, 0.5).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(b_group_00(0, 1.0).is_err());
    }

    #[test]
    fn small_theta_examples() {
        let f = ModeId::lg(0, 0);
        assert_eq!(small_theta_order(f, f).unwrap(), 1);
        assert_eq!(small_theta_order(f, ModeId::lg(0, 1)).unwrap(), 1);
        assert_eq!(small_theta_order(f, ModeId::lg(0, 2)).unwrap(), 2);
        assert_eq!(small_theta_order(f, ModeId::lg(1, 0)).unwrap(), 2);
        assert_eq!(small_theta_order(ModeId::hg(0, 0), ModeId::hg(1, 0)).unwrap(), 1);
        assert_eq!(small_theta_order(ModeId::hg(1, 1), ModeId::hg(0, 0)).unwrap(), 2);
        let th = 1e-8;
        let slope = b_lg(0, 0, 0, 0, th) / th;
        assert!((slope + 2.0).abs() < 1e-7);
    }

    #[test]
    fn small_theta_order_matches_numerical_slope() {
        // Fit the log-log slope between two small arguments.
        for a in crate::modes::Basis::enumerate(crate::modes::Family::Lg, 4).modes() {
            for b in crate::modes::Basis::enumerate(crate::modes::Family::Lg, 4).modes() {
                let spec = AcceptanceSpectrum::new(*a, *b).unwrap();
                let (t1, t2) = (1e-6, 2e-6);
                let slope = (spec.eval(t2).abs() / spec.eval(t1).abs()).ln() / 2f64.ln();
                assert!((slope - spec.small_theta_order() as f64).abs() < 1e-4, "{a} {b}");
            }
        }
    }

    #[test]
    fn family_mismatch() {
        assert!(acceptance(ModeId::hg(0, 0), ModeId::lg(0, 0), 1.0).is_err());
    }
}
