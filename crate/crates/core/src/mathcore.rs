//! Special functions and combinatorics used by the closed-form coupling
//! expressions.
//!
//! Everything here is a pure function of real or integer scalars. Factorial
//! ratios go through the log domain so that mode orders in the hundreds do not
//! overflow.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const LOG_FACTORIAL_TABLE: usize = 1024;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LOG_FACTORIAL_TABLE);
        let mut acc = 0.0f64;
        table.push(0.0);
        for k in 1..LOG_FACTORIAL_TABLE {
            acc += (k as f64).ln();
            table.push(acc);
        }
        table
    })
}

/// `ln(n!)`.
pub fn log_factorial(n: u64) -> f64 {
    if (n as usize) < LOG_FACTORIAL_TABLE {
        log_factorial_table()[n as usize]
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `a! / b!` evaluated in the log domain.
pub fn factorial_ratio(a: u64, b: u64) -> f64 {
    if a == b {
        return 1.0;
    }
    (log_factorial(a) - log_factorial(b)).exp()
}

/// Binomial coefficient `C(n, k)`.
///
/// Integer arithmetic while the intermediate products fit in 128 bits (the
/// result is then correctly rounded), log domain beyond that.
pub fn binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::invalid(format!("binomial({n}, {k}): k exceeds n")));
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc * (n - k + i) / i stays integral at every step.
        match acc.checked_mul((n - k + i) as u128) {
            Some(v) => acc = v / i as u128,
            None => {
                return Ok(
                    (log_factorial(n) - log_factorial(k) - log_factorial(n - k)).exp(),
                )
            }
        }
    }
    Ok(acc as f64)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (Gamma(x + 1)).
    let mut sum = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    sum
}

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the Lanczos series in its accurate range.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + lanczos_sum(x).ln()
}

/// Gamma function for positive arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("gamma_fn({x}): argument must be positive")));
    }
    if x < 0.5 {
        return Ok(PI / ((PI * x).sin() * gamma_fn(1.0 - x)?));
    }
    if x > 171.0 {
        return Ok(ln_gamma(x).exp());
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powf(y + 0.5) * (-t).exp() * lanczos_sum(y))
}

/// Gamma at compile-time-known positive arguments used by physical constants.
pub(crate) fn gamma(x: f64) -> f64 {
    gamma_fn(x).expect("positive argument")
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite(n: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal Hermite functions `psi_0(u) ..= psi_nmax(u)` with
/// `psi_n(u) = H_n(u) exp(-u^2/2) / sqrt(2^n n! sqrt(pi))`.
pub fn hermite_functions(nmax: usize, u: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(PI.powf(-0.25) * (-0.5 * u * u).exp());
    if nmax == 0 {
        return;
    }
    out.push(2f64.sqrt() * u * out[0]);
    for n in 1..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * u * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
}

fn laguerre_recurrence(n: u32, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Generalized Laguerre polynomial split as `coefficient * x^power * value`.
///
/// For integer superscripts `a <= -1` with `n + a >= 0` the polynomial has a
/// root of multiplicity `-a` at the origin; it is rewritten through
/// `L_n^{-k}(x) = (n-k)!/n! * (-x)^k * L_{n-k}^{k}(x)` so that the power of
/// `x` can be combined exactly with other powers of the same variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaguerreFactors {
    pub coefficient: f64,
    pub power: u32,
    pub value: f64,
}

impl LaguerreFactors {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficient * x.powi(self.power as i32) * self.value
    }
}

pub fn laguerre_factors(n: u32, a: i32, x: f64) -> LaguerreFactors {
    if a < 0 && n as i64 + a as i64 >= 0 {
        let k = (-a) as u32;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        LaguerreFactors {
            coefficient: sign * factorial_ratio((n - k) as u64, n as u64),
            power: k,
            value: laguerre_recurrence(n - k, k as f64, x),
        }
    } else if a < 0 {
        // n < -a: every term of the explicit sum has sign (-1)^n, whereas the
        // recurrence passes through values of size C(-a-1, n/2).
        LaguerreFactors { coefficient: 1.0, power: 0, value: laguerre_short(n, a, x) }
    } else {
        LaguerreFactors {
            coefficient: 1.0,
            power: 0,
            value: laguerre_recurrence(n, a as f64, x),
        }
    }
}

fn laguerre_short(n: u32, a: i32, x: f64) -> f64 {
    let m = (-a - 1) as u64;
    let n64 = n as u64;
    let mut term = binomial(m, n64).expect("m >= n");
    let mut sum = term;
    for i in 0..n64 {
        term *= (n64 - i) as f64 / (m - i) as f64 * x / (i + 1) as f64;
        sum += term;
    }
    if n % 2 == 0 { sum } else { -sum }
}

/// Generalized Laguerre polynomial `L_n^a(x)` for integer `a` of either sign.
pub fn laguerre(n: u32, a: i32, x: f64) -> f64 {
    laguerre_factors(n, a, x).eval(x)
}

/// `L_n(x) - 1` without cancellation at small `x`.
pub fn laguerre_minus_one(n: u32, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    if nf * x.abs() < 1.0 {
        // sum_{i>=1} (-1)^i C(n, i) x^i / i!
        let mut term = -nf * x;
        let mut sum = term;
        for i in 1..n {
            let i = i as f64;
            term *= -(nf - i) * x / ((i + 1.0) * (i + 1.0));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        laguerre_recurrence(n, 0.0, x) - 1.0
    }
}

/// Bessel function of the first kind `J_n(x)` of integer order.
///
/// Miller's backward recurrence normalised by `J_0 + 2 sum J_2k = 1`; accurate
/// to roughly machine precision in absolute terms for `|x| <= 100`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < 1e-8 {
        // Leading series term; relative error ~ x^2.
        return (n as f64 * (0.5 * x).ln() - log_factorial(n as u64)).exp();
    }
    if x > 100.0f64.max(2.0 * (n as f64).powi(2)) {
        return bessel_j_asymptotic(n, x);
    }
    let top = (n as f64).max(x);
    let mut start = (top + 30.0 + (50.0 * top).sqrt()) as usize;
    start += start % 2;
    let two_over_x = 2.0 / x;
    let mut next = 0.0f64;
    let mut cur = 1e-300f64;
    let mut wanted = 0.0f64;
    let mut norm = 0.0f64;
    for k in (1..=start).rev() {
        // cur = J_k, next = J_{k+1}; produce J_{k-1}
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        let order = k - 1;
        if order == n as usize {
            wanted = cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            wanted *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += cur;
    wanted / norm
}

// Hankel expansion, truncated at the smallest term.
fn bessel_j_asymptotic(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n as f64).powi(2);
    let chi = x - (n as f64 * 0.5 + 0.25) * PI;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for j in 1..60 {
        let odd = (2 * j - 1) as f64;
        term *= (mu - odd * odd) / (j as f64 * 8.0 * x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // a_j / x^j enters P (even j) or Q (odd j) with alternating sign.
        match j % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if last < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
