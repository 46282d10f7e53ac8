use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use turbmodes::modes::{eval_mode, theta};
use turbmodes::quadrature::{integrate, Tolerance};
use turbmodes::turbulence::{cn2_from_r0, fried_r0, rytov_sigma2};
use turbmodes::{Basis, BeamGeometry, Family, ModeId, TurbulenceModel};

#[test]
fn kolmogorov_spectrum_slope() {
    let t = TurbulenceModel::kolmogorov(1e-14).unwrap();
    let (k, l) = (2.0 * PI / 850e-9, 1000.0);
    let ks: Vec<f64> = (0..=40).map(|i| 10f64.powf(-3.0 + 2.0 * i as f64 / 40.0)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = ks.iter().map(|&kk| (kk.ln(), t.phase_spectrum(kk, k, l).unwrap().ln())).unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope + 11.0 / 3.0).abs() < 0.01, "{slope}");
}

#[test]
fn von_karman_phase_spectrum_is_integrable() {
    let t = TurbulenceModel::von_karman(1e-14, 1e-3, 1.0).unwrap();
    let (k, l) = (2.0 * PI / 850e-9, 1000.0);
    // (2 pi)^-2 int F_S d^2K = (2 pi)^-1 int F_S K dK, integrated in log K.
    let variance = |cutoff: f64| -> f64 {
        let f = |u: f64| {
            let kk = u.exp();
            t.phase_spectrum(kk, k, l).unwrap() * kk * kk / (2.0 * PI)
        };
        integrate(f, (1e-6f64).ln(), cutoff.ln(), Tolerance::default()).unwrap().value
    };
    let values: Vec<f64> = [1e3, 1e4, 1e5, 1e6].iter().map(|&c| variance(c)).collect();
    assert!(values.iter().all(|v| v.is_finite() && *v > 0.0));
    let steps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(steps.windows(2).all(|s| s[1] < s[0]), "{values:?}");
    assert!(steps[2] < 1e-9 * values[3], "{values:?}");
}

proptest! {
    #[test]
    fn conversion_round_trips(log_cn2 in -17.0f64..-12.0, lam in 500e-9f64..2e-6, length in 10.0f64..1e4) {
        let cn2 = 10f64.powf(log_cn2);
        let k = 2.0 * PI / lam;
        let back = cn2_from_r0(fried_r0(cn2, k, length).unwrap(), k, length).unwrap();
        prop_assert!((back / cn2 - 1.0).abs() < 1e-12);
        let r0 = fried_r0(cn2, k, length).unwrap();
        prop_assert!((fried_r0(cn2_from_r0(r0, k, length).unwrap(), k, length).unwrap() / r0 - 1.0).abs() < 1e-12);
        // sigma_R^2 is linear in Cn2; invert through the unit-Cn2 value.
        let s = rytov_sigma2(cn2, k, length).unwrap();
        let inverted = s / rytov_sigma2(1.0, k, length).unwrap();
        prop_assert!((inverted / cn2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_scales_with_beam_growth(z in -5000.0f64..5000.0, big_k in 1.0f64..1e3) {
        let g = BeamGeometry::new(850e-9, 0.04, z).unwrap();
        let ratio = theta(big_k, &g) / theta(big_k, &g.at(0.0));
        let zr = g.rayleigh_range();
        prop_assert!((ratio / (1.0 + (z / zr).powi(2)) - 1.0).abs() < 1e-12);
    }
}

struct Sampled {
    xs: Vec<f64>,
    d: f64,
}

impl Sampled {
    fn new(half: f64, n: usize) -> Self {
        let d = 2.0 * half / n as f64;
        Sampled { xs: (0..n).map(|i| -half + (i as f64 + 0.5) * d).collect(), d }
    }

    fn field(&self, mode: ModeId, g: &BeamGeometry) -> Vec<Complex64> {
        self.xs.iter().flat_map(|&y| self.xs.iter().map(move |&x| eval_mode(mode, x, y, g))).collect()
    }

    fn overlap(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(u, v)| u.conj() * v).sum::<Complex64>() * (self.d * self.d)
    }
}

#[test]
fn hg_modes_are_orthonormal() {
    let g = BeamGeometry::new(850e-9, 0.01, 250.0).unwrap();
    let half = 5.0 * g.width() * 5f64.sqrt();
    let s = Sampled::new(half, 200);
    let basis = Basis::enumerate(Family::Hg, 4);
    let fields: Vec<Vec<Complex64>> = basis.modes().iter().map(|&m| s.field(m, &g)).collect();
    for (i, a) in fields.iter().enumerate() {
        for (j, b) in fields.iter().enumerate() {
            let o = s.overlap(a, b);
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((o - target).norm() < 1e-7, "{} {}: {o}", basis.modes()[i], basis.modes()[j]);
        }
    }
}

#[test]
fn order_groups_carry_equal_power_in_both_families() {
    // A random superposition of HG and LG modes of mixed order; per-order
    // projected power must not depend on the family used to measure it.
    let g = BeamGeometry::new(850e-9, 0.01, -120.0).unwrap();
    let s = Sampled::new(5.0 * g.width() * 8f64.sqrt(), 220);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut test_field = vec![Complex64::new(0.0, 0.0); s.xs.len().pow(2)];
    for family in [Family::Hg, Family::Lg] {
        for &m in Basis::enumerate(family, 7).modes() {
            let c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            for (t, v) in test_field.iter_mut().zip(s.field(m, &g)) {
                *t += c * v;
            }
        }
    }
    let grouped = |family: Family| -> Vec<f64> {
        let mut out = vec![0.0; 7];
        for &m in Basis::enumerate(family, 6).modes() {
            out[m.order() as usize] += s.overlap(&s.field(m, &g), &test_field).norm_sqr();
        }
        out
    };
    let (hg, lg) = (grouped(Family::Hg), grouped(Family::Lg));
    for n in 0..=6 {
        assert!((hg[n] - lg[n]).abs() < 1e-6 * hg[n].max(1.0), "N={n}: {} vs {}", hg[n], lg[n]);
    }
}
