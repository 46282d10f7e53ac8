//! Matrix exponential.
//!
//! [`expm`] is Higham's scaling-and-squaring Padé algorithm for general square
//! matrices. [`expm_symmetric`] goes through the eigendecomposition and is only
//! valid for symmetric input; it serves as the reference for the Padé route.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17_297_280.0, 8_648_640.0, 1_995_840.0, 277_200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut u = DMatrix::<f64>::identity(n, n) * b[1];
    let mut v = DMatrix::<f64>::identity(n, n) * b[0];
    let mut power = DMatrix::<f64>::identity(n, n);
    for j in (2..b.len()).step_by(2) {
        power = &power * &a2;
        v += &power * b[j];
        if j + 1 < b.len() {
            u += &power * b[j + 1];
        }
    }
    (a * u, v)
}

fn pade_13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

/// `exp(A)` by scaling and squaring with a degree-3..13 Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::invalid("matrix exponential needs a square matrix"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix exponential of a non-finite matrix"));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(a);
    let solve = |u: DMatrix<f64>, v: DMatrix<f64>| -> Result<DMatrix<f64>> {
        let p = &v + &u;
        let q = v - u;
        q.lu()
            .solve(&p)
            .ok_or_else(|| Error::Invariant("singular Padé denominator".into()))
    };
    for &(m, theta) in &THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, b);
            return solve(u, v);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a * 2f64.powi(-s);
    let (u, v) = pade_13(&scaled);
    let mut r = solve(u, v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// `exp(A)` for symmetric `A` via `V diag(exp(lambda)) V^T`.
pub fn expm_symmetric(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::invalid("matrix exponential needs a square matrix"));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if (a - a.transpose()).iter().any(|v| v.abs() > 1e-10 * scale) {
        return Err(Error::invalid("eigendecomposition route needs a symmetric matrix"));
    }
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(lambda.exp());
    }
    Ok(scaled * v.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn scalar_and_diagonal() {
        let a = DMatrix::from_element(1, 1, -2.5);
        assert!((expm(&a).unwrap()[(0, 0)] - (-2.5f64).exp()).abs() < 1e-15);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-40.0, 0.0, 1e-3, 3.0]));
        let e = expm(&d).unwrap();
        for i in 0..4 {
            assert!((e[(i, i)] / d[(i, i)].exp() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn nilpotent_matches_series() {
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 1)] = 2.0;
        a[(1, 2)] = 3.0;
        let e = expm(&a).unwrap();
        assert_eq!(e[(0, 2)], 3.0);
        assert_eq!(e[(0, 1)], 2.0);
        assert_eq!(e[(1, 1)], 1.0);
    }

    #[test]
    fn rotation_generator() {
        let t = 7.3f64;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn pade_agrees_with_eigen_route() {
        // Symmetric generator-like matrices over a range of norms.
        for &scale in &[1e-4, 0.05, 0.7, 3.0, 40.0] {
            let n = 28;
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..i {
                    let v = ((i * 7 + j * 13) % 11) as f64 / 11.0 * scale / n as f64;
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            for j in 0..n {
                let s: f64 = a.column(j).sum();
                a[(j, j)] = -1.05 * s - scale * 0.1;
            }
            let p = expm(&a).unwrap();
            let e = expm_symmetric(&a).unwrap();
            assert!(max_diff(&p, &e) < 1e-10, "scale {scale}: {}", max_diff(&p, &e));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(expm(&DMatrix::zeros(2, 3)).is_err());
        assert!(expm_symmetric(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).is_err());
    }
}
