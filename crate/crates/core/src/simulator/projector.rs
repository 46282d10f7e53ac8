//! Modal projection of sampled fields.
//!
//! Hermite-Gaussian overlaps are separable: after removing the wavefront
//! curvature the field is contracted with 1-D Hermite functions along x and
//! then y. Laguerre-Gaussian amplitudes are linear combinations of the HG
//! amplitudes of the same order; the coefficients are overlaps of unit-scale
//! modes, computed exactly by Gauss-Hermite quadrature. Mode-dependent
//! constant phases (Gouy terms) drop out of the powers.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{ComplexFieldGrid, Grid};
use crate::error::{Error, Result};
use crate::evolution::PowerVector;
use crate::mathcore::hermite_functions;
use crate::modes::{eval_hg, eval_lg, Basis, BeamGeometry, Family, ModeId};

/// Gauss-Hermite nodes and weights for `int f(x) exp(-x^2) dx`
/// (Golub-Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Coefficients `T[m] = <HG(m, N - m) | LG(p, l)>` at unit scale.
fn lg_row(p: u32, l: i32, nodes: &[f64], weights: &[f64]) -> Vec<Complex64> {
    let order = 2 * p + l.unsigned_abs();
    let unit = BeamGeometry::at_waist(1.0, 2f64.sqrt()).expect("valid geometry");
    (0..=order)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&x, &wx) in nodes.iter().zip(weights) {
                for (&y, &wy) in nodes.iter().zip(weights) {
                    let hg = eval_hg(ModeId::hg(m, order - m), x, y, &unit).expect("HG mode");
                    let lg = eval_lg(ModeId::lg(p, l), x.hypot(y), y.atan2(x), &unit).expect("LG mode");
                    acc += hg.conj() * lg * (wx * wy * (x * x + y * y).exp());
                }
            }
            acc
        })
        .collect()
}

/// Projects fields on one grid onto one basis at one plane.
pub struct Projector {
    basis: Basis,
    grid: Grid,
    /// `sqrt(s) pitch psi_m(s x_a)` for `m = 0..=n_max`.
    hermite: Vec<Vec<f64>>,
    /// `exp(+i c x_a^2)` undoing the curvature phase along one axis.
    chirp: Vec<Complex64>,
    lg: Vec<Vec<Complex64>>,
}

impl Projector {
    /// Fails when a 1-D Hermite function up to `n_max` loses more than 1e-6
    /// of its norm on the grid.
    pub fn new(basis: &Basis, geom: &BeamGeometry, grid: Grid) -> Result<Self> {
        let n_max = basis.n_max() as usize;
        let s = 2f64.sqrt() / geom.width();
        let xs = grid.coordinates();
        let mut hermite = vec![Vec::with_capacity(grid.points); n_max + 1];
        let mut buf = Vec::new();
        for &x in &xs {
            hermite_functions(n_max, s * x, &mut buf);
            for (m, h) in hermite.iter_mut().enumerate() {
                h.push(s.sqrt() * grid.pitch * buf[m]);
            }
        }
        for (m, h) in hermite.iter().enumerate() {
            let norm = h.iter().map(|v| v * v).sum::<f64>() / grid.pitch;
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::Coverage(format!(
                    "grid of {} x {} m samples order {m} with norm {norm}; width {} m needs a larger or finer grid",
                    grid.points,
                    grid.pitch,
                    geom.width()
                )));
            }
        }
        let rate = geom.curvature_rate();
        let chirp = xs.iter().map(|&x| Complex64::from_polar(1.0, rate * x * x)).collect();
        let lg = if basis.family() == Family::Lg {
            let (nodes, weights) = gauss_hermite(n_max + 2);
            basis
                .modes()
                .iter()
                .map(|&mode| match mode {
                    ModeId::Lg { p, l } => lg_row(p, l, &nodes, &weights),
                    ModeId::Hg { .. } => unreachable!("LG basis"),
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Projector { basis: basis.clone(), grid, hermite, chirp, lg })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// HG amplitudes `c[m][n]` for `m + n <= n_max`.
    fn hg_amplitudes(&self, field: &ComplexFieldGrid) -> Vec<Vec<Complex64>> {
        let n = self.grid.points;
        let nm = self.hermite.len();
        let zero = Complex64::new(0.0, 0.0);
        // rows[b][m] = sum_a u(b, a) chirp(a) h_m(a)
        let mut rows = vec![zero; n * nm];
        for (b, line) in field.data().chunks(n).enumerate() {
            let out = &mut rows[b * nm..(b + 1) * nm];
            for (a, &u) in line.iter().enumerate() {
                let v = u * self.chirp[a];
                for (m, o) in out.iter_mut().enumerate() {
                    *o += v * self.hermite[m][a];
                }
            }
        }
        let mut c = vec![vec![zero; nm]; nm];
        for b in 0..n {
            let cy = self.chirp[b];
            for m in 0..nm {
                let r = rows[b * nm + m] * cy;
                for k in 0..nm - m {
                    c[m][k] += r * self.hermite[k][b];
                }
            }
        }
        c
    }

    /// Complex modal amplitudes in basis order, up to a constant phase per
    /// mode.
    pub fn amplitudes(&self, field: &ComplexFieldGrid) -> Result<Vec<Complex64>> {
        if field.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "projector built for {:?}, field sampled on {:?}",
                self.grid,
                field.grid()
            )));
        }
        let c = self.hg_amplitudes(field);
        Ok(self
            .basis
            .modes()
            .iter()
            .enumerate()
            .map(|(idx, &mode)| match mode {
                ModeId::Hg { m, n } => c[m as usize][n as usize],
                ModeId::Lg { .. } => {
                    let order = mode.order() as usize;
                    self.lg[idx]
                        .iter()
                        .enumerate()
                        .map(|(m, t)| t.conj() * c[m][order - m])
                        .sum()
                }
            })
            .collect())
    }

    /// `|<G_b | u>|^2` per mode.
    pub fn powers(&self, field: &ComplexFieldGrid) -> Result<Vec<f64>> {
        Ok(self.amplitudes(field)?.iter().map(|c| c.norm_sqr()).collect())
    }

    pub fn project(&self, field: &ComplexFieldGrid) -> Result<PowerVector> {
        PowerVector::new(self.basis.clone(), self.powers(field)?)
    }
}
