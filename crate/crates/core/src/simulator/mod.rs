//! Split-step Monte Carlo simulation of mode propagation through random phase
//! screens.
//!
//! Fields live on a square grid of `points x points` samples, stored row-major
//! (`data[b * points + a]`, `a` along x). Sample `a` sits at
//! `x_a = (a - points / 2) * pitch`, so the beam axis is the sample at
//! `points / 2`.

mod ensemble;
pub mod io;
mod projector;
mod screen;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{eval_mode, BeamGeometry, ModeId};

pub use ensemble::{run_ensemble, run_ensemble_sequential, EnsembleConfig, EnsembleResult, GroupStat};
pub use projector::{gauss_hermite, Projector};
pub use screen::{make_phase_screen, PhaseScreen, ScreenGenerator, ScreenSpec};

/// Uniform square sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub points: usize,
    /// Sample spacing in metres.
    pub pitch: f64,
}

impl Grid {
    pub fn new(points: usize, pitch: f64) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 points per side, got {points}")));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::invalid(format!("grid pitch must be positive, got {pitch}")));
        }
        Ok(Grid { points, pitch })
    }

    /// 512 x 512 samples over 0.8 m.
    pub fn desk() -> Self {
        Grid { points: 512, pitch: 1.5625e-3 }
    }

    /// 1024 x 1024 samples over the same 0.8 m.
    pub fn full_scale() -> Self {
        Grid { points: 1024, pitch: 0.78125e-3 }
    }

    pub fn coordinate(&self, a: usize) -> f64 {
        (a as f64 - (self.points / 2) as f64) * self.pitch
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|a| self.coordinate(a)).collect()
    }

    pub fn field_of_view(&self) -> f64 {
        self.points as f64 * self.pitch
    }

    pub fn len(&self) -> usize {
        self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }
}

/// Sampled complex transverse field.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFieldGrid {
    grid: Grid,
    wavelength: f64,
    data: Vec<Complex64>,
}

impl ComplexFieldGrid {
    pub fn new(grid: Grid, wavelength: f64, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: data.len() });
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("field samples must be finite"));
        }
        Ok(ComplexFieldGrid { grid, wavelength, data })
    }

    pub fn zeros(grid: Grid, wavelength: f64) -> Result<Self> {
        Self::new(grid, wavelength, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    /// Samples a mode of either family at the plane described by `geom`.
    pub fn from_mode(mode: ModeId, geom: &BeamGeometry, grid: Grid) -> Self {
        let xs = grid.coordinates();
        let mut data = Vec::with_capacity(grid.len());
        for &y in &xs {
            for &x in &xs {
                data.push(eval_mode(mode, x, y, geom));
            }
        }
        ComplexFieldGrid { grid, wavelength: geom.wavelength, data }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// `sum |u|^2 pitch^2`.
    pub fn power(&self) -> f64 {
        let h2 = self.grid.pitch * self.grid.pitch;
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * h2
    }
}

/// Multiplies the field by `exp(i phi)` sample by sample.
pub fn apply_screen(field: &mut ComplexFieldGrid, screen: &PhaseScreen) -> Result<()> {
    if field.grid != screen.grid {
        return Err(Error::GridMismatch(format!(
            "field grid {:?} vs screen grid {:?}",
            field.grid, screen.grid
        )));
    }
    for (u, &phi) in field.data.iter_mut().zip(&screen.values) {
        *u *= Complex64::from_polar(1.0, phi);
    }
    Ok(())
}

/// Largest step for which the sampled transfer function is not aliased:
/// `points * pitch^2 / wavelength`.
pub fn aliasing_limit(grid: Grid, wavelength: f64) -> f64 {
    grid.points as f64 * grid.pitch * grid.pitch / wavelength
}

/// Paraxial angular-spectrum propagator for one grid and wavelength.
///
/// The transfer function is `exp(+i pi lambda dz (fx^2 + fy^2))`, matching
/// the `exp(-i k z)` carrier convention of the mode functions.
pub struct Propagator {
    grid: Grid,
    wavelength: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    freq_sq: Vec<f64>,
}

impl Propagator {
    pub fn new(grid: Grid, wavelength: f64) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.points;
        let span = grid.field_of_view();
        let freq_sq = (0..n)
            .map(|k| {
                let k = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
                (k / span).powi(2)
            })
            .collect();
        Propagator {
            grid,
            wavelength,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            freq_sq,
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>, scratch: &mut Vec<Complex64>) {
        let n = self.grid.points;
        fft.process(data);
        scratch.resize(data.len(), Complex64::new(0.0, 0.0));
        transpose(data, scratch, n);
        fft.process(scratch);
        transpose(scratch, data, n);
    }

    /// Propagates `field` forward by `dz` metres in place.
    pub fn step(&self, field: &mut ComplexFieldGrid, dz: f64) -> Result<()> {
        if !(dz >= 0.0) || !dz.is_finite() {
            return Err(Error::invalid(format!("propagation step must be finite and non-negative, got {dz}")));
        }
        if field.grid != self.grid || field.wavelength != self.wavelength {
            return Err(Error::GridMismatch("propagator built for a different grid or wavelength".into()));
        }
        if dz == 0.0 {
            return Ok(());
        }
        let n = self.grid.points;
        let mut scratch = Vec::new();
        self.transform(&mut field.data, &self.forward, &mut scratch);
        let c = PI * self.wavelength * dz;
        let kernel: Vec<Complex64> = self.freq_sq.iter().map(|&f2| Complex64::from_polar(1.0, c * f2)).collect();
        for (b, row) in field.data.chunks_mut(n).enumerate() {
            for (a, v) in row.iter_mut().enumerate() {
                *v *= kernel[a] * kernel[b];
            }
        }
        self.transform(&mut field.data, &self.inverse, &mut scratch);
        let norm = 1.0 / (n * n) as f64;
        field.data.iter_mut().for_each(|v| *v *= norm);
        Ok(())
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for b in 0..n {
        for a in 0..n {
            dst[a * n + b] = src[b * n + a];
        }
    }
}

/// Free-space propagation by `dz` metres.
pub fn propagate_field(field: &ComplexFieldGrid, dz: f64) -> Result<ComplexFieldGrid> {
    let mut out = field.clone();
    Propagator::new(field.grid, field.wavelength).step(&mut out, dz)?;
    Ok(out)
}
