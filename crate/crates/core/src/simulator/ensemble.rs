//! Ensembles of independent split-step realizations.
//!
//! Each realization launches one mode at the input plane and runs `S` steps
//! of `dz/2` free propagation, one screen, `dz/2` free propagation, then
//! projects onto the basis. Realizations `2u` and `2u + 1` share the
//! syntheses `u S .. u S + S - 1` (real and imaginary parts respectively), so
//! every screen is a pure function of `(seed, realization, step)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::screen::ScreenGenerator;
use super::{apply_screen, aliasing_limit, ComplexFieldGrid, Projector, Propagator, ScreenSpec};
use crate::error::{Error, Result};
use crate::modes::{group_by_order, Basis, BeamGeometry, ModeId};

/// Per-step Rytov variance above which split-step results are flagged.
pub const RYTOV_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub screen: ScreenSpec,
    /// Beam at the input plane; `z` is the input position relative to the
    /// waist.
    pub geometry: BeamGeometry,
    pub input: ModeId,
    pub basis: Basis,
    pub screens_per_realization: usize,
    /// Distance covered by one step (zero for stacked thin screens).
    pub step: f64,
    pub realizations: usize,
}

impl EnsembleConfig {
    pub fn output_geometry(&self) -> BeamGeometry {
        self.geometry.at(self.geometry.z + self.step * self.screens_per_realization as f64)
    }

    pub fn validate(&self) -> Result<()> {
        self.screen.validate()?;
        if self.screen.wavelength != self.geometry.wavelength {
            return Err(Error::invalid("screen and beam wavelengths differ"));
        }
        if self.realizations == 0 || self.screens_per_realization == 0 {
            return Err(Error::invalid("at least one realization and one screen are required"));
        }
        if !(self.step >= 0.0) || !self.step.is_finite() {
            return Err(Error::invalid(format!("step must be finite and non-negative, got {}", self.step)));
        }
        let widest = self.geometry.width().max(self.output_geometry().width());
        let needed = 5.0 * widest * ((self.basis.n_max() + 1) as f64).sqrt();
        let fov = self.screen.grid.field_of_view();
        if fov < needed {
            return Err(Error::Coverage(format!(
                "field of view {fov} m is smaller than 5 w sqrt(N_max + 1) = {needed} m"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStat {
    pub order: u32,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub basis: Basis,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub groups: Vec<GroupStat>,
    pub realizations: usize,
    /// Plane-wave Rytov variance of the slab behind one screen.
    pub step_rytov: f64,
    pub warnings: Vec<String>,
    pub config: EnsembleConfig,
}

impl EnsembleResult {
    pub fn get(&self, mode: ModeId) -> Option<(f64, f64)> {
        self.basis.index_of(mode).map(|i| (self.mean[i], self.stderr[i]))
    }

    pub fn group(&self, order: u32) -> Option<&GroupStat> {
        self.groups.iter().find(|g| g.order == order)
    }

    pub fn total(&self) -> f64 {
        self.mean.iter().sum()
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Mean and standard error of column `j` of `rows`.
fn column_stats(rows: &[Vec<f64>], j: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = compensated_sum(rows.iter().map(|r| r[j])) / n;
    if rows.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(rows.iter().map(|r| (r[j] - mean).powi(2)));
    (mean, (ss / (n - 1.0) / n).sqrt())
}

struct Runner<'a> {
    config: &'a EnsembleConfig,
    screens: ScreenGenerator,
    propagator: Propagator,
    projector: Projector,
    launch: ComplexFieldGrid,
}

impl Runner<'_> {
    /// Powers for the two realizations of work unit `unit` (the second only
    /// when it exists).
    fn unit(&self, unit: usize) -> Result<Vec<Vec<f64>>> {
        let s = self.config.screens_per_realization;
        let count = (self.config.realizations - 2 * unit).min(2);
        let mut fields = vec![self.launch.clone(); count];
        let half = self.config.step / 2.0;
        for step in 0..s {
            let (re, im) = self.screens.pair((unit * s + step) as u64);
            for (field, screen) in fields.iter_mut().zip([re, im]) {
                self.propagator.step(field, half)?;
                apply_screen(field, &screen)?;
                self.propagator.step(field, half)?;
            }
        }
        fields.iter().map(|f| self.projector.powers(f)).collect()
    }
}

fn prepare(config: &EnsembleConfig) -> Result<(Runner<'_>, Vec<String>, f64)> {
    config.validate()?;
    let grid = config.screen.grid;
    let screens = ScreenGenerator::new(&config.screen)?;
    let mut warnings = screens.warnings().to_vec();
    let step_rytov = if config.screen.turbulence.cn2 > 0.0 { config.screen.rytov()? } else { 0.0 };
    if step_rytov > RYTOV_MARGIN {
        warnings.push(format!(
            "per-step Rytov variance {step_rytov:.4} exceeds {RYTOV_MARGIN}; use more, shorter steps"
        ));
    }
    let limit = aliasing_limit(grid, config.geometry.wavelength);
    if config.step / 2.0 > limit {
        warnings.push(format!(
            "half step {} m exceeds the aliasing-free limit {limit} m of the angular-spectrum kernel",
            config.step / 2.0
        ));
    }
    let runner = Runner {
        config,
        screens,
        propagator: Propagator::new(grid, config.geometry.wavelength),
        projector: Projector::new(&config.basis, &config.output_geometry(), grid)?,
        launch: ComplexFieldGrid::from_mode(config.input, &config.geometry, grid),
    };
    Ok((runner, warnings, step_rytov))
}

fn summarize(
    config: &EnsembleConfig,
    rows: Vec<Vec<f64>>,
    warnings: Vec<String>,
    step_rytov: f64,
) -> Result<EnsembleResult> {
    let basis = config.basis.clone();
    let (mean, stderr): (Vec<f64>, Vec<f64>) = (0..basis.len()).map(|j| column_stats(&rows, j)).unzip();
    let grouped: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| Ok(group_by_order(&basis, r)?.into_iter().map(|(_, v)| v).collect()))
        .collect::<Result<_>>()?;
    let orders = group_by_order(&basis, &mean)?;
    let groups = orders
        .iter()
        .enumerate()
        .map(|(j, &(order, _))| {
            let (mean, stderr) = column_stats(&grouped, j);
            GroupStat { order, mean, stderr }
        })
        .collect();
    Ok(EnsembleResult {
        basis,
        mean,
        stderr,
        groups,
        realizations: rows.len(),
        step_rytov,
        warnings,
        config: config.clone(),
    })
}

/// Runs the ensemble with realizations spread over the rayon pool. The
/// result does not depend on the number of threads.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleResult> {
    let (runner, warnings, rytov) = prepare(config)?;
    let units = config.realizations.div_ceil(2);
    let per_unit: Vec<Vec<Vec<f64>>> = (0..units).into_par_iter().map(|u| runner.unit(u)).collect::<Result<_>>()?;
    summarize(config, per_unit.into_iter().flatten().collect(), warnings, rytov)
}

/// Single-threaded reference path.
pub fn run_ensemble_sequential(config: &EnsembleConfig) -> Result<EnsembleResult> {
    let (runner, warnings, rytov) = prepare(config)?;
    let units = config.realizations.div_ceil(2);
    let per_unit: Vec<Vec<Vec<f64>>> = (0..units).map(|u| runner.unit(u)).collect::<Result<_>>()?;
    summarize(config, per_unit.into_iter().flatten().collect(), warnings, rytov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::Family;
    use crate::simulator::Grid;
    use crate::turbulence::TurbulenceModel;

    fn config(cn2: f64, realizations: usize) -> EnsembleConfig {
        let grid = Grid::new(128, 2.5e-3).unwrap();
        let turb = TurbulenceModel::von_karman(cn2, 1e-3, 1.0).unwrap();
        let mut screen = ScreenSpec::new(turb, 500.0, 850e-9, grid, 11);
        screen.components = 60;
        EnsembleConfig {
            screen,
            geometry: BeamGeometry::at_waist(850e-9, 0.02).unwrap(),
            input: ModeId::hg(0, 0),
            basis: Basis::enumerate(Family::Hg, 2),
            screens_per_realization: 1,
            step: 0.0,
            realizations,
        }
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v.into_iter()), 2.0);
    }

    #[test]
    fn zero_turbulence_returns_input() {
        let mut c = config(0.0, 3);
        c.screens_per_realization = 3;
        c.step = 200.0;
        let r = run_ensemble(&c).unwrap();
        assert!((r.mean[0] - 1.0).abs() < 1e-9);
        assert!(r.mean[1..].iter().all(|&v| v < 1e-9));
        assert!(r.stderr.iter().all(|&s| s < 1e-9));
        assert_eq!(r.realizations, 3);
        assert_eq!(r.step_rytov, 0.0);
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let c = config(2e-14, 5);
        let a = run_ensemble(&c).unwrap();
        let b = run_ensemble_sequential(&c).unwrap();
        assert_eq!(a, b);
        assert!(a.mean.iter().all(|&v| v >= 0.0));
        assert!(a.stderr.iter().all(|&v| v >= 0.0));
        assert!(a.total() <= 1.0 + 1e-9);
        let g = a.group(1).unwrap();
        assert!((g.mean - (a.mean[1] + a.mean[2])).abs() < 1e-15);
    }

    #[test]
    fn validation_catches_bad_configs() {
        let mut c = config(1e-14, 2);
        c.basis = Basis::enumerate(Family::Hg, 20);
        assert!(matches!(run_ensemble(&c), Err(Error::Coverage(_))));
        let mut c = config(1e-14, 2);
        c.realizations = 0;
        assert!(run_ensemble(&c).is_err());
        let mut c = config(1e-14, 2);
        c.geometry.wavelength = 1.55e-6;
        assert!(run_ensemble(&c).is_err());
    }

    #[test]
    fn strong_steps_are_flagged() {
        let c = config(5e-13, 1);
        let r = run_ensemble(&c).unwrap();
        assert!(r.step_rytov > RYTOV_MARGIN);
        assert!(r.warnings.iter().any(|w| w.contains("Rytov")));
    }
}
