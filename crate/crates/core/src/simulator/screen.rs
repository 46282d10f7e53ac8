//! Fourier-series phase screens.
//!
//! A screen is `phi(x, y) = sum c_ij exp(2 pi i (i f0 x + j f0 y))` over the
//! frequency lattice `-nf <= i, j <= nf` (origin excluded), with independent
//! circular Gaussian amplitudes `c_ij = sqrt(F_S(K_ij) dK^2) (g1 + i g2)`,
//! `dK = 2 pi f0`. The real and imaginary parts of one synthesis are two
//! independent screens with the target statistics. Optional Lane
//! subharmonics add 3 x 3 lattices of spacing `f0 / 3^p` inside the central
//! cell.
//!
//! The lattice sum is evaluated by two passes of inverse FFTs of length
//! `P = 1 / (f0 pitch)`, which places the lattice exactly on the FFT bins.
//! When `1 / (f0 pitch)` is not an integer, `f0` is nudged to the nearest
//! value that makes it one.
//!
//! Screen `s` comes from synthesis `s / 2` (real part when `s` is even).
//! Synthesis `t` draws from ChaCha8 seeded with `seed` on stream `t`; the
//! amplitudes are drawn row by row (`j` outer, `i` inner, each as `g1`
//! then `g2` from the standard normal ziggurat of `rand_distr`), then the
//! subharmonic levels in the same order.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{Error, Result};
use crate::turbulence::{cn2_from_r0, fried_r0, rytov_sigma2, SpectrumKind, TurbulenceModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenSpec {
    pub turbulence: TurbulenceModel,
    /// Length of the slab a single screen represents.
    pub slab_length: f64,
    pub wavelength: f64,
    /// Lattice spacing and lowest frequency `f0` (1/m).
    pub lowest_frequency: f64,
    /// Lattice half-width `nf`: indices run over `-nf..=nf` on each axis.
    pub components: usize,
    pub subharmonic_levels: u32,
    pub grid: Grid,
    pub seed: u64,
}

impl ScreenSpec {
    /// Defaults: `f0 = 0.2 /m`, 828 components, 10 subharmonic levels.
    ///
    /// For a pure Kolmogorov spectrum the share of `D_S(rho)` carried by
    /// frequencies below `f` falls only like `(f rho)^(1/3)`, hence the deep
    /// subharmonic stack; with a finite outer scale the extra levels carry
    /// negligible power.
    pub fn new(turbulence: TurbulenceModel, slab_length: f64, wavelength: f64, grid: Grid, seed: u64) -> Self {
        ScreenSpec {
            turbulence,
            slab_length,
            wavelength,
            lowest_frequency: 0.2,
            components: 828,
            subharmonic_levels: 10,
            grid,
            seed,
        }
    }

    pub fn k(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Replaces `Cn^2` so that one screen has Fried radius `r0`.
    pub fn with_r0(mut self, r0: f64) -> Result<Self> {
        let cn2 = cn2_from_r0(r0, self.k(), self.slab_length)?;
        self.turbulence = self.turbulence.with_cn2(cn2)?;
        Ok(self)
    }

    /// Fried radius of one screen; infinite without turbulence.
    pub fn r0(&self) -> Result<f64> {
        if self.turbulence.cn2 == 0.0 {
            return Ok(f64::INFINITY);
        }
        fried_r0(self.turbulence.cn2, self.k(), self.slab_length)
    }

    /// Plane-wave Rytov variance of the slab one screen represents.
    pub fn rytov(&self) -> Result<f64> {
        rytov_sigma2(self.turbulence.cn2, self.k(), self.slab_length)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slab_length > 0.0 && self.slab_length.is_finite()) {
            return Err(Error::invalid(format!("slab length must be positive, got {}", self.slab_length)));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::invalid(format!("wavelength must be positive, got {}", self.wavelength)));
        }
        if !(self.lowest_frequency > 0.0 && self.lowest_frequency.is_finite()) {
            return Err(Error::invalid(format!(
                "lowest frequency must be positive, got {}",
                self.lowest_frequency
            )));
        }
        if self.components == 0 {
            return Err(Error::invalid("at least one frequency component is required"));
        }
        Grid::new(self.grid.points, self.grid.pitch)?;
        Ok(())
    }
}

/// Real phase screen in radians on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Precomputed state for drawing screens of one [`ScreenSpec`].
pub struct ScreenGenerator {
    spec: ScreenSpec,
    period: usize,
    f0: f64,
    /// `sqrt(F_S dK^2)` indexed by `(|j|, |i|)`.
    amplitude: Vec<f64>,
    /// `exp(-2 pi i f0 n (points/2) pitch)` for `n = -nf..=nf`.
    shift: Vec<Complex64>,
    /// Per level: amplitudes of the 3 x 3 cells and the 1-D phase ramps for
    /// offsets -1, 0, 1.
    subharmonics: Vec<([f64; 9], [Vec<Complex64>; 3])>,
    fft: Arc<dyn Fft<f64>>,
    warnings: Vec<String>,
}

impl ScreenGenerator {
    pub fn new(spec: &ScreenSpec) -> Result<Self> {
        spec.validate()?;
        let grid = spec.grid;
        let exact = 1.0 / (spec.lowest_frequency * grid.pitch);
        let period = exact.round().max(1.0) as usize;
        let f0 = 1.0 / (period as f64 * grid.pitch);
        let mut warnings = Vec::new();
        if (f0 / spec.lowest_frequency - 1.0).abs() > 1e-9 {
            warnings.push(format!(
                "lowest frequency adjusted from {} to {f0} so that the lattice falls on FFT bins",
                spec.lowest_frequency
            ));
        }
        if grid.points > period {
            return Err(Error::invalid(format!(
                "field of view {} m exceeds the screen period 1/f0 = {} m",
                grid.field_of_view(),
                1.0 / f0
            )));
        }
        let nf = spec.components;
        if 2 * nf + 1 > period {
            return Err(Error::invalid(format!(
                "{} components per axis do not fit in the FFT length {period}",
                2 * nf + 1
            )));
        }
        if let SpectrumKind::VonKarman { inner_scale, .. } = spec.turbulence.kind {
            if inner_scale > 0.0 && grid.pitch > inner_scale {
                warnings.push(format!(
                    "grid pitch {} m does not resolve the inner scale {inner_scale} m",
                    grid.pitch
                ));
            }
        }

        let k = spec.k();
        let slab = spec.slab_length;
        let cell = |f: f64, df: f64| -> Result<f64> {
            if spec.turbulence.cn2 == 0.0 {
                return Ok(0.0);
            }
            let dk = 2.0 * PI * df;
            Ok((spec.turbulence.phase_spectrum(2.0 * PI * f, k, slab)? * dk * dk).sqrt())
        };
        let mut amplitude = vec![0.0; (nf + 1) * (nf + 1)];
        for j in 0..=nf {
            for i in 0..=nf {
                if i + j > 0 {
                    amplitude[j * (nf + 1) + i] = cell(f0 * (i as f64).hypot(j as f64), f0)?;
                }
            }
        }
        let half = (grid.points / 2) as f64 * grid.pitch;
        let shift = (-(nf as i64)..=nf as i64)
            .map(|n| Complex64::from_polar(1.0, -2.0 * PI * f0 * n as f64 * half))
            .collect();
        let xs = grid.coordinates();
        let mut subharmonics = Vec::new();
        for level in 1..=spec.subharmonic_levels {
            let df = f0 / 3f64.powi(level as i32);
            let mut amps = [0.0; 9];
            for (c, amp) in amps.iter_mut().enumerate() {
                let (i, j) = (c as i32 % 3 - 1, c as i32 / 3 - 1);
                if i != 0 || j != 0 {
                    *amp = cell(df * (i as f64).hypot(j as f64), df)?;
                }
            }
            let ramp = |n: f64| xs.iter().map(|&x| Complex64::from_polar(1.0, 2.0 * PI * n * df * x)).collect();
            subharmonics.push((amps, [ramp(-1.0), ramp(0.0), ramp(1.0)]));
        }
        let fft = FftPlanner::new().plan_fft_inverse(period);
        Ok(ScreenGenerator { spec: spec.clone(), period, f0, amplitude, shift, subharmonics, fft, warnings })
    }

    pub fn spec(&self) -> &ScreenSpec {
        &self.spec
    }

    /// Lattice spacing actually used.
    pub fn lowest_frequency(&self) -> f64 {
        self.f0
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn rng(&self, synthesis: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(synthesis);
        rng
    }

    /// The two independent screens (real and imaginary parts) of one
    /// synthesis.
    pub fn pair(&self, synthesis: u64) -> (PhaseScreen, PhaseScreen) {
        let grid = self.spec.grid;
        let n = grid.points;
        let nf = self.spec.components;
        let p = self.period;
        let width = 2 * nf + 1;
        let mut rng = self.rng(synthesis);
        let zero = Complex64::new(0.0, 0.0);
        let draw = |rng: &mut ChaCha8Rng| {
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            Complex64::new(g1, g2)
        };

        // Pass 1: for each row j, sum over i into the x samples.
        let mut rows = vec![zero; width * n];
        let mut buf = vec![zero; p];
        let mut scratch = vec![zero; self.fft.get_inplace_scratch_len()];
        for (jr, row) in rows.chunks_mut(n).enumerate() {
            let j = jr as i64 - nf as i64;
            buf.fill(zero);
            for ir in 0..width {
                let i = ir as i64 - nf as i64;
                if i == 0 && j == 0 {
                    continue;
                }
                let amp = self.amplitude[j.unsigned_abs() as usize * (nf + 1) + i.unsigned_abs() as usize];
                let c = draw(&mut rng) * amp * self.shift[ir];
                buf[i.rem_euclid(p as i64) as usize] = c;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            row.copy_from_slice(&buf[..n]);
        }

        // Pass 2: for each x sample, sum over j into the y samples.
        let mut sum = vec![zero; n * n];
        for a in 0..n {
            buf.fill(zero);
            for jr in 0..width {
                let j = jr as i64 - nf as i64;
                buf[j.rem_euclid(p as i64) as usize] = rows[jr * n + a] * self.shift[jr];
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for b in 0..n {
                sum[b * n + a] = buf[b];
            }
        }

        for (amps, ramps) in &self.subharmonics {
            for (c, &amp) in amps.iter().enumerate() {
                if c == 4 {
                    continue;
                }
                let coef = draw(&mut rng) * amp;
                let (rx, ry) = (&ramps[c % 3], &ramps[c / 3]);
                for (b, out) in sum.chunks_mut(n).enumerate() {
                    let cy = coef * ry[b];
                    for (v, &ex) in out.iter_mut().zip(rx) {
                        *v += cy * ex;
                    }
                }
            }
        }

        let re = sum.iter().map(|v| v.re).collect();
        let im = sum.iter().map(|v| v.im).collect();
        (PhaseScreen { grid, values: re }, PhaseScreen { grid, values: im })
    }

    /// Screen number `index`.
    pub fn screen(&self, index: u64) -> PhaseScreen {
        let (re, im) = self.pair(index / 2);
        if index % 2 == 0 {
            re
        } else {
            im
        }
    }
}

/// Draws screen `index` of the sequence defined by `spec`.
pub fn make_phase_screen(spec: &ScreenSpec, index: u64) -> Result<PhaseScreen> {
    Ok(ScreenGenerator::new(spec)?.screen(index))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(cn2: f64) -> ScreenSpec {
        let turb = TurbulenceModel::von_karman(cn2, 1e-3, 1.0).unwrap();
        let mut s = ScreenSpec::new(turb, 100.0, 850e-9, Grid::new(64, 5e-3).unwrap(), 7);
        s.components = 40;
        s
    }

    #[test]
    fn zero_turbulence_gives_flat_screen() {
        let s = make_phase_screen(&spec(0.0), 3).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert_eq!(spec(0.0).r0().unwrap(), f64::INFINITY);
    }

    #[test]
    fn screens_are_reproducible() {
        let s = spec(1e-14);
        let a = make_phase_screen(&s, 5).unwrap();
        let b = make_phase_screen(&s, 5).unwrap();
        assert_eq!(a, b);
        let c = make_phase_screen(&s, 4).unwrap();
        assert_ne!(a, c);
        let mut other = s.clone();
        other.seed = 8;
        assert_ne!(make_phase_screen(&other, 5).unwrap(), a);
    }

    #[test]
    fn fft_synthesis_matches_direct_sum() {
        let mut s = spec(1e-14);
        s.subharmonic_levels = 1;
        s.components = 6;
        let g = ScreenGenerator::new(&s).unwrap();
        let (re, im) = g.pair(2);
        // Redraw the same amplitudes and sum the series directly.
        let mut rng = g.rng(2);
        let nf = 6i64;
        let f0 = g.lowest_frequency();
        let k = s.k();
        let fs = |f: f64, df: f64| {
            let dk = 2.0 * PI * df;
            (s.turbulence.phase_spectrum(2.0 * PI * f, k, s.slab_length).unwrap() * dk * dk).sqrt()
        };
        let mut terms = Vec::new();
        for j in -nf..=nf {
            for i in -nf..=nf {
                if i == 0 && j == 0 {
                    continue;
                }
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                let amp = fs(f0 * (i as f64).hypot(j as f64), f0);
                terms.push((i as f64 * f0, j as f64 * f0, Complex64::new(g1, g2) * amp));
            }
        }
        let df = f0 / 3.0;
        for j in -1..=1 {
            for i in -1..=1 {
                if i == 0 && j == 0 {
                    continue;
                }
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                let amp = fs(df * (i as f64).hypot(j as f64), df);
                terms.push((i as f64 * df, j as f64 * df, Complex64::new(g1, g2) * amp));
            }
        }
        let xs = s.grid.coordinates();
        let n = s.grid.points;
        let mut worst: f64 = 0.0;
        for (b, &y) in xs.iter().enumerate().step_by(7) {
            for (a, &x) in xs.iter().enumerate().step_by(5) {
                let v: Complex64 = terms
                    .iter()
                    .map(|&(fx, fy, c)| c * Complex64::from_polar(1.0, 2.0 * PI * (fx * x + fy * y)))
                    .sum();
                worst = worst.max((v.re - re.values[b * n + a]).abs());
                worst = worst.max((v.im - im.values[b * n + a]).abs());
            }
        }
        assert!(worst < 1e-9, "deviation {worst}");
    }

    #[test]
    fn incompatible_lattice_is_rejected() {
        let mut s = spec(1e-14);
        s.components = 2000;
        assert!(ScreenGenerator::new(&s).is_err());
        let mut s = spec(1e-14);
        s.lowest_frequency = 10.0;
        assert!(ScreenGenerator::new(&s).is_err());
    }

    #[test]
    fn warnings_are_reported() {
        let mut s = spec(1e-14);
        s.lowest_frequency = 0.2001;
        let g = ScreenGenerator::new(&s).unwrap();
        let text = g.warnings().join("\n");
        assert!(text.contains("adjusted"));
        assert!(text.contains("inner scale"));
    }
}
