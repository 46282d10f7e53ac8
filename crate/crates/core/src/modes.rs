//! Hermite- and Laguerre-Gaussian modes, Gaussian-beam geometry and ordered
//! mode bases.
//!
//! Field expressions drop the coordinate-independent propagation phase, so a
//! mode of order `N` at `z != 0` differs from the exact paraxial solution by a
//! constant phase. Nothing that depends only on modal powers sees this.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::{hermite_functions, laguerre, log_factorial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "HG")]
    Hg,
    #[serde(rename = "LG")]
    Lg,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Hg => "HG",
            Family::Lg => "LG",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HG" => Ok(Family::Hg),
            "LG" => Ok(Family::Lg),
            other => Err(Error::invalid(format!("unknown mode family '{other}' (expected HG or LG)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeId {
    Hg { m: u32, n: u32 },
    Lg { p: u32, l: i32 },
}

impl ModeId {
    pub fn hg(m: u32, n: u32) -> Self {
        ModeId::Hg { m, n }
    }

    pub fn lg(p: u32, l: i32) -> Self {
        ModeId::Lg { p, l }
    }

    pub fn family(&self) -> Family {
        match self {
            ModeId::Hg { .. } => Family::Hg,
            ModeId::Lg { .. } => Family::Lg,
        }
    }

    /// Mode order: `m + n` or `2p + |l|`.
    pub fn order(&self) -> u32 {
        match *self {
            ModeId::Hg { m, n } => m + n,
            ModeId::Lg { p, l } => 2 * p + l.unsigned_abs(),
        }
    }

    pub fn is_fundamental(&self) -> bool {
        self.order() == 0
    }

    pub fn fundamental(family: Family) -> Self {
        match family {
            Family::Hg => ModeId::hg(0, 0),
            Family::Lg => ModeId::lg(0, 0),
        }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeId::Hg { m, n } => write!(f, "HG({m},{n})"),
            ModeId::Lg { p, l } => write!(f, "LG({p},{l})"),
        }
    }
}

impl FromStr for ModeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("malformed mode label '{s}'"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let family: Family = s[..open].parse()?;
        let inner = &s[open + 1..s.len() - 1];
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        match family {
            Family::Hg => Ok(ModeId::hg(a, b.trim().parse().map_err(|_| bad())?)),
            Family::Lg => Ok(ModeId::lg(a, b.trim().parse().map_err(|_| bad())?)),
        }
    }
}

/// Gaussian beam parameters at a chosen plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub wavelength: f64,
    pub waist: f64,
    /// Distance from the waist.
    pub z: f64,
}

impl BeamGeometry {
    pub fn new(wavelength: f64, waist: f64, z: f64) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(Error::invalid(format!("waist must be positive, got {waist}")));
        }
        if !z.is_finite() {
            return Err(Error::invalid("z must be finite"));
        }
        Ok(BeamGeometry { wavelength, waist, z })
    }

    pub fn at_waist(wavelength: f64, waist: f64) -> Result<Self> {
        Self::new(wavelength, waist, 0.0)
    }

    pub fn at(&self, z: f64) -> Self {
        BeamGeometry { z, ..*self }
    }

    pub fn k(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }

    /// Spot radius `w(z)`.
    pub fn width(&self) -> f64 {
        let zr = self.rayleigh_range();
        self.waist * (1.0 + (self.z / zr).powi(2)).sqrt()
    }

    /// Coordinate scale `sqrt(k z_R / (z_R^2 + z^2)) = sqrt(2) / w`.
    fn scale(&self) -> f64 {
        2f64.sqrt() / self.width()
    }

    /// Wavefront curvature phase factor `exp(-i k z r^2 / (2 (z_R^2 + z^2)))`.
    pub(crate) fn curvature_rate(&self) -> f64 {
        let zr = self.rayleigh_range();
        self.k() * self.z / (2.0 * (zr * zr + self.z * self.z))
    }

    /// Phase of `sqrt(k z_R) / (z_R - i z)`.
    pub(crate) fn gouy(&self) -> f64 {
        self.z.atan2(self.rayleigh_range())
    }
}

/// Reduced frequency `theta = K^2 w^2 / 8`.
pub fn theta(big_k: f64, geom: &BeamGeometry) -> f64 {
    let w = geom.width();
    big_k * big_k * w * w / 8.0
}

/// Hermite-Gaussian field at `(x, y)`.
pub fn eval_hg(mode: ModeId, x: f64, y: f64, geom: &BeamGeometry) -> Result<Complex64> {
    let ModeId::Hg { m, n } = mode else {
        return Err(Error::invalid(format!("{mode} is not a Hermite-Gaussian mode")));
    };
    let s = geom.scale();
    let mut hx = Vec::new();
    let mut hy = Vec::new();
    hermite_functions(m as usize, s * x, &mut hx);
    hermite_functions(n as usize, s * y, &mut hy);
    // sqrt(k z_R / pi) / (z_R - i z) * sqrt(pi) * psi_m psi_n = s e^{i gouy} psi_m psi_n
    let phase = geom.gouy() - geom.curvature_rate() * (x * x + y * y);
    Ok(Complex64::from_polar(s * hx[m as usize] * hy[n as usize], phase))
}

/// Laguerre-Gaussian field at polar coordinates `(rho, phi)`.
pub fn eval_lg(mode: ModeId, rho: f64, phi: f64, geom: &BeamGeometry) -> Result<Complex64> {
    let ModeId::Lg { p, l } = mode else {
        return Err(Error::invalid(format!("{mode} is not a Laguerre-Gaussian mode")));
    };
    if !(rho >= 0.0) {
        return Err(Error::invalid(format!("radius must be non-negative, got {rho}")));
    }
    let al = l.unsigned_abs();
    let s = geom.scale();
    let x = s * s * rho * rho;
    let radial = if al == 0 {
        (-0.5 * x).exp()
    } else if x == 0.0 {
        0.0
    } else {
        (0.5 * al as f64 * x.ln() - 0.5 * x).exp()
    };
    let norm = (0.5 * (log_factorial(p as u64) - log_factorial((p + al) as u64))).exp() / PI.sqrt();
    let amplitude = norm * s * radial * laguerre(p, al as i32, x);
    let phase = (al + 1) as f64 * geom.gouy() - geom.curvature_rate() * rho * rho + l as f64 * phi;
    Ok(Complex64::from_polar(amplitude, phase))
}

/// Field of either family at Cartesian `(x, y)`.
pub fn eval_mode(mode: ModeId, x: f64, y: f64, geom: &BeamGeometry) -> Complex64 {
    match mode {
        ModeId::Hg { .. } => eval_hg(mode, x, y, geom),
        ModeId::Lg { .. } => eval_lg(mode, x.hypot(y), y.atan2(x), geom),
    }
    .expect("family dispatched")
}

/// All modes of one family up to order `n_max`, in canonical order.
///
/// Order is ascending `N`; within an order HG modes are `(m, N - m)` with `m`
/// ascending and LG modes are sorted by `p`, then `l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    family: Family,
    n_max: u32,
    modes: Vec<ModeId>,
}

impl Basis {
    pub fn enumerate(family: Family, n_max: u32) -> Self {
        let mut modes = Vec::with_capacity(((n_max + 1) * (n_max + 2) / 2) as usize);
        for order in 0..=n_max {
            match family {
                Family::Hg => modes.extend((0..=order).map(|m| ModeId::hg(m, order - m))),
                Family::Lg => {
                    for p in 0..=order / 2 {
                        let al = (order - 2 * p) as i32;
                        modes.push(ModeId::lg(p, -al));
                        if al != 0 {
                            modes.push(ModeId::lg(p, al));
                        }
                    }
                }
            }
        }
        Basis { family, n_max, modes }
    }

    /// Basis from an explicit list; checks family consistency and duplicates.
    pub fn from_modes(modes: Vec<ModeId>) -> Result<Self> {
        let first = modes.first().ok_or_else(|| Error::invalid("empty basis"))?;
        let family = first.family();
        if modes.iter().any(|m| m.family() != family) {
            return Err(Error::invalid("basis mixes mode families"));
        }
        let mut seen = std::collections::HashSet::new();
        for m in &modes {
            if !seen.insert(*m) {
                return Err(Error::invalid(format!("duplicate mode {m} in basis")));
            }
        }
        let n_max = modes.iter().map(ModeId::order).max().unwrap_or(0);
        Ok(Basis { family, n_max, modes })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn index_of(&self, mode: ModeId) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }

    pub fn labels(&self) -> Vec<String> {
        self.modes.iter().map(ToString::to_string).collect()
    }

    /// Unit vector in the fundamental mode.
    pub fn fundamental_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        if let Some(i) = self.index_of(ModeId::fundamental(self.family)) {
            v[i] = 1.0;
        }
        v
    }
}

/// Total power per mode order, ascending in `N`.
pub fn group_by_order(basis: &Basis, values: &[f64]) -> Result<Vec<(u32, f64)>> {
    if values.len() != basis.len() {
        return Err(Error::LengthMismatch { expected: basis.len(), actual: values.len() });
    }
    let mut groups = vec![0.0; basis.n_max() as usize + 1];
    for (mode, &v) in basis.modes().iter().zip(values) {
        groups[mode.order() as usize] += v;
    }
    Ok(groups.into_iter().enumerate().map(|(n, v)| (n as u32, v)).collect())
}
