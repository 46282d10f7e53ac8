//! Refractive-index and phase spectra, structure functions and the usual
//! strength parameters (Fried radius, Rytov variance).
//!
//! Spectra are written as a Kolmogorov power law times a dimensionless damping
//! factor `D(f)` of the spatial frequency `f = K / 2pi`. Kolmogorov is `D = 1`;
//! the modified von Karman model is
//! `D(f) = exp(-l0^2 f^2) * (f^2 / (f^2 + L0^-2))^(11/6)`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::{bessel_j, gamma};
use crate::quadrature::{integrate, Tolerance};

/// `Phi_n(K) = C * Cn^2 * K^(-11/3)` with `C = 5 / (18 pi Gamma(1/3))`.
pub fn refractive_prefactor() -> f64 {
    5.0 / (18.0 * PI * gamma(1.0 / 3.0))
}

/// `D_S(rho) = C * Cn^2 k^2 L rho^(5/3)` for a Kolmogorov slab.
pub fn structure_prefactor() -> f64 {
    2.0 * PI.sqrt() * gamma(1.0 / 6.0) / (5.0 * gamma(2.0 / 3.0))
}

/// `D_S(rho) = C * (rho / r0)^(5/3)`.
pub fn fried_structure_constant() -> f64 {
    8.0 * 2f64.sqrt() * (0.6 * gamma(1.2)).powf(5.0 / 6.0)
}

/// `r0 = (C * Cn^2 k^2 L)^(-3/5)`.
pub fn fried_constant() -> f64 {
    structure_prefactor() / fried_structure_constant()
}

/// `sigma_R^2 = C * Cn^2 k^(7/6) L^(11/6)`.
pub fn rytov_prefactor() -> f64 {
    4.0 * 2f64.powf(1.0 / 6.0) * PI.powf(1.5) * (3f64.sqrt() - 1.0) / (11.0 * gamma(2.0 / 3.0))
}

/// `Lambda_ab = C * Cn^2 k^2 w^(5/3) I_ab`.
pub fn lambda_prefactor() -> f64 {
    16.0 * PI * PI
        * refractive_prefactor()
        * (2.0 * PI).powf(-11.0 / 3.0)
        * (PI * PI / 2.0).powf(11.0 / 6.0)
}

/// Damping factor sampled on a log-spaced frequency grid.
///
/// Interpolation is linear in `ln f`; outside the sampled range the end values
/// are held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingTable {
    frequencies: Vec<f64>,
    values: Vec<f64>,
}

impl DampingTable {
    pub fn new(frequencies: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if frequencies.len() != values.len() {
            return Err(Error::LengthMismatch { expected: frequencies.len(), actual: values.len() });
        }
        if frequencies.len() < 2 {
            return Err(Error::invalid("damping table needs at least two samples"));
        }
        if frequencies.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
            return Err(Error::invalid("damping table frequencies must be positive and finite"));
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("damping table frequencies must be strictly increasing"));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("damping factors must be finite and non-negative"));
        }
        Ok(DampingTable { frequencies, values })
    }

    /// Parse the two-column text format: `f  D(f)` per line, `#` comments.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut f = Vec::new();
        let mut d = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { path: path.to_path_buf(), line: i + 1, message };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(err(format!("expected 2 columns, found {}", cols.len())));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|e| err(format!("'{s}': {e}")));
            f.push(parse(cols[0])?);
            d.push(parse(cols[1])?);
        }
        DampingTable::new(f, d).map_err(|e| match e {
            Error::InvalidArgument(message) | Error::Format(message) => {
                Error::Parse { path: path.to_path_buf(), line: 0, message }
            }
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, f: f64) -> f64 {
        let n = self.frequencies.len();
        if f <= self.frequencies[0] {
            return self.values[0];
        }
        if f >= self.frequencies[n - 1] {
            return self.values[n - 1];
        }
        let i = self.frequencies.partition_point(|&x| x <= f) - 1;
        let (f0, f1) = (self.frequencies[i].ln(), self.frequencies[i + 1].ln());
        let t = (f.ln() - f0) / (f1 - f0);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumKind {
    Kolmogorov,
    VonKarman { inner_scale: f64, outer_scale: f64 },
    Custom { table: DampingTable },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceModel {
    pub cn2: f64,
    pub kind: SpectrumKind,
}

impl TurbulenceModel {
    pub fn kolmogorov(cn2: f64) -> Result<Self> {
        Self::new(cn2, SpectrumKind::Kolmogorov)
    }

    pub fn von_karman(cn2: f64, inner_scale: f64, outer_scale: f64) -> Result<Self> {
        Self::new(cn2, SpectrumKind::VonKarman { inner_scale, outer_scale })
    }

    pub fn custom(cn2: f64, table: DampingTable) -> Result<Self> {
        Self::new(cn2, SpectrumKind::Custom { table })
    }

    /// `cn2 = 0` is accepted and describes a turbulence-free segment.
    pub fn new(cn2: f64, kind: SpectrumKind) -> Result<Self> {
        if !(cn2 >= 0.0) || !cn2.is_finite() {
            return Err(Error::invalid(format!("Cn2 must be finite and non-negative, got {cn2}")));
        }
        if let SpectrumKind::VonKarman { inner_scale, outer_scale } = kind {
            if !(inner_scale >= 0.0 && outer_scale > inner_scale) || inner_scale.is_nan() {
                return Err(Error::invalid(format!(
                    "von Karman scales need 0 <= l0 < L0, got l0 = {inner_scale}, L0 = {outer_scale}"
                )));
            }
        }
        Ok(TurbulenceModel { cn2, kind })
    }

    pub fn with_cn2(&self, cn2: f64) -> Result<Self> {
        Self::new(cn2, self.kind.clone())
    }

    /// True when `D(f) -> 1` as `f -> 0`, so the spectrum is singular at the origin.
    pub fn is_singular_at_origin(&self) -> bool {
        match &self.kind {
            SpectrumKind::Kolmogorov => true,
            SpectrumKind::VonKarman { outer_scale, .. } => outer_scale.is_infinite(),
            SpectrumKind::Custom { table } => table.values()[0] > 0.0,
        }
    }

    /// `D(f)`, the ratio to the Kolmogorov spectrum at spatial frequency `f`.
    pub fn damping(&self, f: f64) -> f64 {
        match &self.kind {
            SpectrumKind::Kolmogorov => 1.0,
            SpectrumKind::VonKarman { inner_scale, outer_scale } => {
                let f2 = f * f;
                let outer = (1.0 + 1.0 / (f2 * outer_scale * outer_scale)).powf(-11.0 / 6.0);
                (-inner_scale * inner_scale * f2).exp() * outer
            }
            SpectrumKind::Custom { table } => table.eval(f),
        }
    }

    /// `f^(-11/3) D(f)`, finite at `f = 0` for the von Karman model.
    fn damped_power(&self, f: f64) -> f64 {
        match &self.kind {
            SpectrumKind::VonKarman { inner_scale, outer_scale } if outer_scale.is_finite() => {
                let f2 = f * f;
                (-inner_scale * inner_scale * f2).exp()
                    * (f2 + 1.0 / (outer_scale * outer_scale)).powf(-11.0 / 6.0)
            }
            _ => f.powf(-11.0 / 3.0) * self.damping(f),
        }
    }

    /// Three-dimensional refractive-index spectrum `Phi_n(K)` in m^3.
    pub fn refractive_spectrum(&self, big_k: f64) -> Result<f64> {
        if !(big_k >= 0.0) || !big_k.is_finite() {
            return Err(Error::invalid(format!("wavenumber must be finite and non-negative, got {big_k}")));
        }
        if big_k == 0.0 && self.is_singular_at_origin() {
            return Err(Error::invalid("spectrum diverges at K = 0"));
        }
        let f = big_k / (2.0 * PI);
        Ok(refractive_prefactor() * self.cn2 * (2.0 * PI).powf(-11.0 / 3.0) * self.damped_power(f))
    }

    /// Two-dimensional phase spectrum `F_S(K) = 2 pi k^2 L Phi_n(K)` of a slab of
    /// length `length`, in rad^2 m^2.
    pub fn phase_spectrum(&self, big_k: f64, k: f64, length: f64) -> Result<f64> {
        check_positive("optical wavenumber", k)?;
        check_positive("slab length", length)?;
        Ok(2.0 * PI * k * k * length * self.refractive_spectrum(big_k)?)
    }

    /// Phase structure function `D_S(rho) = 4 pi int K [1 - J0(K rho)] F_S(K) dK`
    /// of a slab, by quadrature.
    pub fn phase_structure_function(&self, rho: f64, k: f64, length: f64) -> Result<f64> {
        check_positive("optical wavenumber", k)?;
        check_positive("slab length", length)?;
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::invalid(format!("separation must be finite and non-negative, got {rho}")));
        }
        if rho == 0.0 || self.cn2 == 0.0 {
            return Ok(0.0);
        }
        // Work in u = ln(K rho); beyond x = 400 the J0 term contributes below 1e-6
        // of the total and is dropped so the remaining integrand is monotone.
        let scale = 4.0 * PI * 2.0 * PI * k * k * length * refractive_prefactor() * self.cn2
            * (2.0 * PI).powf(-11.0 / 3.0);
        let tol = Tolerance { relative: 1e-9, absolute: 0.0, max_intervals: 4000 };
        let body = |u: f64, oscillating: bool| {
            let x = u.exp();
            let big_k = x / rho;
            let filter = if !oscillating {
                1.0
            } else if x < 0.1 {
                let q = x * x / 4.0;
                q * (1.0 - q / 4.0 * (1.0 - q / 9.0 * (1.0 - q / 16.0)))
            } else {
                1.0 - bessel_j(0, x)
            };
            big_k * big_k * filter * self.damped_power(big_k / (2.0 * PI))
        };
        let split = 400f64.ln();
        let start = (1e-8f64).ln();
        let low = integrate(|u| body(u, true), start, split, tol)?;
        let high = integrate(|u| body(u, false), split, (1e9f64).ln(), tol)?;
        // Below the start the integrand is a power of x (x^(1/3) for a
        // Kolmogorov spectrum), so the remainder is body / slope.
        let (b0, b1) = (body(start, true), body(start + 0.01, true));
        let slope = (b1 / b0).ln() / 0.01;
        let tail = if b0 > 0.0 && slope > 0.0 { b0 / slope } else { 0.0 };
        Ok(scale * (low.value + high.value + tail))
    }
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

/// Fried parameter of a uniform Kolmogorov slab.
pub fn fried_r0(cn2: f64, k: f64, length: f64) -> Result<f64> {
    check_positive("Cn2", cn2)?;
    check_positive("optical wavenumber", k)?;
    check_positive("path length", length)?;
    Ok((fried_constant() * cn2 * k * k * length).powf(-0.6))
}

pub fn cn2_from_r0(r0: f64, k: f64, length: f64) -> Result<f64> {
    check_positive("r0", r0)?;
    check_positive("optical wavenumber", k)?;
    check_positive("path length", length)?;
    Ok(r0.powf(-5.0 / 3.0) / (fried_constant() * k * k * length))
}

/// Plane-wave Rytov variance `sigma_R^2`.
pub fn rytov_sigma2(cn2: f64, k: f64, length: f64) -> Result<f64> {
    if !(cn2 >= 0.0) {
        return Err(Error::invalid(format!("Cn2 must be non-negative, got {cn2}")));
    }
    check_positive("optical wavenumber", k)?;
    check_positive("path length", length)?;
    Ok(rytov_prefactor() * cn2 * k.powf(7.0 / 6.0) * length.powf(11.0 / 6.0))
}

/// Rytov variance of a uniform channel specified by its fundamental-mode
/// interaction `Lambda_00 L` and the matching dimensionless integral `I_00`.
///
/// Only the ratio `Lambda_00 L / I_00` matters, so either sign convention works
/// as long as both carry the same sign.
pub fn rytov_from_strength(lambda00_l: f64, i00: f64, length: f64, k: f64, w: f64) -> Result<f64> {
    let ratio = lambda00_l / i00;
    if !(ratio >= 0.0) || !ratio.is_finite() {
        return Err(Error::invalid("Lambda00 L and I00 must be finite with matching signs"));
    }
    check_positive("path length", length)?;
    check_positive("optical wavenumber", k)?;
    check_positive("beam radius", w)?;
    Ok(rytov_prefactor() / lambda_prefactor() * ratio * (length / (k * w * w)).powf(5.0 / 6.0))
}

/// Kolmogorov phase structure function in Fried form.
pub fn structure_function_phase(rho: f64, r0: f64) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("separation must be finite and non-negative, got {rho}")));
    }
    check_positive("r0", r0)?;
    Ok(fried_structure_constant() * (rho / r0).powf(5.0 / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStrength {
    pub r0: f64,
    pub rytov: f64,
    pub length: f64,
}

impl ChannelStrength {
    pub fn from_cn2(cn2: f64, k: f64, length: f64) -> Result<Self> {
        Ok(ChannelStrength {
            r0: fried_r0(cn2, k, length)?,
            rytov: rytov_sigma2(cn2, k, length)?,
            length,
        })
    }
}
