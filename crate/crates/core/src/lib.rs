//! Mean spatial-mode power transfer in turbulent free-space optical channels.
//!
//! The analytic engine works entirely in "power per mode" space: every pair of
//! modes has an acceptance spectrum that filters the turbulent phase spectrum
//! into a coupling rate, the rates form a generator matrix, and the modal power
//! vector after a uniform channel is the matrix exponential of that generator
//! applied to the input vector.
//!
//! A split-step Monte Carlo simulator (random phase screens, angular-spectrum
//! propagation, modal projection) is included as an independent check of the
//! analytic predictions.
//!
//! Module map:
//!
//! * [`mathcore`]: Laguerre/Hermite polynomials, Bessel J_n, Gamma, factorials.
//! * [`quadrature`]: adaptive Gauss-Kronrod integration.
//! * [`turbulence`]: refractive and phase spectra, Fried and Rytov parameters.
//! * [`modes`]: Hermite- and Laguerre-Gaussian modes, beam geometry, bases.
//! * [`coupling`]: acceptance spectra `B_ab(theta)`.
//! * [`evolution`]: dimensionless integrals, coupling-rate matrix, propagation.
//! * [`simulator`]: phase screens, split-step propagation, ensembles.

pub mod coupling;
pub mod error;
pub mod evolution;
pub mod mathcore;
pub mod modes;
pub mod quadrature;
pub mod simulator;
pub mod turbulence;

pub use error::{Error, Result};
pub use evolution::{CouplingMatrix, PowerVector};
pub use modes::{Basis, BeamGeometry, Family, ModeId};
pub use turbulence::{SpectrumKind, TurbulenceModel};
