//! Pseudospectral simulation and analysis toolkit for rotation-modified
//! Benjamin-Ono and intermediate long wave equations on a periodic domain.
//!
//! The crate is organized around six subsystems:
//!
//! * [`spectral_core`]: grids, transforms, `L^2`/`H^s`/`Z^s` norms;
//! * [`multiplier_ops`]: Hilbert transform, antiderivative, finite-depth
//!   operator `T_delta`, dispersion symbols and the exact linear propagator;
//! * [`littlewood_paley`]: smooth dyadic frequency projectors and
//!   square-function diagnostics;
//! * [`resonance_lab`]: resonance functions of the dispersion symbols,
//!   bound scans, pseudoproducts and the space-time trilinear support check;
//! * [`evolver`]: integrating-factor RK4 time stepping with conserved
//!   quantity diagnostics, scaling and deep-water limit experiments;
//! * [`inflation_probe`]: two-bump data, the bilinear Duhamel term by
//!   oscillatory-integral quadrature and norm-inflation scans.

pub mod error;
pub mod evolver;
pub mod inflation_probe;
pub mod littlewood_paley;
pub mod multiplier_ops;
pub mod resonance_lab;
pub mod spectral_core;

pub use error::{LabError, LabResult};
