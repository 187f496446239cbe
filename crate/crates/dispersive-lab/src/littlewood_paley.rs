//! Smooth dyadic frequency projectors and square-function diagnostics.
//!
//! The cutoff `eta` is 1 on `[-1, 1]`, 0 outside `[-2, 2]`, and is glued
//! from the standard `exp(-1/x)` bump. The shell function is
//! `phi(xi) = eta(xi) - eta(2 xi)` and `phi_N(xi) = phi(xi / N)` for dyadic
//! `N`. Because dyadic scalings are exact in floating point, the telescoping
//! partition `sum_N phi_N(xi) = 1` holds to the last bit on resolved shells.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, LabResult};
use crate::multiplier_ops::apply_multiplier_spectrum;
use crate::spectral_core::{forward_transform, inverse_transform, Grid, RealField};

/// C-infinity step: 0 for `x <= 0`, 1 for `x >= 1`.
fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Smooth even cutoff: 1 on `[-1, 1]`, 0 outside `[-2, 2]`, in `[0, 1]`.
pub fn eta(xi: f64) -> f64 {
    smooth_step(2.0 - xi.abs())
}

/// Shell function `phi(xi) = eta(xi) - eta(2 xi)`, supported on
/// `1/2 < |xi| < 2`.
pub fn lp_phi(xi: f64) -> f64 {
    eta(xi) - eta(2.0 * xi)
}

/// Shell function at dyadic scale `N`: `phi_N(xi) = phi(xi / N)`, supported
/// on `N/2 < |xi| < 2 N`.
pub fn lp_phi_at(n_dyadic: f64, xi: f64) -> f64 {
    lp_phi(xi / n_dyadic)
}

/// True when `x` is an exact power of two (the dyadic scales `2^k`).
pub fn is_dyadic(x: f64) -> bool {
    x > 0.0 && x.is_finite() && (x.to_bits() & ((1u64 << 52) - 1)) == 0
}

/// Dyadic band `[n_min, n_max]` fully resolved by a grid: shells must
/// contain a nonzero mode (`N >= 2 dxi`) and fit under Nyquist (`N <= Nyq/2`).
pub fn resolved_band(grid: &Grid) -> (f64, f64) {
    let n_min = 2.0_f64.powi((2.0 * grid.dxi()).log2().ceil() as i32);
    let n_max = 2.0_f64.powi((grid.nyquist() / 2.0).log2().floor() as i32);
    (n_min, n_max)
}

fn check_scale(grid: &Grid, n_dyadic: f64) -> LabResult<()> {
    if !is_dyadic(n_dyadic) {
        return Err(LabError::InvalidParameter(format!(
            "N must be a dyadic 2^k, got {n_dyadic}"
        )));
    }
    let (lo, hi) = resolved_band(grid);
    if n_dyadic < lo || n_dyadic > hi {
        return Err(LabError::OutOfBand(format!(
            "N = {n_dyadic} outside resolved dyadic band [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Dyadic projection `P_N f`: multiply the spectrum by `phi_N`.
pub fn project(f: &RealField, n_dyadic: f64) -> LabResult<RealField> {
    check_scale(f.grid(), n_dyadic)?;
    let mut spec = forward_transform(f)?;
    apply_multiplier_spectrum(&mut spec, |xi| {
        Complex64::new(lp_phi_at(n_dyadic, xi), 0.0)
    });
    inverse_transform(&spec)
}

/// Low-pass `P_{<= M} f`: multiply the spectrum by `eta(xi / M)`.
pub fn project_low(f: &RealField, m_dyadic: f64) -> LabResult<RealField> {
    if !is_dyadic(m_dyadic) {
        return Err(LabError::InvalidParameter(format!(
            "M must be a dyadic 2^k, got {m_dyadic}"
        )));
    }
    let mut spec = forward_transform(f)?;
    apply_multiplier_spectrum(&mut spec, |xi| Complex64::new(eta(xi / m_dyadic), 0.0));
    inverse_transform(&spec)
}

/// Ordered dyadic pieces of a field plus the low-frequency remainder
/// `P_{<= n_min}`, so that `low_remainder + sum pieces` rebuilds the input
/// on fields band-limited below `n_max`.
#[derive(Debug, Clone)]
pub struct DyadicDecomposition {
    pub pieces: Vec<(f64, RealField)>,
    pub low_remainder: RealField,
}

impl DyadicDecomposition {
    /// Sum the pieces and the remainder back into one field.
    pub fn reconstruct(&self) -> RealField {
        let mut out = self.low_remainder.clone();
        for (_, piece) in &self.pieces {
            for (o, p) in out.samples_mut().iter_mut().zip(piece.samples()) {
                *o += p;
            }
        }
        out
    }
}

/// Decompose into shells `P_N` for `N = 2 n_min, 4 n_min, ..., n_max`, with
/// the complementary low-pass `P_{<= n_min}` as remainder. The shells and the
/// low-pass telescope exactly, so the reconstruction error on band-limited
/// input is pure rounding.
pub fn decompose(f: &RealField, n_min: f64, n_max: f64) -> LabResult<DyadicDecomposition> {
    check_scale(f.grid(), n_min)?;
    check_scale(f.grid(), n_max)?;
    if n_min > n_max {
        return Err(LabError::InvalidParameter(format!(
            "empty dyadic band: n_min = {n_min} > n_max = {n_max}"
        )));
    }
    let mut pieces = Vec::new();
    let mut n = 2.0 * n_min;
    while n <= n_max {
        pieces.push((n, project(f, n)?));
        n *= 2.0;
    }
    Ok(DyadicDecomposition {
        pieces,
        low_remainder: project_low(f, n_min)?,
    })
}

/// Ratio `sum_N <N>^{2s} ||P_N f||_{L^2}^2 / ||f||_{H^s}^2` over the grid's
/// resolved shells. For `s = 0` and band-limited `f` the overlap structure
/// pins it to `[1/2, 1]`; general `s` lands in `[2^{-2|s|-1}, 2^{2|s|}]`.
pub fn square_function_ratio(f: &RealField, s: f64) -> LabResult<f64> {
    let spec = forward_transform(f)?;
    if spec.zero_mode_rel() > crate::spectral_core::MEAN_ZERO_REL_TOL {
        return Err(LabError::Domain(
            "square function ratio requires a mean-zero field".into(),
        ));
    }
    let w = spec.grid().parseval_weight();
    let (lo, hi) = resolved_band(spec.grid());

    let mut hs_sq = 0.0;
    for (&xi, c) in spec.grid().wavenumbers().iter().zip(spec.coeffs()) {
        hs_sq += (1.0 + xi * xi).powf(s) * c.norm_sqr();
    }
    hs_sq *= w;
    if hs_sq == 0.0 {
        return Err(LabError::UndefinedRatio(
            "square function ratio of the zero field".into(),
        ));
    }

    let mut num = 0.0;
    let mut n = lo;
    while n <= hi {
        let mut shell = 0.0;
        for (&xi, c) in spec.grid().wavenumbers().iter().zip(spec.coeffs()) {
            let p = lp_phi_at(n, xi);
            shell += p * p * c.norm_sqr();
        }
        num += (1.0 + n * n).powf(s) * w * shell;
        n *= 2.0;
    }
    Ok(num / hs_sq)
}

/// Build a real field with random spectrum supported on `lo <= |xi| <= hi`
/// (used by the square-function and reconstruction tests and the CLI check).
pub fn random_band_limited(
    grid: &Arc<Grid>,
    lo: f64,
    hi: f64,
    rng: &mut impl rand::Rng,
) -> LabResult<RealField> {
    use crate::spectral_core::SpectrumField;
    let n = grid.num_points();
    let mut spec = SpectrumField::zeros(grid.clone());
    for j in 1..n / 2 {
        let xi = grid.wavenumbers()[j];
        if xi.abs() >= lo && xi.abs() <= hi {
            let re = rng.gen_range(-1.0..1.0);
            let im = rng.gen_range(-1.0..1.0);
            let c = Complex64::new(re, im);
            spec.coeffs_mut()[j] = c;
            let conj_idx = grid.conjugate_index(j);
            spec.coeffs_mut()[conj_idx] = c.conj();
        }
    }
    inverse_transform(&spec)
}
