//! Two-bump data, the bilinear Duhamel term and norm-inflation scans.
//!
//! The datum is spectrally supported on two intervals,
//! `I_alpha = [alpha/2, alpha]` with height `alpha^{-1/2}` and
//! `I_N = [N, N + alpha]` with height `alpha^{-1/2} N^{-s}`, plus the
//! conjugate reflection that makes the field real. The second Picard
//! iterate of the Duhamel map is evaluated per output frequency as a 1-D
//! oscillatory integral over `xi_1` with the kernel
//! `(1 - exp(-i t chi)) / chi`, whose `chi -> 0` singularity is removable
//! (limit `i t`). Two independent evaluations exist: the grid-node sum
//! (exactly the discrete Duhamel term, cross-validated against a
//! time-stepped oracle) and a continuum Simpson quadrature used by the
//! scans, with node-doubling convergence enforced.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, LabResult};
use crate::evolver::Stepper;
use crate::multiplier_ops::DispersionFamily;
use crate::spectral_core::{
    forward_transform, inverse_transform, Grid, RealField, SpectrumField,
};

/// Parameters of the two-bump experiment.
#[derive(Debug, Clone, Copy)]
pub struct TwoBumpSpec {
    /// Low-bump width, in `(0, 1)`.
    pub alpha: f64,
    /// High-bump location, `>> 1`.
    pub big_n: f64,
    /// Sobolev index of the `Z^s` measurements.
    pub s: f64,
    /// Coriolis strength.
    pub gamma: f64,
    /// Evaluation time of the second iterate.
    pub t: f64,
}

impl TwoBumpSpec {
    pub fn validate(&self) -> LabResult<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.big_n > 2.0) {
            return Err(LabError::InvalidParameter(format!(
                "N must be large, got {}",
                self.big_n
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(LabError::InvalidParameter("gamma must be >= 0".into()));
        }
        if !(self.s.is_finite() && self.t.is_finite()) {
            return Err(LabError::InvalidParameter("s and t must be finite".into()));
        }
        Ok(())
    }

    pub fn family(&self) -> LabResult<DispersionFamily> {
        DispersionFamily::rmbo(self.gamma)
    }

    /// Indicator amplitude of the datum spectrum at `|xi|`.
    pub fn amplitude(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a >= self.alpha / 2.0 && a <= self.alpha {
            self.alpha.powf(-0.5)
        } else if a >= self.big_n && a <= self.big_n + self.alpha {
            self.alpha.powf(-0.5) * self.big_n.powf(-self.s)
        } else {
            0.0
        }
    }
}

/// Closed interval on the frequency axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    fn shift_sum(&self, other: &Band) -> Band {
        Band {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    fn neg(&self) -> Band {
        Band {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Signed source intervals of the datum spectrum with their amplitudes.
fn sources(spec: &TwoBumpSpec) -> [(Band, f64); 4] {
    let low = Band {
        lo: spec.alpha / 2.0,
        hi: spec.alpha,
    };
    let high = Band {
        lo: spec.big_n,
        hi: spec.big_n + spec.alpha,
    };
    let a_low = spec.alpha.powf(-0.5);
    let a_high = a_low * spec.big_n.powf(-spec.s);
    [
        (low, a_low),
        (low.neg(), a_low),
        (high, a_high),
        (high.neg(), a_high),
    ]
}

/// The three disjoint positive output bands of the second iterate named by
/// the interaction that produces them: low-low, cross, high-high.
pub fn component_bands(spec: &TwoBumpSpec) -> (Band, Band, Band) {
    let a = spec.alpha;
    let n = spec.big_n;
    (
        Band { lo: a, hi: 2.0 * a },
        Band {
            lo: n - a,
            hi: n + 2.0 * a,
        },
        Band {
            lo: 2.0 * n,
            hi: 2.0 * n + 2.0 * a,
        },
    )
}

/// Build the real two-bump datum on a grid: coefficients are the indicator
/// spectrum sampled at grid wavenumbers, scaled by `1/dx` so the discrete
/// transform approximates the continuum one.
pub fn build_two_bump(spec: &TwoBumpSpec, grid: &Arc<Grid>) -> LabResult<RealField> {
    spec.validate()?;
    let dxi = grid.dxi();
    if dxi > spec.alpha / 2.0 {
        return Err(LabError::InvalidParameter(format!(
            "bumps unresolvable: grid spacing {dxi} exceeds alpha/2 = {}",
            spec.alpha / 2.0
        )));
    }
    if spec.big_n + spec.alpha >= grid.nyquist() {
        return Err(LabError::InvalidParameter(format!(
            "high bump at N = {} exceeds the resolved band (Nyquist {})",
            spec.big_n,
            grid.nyquist()
        )));
    }
    let mut out = SpectrumField::zeros(grid.clone());
    let scale = 1.0 / grid.dx();
    let n = grid.num_points();
    for j in 0..n {
        let xi = grid.wavenumbers()[j];
        let a = spec.amplitude(xi);
        if a > 0.0 {
            out.coeffs_mut()[j] = Complex64::new(a * scale, 0.0);
        }
    }
    inverse_transform(&out)
}

/// Phase mismatch `chi(xi, xi1) = w(xi1) + w(xi - xi1) - w(xi)` of the
/// nominal dispersion symbol; equals minus the resonance function at
/// `(xi1, xi - xi1)`.
pub fn chi(fam: &DispersionFamily, xi: f64, xi1: f64) -> LabResult<f64> {
    if xi == 0.0 || xi1 == 0.0 || xi == xi1 {
        return Err(LabError::SingularPoint(format!(
            "chi undefined at xi = {xi}, xi1 = {xi1}"
        )));
    }
    Ok(fam.dispersion_symbol(xi1) + fam.dispersion_symbol(xi - xi1) - fam.dispersion_symbol(xi))
}

/// Same mismatch built from the flow symbol; this is the phase that the
/// Duhamel integral of the actual equation accumulates.
fn chi_flow(fam: &DispersionFamily, xi: f64, xi1: f64) -> f64 {
    fam.flow_symbol(xi1) + fam.flow_symbol(xi - xi1) - fam.flow_symbol(xi)
}

/// Duhamel kernel `(1 - exp(-i t chi)) / chi` with the removable
/// singularity evaluated by its limit: for `|t chi| < 1e-6` the
/// second-order Taylor form `i t (1 - z/2 + z^2/6)`, `z = i t chi`, whose
/// truncation error is below 1e-19 relative at the switch point.
pub fn duhamel_kernel(t: f64, chi: f64) -> Complex64 {
    let phase = t * chi;
    if phase.abs() < 1e-6 {
        let z = Complex64::new(0.0, phase);
        Complex64::new(0.0, t) * (Complex64::new(1.0, 0.0) - z / 2.0 + z * z / 6.0)
    } else {
        Complex64::new(1.0 - phase.cos(), phase.sin()) / chi
    }
}

/// Second Picard iterate on a grid, evaluated mode by mode as the exact
/// spectral-space Duhamel sum
/// `A2(xi_k) = -(xi_k / 2n) e^{-i t w(xi_k)} sum_m u0(xi_m) u0(xi_k - xi_m) K(chi)`.
/// This is what two fixed-point passes of the discrete Duhamel map produce,
/// so the time-stepped oracle must match it to stepping accuracy.
pub fn second_iterate(spec: &TwoBumpSpec, grid: &Arc<Grid>) -> LabResult<RealField> {
    let (_, a2) = second_iterate_spectrum(spec, grid)?;
    inverse_transform(&a2)
}

/// Spectrum-level version of [`second_iterate`]; also returns the datum
/// spectrum it convolved.
pub fn second_iterate_spectrum(
    spec: &TwoBumpSpec,
    grid: &Arc<Grid>,
) -> LabResult<(SpectrumField, SpectrumField)> {
    spec.validate()?;
    let u0 = build_two_bump(spec, grid)?;
    let u0_spec = forward_transform(&u0)?;
    let fam = spec.family()?;
    let n = grid.num_points() as i64;
    let dxi = grid.dxi();

    // products must stay inside the two-thirds mask of the oracle stepper
    let kcut = ((2.0 / 3.0) * grid.nyquist() / dxi).floor() as i64 - 1;
    let out_max = ((2.0 * (spec.big_n + spec.alpha)) / dxi).ceil() as i64;
    if out_max >= kcut {
        return Err(LabError::InvalidParameter(
            "unresolvable: pair interactions exceed the dealiased band".into(),
        ));
    }

    // support list of the datum as (mode index, coefficient); membership is
    // decided by the nominal indicator so transform round-trip noise outside
    // the bumps is not dragged into the convolution
    let mut support: Vec<(i64, f64)> = Vec::new();
    for j in 0..grid.num_points() {
        let xi = grid.wavenumbers()[j];
        if spec.amplitude(xi) > 0.0 {
            let k = if j < grid.num_points() / 2 {
                j as i64
            } else {
                j as i64 - n
            };
            support.push((k, u0_spec.coeffs()[j].re));
        }
    }

    let mut a2 = SpectrumField::zeros(grid.clone());
    for k in -out_max..=out_max {
        if k == 0 {
            continue;
        }
        let xi = k as f64 * dxi;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(m, cm) in &support {
            let km = k - m;
            if km <= -n / 2 || km >= n / 2 {
                continue;
            }
            let jm = if km >= 0 { km as usize } else { (km + n) as usize };
            let ckm = u0_spec.coeffs()[jm].re;
            if ckm == 0.0 {
                continue;
            }
            let xim = m as f64 * dxi;
            acc += cm * ckm * duhamel_kernel(spec.t, chi_flow(&fam, xi, xim));
        }
        let j = if k >= 0 { k as usize } else { (k + n) as usize };
        let prefactor = Complex64::from_polar(1.0, -spec.t * fam.flow_symbol(xi));
        a2.coeffs_mut()[j] = -(xi / (2.0 * n as f64)) * prefactor * acc;
    }
    Ok((u0_spec, a2))
}

/// Time-stepped oracle for the second iterate: integrate
/// `a' = -i w a + N(V(t) u0)`, `a(0) = 0`, with the nonlinearity frozen on
/// the free evolution of the datum. The integrating frame removes the stiff
/// linear phase, leaving only resonance-scale oscillation, and composite
/// Simpson in the frame is fourth order.
pub fn second_iterate_timestepped(
    spec: &TwoBumpSpec,
    grid: &Arc<Grid>,
    dt: f64,
) -> LabResult<RealField> {
    spec.validate()?;
    if !(dt > 0.0) {
        return Err(LabError::InvalidParameter("dt must be positive".into()));
    }
    let fam = spec.family()?;
    let u0 = build_two_bump(spec, grid)?;
    let u0_spec = forward_transform(&u0)?;
    let n = grid.num_points();
    let stepper = Stepper::new(grid.clone(), &fam, dt, 2.0 / 3.0);

    // G(t') = e^{i t' w} N(e^{-i t' w} u0), accumulated by Simpson
    let flow: Vec<f64> = grid.wavenumbers().iter().map(|&xi| fam.flow_symbol(xi)).collect();
    let eval_g = |tp: f64, out: &mut Vec<Complex64>| {
        let state: Vec<Complex64> = u0_spec
            .coeffs()
            .iter()
            .zip(&flow)
            .map(|(c, w)| c * Complex64::from_polar(1.0, -tp * w))
            .collect();
        stepper.apply_nonlinear(&state, out);
        for (o, w) in out.iter_mut().zip(&flow) {
            *o *= Complex64::from_polar(1.0, tp * w);
        }
    };

    let steps = (spec.t / dt).ceil().max(1.0) as usize;
    let h = spec.t / steps as f64;
    let mut acc = vec![Complex64::default(); n];
    let mut g_left = vec![Complex64::default(); n];
    let mut g_mid = vec![Complex64::default(); n];
    let mut g_right = vec![Complex64::default(); n];
    eval_g(0.0, &mut g_left);
    for j in 0..steps {
        let t0 = j as f64 * h;
        eval_g(t0 + 0.5 * h, &mut g_mid);
        eval_g(t0 + h, &mut g_right);
        for i in 0..n {
            acc[i] += h / 6.0 * (g_left[i] + 4.0 * g_mid[i] + g_right[i]);
        }
        std::mem::swap(&mut g_left, &mut g_right);
    }
    let coeffs: Vec<Complex64> = acc
        .iter()
        .zip(&flow)
        .map(|(a, w)| a * Complex64::from_polar(1.0, -spec.t * w))
        .collect();
    inverse_transform(&SpectrumField::new(grid.clone(), coeffs)?)
}

/// `Z^s` norms of the two-bump datum from the continuum integrals: the
/// `H^s` piece by Simpson on the two bumps, the antiderivative piece in
/// closed form (`int 1/xi^2 = -1/xi`).
pub fn two_bump_norms_continuum(spec: &TwoBumpSpec) -> crate::spectral_core::NormReport {
    let inv_2pi = 0.5 / std::f64::consts::PI;
    let mut hs_sq = 0.0;
    let mut l2_sq = 0.0;
    let mut anti_sq = 0.0;
    for (band, amp) in sources(spec) {
        if band.lo < 0.0 {
            continue; // count positive bands twice below
        }
        let a2 = amp * amp;
        l2_sq += 2.0 * a2 * (band.hi - band.lo);
        hs_sq += 2.0 * a2 * simpson(|xi| (1.0 + xi * xi).powf(spec.s), band.lo, band.hi, 64);
        anti_sq += 2.0 * a2 * (1.0 / band.lo - 1.0 / band.hi);
    }
    let hs = (inv_2pi * hs_sq).sqrt();
    let antideriv_l2 = (inv_2pi * anti_sq).sqrt();
    crate::spectral_core::NormReport {
        l2: (inv_2pi * l2_sq).sqrt(),
        hs,
        antideriv_l2,
        zs: hs + antideriv_l2,
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let m = panels.max(1);
    let h = (b - a) / m as f64;
    let mut total = 0.0;
    for j in 0..m {
        let x0 = a + j as f64 * h;
        total += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
    }
    total
}

fn simpson_complex(f: impl Fn(f64) -> Complex64, a: f64, b: f64, panels: usize) -> Complex64 {
    let m = panels.max(1);
    let h = (b - a) / m as f64;
    let mut total = Complex64::default();
    for j in 0..m {
        let x0 = a + j as f64 * h;
        total += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
    }
    total
}

/// Continuum amplitude `|A2(xi)| = |xi| / (4 pi) |J(xi)|` of the second
/// iterate at one output frequency, by Simpson over each contributing
/// source pair. `panels` controls the inner resolution per unit phase.
fn a2_amplitude(spec: &TwoBumpSpec, fam: &DispersionFamily, xi: f64, panels: usize) -> f64 {
    if xi == 0.0 {
        return 0.0;
    }
    let mut j_total = Complex64::default();
    let srcs = sources(spec);
    for (s_band, s_amp) in &srcs {
        for (t_band, t_amp) in &srcs {
            // xi1 in S and xi - xi1 in T
            let lo = s_band.lo.max(xi - t_band.hi);
            let hi = s_band.hi.min(xi - t_band.lo);
            if lo >= hi {
                continue;
            }
            let amp = s_amp * t_amp;
            j_total += amp
                * simpson_complex(
                    |x1| duhamel_kernel(spec.t, chi_flow(fam, xi, x1)),
                    lo,
                    hi,
                    panels,
                );
        }
    }
    xi.abs() / (4.0 * std::f64::consts::PI) * j_total.norm()
}

/// Norms of the second iterate over a set of positive output segments,
/// doubled for the mirror bands.
struct BandNorms {
    hs_sq: f64,
    anti_sq: f64,
}

fn a2_band_norms(
    spec: &TwoBumpSpec,
    fam: &DispersionFamily,
    segments: &[Band],
    out_panels: usize,
    inner_panels: usize,
) -> BandNorms {
    let inv_2pi = 0.5 / std::f64::consts::PI;
    let mut hs_sq = 0.0;
    let mut anti_sq = 0.0;
    for seg in segments {
        let hs = simpson(
            |xi| {
                let a = a2_amplitude(spec, fam, xi, inner_panels);
                (1.0 + xi * xi).powf(spec.s) * a * a
            },
            seg.lo,
            seg.hi,
            out_panels,
        );
        let anti = simpson(
            |xi| {
                if xi == 0.0 {
                    return 0.0;
                }
                let a = a2_amplitude(spec, fam, xi, inner_panels);
                a * a / (xi * xi)
            },
            seg.lo,
            seg.hi,
            out_panels,
        );
        hs_sq += 2.0 * hs;
        anti_sq += 2.0 * anti;
    }
    BandNorms {
        hs_sq: inv_2pi * hs_sq,
        anti_sq: inv_2pi * anti_sq,
    }
}

/// Positive-axis segments carrying second-iterate output, split at every
/// band-edge kink so each Simpson panel integrates a smooth piece.
fn output_segments(spec: &TwoBumpSpec) -> Vec<Band> {
    let srcs = sources(spec);
    let mut cuts: Vec<f64> = Vec::new();
    let mut bands: Vec<Band> = Vec::new();
    for (s_band, _) in &srcs {
        for (t_band, _) in &srcs {
            let sum = s_band.shift_sum(t_band);
            if sum.hi <= 0.0 {
                continue;
            }
            let clipped = Band {
                lo: sum.lo.max(0.0),
                hi: sum.hi,
            };
            cuts.push(clipped.lo);
            cuts.push(clipped.hi);
            // interior kinks where the xi1-range switches expression
            for (u_band, _) in &srcs {
                for edge in [
                    u_band.lo + t_band.lo,
                    u_band.lo + t_band.hi,
                    u_band.hi + t_band.lo,
                    u_band.hi + t_band.hi,
                ] {
                    if edge > clipped.lo && edge < clipped.hi {
                        cuts.push(edge);
                    }
                }
            }
            bands.push(clipped);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut segments = Vec::new();
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if bands.iter().any(|b| b.contains(mid)) && w[1] - w[0] > 1e-14 {
            segments.push(Band { lo: w[0], hi: w[1] });
        }
    }
    segments
}

/// Segments restricted to the cross-interaction band near `N`.
fn f34_segments(spec: &TwoBumpSpec) -> Vec<Band> {
    let (_, cross, _) = component_bands(spec);
    output_segments(spec)
        .into_iter()
        .filter(|seg| seg.lo >= cross.lo - 1e-12 && seg.hi <= cross.hi + 1e-12)
        .collect()
}

/// Measured norms and inflation quotients at one `(alpha, N)` point.
#[derive(Debug, Clone, Copy)]
pub struct InflationResult {
    pub big_n: f64,
    pub alpha: f64,
    pub s: f64,
    pub gamma: f64,
    pub t: f64,
    pub u0_zs: f64,
    pub a2_zs: f64,
    pub f34_zs: f64,
    /// Bilinear-estimate quotient `a2_zs / u0_zs^2`.
    pub quotient: f64,
    /// Interaction-component quotient `f34_zs / u0_zs`.
    pub quotient_f34: f64,
}

/// Rule assigning the low-bump width to each high-bump location.
#[derive(Debug, Clone, Copy)]
pub enum AlphaRule {
    /// `alpha = 1/N`.
    InverseN,
    /// Fixed width.
    Fixed(f64),
}

impl AlphaRule {
    pub fn alpha(&self, big_n: f64) -> f64 {
        match self {
            AlphaRule::InverseN => 1.0 / big_n,
            AlphaRule::Fixed(a) => *a,
        }
    }
}

/// Quadrature resolution of the scan. `inner_panels` is the Simpson panel
/// count for the oscillatory `xi_1` integral (scaled with the phase span),
/// `out_panels` the panel count per output segment.
#[derive(Debug, Clone, Copy)]
pub struct ScanQuadrature {
    pub inner_panels: usize,
    pub out_panels: usize,
}

impl Default for ScanQuadrature {
    fn default() -> Self {
        ScanQuadrature {
            inner_panels: 48,
            out_panels: 40,
        }
    }
}

fn scan_point(
    spec: &TwoBumpSpec,
    quad: &ScanQuadrature,
    phase_panels: usize,
) -> LabResult<InflationResult> {
    let fam = spec.family()?;
    let u0 = two_bump_norms_continuum(spec);
    let segments = output_segments(spec);
    let all = a2_band_norms(spec, &fam, &segments, quad.out_panels, phase_panels);
    let cross = a2_band_norms(
        spec,
        &fam,
        &f34_segments(spec),
        quad.out_panels,
        phase_panels,
    );
    let a2_zs = all.hs_sq.sqrt() + all.anti_sq.sqrt();
    let f34_zs = cross.hs_sq.sqrt() + cross.anti_sq.sqrt();
    Ok(InflationResult {
        big_n: spec.big_n,
        alpha: spec.alpha,
        s: spec.s,
        gamma: spec.gamma,
        t: spec.t,
        u0_zs: u0.zs,
        a2_zs,
        f34_zs,
        quotient: a2_zs / (u0.zs * u0.zs),
        quotient_f34: f34_zs / u0.zs,
    })
}

/// Inner panel count scaled to the phase span the kernel sweeps across one
/// bump: `t * gamma / alpha` radians from the rotation part plus the
/// quadratic part, at six panels per radian minimum.
fn phase_scaled_panels(spec: &TwoBumpSpec, base: usize) -> usize {
    let rotation_span = spec.t.abs() * spec.gamma * 2.0 / spec.alpha;
    let quadratic_span = spec.t.abs() * 4.0 * spec.alpha * spec.big_n;
    let span = rotation_span + quadratic_span;
    base.max((6.0 * span).ceil() as usize)
}

/// Scan the second iterate over `n_list`, measuring `Z^s` norms by
/// continuum quadrature. Every point is evaluated at the base and doubled
/// node counts; disagreement beyond 1e-6 relative raises an accuracy error.
pub fn inflation_scan(
    s: f64,
    gamma: f64,
    n_list: &[f64],
    alpha_rule: AlphaRule,
    t: f64,
    quad: &ScanQuadrature,
) -> LabResult<Vec<InflationResult>> {
    if n_list.is_empty() {
        return Err(LabError::InvalidParameter("empty N list".into()));
    }
    let mut out = Vec::with_capacity(n_list.len());
    for &big_n in n_list {
        let spec = TwoBumpSpec {
            alpha: alpha_rule.alpha(big_n),
            big_n,
            s,
            gamma,
            t,
        };
        spec.validate()?;
        let base = phase_scaled_panels(&spec, quad.inner_panels);
        let coarse = scan_point(&spec, quad, base)?;
        let fine = scan_point(&spec, quad, 2 * base)?;
        let rel = (fine.a2_zs - coarse.a2_zs).abs() / fine.a2_zs.max(1e-300);
        if rel > 1e-6 {
            return Err(LabError::Accuracy(format!(
                "quadrature not converged at N = {big_n}: doubling nodes moved a2_zs by {rel:.3e}"
            )));
        }
        let rel_f34 = (fine.f34_zs - coarse.f34_zs).abs() / fine.f34_zs.max(1e-300);
        if rel_f34 > 1e-6 {
            return Err(LabError::Accuracy(format!(
                "quadrature not converged at N = {big_n}: doubling nodes moved f34_zs by {rel_f34:.3e}"
            )));
        }
        out.push(fine);
    }
    Ok(out)
}
