//! Nonlinear time integration with exact linear part.
//!
//! The stepper is an integrating-factor RK4: the linear group
//! `exp(-i t flow_symbol(xi))` is applied exactly in spectral space and RK4
//! advances only the dealiased nonlinearity `-(1/2) d_x (u^2)`. With the
//! conservative form and a strict `2/3` mask the semidiscrete flow conserves
//! the discrete `L^2` norm exactly; the only drift is the `O(dt^4)` time
//! error.
//!
//! Diagnostics track `L^2`, the field mean, the `Z^s` norm and the quartic
//! conserved functional of the rotation-free flow (`psi4` for the
//! Benjamin-Ono kinds, `phi4` for the finite-depth kinds), all integrated on
//! a twice-padded grid so the quartic quadrature is exact.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, LabResult};
use crate::littlewood_paley::is_dyadic;
use crate::multiplier_ops::{coth, DispersionFamily, FamilyKind};
use crate::spectral_core::{
    forward_transform, inverse_transform, Grid, NormReport, RealField, SpectrumField,
};

/// Parameters of one evolution run.
#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub family: DispersionFamily,
    pub dt: f64,
    pub t_end: f64,
    /// Dealiasing fraction in `(1/2, 1]`; modes with `|k| >= dealias * n/2`
    /// are zeroed before and after squaring. Default `2/3`.
    pub dealias: f64,
    /// Emit a diagnostics row every `diag_stride` steps.
    pub diag_stride: usize,
    /// Sobolev index of the `Z^s` diagnostic.
    pub sobolev_s: f64,
}

impl EvolutionConfig {
    pub fn new(family: DispersionFamily, dt: f64, t_end: f64) -> EvolutionConfig {
        EvolutionConfig {
            family,
            dt,
            t_end,
            dealias: 2.0 / 3.0,
            diag_stride: 50,
            sobolev_s: 1.0,
        }
    }

    /// Advective default `min(dx / (4 max|u0|), 1e-3)`; the linear part is
    /// exact so only the transport scale matters.
    pub fn default_dt(grid: &Grid, u0: &RealField) -> f64 {
        (grid.dx() / (4.0 * u0.linf().max(1e-12))).min(1e-3)
    }

    fn validate(&self, u0: &RealField) -> LabResult<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.dealias > 0.5 && self.dealias <= 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "dealias fraction must lie in (1/2, 1], got {}",
                self.dealias
            )));
        }
        if self.diag_stride == 0 {
            return Err(LabError::InvalidParameter(
                "diag_stride must be positive".into(),
            ));
        }
        let linf = u0.linf();
        if linf > 0.0 {
            let dt_max = u0.grid().dx() / (4.0 * linf);
            if self.dt > dt_max * (1.0 + 1e-12) {
                return Err(LabError::InvalidParameter(format!(
                    "dt = {} exceeds the advective stability bound dx/(4 max|u0|) = {dt_max:.3e}",
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

/// One row of the conserved-quantity record.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub l2: f64,
    pub mean_abs: f64,
    pub zs: f64,
    /// `psi4` for Benjamin-Ono kinds, `phi4` for finite-depth kinds.
    pub invariant4: f64,
    /// `(invariant4(t) - invariant4(0)) / max(|invariant4(0)|, 1e-30)`.
    pub drift_rel: f64,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    Blowup { t_last: f64 },
}

/// Field, diagnostics and termination state of a run.
#[derive(Debug, Clone)]
pub struct EvolutionRun {
    pub final_field: RealField,
    pub rows: Vec<DiagnosticsRow>,
    pub termination: Termination,
    pub steps_taken: usize,
}

/// Strict dealias cutoff: largest integer mode strictly below
/// `dealias * n/2`, so the quadratic alias images always land in the masked
/// zone (and the Nyquist mode is always masked).
fn dealias_cutoff(n: usize, dealias: f64) -> i64 {
    let cut = dealias * n as f64 / 2.0;
    if cut.fract() == 0.0 {
        cut as i64 - 1
    } else {
        cut.floor() as i64
    }
}

fn mode_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Precomputed tables for one (grid, family, dt) stepping kernel.
pub struct Stepper {
    grid: Arc<Grid>,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
    /// `-(i xi / 2) * mask(xi)`, the conservative-form derivative.
    deriv_half: Vec<Complex64>,
    mask: Vec<f64>,
    fwd: Arc<dyn rustfft::Fft<f64>>,
    inv: Arc<dyn rustfft::Fft<f64>>,
    dt: f64,
    scratch_a: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: Arc<Grid>, family: &DispersionFamily, dt: f64, dealias: f64) -> Stepper {
        let n = grid.num_points();
        let kcut = dealias_cutoff(n, dealias);
        let mut e_half = Vec::with_capacity(n);
        let mut e_full = Vec::with_capacity(n);
        let mut deriv_half = Vec::with_capacity(n);
        let mut mask = Vec::with_capacity(n);
        for (j, &xi) in grid.wavenumbers().iter().enumerate() {
            let h = Complex64::from_polar(1.0, -0.5 * dt * family.flow_symbol(xi));
            e_half.push(h);
            e_full.push(h * h);
            let k = mode_index(j, n);
            let m = if k.abs() <= kcut { 1.0 } else { 0.0 };
            mask.push(m);
            deriv_half.push(Complex64::new(0.0, -0.5 * xi) * m);
        }
        let (fwd, inv) = crate::spectral_core::plan_pair(n);
        Stepper {
            grid,
            e_half,
            e_full,
            deriv_half,
            mask,
            fwd,
            inv,
            dt,
            scratch_a: vec![Complex64::default(); n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Dealiased conservative nonlinearity in spectral space:
    /// `-(1/2) d_x mask((mask u)^2)`. The zero mode of the output vanishes
    /// identically through the `xi` factor.
    fn nonlinear(&self, state: &[Complex64], out: &mut Vec<Complex64>) {
        let n = self.grid.num_points();
        out.clear();
        out.extend(state.iter().zip(&self.mask).map(|(c, m)| c * m));
        self.inv.process(out);
        let scale = 1.0 / n as f64;
        for c in out.iter_mut() {
            let v = c.re * scale;
            *c = Complex64::new(v * v, 0.0);
        }
        self.fwd.process(out);
        for (c, d) in out.iter_mut().zip(&self.deriv_half) {
            *c *= d;
        }
    }

    /// The dealiased nonlinearity, exposed for Duhamel-style quadrature.
    pub fn apply_nonlinear(&self, state: &[Complex64], out: &mut Vec<Complex64>) {
        self.nonlinear(state, out);
    }

    /// One integrating-factor RK4 step of the spectral state.
    pub fn step_spectrum(&mut self, state: &mut [Complex64]) {
        let n = state.len();
        let dt = self.dt;
        let mut a = std::mem::take(&mut self.scratch_a);
        self.nonlinear(state, &mut a);

        let mut tmp: Vec<Complex64> = (0..n)
            .map(|j| self.e_half[j] * (state[j] + 0.5 * dt * a[j]))
            .collect();
        let mut b = Vec::new();
        self.nonlinear(&tmp, &mut b);

        for j in 0..n {
            tmp[j] = self.e_half[j] * state[j] + 0.5 * dt * b[j];
        }
        let mut c = Vec::new();
        self.nonlinear(&tmp, &mut c);

        for j in 0..n {
            tmp[j] = self.e_full[j] * state[j] + dt * self.e_half[j] * c[j];
        }
        let mut d = Vec::new();
        self.nonlinear(&tmp, &mut d);

        for j in 0..n {
            state[j] = self.e_full[j] * state[j]
                + dt / 6.0
                    * (self.e_full[j] * a[j]
                        + 2.0 * self.e_half[j] * (b[j] + c[j])
                        + d[j]);
        }
        self.scratch_a = a;
    }
}

/// Dealiased conservative nonlinearity `-(1/2) d_x (u^2)` as a field op.
pub fn rhs_nonlinear(u: &RealField, dealias: f64) -> LabResult<RealField> {
    if !(dealias > 0.5 && dealias <= 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "dealias fraction must lie in (1/2, 1], got {dealias}"
        )));
    }
    let spec = forward_transform(u)?;
    let n = u.grid().num_points();
    let kcut = dealias_cutoff(n, dealias);
    let mut masked = spec;
    for (j, c) in masked.coeffs_mut().iter_mut().enumerate() {
        if mode_index(j, n).abs() > kcut {
            *c = Complex64::default();
        }
    }
    let w = inverse_transform(&masked)?;
    let sq = RealField::new(u.grid().clone(), w.samples().iter().map(|v| v * v).collect())?;
    let mut sq_spec = forward_transform(&sq)?;
    let dxi = sq_spec.grid().dxi();
    for (j, c) in sq_spec.coeffs_mut().iter_mut().enumerate() {
        let k = mode_index(j, n);
        if k.abs() > kcut {
            *c = Complex64::default();
        } else {
            *c *= Complex64::new(0.0, -0.5 * k as f64 * dxi);
        }
    }
    inverse_transform(&sq_spec)
}

fn require_mean_zero(u: &RealField, what: &str) -> LabResult<SpectrumField> {
    let spec = forward_transform(u)?;
    if spec.zero_mode_rel() > crate::spectral_core::MEAN_ZERO_REL_TOL {
        return Err(LabError::Domain(format!(
            "{what} requires a mean-zero field"
        )));
    }
    Ok(spec)
}

/// Advance a field by one `cfg.dt` step.
pub fn step(u: &RealField, cfg: &EvolutionConfig) -> LabResult<RealField> {
    cfg.validate(u)?;
    let spec = require_mean_zero(u, "time stepping")?;
    let mut state = spec.coeffs().to_vec();
    let mut stepper = Stepper::new(u.grid().clone(), &cfg.family, cfg.dt, cfg.dealias);
    stepper.step_spectrum(&mut state);
    if state.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(LabError::Blowup { t_last: 0.0 });
    }
    inverse_transform(&SpectrumField::new(u.grid().clone(), state)?)
}

/// Quartic conserved functional of the rotation-free Benjamin-Ono flow:
/// `2 ∫ u_x^2 + (3/2) ∫ u^2 H(u_x) + (1/4) ∫ u^4`, integrated exactly on a
/// twice-padded grid.
pub fn psi4(u: &RealField) -> LabResult<f64> {
    let spec = forward_transform(u)?;
    let ux = padded_values(&spec, |xi| Complex64::new(0.0, xi))?;
    let hux = padded_values(&spec, |xi| Complex64::new(xi.abs(), 0.0))?;
    let uu = padded_values(&spec, |_| Complex64::new(1.0, 0.0))?;
    let dx = u.grid().dx() / 2.0;
    let mut total = 0.0;
    for j in 0..uu.len() {
        total += 2.0 * ux[j] * ux[j]
            + 1.5 * uu[j] * uu[j] * hux[j]
            + 0.25 * uu[j].powi(4);
    }
    Ok(total * dx)
}

/// Quartic conserved functional of the rotation-free finite-depth flow as
/// printed for the depth-one normalization:
/// `(1/2)∫u_x^2 + (3/2)∫u^2 T u_x + (3/2)∫(T u_x)^2 + (9/2)∫u T u_x
///  + (3/2)∫u^3 + (3/2)∫u^2 + (1/4)∫u^4` with `T = T_delta`.
pub fn phi4(u: &RealField, delta: f64) -> LabResult<f64> {
    let spec = forward_transform(u)?;
    let ux = padded_values(&spec, |xi| Complex64::new(0.0, xi))?;
    // T d_x has the real even multiplier xi coth(delta xi)
    let tux = padded_values(&spec, |xi| {
        if xi == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(xi * coth(delta * xi), 0.0)
        }
    })?;
    let uu = padded_values(&spec, |_| Complex64::new(1.0, 0.0))?;
    let dx = u.grid().dx() / 2.0;
    let mut total = 0.0;
    for j in 0..uu.len() {
        let u1 = uu[j];
        total += 0.5 * ux[j] * ux[j]
            + 1.5 * u1 * u1 * tux[j]
            + 1.5 * tux[j] * tux[j]
            + 4.5 * u1 * tux[j]
            + 1.5 * u1 * u1 * u1
            + 1.5 * u1 * u1
            + 0.25 * u1 * u1 * u1 * u1;
    }
    Ok(total * dx)
}

/// Apply a multiplier and evaluate on the twice-padded grid (exact
/// quadrature for quartic products of band-limited fields).
fn padded_values(
    spec: &SpectrumField,
    multiplier: impl Fn(f64) -> Complex64,
) -> LabResult<Vec<f64>> {
    let n = spec.grid().num_points();
    let n2 = 2 * n;
    let mut padded = vec![Complex64::default(); n2];
    for j in 0..n {
        let k = mode_index(j, n);
        if k == -(n as i64) / 2 {
            // Nyquist mode of the coarse grid: kept zero
            continue;
        }
        let xi = spec.grid().wavenumbers()[j];
        let jj = if k >= 0 { k as usize } else { (n2 as i64 + k) as usize };
        padded[jj] = spec.coeffs()[j] * multiplier(xi) * 2.0;
    }
    let (_, inv) = crate::spectral_core::plan_pair(n2);
    inv.process(&mut padded);
    let scale = 1.0 / n2 as f64;
    Ok(padded.iter().map(|c| c.re * scale).collect())
}

/// Instantaneous drift rate of `psi4` induced by the rotation term,
/// obtained by pairing the variational derivative of `psi4` with
/// `gamma d_x^{-1} u` and integrating by parts:
/// `gamma [ 3 ∫ u H(u_x) d_x^{-1}u + (3/2) ∫ u^2 H u + ∫ u^3 d_x^{-1}u ]`.
pub fn psi4_drift_rate(u: &RealField, gamma: f64) -> LabResult<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let spec = require_mean_zero(u, "psi4 drift rate")?;
    let uu = padded_values(&spec, |_| Complex64::new(1.0, 0.0))?;
    let hux = padded_values(&spec, |xi| Complex64::new(xi.abs(), 0.0))?;
    let hu = padded_values(&spec, |xi| Complex64::new(0.0, -xi.signum()))?;
    let anti = padded_values(&spec, |xi| {
        if xi == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(0.0, -1.0 / xi)
        }
    })?;
    let dx = u.grid().dx() / 2.0;
    let mut total = 0.0;
    for j in 0..uu.len() {
        total += 3.0 * uu[j] * hux[j] * anti[j]
            + 1.5 * uu[j] * uu[j] * hu[j]
            + uu[j] * uu[j] * uu[j] * anti[j];
    }
    Ok(gamma * total * dx)
}

/// Evaluate the family's quartic invariant (`psi4` or `phi4`).
pub fn invariant4(u: &RealField, family: &DispersionFamily) -> LabResult<f64> {
    match family.kind {
        FamilyKind::Ilw | FamilyKind::Rmilw => phi4(u, family.delta),
        _ => psi4(u),
    }
}

/// Integrate `u0` to `cfg.t_end`, emitting diagnostics every
/// `cfg.diag_stride` steps. Blow-up aborts cleanly with the partial record.
pub fn run(u0: &RealField, cfg: &EvolutionConfig) -> LabResult<EvolutionRun> {
    cfg.validate(u0)?;
    let spec = require_mean_zero(u0, "evolution")?;
    let grid = u0.grid().clone();
    let mut state = spec.coeffs().to_vec();
    let n_full = (cfg.t_end / cfg.dt + 1e-9).floor() as usize;
    let remainder = cfg.t_end - n_full as f64 * cfg.dt;

    let mut stepper = Stepper::new(grid.clone(), &cfg.family, cfg.dt, cfg.dealias);
    let blowup_scale = 1e6 * (u0.linf() + 1.0);

    let mut rows: Vec<DiagnosticsRow> = Vec::new();
    let mut invariant0 = 0.0;
    let record =
        |state: &[Complex64], t: f64, rows: &mut Vec<DiagnosticsRow>, inv0: &mut f64| -> LabResult<()> {
            let field = inverse_transform(&SpectrumField::new(grid.clone(), state.to_vec())?)?;
            let nr: NormReport = crate::spectral_core::zs_norm(&field, cfg.sobolev_s)?;
            let iv = invariant4(&field, &cfg.family)?;
            if rows.is_empty() {
                *inv0 = iv;
            }
            let drift_rel = (iv - *inv0) / inv0.abs().max(1e-30);
            rows.push(DiagnosticsRow {
                t,
                l2: nr.l2,
                mean_abs: field.mean().abs(),
                zs: nr.zs,
                invariant4: iv,
                drift_rel,
            });
            Ok(())
        };

    record(&state, 0.0, &mut rows, &mut invariant0)?;
    let mut t_last = 0.0;
    let mut steps_taken = 0usize;
    for step_idx in 1..=n_full {
        stepper.step_spectrum(&mut state);
        let t = step_idx as f64 * cfg.dt;
        if !state_finite(&state, &grid, blowup_scale) {
            return Ok(EvolutionRun {
                final_field: inverse_transform(&SpectrumField::new(
                    grid.clone(),
                    sanitize(&state),
                )?)?,
                rows,
                termination: Termination::Blowup { t_last },
                steps_taken,
            });
        }
        t_last = t;
        steps_taken += 1;
        if step_idx % cfg.diag_stride == 0 && !(step_idx == n_full && remainder <= 1e-12) {
            record(&state, t, &mut rows, &mut invariant0)?;
        }
    }
    if remainder > 1e-12 {
        let mut tail = Stepper::new(grid.clone(), &cfg.family, remainder, cfg.dealias);
        tail.step_spectrum(&mut state);
        steps_taken += 1;
        if !state_finite(&state, &grid, blowup_scale) {
            return Ok(EvolutionRun {
                final_field: inverse_transform(&SpectrumField::new(
                    grid.clone(),
                    sanitize(&state),
                )?)?,
                rows,
                termination: Termination::Blowup { t_last },
                steps_taken,
            });
        }
    }
    record(&state, cfg.t_end, &mut rows, &mut invariant0)?;
    Ok(EvolutionRun {
        final_field: inverse_transform(&SpectrumField::new(grid, state)?)?,
        rows,
        termination: Termination::Completed,
        steps_taken,
    })
}

fn state_finite(state: &[Complex64], grid: &Grid, blowup_scale: f64) -> bool {
    let n = grid.num_points() as f64;
    state
        .iter()
        .all(|c| c.re.is_finite() && c.im.is_finite() && c.norm_sqr().sqrt() / n <= blowup_scale)
}

fn sanitize(state: &[Complex64]) -> Vec<Complex64> {
    state
        .iter()
        .map(|c| {
            if c.re.is_finite() && c.im.is_finite() {
                *c
            } else {
                Complex64::default()
            }
        })
        .collect()
}

/// Exponent of the rotation-coefficient rescaling: sending
/// `u(t, x) -> lambda u(lambda^2 t, lambda x)` multiplies every left-hand
/// term of the equation by `lambda^3` while the antiderivative on the right
/// loses one power (`d_x^{-1}[u(lambda .)] = lambda^{-1} (d_x^{-1}u)(lambda .)`),
/// so the rescaled solution obeys the same equation with rotation
/// coefficient `gamma lambda^3`. The two-run oracle test pins this exponent.
pub const SCALING_ROTATION_EXPONENT: i32 = 3;

/// Evolve `u0` under rotation `gamma` to time `lambda^2 t`, rescale, and
/// compare with evolving the rescaled datum under rotation
/// `gamma lambda^SCALING_ROTATION_EXPONENT` to time `t`. Returns the
/// relative `L^2` discrepancy; zero up to stepping error when the scaling
/// law holds.
pub fn verify_scaling(
    u0: &RealField,
    lambda: f64,
    gamma: f64,
    t: f64,
    dt: f64,
) -> LabResult<f64> {
    if !(lambda > 0.0 && lambda <= 1.0 && (lambda == 1.0 || is_dyadic(lambda))) {
        return Err(LabError::InvalidParameter(format!(
            "lambda must be a power of two in (0, 1], got {lambda}"
        )));
    }
    let grid = u0.grid().clone();

    // run A: original datum, rotation gamma, time lambda^2 t
    let fam_a = DispersionFamily::rmbo(gamma)?;
    let mut cfg_a = EvolutionConfig::new(fam_a, dt, lambda * lambda * t);
    cfg_a.diag_stride = usize::MAX / 2;
    let run_a = run(u0, &cfg_a)?;
    if run_a.termination != Termination::Completed {
        return Err(LabError::Blowup { t_last: 0.0 });
    }

    // rescale: same samples scaled by lambda on the grid with L' = L/lambda
    let grid_b = Grid::new(grid.num_points(), grid.half_length() / lambda)?;
    let w_ref = RealField::new(
        grid_b.clone(),
        run_a
            .final_field
            .samples()
            .iter()
            .map(|v| lambda * v)
            .collect(),
    )?;

    // run B: rescaled datum, rescaled rotation, time t
    let w0 = RealField::new(
        grid_b.clone(),
        u0.samples().iter().map(|v| lambda * v).collect(),
    )?;
    let fam_b = DispersionFamily::rmbo(gamma * lambda.powi(SCALING_ROTATION_EXPONENT))?;
    let mut cfg_b = EvolutionConfig::new(fam_b, dt, t);
    cfg_b.diag_stride = usize::MAX / 2;
    let run_b = run(&w0, &cfg_b)?;
    if run_b.termination != Termination::Completed {
        return Err(LabError::Blowup { t_last: 0.0 });
    }

    Ok(run_b.final_field.l2_distance(&w_ref)? / w_ref.l2().max(1e-300))
}

/// Relative `L^2` differences between the finite-depth evolution at each
/// `delta` and the Benjamin-Ono evolution of the same datum, at time `t`.
pub fn deep_water_compare(
    u0: &RealField,
    delta_list: &[f64],
    gamma: f64,
    t: f64,
    dt: f64,
) -> LabResult<Vec<f64>> {
    if delta_list.iter().any(|&d| d < 1.0) {
        return Err(LabError::InvalidParameter(
            "deep-water comparison needs delta >= 1".into(),
        ));
    }
    if t == 0.0 {
        return Ok(vec![0.0; delta_list.len()]);
    }
    let fam_ref = DispersionFamily::rmbo(gamma)?;
    let mut cfg = EvolutionConfig::new(fam_ref, dt, t);
    cfg.diag_stride = usize::MAX / 2;
    let reference = run(u0, &cfg)?;
    let ref_l2 = reference.final_field.l2();
    let mut out = Vec::with_capacity(delta_list.len());
    for &delta in delta_list {
        let fam = DispersionFamily::rmilw(delta, gamma)?;
        let mut cfg_d = EvolutionConfig::new(fam, dt, t);
        cfg_d.diag_stride = usize::MAX / 2;
        let r = run(u0, &cfg_d)?;
        out.push(r.final_field.l2_distance(&reference.final_field)? / ref_l2);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::mean_zero_project;
    use std::f64::consts::PI;

    fn smooth_datum(n: usize, l: f64, amp: f64) -> RealField {
        let grid = Grid::new(n, l).unwrap();
        let f = RealField::from_fn(grid, |x| {
            amp * ((x / 2.0).cosh().powi(-2) - 0.2 * ((x - 3.0) / 3.0).cosh().powi(-2))
        })
        .unwrap();
        mean_zero_project(&f)
    }

    #[test]
    fn rhs_of_zero_is_zero() {
        let grid = Grid::new(64, PI).unwrap();
        let z = RealField::zeros(grid);
        let r = rhs_nonlinear(&z, 2.0 / 3.0).unwrap();
        assert_eq!(r.linf(), 0.0);
    }

    #[test]
    fn rhs_of_cosine_hand_value() {
        // -(1/2) d_x cos^2 x = (1/2) sin 2x
        let grid = Grid::new(64, PI).unwrap();
        let f = RealField::from_fn(grid.clone(), |x| x.cos()).unwrap();
        let r = rhs_nonlinear(&f, 2.0 / 3.0).unwrap();
        let expect = RealField::from_fn(grid, |x| 0.5 * (2.0 * x).sin()).unwrap();
        assert!(r.l2_distance(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn rhs_is_skew_to_state() {
        // <rhs(u), u> = 0: the cancellation behind L^2 conservation
        let u = smooth_datum(256, 8.0 * PI, 1.0);
        let r = rhs_nonlinear(&u, 2.0 / 3.0).unwrap();
        let dot: f64 = u.grid().dx()
            * u.samples()
                .iter()
                .zip(r.samples())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        let scale = u.l2().powi(3);
        assert!(dot.abs() <= 1e-11 * scale, "dot {dot}");
        // output mean is exactly zero
        let spec = forward_transform(&r).unwrap();
        assert!(spec.coeffs()[0].norm() < 1e-13 * u.l2());
    }

    #[test]
    fn step_reduces_to_propagator_without_nonlinearity() {
        // a zero-width dealias mask disables the nonlinearity entirely, so
        // one step must equal the exact propagator to rounding
        let grid = Grid::new(256, 8.0 * PI).unwrap();
        let fam = DispersionFamily::rmbo(1.0).unwrap();
        let u = mean_zero_project(
            &RealField::from_fn(grid.clone(), |x| (x / 4.0).sin() + 0.3 * (x / 2.0).cos())
                .unwrap(),
        );
        let dt = 1e-3;
        let mut state = forward_transform(&u).unwrap().coeffs().to_vec();
        let mut linear_only = Stepper::new(grid.clone(), &fam, dt, 0.0);
        linear_only.step_spectrum(&mut state);
        let stepped = inverse_transform(&SpectrumField::new(grid, state).unwrap()).unwrap();
        let exact = crate::multiplier_ops::linear_propagator(&u, &fam, dt).unwrap();
        assert!(stepped.l2_distance(&exact).unwrap() / u.l2() < 1e-13);
    }

    #[test]
    fn l2_is_conserved_on_smooth_run_all_families() {
        let u0 = smooth_datum(512, 16.0 * PI, 0.5);
        for fam in [
            DispersionFamily::bo(),
            DispersionFamily::rmbo(1.0).unwrap(),
            DispersionFamily::ilw(1.0).unwrap(),
            DispersionFamily::rmilw(2.0, 0.5).unwrap(),
            DispersionFamily::frac_bo(1.5, 1.0).unwrap(),
        ] {
            let mut cfg = EvolutionConfig::new(fam, 1e-3, 0.5);
            cfg.diag_stride = 100;
            let r = run(&u0, &cfg).unwrap();
            assert_eq!(r.termination, Termination::Completed);
            let l2_0 = r.rows[0].l2;
            for row in &r.rows {
                assert!(
                    (row.l2 - l2_0).abs() / l2_0 <= 1e-9,
                    "{:?}: t={} drift {}",
                    fam.kind,
                    row.t,
                    (row.l2 - l2_0).abs() / l2_0
                );
                assert!(row.mean_abs <= 1e-13);
            }
        }
    }

    #[test]
    fn richardson_self_convergence_is_fourth_order() {
        // amplitude and dt chosen so the halving errors sit well above
        // rounding (~1e-13) but still in the asymptotic regime
        let u0 = smooth_datum(256, 8.0 * PI, 3.0);
        let fam = DispersionFamily::rmbo(1.0).unwrap();
        let t = 0.1;
        let sol = |dt: f64| {
            let mut cfg = EvolutionConfig::new(fam, dt, t);
            cfg.diag_stride = usize::MAX / 2;
            run(&u0, &cfg).unwrap().final_field
        };
        let u1 = sol(5e-3);
        let u2 = sol(2.5e-3);
        let u4 = sol(1.25e-3);
        let e1 = u1.l2_distance(&u2).unwrap();
        let e2 = u2.l2_distance(&u4).unwrap();
        let order = (e1 / e2).log2();
        assert!(
            (3.8..=4.2).contains(&order),
            "order {order}, errors {e1:.3e}/{e2:.3e}"
        );
    }

    /// With the `-i sgn(xi)` Hilbert convention the algebraic soliton of
    /// the rotation-free flow is `phi(x - st) = -4k / (1 + k^2 (x - st)^2)`
    /// with `s = -k`: substituting `phi = A/(1 + k^2 y^2)` into
    /// `-s phi + H phi' + phi^2/2 = 0` forces `s = -k`, `A = -4k`.
    /// Mean-zero projection adds a background `b`, Galilean-shifting the
    /// speed to `s + b`; torus tail wrap leaves a percent-level residual.
    #[test]
    fn bo_soliton_translates_with_bounded_shape_error() {
        let k = 1.0;
        let grid = Grid::new(1024, 32.0 * PI).unwrap();
        let raw = RealField::from_fn(grid.clone(), |x| -4.0 * k / (1.0 + k * k * x * x)).unwrap();
        let background = -raw.mean();
        let u0 = mean_zero_project(&raw);
        let mut cfg = EvolutionConfig::new(DispersionFamily::bo(), 5e-4, 1.0);
        cfg.diag_stride = usize::MAX / 2;
        let r = run(&u0, &cfg).unwrap();
        let speed = -k + background;
        let translated = mean_zero_project(
            &RealField::from_fn(grid, |x| {
                let y = x - speed * 1.0;
                -4.0 * k / (1.0 + k * k * y * y)
            })
            .unwrap(),
        );
        let err = r.final_field.l2_distance(&translated).unwrap() / translated.l2();
        assert!(err < 0.05, "shape error {err}");
    }

    #[test]
    fn psi4_is_invariant_for_bo() {
        let u0 = smooth_datum(512, 16.0 * PI, 0.5);
        let mut cfg = EvolutionConfig::new(DispersionFamily::bo(), 1e-3, 1.0);
        cfg.diag_stride = 200;
        let r = run(&u0, &cfg).unwrap();
        for row in &r.rows {
            assert!(
                row.drift_rel.abs() <= 1e-6,
                "t={} psi4 drift {}",
                row.t,
                row.drift_rel
            );
        }
    }

    #[test]
    fn phi4_is_invariant_for_ilw() {
        let u0 = smooth_datum(512, 16.0 * PI, 0.5);
        let fam = DispersionFamily::ilw(1.0).unwrap();
        let mut cfg = EvolutionConfig::new(fam, 1e-3, 1.0);
        cfg.diag_stride = 200;
        let r = run(&u0, &cfg).unwrap();
        for row in &r.rows {
            assert!(
                row.drift_rel.abs() <= 1e-6,
                "t={} phi4 drift {}",
                row.t,
                row.drift_rel
            );
        }
    }

    #[test]
    fn psi4_drift_shrinks_with_gamma() {
        let u0 = smooth_datum(512, 16.0 * PI, 0.5);
        let mut drifts = Vec::new();
        for gamma in [1e-1, 1e-2, 1e-3] {
            let fam = DispersionFamily::rmbo(gamma).unwrap();
            let mut cfg = EvolutionConfig::new(fam, 1e-3, 1.0);
            cfg.diag_stride = usize::MAX / 2;
            let r = run(&u0, &cfg).unwrap();
            drifts.push(r.rows.last().unwrap().drift_rel.abs());
        }
        assert!(
            drifts[0] > drifts[1] && drifts[1] > drifts[2],
            "drifts {drifts:?}"
        );
    }

    #[test]
    fn psi4_drift_rate_examples() {
        let grid = Grid::new(128, PI).unwrap();
        // gamma = 0: exactly zero
        let u = RealField::from_fn(grid.clone(), |x| x.cos()).unwrap();
        assert_eq!(psi4_drift_rate(&u, 0.0).unwrap(), 0.0);
        // u = cos x: every integrand term is odd under x -> -x, so the rate
        // vanishes (hand evaluation; see the trig oracle test for a field
        // with nonzero rate)
        let r = psi4_drift_rate(&u, 1.0).unwrap();
        assert!(r.abs() < 1e-12, "rate {r}");
    }

    /// Exact trigonometric oracle for the drift-rate quadrature on
    /// u = cos x + sin 2x (L = pi). Every operator acts mode-by-mode:
    ///   H u          = sin x - cos 2x
    ///   H u_x        = cos x + 2 sin 2x      (multiplier |xi|)
    ///   d_x^{-1} u   = sin x - cos(2x)/2
    /// Expanding the integrands with product-to-sum rules, the only
    /// surviving monomials give
    ///   I_a = ∫ u H(u_x) d_x^{-1} u dx = 3 pi/2 - pi/4 = 5 pi/4
    ///   I_b = ∫ u^2 H(u) dx           = pi - pi/2      = pi/2
    ///   I_c = ∫ u^3 d_x^{-1} u dx     = 0
    /// so rate = gamma (3 I_a + 1.5 I_b + I_c) = gamma * 9 pi / 2.
    #[test]
    fn psi4_drift_rate_matches_trig_oracle() {
        let grid = Grid::new(256, PI).unwrap();
        let u = RealField::from_fn(grid, |x| x.cos() + (2.0 * x).sin()).unwrap();
        let gamma = 0.7;
        let expect = gamma * 4.5 * PI;
        let got = psi4_drift_rate(&u, gamma).unwrap();
        assert!(
            (got - expect).abs() <= 1e-10 * expect.abs(),
            "rate {got} vs oracle {expect}"
        );
    }

    /// Integrated drift rate along a weak-rotation trajectory accounts for
    /// the observed psi4 change within 5%.
    #[test]
    fn psi4_drift_rate_consistent_with_trajectory() {
        let u0 = smooth_datum(512, 16.0 * PI, 0.5);
        let gamma = 0.01;
        let fam = DispersionFamily::rmbo(gamma).unwrap();
        let mut cfg = EvolutionConfig::new(fam, 1e-3, 1.0);
        cfg.diag_stride = 25;
        let r = run(&u0, &cfg).unwrap();

        // trapezoid rule over the diagnostic samples needs the rate at the
        // recorded times: rerun recording states
        let mut stepper = Stepper::new(u0.grid().clone(), &fam, 1e-3, cfg.dealias);
        let mut state = forward_transform(&u0).unwrap().coeffs().to_vec();
        let mut times = vec![0.0f64];
        let mut rates = vec![psi4_drift_rate(&u0, gamma).unwrap()];
        let steps = 1000;
        for s in 1..=steps {
            stepper.step_spectrum(&mut state);
            if s % 25 == 0 {
                let field = inverse_transform(
                    &SpectrumField::new(u0.grid().clone(), state.clone()).unwrap(),
                )
                .unwrap();
                times.push(s as f64 * 1e-3);
                rates.push(psi4_drift_rate(&field, gamma).unwrap());
            }
        }
        let mut integral = 0.0;
        for w in times.windows(2).zip(rates.windows(2)) {
            let (tw, rw) = w;
            integral += 0.5 * (rw[0] + rw[1]) * (tw[1] - tw[0]);
        }
        let observed = r.rows.last().unwrap().invariant4 - r.rows[0].invariant4;
        assert!(
            (integral - observed).abs() <= 0.05 * observed.abs(),
            "rate integral {integral} vs observed {observed}"
        );
    }

    #[test]
    fn scaling_identity_cases() {
        let u0 = smooth_datum(256, 8.0 * PI, 0.5);
        // lambda = 1 reduces to comparing a run with itself
        let d = verify_scaling(&u0, 1.0, 1.0, 0.1, 1e-3).unwrap();
        assert!(d <= 1e-9, "lambda=1 discrepancy {d}");
        // gamma = 0: classical scaling invariance
        let d = verify_scaling(&u0, 0.5, 0.0, 0.1, 1e-3).unwrap();
        assert!(d <= 1e-8, "gamma=0 discrepancy {d}");
        // rejects non-dyadic lambda
        assert!(verify_scaling(&u0, 0.3, 1.0, 0.1, 1e-3).is_err());
    }

    #[test]
    fn scaling_reduction_with_rotation() {
        let u0 = smooth_datum(256, 8.0 * PI, 0.5);
        let d = verify_scaling(&u0, 0.5, 1.0, 0.1, 1e-3).unwrap();
        assert!(d <= 1e-6, "discrepancy {d}");
    }

    #[test]
    fn deep_water_differences_decrease() {
        let u0 = smooth_datum(256, 16.0 * PI, 0.5);
        let diffs = deep_water_compare(&u0, &[2.0, 4.0, 8.0], 1.0, 0.1, 1e-3).unwrap();
        assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2], "{diffs:?}");
        assert!(deep_water_compare(&u0, &[0.5], 1.0, 0.1, 1e-3).is_err());
        // t = 0 gives zero differences
        let zero = deep_water_compare(&u0, &[2.0, 4.0], 1.0, 0.0, 1e-3).unwrap();
        assert_eq!(zero, vec![0.0, 0.0]);
    }

    /// Deep-water proxy at delta = 64: the solution difference stays under
    /// ten times the multiplier gap envelope `2.1 exp(-2 delta xi_min)`
    /// taken at the lowest mode the datum occupies (xi_min = 1/16 here, so
    /// the envelope is 2.1 e^{-8}). The residual difference itself is
    /// dominated by the finite-depth transport `xi/delta`, which is why the
    /// envelope must be read at the spectral floor of the data.
    #[test]
    fn deep_water_proxy_bounded_by_multiplier_gap() {
        let u0 = smooth_datum(256, 16.0 * PI, 0.5);
        let delta = 64.0;
        let xi_min = u0.grid().dxi();
        let diffs = deep_water_compare(&u0, &[delta], 1.0, 0.1, 1e-3).unwrap();
        let bound = 10.0 * 2.1 * (-2.0 * delta * xi_min).exp();
        assert!(
            diffs[0] <= bound,
            "difference {:.3e} exceeds 10x gap bound {:.3e}",
            diffs[0],
            bound
        );
    }

    #[test]
    fn advective_dt_bound_is_enforced() {
        let grid = Grid::new(64, PI).unwrap();
        let u0 = mean_zero_project(&RealField::from_fn(grid, |x| 50.0 * x.sin()).unwrap());
        let cfg = EvolutionConfig::new(DispersionFamily::bo(), 1e-2, 1.0);
        assert!(matches!(
            run(&u0, &cfg),
            Err(LabError::InvalidParameter(_))
        ));
    }

    #[test]
    fn blowup_is_reported_cleanly() {
        // an undealiased large-amplitude run is genuinely unstable: aliased
        // quadratic terms feed energy back and the state overflows
        let grid = Grid::new(64, PI).unwrap();
        let u0 = mean_zero_project(&RealField::from_fn(grid, |x| 40.0 * x.sin()).unwrap());
        let cfg = EvolutionConfig {
            family: DispersionFamily::bo(),
            dt: 2e-4,
            t_end: 50.0,
            dealias: 1.0,
            diag_stride: usize::MAX / 2,
            sobolev_s: 0.0,
        };
        let out = run(&u0, &cfg).unwrap();
        match out.termination {
            Termination::Blowup { t_last } => {
                assert!(t_last >= 0.0 && t_last < 50.0);
                assert!(!out.rows.is_empty());
                assert!(out.final_field.samples().iter().all(|s| s.is_finite()));
            }
            Termination::Completed => panic!("expected blow-up"),
        }
    }
}
