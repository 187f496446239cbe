//! Resonance functions of the dispersion symbols, empirical bound scans,
//! pseudoproduct operators and the space-time trilinear support check.
//!
//! The resonance function of a symbol `w` is
//! `Omega(xi1, xi2) = w(xi1 + xi2) - w(xi1) - w(xi2)`; it splits into the
//! resonance of the rotation-free dispersive part minus `gamma` times the
//! resonance of `1/xi`. Scans certify the two-term envelope
//! `|xi|_max^2 |xi|_min + |xi|_max |xi|_min^{-2}` on sampled regions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, LabResult};
use crate::multiplier_ops::DispersionFamily;
use crate::spectral_core::{forward_transform, inverse_transform, RealField, SpectrumField};

/// One evaluation of the resonance function against its two-term envelope.
#[derive(Debug, Clone, Copy)]
pub struct ResonanceSample {
    pub xi1: f64,
    pub xi2: f64,
    /// Resonance of the full symbol.
    pub omega_value: f64,
    /// Resonance of the rotation-free dispersive part.
    pub omega_good: f64,
    /// `gamma` times the resonance of `1/xi`; `omega_value = omega_good - omega_bad`.
    pub omega_bad: f64,
    /// Envelope `|xi|_max^2 |xi|_min + |xi|_max |xi|_min^{-2}`.
    pub bound_value: f64,
    /// `|omega_value| / bound_value`.
    pub ratio: f64,
}

fn resonance_of(sym: impl Fn(f64) -> f64, xi1: f64, xi2: f64) -> f64 {
    sym(xi1 + xi2) - sym(xi1) - sym(xi2)
}

/// Evaluate the resonance function of a family at `(xi1, xi2)`, together
/// with its good/bad split and the envelope ratio. All of `xi1`, `xi2`,
/// `xi1 + xi2` must be nonzero.
pub fn resonance(fam: &DispersionFamily, xi1: f64, xi2: f64) -> LabResult<ResonanceSample> {
    if xi1 == 0.0 || xi2 == 0.0 || xi1 + xi2 == 0.0 {
        return Err(LabError::SingularPoint(format!(
            "resonance undefined at xi1 = {xi1}, xi2 = {xi2}"
        )));
    }
    let omega_good = resonance_of(|x| fam.dispersive_part(x), xi1, xi2);
    let omega_bad = fam.gamma * resonance_of(|x| if x == 0.0 { 0.0 } else { 1.0 / x }, xi1, xi2);
    let omega_value = omega_good - omega_bad;

    let a1 = xi1.abs();
    let a2 = xi2.abs();
    let a3 = (xi1 + xi2).abs();
    let max = a1.max(a2).max(a3);
    let min = a1.min(a2).min(a3);
    let bound_value = max * max * min + max / (min * min);
    Ok(ResonanceSample {
        xi1,
        xi2,
        omega_value,
        omega_good,
        omega_bad,
        bound_value,
        ratio: omega_value.abs() / bound_value,
    })
}

/// Sampling plan for [`bound_scan`]: log-uniform magnitudes in
/// `[min_abs, box_size]` with random signs, stratified so the three regimes
/// of the envelope all get probed: generic pairs, strongly separated
/// magnitudes, and near-cancellation `xi2 = -xi1 + eps`.
#[derive(Debug, Clone, Copy)]
pub struct ScanPlan {
    pub min_abs: f64,
    pub box_size: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Hard floor below which `|xi1 + xi2|` is never sampled.
pub const RIDGE_EXCLUSION: f64 = 1e-6;

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

fn scan_sample(rng: &mut impl Rng, plan: &ScanPlan, stratum: usize) -> (f64, f64) {
    let sign = |r: &mut dyn FnMut() -> bool| if r() { 1.0 } else { -1.0 };
    match stratum {
        // generic pair
        0 => {
            let x1 = log_uniform(rng, plan.min_abs, plan.box_size)
                * sign(&mut || rng.gen_bool(0.5));
            let x2 = log_uniform(rng, plan.min_abs, plan.box_size)
                * sign(&mut || rng.gen_bool(0.5));
            (x1, x2)
        }
        // |xi2| well below |xi1|
        1 => {
            let x1 = log_uniform(rng, (plan.min_abs * 8.0).min(plan.box_size), plan.box_size)
                * sign(&mut || rng.gen_bool(0.5));
            let hi2 = (x1.abs() / 8.0).max(plan.min_abs);
            let x2 = log_uniform(rng, plan.min_abs, hi2) * sign(&mut || rng.gen_bool(0.5));
            (x1, x2)
        }
        // near cancellation: xi2 = -xi1 + eps down the singular ridge
        _ => {
            let x1 = log_uniform(rng, plan.min_abs, plan.box_size)
                * sign(&mut || rng.gen_bool(0.5));
            let eps_floor = RIDGE_EXCLUSION.max(1.0 / plan.box_size);
            let eps =
                log_uniform(rng, eps_floor, 2.0) * sign(&mut || rng.gen_bool(0.5));
            (x1, -x1 + eps)
        }
    }
}

/// Supremum of the envelope ratio over a stratified random scan of the
/// region `min(|xi1|, |xi2|) >= min_abs`, `|xi_i| <= box_size`, excluding
/// the ridge `|xi1 + xi2| < max(1e-6, 1/box_size)`.
pub fn bound_scan(fam: &DispersionFamily, plan: &ScanPlan) -> LabResult<f64> {
    bound_scan_samples(fam, plan, |_| {})
}

/// Same scan, streaming every accepted sample to `sink` (CSV emission).
pub fn bound_scan_samples(
    fam: &DispersionFamily,
    plan: &ScanPlan,
    mut sink: impl FnMut(&ResonanceSample),
) -> LabResult<f64> {
    if !(plan.min_abs >= 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "min_abs must be >= 1, got {}",
            plan.min_abs
        )));
    }
    if !(plan.box_size > 2.0 * plan.min_abs) || plan.samples == 0 {
        return Err(LabError::InvalidParameter(
            "degenerate sampling parameters".into(),
        ));
    }
    let ridge = RIDGE_EXCLUSION.max(1.0 / plan.box_size);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut max_ratio = 0.0f64;
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while accepted < plan.samples {
        attempts += 1;
        if attempts > plan.samples * 20 {
            return Err(LabError::InvalidParameter(
                "sampling region rejects nearly all draws".into(),
            ));
        }
        let (x1, x2) = scan_sample(&mut rng, plan, accepted % 3);
        if x1.abs() < plan.min_abs
            || x2.abs() < plan.min_abs
            || x1.abs() > plan.box_size
            || x2.abs() > plan.box_size
            || (x1 + x2).abs() < ridge
        {
            continue;
        }
        let s = resonance(fam, x1, x2)?;
        if s.ratio > max_ratio {
            max_ratio = s.ratio;
        }
        sink(&s);
        accepted += 1;
    }
    Ok(max_ratio)
}

/// One master scan filtered to several `min_abs` thresholds at once, so the
/// returned maxima are maxima over nested sample sets and the saturation
/// property `max(min_abs doubled) <= max(min_abs)` is exact by construction.
pub fn bound_scan_nested(
    fam: &DispersionFamily,
    min_abs_list: &[f64],
    box_size: f64,
    samples: usize,
    seed: u64,
) -> LabResult<Vec<f64>> {
    let base = min_abs_list
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let plan = ScanPlan {
        min_abs: base,
        box_size,
        samples,
        seed,
    };
    let mut maxima = vec![0.0f64; min_abs_list.len()];
    bound_scan_samples(fam, &plan, |s| {
        let lo = s.xi1.abs().min(s.xi2.abs());
        for (m, &thr) in maxima.iter_mut().zip(min_abs_list) {
            if lo >= thr && s.ratio > *m {
                *m = s.ratio;
            }
        }
    })?;
    Ok(maxima)
}

/// Bounded symbol for the bilinear pseudoproduct; `psi(xi, zeta)` weights
/// the output frequency `xi` and the first input frequency `zeta`.
pub struct PseudoproductKernel {
    pub psi: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub sup_norm: f64,
}

impl PseudoproductKernel {
    pub fn new(
        sup_norm: f64,
        psi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> PseudoproductKernel {
        PseudoproductKernel {
            psi: Box::new(psi),
            sup_norm,
        }
    }

    pub fn identity() -> PseudoproductKernel {
        PseudoproductKernel::new(1.0, |_, _| 1.0)
    }
}

/// Kernel of the dual identity `<Pi_psi(f,g), h> = <f, Pi_psi1(g,h)>`:
/// `psi1(xi, zeta) = psi(zeta - xi, -xi)`. Derived by substituting
/// frequencies in the convolution; verified by the brute-force duality test.
pub fn dual_kernel_first(
    psi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
) -> impl Fn(f64, f64) -> f64 + Send + Sync + 'static {
    move |xi: f64, zeta: f64| psi(zeta - xi, -xi)
}

/// Kernel of the dual identity `<Pi_psi(f,g), h> = <Pi_psi2(f,h), g>`:
/// `psi2(xi, zeta) = psi(zeta - xi, zeta)` with the same derivation.
pub fn dual_kernel_second(
    psi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
) -> impl Fn(f64, f64) -> f64 + Send + Sync + 'static {
    move |xi: f64, zeta: f64| psi(zeta - xi, zeta)
}

/// Bilinear pseudoproduct: discrete convolution of the spectra weighted by
/// `psi(xi_out, xi_first)`. With `psi == 1` this reproduces the pointwise
/// product exactly (aliased circular convolution, like the product itself).
pub fn pseudoproduct(
    f: &RealField,
    g: &RealField,
    kernel: &PseudoproductKernel,
) -> LabResult<RealField> {
    if !f.grid().same_grid(g.grid()) {
        return Err(LabError::InvalidInput(
            "pseudoproduct requires fields on one grid".into(),
        ));
    }
    let fs = forward_transform(f)?;
    let gs = forward_transform(g)?;
    let n = f.grid().num_points();
    let wavenumbers = f.grid().wavenumbers();
    let mut out = SpectrumField::zeros(f.grid().clone());
    for k in 0..n {
        let xi_out = wavenumbers[k];
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..n {
            let zeta = wavenumbers[m];
            let gm = gs.coeffs()[(k + n - m) % n];
            let w = (kernel.psi)(xi_out, zeta);
            acc += fs.coeffs()[m] * gm * w;
        }
        out.coeffs_mut()[k] = acc / n as f64;
    }
    inverse_transform(&out)
}

/// Space-time lattice parameters for the trilinear support check: space is
/// `[-pi, pi)` with integer wavenumbers, time is one period `[0, 2 pi)` with
/// integer modulation frequencies.
#[derive(Debug, Clone, Copy)]
pub struct TrilinearConfig {
    /// Dyadic spatial shells, `n[0] <= n[1] <= n[2] <= 2 n[1]`.
    pub n: [f64; 3],
    /// Dyadic modulation scales.
    pub l: [f64; 3],
    pub trials: usize,
    pub seed: u64,
}

/// Result of a trilinear scan: the worst normalized integral and the exact
/// number of frequency-modulation combinations compatible with both the
/// shell and zero-sum constraints (the support-arithmetic certificate).
#[derive(Debug, Clone, Copy)]
pub struct TrilinearReport {
    pub max_normalized: f64,
    pub admissible_combos: u64,
}

/// Spatial shell `N/2 <= |xi| <= 2N` on integer wavenumbers.
fn shell_wavenumbers(n_dyadic: f64) -> Vec<i64> {
    let lo = (n_dyadic / 2.0).ceil() as i64;
    let hi = (2.0 * n_dyadic).floor() as i64;
    let mut out = Vec::new();
    for a in lo..=hi {
        if a != 0 {
            out.push(a);
            out.push(-a);
        }
    }
    out
}

/// Integer modulation frequencies with `L/2 <= |tau - w(xi)| <= 2L`.
fn modulation_window(w_xi: f64, l_dyadic: f64) -> Vec<i64> {
    let mut out = Vec::new();
    for sign in [-1.0, 1.0] {
        let lo = w_xi + sign * 2.0 * l_dyadic;
        let hi = w_xi + sign * l_dyadic / 2.0;
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        for t in (lo.ceil() as i64)..=(hi.floor() as i64) {
            let d = (t as f64 - w_xi).abs();
            if d >= l_dyadic / 2.0 && d <= 2.0 * l_dyadic {
                out.push(t);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Counter-based complex amplitude: deterministic in (seed, trial, field,
/// lattice point), so fields need no storage and lookups are O(1).
fn lattice_amplitude(seed: u64, trial: u64, field: u64, k: i64, t: i64) -> Complex64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
    // conjugate symmetry: the k < 0 half mirrors the k > 0 half
    let (kk, tt, conj) = if k < 0 { (-k, -t, true) } else { (k, t, false) };
    let h = splitmix(
        seed ^ splitmix(trial ^ splitmix(field ^ splitmix(kk as u64 ^ splitmix(tt as u64 ^ 0x5bf0)))),
    );
    let phase = (h >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU;
    let mag = 0.5 + ((splitmix(h) >> 11) as f64 / (1u64 << 53) as f64) * 0.5;
    let z = Complex64::from_polar(mag, phase);
    if conj {
        z.conj()
    } else {
        z
    }
}

struct LocalizedField {
    /// (spatial wavenumber, admissible modulation frequencies)
    support: Vec<(i64, Vec<i64>)>,
    n: f64,
    l: f64,
}

impl LocalizedField {
    fn build(fam: &DispersionFamily, n_dyadic: f64, l_dyadic: f64) -> LocalizedField {
        let mut support = Vec::new();
        for k in shell_wavenumbers(n_dyadic) {
            let w = fam.dispersion_symbol(k as f64);
            let taus = modulation_window(w, l_dyadic);
            if !taus.is_empty() {
                support.push((k, taus));
            }
        }
        LocalizedField {
            support,
            n: n_dyadic,
            l: l_dyadic,
        }
    }

    fn contains(&self, fam: &DispersionFamily, k: i64, t: i64) -> bool {
        if k == 0 {
            return false;
        }
        let a = (k as f64).abs();
        if a < self.n / 2.0 || a > 2.0 * self.n {
            return false;
        }
        let d = (t as f64 - fam.dispersion_symbol(k as f64)).abs();
        d >= self.l / 2.0 && d <= 2.0 * self.l
    }

    /// Squared `L^2(dx dt)` norm over one period box `[0, 2pi) x [-pi, pi)`:
    /// the exponentials are orthogonal with weight `volume = (2 pi)^2`.
    fn l2_norm_sq(&self, seed: u64, trial: u64, field: u64) -> f64 {
        let volume = std::f64::consts::TAU * std::f64::consts::TAU;
        volume
            * self
                .support
                .iter()
                .map(|(k, taus)| {
                    taus.iter()
                        .map(|&t| lattice_amplitude(seed, trial, field, *k, t).norm_sqr())
                        .sum::<f64>()
                })
                .sum::<f64>()
    }
}

/// Measure `max_trials |integral| / (||f1|| ||f2|| ||f3||)` for random real
/// space-time fields supported exactly in `{|xi| ~ N_i} ∩ {|tau - w(xi)| ~ L_i}`,
/// with the trilinear integral evaluated as the exact Parseval sum over
/// zero-sum frequency pairs. Below the resonance threshold no zero-sum
/// combination exists and the sum is empty, hence exactly zero.
pub fn trilinear_vanishing_check(
    fam: &DispersionFamily,
    cfg: &TrilinearConfig,
    kernel: &PseudoproductKernel,
) -> LabResult<TrilinearReport> {
    let [n1, n2, n3] = cfg.n;
    if !(n1 <= n2 && n2 <= n3 && n3 <= 2.0 * n2) {
        return Err(LabError::InvalidParameter(format!(
            "shells must satisfy N1 <= N2 <= N3 <= 2 N2, got {:?}",
            cfg.n
        )));
    }
    for &v in cfg.n.iter().chain(cfg.l.iter()) {
        if !crate::littlewood_paley::is_dyadic(v) {
            return Err(LabError::InvalidParameter(format!(
                "shell and modulation scales must be dyadic, got {v}"
            )));
        }
    }
    if cfg.trials == 0 {
        return Err(LabError::InvalidParameter("trials must be > 0".into()));
    }

    let fields: Vec<LocalizedField> = (0..3)
        .map(|i| LocalizedField::build(fam, cfg.n[i], cfg.l[i]))
        .collect();
    if fields.iter().any(|f| f.support.is_empty()) {
        return Err(LabError::InvalidParameter(
            "unresolvable localization: a shell has empty support".into(),
        ));
    }

    // iterate over the two smallest supports, look up the third
    let mut order = [0usize, 1, 2];
    order.sort_by_key(|&i| {
        fields[i]
            .support
            .iter()
            .map(|(_, taus)| taus.len())
            .sum::<usize>()
    });
    let [ia, ib, ic] = order;

    // support-arithmetic certificate, independent of the amplitudes
    let mut admissible: u64 = 0;
    for (ka, taus_a) in &fields[ia].support {
        for (kb, taus_b) in &fields[ib].support {
            let kc = -(ka + kb);
            if kc == 0 {
                continue;
            }
            for &ta in taus_a {
                for &tb in taus_b {
                    if fields[ic].contains(fam, kc, -(ta + tb)) {
                        admissible += 1;
                    }
                }
            }
        }
    }

    // weight of a triple: psi(xi_out of Pi(f1, f2), first input frequency),
    // expressed through the original slot indices
    let weight = |k: [i64; 3]| -> f64 { (kernel.psi)((k[0] + k[1]) as f64, k[0] as f64) };

    let mut max_normalized = 0.0f64;
    for trial in 0..cfg.trials as u64 {
        let mut integral = Complex64::new(0.0, 0.0);
        for (ka, taus_a) in &fields[ia].support {
            for (kb, taus_b) in &fields[ib].support {
                let kc = -(ka + kb);
                if kc == 0 {
                    continue;
                }
                let mut k = [0i64; 3];
                k[ia] = *ka;
                k[ib] = *kb;
                k[ic] = kc;
                let w = weight(k);
                if w == 0.0 {
                    continue;
                }
                for &ta in taus_a {
                    for &tb in taus_b {
                        let tc = -(ta + tb);
                        if fields[ic].contains(fam, kc, tc) {
                            let ca = lattice_amplitude(cfg.seed, trial, ia as u64, *ka, ta);
                            let cb = lattice_amplitude(cfg.seed, trial, ib as u64, *kb, tb);
                            let cc = lattice_amplitude(cfg.seed, trial, ic as u64, kc, tc);
                            integral += ca * cb * cc * w;
                        }
                    }
                }
            }
        }
        let norm_prod: f64 = (0..3u64)
            .map(|i| fields[i as usize].l2_norm_sq(cfg.seed, trial, i).sqrt())
            .product();
        // the zero-sum pairing integrates to the box volume
        let volume = std::f64::consts::TAU * std::f64::consts::TAU;
        let normalized = volume * integral.norm() / norm_prod;
        if normalized > max_normalized {
            max_normalized = normalized;
        }
    }

    Ok(TrilinearReport {
        max_normalized,
        admissible_combos: admissible,
    })
}

/// Resonance-scale threshold `N1 N2^2 + N1^{-2} N2` of the trilinear check.
pub fn trilinear_threshold(n1: f64, n2: f64) -> f64 {
    n1 * n2 * n2 + n2 / (n1 * n1)
}

/// Smallest dyadic `L3` (with `L1 = L2 = l_small`) for which zero-sum
/// combinations exist on the given shells: the measured vanishing onset.
/// Everything strictly below vanishes identically; the onset itself is the
/// first scale whose modulation annulus reaches the resonance values.
pub fn vanishing_onset(
    fam: &DispersionFamily,
    n: [f64; 3],
    l_small: f64,
) -> LabResult<f64> {
    let mut l3 = 1.0f64;
    while l3 <= 2.0f64.powi(40) {
        let cfg = TrilinearConfig {
            n,
            l: [l_small, l_small, l3],
            trials: 1,
            seed: 0,
        };
        let report = trilinear_vanishing_check(fam, &cfg, &PseudoproductKernel::identity())?;
        if report.admissible_combos > 0 {
            return Ok(l3);
        }
        l3 *= 2.0;
    }
    Err(LabError::InvalidParameter(
        "no admissible modulation scale below 2^40".into(),
    ))
}
