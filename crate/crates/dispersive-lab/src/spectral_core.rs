//! Periodic grids, Fourier transforms and Sobolev-type norms.
//!
//! The real line is truncated to the torus `[-L, L)` sampled at `n`
//! equispaced points, so the resolved wavenumbers are `xi_k = pi k / L`
//! for `k = -n/2 .. n/2 - 1`. The forward transform is the plain
//! (unnormalized) DFT sum and the inverse carries the `1/n` factor; all
//! Parseval weights in the crate are derived from that convention:
//!
//! ```text
//! integral |f|^2 dx  =  (dx / n) * sum_k |f_hat(xi_k)|^2
//! ```

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{LabError, LabResult};

/// Tolerance used when deciding whether a field is mean-zero: the zero-mode
/// coefficient must be below `1e-12` of the l2 size of the spectrum.
pub const MEAN_ZERO_REL_TOL: f64 = 1e-12;

pub(crate) type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

pub(crate) fn plan_pair(n: usize) -> PlanPair {
    static PLANS: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (
                planner.plan_fft(n, FftDirection::Forward),
                planner.plan_fft(n, FftDirection::Inverse),
            )
        })
        .clone()
}

/// Equispaced periodic grid on `[-L, L)`.
#[derive(Debug, Clone)]
pub struct Grid {
    num_points: usize,
    half_length: f64,
    dx: f64,
    /// Wavenumbers in FFT layout: index `j` holds `pi*k/L` with
    /// `k = j` for `j < n/2` and `k = j - n` otherwise, so the single
    /// Nyquist entry sits at index `n/2`.
    wavenumbers: Vec<f64>,
}

impl Grid {
    /// Build a grid with `num_points` collocation points (a power of two,
    /// at least 8) on `[-half_length, half_length)`.
    pub fn new(num_points: usize, half_length: f64) -> LabResult<Arc<Grid>> {
        if num_points < 8 || !num_points.is_power_of_two() {
            return Err(LabError::InvalidParameter(format!(
                "num_points must be a power of two >= 8, got {num_points}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        let n = num_points;
        let dxi = std::f64::consts::PI / half_length;
        let wavenumbers = (0..n)
            .map(|j| {
                let k = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                k as f64 * dxi
            })
            .collect();
        Ok(Arc::new(Grid {
            num_points,
            half_length,
            dx: 2.0 * half_length / n as f64,
            wavenumbers,
        }))
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Wavenumber spacing `pi / L`.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    /// Largest resolved magnitude `pi (n/2) / L` (the Nyquist mode).
    pub fn nyquist(&self) -> f64 {
        self.dxi() * (self.num_points / 2) as f64
    }

    /// Wavenumbers in FFT layout (index `n/2` is the Nyquist entry).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Collocation points `-L + j dx`.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.num_points).map(move |j| -self.half_length + j as f64 * self.dx)
    }

    /// Parseval weight per mode for this transform convention.
    pub fn parseval_weight(&self) -> f64 {
        self.dx / self.num_points as f64
    }

    /// Index of the conjugate mode `-xi_j` (the Nyquist entry maps to itself).
    pub fn conjugate_index(&self, j: usize) -> usize {
        if j == 0 {
            0
        } else {
            self.num_points - j
        }
    }

    pub fn same_grid(&self, other: &Grid) -> bool {
        self.num_points == other.num_points && self.half_length == other.half_length
    }
}

/// Real-valued samples on a grid.
#[derive(Debug, Clone)]
pub struct RealField {
    grid: Arc<Grid>,
    samples: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Arc<Grid>, samples: Vec<f64>) -> LabResult<RealField> {
        if samples.len() != grid.num_points() {
            return Err(LabError::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.num_points(),
                samples.len()
            )));
        }
        if !samples.iter().all(|s| s.is_finite()) {
            return Err(LabError::InvalidInput(
                "samples contain a non-finite value".into(),
            ));
        }
        Ok(RealField { grid, samples })
    }

    pub fn zeros(grid: Arc<Grid>) -> RealField {
        let n = grid.num_points();
        RealField {
            grid,
            samples: vec![0.0; n],
        }
    }

    /// Sample a closure at the collocation points.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> LabResult<RealField> {
        let samples = grid.points().map(f).collect();
        RealField::new(grid, samples)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    /// Discrete `L^2(dx)` norm.
    pub fn l2(&self) -> f64 {
        (self.grid.dx() * self.samples.iter().map(|s| s * s).sum::<f64>()).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// Mean value over the period.
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// `L^2` distance to another field on the same grid.
    pub fn l2_distance(&self, other: &RealField) -> LabResult<f64> {
        if !self.grid.same_grid(other.grid()) {
            return Err(LabError::InvalidInput("grid mismatch".into()));
        }
        let sum: f64 = self
            .samples
            .iter()
            .zip(other.samples())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((self.grid.dx() * sum).sqrt())
    }
}

/// Complex Fourier coefficients on a grid, in FFT layout.
#[derive(Debug, Clone)]
pub struct SpectrumField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectrumField {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> LabResult<SpectrumField> {
        if coeffs.len() != grid.num_points() {
            return Err(LabError::InvalidInput(format!(
                "expected {} coefficients, got {}",
                grid.num_points(),
                coeffs.len()
            )));
        }
        Ok(SpectrumField { grid, coeffs })
    }

    pub fn zeros(grid: Arc<Grid>) -> SpectrumField {
        let n = grid.num_points();
        SpectrumField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Worst relative deviation from the conjugate symmetry
    /// `coeff(-xi) = conj(coeff(xi))`, normalized by the largest magnitude.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.grid.num_points();
        let scale = self
            .coeffs
            .iter()
            .fold(0.0f64, |m, c| m.max(c.norm()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for j in 1..n / 2 {
            let defect = (self.coeffs[j].conj() - self.coeffs[n - j]).norm();
            worst = worst.max(defect / scale);
        }
        worst.max(self.coeffs[0].im.abs() / scale)
    }

    /// Zero-mode magnitude relative to the l2 size of the spectrum.
    pub fn zero_mode_rel(&self) -> f64 {
        let l2 = self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if l2 == 0.0 {
            0.0
        } else {
            self.coeffs[0].norm() / l2
        }
    }
}

/// Unnormalized forward DFT of a real field.
pub fn forward_transform(f: &RealField) -> LabResult<SpectrumField> {
    // RealField construction already guarantees finite samples; re-check is
    // cheap and keeps the contract local.
    if !f.samples().iter().all(|s| s.is_finite()) {
        return Err(LabError::InvalidInput(
            "samples contain a non-finite value".into(),
        ));
    }
    let mut buf: Vec<Complex64> = f
        .samples()
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    let (fwd, _) = plan_pair(buf.len());
    fwd.process(&mut buf);
    SpectrumField::new(f.grid().clone(), buf)
}

/// Inverse DFT (carries the `1/n` factor); returns the real part.
pub fn inverse_transform(s: &SpectrumField) -> LabResult<RealField> {
    let n = s.grid().num_points();
    let mut buf = s.coeffs().to_vec();
    let (_, inv) = plan_pair(n);
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    let samples: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();
    RealField::new(s.grid().clone(), samples)
}

/// Project onto the mean-zero subspace by subtracting the mean.
pub fn mean_zero_project(f: &RealField) -> RealField {
    let mean = f.mean();
    let samples = f.samples().iter().map(|s| s - mean).collect();
    RealField {
        grid: f.grid().clone(),
        samples,
    }
}

/// Norms of a field: `L^2`, `H^s`, antiderivative `L^2` and their `Z^s` sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    pub hs: f64,
    pub antideriv_l2: f64,
    pub zs: f64,
}

/// `Z^s` norm report of a mean-zero field: `hs` is the `H^s` norm
/// (`<xi>^s` weight), `antideriv_l2` the `L^2` norm of the antiderivative
/// (`1/|xi|` weight over nonzero modes) and `zs` their sum.
///
/// Fails with a domain error when the field is not mean-zero, since the
/// antiderivative is undefined there.
pub fn zs_norm(f: &RealField, s: f64) -> LabResult<NormReport> {
    if !s.is_finite() {
        return Err(LabError::InvalidParameter("s must be finite".into()));
    }
    let spec = forward_transform(f)?;
    zs_norm_spectrum(&spec, s)
}

/// Same as [`zs_norm`] but starting from an existing spectrum.
pub fn zs_norm_spectrum(spec: &SpectrumField, s: f64) -> LabResult<NormReport> {
    if spec.zero_mode_rel() > MEAN_ZERO_REL_TOL {
        return Err(LabError::Domain(format!(
            "field is not mean-zero (relative zero mode {:.3e}); antiderivative undefined",
            spec.zero_mode_rel()
        )));
    }
    let w = spec.grid().parseval_weight();
    let mut l2_sq = 0.0;
    let mut hs_sq = 0.0;
    let mut anti_sq = 0.0;
    for (&xi, c) in spec.grid().wavenumbers().iter().zip(spec.coeffs()) {
        let p = c.norm_sqr();
        l2_sq += p;
        hs_sq += (1.0 + xi * xi).powf(s) * p;
        if xi != 0.0 {
            anti_sq += p / (xi * xi);
        }
    }
    let hs = (w * hs_sq).sqrt();
    let antideriv_l2 = (w * anti_sq).sqrt();
    Ok(NormReport {
        l2: (w * l2_sq).sqrt(),
        hs,
        antideriv_l2,
        zs: hs + antideriv_l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn cos_field(n: usize, l: f64) -> RealField {
        let grid = Grid::new(n, l).unwrap();
        RealField::from_fn(grid, |x| x.cos()).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(100, PI).is_err());
        assert!(Grid::new(4, PI).is_err());
        assert!(Grid::new(64, -1.0).is_err());
        assert!(Grid::new(64, f64::NAN).is_err());
    }

    #[test]
    fn wavenumbers_symmetric_except_nyquist() {
        let grid = Grid::new(64, 2.0 * PI).unwrap();
        let mut ws: Vec<f64> = grid.wavenumbers().to_vec();
        ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // sorted order is -Nyq, ..., 0, ..., Nyq - dxi
        assert_eq!(ws[0], -grid.nyquist());
        for j in 1..ws.len() {
            let partner = ws[ws.len() - j];
            assert_eq!(ws[j], -partner);
        }
        assert!((grid.dx() * grid.num_points() as f64 - 2.0 * grid.half_length()).abs() < 1e-15);
    }

    #[test]
    fn transform_of_zero_is_zero() {
        let grid = Grid::new(32, PI).unwrap();
        let f = RealField::zeros(grid);
        let s = forward_transform(&f).unwrap();
        assert!(s.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn transform_of_cosine_has_two_modes() {
        let f = cos_field(64, PI);
        let s = forward_transform(&f).unwrap();
        let n = 64;
        for (j, c) in s.coeffs().iter().enumerate() {
            let mag = c.norm();
            if j == 1 || j == n - 1 {
                // cos x = (e^{ix} + e^{-ix})/2 and the forward sum is
                // unnormalized, so each mode carries n/2.
                assert!((mag - n as f64 / 2.0).abs() < 1e-10, "j={j} mag={mag}");
            } else {
                assert!(mag < 1e-10, "j={j} mag={mag}");
            }
        }
        assert!((s.coeffs()[1].conj() - s.coeffs()[n - 1]).norm() < 1e-12);
    }

    #[test]
    fn round_trip_is_identity_across_sizes() {
        for p in 4..=14 {
            let n = 1usize << p;
            let grid = Grid::new(n, 8.0 * PI).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7 + p as u64);
            // smooth random field: a few low modes with random amplitudes
            let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = RealField::from_fn(grid, |x| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k as f64 + 1.0) * x / 8.0).cos())
                    .sum()
            })
            .unwrap();
            let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
            let err = f.l2_distance(&back).unwrap() / f.l2().max(1e-300);
            assert!(err < 1e-12, "n={n} round trip err {err}");
        }
    }

    #[test]
    fn non_finite_samples_rejected() {
        let grid = Grid::new(16, PI).unwrap();
        assert!(RealField::new(grid, vec![f64::NAN; 16]).is_err());
    }

    #[test]
    fn mean_zero_project_examples() {
        let grid = Grid::new(64, PI).unwrap();
        // constant field -> zero field
        let c = RealField::from_fn(grid.clone(), |_| 5.0).unwrap();
        let p = mean_zero_project(&c);
        assert!(p.linf() == 0.0);
        // cos(x) unchanged
        let f = cos_field(64, PI);
        let p = mean_zero_project(&f);
        assert!(f.l2_distance(&p).unwrap() < 1e-13);
        // cos(x) + 5 -> cos(x)
        let g = RealField::from_fn(grid, |x| x.cos() + 5.0).unwrap();
        let p = mean_zero_project(&g);
        assert!(p.l2_distance(&f).unwrap() < 1e-12);
        let spec = forward_transform(&p).unwrap();
        assert!(spec.zero_mode_rel() < 1e-14);
    }

    #[test]
    fn zs_norm_zero_field() {
        let grid = Grid::new(32, PI).unwrap();
        let r = zs_norm(&RealField::zeros(grid), 1.5).unwrap();
        assert_eq!(r.l2, 0.0);
        assert_eq!(r.zs, 0.0);
    }

    #[test]
    fn zs_norm_cosine_hand_values() {
        // f = cos x on L = pi: only |xi| = 1 modes, so for s = 0 the H^s,
        // antiderivative and L^2 norms coincide. Hand value: l2^2 = pi.
        let f = cos_field(256, PI);
        let r = zs_norm(&f, 0.0).unwrap();
        assert!((r.l2 * r.l2 - PI).abs() < 1e-12);
        assert!((r.hs - r.l2).abs() < 1e-13);
        assert!((r.antideriv_l2 - r.l2).abs() < 1e-13);
        assert_eq!(r.zs, r.hs + r.antideriv_l2);
    }

    #[test]
    fn zs_norm_rejects_nonzero_mean() {
        let grid = Grid::new(32, PI).unwrap();
        let f = RealField::from_fn(grid, |x| 1.0 + x.cos()).unwrap();
        match zs_norm(&f, 0.0) {
            Err(LabError::Domain(_)) => {}
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Parseval: physical-side and spectral-side L^2 agree.
        #[test]
        fn parseval_identity(seed in 0u64..1000) {
            let grid = Grid::new(128, 4.0 * PI).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = RealField::new(grid, samples).unwrap();
            let spec = forward_transform(&f).unwrap();
            let w = spec.grid().parseval_weight();
            let spectral: f64 = w * spec.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
            let physical = f.l2() * f.l2();
            prop_assert!((physical - spectral).abs() <= 1e-10 * physical.max(1e-300));
        }

        /// zs additivity holds exactly as computed.
        #[test]
        fn zs_additivity(seed in 0u64..1000, s in -2.0f64..2.0) {
            let grid = Grid::new(64, 2.0 * PI).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = mean_zero_project(&RealField::new(grid, samples).unwrap());
            let r = zs_norm(&f, s).unwrap();
            prop_assert_eq!(r.zs, r.hs + r.antideriv_l2);
        }
    }
}
