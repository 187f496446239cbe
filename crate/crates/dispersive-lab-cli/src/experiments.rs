//! Experiment implementations behind the CLI subcommands.

use std::time::Instant;

use dispersive_lab::evolver::{
    deep_water_compare, run, verify_scaling, EvolutionConfig, Stepper, Termination,
};
use dispersive_lab::inflation_probe::{inflation_scan, AlphaRule, ScanQuadrature};
use dispersive_lab::littlewood_paley::{
    decompose, random_band_limited, resolved_band, square_function_ratio,
};
use dispersive_lab::resonance_lab::{
    bound_scan_samples, trilinear_threshold, trilinear_vanishing_check, vanishing_onset,
    PseudoproductKernel, ScanPlan, TrilinearConfig,
};
use dispersive_lab::spectral_core::{forward_transform, mean_zero_project, Grid, RealField};
use dispersive_lab::LabError;

use crate::config::{Command, ExperimentConfig};
use crate::output::{num, RunRecorder, RunStatus};

pub fn dispatch(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunRecorder, String> {
    let start = Instant::now();
    let mut rec = RunRecorder::new(&cfg.output_dir).map_err(|e| e.to_string())?;
    let result = match cfg.command {
        Command::Simulate => simulate(cfg, &mut rec),
        Command::ResonanceScan => resonance_scan(cfg, &mut rec),
        Command::LpCheck => lp_check(cfg, &mut rec),
        Command::TrilinearCheck => trilinear_check(cfg, &mut rec),
        Command::InflationScan => inflation_scan_cmd(cfg, &mut rec),
        Command::LimitCheck => limit_check(cfg, &mut rec),
        Command::ScalingCheck => scaling_check(cfg, &mut rec),
        Command::Bench => bench(cfg, &mut rec),
    };
    match result {
        Ok(()) => {}
        Err(LabError::Accuracy(msg)) => {
            eprintln!("accuracy error: {msg}");
            rec.status = RunStatus::AccuracyError;
        }
        Err(LabError::Blowup { t_last }) => {
            eprintln!("blow-up detected, last good t = {t_last}");
            rec.status = RunStatus::Blowup;
        }
        Err(other) => return Err(other.to_string()),
    }
    rec.write_manifest(&cfg.echo_json(), start.elapsed().as_secs_f64(), threads)
        .map_err(|e| e.to_string())?;
    Ok(rec)
}

/// Standard smooth mean-zero datum used by the evolution commands.
fn standard_datum(cfg: &ExperimentConfig) -> Result<RealField, LabError> {
    let grid = Grid::new(cfg.grid_n, cfg.grid_l)?;
    let f = RealField::from_fn(grid, |x| {
        0.5 * ((x / 2.0).cosh().powi(-2) - 0.2 * ((x - 3.0) / 3.0).cosh().powi(-2))
    })?;
    Ok(mean_zero_project(&f))
}

fn simulate(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), LabError> {
    let u0 = standard_datum(cfg)?;
    let dt = cfg
        .dt
        .unwrap_or_else(|| EvolutionConfig::default_dt(u0.grid(), &u0));
    let mut ecfg = EvolutionConfig::new(cfg.family, dt, cfg.t_end);
    ecfg.sobolev_s = cfg.s;
    let out = run(&u0, &ecfg)?;
    rec.steps = Some(out.steps_taken);
    rec.write_csv(
        "diagnostics.csv",
        "t,l2,mean_abs,zs,psi4_or_phi4,drift_rel",
        out.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{}",
                num(r.t),
                num(r.l2),
                num(r.mean_abs),
                num(r.zs),
                num(r.invariant4),
                num(r.drift_rel)
            )
        }),
    )
    .map_err(io_err)?;
    if cfg.plots {
        let ts: Vec<f64> = out.rows.iter().map(|r| r.t).collect();
        for (name, values) in [
            ("l2", out.rows.iter().map(|r| r.l2).collect::<Vec<_>>()),
            ("mean_abs", out.rows.iter().map(|r| r.mean_abs).collect()),
            ("zs", out.rows.iter().map(|r| r.zs).collect()),
            ("psi4_or_phi4", out.rows.iter().map(|r| r.invariant4).collect()),
            ("drift_rel", out.rows.iter().map(|r| r.drift_rel).collect()),
        ] {
            rec.write_svg(
                &format!("diagnostics_{name}.svg"),
                &format!("{name} vs t"),
                &ts,
                &values,
            )
            .map_err(io_err)?;
        }
    }
    if let Termination::Blowup { t_last } = out.termination {
        return Err(LabError::Blowup { t_last });
    }
    Ok(())
}

fn resonance_scan(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), LabError> {
    let plan = ScanPlan {
        min_abs: 1.0,
        box_size: 64.0,
        samples: 100_000,
        seed: cfg.seed,
    };
    let mut rows: Vec<String> = Vec::with_capacity(plan.samples);
    let max = bound_scan_samples(&cfg.family, &plan, |s| {
        rows.push(format!(
            "{},{},{},{},{}",
            num(s.xi1),
            num(s.xi2),
            num(s.omega_value),
            num(s.bound_value),
            num(s.ratio)
        ));
    })?;
    rec.write_csv("resonance_scan.csv", "xi1,xi2,omega,bound,ratio", rows.into_iter())
        .map_err(io_err)?;
    rec.write_text(
        "resonance_scan_summary.txt",
        &format!("max ratio over {} samples: {}\n", plan.samples, num(max)),
    )
    .map_err(io_err)?;
    Ok(())
}

fn lp_check(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), LabError> {
    use rand::SeedableRng;
    let grid = Grid::new(cfg.grid_n, cfg.grid_l)?;
    let (lo, hi) = resolved_band(&grid);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for trial in 0..100 {
        let f = random_band_limited(&grid, lo, hi, &mut rng)?;
        let r0 = square_function_ratio(&f, 0.0)?;
        let rs = square_function_ratio(&f, cfg.s)?;
        let d = decompose(&f, lo, hi)?;
        let err = f.l2_distance(&d.reconstruct())? / f.l2();
        rows.push(format!("{trial},{},{},{}", num(r0), num(rs), num(err)));
    }
    rec.write_csv(
        "lp_check.csv",
        "trial,ratio_s0,ratio_s,recon_error",
        rows.into_iter(),
    )
    .map_err(io_err)?;
    Ok(())
}

fn trilinear_check(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), LabError> {
    let kernel = PseudoproductKernel::identity();
    let mut rows = Vec::new();
    for n in [[4.0, 4.0, 4.0], [2.0, 4.0, 4.0], [4.0, 8.0, 8.0]] {
        let onset = vanishing_onset(&cfg.family, n, 1.0)?;
        for (regime, l3) in [("below", onset / 2.0), ("above", onset)] {
            let tc = TrilinearConfig {
                n,
                l: [1.0, 1.0, l3],
                trials: 20,
                seed: cfg.seed,
            };
            let r = trilinear_vanishing_check(&cfg.family, &tc, &kernel)?;
            rows.push(format!(
                "{},{},{},{},{},{},{},{},{},{}",
                n[0],
                n[1],
                n[2],
                num(1.0),
                num(1.0),
                num(l3),
                num(trilinear_threshold(n[0], n[1])),
                r.admissible_combos,
                num(r.max_normalized),
                regime
            ));
        }
    }
    rec.write_csv(
        "trilinear_check.csv",
        "n1,n2,n3,l1,l2,l3,printed_scale,admissible,max_normalized,regime",
        rows.into_iter(),
    )
    .map_err(io_err)?;
    Ok(())
}

fn inflation_scan_cmd(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), LabError> {
    let n_list: Vec<f64> = (4..=9).map(|k| (1u64 << k) as f64).collect();
    let results = inflation_scan(
        cfg.s,
        cfg.family.gamma,
        &n_list,
        AlphaRule::InverseN,
        cfg.t_end,
        &ScanQuadrature::default(),
    )?;
    rec.write_csv(
        "inflation_scan.csv",
        "N,alpha,s,gamma,t,u0_zs,a2_zs,f34_zs,quotient,quotient_f34",
        results.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                num(r.big_n),
                num(r.alpha),
                num(r.s),
                num(r.gamma),
                num(r.t),
                num(r.u0_zs),
                num(r.a2_zs),
                num(r.f34_zs),
                num(r.quotient),
                num(r.quotient_f34)
            )
        }),
    )
    .map_err(io_err)?;
    Ok(())
}

fn limit_check(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), LabError> {
    let u0 = standard_datum(cfg)?;
    let dt = cfg.dt.unwrap_or(1e-3);
    let deltas = [2.0, 4.0, 8.0];
    let diffs = deep_water_compare(&u0, &deltas, cfg.family.gamma, cfg.t_end, dt)?;
    rec.write_csv(
        "limit_check.csv",
        "delta,multiplier_gap_bound,solution_rel_diff",
        deltas.iter().zip(&diffs).map(|(d, diff)| {
            format!("{},{},{}", num(*d), num(2.1 * (-2.0 * d).exp()), num(*diff))
        }),
    )
    .map_err(io_err)?;
    Ok(())
}

fn scaling_check(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), LabError> {
    let u0 = standard_datum(cfg)?;
    let dt = cfg.dt.unwrap_or(1e-3);
    let mut rows = Vec::new();
    for lambda in [0.5, 0.25] {
        let d = verify_scaling(&u0, lambda, cfg.family.gamma, cfg.t_end, dt)?;
        rows.push(format!(
            "{},{},{},{}",
            num(lambda),
            num(cfg.family.gamma),
            num(cfg.t_end),
            num(d)
        ));
    }
    rec.write_csv(
        "scaling_check.csv",
        "lambda,gamma,t,discrepancy",
        rows.into_iter(),
    )
    .map_err(io_err)?;
    Ok(())
}

/// Stepping-kernel benchmark: integrating-factor RK4 steps per second as a
/// function of grid size.
fn bench(cfg: &ExperimentConfig, rec: &mut RunRecorder) -> Result<(), LabError> {
    let mut results = Vec::new();
    for p in 10..=14 {
        let n = 1usize << p;
        let grid = Grid::new(n, cfg.grid_l)?;
        let u0 = mean_zero_project(&RealField::from_fn(grid.clone(), |x| {
            0.5 * (x / 2.0).cosh().powi(-2)
        })?);
        let mut state = forward_transform(&u0)?.coeffs().to_vec();
        let dt = cfg.dt.unwrap_or(1e-4);
        let mut stepper = Stepper::new(grid, &cfg.family, dt, 2.0 / 3.0);
        for _ in 0..3 {
            stepper.step_spectrum(&mut state);
        }
        let mut steps = 0usize;
        let start = Instant::now();
        while start.elapsed().as_secs_f64() < 0.2 || steps < 20 {
            stepper.step_spectrum(&mut state);
            steps += 1;
        }
        let rate = steps as f64 / start.elapsed().as_secs_f64();
        results.push((n, rate));
    }
    let body = format!(
        "{{\n  \"results\": [\n{}\n  ]\n}}\n",
        results
            .iter()
            .map(|(n, r)| format!("    {{\"grid_n\": {n}, \"steps_per_sec\": {r:.1}}}"))
            .collect::<Vec<_>>()
            .join(",\n")
    );
    rec.write_text("bench.json", &body).map_err(io_err)?;
    Ok(())
}

fn io_err(e: std::io::Error) -> LabError {
    LabError::InvalidInput(format!("io error: {e}"))
}
