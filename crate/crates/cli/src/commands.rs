use std::str::FromStr;

use serde_json::json;
use subdiff_core::analytics::{
    fk_quadrature, joint_laplace_with, laplace_s_at_with_error, laplace_s_transform, lil_envelope, moment_increment,
    subordinated_density, JointOptions, LilEnvelope,
};
use subdiff_core::diagnostics::{
    run_lil_test, run_lln_test, run_martingale_suite, run_measure_change_test, run_mixing_test, run_msd_test,
    run_stationarity_test, LilEnvelopeChoice, LilOptions, MixingOptions, Outcome, TestReport, WeightMode,
};
use subdiff_core::laplace::{
    inverse_density_with_error, memory_kernel_with, method_for, renewal_function_with, InversionOptions,
};
use subdiff_core::rng::ensemble;
use subdiff_core::stats::EstimateWithCI;
use subdiff_core::subdiffusion::{sample_clocked_path, sample_fk_functional, DiffusionSpec, FkOptions, ScalarFn};
use subdiff_core::subordinator::{simulate_path_with, SamplerOptions};
use subdiff_core::BernsteinSpec;

use crate::config::{apply_override, load_table, resolve, SimConfig};
use crate::output::{num, opt_num, write_file, CliError, Table};
use crate::{CommonArgs, DiagnoseTest, OracleMode, Process, EXIT_FAIL, EXIT_INCONCLUSIVE};

pub fn resolve_config(args: &CommonArgs) -> Result<SimConfig, CliError> {
    let mut table = load_table(args.config.as_deref())?;
    let mut flags: Vec<String> = Vec::new();
    if let Some(s) = args.seed {
        flags.push(format!("seed={s}"));
    }
    if let Some(k) = &args.kind {
        flags.push(format!("spec.kind=\"{k}\""));
    }
    if let Some(a) = args.alpha {
        flags.push(format!("spec.alpha={a:?}"));
    }
    if let Some(l) = args.temper {
        flags.push(format!("spec.temper={l:?}"));
    }
    if let Some(n) = args.n_paths {
        flags.push(format!("run.n_paths={n}"));
    }
    if let Some(d) = args.dtau {
        flags.push(format!("run.dtau={d:?}"));
    }
    if !args.times.is_empty() {
        let list: Vec<String> = args.times.iter().map(|t| format!("{t:?}")).collect();
        flags.push(format!("run.times=[{}]", list.join(",")));
    }
    for assignment in flags.iter().chain(&args.set) {
        apply_override(&mut table, assignment)?;
    }
    let mut cfg = resolve(table)?;
    if let Some(dir) = &args.output_dir {
        cfg.io.output_dir = dir.clone();
    }
    Ok(cfg)
}

/// Writes a table (or prints it) and reports where it went.
fn emit(cfg: &SimConfig, command: &str, table: &Table) -> Result<u8, CliError> {
    let csv = table.to_csv()?;
    if cfg.io.stdout_only {
        print!("{csv}");
    } else {
        let path = write_file(&cfg.io.output_dir, &format!("{command}.csv"), &csv)?;
        println!("{command}: {} rows -> {}", table.len(), path.display());
    }
    Ok(0)
}

fn sampler(cfg: &SimConfig) -> SamplerOptions {
    SamplerOptions {
        cutoff: cfg.run.cutoff,
        ..SamplerOptions::default()
    }
}

fn scalar_fn(key: &str, text: &str) -> Result<ScalarFn, CliError> {
    ScalarFn::from_str(text).map_err(|e| CliError::Usage(format!("{key}: {e}")))
}

pub fn exponent(cfg: &SimConfig, u: &[f64]) -> Result<u8, CliError> {
    let spec = cfg.bernstein()?;
    for &v in u {
        println!("{}", spec.eval_exponent(v)?);
    }
    Ok(0)
}

pub fn density(cfg: &SimConfig, x: &[f64]) -> Result<u8, CliError> {
    let spec = cfg.bernstein()?;
    let xs = if x.is_empty() { &cfg.run.x } else { x };
    let mut table = Table::new(&["t", "x", "value", "err_estimate"]);
    for t in cfg.run.time_points()? {
        for &xv in xs {
            let inv = inverse_density_with_error(&spec, xv, t)?;
            table.row(vec![num(t), num(xv), num(inv.value), num(inv.err_estimate)]);
        }
    }
    emit(cfg, "density", &table)
}

pub fn kernel(cfg: &SimConfig) -> Result<u8, CliError> {
    let spec = cfg.bernstein()?;
    let method = method_for(&spec);
    let opts = InversionOptions::default();
    let mut table = Table::new(&["quantity", "t", "x", "value", "err_estimate"]);
    for t in cfg.run.time_points()? {
        let m = memory_kernel_with(&spec, t, method, &opts)?;
        table.row(vec!["memory_kernel".into(), num(t), String::new(), num(m.value), num(m.err_estimate)]);
        let u = renewal_function_with(&spec, t, method, &opts)?;
        table.row(vec!["renewal".into(), num(t), String::new(), num(u.value), num(u.err_estimate)]);
    }
    emit(cfg, "kernel", &table)
}

pub fn simulate(cfg: &SimConfig, process: Process) -> Result<u8, CliError> {
    let spec = cfg.bernstein()?;
    let opts = sampler(cfg);
    let times = cfg.run.time_points()?;
    let paths = ensemble(cfg.run.n_paths, cfg.seed, |_, streams| {
        Ok(match process {
            Process::T => {
                let horizon = *times.last().expect("time points are nonempty");
                let p = simulate_path_with(&spec, horizon, cfg.run.dtau, &opts, &mut streams.clock)?;
                (p.grid, p.values)
            }
            Process::X | Process::S => {
                let p = sample_clocked_path(&spec, &times, cfg.run.dtau, cfg.run.stationary, &opts, streams)?;
                let grid = if process == Process::X { p.x } else { p.s };
                (grid.grid, grid.values)
            }
        })
    })?;
    let mut table = Table::new(&["path_id", "clock", "value"]);
    for (i, (grid, values)) in paths.iter().enumerate() {
        for (c, v) in grid.iter().zip(values) {
            table.row(vec![i.to_string(), num(*c), num(*v)]);
        }
    }
    emit(cfg, "simulate", &table)
}

pub fn oracle(cfg: &SimConfig, mode: OracleMode) -> Result<u8, CliError> {
    let spec = cfg.bernstein()?;
    let t = &cfg.test;
    let times = cfg.run.time_points()?;
    let (name, table) = match mode {
        OracleMode::Laplace => {
            let mut table = Table::new(&["theta", "tau", "stationary", "value", "err_estimate"]);
            for &tau in &times {
                let inv = if cfg.run.stationary {
                    laplace_s_transform(&spec, t.theta, tau, true)?
                } else {
                    laplace_s_at_with_error(&spec, t.theta, tau)?
                };
                table.row(vec![
                    num(t.theta),
                    num(tau),
                    cfg.run.stationary.to_string(),
                    num(inv.value),
                    num(inv.err_estimate),
                ]);
            }
            ("oracle_laplace", table)
        }
        OracleMode::Joint => {
            let j = joint_laplace_with(&spec, &t.thetas, &t.taus, cfg.run.stationary, &JointOptions::default())?;
            let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";");
            let mut table = Table::new(&["thetas", "taus", "stationary", "value", "err_estimate"]);
            table.row(vec![
                join(&t.thetas),
                join(&t.taus),
                cfg.run.stationary.to_string(),
                num(j.value),
                num(j.err_estimate),
            ]);
            ("oracle_joint", table)
        }
        OracleMode::Moments => {
            let v = moment_increment(&spec, t.z, t.n, t.k, t.stationary_limit)?;
            let mut table = Table::new(&["z", "n", "k", "stationary_limit", "value", "err_estimate"]);
            table.row(vec![
                num(t.z),
                num(t.n),
                t.k.to_string(),
                t.stationary_limit.to_string(),
                num(v),
                String::new(),
            ]);
            ("oracle_moments", table)
        }
        OracleMode::Density => {
            let mut table = Table::new(&["t", "x", "value", "err_estimate"]);
            for &tv in &times {
                for &x in &cfg.run.x {
                    table.row(vec![num(tv), num(x), num(subordinated_density(&spec, x, tv)?), String::new()]);
                }
            }
            ("oracle_density", table)
        }
        OracleMode::Fk => {
            let h = scalar_fn("test.h", &t.h)?;
            let g = scalar_fn("test.g", &t.g)?;
            let h_const = h
                .as_constant()
                .ok_or_else(|| CliError::Usage("the Feynman-Kac oracle needs a constant test.h".into()))?;
            let mut table = Table::new(&["h", "g", "x0", "t", "value", "err_estimate"]);
            for &tv in &times {
                let v = fk_quadrature(&spec, h_const, &|x| g.eval(x), t.x0, tv)?;
                table.row(vec![h.to_string(), g.to_string(), num(t.x0), num(tv), num(v), String::new()]);
            }
            ("oracle_fk", table)
        }
        OracleMode::Lil => {
            let mut table = Table::new(&["t", "c", "gamma", "value", "err_estimate"]);
            for &tv in &times {
                let g = lil_envelope(&spec, tv, t.c, t.gamma)?;
                table.row(vec![num(tv), num(t.c), num(t.gamma), num(g), String::new()]);
            }
            ("oracle_lil", table)
        }
    };
    emit(cfg, name, &table)
}

pub fn fk(cfg: &SimConfig) -> Result<u8, CliError> {
    let spec = cfg.bernstein()?;
    let t = &cfg.test;
    let dspec = DiffusionSpec {
        drift: scalar_fn("test.drift", &t.drift)?,
        vol: scalar_fn("test.vol", &t.vol)?,
        x0: t.x0,
    };
    let h = scalar_fn("test.h", &t.h)?;
    let g = scalar_fn("test.g", &t.g)?;
    let opts = FkOptions {
        du: cfg.run.du,
        dtau: cfg.run.dtau,
        sampler: sampler(cfg),
    };
    // the quadrature oracle covers standard Brownian motion with constant h
    let oracle_applies = dspec.drift.as_constant() == Some(0.0) && dspec.vol.as_constant() == Some(1.0);
    let mut table = Table::new(&["t", "estimate", "stderr", "oracle_value"]);
    for tv in cfg.run.time_points()? {
        let draws = ensemble(cfg.run.n_paths, cfg.seed, |_, streams| {
            sample_fk_functional(&dspec, &|x| h.eval(x), &|x| g.eval(x), &spec, tv, &opts, streams)
        })?;
        let est = EstimateWithCI::from_samples(&draws)?;
        let oracle = match h.as_constant() {
            Some(hc) if oracle_applies => Some(fk_quadrature(&spec, hc, &|x| g.eval(x), t.x0, tv)?),
            _ => None,
        };
        table.row(vec![num(tv), num(est.mean), num(est.stderr), opt_num(oracle)]);
    }
    emit(cfg, "fk", &table)
}

fn weight_mode(text: &str) -> Result<WeightMode, CliError> {
    match text {
        "girsanov" => Ok(WeightMode::Girsanov),
        "unit" => Ok(WeightMode::Unit),
        other => Err(CliError::Usage(format!("test.weights: expected girsanov or unit, got `{other}`"))),
    }
}

fn envelope_choice(cfg: &SimConfig) -> Result<LilEnvelopeChoice, CliError> {
    match cfg.test.envelope.as_str() {
        "lil" => Ok(LilEnvelopeChoice::Lil(LilEnvelope::new(cfg.test.c, cfg.test.gamma)?)),
        "linear" => Ok(LilEnvelopeChoice::Linear),
        "constant" => Ok(LilEnvelopeChoice::Constant),
        other => Err(CliError::Usage(format!("test.envelope: expected lil, linear or constant, got `{other}`"))),
    }
}

fn run_test(cfg: &SimConfig, spec: &BernsteinSpec, test: DiagnoseTest) -> Result<TestReport, CliError> {
    let r = &cfg.run;
    let t = &cfg.test;
    let report = match test {
        DiagnoseTest::Martingale => run_martingale_suite(spec, r.n_paths, &r.time_points()?, r.dtau, cfg.seed)?,
        DiagnoseTest::Measure => run_measure_change_test(
            spec,
            r.n_paths,
            t.epsilon,
            r.horizon,
            &t.checkpoints,
            r.dtau,
            weight_mode(&t.weights)?,
            cfg.seed,
        )?,
        DiagnoseTest::Lln => run_lln_test(spec, r.n_paths, &t.lln_times, r.dtau, cfg.seed)?,
        DiagnoseTest::Lil => {
            let opts = LilOptions {
                start: t.lil_start,
                horizon: t.lil_horizon,
                points_per_decade: t.points_per_decade,
                envelope: envelope_choice(cfg)?,
                dtau: r.dtau,
            };
            run_lil_test(spec, r.n_paths, &opts, cfg.seed)?
        }
        DiagnoseTest::Msd => run_msd_test(spec, r.n_paths, &r.time_points()?, r.dtau, cfg.seed)?,
        DiagnoseTest::Mixing => {
            let opts = MixingOptions {
                lags: t.lags.clone(),
                a_grid: t.a_grid.iter().map(|&[a1, a2]| (a1, a2)).collect(),
                bootstrap_resamples: t.bootstrap_resamples,
                bootstrap_seed: cfg.seed,
            };
            run_mixing_test(spec, r.n_series, r.series_len, &opts, r.dtau, cfg.seed)?
        }
        DiagnoseTest::Stationarity => run_stationarity_test(spec, r.n_series, &t.points, r.dtau, cfg.seed)?,
    };
    Ok(report)
}

pub fn diagnose(cfg: &SimConfig, test: DiagnoseTest) -> Result<u8, CliError> {
    let spec = cfg.bernstein()?;
    let report = run_test(cfg, &spec, test)?;
    let params = json!({ "config": cfg.to_json(), "test": report.params });
    let report = report.with_params(params);
    let json = report.to_json()?;
    let location = if cfg.io.stdout_only {
        println!("{json}");
        None
    } else {
        Some(write_file(&cfg.io.output_dir, &format!("{}.json", test.name()), &format!("{json}\n"))?)
    };
    let passed = report.checks.iter().filter(|c| c.pass).count();
    let verdict = match report.outcome {
        Outcome::Pass => "PASS",
        Outcome::Fail => "FAIL",
        Outcome::Inconclusive => "INCONCLUSIVE",
    };
    let dest = location.map(|p| format!(" -> {}", p.display())).unwrap_or_default();
    println!("{}: {verdict} ({passed}/{} checks){dest}", report.name, report.checks.len());
    Ok(match report.outcome {
        Outcome::Pass => 0,
        Outcome::Fail => EXIT_FAIL,
        Outcome::Inconclusive => EXIT_INCONCLUSIVE,
    })
}
