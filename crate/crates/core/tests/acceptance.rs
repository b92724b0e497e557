//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run all criteria with `cargo test -p subdiff-core --test acceptance`,
//! or a subset by number, e.g. `... --test acceptance -- 3 9`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::json;
use subdiff_core::analytics::{fk_laplace_check, fk_quadrature, gde_residual, lil_envelope, moment_increment};
use subdiff_core::diagnostics::{
    run_lil_test_from_paths, run_lln_test, run_martingale_suite_from_paths, run_measure_change_test_from_paths,
    run_mixing_test_from_series, run_msd_test, run_stationarity_test_from_series, sample_paths, sample_series,
    LilEnvelopeChoice, LilOptions, MixingOptions, MixingSeries, PathSample, TestReport, WeightMode,
};
use subdiff_core::laplace::{
    inverse_density, invert_laplace, renewal_function, InversionMethod, InversionOptions, TransformHandle,
};
use subdiff_core::rng::ensemble;
use subdiff_core::stats::EstimateWithCI;
use subdiff_core::subdiffusion::{sample_fk_functional, DiffusionSpec, FkOptions};
use subdiff_core::subordinator::{sample_increment, SamplerOptions};
use subdiff_core::{BernsteinSpec, Result};

const SEED: u64 = 20_240_601;
/// Operational-time step of the short-horizon path criteria; the counting
/// inverse overestimates `S` by about `dtau/2`.
const DTAU: f64 = 0.002;
const SIGMA: f64 = 3.0;

fn stable() -> BernsteinSpec {
    BernsteinSpec::stable(0.5).unwrap()
}

fn tempered() -> BernsteinSpec {
    BernsteinSpec::tempered_stable(0.5, 1.0).unwrap()
}

/// Full size, or the reduced size used by the determinism reruns.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Scale {
    Full,
    Reduced,
}

impl Scale {
    fn n(self, full: usize, reduced: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Reduced => reduced,
        }
    }
}

struct Verdict {
    pass: bool,
    detail: String,
    /// Everything the run produced, for the determinism comparison.
    fingerprint: String,
}

impl Verdict {
    fn new(pass: bool, detail: String, fingerprint: String) -> Self {
        Self {
            pass,
            detail,
            fingerprint,
        }
    }
}

fn report_summary(r: &TestReport) -> String {
    let ok = r.checks.iter().filter(|c| c.pass).count();
    format!("{} {:?} {ok}/{}", r.name, r.outcome, r.checks.len())
}

fn fingerprint(reports: &[&TestReport]) -> String {
    reports.iter().map(|r| r.to_json().unwrap()).collect::<Vec<_>>().join("\n")
}

fn bits(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{:016x}", x.to_bits())).collect::<Vec<_>>().join(",")
}

fn within_sigma(est: &EstimateWithCI, reference: f64) -> bool {
    (est.mean - reference).abs() <= SIGMA * est.stderr
}

fn c1_inversion(_: Scale) -> Result<Verdict> {
    let opts = InversionOptions::default();
    let talbot = |f: TransformHandle<'_>, t: f64| invert_laplace(&f, t, InversionMethod::FixedTalbot, &opts);
    let mut pair_err = 0.0f64;
    for t in [0.5, 1.0, 2.0, 5.0] {
        let a = talbot(TransformHandle::analytic(|u: Complex64| 1.0 / u), t)?.value;
        let b = talbot(TransformHandle::analytic(|u: Complex64| 1.0 / (u * u)), t)?.value;
        let c = talbot(TransformHandle::analytic(|u: Complex64| 1.0 / (u + 1.0)), t)?.value;
        pair_err = pair_err.max((a - 1.0).abs()).max((b - t).abs()).max((c - (-t).exp()).abs());
    }
    // f(u) = √(2u): S(t) is the running maximum of a Brownian motion
    let spec = BernsteinSpec::scaled_stable(0.5, 2f64.sqrt())?;
    let mut density_err = 0.0f64;
    let mut values = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        for i in 0..=40 {
            let x = 0.1 * i as f64;
            let v = inverse_density(&spec, x, t)?;
            let exact = (2.0 / (PI * t)).sqrt() * (-x * x / (2.0 * t)).exp();
            density_err = density_err.max((v - exact).abs());
            values.push(v);
        }
    }
    Ok(Verdict::new(
        pair_err <= 1e-8 && density_err <= 1e-6,
        format!("pairs max err {pair_err:.1e} (tol 1e-8), half-normal max err {density_err:.1e} (tol 1e-6)"),
        bits(&values),
    ))
}

fn c2_sampler(scale: Scale) -> Result<Verdict> {
    let n = scale.n(1_000_000, 10_000);
    let mut pass = true;
    let mut detail = Vec::new();
    let mut fp = Vec::new();
    for (name, spec) in [("stable", stable()), ("tempered", tempered())] {
        let draws = ensemble(n, SEED, |_, s| sample_increment(&spec, 1.0, &mut s.clock))?;
        let mut worst: f64 = 0.0;
        for u in [0.5, 1.0, 2.0] {
            let samples: Vec<f64> = draws.iter().map(|t| (-u * t).exp()).collect();
            let est = EstimateWithCI::from_samples(&samples)?;
            let exact = (-spec.eval_exponent(u)?).exp();
            pass &= within_sigma(&est, exact);
            worst = worst.max((est.mean - exact).abs() / est.stderr);
            fp.push(est.mean);
        }
        detail.push(format!("{name} max |z| {worst:.2}"));
    }
    Ok(Verdict::new(pass, format!("{} (tol 3, n={n})", detail.join(", ")), bits(&fp)))
}

fn c3_msd(scale: Scale) -> Result<Verdict> {
    let n = scale.n(100_000, 1_000);
    let times = [0.5, 1.0, 2.0];
    let rs = run_msd_test(&stable(), n, &times, DTAU, SEED)?;
    let rt = run_msd_test(&tempered(), n, &times, DTAU, SEED)?;
    let crossover = renewal_function(&tempered(), 1e3)? / 1e3;
    let cross_ok = (crossover / 2.0 - 1.0).abs() <= 0.05;
    Ok(Verdict::new(
        rs.pass && rt.pass && cross_ok,
        format!(
            "{}; {}; tempered U(1e3)/1e3 = {crossover:.4} (2 ± 5%)",
            report_summary(&rs),
            report_summary(&rt)
        ),
        fingerprint(&[&rs, &rt]),
    ))
}

fn c4_martingale(scale: Scale) -> Result<Verdict> {
    let n = scale.n(100_000, 1_000);
    let times = [0.5, 1.0];
    let spec = tempered();
    let paths = sample_paths(&spec, n, &times, DTAU, false, SEED)?;
    let params = json!({"spec": spec.label(), "n_paths": n, "times": times, "dtau": DTAU});
    let suite = run_martingale_suite_from_paths("martingale", &paths, &times, Some(SEED), params.clone())?;
    // X(t) + 0.2 S(t): same clock, nonzero drift
    let drifted: Vec<PathSample> = paths
        .iter()
        .map(|p| PathSample {
            x: p.x.iter().zip(&p.s).map(|(x, s)| x + 0.2 * s).collect(),
            s: p.s.clone(),
        })
        .collect();
    let control = run_martingale_suite_from_paths("martingale_drift", &drifted, &times, Some(SEED), params)?;
    Ok(Verdict::new(
        suite.pass && !control.pass,
        format!("{}; drift control {}", report_summary(&suite), report_summary(&control)),
        fingerprint(&[&suite, &control]),
    ))
}

fn c5_measure(scale: Scale) -> Result<Verdict> {
    let n = scale.n(100_000, 1_000);
    let spec = tempered();
    let (epsilon, checkpoints) = (0.5, [0.5, 1.0, 2.0]);
    let paths = sample_paths(&spec, n, &checkpoints, DTAU, false, SEED)?;
    let run = |mode: WeightMode| {
        let params = json!({"spec": spec.label(), "n_paths": n, "epsilon": epsilon, "weights": mode});
        run_measure_change_test_from_paths("measure_change", &paths, &checkpoints, epsilon, &checkpoints, mode, Some(SEED), params)
    };
    let weighted = run(WeightMode::Girsanov)?;
    let unit = run(WeightMode::Unit)?;
    Ok(Verdict::new(
        weighted.pass && !unit.pass,
        format!("{}; unweighted control {}", report_summary(&weighted), report_summary(&unit)),
        fingerprint(&[&weighted, &unit]),
    ))
}

fn c6_feynman_kac(scale: Scale) -> Result<Verdict> {
    let n = scale.n(100_000, 1_000);
    let spec = stable();
    let bm = DiffusionSpec::standard_bm(0.0);
    let opts = FkOptions {
        du: 1e-3,
        dtau: DTAU,
        sampler: SamplerOptions::default(),
    };
    type Case = (&'static str, f64, fn(f64) -> f64);
    let cases: [Case; 2] = [("h=0, g=cos", 0.0, f64::cos), ("h=1, g=1", 1.0, |_| 1.0)];
    let mut pass = true;
    let mut detail = Vec::new();
    let mut fp = Vec::new();
    for (label, h, g) in cases {
        let draws = ensemble(n, SEED, |_, s| sample_fk_functional(&bm, &|_| h, &g, &spec, 1.0, &opts, s))?;
        let est = EstimateWithCI::from_samples(&draws)?;
        let quad = fk_quadrature(&spec, h, &g, 0.0, 1.0)?;
        pass &= within_sigma(&est, quad);
        detail.push(format!("{label}: z {:.2}", (est.mean - quad) / est.stderr));
        fp.extend([est.mean, est.stderr]);
    }
    let lap = fk_laplace_check(&spec, 0.0, &f64::cos, 0.0, 1.0)?;
    pass &= lap.rel_diff <= 1e-4;
    detail.push(format!("resolvent rel diff {:.1e} (tol 1e-4)", lap.rel_diff));
    Ok(Verdict::new(pass, detail.join(", "), bits(&fp)))
}

fn c7_gde(_: Scale) -> Result<Verdict> {
    let spec = stable();
    let mut worst = 0.0f64;
    let mut fp = Vec::new();
    for x in [0.5, 1.0, 2.0] {
        for t in [0.5, 1.0, 2.0] {
            let r = gde_residual(&spec, x, t, 1e-2, 256)?;
            worst = worst.max(r.residual.abs());
            fp.push(r.residual);
        }
    }
    Ok(Verdict::new(worst < 1e-3, format!("max residual {worst:.1e} at 9 points (tol 1e-3)"), bits(&fp)))
}

fn c8_lln(scale: Scale) -> Result<Verdict> {
    let n = scale.n(10_000, 200);
    let r = run_lln_test(&stable(), n, &[1e2, 1e3, 1e4], 0.01, SEED)?;
    Ok(Verdict::new(r.pass, report_summary(&r), fingerprint(&[&r])))
}

fn c9_lil(scale: Scale) -> Result<Verdict> {
    let spec = stable();
    let opts = LilOptions::default();
    let LilEnvelopeChoice::Lil(env) = opts.envelope else {
        unreachable!("default envelope is the LIL envelope")
    };
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..=300 {
        let t = 10f64.powf(3.0 + 0.01 * i as f64);
        let g = lil_envelope(&spec, t, env.c, env.gamma)?;
        let r = g / (t.powf(0.25) * t.ln().ln().powf(0.75));
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let spread = hi / lo - 1.0;

    let n = scale.n(1_000, 20);
    let times = opts.grid()?;
    let paths = sample_paths(&spec, n, &times, opts.dtau, false, SEED)?;
    let mut reports = Vec::new();
    for (name, choice) in [
        ("lil", opts.envelope),
        ("lil_linear", LilEnvelopeChoice::Linear),
        ("lil_constant", LilEnvelopeChoice::Constant),
    ] {
        let params = json!({"spec": spec.label(), "n_paths": n, "options": LilOptions { envelope: choice, ..opts }});
        let g = choice.values(&spec, &times)?;
        reports.push(run_lil_test_from_paths(name, &paths, &times, &g, Some(SEED), params)?);
    }
    let pass = spread <= 0.01 && reports[0].pass && !reports[1].pass && !reports[2].pass;
    Ok(Verdict::new(
        pass,
        format!(
            "ratio spread {:.2}% (tol 1%); {}; {}; {}",
            100.0 * spread,
            report_summary(&reports[0]),
            report_summary(&reports[1]),
            report_summary(&reports[2])
        ),
        format!("{}\n{}", bits(&[spread]), fingerprint(&reports.iter().collect::<Vec<_>>())),
    ))
}

fn c10_stationarity_mixing(scale: Scale) -> Result<Verdict> {
    let spec = tempered();
    let n = scale.n(10_000, 200);
    let (len, dtau) = (128, 0.01);
    let series = sample_series(&spec, n, len, dtau, SEED)?;
    let points = [0, 10, 50];
    let params = json!({"spec": spec.label(), "n_series": n, "len": len, "dtau": dtau});
    let stat = run_stationarity_test_from_series("stationarity", &series, &points, spec.mean_t1(), Some(SEED), params.clone())?;

    let mut moment_gap = 0.0f64;
    let mut fp = Vec::new();
    for k in [1, 2] {
        let limit = moment_increment(&spec, 0.0, 0.0, k, true)?;
        for m in [1.0, 4.0, 16.0, 64.0] {
            let v = moment_increment(&spec, 0.0, m, k, false)?;
            fp.push(v);
            if m == 64.0 {
                moment_gap = moment_gap.max((v / limit - 1.0).abs());
            }
        }
    }

    let opts = MixingOptions {
        bootstrap_seed: SEED,
        ..MixingOptions::default()
    };
    let mixing = run_mixing_test_from_series("mixing", &series, &opts, Some(&spec), Some(SEED), params.clone())?;
    // every value equal to the first: as dependent as a series can be
    let frozen: Vec<MixingSeries> = series
        .iter()
        .map(|s| MixingSeries {
            values: vec![s.values[0]; s.values.len()],
            clock_increments: vec![s.clock_increments[0]; s.clock_increments.len()],
        })
        .collect();
    let control = run_mixing_test_from_series("mixing_dependent", &frozen, &opts, Some(&spec), Some(SEED), params)?;
    let pass = stat.pass && moment_gap <= 0.02 && mixing.pass && !control.pass;
    Ok(Verdict::new(
        pass,
        format!(
            "{}; moment gap at n=64 {:.1e} (tol 2e-2); {}; dependent control {}",
            report_summary(&stat),
            moment_gap,
            report_summary(&mixing),
            report_summary(&control)
        ),
        format!("{}\n{}", bits(&fp), fingerprint(&[&stat, &mixing, &control])),
    ))
}

type Criterion = fn(Scale) -> Result<Verdict>;

const CRITERIA: [(&str, Criterion); 10] = [
    ("Laplace inversion exactness", c1_inversion),
    ("sampler Laplace transform", c2_sampler),
    ("mean squared displacement", c3_msd),
    ("martingale suite", c4_martingale),
    ("measure change", c5_measure),
    ("Feynman-Kac", c6_feynman_kac),
    ("generalized diffusion equation", c7_gde),
    ("law of large numbers", c8_lln),
    ("law of the iterated logarithm", c9_lil),
    ("stationarity and mixing", c10_stationarity_mixing),
];

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

/// Reruns every criterion at reduced size on 1 and on 3 workers.
fn c11_determinism(_: Scale) -> Result<Verdict> {
    let mut differing = Vec::new();
    for (i, (_, run)) in CRITERIA.iter().enumerate() {
        let one = with_workers(1, || run(Scale::Reduced))?.fingerprint;
        let three = with_workers(3, || run(Scale::Reduced))?.fingerprint;
        if one != three {
            differing.push(i + 1);
        }
    }
    Ok(Verdict::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!("criteria 1-{} identical on 1 and 3 workers", CRITERIA.len())
        } else {
            format!("outputs differ for criteria {differing:?}")
        },
        String::new(),
    ))
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let all: Vec<(&str, Criterion)> = CRITERIA
        .iter()
        .copied()
        .chain([("determinism across worker counts", c11_determinism as Criterion)])
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (title, run)) in all.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = match run(Scale::Full) {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {title} [{:.1}s]: {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
