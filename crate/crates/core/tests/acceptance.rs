//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails. Runs without the libtest
//! harness so the verdict lines are always visible.

use std::process::ExitCode;
use std::time::Instant;

use overdamped_lab::coupling::{accumulate_a, constant_force_term};
use overdamped_lab::geometry::{PhaseState, TorusPoint, Velocity};
use overdamped_lab::harness::{
    ot_selftest, run_coupling_diagnostics, run_rate_sweep, validate_equilibrium, validate_homogeneous,
    validate_moments, write_csv, ExperimentConfig, ForceConfig, ModelConfig, MomentCase, Report,
};
use overdamped_lab::model::ModelSpec;
use overdamped_lab::sde::noise::{purpose, stream_rng};
use overdamped_lab::sde::{simulate_trajectory, step_size, IntegratorConfig, NoisePath, DEFAULT_H0, DEFAULT_STEP_FACTOR};
use overdamped_lab::Execution;
use rand::Rng;

const SEED: u64 = 20_240_601;

type Criterion = fn() -> anyhow::Result<Outcome>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_report(r: &Report) -> Outcome {
    let failed: Vec<String> = r
        .failures()
        .map(|c| format!("{} = {:.6} > {:.6} ({})", c.name, c.value, c.threshold, c.detail))
        .collect();
    let detail = if failed.is_empty() { format!("{} checks", r.checks.len()) } else { failed.join("; ") };
    Outcome { passed: r.passed(), detail }
}

fn model(force: ForceConfig) -> ModelConfig {
    ModelConfig { force, sigma: None }
}

fn nonequilibrium() -> ModelConfig {
    model(ForceConfig::TiltedCosine { amplitude: 1.0, eta: 1.0 })
}

fn c1_homogeneous() -> anyhow::Result<Outcome> {
    let cfg = ExperimentConfig {
        seed: SEED,
        model: model(ForceConfig::Constant { eta: vec![1.0] }),
        gammas: vec![2.0, 4.0, 8.0, 16.0],
        n: 4096,
        ..ExperimentConfig::default()
    };
    let (report, sweep) = validate_homogeneous(&cfg, Execution::default())?;
    for r in &sweep.rows {
        println!("    gamma {:>4}: W {:.5} ± {:.5}, analytic {:.5}, floor {:.5}", r.gamma, r.w.mean, r.w.se, 1.0 / r.gamma, sweep.floor.mean);
    }
    let mut distance = Report::new("homogeneous-distance");
    for c in report.checks.iter().filter(|c| c.name.ends_with("w_vs_analytic")) {
        distance.push(c.clone());
    }
    for c in report.failures().filter(|c| !c.name.ends_with("w_vs_analytic")) {
        println!("    note: shape check {} failed ({:.5} > {:.5})", c.name, c.value, c.threshold);
    }
    Ok(from_report(&distance))
}

fn c2_equilibrium() -> anyhow::Result<Outcome> {
    let cfg = ExperimentConfig {
        seed: SEED,
        model: model(ForceConfig::Cosine { amplitude: 1.0 }),
        gammas: vec![4.0],
        n: 10_000,
        ..ExperimentConfig::default()
    };
    Ok(from_report(&validate_equilibrium(&cfg, Execution::default())?))
}

fn c3_moments() -> anyhow::Result<Outcome> {
    let models = [
        ("equilibrium", model(ForceConfig::Cosine { amplitude: 1.0 })),
        ("constant", model(ForceConfig::Constant { eta: vec![1.0] })),
        ("mixed", nonequilibrium()),
    ];
    let mut cases = Vec::new();
    for (label, m) in &models {
        for gamma in [2.0, 8.0, 32.0] {
            cases.push(MomentCase { label: label.to_string(), model: m.clone(), gamma });
        }
    }
    let sampler = ExperimentConfig::default().sampler;
    Ok(from_report(&validate_moments(&cases, 4096, &sampler, SEED, Execution::default())?))
}

fn rate_config() -> ExperimentConfig {
    ExperimentConfig {
        seed: SEED,
        model: nonequilibrium(),
        gammas: vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        n: 4096,
        repetitions: 8,
        ..ExperimentConfig::default()
    }
}

fn sweep_csv(dir: &std::path::Path, name: &str) -> anyhow::Result<Vec<u8>> {
    let fit = run_rate_sweep(&rate_config(), Execution::default())?;
    let (header, rows) = fit.csv();
    let path = dir.join(name);
    write_csv(&path, &header, &rows)?;
    Ok(std::fs::read(path)?)
}

fn c4_rate() -> anyhow::Result<Outcome> {
    let fit = run_rate_sweep(&rate_config(), Execution::default())?;
    for r in &fit.rows {
        println!(
            "    gamma {:>4}: W {:.5} ± {:.5} (position {:.5}, velocity {:.5}) included {}",
            r.gamma,
            r.w.mean,
            r.w.se,
            r.w_position.map_or(f64::NAN, |m| m.mean),
            r.w_velocity.map_or(f64::NAN, |m| m.mean),
            r.included
        );
    }
    println!("    bias floor {:.5} ± {:.5}", fit.floor.mean, fit.floor.se);
    if let (Some(f), Some((lo, hi))) = (&fit.fit, fit.slope_ci) {
        println!("    slope {:.4}, 95% CI [{lo:.4}, {hi:.4}], intercept {:.4}", f.slope, f.intercept);
    }
    Ok(from_report(&fit.report()))
}

fn c5_coupling() -> anyhow::Result<Outcome> {
    let mut cfg = ExperimentConfig {
        seed: SEED,
        model: nonequilibrium(),
        gammas: vec![2.0, 4.0, 8.0, 16.0, 32.0],
        ..ExperimentConfig::default()
    };
    cfg.coupling.t = 1.0;
    cfg.coupling.replicas = 2000;
    let d = run_coupling_diagnostics(&cfg, Execution::default())?;
    for s in &d.summaries {
        println!(
            "    gamma {:>4}: e1 {:.5} e2 {:.5} (bound {:.5}) e3 {:.5} max|corr| {:.4}",
            s.gamma, s.e1.mean, s.e2.mean, s.e2_bound, s.e3.mean, s.max_abs_corr
        );
    }
    Ok(from_report(&d.report))
}

fn c6_pathwise() -> anyhow::Result<Outcome> {
    let eta = 1.0;
    let mut worst = 0.0f64;
    for gamma in [2.0, 16.0] {
        let m = ModelSpec::constant_1d(eta, gamma)?;
        let h = step_size(gamma, DEFAULT_H0, DEFAULT_STEP_FACTOR);
        let steps = (gamma / h).round() as usize;
        let mut rng = stream_rng(SEED, purpose::INITIAL, gamma.to_bits());
        for r in 0..100 {
            let path = NoisePath::generate(SEED, r, 1, h, steps);
            let y0 = 4.0 * rng.random::<f64>() - 2.0;
            let init = PhaseState::new(TorusPoint::new(vec![rng.random()])?, Velocity::new(vec![y0])?)?;
            let cfg = IntegratorConfig::new(h, h * steps as f64);
            let out = simulate_trajectory(&m, &cfg, init, &mut path.reader(), None)?.final_state;
            let a = accumulate_a(&m, &path)?[0];
            let drift = constant_force_term(&[eta], gamma, h, steps)[0];
            let decay = (-gamma * h * steps as f64).exp();
            worst = worst.max((out.velocity.coords()[0] - decay * y0 - drift - a).abs());
        }
    }
    Ok(Outcome { passed: worst <= 1e-10, detail: format!("max residual {worst:.3e} over 200 paths (tolerance 1e-10)") })
}

fn c7_ot() -> anyhow::Result<Outcome> {
    Ok(from_report(&ot_selftest(SEED)?))
}

fn c8_determinism() -> anyhow::Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let a = sweep_csv(dir.path(), "first.csv")?;
    let b = sweep_csv(dir.path(), "second.csv")?;
    Ok(Outcome { passed: a == b && !a.is_empty(), detail: format!("{} vs {} bytes, identical: {}", a.len(), b.len(), a == b) })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let criteria: [(&str, Criterion); 8] = [
        ("1 space-homogeneous exactness", c1_homogeneous),
        ("2 equilibrium tensorization", c2_equilibrium),
        ("3 velocity moment bound", c3_moments),
        ("4 rate exponent", c4_rate),
        ("5 coupling diagnostics", c5_coupling),
        ("6 pathwise identity", c6_pathwise),
        ("7 OT self-test", c7_ot),
        ("8 determinism", c8_determinism),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e:#}") });
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {name} [{:.1}s]: {}", start.elapsed().as_secs_f64(), outcome.detail);
        all &= outcome.passed;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
