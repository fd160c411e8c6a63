use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use overdamped_lab::exec::configure_threads;
use overdamped_lab::harness::{
    ot_selftest, run_coupling_diagnostics, run_rate_sweep, run_simulate, validate_equilibrium, validate_homogeneous,
    write_csv, write_report, ExperimentConfig, Manifest, Report,
};
use overdamped_lab::Execution;

#[derive(Parser, Debug)]
#[command(name = "odlab", version, about = "Large-damping Langevin experiments on the torus")]
struct Cli {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample the kinetic stationary law for each γ and check the velocity moment bound.
    Simulate,
    /// Estimate W(μ_γ, μ_O ⊗ g) over the γ list and fit the rate exponent.
    RateSweep,
    /// Check the equilibrium (gradient force) case.
    ValidateEquilibrium,
    /// Check the constant-force case against its analytic law.
    ValidateHomogeneous,
    /// Run the anticipative coupling over the γ list.
    CouplingDiagnostics,
    /// Cross-check the transport solvers.
    OtSelftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::RateSweep => "rate-sweep",
            Command::ValidateEquilibrium => "validate-equilibrium",
            Command::ValidateHomogeneous => "validate-homogeneous",
            Command::CouplingDiagnostics => "coupling-diagnostics",
            Command::OtSelftest => "ot-selftest",
        }
    }
}

struct Run<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl Run<'_> {
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        write_csv(&path, header, rows).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.record_output(&path);
        Ok(())
    }

    fn report(&mut self, name: &str, report: &Report) -> Result<()> {
        let path = self.dir.join(name);
        write_report(&path, report).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.record_output(&path);
        self.manifest.record_report(report);
        for c in report.checks.iter() {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            println!("{verdict} {}: {} (threshold {}) {}", c.name, c.value, c.threshold, c.detail);
        }
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let exec = match cli.threads {
        Some(1) => Execution::Sequential,
        Some(n) => {
            configure_threads(n).map_err(anyhow::Error::msg)?;
            Execution::default()
        }
        None => Execution::default(),
    };
    std::fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let mut run = Run { dir: &cli.out_dir, manifest: Manifest::new(cli.command.name(), &cfg, cli.threads) };

    match cli.command {
        Command::Simulate => {
            let out = run_simulate(&cfg, exec, &cli.out_dir)?;
            run.csv("simulate.csv", &out.header, &out.rows)?;
            for f in &out.sample_files {
                run.manifest.record_output(&cli.out_dir.join(f));
            }
            run.report("simulate_checks.csv", &out.report)?;
        }
        Command::RateSweep => {
            cfg.validate_rate_study()?;
            let fit = run_rate_sweep(&cfg, exec)?;
            let (header, rows) = fit.csv();
            run.csv("rate_sweep.csv", &header, &rows)?;
            run.report("rate_sweep_checks.csv", &fit.report())?;
        }
        Command::ValidateEquilibrium => {
            let report = validate_equilibrium(&cfg, exec)?;
            run.report("validate_equilibrium.csv", &report)?;
        }
        Command::ValidateHomogeneous => {
            let (report, sweep) = validate_homogeneous(&cfg, exec)?;
            let (header, rows) = sweep.csv();
            run.csv("homogeneous_sweep.csv", &header, &rows)?;
            run.report("validate_homogeneous.csv", &report)?;
        }
        Command::CouplingDiagnostics => {
            let diag = run_coupling_diagnostics(&cfg, exec)?;
            let (header, rows) = diag.csv();
            run.csv("coupling_summary.csv", &header, &rows)?;
            run.report("coupling_checks.csv", &diag.report)?;
        }
        Command::OtSelftest => {
            let report = ot_selftest(cfg.seed)?;
            run.report("ot_selftest.csv", &report)?;
        }
    }
    let passed = run.manifest.passed;
    let path = run.manifest.write(&cli.out_dir)?;
    log::info!("manifest written to {}", path.display());
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: one or more checks failed", cli.command.name());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
