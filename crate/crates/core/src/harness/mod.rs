//! Experiment configuration, orchestration and result emission.

mod config;
mod diagnostics;
mod fit;
mod output;
mod report;
mod selftest;
mod simulate;
mod sweep;
mod validate;

pub use config::{
    CouplingSection, ExperimentConfig, ForceConfig, ModelConfig, OtMethod, PerturbationConfig, SimulateSection,
};
pub use diagnostics::{run_coupling_diagnostics, CouplingDiagnostics, E1_SLOPE_MAX};
pub use fit::{fit_loglog, percentile_interval, LogLogFit};
pub use output::{write_csv, write_report, Manifest, ReportSummary};
pub use report::{Check, Report};
pub use selftest::{brute_force_assignment, ot_selftest};
pub use simulate::{run_simulate, SimulateOutput};
pub use sweep::{phase_distance, run_rate_sweep, trim_against_floor, RateFit, RateRow, SLOPE_WINDOW};
pub use validate::{moment_check, residual_on_grid, validate_equilibrium, validate_homogeneous, validate_moments, MomentCase};
