//! Experiment driver for the `adfilter` simulator: parameter sweeps written
//! as CSV or JSON, and a single-state demonstration.

pub mod args;
pub mod config;
pub mod output;
pub mod sweep;

pub use args::run;
pub use config::{ExperimentConfig, Overrides, Scheme};
pub use sweep::{cmd_bell_demo, cmd_ideal, cmd_scheme_a, cmd_scheme_b, BellReport, SweepRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid arguments: {0}")]
    Usage(#[from] clap::Error),
    #[error("simulation error: {0}")]
    Simulation(#[from] adfilter::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for anything caused by the inputs, 2 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::Usage(e) if !e.use_stderr() => 0,
            _ => 1,
        }
    }
}
