//! Configuration, sweeps and output for the `rpca` command.

pub mod config;
pub mod figure;
pub mod output;
pub mod report;
pub mod validate;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use figure::{run_sweep, Figure, RunError};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "RPCA_WORKERS";

/// Worker count from [`WORKERS_ENV`]; unset means let the pool decide.
pub fn workers_from_env() -> Result<Option<usize>, String> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| format!("{WORKERS_ENV} must be a positive integer, got `{v}`")),
        Err(_) => Ok(None),
    }
}
