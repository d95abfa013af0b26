//! Figure presets and sweep execution.

use std::fmt;
use std::str::FromStr;

use rpca::engine::{run_experiment, CellResult, ExperimentSpec, SweepAxis};

use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Throughput against `P_s = P_r`.
    Fig3a,
    /// Throughput against τ_d at 26 dBm.
    Fig3b,
    /// Throughput against p0 at 26 dBm.
    Fig3c,
}

impl Figure {
    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig3a => "3a",
            Figure::Fig3b => "3b",
            Figure::Fig3c => "3c",
        }
    }

    /// The figure's sweep applied on top of `base`.
    pub fn configure(self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base.clone();
        cfg.t_data_ms = 15.0;
        match self {
            Figure::Fig3a => {
                cfg.sweep_axis = SweepAxis::PSource;
                cfg.sweep_values = (8..=15).map(|i| f64::from(2 * i)).collect();
            }
            Figure::Fig3b => {
                cfg.p_source_dbm = 26.0;
                cfg.p_rsu_dbm = 26.0;
                cfg.sweep_axis = SweepAxis::TData;
                cfg.sweep_values = vec![5.0, 7.0, 10.0, 15.0, 20.0, 25.0];
            }
            Figure::Fig3c => {
                cfg.p_source_dbm = 26.0;
                cfg.p_rsu_dbm = 26.0;
                cfg.sweep_axis = SweepAxis::P0;
                cfg.sweep_values = vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
                // At p0 = 0.9 with K = 8 a contention lasts ~1.4e6 slots on average.
                cfg.max_slots = cfg.max_slots.max(1_000_000_000_000);
            }
        }
        cfg
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().trim_start_matches("fig").trim_start_matches('.') {
            "3a" => Ok(Figure::Fig3a),
            "3b" => Ok(Figure::Fig3b),
            "3c" => Ok(Figure::Fig3c),
            _ => Err(format!("unknown figure `{s}` (expected 3a, 3b or 3c)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Engine(#[from] rpca::Error),
}

pub fn experiment_spec(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentSpec, ConfigError> {
    Ok(ExperimentSpec {
        base: cfg.sim_params()?,
        axis: cfg.sweep_axis,
        values: cfg.sweep_values.clone(),
        strategies: cfg.strategies.clone(),
        seeds: cfg.seeds.clone(),
        workers,
    })
}

/// Runs every (value, strategy, seed) cell of the configuration.
pub fn run_sweep(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<CellResult>, RunError> {
    let spec = experiment_spec(cfg, workers)?;
    Ok(run_experiment(&spec)?)
}
