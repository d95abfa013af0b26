//! Threshold optimizer: closed-form probing value, thresholds, benefit set,
//! Bellman residual and the λ* fixed point.

pub mod lut;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod threshold;

pub use lut::LookupTable;
pub use quadrature::QuadTolerance;
pub use solver::{
    bellman_residual, solve_lambda, solve_lambda_bisection, solve_probe_always_lambda, Problem, SolverParams,
    StrategyConfig,
};
pub use special::exp_integral_e1;
pub use threshold::{benefit_set, find_thresholds, w_hat, w_oracle, PairRelayStats, PairThresholds, TimingParams};
