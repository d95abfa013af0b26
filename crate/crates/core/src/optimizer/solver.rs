//! Fixed-point search for the optimal long-run throughput λ*.
//!
//! The residual
//!
//! ```text
//! Δ(λ) = (1/K) Σ_i E[max{τ_d (R_d − λ), 0, Ŵ_i(γ, λ)}] − λ τ_o
//! ```
//!
//! is strictly decreasing in λ and vanishes exactly at λ*. The expectation
//! over the exponential direct-link SNR splits at the thresholds ζ_i, η_i
//! into a finite integral of Ŵ and an exponential tail of the direct rate.

use crate::contention::{mean_observation_duration, ContentionParams};
use crate::error::{invalid, Error, Result};
use crate::optimizer::quadrature::{integrate, integrate_exp_tail, QuadTolerance};
use crate::optimizer::threshold::{find_thresholds, rate_threshold, w_hat, PairRelayStats, PairThresholds, TimingParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Stop once `|Δ| < epsilon`.
    pub epsilon: f64,
    /// Step size α; `None` picks the midpoint of the admissible interval.
    pub step: Option<f64>,
    pub max_iters: usize,
    /// Maximum number of adaptive subintervals per integral.
    pub quad_points: usize,
    /// Sample count for Monte Carlo cross-checks.
    pub mc_samples: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            epsilon: 1e-4,
            step: None,
            max_iters: 10_000,
            quad_points: 2_000,
            mc_samples: 1_000_000,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 2.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 2), got {}", self.epsilon)));
        }
        if self.max_iters == 0 || self.quad_points == 0 || self.mc_samples == 0 {
            return Err(invalid("solver", "iteration, quadrature and sample counts must be positive"));
        }
        if let Some(a) = self.step {
            if !(a > 0.0 && a.is_finite()) {
                return Err(invalid("step", format!("must be positive, got {a}")));
            }
        }
        Ok(())
    }

    pub fn quad_tolerance(&self) -> QuadTolerance {
        QuadTolerance {
            max_intervals: self.quad_points,
            ..QuadTolerance::default()
        }
    }

    /// Admissible step interval `[ε, (2 − ε)/(τ_o + τ_d)]` (times in µs).
    /// When `ε` exceeds the upper end the lower end drops to the upper end.
    pub fn step_bounds(&self, tau_o: f64, t_data: f64) -> (f64, f64) {
        let upper = (2.0 - self.epsilon) / (tau_o + t_data);
        // ε above the bound leaves no interval; fall back to (0, upper].
        let lower = if self.epsilon < upper { self.epsilon } else { 0.0 };
        (lower, upper)
    }

    pub fn resolve_step(&self, tau_o: f64, t_data: f64) -> Result<f64> {
        let (lower, upper) = self.step_bounds(tau_o, t_data);
        match self.step {
            None => Ok(0.5 * (lower + upper)),
            Some(a) if a <= upper * (1.0 + 1e-12) => Ok(a),
            Some(a) => Err(invalid(
                "step",
                format!("{a} exceeds the convergence bound (2 - ε)/(τ_o + τ_d) = {upper}"),
            )),
        }
    }
}

/// Strategy parameters for one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub lambda_star: f64,
    /// ζ_i; for pairs outside the benefit set this is `2^λ* − 1`.
    pub zeta: Vec<f64>,
    /// η_i; for pairs outside the benefit set this is `2^λ* − 1`.
    pub eta: Vec<f64>,
    pub benefit: Vec<bool>,
}

impl StrategyConfig {
    pub fn from_thresholds(lambda_star: f64, thresholds: &[PairThresholds]) -> Self {
        let mut zeta = Vec::with_capacity(thresholds.len());
        let mut eta = Vec::with_capacity(thresholds.len());
        let mut benefit = Vec::with_capacity(thresholds.len());
        for t in thresholds {
            match *t {
                PairThresholds::TwoStage { zeta: z, eta: e } => {
                    zeta.push(z);
                    eta.push(e);
                    benefit.push(true);
                }
                PairThresholds::SingleStage { threshold } => {
                    zeta.push(threshold);
                    eta.push(threshold);
                    benefit.push(false);
                }
            }
        }
        StrategyConfig {
            lambda_star,
            zeta,
            eta,
            benefit,
        }
    }

    pub fn k(&self) -> usize {
        self.benefit.len()
    }

    pub fn benefit_set(&self) -> Vec<usize> {
        (0..self.k()).filter(|&i| self.benefit[i]).collect()
    }

    /// `2^λ* − 1`.
    pub fn stop_snr(&self) -> f64 {
        rate_threshold(self.lambda_star)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub pairs: &'a [PairRelayStats],
    pub timing: &'a TimingParams,
    /// Mean contention duration τ_o in µs.
    pub tau_o: f64,
    pub quad: QuadTolerance,
}

impl<'a> Problem<'a> {
    pub fn new(
        pairs: &'a [PairRelayStats],
        timing: &'a TimingParams,
        contention: &ContentionParams,
        quad: QuadTolerance,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(invalid("pairs", "at least one pair is required"));
        }
        Ok(Problem {
            pairs,
            timing,
            tau_o: mean_observation_duration(contention)?,
            quad,
        })
    }
}

/// `(1/σ²) ∫_a^∞ (log2(1+x) − λ) e^{−x/σ²} dx`
fn direct_surplus_tail(sigma2: f64, a: f64, lambda: f64, quad: QuadTolerance) -> Result<f64> {
    integrate_exp_tail(|x| x.ln_1p() / std::f64::consts::LN_2 - lambda, a, sigma2, quad)
}

/// `Λ_i(λ) = E[max{τ_d(R_d − λ), 0, Ŵ_i(γ, λ)}]` over `γ ~ Exp(σ²)`.
pub fn pair_value(
    pair: &PairRelayStats,
    thresholds: &PairThresholds,
    timing: &TimingParams,
    lambda: f64,
    quad: QuadTolerance,
) -> Result<f64> {
    let t_d = timing.t_data().as_micros();
    let s = pair.sigma2;
    match *thresholds {
        PairThresholds::SingleStage { threshold } => {
            Ok(t_d * direct_surplus_tail(s, threshold, lambda, quad)?)
        }
        PairThresholds::TwoStage { zeta, eta } => {
            let weighted = |x: f64| w_hat(pair, timing, x, lambda) * (-x / s).exp() / s;
            // Ŵ has a kink where the direct rate crosses λ.
            let pivot = rate_threshold(lambda).clamp(zeta, eta);
            let probe = integrate(weighted, zeta, pivot, quad)? + integrate(weighted, pivot, eta, quad)?;
            Ok(probe + t_d * direct_surplus_tail(s, eta, lambda, quad)?)
        }
    }
}

pub fn thresholds_at(problem: &Problem<'_>, lambda: f64) -> Result<Vec<PairThresholds>> {
    problem
        .pairs
        .iter()
        .map(|p| find_thresholds(p, problem.timing, lambda))
        .collect()
}

/// Bellman residual `Δ(λ)` for thresholds already computed at `lambda`.
pub fn residual_with(problem: &Problem<'_>, thresholds: &[PairThresholds], lambda: f64) -> Result<f64> {
    let mut total = 0.0;
    for (pair, t) in problem.pairs.iter().zip(thresholds) {
        total += pair_value(pair, t, problem.timing, lambda, problem.quad)?;
    }
    Ok(total / problem.pairs.len() as f64 - lambda * problem.tau_o)
}

pub fn bellman_residual(problem: &Problem<'_>, lambda: f64) -> Result<f64> {
    let thresholds = thresholds_at(problem, lambda)?;
    residual_with(problem, &thresholds, lambda)
}

/// Damped fixed-point iteration `λ ← λ + αΔ(λ)` from `λ = 0` until
/// `|Δ| < ε`; returns the strategy at the final λ.
pub fn solve_lambda(problem: &Problem<'_>, solver: &SolverParams) -> Result<StrategyConfig> {
    Ok(solve_lambda_traced(problem, solver)?.0)
}

/// As [`solve_lambda`], also returning the iteration count and final residual.
pub fn solve_lambda_traced(problem: &Problem<'_>, solver: &SolverParams) -> Result<(StrategyConfig, usize, f64)> {
    solver.validate()?;
    let alpha = solver.resolve_step(problem.tau_o, problem.timing.t_data().as_micros())?;
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for iter in 0..solver.max_iters {
        let thresholds = thresholds_at(problem, lambda)?;
        residual = residual_with(problem, &thresholds, lambda)?;
        if residual.abs() < solver.epsilon {
            return Ok((StrategyConfig::from_thresholds(lambda, &thresholds), iter + 1, residual));
        }
        lambda = (lambda + alpha * residual).max(0.0);
    }
    Err(Error::NonConvergence {
        iters: solver.max_iters,
        residual,
    })
}

/// Bisection on a decreasing function with `f(0) > 0`, to absolute
/// tolerance `tol` in λ.
pub fn bisect_decreasing<F: FnMut(f64) -> Result<f64>>(mut f: F, tol: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut grown = 0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 60 {
            return Err(Error::NoBracket {
                what: "lambda",
                probe: hi,
            });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// λ* by bisection on the Bellman residual; an independent route to the
/// same fixed point.
pub fn solve_lambda_bisection(problem: &Problem<'_>, tol: f64) -> Result<f64> {
    bisect_decreasing(|l| bellman_residual(problem, l), tol)
}

/// Renewal rate of the always-probe policy that stops iff
/// `max{R_d, R_r} ≥ λ`: root of
///
/// ```text
/// (1/K) Σ_i E_γ[τ_d1 E[(max{R_d, R_r} − λ)⁺ | γ]] = λ (τ_o + τ_1)
/// ```
///
/// using `τ_d1 E[(X − λ)⁺ | γ] = Ŵ_i(γ, λ) + λ τ_1`.
pub fn probe_always_residual(problem: &Problem<'_>, lambda: f64) -> Result<f64> {
    let (_, t_1, _) = problem.timing.us();
    let pivot = rate_threshold(lambda);
    let mut total = 0.0;
    for pair in problem.pairs {
        let s = pair.sigma2;
        let surplus = |x: f64| w_hat(pair, problem.timing, x, lambda) + lambda * t_1;
        let head = integrate(|x| surplus(x) * (-x / s).exp() / s, 0.0, pivot, problem.quad)?;
        total += head + integrate_exp_tail(surplus, pivot, s, problem.quad)?;
    }
    Ok(total / problem.pairs.len() as f64 - lambda * (problem.tau_o + t_1))
}

pub fn solve_probe_always_lambda(problem: &Problem<'_>, tol: f64) -> Result<f64> {
    bisect_decreasing(|l| probe_always_residual(problem, l), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::special::exp_integral_e1;
    use crate::time::Nanos;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn contention(k: usize, scale: u64) -> ContentionParams {
        ContentionParams::new(
            k,
            0.3,
            Nanos::from_micros(50 * scale),
            Nanos::from_micros(100 * scale),
            Nanos::from_micros(100 * scale),
        )
        .unwrap()
    }

    fn timing(scale: u64) -> TimingParams {
        TimingParams::new(Nanos::from_millis(15 * scale), Nanos::from_micros(200 * scale)).unwrap()
    }

    fn mixed_pairs() -> Vec<PairRelayStats> {
        // direct, uplink, downlink means
        [(2.0, 250.0, 80.0), (40.0, 30.0, 30.0), (0.5, 1e4, 900.0), (300.0, 5.0, 2.0)]
            .iter()
            .map(|&(d, u, w)| PairRelayStats::from_means(d, u, w).unwrap())
            .collect()
    }

    /// Single pair that never probes: `Δ(λ) = τ_d e^{1/σ²} E1(2^λ/σ²)/ln 2 − λ τ_o`.
    fn scalar_oracle(sigma2: f64, t_d: f64, tau_o: f64) -> f64 {
        let f = |l: f64| t_d * (1.0 / sigma2).exp() * exp_integral_e1(l.exp2() / sigma2).unwrap() / LN_2 - l * tau_o;
        let (mut lo, mut hi) = (0.0, 64.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn far_relay_single_pair_matches_scalar_oracle() {
        let t = timing(1);
        let c = contention(1, 1);
        for sigma2 in [0.3, 4.0, 250.0] {
            let pairs = [PairRelayStats::new(1e12, sigma2).unwrap()];
            let problem = Problem::new(&pairs, &t, &c, QuadTolerance::default()).unwrap();
            let cfg = solve_lambda(&problem, &SolverParams::default()).unwrap();
            assert!(cfg.benefit_set().is_empty());
            let oracle = scalar_oracle(sigma2, 15_000.0, problem.tau_o);
            assert!((cfg.lambda_star - oracle).abs() < 1e-6, "σ²={sigma2}: {} vs {oracle}", cfg.lambda_star);
        }
    }

    #[test]
    fn residual_signs() {
        let pairs = mixed_pairs();
        let t = timing(1);
        let problem = Problem::new(&pairs, &t, &contention(4, 1), QuadTolerance::default()).unwrap();
        assert!(bellman_residual(&problem, 0.0).unwrap() > 0.0);
        assert!(bellman_residual(&problem, 40.0).unwrap() < 0.0);
    }

    #[test]
    fn every_admissible_step_converges_to_the_bisection_root() {
        let pairs = mixed_pairs();
        let t = timing(1);
        let problem = Problem::new(&pairs, &t, &contention(4, 1), QuadTolerance::default()).unwrap();
        let solver = SolverParams::default();
        let (lower, upper) = solver.step_bounds(problem.tau_o, 15_000.0);
        let reference = solve_lambda_bisection(&problem, 1e-10).unwrap();
        for alpha in [lower, 0.5 * (lower + upper), upper] {
            let params = SolverParams {
                step: Some(alpha),
                ..solver.clone()
            };
            let (cfg, iters, residual) = solve_lambda_traced(&problem, &params).unwrap();
            assert!(residual.abs() < solver.epsilon);
            assert!(iters > 1);
            assert!((cfg.lambda_star - reference).abs() < 2.0 * solver.epsilon, "α={alpha}");
        }
    }

    #[test]
    fn step_above_bound_is_rejected() {
        let solver = SolverParams {
            step: Some(1.0),
            ..SolverParams::default()
        };
        assert!(solver.resolve_step(591.0, 15_000.0).is_err());
    }

    #[test]
    fn step_interval_collapses_for_long_frames() {
        let solver = SolverParams::default();
        let (lower, upper) = solver.step_bounds(600.0, 30_000.0);
        assert!(upper < solver.epsilon);
        assert_eq!(lower, 0.0);
        let step = solver.resolve_step(600.0, 30_000.0).unwrap();
        assert!((step - 0.5 * upper).abs() < 1e-15);
    }

    #[test]
    fn scaling_all_durations_keeps_lambda() {
        let pairs = mixed_pairs();
        let (t1, t3) = (timing(1), timing(3));
        let p1 = Problem::new(&pairs, &t1, &contention(4, 1), QuadTolerance::default()).unwrap();
        let p3 = Problem::new(&pairs, &t3, &contention(4, 3), QuadTolerance::default()).unwrap();
        let l1 = solve_lambda_bisection(&p1, 1e-10).unwrap();
        let l3 = solve_lambda_bisection(&p3, 1e-10).unwrap();
        assert!((l1 - l3).abs() < 1e-8, "{l1} vs {l3}");
    }

    #[test]
    fn probing_never_lowers_lambda() {
        // The same pairs with a dead relay can only do worse; with weak
        // direct links the relay strictly helps.
        let pairs: Vec<_> = [(2.0, 250.0, 80.0), (0.5, 1e4, 900.0), (1.0, 5e3, 5e3)]
            .iter()
            .map(|&(d, u, w)| PairRelayStats::from_means(d, u, w).unwrap())
            .collect();
        let dead: Vec<_> = pairs.iter().map(|p| PairRelayStats::new(1e12, p.sigma2).unwrap()).collect();
        let t = timing(1);
        let c = contention(4, 1);
        let live = solve_lambda_bisection(&Problem::new(&pairs, &t, &c, QuadTolerance::default()).unwrap(), 1e-10);
        let dead = solve_lambda_bisection(&Problem::new(&dead, &t, &c, QuadTolerance::default()).unwrap(), 1e-10);
        let (live, dead) = (live.unwrap(), dead.unwrap());
        assert!(live > dead + 0.1, "{live} vs {dead}");
    }

    #[test]
    fn always_probe_rate_is_below_rpca() {
        let pairs = mixed_pairs();
        let t = timing(1);
        let problem = Problem::new(&pairs, &t, &contention(4, 1), QuadTolerance::default()).unwrap();
        let os = solve_probe_always_lambda(&problem, 1e-10).unwrap();
        let star = solve_lambda_bisection(&problem, 1e-10).unwrap();
        assert!(os > 0.0 && os <= star + 1e-9, "{os} vs {star}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn residual_is_decreasing(
            direct in 0.05f64..500.0,
            up in 0.5f64..5e3,
            down in 0.5f64..5e3,
            l in 0.0f64..10.0,
        ) {
            let pairs = [PairRelayStats::from_means(direct, up, down).unwrap()];
            let t = timing(1);
            let problem = Problem::new(&pairs, &t, &contention(1, 1), QuadTolerance::default()).unwrap();
            let a = bellman_residual(&problem, l).unwrap();
            let b = bellman_residual(&problem, l + 0.05).unwrap();
            prop_assert!(b < a);
        }
    }
}
