//! Quick oracle and invariant checks behind the `validate` verb.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rpca::contention::{contend, mean_observation_duration};
use rpca::engine::{pair_stats, SimParams};
use rpca::geometry::{distances, initial_layout, NetworkGeometry};
use rpca::optimizer::solver::{bellman_residual, solve_lambda_bisection, solve_lambda_traced};
use rpca::optimizer::threshold::rate_threshold;
use rpca::optimizer::{find_thresholds, w_hat, w_oracle, PairThresholds, Problem};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn layout(params: &SimParams, seed: u64) -> rpca::Result<NetworkGeometry> {
    match &params.layout {
        Some(g) => Ok(g.clone()),
        None => initial_layout(params.contention.k_pairs, &params.area, &mut ChaCha8Rng::seed_from_u64(seed)),
    }
}

/// Runs the checks; errors inside a check count as failures.
pub fn run_checks(params: &SimParams, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let geometry = match layout(params, seed) {
        Ok(g) => g,
        Err(e) => return vec![check("layout", false, e.to_string())],
    };
    let info = distances(&geometry);
    let (means, pairs) = match (params.link_means(&info), pair_stats(params, &info)) {
        (Ok(m), Ok(p)) => (m, p),
        (Err(e), _) | (_, Err(e)) => return vec![check("link means", false, e.to_string())],
    };
    let samples = params.solver.mc_samples.min(200_000);
    let timing = &params.timing;
    let t_d = timing.t_data().as_micros();

    // Closed form against sampling at a few (γ, λ) points.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst = 0.0f64;
    let mut ok = true;
    for (i, pair) in pairs.iter().enumerate().take(3) {
        for &lambda in &[0.5, 2.0, 5.0] {
            let gamma = 0.5 * rate_threshold(lambda);
            let closed = w_hat(pair, timing, gamma, lambda);
            let mc = w_oracle(means.uplink[i], means.downlink[i], timing, gamma, lambda, true, samples, &mut rng);
            let err = (closed - mc).abs();
            let scale = (0.02 * mc.abs()).max(5e-3 * lambda * t_d);
            worst = worst.max(err / scale);
            ok &= err <= scale;
        }
    }
    out.push(check(
        "closed-form probing value vs sampling",
        ok,
        format!("worst error/tolerance {worst:.3} with {samples} samples"),
    ));

    let problem = match Problem::new(&pairs, timing, &params.contention, params.solver.quad_tolerance()) {
        Ok(p) => p,
        Err(e) => {
            out.push(check("optimizer setup", false, e.to_string()));
            return out;
        }
    };
    match (solve_lambda_traced(&problem, &params.solver), solve_lambda_bisection(&problem, 1e-10)) {
        (Ok((cfg, iters, residual)), Ok(bisected)) => {
            let eps = params.solver.epsilon;
            out.push(check(
                "fixed point vs bisection",
                residual.abs() < eps && (cfg.lambda_star - bisected).abs() <= 2.0 * eps,
                format!(
                    "lambda* {:.6} after {iters} iterations, residual {residual:.2e}, bisection {bisected:.6}",
                    cfg.lambda_star
                ),
            ));
            let mut ok = true;
            for pair in &pairs {
                if let Ok(PairThresholds::TwoStage { zeta, eta }) = find_thresholds(pair, timing, cfg.lambda_star) {
                    let l = cfg.lambda_star;
                    let tol = 1e-6 * l * t_d;
                    if zeta > 0.0 {
                        ok &= w_hat(pair, timing, zeta, l).abs() <= tol;
                    }
                    let gap = t_d * ((1.0 + eta).log2() - l) - w_hat(pair, timing, eta, l);
                    ok &= gap.abs() <= tol;
                }
            }
            out.push(check(
                "thresholds solve their equations",
                ok,
                format!("benefit set {:?}", cfg.benefit_set()),
            ));
            let below = bellman_residual(&problem, 0.5 * cfg.lambda_star);
            let above = bellman_residual(&problem, 1.5 * cfg.lambda_star + 1.0);
            out.push(check(
                "residual changes sign at lambda*",
                matches!((&below, &above), (Ok(b), Ok(a)) if *b > 0.0 && *a < 0.0),
                format!("{below:?} / {above:?}"),
            ));
        }
        (Err(e), _) | (_, Err(e)) => out.push(check("fixed point vs bisection", false, e.to_string())),
    }

    // Contention sampling against τ_o.
    match mean_observation_duration(&params.contention) {
        Ok(tau_o) => {
            let n = 200_000;
            let mut total = 0.0;
            let mut failure = None;
            for _ in 0..n {
                match contend(&params.contention, &mut rng) {
                    Ok(o) => total += o.elapsed.as_micros(),
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
            match failure {
                Some(e) => out.push(check("mean contention duration", false, e.to_string())),
                None => {
                    let mean = total / n as f64;
                    out.push(check(
                        "mean contention duration",
                        (mean - tau_o).abs() <= 0.015 * tau_o,
                        format!("sampled {mean:.2} us, closed form {tau_o:.2} us"),
                    ));
                }
            }
        }
        Err(e) => out.push(check("mean contention duration", false, e.to_string())),
    }
    out
}
