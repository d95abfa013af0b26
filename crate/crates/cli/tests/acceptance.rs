//! Acceptance suite. Prints one PASS/FAIL line per criterion and a
//! closing tally. Known failures are reported, not hidden; set
//! `RPCA_ACCEPTANCE_STRICT=1` to make any FAIL a nonzero exit.
//!
//! Run a subset with `cargo test -p rpca-cli --test acceptance -- 4 6`.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rpca::channel::{dbm_to_mw, db_to_linear};
use rpca::contention::{contend, ContentionParams};
use rpca::engine::{pair_stats, run_experiment, run_simulation, ExperimentSpec, PhaseSchedule, SimParams, SweepAxis};
use rpca::geometry::{distances, initial_layout, DistanceInfo, NetworkGeometry, Position};
use rpca::optimizer::solver::{bellman_residual, solve_lambda_bisection, solve_lambda_traced};
use rpca::optimizer::threshold::rate_threshold;
use rpca::optimizer::{find_thresholds, w_hat, w_oracle, PairRelayStats, PairThresholds, Problem, SolverParams};
use rpca::strategies::StrategyKind;
use rpca::Nanos;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference_static() -> SimParams {
    let mut p = SimParams::reference();
    p.mobility = None;
    p.keep_records = false;
    p
}

fn layout(seed: u64) -> NetworkGeometry {
    let p = SimParams::reference();
    initial_layout(8, &p.area, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn relay_pairs(p: &SimParams, d: &DistanceInfo) -> Vec<PairRelayStats> {
    pair_stats(p, d).unwrap()
}

// -- 1 ----------------------------------------------------------------------

fn closed_form_fidelity() -> Outcome {
    let p = SimParams::reference();
    // (d_SD, d_SR, d_RD) in metres.
    let geometries = [(300.0, 150.0, 200.0), (100.0, 400.0, 50.0), (500.0, 250.0, 250.0), (60.0, 30.0, 500.0)];
    let lambdas = [1.0, 2.5, 4.0];
    let fractions = [0.0, 0.3, 0.7, 1.0, 1.6];
    let samples = 10_000_000;
    let t_d = p.timing.t_data().as_micros();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut points, mut failures, mut worst) = (0, Vec::new(), 0.0f64);
    for (g, &(sd, sr, rd)) in geometries.iter().enumerate() {
        let d = DistanceInfo {
            v2v: vec![sd],
            v2r: vec![(sr, rd)],
        };
        let means = p.link_means(&d).unwrap();
        let pair = relay_pairs(&p, &d)[0];
        for &lambda in &lambdas {
            for &f in &fractions {
                let gamma = f * rate_threshold(lambda);
                let closed = w_hat(&pair, &p.timing, gamma, lambda);
                let mc = w_oracle(means.uplink[0], means.downlink[0], &p.timing, gamma, lambda, true, samples, &mut rng);
                let tol = (0.01 * mc.abs()).max(1e-3 * lambda * t_d);
                let ratio = (closed - mc).abs() / tol;
                worst = worst.max(ratio);
                points += 1;
                if ratio > 1.0 {
                    failures.push(format!("geometry {g} λ={lambda} γ={gamma:.3}: {closed:.2} vs {mc:.2}"));
                }
            }
        }
    }
    ensure(
        failures.is_empty() && points >= 60,
        format!("{points} points, worst error/tolerance {worst:.3}; failures {failures:?}"),
    )
}

// -- 2 ----------------------------------------------------------------------

fn sign_changes(xs: &[f64]) -> Vec<usize> {
    xs.windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] < 0.0) != (w[1] < 0.0))
        .map(|(i, _)| i)
        .collect()
}

fn threshold_correctness() -> Outcome {
    let p = reference_static();
    let t_d = p.timing.t_data().as_micros();
    let (mut checked, mut problems) = (0, Vec::new());
    for seed in 1..=20u64 {
        let info = distances(&layout(seed));
        let pairs = relay_pairs(&p, &info);
        let problem = Problem::new(&pairs, &p.timing, &p.contention, p.solver.quad_tolerance()).unwrap();
        let (cfg, _, _) = solve_lambda_traced(&problem, &p.solver).unwrap();
        let l = cfg.lambda_star;
        for (i, pair) in pairs.iter().enumerate() {
            let PairThresholds::TwoStage { zeta, eta } = find_thresholds(pair, &p.timing, l).unwrap() else {
                continue;
            };
            checked += 1;
            let top = 2.0 * eta;
            let grid: Vec<f64> = (0..1000).map(|k| top * k as f64 / 999.0).collect();
            let w: Vec<f64> = grid.iter().map(|&g| w_hat(pair, &p.timing, g, l)).collect();
            let gap: Vec<f64> = grid
                .iter()
                .zip(&w)
                .map(|(&g, &wv)| t_d * ((1.0 + g).log2() - l) - wv)
                .collect();
            let zc = sign_changes(&w);
            let ok_zeta = if zeta == 0.0 {
                // Clamped at the origin: Ŵ is nonnegative on the whole grid.
                zc.is_empty() && w.iter().all(|&v| v >= 0.0)
            } else {
                zc.len() == 1 && grid[zc[0]] <= zeta && zeta <= grid[zc[0] + 1]
            };
            let ec = sign_changes(&gap);
            let ok_eta = ec.len() == 1 && grid[ec[0]] <= eta && eta <= grid[ec[0] + 1];
            if !(ok_zeta && ok_eta) {
                problems.push(format!("seed {seed} pair {i}: ζ={zeta} crossings {zc:?}, η={eta} crossings {ec:?}"));
            }
        }
    }
    ensure(
        checked > 0 && problems.is_empty(),
        format!("{checked} benefit-set pairs over 20 geometries; problems {problems:?}"),
    )
}

// -- 3 ----------------------------------------------------------------------

fn fixed_point_consistency() -> Outcome {
    let p = reference_static();
    let eps = 1e-4;
    let mut notes = Vec::new();
    let mut ok = true;
    for seed in 1..=5u64 {
        let pairs = relay_pairs(&p, &distances(&layout(seed)));
        let problem = Problem::new(&pairs, &p.timing, &p.contention, p.solver.quad_tolerance()).unwrap();
        let bisected = solve_lambda_bisection(&problem, 1e-10).unwrap();
        let base = SolverParams {
            epsilon: eps,
            ..SolverParams::default()
        };
        let (lo, hi) = base.step_bounds(problem.tau_o, p.timing.t_data().as_micros());
        for alpha in [lo, 0.5 * (lo + hi), hi] {
            let solver = SolverParams {
                step: Some(alpha),
                ..base.clone()
            };
            match solve_lambda_traced(&problem, &solver) {
                Ok((cfg, iters, _)) => {
                    let residual = bellman_residual(&problem, cfg.lambda_star).unwrap();
                    let agree = (cfg.lambda_star - bisected).abs() <= 2.0 * eps;
                    ok &= residual.abs() <= eps && agree;
                    if alpha == hi {
                        notes.push(format!(
                            "seed {seed}: λ*={:.5} ({iters} it, |Δ|={:.1e}, bisection {:.5})",
                            cfg.lambda_star,
                            residual.abs(),
                            bisected
                        ));
                    }
                }
                Err(e) => {
                    ok = false;
                    notes.push(format!("seed {seed} α={alpha:e}: {e}"));
                }
            }
        }
    }
    ensure(ok, notes.join("; "))
}

// -- 4 ----------------------------------------------------------------------

fn renewal_reward() -> Outcome {
    let mut p = reference_static();
    p.schedule = PhaseSchedule {
        m_per_large: 1_000,
        n_large: 100,
    };
    let mut notes = Vec::new();
    let mut ok = true;
    for seed in 1..=3u64 {
        p.layout = Some(layout(seed));
        let s = run_simulation(StrategyKind::Rpca, &p, seed).unwrap();
        let lambda = s.large[0].target_rate.unwrap();
        let rel = (s.throughput - lambda) / lambda;
        ok &= rel.abs() <= 0.03;
        notes.push(format!(
            "layout {seed}: simulated {:.4} vs λ* {lambda:.4} ({:+.2}%, {} phases)",
            s.throughput,
            100.0 * rel,
            s.n_phases
        ));
    }
    ensure(ok, notes.join("; "))
}

// -- 5 ----------------------------------------------------------------------

/// `E[(log2(1+γ) − λ)⁺]` for `γ ~ Exp(mean)` by composite Simpson on
/// `γ = a − mean·ln u`, `u ∈ (0, 1]`.
fn direct_surplus(mean: f64, lambda: f64) -> f64 {
    let a = lambda.exp2() - 1.0;
    let n = 20_000;
    let h = 1.0 / n as f64;
    let f = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let g = a - mean * u.ln();
        ((1.0 + g).log2() - lambda).max(0.0)
    };
    let mut s = f(0.0) + f(1.0);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    (-a / mean).exp() * s * h / 3.0
}

fn degenerate_relay() -> Outcome {
    let mut p = reference_static();
    let g = layout(2);
    let far = NetworkGeometry::new(g.pairs().to_vec(), Position::new(1e9, 1e9)).unwrap();
    p.layout = Some(far.clone());
    p.schedule = PhaseSchedule {
        m_per_large: 1_000,
        n_large: 100,
    };
    let s = run_simulation(StrategyKind::Rpca, &p, 5).unwrap();
    let benefit = s.large[0].benefit_set.clone().unwrap();

    // Independent scalar oracle: mean SNRs, τ_o and the single-threshold
    // renewal equation written out from scratch.
    let (k, p0) = (8.0, 0.3f64);
    let q = k * p0 * (1.0 - p0).powi(7);
    let idle = (1.0 - p0).powi(8);
    let tau_o = 200.0 + (idle * 50.0 + (1.0 - idle - q) * 100.0) / q;
    let snr0 = dbm_to_mw(24.0) * db_to_linear(-30.0) / dbm_to_mw(-90.0);
    let sigma2: Vec<f64> = far
        .pairs()
        .iter()
        .map(|pr| snr0 * pr.source.distance(&pr.destination).max(1.0).powf(-3.0))
        .collect();
    let residual = |l: f64| 15_000.0 * sigma2.iter().map(|&s| direct_surplus(s, l)).sum::<f64>() / k - l * tau_o;
    let (mut lo, mut hi) = (0.0, 40.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    let rel = (s.throughput - oracle) / oracle;
    ensure(
        benefit.is_empty() && rel.abs() <= 0.03,
        format!(
            "benefit set {benefit:?}; simulated {:.4} vs scalar oracle {oracle:.4} ({:+.2}%); solver λ* {:.4}",
            s.throughput,
            100.0 * rel,
            s.large[0].target_rate.unwrap()
        ),
    )
}

// -- 6 ----------------------------------------------------------------------

fn mean_by_strategy(results: &[rpca::engine::CellResult], value: f64) -> BTreeMap<StrategyKind, f64> {
    let mut sums: BTreeMap<StrategyKind, (f64, usize)> = BTreeMap::new();
    for r in results.iter().filter(|r| r.axis_value == value) {
        let e = sums.entry(r.summary.strategy).or_default();
        e.0 += r.summary.throughput;
        e.1 += 1;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn figure_3a() -> Outcome {
    let mut base = SimParams::reference();
    base.keep_records = false;
    let spec = ExperimentSpec {
        base,
        axis: SweepAxis::PSource,
        values: vec![24.0],
        strategies: StrategyKind::ALL.to_vec(),
        seeds: (1..=10).collect(),
        workers: None,
    };
    let results = run_experiment(&spec).unwrap();
    let mut losses = Vec::new();
    for seed in 1..=10u64 {
        let of = |k: StrategyKind| {
            results
                .iter()
                .find(|r| r.summary.seed == seed && r.summary.strategy == k)
                .unwrap()
                .summary
                .throughput
        };
        let rpca = of(StrategyKind::Rpca);
        for k in StrategyKind::ALL.into_iter().skip(1) {
            if of(k) >= rpca {
                losses.push(format!("seed {seed} {k}"));
            }
        }
    }
    let means = mean_by_strategy(&results, 24.0);
    let rpca = means[&StrategyKind::Rpca];
    let brackets = [
        (StrategyKind::DirectV2V, 250.0, 600.0),
        (StrategyKind::DirectRsu, 80.0, 200.0),
        (StrategyKind::OptimalStopProbe, 3.0, 20.0),
        (StrategyKind::MuRsu, 40.0, 130.0),
    ];
    let mut ok = losses.is_empty();
    let mut parts = Vec::new();
    for (k, lo, hi) in brackets {
        let gain = 100.0 * (rpca - means[&k]) / means[&k];
        let inside = (lo..=hi).contains(&gain);
        ok &= inside;
        parts.push(format!("{k} {gain:+.1}% [{lo},{hi}]{}", if inside { "" } else { " OUT" }));
    }
    ensure(
        ok,
        format!("rpca {rpca:.3} bps; {}; ordering losses {losses:?}", parts.join(", ")),
    )
}

// -- 7 ----------------------------------------------------------------------

fn trends() -> Outcome {
    let mut base = SimParams::reference();
    base.keep_records = false;
    base.set_power_dbm(26.0);
    let seeds: Vec<u64> = (1..=10).collect();
    let t_values = vec![5.0, 10.0, 15.0, 20.0, 25.0];
    let td = run_experiment(&ExperimentSpec {
        base: base.clone(),
        axis: SweepAxis::TData,
        values: t_values.clone(),
        strategies: StrategyKind::ALL.to_vec(),
        seeds: seeds.clone(),
        workers: None,
    })
    .unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for k in StrategyKind::ALL {
        let curve: Vec<f64> = t_values.iter().map(|&v| mean_by_strategy(&td, v)[&k]).collect();
        let rising = curve.windows(2).all(|w| w[1] > w[0]);
        ok &= rising;
        if !rising {
            notes.push(format!("{k} not increasing in τ_d: {curve:.3?}"));
        }
    }

    base.contention.max_slots = 1_000_000_000_000;
    let p_values = vec![0.3, 0.5, 0.7, 0.9];
    let pc = run_experiment(&ExperimentSpec {
        base,
        axis: SweepAxis::P0,
        values: p_values.clone(),
        strategies: vec![StrategyKind::Rpca, StrategyKind::OptimalStopProbe],
        seeds,
        workers: None,
    })
    .unwrap();
    let gap = |v: f64| {
        let m = mean_by_strategy(&pc, v);
        let (r, o) = (m[&StrategyKind::Rpca], m[&StrategyKind::OptimalStopProbe]);
        (r - o) / o
    };
    let at_03 = gap(0.3);
    let mut gaps = Vec::new();
    for &v in &p_values[1..] {
        let g = gap(v);
        ok &= g < at_03;
        gaps.push(format!("p0={v}: {:+.2}%", 100.0 * g));
    }
    notes.push(format!("relative RPCA-OSP gap at p0=0.3 {:+.2}%, {}", 100.0 * at_03, gaps.join(", ")));
    ensure(ok, notes.join("; "))
}

// -- 8 ----------------------------------------------------------------------

fn contention_statistics() -> Outcome {
    let params =
        ContentionParams::new(8, 0.3, Nanos::from_micros(50), Nanos::from_micros(100), Nanos::from_micros(100)).unwrap();
    // Closed form written out independently of the library.
    let q = 8.0 * 0.3 * 0.7f64.powi(7);
    let idle = 0.7f64.powi(8);
    let tau_o = 200.0 + (idle * 50.0 + (1.0 - idle - q) * 100.0) / q;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 1_000_000;
    let total: f64 = (0..n).map(|_| contend(&params, &mut rng).unwrap().elapsed.as_micros()).sum();
    let mean = total / n as f64;
    let rel = (mean - tau_o) / tau_o;
    ensure(
        rel.abs() <= 0.01,
        format!("empirical {mean:.3} µs vs τ_o {tau_o:.3} µs ({:+.3}%) over {n} contentions", 100.0 * rel),
    )
}

// -- 9 ----------------------------------------------------------------------

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str, workers: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_rpca"))
            .args(["figure", "3a", "--seed", "1,2", "--phases", "3,40", "--out"])
            .arg(&out)
            .env("RPCA_WORKERS", workers)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        let mut files: Vec<_> = fs::read_dir(&out)
            .map_err(|e| e.to_string())?
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        Ok(files)
    };
    let a = run("a", "1")?;
    let b = run("b", "1")?;
    let c = run("c", "3")?;
    let runs = a.iter().find(|(n, _)| n == "fig3a_runs.csv").map(|(_, b)| b.clone()).unwrap_or_default();
    let rows = String::from_utf8_lossy(&runs).lines().count();
    ensure(
        a == b && a == c && a.len() == 3 && rows == 1 + 8 * 5 * 2,
        format!(
            "{} files, {} CSV lines; identical across runs: {}; across worker counts: {}",
            a.len(),
            rows,
            a == b,
            a == c
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "closed-form probing value vs Monte Carlo", closed_form_fidelity),
        (2, "threshold sign changes", threshold_correctness),
        (3, "fixed-point consistency", fixed_point_consistency),
        (4, "renewal-reward consistency", renewal_reward),
        (5, "degenerate relay reduction", degenerate_relay),
        (6, "figure 3a ordering and gains", figure_3a),
        (7, "figure 3b/3c trends", trends),
        (8, "contention statistics", contention_statistics),
        (9, "determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS [{id}] {name} ({secs:.1} s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL [{id}] {name} ({secs:.1} s): {d}");
            }
        }
    }
    println!("{failed} acceptance criteria failed");
    if failed > 0 && std::env::var_os("RPCA_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
