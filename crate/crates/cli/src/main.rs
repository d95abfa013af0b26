use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rpca::engine::pair_stats;
use rpca::geometry::{distances, initial_layout};
use rpca::optimizer::solver::solve_lambda_traced;
use rpca::optimizer::Problem;
use rpca_cli::config::{parse_seeds, parse_strategies};
use rpca_cli::output::write_outputs;
use rpca_cli::report::{aggregate, gain_table, render_gain_table};
use rpca_cli::validate::run_checks;
use rpca_cli::{parse_config, run_sweep, workers_from_env, ExperimentConfig, Figure};

/// RSU-assisted cooperative channel access: optimizer and simulator.
#[derive(Parser, Debug)]
#[command(name = "rpca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// key = value configuration file; defaults to the reference scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seeds, e.g. `1,2,3` or `1..11`.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated strategies or `all`.
    #[arg(long, global = true)]
    strategies: Option<String>,
    /// Large and small phase counts as `L,M`.
    #[arg(long, global = true)]
    phases: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print λ*, thresholds and the benefit set for one layout.
    Solve,
    /// Run the configured sweep.
    Simulate,
    /// Reproduce a throughput figure: 3a, 3b or 3c.
    Figure { id: Figure },
    /// Run the oracle and invariant checks.
    Validate,
}

fn load(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &common.seed {
        cfg.seeds = parse_seeds(s).map_err(anyhow::Error::msg).context("--seed")?;
    }
    if let Some(s) = &common.strategies {
        cfg.strategies = parse_strategies(s).map_err(anyhow::Error::msg).context("--strategies")?;
    }
    if let Some(p) = &common.phases {
        let parsed = p
            .split_once(',')
            .and_then(|(l, m)| Some((l.trim().parse::<usize>().ok()?, m.trim().parse::<usize>().ok()?)));
        match parsed {
            Some((l, m)) if l > 0 && m > 0 => {
                cfg.large_phases = l;
                cfg.small_phases = m;
            }
            _ => bail!("--phases expects `L,M` with positive integers, got `{p}`"),
        }
    }
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

fn sweep(cfg: &ExperimentConfig, name: &str, figure: &str) -> anyhow::Result<()> {
    let workers = workers_from_env().map_err(anyhow::Error::msg)?;
    let results = run_sweep(cfg, workers)?;
    let paths = write_outputs(&cfg.output, name, figure, &results).context("writing output")?;
    let cells = aggregate(&results);
    match gain_table(&cells) {
        Ok(rows) => print!("{}", render_gain_table(cfg.sweep_axis.name(), &rows)),
        Err(e) => eprintln!("no gain table: {e}"),
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn solve(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let params = cfg.sim_params()?;
    let seed = cfg.seeds[0];
    let geometry = match &params.layout {
        Some(g) => g.clone(),
        None => initial_layout(params.contention.k_pairs, &params.area, &mut ChaCha8Rng::seed_from_u64(seed))?,
    };
    let info = distances(&geometry);
    let pairs = pair_stats(&params, &info)?;
    let problem = Problem::new(&pairs, &params.timing, &params.contention, params.solver.quad_tolerance())?;
    let (config, iters, residual) = solve_lambda_traced(&problem, &params.solver)?;
    println!("tau_o_us = {}", problem.tau_o);
    println!("lambda_star = {}", config.lambda_star);
    println!("iterations = {iters}");
    println!("residual = {residual:e}");
    println!("benefit_set = {:?}", config.benefit_set());
    println!("pair  d_sd_m  d_sr_m  d_rd_m  zeta  eta");
    for i in 0..config.k() {
        println!(
            "{i}  {:.1}  {:.1}  {:.1}  {}  {}",
            info.v2v[i], info.v2r[i].0, info.v2r[i].1, config.zeta[i], config.eta[i]
        );
    }
    Ok(())
}

fn validate(cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let params = cfg.sim_params()?;
    let checks = run_checks(&params, cfg.seeds[0]);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli.common).and_then(|cfg| match cli.command {
        Command::Solve => solve(&cfg).map(|_| true),
        Command::Simulate => sweep(&cfg, "simulate", "custom").map(|_| true),
        Command::Figure { id } => {
            let fig = id.configure(&cfg);
            sweep(&fig, &format!("fig{id}"), id.id()).map(|_| true)
        }
        Command::Validate => validate(&cfg),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
