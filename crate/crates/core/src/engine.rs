//! Two-timescale simulation.
//!
//! A run is a sequence of large-scale phases. Each one takes the current
//! positions, reconfigures the strategy for them, plays `M` small-scale
//! phases (contend, observe, decide, transmit) and finally moves the
//! vehicles by the time those phases took.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{
    cross_link_means, dbm_to_mw, direct_rate, rates, relay_equivalent_snr, relay_snr, sample_exponential,
    sample_snrs, snr_means_from_distances, ChannelParams, SnrMeans,
};
use crate::contention::{contend_sampled, ContentionParams};
use crate::error::{invalid, Error, Result};
use crate::geometry::{distances, initial_layout, mobility_step_streams, DistanceInfo, MobilityParams, MobilityState, NetworkGeometry};
use crate::optimizer::solver::{solve_lambda, solve_probe_always_lambda, Problem};
use crate::optimizer::{LookupTable, PairRelayStats, SolverParams, StrategyConfig, TimingParams};
use crate::strategies::{
    baseline_direct_rsu, baseline_direct_v2v, baseline_mu_rsu, baseline_optimal_stop_probe, rpca_stage1,
    rpca_stage2, Decision, MuTransmitter, StrategyKind,
};
use crate::time::Nanos;

pub const DEFAULT_MAX_CONTENTIONS: u64 = 100_000;

/// RNG stream ids; every run derives its generators from one seed.
const STREAM_LAYOUT: u64 = 0;
const STREAM_ACCESS: u64 = 2;
// Vehicle v moves on stream STREAM_VEHICLE + v, so a vehicle's path is
// the same under every strategy up to the timing of its legs.
const STREAM_VEHICLE: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseSchedule {
    pub m_per_large: usize,
    pub n_large: usize,
}

impl PhaseSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.m_per_large == 0 || self.n_large == 0 {
            return Err(invalid("phases", "both phase counts must be at least 1"));
        }
        Ok(())
    }

    pub fn total_small(&self) -> usize {
        self.m_per_large * self.n_large
    }
}

/// One element of an observation path: a contention win, or the winner's
/// probe decision `R_k` that follows it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMark {
    Win,
    Probe(bool),
}

/// `(1, R_1, 1, R_2, …)`: odd length ends on a win, even on a probe decision.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObservationPath(pub Vec<PathMark>);

impl ObservationPath {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Alternates Win / Probe starting with Win.
    pub fn is_well_formed(&self) -> bool {
        !self.0.is_empty()
            && self.0.iter().enumerate().all(|(i, m)| match m {
                PathMark::Win => i % 2 == 0,
                PathMark::Probe(_) => i % 2 == 1,
            })
    }

    pub fn probes(&self) -> usize {
        self.0.iter().filter(|m| **m == PathMark::Probe(true)).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    /// Delivered data in bits per Hz.
    pub reward: f64,
    pub elapsed: Nanos,
    pub contention_time: Nanos,
    pub contentions: u64,
    /// Every probe, including one that led to the final stop.
    pub probes: u64,
    pub decision: Decision,
    pub path: ObservationPath,
}

impl PhaseRecord {
    pub fn stopped_after_probe(&self) -> bool {
        matches!(self.path.0.last(), Some(PathMark::Probe(true)))
    }

    /// `Σ t_w + (probes before the last win) τ_1 + τ_d`.
    pub fn expected_elapsed(&self, timing: &TimingParams) -> Nanos {
        let failed = self.probes - u64::from(self.stopped_after_probe());
        self.contention_time + timing.t_probe() * failed + timing.t_data()
    }
}

/// Everything a run needs besides its seed and strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub channel: ChannelParams,
    pub contention: ContentionParams,
    pub timing: TimingParams,
    pub schedule: PhaseSchedule,
    /// `None` keeps the layout static.
    pub mobility: Option<MobilityParams>,
    /// Road/area description used for the initial layout.
    pub area: MobilityParams,
    /// Explicit layout; replaces random placement.
    pub layout: Option<NetworkGeometry>,
    pub solver: SolverParams,
    pub bandwidth_hz: f64,
    /// Distances are clamped to at least this (the path-loss reference distance).
    pub min_distance_m: f64,
    pub lut_step_m: f64,
    pub max_contentions: u64,
    /// Per-slot join probability of non-winners in the multi-user baseline;
    /// `None` uses `p0`.
    pub mu_join_prob: Option<f64>,
    /// Keep per-phase records in the summary.
    pub keep_records: bool,
}

impl SimParams {
    /// Parameters of the reference scenario: K = 8, p0 = 0.3, δ = 50 µs,
    /// τ_R = τ_C = 100 µs, τ_d = 15 ms, P_s = P_r = 24 dBm, N0 = −90 dBm,
    /// β0 = −30 dB, α1 = 3, α2 = 2.5, 1 km² area, 20–80 km/h, 100 × 300 phases.
    pub fn reference() -> Self {
        let contention = ContentionParams::new(
            8,
            0.3,
            Nanos::from_micros(50),
            Nanos::from_micros(100),
            Nanos::from_micros(100),
        )
        .expect("reference contention parameters");
        let timing = TimingParams::new(Nanos::from_millis(15), contention.handshake()).expect("reference timing");
        let area = MobilityParams::default();
        SimParams {
            channel: ChannelParams::from_db(24.0, 24.0, -90.0, 3.0, 2.5, -30.0).expect("reference channel"),
            contention,
            timing,
            schedule: PhaseSchedule {
                m_per_large: 300,
                n_large: 100,
            },
            mobility: Some(area.clone()),
            area,
            layout: None,
            solver: SolverParams::default(),
            bandwidth_hz: 1.0,
            min_distance_m: 1.0,
            lut_step_m: 1.0,
            max_contentions: DEFAULT_MAX_CONTENTIONS,
            mu_join_prob: None,
            keep_records: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.contention.validate()?;
        self.schedule.validate()?;
        self.solver.validate()?;
        self.area.validate()?;
        if let Some(m) = &self.mobility {
            m.validate()?;
        }
        if self.timing.t_probe() != self.contention.handshake() {
            return Err(invalid("t_probe", "probe duration must equal τ_R + τ_C"));
        }
        if let Some(layout) = &self.layout {
            if layout.k() != self.contention.k_pairs {
                return Err(invalid("layout", "explicit layout must have K pairs"));
            }
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(invalid("bandwidth_hz", "must be positive"));
        }
        if !(self.min_distance_m > 0.0) || !(self.lut_step_m > 0.0) {
            return Err(invalid("min_distance_m", "distance clamp and table step must be positive"));
        }
        if self.max_contentions == 0 {
            return Err(invalid("max_contentions", "must be positive"));
        }
        if let Some(p) = self.mu_join_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("mu_join_prob", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Sets `P_s = P_r` from dBm.
    pub fn set_power_dbm(&mut self, dbm: f64) {
        self.channel.p_source = dbm_to_mw(dbm);
        self.channel.p_rsu = dbm_to_mw(dbm);
    }

    pub fn set_t_data(&mut self, t_data: Nanos) -> Result<()> {
        self.timing = TimingParams::new(t_data, self.contention.handshake())?;
        Ok(())
    }

    /// Mean link SNRs after clamping distances to `min_distance_m`.
    pub fn link_means(&self, d: &DistanceInfo) -> Result<SnrMeans> {
        snr_means_from_distances(&d.clamped_below(self.min_distance_m), &self.channel)
    }
}

/// Solved quantities per quantized geometry, shared across large phases.
#[derive(Debug)]
pub struct StrategyCache {
    pub rpca: LookupTable<StrategyConfig>,
    pub probe_always: LookupTable<f64>,
}

impl StrategyCache {
    pub fn new(step_m: f64) -> Self {
        StrategyCache {
            rpca: LookupTable::new(step_m),
            probe_always: LookupTable::new(step_m),
        }
    }
}

/// Per-pair optimizer inputs for the given distances (clamped like the engine does).
pub fn pair_stats(params: &SimParams, d: &DistanceInfo) -> Result<Vec<PairRelayStats>> {
    PairRelayStats::all_from_means(&params.link_means(d)?)
}

/// RPCA thresholds and λ* for the given distances, via the cache.
pub fn reconfigure(distance_info: &DistanceInfo, params: &SimParams, cache: &StrategyCache) -> Result<StrategyConfig> {
    cache.rpca.get_or_solve(distance_info, |d| {
        let pairs = pair_stats(params, d)?;
        let problem = Problem::new(&pairs, &params.timing, &params.contention, params.solver.quad_tolerance())?;
        solve_lambda(&problem, &params.solver)
    })
}

/// Stopping rate of the always-probe baseline, via the cache.
pub fn reconfigure_probe_always(distance_info: &DistanceInfo, params: &SimParams, cache: &StrategyCache) -> Result<f64> {
    cache.probe_always.get_or_solve(distance_info, |d| {
        let pairs = pair_stats(params, d)?;
        let problem = Problem::new(&pairs, &params.timing, &params.contention, params.solver.quad_tolerance())?;
        solve_probe_always_lambda(&problem, 1e-9)
    })
}

/// A strategy configured for the current large-scale phase.
#[derive(Debug, Clone, PartialEq)]
pub enum ActiveStrategy {
    Rpca(StrategyConfig),
    DirectV2V,
    DirectRsu,
    OptimalStopProbe { lambda_os: f64 },
    MuRsu,
}

impl ActiveStrategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            ActiveStrategy::Rpca(_) => StrategyKind::Rpca,
            ActiveStrategy::DirectV2V => StrategyKind::DirectV2V,
            ActiveStrategy::DirectRsu => StrategyKind::DirectRsu,
            ActiveStrategy::OptimalStopProbe { .. } => StrategyKind::OptimalStopProbe,
            ActiveStrategy::MuRsu => StrategyKind::MuRsu,
        }
    }

    /// The threshold rate the strategy was configured with, if any.
    pub fn target_rate(&self) -> Option<f64> {
        match self {
            ActiveStrategy::Rpca(c) => Some(c.lambda_star),
            ActiveStrategy::OptimalStopProbe { lambda_os } => Some(*lambda_os),
            _ => None,
        }
    }
}

pub fn configure(
    kind: StrategyKind,
    distance_info: &DistanceInfo,
    params: &SimParams,
    cache: &StrategyCache,
) -> Result<ActiveStrategy> {
    Ok(match kind {
        StrategyKind::Rpca => ActiveStrategy::Rpca(reconfigure(distance_info, params, cache)?),
        StrategyKind::DirectV2V => ActiveStrategy::DirectV2V,
        StrategyKind::DirectRsu => ActiveStrategy::DirectRsu,
        StrategyKind::OptimalStopProbe => ActiveStrategy::OptimalStopProbe {
            lambda_os: reconfigure_probe_always(distance_info, params, cache)?,
        },
        StrategyKind::MuRsu => ActiveStrategy::MuRsu,
    })
}

/// Link statistics of one large-scale phase.
#[derive(Debug, Clone)]
pub struct PhaseLinks {
    pub means: SnrMeans,
    /// `cross[i][j]`: mean SNR at destination i from source j.
    pub cross: Vec<Vec<f64>>,
}

impl PhaseLinks {
    pub fn new(geometry: &NetworkGeometry, params: &SimParams) -> Result<Self> {
        Ok(PhaseLinks {
            means: params.link_means(&distances(geometry))?,
            cross: cross_link_means(geometry, &params.channel, params.min_distance_m),
        })
    }
}

struct PhaseBuilder {
    contention_time: Nanos,
    failed_probes: u64,
    contentions: u64,
    probes: u64,
    path: ObservationPath,
}

impl PhaseBuilder {
    fn finish(self, reward: f64, decision: Decision, timing: &TimingParams) -> PhaseRecord {
        let elapsed = self.contention_time + timing.t_probe() * self.failed_probes + timing.t_data();
        PhaseRecord {
            reward,
            elapsed,
            contention_time: self.contention_time,
            contentions: self.contentions,
            probes: self.probes,
            decision,
            path: self.path,
        }
    }
}

/// Plays one small-scale phase: contend until some winner stops.
pub fn run_small_phase<R: Rng + ?Sized>(
    strategy: &ActiveStrategy,
    links: &PhaseLinks,
    params: &SimParams,
    rng: &mut R,
) -> Result<PhaseRecord> {
    let timing = &params.timing;
    let t_d = timing.t_data().as_secs();
    let t_d1 = timing.t_data_relay().as_secs();
    let mut phase = PhaseBuilder {
        contention_time: Nanos::ZERO,
        failed_probes: 0,
        contentions: 0,
        probes: 0,
        path: ObservationPath::default(),
    };
    loop {
        if phase.contentions >= params.max_contentions {
            return Err(Error::PhaseAborted(phase.contentions));
        }
        let won = contend_sampled(&params.contention, rng)?;
        phase.contentions += 1;
        phase.contention_time += won.elapsed;
        phase.path.0.push(PathMark::Win);
        let winner = won.winner;
        let draw = sample_snrs(&links.means, winner, rng);

        match strategy {
            ActiveStrategy::DirectV2V => {
                let (reward, _) = baseline_direct_v2v(&draw, timing);
                return Ok(phase.finish(reward, Decision::StopDirect, timing));
            }
            ActiveStrategy::DirectRsu => {
                phase.probes += 1;
                phase.path.0.push(PathMark::Probe(true));
                let (reward, _) = baseline_direct_rsu(&draw, timing);
                let (rd, rr) = rates(&draw);
                let decision = if rr > rd { Decision::StopRelay } else { Decision::StopDirect };
                return Ok(phase.finish(reward, decision, timing));
            }
            ActiveStrategy::OptimalStopProbe { lambda_os } => {
                phase.probes += 1;
                phase.path.0.push(PathMark::Probe(true));
                let decision = baseline_optimal_stop_probe(&draw, *lambda_os);
                if decision == Decision::Recontend {
                    phase.failed_probes += 1;
                    continue;
                }
                let (rd, rr) = rates(&draw);
                return Ok(phase.finish(t_d1 * rd.max(rr), decision, timing));
            }
            ActiveStrategy::MuRsu => {
                phase.probes += 1;
                phase.path.0.push(PathMark::Probe(true));
                let join = params.mu_join_prob.unwrap_or(params.contention.p0);
                let mut active = vec![winner];
                for i in 0..params.contention.k_pairs {
                    if i != winner && rng.random_bool(join) {
                        active.push(i);
                    }
                }
                let mut txs = Vec::with_capacity(active.len());
                for (n, &i) in active.iter().enumerate() {
                    let d = if n == 0 { draw } else { sample_snrs(&links.means, i, rng) };
                    let interference = active
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|&j| sample_exponential(links.cross[i][j], rng))
                        .sum();
                    txs.push(MuTransmitter { draw: d, interference });
                }
                let (reward, _) = baseline_mu_rsu(&txs, timing);
                return Ok(phase.finish(reward, Decision::StopRelay, timing));
            }
            ActiveStrategy::Rpca(config) => match rpca_stage1(winner, draw.gamma, config) {
                Decision::StopDirect => {
                    return Ok(phase.finish(t_d * direct_rate(draw.gamma), Decision::StopDirect, timing));
                }
                Decision::Recontend => {
                    phase.path.0.push(PathMark::Probe(false));
                }
                Decision::ProbeRsu => {
                    phase.probes += 1;
                    phase.path.0.push(PathMark::Probe(true));
                    let equivalent = relay_equivalent_snr(relay_snr(&draw));
                    let decision = rpca_stage2(draw.gamma, equivalent, config);
                    if decision == Decision::Recontend {
                        phase.failed_probes += 1;
                        continue;
                    }
                    let (rd, rr) = rates(&draw);
                    return Ok(phase.finish(t_d1 * rd.max(rr), decision, timing));
                }
                Decision::StopRelay => unreachable!("stage one never selects the relay"),
            },
        }
    }
}

/// Per-large-phase aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct LargePhaseSummary {
    pub index: usize,
    pub reward: f64,
    pub elapsed: Nanos,
    /// λ* (RPCA) or λ_os (always-probe baseline) used in this phase.
    pub target_rate: Option<f64>,
    pub benefit_set: Option<Vec<usize>>,
}

impl LargePhaseSummary {
    pub fn throughput(&self, bandwidth_hz: f64) -> f64 {
        self.reward / self.elapsed.as_secs() * bandwidth_hz
    }
}

/// Evolving state of one run.
pub struct SimState {
    pub geometry: NetworkGeometry,
    pub mobility: Option<MobilityState>,
    pub cache: StrategyCache,
    mobility_rngs: Vec<ChaCha8Rng>,
    access_rng: ChaCha8Rng,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl SimState {
    pub fn new(params: &SimParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let geometry = match &params.layout {
            Some(g) => g.clone(),
            None => initial_layout(params.contention.k_pairs, &params.area, &mut stream(seed, STREAM_LAYOUT))?,
        };
        let mut mobility_rngs: Vec<ChaCha8Rng> =
            (0..2 * geometry.k() as u64).map(|v| stream(seed, STREAM_VEHICLE + v)).collect();
        let mobility = match &params.mobility {
            Some(m) => Some(MobilityState::with_streams(&geometry, m, &mut mobility_rngs)?),
            None => None,
        };
        Ok(SimState {
            geometry,
            mobility,
            cache: StrategyCache::new(params.lut_step_m),
            mobility_rngs,
            access_rng: stream(seed, STREAM_ACCESS),
        })
    }
}

/// Location update, reconfiguration, M small phases, then mobility.
pub fn run_large_phase(
    index: usize,
    kind: StrategyKind,
    state: &mut SimState,
    params: &SimParams,
    records: Option<&mut Vec<PhaseRecord>>,
) -> Result<LargePhaseSummary> {
    let info = distances(&state.geometry);
    let strategy = configure(kind, &info, params, &state.cache)?;
    let links = PhaseLinks::new(&state.geometry, params)?;
    let mut reward = 0.0;
    let mut elapsed = Nanos::ZERO;
    let mut sink = records;
    for _ in 0..params.schedule.m_per_large {
        let rec = run_small_phase(&strategy, &links, params, &mut state.access_rng)?;
        reward += rec.reward;
        elapsed += rec.elapsed;
        if let Some(out) = sink.as_deref_mut() {
            out.push(rec);
        }
    }
    if let (Some(m), Some(ms)) = (&params.mobility, state.mobility.as_mut()) {
        state.geometry = mobility_step_streams(&state.geometry, ms, m, elapsed.as_secs(), &mut state.mobility_rngs)?;
    }
    Ok(LargePhaseSummary {
        index,
        reward,
        elapsed,
        target_rate: strategy.target_rate(),
        benefit_set: match &strategy {
            ActiveStrategy::Rpca(c) => Some(c.benefit_set()),
            _ => None,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub strategy: StrategyKind,
    pub seed: u64,
    /// Total reward / total time, in bits/s.
    pub throughput: f64,
    pub total_reward: f64,
    pub total_time: Nanos,
    pub n_phases: usize,
    pub contentions_mean: f64,
    pub probes_mean: f64,
    pub large: Vec<LargePhaseSummary>,
    pub records: Vec<PhaseRecord>,
}

pub fn run_simulation(kind: StrategyKind, params: &SimParams, seed: u64) -> Result<RunSummary> {
    let mut state = SimState::new(params, seed)?;
    let mut records = Vec::new();
    let mut large = Vec::with_capacity(params.schedule.n_large);
    let mut contentions = 0u64;
    let mut probes = 0u64;
    let mut n_phases = 0usize;
    for t in 0..params.schedule.n_large {
        let mut phase_records = Vec::with_capacity(params.schedule.m_per_large);
        large.push(run_large_phase(t, kind, &mut state, params, Some(&mut phase_records))?);
        n_phases += phase_records.len();
        contentions += phase_records.iter().map(|r| r.contentions).sum::<u64>();
        probes += phase_records.iter().map(|r| r.probes).sum::<u64>();
        if params.keep_records {
            records.extend(phase_records);
        }
    }
    let total_reward: f64 = large.iter().map(|l| l.reward).sum();
    let total_time: Nanos = large.iter().map(|l| l.elapsed).sum();
    Ok(RunSummary {
        strategy: kind,
        seed,
        throughput: total_reward / total_time.as_secs() * params.bandwidth_hz,
        total_reward,
        total_time,
        n_phases,
        contentions_mean: contentions as f64 / n_phases as f64,
        probes_mean: probes as f64 / n_phases as f64,
        large,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// `P_s = P_r`, dBm.
    PSource,
    /// τ_d, milliseconds.
    TData,
    P0,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PSource => "p_source_dbm",
            SweepAxis::TData => "t_data_ms",
            SweepAxis::P0 => "p0",
        }
    }

    pub fn apply(self, params: &mut SimParams, value: f64) -> Result<()> {
        match self {
            SweepAxis::PSource => {
                if !value.is_finite() {
                    return Err(invalid("p_source_dbm", "must be finite"));
                }
                params.set_power_dbm(value);
            }
            SweepAxis::TData => {
                let t = Nanos::try_from_micros_f64("t_data_ms", value * 1_000.0)?;
                params.set_t_data(t)?;
            }
            SweepAxis::P0 => {
                params.contention.p0 = value;
            }
        }
        params.validate()
    }
}

/// A batch of runs: every (sweep value, strategy, seed) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimParams,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub strategies: Vec<StrategyKind>,
    pub seeds: Vec<u64>,
    /// Worker threads; `None` lets rayon decide.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub summary: RunSummary,
}

impl ExperimentSpec {
    /// Checks the spec and returns the parameters of every sweep value.
    pub fn cells(&self) -> Result<Vec<(f64, SimParams)>> {
        if self.values.is_empty() || self.strategies.is_empty() || self.seeds.is_empty() {
            return Err(invalid("experiment", "sweep values, strategies and seeds must be nonempty"));
        }
        self.values
            .iter()
            .map(|&v| {
                let mut p = self.base.clone();
                self.axis.apply(&mut p, v)?;
                Ok((v, p))
            })
            .collect()
    }
}

/// Runs every cell; results come back in (value, strategy, seed) order
/// regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CellResult>> {
    let cells = spec.cells()?;
    let mut jobs = Vec::new();
    for (v, p) in &cells {
        for &kind in &spec.strategies {
            for &seed in &spec.seeds {
                jobs.push((*v, p, kind, seed));
            }
        }
    }
    let run = || {
        jobs.par_iter()
            .map(|&(v, p, kind, seed)| {
                run_simulation(kind, p, seed).map(|summary| CellResult {
                    axis: spec.axis,
                    axis_value: v,
                    summary,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| invalid("workers", e.to_string()))?
            .install(run),
        None => run(),
    }
}
