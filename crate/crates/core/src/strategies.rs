//! Decision kernels: the two-stage RPCA threshold rule and four baselines.
//!
//! Rewards are in bits per Hz (rate × seconds); times in [`Nanos`].

use std::fmt;
use std::str::FromStr;

use crate::channel::{direct_rate, rates, relay_rate, relay_snr, SnrDraw};
use crate::error::{invalid, Error};
use crate::optimizer::{StrategyConfig, TimingParams};
use crate::time::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    StopDirect,
    /// Only reachable after a probe.
    StopRelay,
    ProbeRsu,
    Recontend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Rpca,
    DirectV2V,
    DirectRsu,
    OptimalStopProbe,
    MuRsu,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Rpca,
        StrategyKind::DirectV2V,
        StrategyKind::DirectRsu,
        StrategyKind::OptimalStopProbe,
        StrategyKind::MuRsu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Rpca => "rpca",
            StrategyKind::DirectV2V => "direct_v2v",
            StrategyKind::DirectRsu => "direct_rsu",
            StrategyKind::OptimalStopProbe => "optimal_stop_probe",
            StrategyKind::MuRsu => "mu_rsu",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| invalid("strategy", format!("unknown strategy `{s}`")))
    }
}

/// First-stage decision after winning contention with direct SNR `gamma`.
pub fn rpca_stage1(pair: usize, gamma: f64, config: &StrategyConfig) -> Decision {
    if config.benefit[pair] {
        if gamma >= config.eta[pair] {
            Decision::StopDirect
        } else if gamma < config.zeta[pair] {
            Decision::Recontend
        } else {
            Decision::ProbeRsu
        }
    } else if gamma >= config.stop_snr() {
        Decision::StopDirect
    } else {
        Decision::Recontend
    }
}

/// Second-stage decision after a probe. `gamma_relay` is the relay path's
/// rate-equivalent SNR (`2^{R_r} − 1`, see
/// [`crate::channel::relay_equivalent_snr`]), so both arguments compare on
/// the same rate scale.
pub fn rpca_stage2(gamma: f64, gamma_relay: f64, config: &StrategyConfig) -> Decision {
    if gamma.max(gamma_relay) >= config.stop_snr() {
        if gamma_relay > gamma {
            Decision::StopRelay
        } else {
            Decision::StopDirect
        }
    } else {
        Decision::Recontend
    }
}

/// `(reward, time)` of a direct transmission over the full data interval.
pub fn baseline_direct_v2v(draw: &SnrDraw, timing: &TimingParams) -> (f64, Nanos) {
    let t = timing.t_data();
    (t.as_secs() * direct_rate(draw.gamma), t)
}

/// `(reward, time)` of probe-then-transmit on the better of the two paths.
pub fn baseline_direct_rsu(draw: &SnrDraw, timing: &TimingParams) -> (f64, Nanos) {
    let (rd, rr) = rates(draw);
    (timing.t_data_relay().as_secs() * rd.max(rr), timing.t_data())
}

/// Always-probe optimal stopping: stop iff the best rate reaches `lambda_os`.
pub fn baseline_optimal_stop_probe(draw: &SnrDraw, lambda_os: f64) -> Decision {
    let (rd, rr) = rates(draw);
    if rd.max(rr) >= lambda_os {
        if rr > rd {
            Decision::StopRelay
        } else {
            Decision::StopDirect
        }
    } else {
        Decision::Recontend
    }
}

/// One concurrent RSU-relayed transmitter in the multi-user baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuTransmitter {
    pub draw: SnrDraw,
    /// Summed interference-to-noise ratio at this transmitter's destination.
    pub interference: f64,
}

/// `(reward, time)` of concurrent relayed transmissions, each decoded with
/// the others treated as noise: `R = ½ log2(1 + SNR_r / (1 + I))`.
pub fn baseline_mu_rsu(transmitters: &[MuTransmitter], timing: &TimingParams) -> (f64, Nanos) {
    let secs = timing.t_data_relay().as_secs();
    let reward = transmitters
        .iter()
        .map(|t| secs * relay_rate(relay_snr(&t.draw) / (1.0 + t.interference)))
        .sum();
    (reward, timing.t_data())
}
