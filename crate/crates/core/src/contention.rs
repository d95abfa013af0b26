//! Slotted p-persistent RTS/CTS contention.
//!
//! Every slot each of the K sources sends an RTS with probability `p0`.
//! No sender: idle slot (δ). Two or more: collision (τ_R). Exactly one:
//! success, the RTS/CTS exchange takes τ_R + τ_C and the sender wins.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric};

use crate::error::{invalid, Error, Result};
use crate::time::Nanos;

pub const DEFAULT_MAX_SLOTS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ContentionParams {
    pub k_pairs: usize,
    pub p0: f64,
    pub slot_idle: Nanos,
    pub t_rts: Nanos,
    pub t_cts: Nanos,
    pub max_slots: u64,
}

impl ContentionParams {
    pub fn new(k_pairs: usize, p0: f64, slot_idle: Nanos, t_rts: Nanos, t_cts: Nanos) -> Result<Self> {
        let params = ContentionParams {
            k_pairs,
            p0,
            slot_idle,
            t_rts,
            t_cts,
            max_slots: DEFAULT_MAX_SLOTS,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_pairs == 0 {
            return Err(invalid("k", "K must be at least 1"));
        }
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return Err(invalid("p0", format!("must lie in (0, 1], got {}", self.p0)));
        }
        if self.slot_idle.is_zero() || self.t_rts.is_zero() || self.t_cts.is_zero() {
            return Err(invalid("durations", "slot, RTS and CTS durations must be positive"));
        }
        if self.max_slots == 0 {
            return Err(invalid("max_slots", "must be positive"));
        }
        Ok(())
    }

    /// τ_R + τ_C, the cost of the successful slot (and of an RSU probe).
    pub fn handshake(&self) -> Nanos {
        self.t_rts + self.t_cts
    }

    /// Probability that a slot carries exactly one RTS: `K p0 (1-p0)^{K-1}`.
    pub fn success_probability(&self) -> f64 {
        let k = self.k_pairs as f64;
        k * self.p0 * (1.0 - self.p0).powi(self.k_pairs as i32 - 1)
    }

    pub fn idle_probability(&self) -> f64 {
        (1.0 - self.p0).powi(self.k_pairs as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotCounts {
    pub idle: u64,
    pub collision: u64,
    pub success: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContentionOutcome {
    pub winner: usize,
    pub elapsed: Nanos,
    pub slots: SlotCounts,
}

/// Runs one contention until a single source transmits.
pub fn contend<R: Rng + ?Sized>(params: &ContentionParams, rng: &mut R) -> Result<ContentionOutcome> {
    let mut slots = SlotCounts::default();
    let mut elapsed = Nanos::ZERO;
    for _ in 0..params.max_slots {
        let mut senders = 0usize;
        let mut last = 0usize;
        for i in 0..params.k_pairs {
            if rng.random_bool(params.p0) {
                senders += 1;
                last = i;
            }
        }
        match senders {
            0 => {
                slots.idle += 1;
                elapsed += params.slot_idle;
            }
            1 => {
                slots.success = 1;
                elapsed += params.handshake();
                return Ok(ContentionOutcome {
                    winner: last,
                    elapsed,
                    slots,
                });
            }
            _ => {
                slots.collision += 1;
                elapsed += params.t_rts;
            }
        }
    }
    Err(Error::SlotLimit(params.max_slots))
}

/// Draws a contention with the same law as [`contend`] without walking
/// the slots: the number of failed slots is geometric with success
/// probability `q`, each failed slot is idle with probability
/// `(1-p0)^K / (1-q)`, and the winner is uniform. Cost is independent of
/// the contention length, which matters for large `p0`.
pub fn contend_sampled<R: Rng + ?Sized>(params: &ContentionParams, rng: &mut R) -> Result<ContentionOutcome> {
    let q = params.success_probability();
    if !(q > 0.0) {
        return Err(Error::SlotLimit(params.max_slots));
    }
    let failed = Geometric::new(q.min(1.0))
        .map_err(|e| invalid("p0", e.to_string()))?
        .sample(rng);
    if failed >= params.max_slots {
        return Err(Error::SlotLimit(params.max_slots));
    }
    let idle = if failed == 0 {
        0
    } else {
        let p_idle = (params.idle_probability() / (1.0 - q)).clamp(0.0, 1.0);
        Binomial::new(failed, p_idle)
            .map_err(|e| invalid("p0", e.to_string()))?
            .sample(rng)
    };
    let collision = failed - idle;
    Ok(ContentionOutcome {
        winner: rng.random_range(0..params.k_pairs),
        elapsed: params.slot_idle * idle + params.t_rts * collision + params.handshake(),
        slots: SlotCounts {
            idle,
            collision,
            success: 1,
        },
    })
}

/// Closed-form mean contention duration τ_o in microseconds:
/// `τ_R + τ_C + [(1-p0)^K δ + (1 - (1-p0)^K - q) τ_R] / q` with
/// `q = K p0 (1-p0)^{K-1}`.
pub fn mean_observation_duration(params: &ContentionParams) -> Result<f64> {
    let q = params.success_probability();
    if !(q > 0.0) {
        return Err(Error::UndefinedObservationDuration);
    }
    let idle = params.idle_probability();
    let delta = params.slot_idle.as_micros();
    let t_rts = params.t_rts.as_micros();
    Ok(params.handshake().as_micros() + (idle * delta + (1.0 - idle - q) * t_rts) / q)
}
