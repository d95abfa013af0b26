//! The probing value function and its thresholds.
//!
//! For a contention winner whose direct-link SNR is `γ`, probing the RSU at
//! price `λ` is worth
//!
//! ```text
//! W(γ, λ) = E[ max{ τ_d1 · max{R_d, R_r} − λ τ_d, −λ τ_1 } ]
//! ```
//!
//! where the expectation runs over the two relay hops. Replacing the AF
//! combiner by `min(γ1, γ2)` (exponential with rate `c = 1/μ1 + 1/μ2`)
//! gives the closed form [`w_hat`].

use std::f64::consts::LN_2;

use rand::Rng;

use crate::channel::{direct_rate, relay_rate, relay_snr, relay_snr_minapprox, sample_exponential, SnrDraw, SnrMeans};
use crate::error::{invalid, Error, Result};
use crate::optimizer::special::scaled_exp_integral_e1;
use crate::time::Nanos;

/// Data and probing durations. The relayed data interval is
/// `τ_d1 = τ_d − τ_1` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParams {
    t_data: Nanos,
    t_probe: Nanos,
}

impl TimingParams {
    pub fn new(t_data: Nanos, t_probe: Nanos) -> Result<Self> {
        if t_probe.is_zero() || t_data <= t_probe {
            return Err(invalid(
                "t_data",
                format!("require t_data ({t_data}) > t_probe ({t_probe}) > 0"),
            ));
        }
        Ok(TimingParams { t_data, t_probe })
    }

    pub fn t_data(&self) -> Nanos {
        self.t_data
    }

    pub fn t_probe(&self) -> Nanos {
        self.t_probe
    }

    pub fn t_data_relay(&self) -> Nanos {
        self.t_data - self.t_probe
    }

    pub(crate) fn us(&self) -> (f64, f64, f64) {
        (
            self.t_data.as_micros(),
            self.t_probe.as_micros(),
            self.t_data_relay().as_micros(),
        )
    }
}

/// Per-pair statistics the closed form needs: the rate `c` of
/// `min(γ1, γ2)` and the mean direct SNR `σ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRelayStats {
    pub c: f64,
    pub sigma2: f64,
}

impl PairRelayStats {
    pub fn new(c: f64, sigma2: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", format!("must be positive and finite, got {c}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid("sigma2", format!("must be positive and finite, got {sigma2}")));
        }
        Ok(PairRelayStats { c, sigma2 })
    }

    /// `c = 1/μ_up + 1/μ_down`; equals `N0 (d_SR^α/P_s + d_RD^α/P_r) / β0`.
    pub fn from_means(direct: f64, uplink: f64, downlink: f64) -> Result<Self> {
        PairRelayStats::new(1.0 / uplink + 1.0 / downlink, direct)
    }

    pub fn all_from_means(means: &SnrMeans) -> Result<Vec<Self>> {
        (0..means.k())
            .map(|i| PairRelayStats::from_means(means.direct[i], means.uplink[i], means.downlink[i]))
            .collect()
    }
}

/// The SNR at which the direct rate equals `λ`: `2^λ − 1`.
pub fn rate_threshold(lambda: f64) -> f64 {
    (lambda * LN_2).exp_m1()
}

/// Closed-form probing value (time in µs, `λ` in bits/s/Hz):
///
/// ```text
/// Ŵ = τ_d1/(2 ln 2) · e^{−c(Ω−γ)} (ln(Ω+1) + e^{c(Ω+1)} E1(c(Ω+1)))
///   + τ_d1 (1[R_d > λ](R_d − λ) F(γ²+γ) + λ F(Ω−γ)) − λ τ_d
/// ```
///
/// with `Ω = max{4^λ − 1, γ² + 2γ}` and `F(x) = 1 − e^{−cx}`. The
/// `e^{c(1+γ)} E1(c(Ω+1))` product is formed as `e^{−c(Ω−γ)} · e^x E1(x)`
/// so it never overflows.
pub fn w_hat(pair: &PairRelayStats, timing: &TimingParams, gamma: f64, lambda: f64) -> f64 {
    let c = pair.c;
    let (t_d, _, t_d1) = timing.us();
    let rd = direct_rate(gamma);
    let ln_omega1 = (lambda * 2.0 * LN_2).max(2.0 * gamma.ln_1p());
    let omega = ln_omega1.exp_m1();
    let cdf = |x: f64| -(-c * x).exp_m1();

    let (relay_tail, f_gap) = if omega.is_finite() {
        let gap = (omega - gamma).max(0.0);
        let decay = (-c * gap).exp();
        let scaled = scaled_exp_integral_e1(c * (omega + 1.0)).unwrap_or(0.0);
        (decay * (ln_omega1 + scaled), cdf(gap))
    } else {
        (0.0, 1.0)
    };
    let direct = if rd > lambda {
        (rd - lambda) * cdf(gamma * gamma + gamma)
    } else {
        0.0
    };
    t_d1 / (2.0 * LN_2) * relay_tail + t_d1 * (direct + lambda * f_gap) - lambda * t_d
}

/// Monte Carlo estimate of the probing value straight from its
/// definition, drawing both relay hops. `use_min_approx` swaps the AF
/// combiner for `min(γ1, γ2)`.
#[allow(clippy::too_many_arguments)]
pub fn w_oracle<R: Rng + ?Sized>(
    uplink_mean: f64,
    downlink_mean: f64,
    timing: &TimingParams,
    gamma: f64,
    lambda: f64,
    use_min_approx: bool,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let (t_d, t_1, t_d1) = timing.us();
    let rd = direct_rate(gamma);
    let floor = -lambda * t_1;
    let mut sum = 0.0;
    for _ in 0..samples {
        let draw = SnrDraw {
            gamma,
            gamma1: sample_exponential(uplink_mean, rng),
            gamma2: sample_exponential(downlink_mean, rng),
        };
        let snr_r = if use_min_approx {
            relay_snr_minapprox(&draw)
        } else {
            relay_snr(&draw)
        };
        let best = rd.max(relay_rate(snr_r));
        sum += (t_d1 * best - lambda * t_d).max(floor);
    }
    sum / samples as f64
}

/// Stage-one thresholds of one pair at a given price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairThresholds {
    /// Probing can pay off: re-contend below `zeta`, stop above `eta`,
    /// probe in between.
    TwoStage { zeta: f64, eta: f64 },
    /// Probing never pays off: stop iff `γ ≥ threshold = 2^λ − 1`.
    SingleStage { threshold: f64 },
}

const ROOT_REL_TOL: f64 = 1e-9;
const ROOT_ABS_TOL: f64 = 1e-14;

/// Bisection for the sign change of an increasing `f` on `[lo, hi]` with
/// `f(lo) < 0 ≤ f(hi)`.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        if hi - lo <= ROOT_REL_TOL * hi + ROOT_ABS_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Grows `hi` geometrically from `start` until `f(hi) ≥ 0`.
fn grow_bracket<F: Fn(f64) -> f64>(f: &F, start: f64, what: &'static str) -> Result<f64> {
    let mut hi = start.max(1.0);
    for _ in 0..1100 {
        let v = f(hi);
        if v >= 0.0 {
            return Ok(hi);
        }
        if !v.is_finite() || !hi.is_finite() {
            break;
        }
        hi *= 2.0;
    }
    Err(Error::NoBracket { what, probe: hi })
}

pub fn in_benefit_set(pair: &PairRelayStats, timing: &TimingParams, lambda: f64) -> bool {
    w_hat(pair, timing, rate_threshold(lambda), lambda) > 0.0
}

/// ζ solves `Ŵ(γ, λ) = 0` (clamped at 0 when `Ŵ(0, λ) ≥ 0`), η solves
/// `Ŵ(γ, λ) = τ_d (log2(1+γ) − λ)`. Pairs outside the benefit set get the
/// single-stage threshold instead.
pub fn find_thresholds(pair: &PairRelayStats, timing: &TimingParams, lambda: f64) -> Result<PairThresholds> {
    let pivot = rate_threshold(lambda);
    if !in_benefit_set(pair, timing, lambda) {
        return Ok(PairThresholds::SingleStage { threshold: pivot });
    }
    let t_d = timing.t_data().as_micros();
    let w = |g: f64| w_hat(pair, timing, g, lambda);
    // Ŵ is nondecreasing and Ŵ(pivot) > 0, so ζ ∈ [0, pivot).
    let zeta = if w(0.0) >= 0.0 { 0.0 } else { bisect(w, 0.0, pivot) };
    // The direct-minus-probe gap is increasing and negative at the pivot.
    let gap = |g: f64| t_d * (direct_rate(g) - lambda) - w(g);
    let hi = grow_bracket(&gap, 2.0 * pivot, "eta")?;
    let eta = bisect(gap, pivot, hi);
    Ok(PairThresholds::TwoStage { zeta, eta })
}

/// Indices whose probing value at `γ = 2^λ − 1` is positive.
pub fn benefit_set(pairs: &[PairRelayStats], timing: &TimingParams, lambda: f64) -> Vec<usize> {
    pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| in_benefit_set(p, timing, lambda))
        .map(|(i, _)| i)
        .collect()
}
