//! Mean SNRs from path loss, Rayleigh (exponential-power) fading draws, and
//! direct / amplify-and-forward relay rates.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{invalid, Error, Result};
use crate::geometry::{distances, DistanceInfo, NetworkGeometry};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// Link-budget parameters, all linear (powers in mW).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub p_source: f64,
    pub p_rsu: f64,
    pub noise: f64,
    pub alpha_v2v: f64,
    pub alpha_v2r: f64,
    /// Reference path gain at 1 m, applied to every link.
    pub ref_gain: f64,
}

impl ChannelParams {
    /// Builds parameters from dBm / dB quantities.
    pub fn from_db(
        p_source_dbm: f64,
        p_rsu_dbm: f64,
        noise_dbm: f64,
        alpha_v2v: f64,
        alpha_v2r: f64,
        ref_gain_db: f64,
    ) -> Result<Self> {
        let params = ChannelParams {
            p_source: dbm_to_mw(p_source_dbm),
            p_rsu: dbm_to_mw(p_rsu_dbm),
            noise: dbm_to_mw(noise_dbm),
            alpha_v2v,
            alpha_v2r,
            ref_gain: db_to_linear(ref_gain_db),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_source", self.p_source),
            ("p_rsu", self.p_rsu),
            ("noise", self.noise),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("power must be positive, got {v}")));
            }
        }
        for (name, v) in [("alpha_v2v", self.alpha_v2v), ("alpha_v2r", self.alpha_v2r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("path-loss exponent must be positive, got {v}")));
            }
        }
        if !(self.ref_gain > 0.0 && self.ref_gain <= 1.0) {
            return Err(invalid("ref_gain", format!("must lie in (0, 1], got {}", self.ref_gain)));
        }
        Ok(())
    }

    fn mean_snr(&self, power: f64, distance: f64, alpha: f64) -> f64 {
        self.ref_gain * power * distance.powf(-alpha) / self.noise
    }
}

/// Linear mean SNRs per pair: V2V, source→RSU, RSU→destination.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrMeans {
    pub direct: Vec<f64>,
    pub uplink: Vec<f64>,
    pub downlink: Vec<f64>,
}

impl SnrMeans {
    pub fn k(&self) -> usize {
        self.direct.len()
    }
}

pub fn snr_means(geometry: &NetworkGeometry, params: &ChannelParams) -> Result<SnrMeans> {
    snr_means_from_distances(&distances(geometry), params)
}

pub fn snr_means_from_distances(d: &DistanceInfo, params: &ChannelParams) -> Result<SnrMeans> {
    let degenerate = d
        .v2v
        .iter()
        .chain(d.v2r.iter().flat_map(|(a, b)| [a, b]))
        .any(|&x| !(x > 0.0));
    if degenerate {
        return Err(Error::DegenerateGeometry(
            "zero link distance; path loss undefined".into(),
        ));
    }
    let direct = d
        .v2v
        .iter()
        .map(|&x| params.mean_snr(params.p_source, x, params.alpha_v2v))
        .collect();
    let uplink = d
        .v2r
        .iter()
        .map(|&(sr, _)| params.mean_snr(params.p_source, sr, params.alpha_v2r))
        .collect();
    let downlink = d
        .v2r
        .iter()
        .map(|&(_, rd)| params.mean_snr(params.p_rsu, rd, params.alpha_v2r))
        .collect();
    let means = SnrMeans {
        direct,
        uplink,
        downlink,
    };
    let all_ok = means
        .direct
        .iter()
        .chain(&means.uplink)
        .chain(&means.downlink)
        .all(|m| *m > 0.0 && m.is_finite());
    if !all_ok {
        return Err(Error::DegenerateGeometry("mean SNR not positive and finite".into()));
    }
    Ok(means)
}

/// Mean SNR at destination `i` of a V2V transmission by source `j`,
/// `cross[i][j]`. The diagonal holds the wanted-link means.
pub fn cross_link_means(geometry: &NetworkGeometry, params: &ChannelParams, min_distance: f64) -> Vec<Vec<f64>> {
    let pairs = geometry.pairs();
    pairs
        .iter()
        .map(|rx| {
            pairs
                .iter()
                .map(|tx| {
                    let d = tx.source.distance(&rx.destination).max(min_distance);
                    params.mean_snr(params.p_source, d, params.alpha_v2v)
                })
                .collect()
        })
        .collect()
}

/// One small-scale realization for the contention winner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrDraw {
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Exponential draw with the given mean; a zero mean yields 0.
pub fn sample_exponential<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let e: f64 = Exp::new(1.0).expect("unit rate").sample(rng);
    e * mean
}

pub fn sample_snrs<R: Rng + ?Sized>(means: &SnrMeans, pair: usize, rng: &mut R) -> SnrDraw {
    SnrDraw {
        gamma: sample_exponential(means.direct[pair], rng),
        gamma1: sample_exponential(means.uplink[pair], rng),
        gamma2: sample_exponential(means.downlink[pair], rng),
    }
}

/// End-to-end SNR of the AF relay path with direct-link combining:
/// `γ + γ1·γ2 / (γ1 + γ2 + 1)`.
pub fn relay_snr(draw: &SnrDraw) -> f64 {
    draw.gamma + draw.gamma1 * draw.gamma2 / (draw.gamma1 + draw.gamma2 + 1.0)
}

/// `γ + min(γ1, γ2)`, the upper bound used by the closed-form optimizer.
pub fn relay_snr_minapprox(draw: &SnrDraw) -> f64 {
    draw.gamma + draw.gamma1.min(draw.gamma2)
}

pub fn direct_rate(gamma: f64) -> f64 {
    gamma.ln_1p() / std::f64::consts::LN_2
}

/// Relay-aided rate; the two-hop transmission halves the pre-log factor.
pub fn relay_rate(relay_snr: f64) -> f64 {
    0.5 * relay_snr.ln_1p() / std::f64::consts::LN_2
}

/// `(direct_rate, relay_rate)` in bits/s/Hz for a draw.
pub fn rates(draw: &SnrDraw) -> (f64, f64) {
    (direct_rate(draw.gamma), relay_rate(relay_snr(draw)))
}

/// Direct-link SNR that would give the same rate as the relay path:
/// `2^{R_r} - 1 = sqrt(1 + γ_r) - 1`. Comparing this against a direct SNR
/// compares rates.
pub fn relay_equivalent_snr(relay_snr: f64) -> f64 {
    (relay_snr.ln_1p() * 0.5).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pair, Position};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draw(gamma: f64, gamma1: f64, gamma2: f64) -> SnrDraw {
        SnrDraw { gamma, gamma1, gamma2 }
    }

    fn one_pair(d: f64) -> NetworkGeometry {
        NetworkGeometry::new(
            vec![Pair {
                source: Position::new(0.0, 0.0),
                destination: Position::new(d, 0.0),
            }],
            Position::new(d / 2.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn mean_snr_at_100m() {
        // 24 dBm = 251.189 mW, -90 dBm = 1e-9 mW, -30 dB = 1e-3, 100^-3 = 1e-6:
        // 251.189 * 1e-3 * 1e-6 / 1e-9 = 251.189.
        let p = ChannelParams::from_db(24.0, 24.0, -90.0, 3.0, 2.5, -30.0).unwrap();
        let m = snr_means(&one_pair(100.0), &p).unwrap();
        assert!((m.direct[0] - 251.188_643_150_958).abs() < 1e-6);
        assert!((linear_to_db(m.direct[0]) - 24.0).abs() < 1e-9);
    }

    #[test]
    fn unit_distance_and_scaling() {
        let p = ChannelParams::from_db(24.0, 24.0, -90.0, 3.0, 2.5, -30.0).unwrap();
        let at = |d: f64| {
            snr_means_from_distances(
                &DistanceInfo {
                    v2v: vec![d],
                    v2r: vec![(d, d)],
                },
                &p,
            )
            .unwrap()
        };
        let m1 = at(1.0);
        assert!((m1.direct[0] - p.ref_gain * p.p_source / p.noise).abs() < 1e-6);
        let ratio = at(50.0).direct[0] / at(100.0).direct[0];
        assert!((ratio - 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_distance_is_degenerate() {
        let p = ChannelParams::from_db(24.0, 24.0, -90.0, 3.0, 2.5, -30.0).unwrap();
        let err = snr_means(&one_pair(0.0), &p).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }

    #[test]
    fn homogeneous_in_source_power_and_noise() {
        let p = ChannelParams::from_db(24.0, 24.0, -90.0, 3.0, 2.5, -30.0).unwrap();
        let mut q = p.clone();
        q.p_source *= 7.5;
        q.noise *= 7.5;
        let g = one_pair(120.0);
        let a = snr_means(&g, &p).unwrap();
        let b = snr_means(&g, &q).unwrap();
        assert!((a.direct[0] / b.direct[0] - 1.0).abs() < 1e-12);
        assert!((a.uplink[0] / b.uplink[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relay_snr_cases() {
        assert!((relay_snr(&draw(2.0, 3.0, 6.0)) - 3.8).abs() < 1e-12);
        assert_eq!(relay_snr(&draw(2.0, 0.0, 6.0)), 2.0);
        assert_eq!(relay_snr_minapprox(&draw(2.0, 3.0, 6.0)), 5.0);
        let x = 1e6;
        let asym = 1.0 + x / 2.0;
        assert!((relay_snr(&draw(1.0, x, x)) / asym - 1.0).abs() < 1e-3);
    }

    #[test]
    fn min_approx_close_when_unbalanced() {
        for &g2 in &[0.1, 1.0, 5.0, 20.0] {
            for &mult in &[10.0, 100.0, 1e4] {
                let g1 = g2 * mult;
                let d = draw(0.0, g1, g2);
                let gap = relay_snr_minapprox(&d) - relay_snr(&d);
                assert!(gap >= 0.0);
                // min - g1 g2/(g1+g2+1) = g2 (g2 + 1)/(g1 + g2 + 1) <= (g2^2 + g2)/g1
                assert!(gap <= (g2 * g2 + g2) / g1 + 1e-12);
            }
        }
    }

    #[test]
    fn rate_cases() {
        assert_eq!(rates(&draw(1.0, 0.0, 0.0)), (1.0, 0.5));
        // γ1 γ2/(γ1+γ2+1) = 3 with γ1 = γ2 = 3 + sqrt(12)
        let g = 3.0 + 12f64.sqrt();
        let (d, r) = rates(&draw(0.0, g, g));
        assert_eq!(d, 0.0);
        assert!((r - 1.0).abs() < 1e-12);
        let (d, r) = rates(&draw(3.0, 8.0, 8.0));
        assert!((d - 2.0).abs() < 1e-12);
        // 0.5 * log2(1 + 3 + 64/17)
        assert!((r - 0.5 * (4.0f64 + 64.0 / 17.0).log2()).abs() < 1e-12);
        assert!((r - 1.4784).abs() < 1e-4);
    }

    #[test]
    fn equivalent_snr_matches_rate() {
        for &s in &[0.0, 0.3, 3.0, 80.0, 1e5] {
            let e = relay_equivalent_snr(s);
            assert!((direct_rate(e) - relay_rate(s)).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_sample_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mean = 5.0;
        let (mut sum, mut below) = (0.0, 0usize);
        for _ in 0..n {
            let x = sample_exponential(mean, &mut rng);
            sum += x;
            if x <= mean {
                below += 1;
            }
        }
        assert!((sum / n as f64 / mean - 1.0).abs() < 0.01);
        let cdf = below as f64 / n as f64;
        assert!((cdf - (1.0 - (-1f64).exp())).abs() < 0.005 * 0.632);
        assert_eq!(sample_exponential(0.0, &mut rng), 0.0);
    }
}
