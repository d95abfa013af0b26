use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rpca::contention::{contend, contend_sampled, mean_observation_duration, ContentionOutcome, ContentionParams};
use rpca::{Nanos, Result};

const TRIALS: usize = 1_000_000;

fn reference() -> ContentionParams {
    ContentionParams::new(8, 0.3, Nanos::from_micros(50), Nanos::from_micros(100), Nanos::from_micros(100)).unwrap()
}

struct Stats {
    mean_us: f64,
    slot_var: f64,
    idle_fraction: f64,
    winners: [u64; 8],
}

fn collect(sampler: fn(&ContentionParams, &mut ChaCha8Rng) -> Result<ContentionOutcome>, seed: u64) -> Stats {
    let params = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut t, mut n, mut n2, mut idle, mut failed) = (0.0, 0.0, 0.0, 0u64, 0u64);
    let mut winners = [0u64; 8];
    for _ in 0..TRIALS {
        let o = sampler(&params, &mut rng).unwrap();
        assert_eq!(o.slots.success, 1);
        t += o.elapsed.as_micros();
        let slots = (o.slots.idle + o.slots.collision + 1) as f64;
        n += slots;
        n2 += slots * slots;
        idle += o.slots.idle;
        failed += o.slots.idle + o.slots.collision;
        winners[o.winner] += 1;
    }
    let m = TRIALS as f64;
    let mean_slots = n / m;
    Stats {
        mean_us: t / m,
        slot_var: n2 / m - mean_slots * mean_slots,
        idle_fraction: idle as f64 / failed as f64,
        winners,
    }
}

fn check(stats: &Stats) {
    let params = reference();
    let q = params.success_probability();

    let tau_o = mean_observation_duration(&params).unwrap();
    assert!((stats.mean_us - tau_o).abs() < 0.01 * tau_o, "{} vs {tau_o}", stats.mean_us);

    let var = (1.0 - q) / (q * q);
    assert!((stats.slot_var - var).abs() < 0.02 * var, "{} vs {var}", stats.slot_var);

    let idle = params.idle_probability() / (1.0 - q);
    assert!((stats.idle_fraction - idle).abs() < 0.005, "{} vs {idle}", stats.idle_fraction);

    let e = TRIALS as f64 / 8.0;
    let chi2: f64 = stats.winners.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 7 degrees of freedom at 1% significance.
    assert!(chi2 < 18.475, "chi2 = {chi2}, counts {:?}", stats.winners);
}

#[test]
fn slot_walk_matches_analytic_law() {
    check(&collect(contend, 5));
}

#[test]
fn aggregated_sampler_matches_analytic_law() {
    check(&collect(contend_sampled, 6));
}

#[test]
fn aggregated_sampler_respects_guards() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut p = reference();
    p.p0 = 1.0;
    assert!(contend_sampled(&p, &mut rng).is_err());
    let mut p = reference();
    p.max_slots = 1;
    let outcomes: Vec<_> = (0..1_000).map(|_| contend_sampled(&p, &mut rng)).collect();
    assert!(outcomes.iter().any(|o| o.is_err()));
    assert!(outcomes.iter().flatten().all(|o| o.slots.idle + o.slots.collision == 0));
}
