use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    AssumedModel, BurstyModel, ConformanceTracker, DelayProfile, GeParams, StragglerPattern,
};
use crate::{Error, Result};

/// Independent two-state Gilbert-Elliott chain per worker, starting in the
/// non-straggler state in round 1.
pub fn gen_ge(n: usize, rounds: usize, ge: &GeParams) -> StragglerPattern {
    let mut p = StragglerPattern::empty(n, rounds);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(ge.seed);
        rng.set_stream(i as u64);
        let mut straggling = false;
        for t in 1..=rounds {
            if t > 1 {
                let u: f64 = rng.random();
                straggling = if straggling { u >= ge.p_s } else { u < ge.p_n };
            }
            p.set(i, t, straggling);
        }
    }
    p
}

/// Worst-case periodic bursty pattern: workers `[0, lambda)` straggle together
/// for `B` rounds out of every `W - 1 + B`, or in every round when `B = W`.
pub fn gen_periodic_bursty(n: usize, rounds: usize, m: &BurstyModel) -> Result<StragglerPattern> {
    if m.lambda > n {
        return Err(Error::param(format!("lambda={} exceeds n={n}", m.lambda)));
    }
    let period = m.window - 1 + m.burst;
    let mut p = StragglerPattern::empty(n, rounds);
    for t in 1..=rounds {
        if m.burst == m.window || (t - 1) % period < m.burst {
            for i in 0..m.lambda {
                p.set(i, t, true);
            }
        }
    }
    Ok(p)
}

/// Independent Bernoulli(`prob`) stragglers.
pub fn gen_uniform(n: usize, rounds: usize, prob: f64, seed: u64) -> StragglerPattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..rounds)
        .map(|_| {
            (0..n)
                .map(|_| rng.random_bool(prob.clamp(0.0, 1.0)))
                .collect()
        })
        .collect();
    StragglerPattern::from_columns(n, columns).expect("columns have width n")
}

/// Random pattern conforming to `model`: each round, workers are visited in a
/// random order and each proposed straggle (probability `prob`) is kept only
/// if the pattern stays conforming.
pub fn gen_conforming(
    n: usize,
    rounds: usize,
    model: &AssumedModel,
    prob: f64,
    seed: u64,
) -> StragglerPattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = ConformanceTracker::new(n, model.clone());
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..rounds {
        let mut column = vec![false; n];
        order.shuffle(&mut rng);
        for &i in &order {
            if rng.random_bool(prob.clamp(0.0, 1.0)) {
                column[i] = true;
                if !tracker.admits(&column) {
                    column[i] = false;
                }
            }
        }
        let admitted = tracker.push(&column);
        debug_assert!(admitted);
    }
    tracker.pattern().clone()
}

/// Delay profile driven by a Gilbert-Elliott pattern: non-stragglers draw
/// uniformly from `fast`, stragglers from `slow` (seconds).
pub fn gen_ge_profile(
    n: usize,
    rounds: usize,
    ge: &GeParams,
    fast: (f64, f64),
    slow: (f64, f64),
) -> Result<DelayProfile> {
    for (lo, hi) in [fast, slow] {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::param(format!("invalid time range [{lo}, {hi}]")));
        }
    }
    let pattern = gen_ge(n, rounds, ge);
    let mut rng = ChaCha8Rng::seed_from_u64(ge.seed ^ 0x5eed_7135);
    let mut draw = |(lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..hi)
        }
    };
    let times = (1..=rounds)
        .map(|t| {
            (0..n)
                .map(|i| {
                    draw(if pattern.is_straggler(i, t) {
                        slow
                    } else {
                        fast
                    })
                })
                .collect()
        })
        .collect();
    DelayProfile::new(n, times)
}
