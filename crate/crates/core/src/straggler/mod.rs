//! Straggler patterns, delay profiles and the deterministic straggler models.
//!
//! Rounds are 1-indexed throughout: `pattern.is_straggler(i, 1)` is the first
//! round.

mod generate;
mod io;
mod models;

pub use generate::{gen_conforming, gen_ge, gen_ge_profile, gen_periodic_bursty, gen_uniform};
pub use io::{read_pattern, read_profile, write_pattern, write_profile};
pub use models::{
    check_arbitrary, check_bursty, check_per_round, conforms, AssumedModel, ConformanceTracker,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Boolean worker x round straggler indicator `S_i(t)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StragglerPattern {
    n: usize,
    /// `columns[t-1][i]` is `S_i(t)`.
    columns: Vec<Vec<bool>>,
}

impl StragglerPattern {
    /// All-false pattern.
    pub fn empty(n: usize, rounds: usize) -> Self {
        Self {
            n,
            columns: vec![vec![false; n]; rounds],
        }
    }

    /// Builds a pattern from per-round columns.
    pub fn from_columns(n: usize, columns: Vec<Vec<bool>>) -> Result<Self> {
        if let Some((t, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(Error::param(format!(
                "round {} has {} entries, expected {n}",
                t + 1,
                c.len()
            )));
        }
        Ok(Self { n, columns })
    }

    /// Builds a pattern from `(worker, round)` straggling events.
    pub fn from_events(n: usize, rounds: usize, events: &[(usize, usize)]) -> Result<Self> {
        let mut p = Self::empty(n, rounds);
        for &(w, t) in events {
            if w >= n || t == 0 || t > rounds {
                return Err(Error::param(format!(
                    "event (worker {w}, round {t}) out of range"
                )));
            }
            p.columns[t - 1][w] = true;
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> usize {
        self.columns.len()
    }

    pub fn is_straggler(&self, worker: usize, round: usize) -> bool {
        self.columns[round - 1][worker]
    }

    pub fn set(&mut self, worker: usize, round: usize, value: bool) {
        self.columns[round - 1][worker] = value;
    }

    /// Straggler flags of round `round`.
    pub fn column(&self, round: usize) -> &[bool] {
        &self.columns[round - 1]
    }

    pub fn columns(&self) -> &[Vec<bool>] {
        &self.columns
    }

    pub fn push_round(&mut self, column: Vec<bool>) {
        assert_eq!(column.len(), self.n, "column width");
        self.columns.push(column);
    }

    pub fn stragglers_in(&self, round: usize) -> usize {
        self.column(round).iter().filter(|&&s| s).count()
    }

    /// Fraction of straggling (worker, round) cells.
    pub fn straggler_fraction(&self) -> f64 {
        let total = self.n * self.rounds();
        if total == 0 {
            return 0.0;
        }
        let count: usize = self
            .columns
            .iter()
            .map(|c| c.iter().filter(|&&s| s).count())
            .sum();
        count as f64 / total as f64
    }

    /// First `rounds` rounds (or fewer if the pattern is shorter).
    pub fn prefix(&self, rounds: usize) -> Self {
        Self {
            n: self.n,
            columns: self.columns[..rounds.min(self.rounds())].to_vec(),
        }
    }
}

/// Per-worker per-round completion times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    n: usize,
    /// `times[t-1][i]` is worker `i`'s completion time in round `t`.
    times: Vec<Vec<f64>>,
}

impl DelayProfile {
    pub fn new(n: usize, times: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("delay profile needs at least one worker"));
        }
        for (t, row) in times.iter().enumerate() {
            if row.len() != n {
                return Err(Error::param(format!(
                    "profile round {} has {} entries, expected {n}",
                    t + 1,
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::param(format!(
                    "profile round {} has non-positive or non-finite time {v}",
                    t + 1
                )));
            }
        }
        Ok(Self { n, times })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> usize {
        self.times.len()
    }

    pub fn time(&self, worker: usize, round: usize) -> f64 {
        self.times[round - 1][worker]
    }

    pub fn round_times(&self, round: usize) -> &[f64] {
        &self.times[round - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.times
    }

    /// Fastest completion time `kappa(t)`.
    pub fn kappa(&self, round: usize) -> f64 {
        self.round_times(round)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Slowest completion time of round `round`.
    pub fn slowest(&self, round: usize) -> f64 {
        self.round_times(round).iter().copied().fold(0.0, f64::max)
    }

    /// Profile of length `rounds`, repeating this one cyclically.
    pub fn cycled(&self, rounds: usize) -> Self {
        let times = (0..rounds)
            .map(|t| self.times[t % self.times.len()].clone())
            .collect();
        Self { n: self.n, times }
    }

    /// First `rounds` rounds.
    pub fn prefix(&self, rounds: usize) -> Self {
        Self {
            n: self.n,
            times: self.times[..rounds.min(self.rounds())].to_vec(),
        }
    }

    /// Rounds from `start` (1-indexed) to the end.
    pub fn suffix(&self, start: usize) -> Self {
        Self {
            n: self.n,
            times: self.times[(start - 1).min(self.rounds())..].to_vec(),
        }
    }
}

/// `(B, W, lambda)`-bursty model: per `W`-window at most `lambda` distinct
/// stragglers, and each worker's straggling rounds span at most `B` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstyModel {
    pub burst: usize,
    pub window: usize,
    pub lambda: usize,
}

impl BurstyModel {
    pub fn new(burst: usize, window: usize, lambda: usize) -> Result<Self> {
        if burst == 0 || burst > window {
            return Err(Error::param(format!(
                "bursty model needs 1 <= B <= W, got B={burst}, W={window}"
            )));
        }
        Ok(Self {
            burst,
            window,
            lambda,
        })
    }
}

/// `(N, W', lambda')`-arbitrary model: per `W'`-window at most `lambda'`
/// distinct stragglers, each straggling in at most `N` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArbitraryModel {
    pub max_per_worker: usize,
    pub window: usize,
    pub lambda: usize,
}

impl ArbitraryModel {
    pub fn new(max_per_worker: usize, window: usize, lambda: usize) -> Result<Self> {
        if window == 0 || max_per_worker > window {
            return Err(Error::param(format!(
                "arbitrary model needs 0 <= N <= W' and W' >= 1, got N={max_per_worker}, W'={window}"
            )));
        }
        Ok(Self {
            max_per_worker,
            window,
            lambda,
        })
    }
}

/// At most `s` stragglers in every round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerRoundModel {
    pub s: usize,
}

/// Gilbert-Elliott straggler chain parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeParams {
    /// Probability that a straggler becomes a non-straggler next round.
    pub p_s: f64,
    /// Probability that a non-straggler becomes a straggler next round.
    pub p_n: f64,
    pub seed: u64,
}

impl GeParams {
    pub fn new(p_s: f64, p_n: f64, seed: u64) -> Result<Self> {
        for (name, p) in [("p_S", p_s), ("p_N", p_n)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("{name}={p} outside [0, 1]")));
            }
        }
        Ok(Self { p_s, p_n, seed })
    }
}

/// Marks worker `i` a straggler in round `t` iff its time exceeds
/// `(1 + mu) * kappa(t)`.
pub fn pattern_from_profile(profile: &DelayProfile, mu: f64) -> Result<StragglerPattern> {
    if !(mu > 0.0) {
        return Err(Error::param(format!("mu must be positive, got {mu}")));
    }
    let columns = (1..=profile.rounds())
        .map(|t| straggler_column(profile.round_times(t), mu))
        .collect();
    StragglerPattern::from_columns(profile.n(), columns)
}

/// The mu rule applied to one round's completion times.
pub fn straggler_column(times: &[f64], mu: f64) -> Vec<bool> {
    let kappa = times.iter().copied().fold(f64::INFINITY, f64::min);
    let cutoff = (1.0 + mu) * kappa;
    times.iter().map(|&x| x > cutoff).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_rule_threshold() {
        let profile = DelayProfile::new(3, vec![vec![1.0, 2.1, 1.5]]).unwrap();
        let p = pattern_from_profile(&profile, 1.0).unwrap();
        assert_eq!(p.column(1), &[false, true, false]);
    }

    #[test]
    fn equal_times_and_huge_mu_give_no_stragglers() {
        let profile = DelayProfile::new(3, vec![vec![2.0; 3], vec![1.0, 50.0, 3.0]]).unwrap();
        let p = pattern_from_profile(&profile, 1.0).unwrap();
        assert_eq!(p.stragglers_in(1), 0);
        let p = pattern_from_profile(&profile, f64::INFINITY).unwrap();
        assert_eq!(p.stragglers_in(2), 0);
        assert!(pattern_from_profile(&profile, 0.0).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(DelayProfile::new(2, vec![vec![1.0, 0.0]]).is_err());
        assert!(DelayProfile::new(2, vec![vec![1.0, f64::NAN]]).is_err());
        assert!(DelayProfile::new(2, vec![vec![1.0]]).is_err());
        let p = DelayProfile::new(2, vec![vec![1.0, 3.0], vec![2.0, 1.5]]).unwrap();
        assert_eq!(p.kappa(2), 1.5);
        assert_eq!(p.slowest(1), 3.0);
        assert_eq!(p.cycled(5).round_times(5), &[1.0, 3.0]);
    }

    #[test]
    fn model_validation() {
        assert!(BurstyModel::new(0, 3, 1).is_err());
        assert!(BurstyModel::new(4, 3, 1).is_err());
        assert!(ArbitraryModel::new(5, 4, 1).is_err());
        assert!(GeParams::new(1.2, 0.1, 0).is_err());
    }
}
