//! `(n, s)` gradient coding, its replication simplification, and a
//! deterministic partial-gradient oracle used to check decoding end to end.
//!
//! The dataset is split into `n` equal chunks and worker `i` stores chunks
//! `[i : i+s]*` (indices mod `n`). Worker `i` returns
//! `l_i = sum_j alpha[i][j] * g_j` over its support, and any `n - s` of these
//! results determine `g = sum_j g_j`.
//!
//! Coefficients are drawn so that every row lies in the null space of a random
//! `s x n` matrix `H` with `H * 1 = 0`. That null space has dimension `n - s`
//! and contains the all-ones vector, so any `n - s` linearly independent rows
//! span it. Independence holds for almost every draw of `H`, and is verified
//! explicitly after construction.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative residual accepted when solving for decoding coefficients.
pub const DECODE_TOLERANCE: f64 = 1e-8;

/// Straggler sets checked exhaustively up to this count, sampled above it.
pub const DEFAULT_VERIFY_CAP: usize = 10_000;

const MAX_CONSTRUCTION_ATTEMPTS: u64 = 16;

/// `(n, s)` gradient code with cyclic support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcCode {
    n: usize,
    s: usize,
    coeffs: Vec<Vec<f64>>,
    seed: u64,
}

impl GcCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Seed that produced the coefficients (may differ from the requested
    /// seed if construction had to retry).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn coeff(&self, worker: usize, chunk: usize) -> f64 {
        self.coeffs[worker][chunk]
    }

    pub fn row(&self, worker: usize) -> &[f64] {
        &self.coeffs[worker]
    }

    /// Chunks stored by `worker`: `[worker : worker+s]*`.
    pub fn support(&self, worker: usize) -> impl Iterator<Item = usize> + '_ {
        cyclic_support(worker, self.s, self.n)
    }

    /// Worker result `l_w = sum_j alpha[w][j] * partials[j]`, with
    /// `partials` indexed by chunk.
    pub fn encode(&self, worker: usize, partials: &[Vec<f64>]) -> Vec<f64> {
        let dim = partials.first().map_or(0, Vec::len);
        let mut out = vec![0.0; dim];
        for chunk in self.support(worker) {
            let a = self.coeffs[worker][chunk];
            for (o, g) in out.iter_mut().zip(&partials[chunk]) {
                *o += a * g;
            }
        }
        out
    }

    /// Solves `sum_w beta_w * row_w = 1` over the given responders in the
    /// least-squares sense and returns `(worker, beta_w)` pairs.
    pub fn decoding_coefficients(&self, responders: &[usize]) -> Result<Vec<(usize, f64)>> {
        let mut workers = responders.to_vec();
        workers.sort_unstable();
        workers.dedup();
        if workers.len() + self.s < self.n {
            return Err(Error::InsufficientResults(format!(
                "{} responders, need at least {}",
                workers.len(),
                self.n - self.s
            )));
        }
        if let Some(&w) = workers.iter().find(|&&w| w >= self.n) {
            return Err(Error::param(format!(
                "worker {w} out of range for n={}",
                self.n
            )));
        }
        // Any n - s responders span the all-ones vector (checked at
        // construction), so decode from the lowest-indexed n - s of them.
        let subset = &workers[..self.n - self.s];
        let (mut beta, mut residual) = solve_ones(&self.coeffs, subset, self.n);
        let mut used = subset.to_vec();
        if residual > DECODE_TOLERANCE {
            (beta, residual) = solve_ones(&self.coeffs, &workers, self.n);
            used = workers;
        }
        if residual > DECODE_TOLERANCE {
            return Err(Error::NumericalDecode {
                residual,
                tolerance: DECODE_TOLERANCE,
            });
        }
        Ok(used.into_iter().zip(beta).collect())
    }
}

/// Indices `[start : start+len]*` modulo `n`.
pub fn cyclic_support(start: usize, len_minus_one: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..=len_minus_one).map(move |k| (start + k) % n)
}

/// Builds an `(n, s)` gradient code, verifying the spanning property over
/// all straggler sets (or [`DEFAULT_VERIFY_CAP`] sampled ones).
pub fn build_gc(n: usize, s: usize, seed: u64) -> Result<GcCode> {
    build_gc_with_cap(n, s, seed, DEFAULT_VERIFY_CAP)
}

/// [`build_gc`] with an explicit cap on the number of verified straggler sets.
pub fn build_gc_with_cap(n: usize, s: usize, seed: u64, verify_cap: usize) -> Result<GcCode> {
    if n == 0 || s >= n {
        return Err(Error::param(format!(
            "gradient code needs 0 <= s < n, got n={n}, s={s}"
        )));
    }
    let mut last_failure = String::new();
    for attempt in 0..MAX_CONSTRUCTION_ATTEMPTS {
        let attempt_seed = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let Some(coeffs) = draw_coefficients(n, s, attempt_seed) else {
            last_failure = format!("singular support system for seed {attempt_seed}");
            continue;
        };
        let code = GcCode {
            n,
            s,
            coeffs,
            seed: attempt_seed,
        };
        match verify_spanning(&code, verify_cap, attempt_seed) {
            Ok(()) => return Ok(code),
            Err(msg) => last_failure = msg,
        }
    }
    Err(Error::Construction(format!(
        "no valid (n={n}, s={s}) code after {MAX_CONSTRUCTION_ATTEMPTS} attempts: {last_failure}"
    )))
}

fn draw_coefficients(n: usize, s: usize, seed: u64) -> Option<Vec<Vec<f64>>> {
    let mut coeffs = vec![vec![0.0; n]; n];
    if s == 0 {
        for (i, row) in coeffs.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        return Some(coeffs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = DMatrix::<f64>::from_fn(s, n, |_, _| rng.sample(StandardNormal));
    // Rows sum to zero so the all-ones vector is in the null space.
    for mut r in h.row_iter_mut() {
        let mean = r.sum() / n as f64;
        r.add_scalar_mut(-mean);
    }
    for (i, row) in coeffs.iter_mut().enumerate() {
        let others: Vec<usize> = cyclic_support(i, s, n).skip(1).collect();
        let m = DMatrix::from_fn(s, s, |r, c| h[(r, others[c])]);
        let rhs = DVector::from_fn(s, |r, _| -h[(r, i)]);
        let x = m.lu().solve(&rhs)?;
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        row[i] = 1.0;
        for (k, &c) in others.iter().enumerate() {
            row[c] = x[k];
        }
    }
    Some(coeffs)
}

fn verify_spanning(code: &GcCode, cap: usize, seed: u64) -> std::result::Result<(), String> {
    let n = code.n;
    let k = n - code.s;
    let check = |responders: &[usize]| -> std::result::Result<(), String> {
        let (_, residual) = solve_ones(&code.coeffs, responders, n);
        if residual > DECODE_TOLERANCE {
            Err(format!(
                "responders {responders:?} give residual {residual:e}"
            ))
        } else {
            Ok(())
        }
    };
    if binomial_at_most(n, k, cap) {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            check(&combo)?;
            if !next_combination(&mut combo, n) {
                return Ok(());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5EED);
    for _ in 0..cap {
        let mut set = rand::seq::index::sample(&mut rng, n, k).into_vec();
        set.sort_unstable();
        check(&set)?;
    }
    Ok(())
}

/// Least-squares solution of `A^T beta = 1` where `A` holds the responder
/// rows; returns `beta` and the relative residual `||A^T beta - 1|| / ||1||`.
fn solve_ones(coeffs: &[Vec<f64>], responders: &[usize], n: usize) -> (Vec<f64>, f64) {
    let at = DMatrix::from_fn(n, responders.len(), |r, c| coeffs[responders[c]][r]);
    let ones = DVector::from_element(n, 1.0);
    let svd = at.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let eps = (max_sv * 1e-12).max(f64::MIN_POSITIVE);
    let beta = match svd.solve(&ones, eps) {
        Ok(b) => b,
        Err(_) => return (vec![0.0; responders.len()], f64::INFINITY),
    };
    let residual = (&at * &beta - &ones).norm() / ones.norm();
    (beta.iter().copied().collect(), residual)
}

fn binomial_at_most(n: usize, k: usize, cap: usize) -> bool {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return false;
        }
    }
    true
}

/// Advances `combo` to the next `k`-subset of `[0, n)` in lexicographic order.
pub(crate) fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Decodes `g = sum_j g_j` from worker results.
pub fn gc_decode(code: &GcCode, results: &BTreeMap<usize, Vec<f64>>) -> Result<Vec<f64>> {
    let responders: Vec<usize> = results.keys().copied().collect();
    let beta = code.decoding_coefficients(&responders)?;
    let dim = results.values().next().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (w, b) in beta {
        for (o, v) in out.iter_mut().zip(&results[&w]) {
            *o += b * v;
        }
    }
    Ok(out)
}

/// Gradient coding by replication, valid when `(s+1) | n`.
///
/// Workers are split into `n/(s+1)` groups; worker `i` is in group
/// `i / (s+1)` and every group member returns the plain sum of the group's
/// `s+1` chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcRepCode {
    n: usize,
    s: usize,
}

impl GcRepCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn group_count(&self) -> usize {
        self.n / (self.s + 1)
    }

    pub fn group_of(&self, worker: usize) -> usize {
        worker / (self.s + 1)
    }

    pub fn group_members(&self, group: usize) -> std::ops::Range<usize> {
        group * (self.s + 1)..(group + 1) * (self.s + 1)
    }

    /// Chunks owned by `worker`'s group.
    pub fn support(&self, worker: usize) -> std::ops::Range<usize> {
        self.group_members(self.group_of(worker))
    }

    pub fn encode(&self, worker: usize, partials: &[Vec<f64>]) -> Vec<f64> {
        let dim = partials.first().map_or(0, Vec::len);
        let mut out = vec![0.0; dim];
        for chunk in self.support(worker) {
            for (o, g) in out.iter_mut().zip(&partials[chunk]) {
                *o += g;
            }
        }
        out
    }

    /// True when every group has at least one responder.
    pub fn covers(&self, responded: impl Fn(usize) -> bool) -> bool {
        (0..self.group_count()).all(|g| self.group_members(g).any(&responded))
    }
}

pub fn build_gc_rep(n: usize, s: usize) -> Result<GcRepCode> {
    if n == 0 || s >= n {
        return Err(Error::param(format!(
            "GC-Rep needs 0 <= s < n, got n={n}, s={s}"
        )));
    }
    if n % (s + 1) != 0 {
        return Err(Error::param(format!(
            "GC-Rep needs (s+1) | n, got n={n}, s={s}"
        )));
    }
    Ok(GcRepCode { n, s })
}

/// Sums one result per group, taking the lowest-index responder of each.
pub fn gc_rep_decode(code: &GcRepCode, results: &BTreeMap<usize, Vec<f64>>) -> Result<Vec<f64>> {
    let dim = results.values().next().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for g in 0..code.group_count() {
        let member = code
            .group_members(g)
            .find(|w| results.contains_key(w))
            .ok_or_else(|| Error::InsufficientResults(format!("group {g} has no responder")))?;
        for (o, v) in out.iter_mut().zip(&results[&member]) {
            *o += v;
        }
    }
    Ok(out)
}

/// Which decoding rule a base code follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeFamily {
    Cyclic,
    Replicated,
}

impl CodeFamily {
    /// Combinatorial decodability: `n - s` responders for cyclic codes, one
    /// responder per group for replicated codes.
    pub fn decodable(self, n: usize, s: usize, responded: &[bool]) -> bool {
        match self {
            CodeFamily::Cyclic => responded.iter().filter(|&&r| r).count() + s >= n,
            CodeFamily::Replicated => (0..n / (s + 1))
                .all(|g| responded[g * (s + 1)..(g + 1) * (s + 1)].iter().any(|&r| r)),
        }
    }

    /// Chunks stored by `worker` under this family.
    pub fn support(self, worker: usize, n: usize, s: usize) -> Vec<usize> {
        match self {
            CodeFamily::Cyclic => cyclic_support(worker, s, n).collect(),
            CodeFamily::Replicated => {
                let g = worker / (s + 1);
                (g * (s + 1)..(g + 1) * (s + 1)).collect()
            }
        }
    }
}

/// Numeric base code shared by the sequential schemes.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseCode {
    Cyclic(GcCode),
    Replicated(GcRepCode),
}

impl BaseCode {
    pub fn build(family: CodeFamily, n: usize, s: usize, seed: u64) -> Result<Self> {
        Ok(match family {
            CodeFamily::Cyclic => BaseCode::Cyclic(build_gc(n, s, seed)?),
            CodeFamily::Replicated => BaseCode::Replicated(build_gc_rep(n, s)?),
        })
    }

    pub fn encode(&self, worker: usize, partials: &[Vec<f64>]) -> Vec<f64> {
        match self {
            BaseCode::Cyclic(c) => c.encode(worker, partials),
            BaseCode::Replicated(c) => c.encode(worker, partials),
        }
    }

    pub fn decode(&self, results: &BTreeMap<usize, Vec<f64>>) -> Result<Vec<f64>> {
        match self {
            BaseCode::Cyclic(c) => gc_decode(c, results),
            BaseCode::Replicated(c) => gc_rep_decode(c, results),
        }
    }
}

/// Deterministic partial gradients `g_j(t)` keyed by `(seed, t, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradientOracle {
    dim: usize,
    seed: u64,
}

impl GradientOracle {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("gradient dimension must be positive"));
        }
        Ok(Self { dim, seed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Partial gradient of chunk `chunk` for job `job`, entries in `[-1, 1)`.
    pub fn partial(&self, job: usize, chunk: usize) -> Vec<f64> {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(job as u64).to_le_bytes());
        key[16..24].copy_from_slice(&(chunk as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Partials for chunks `0..chunks`.
    pub fn partials(&self, job: usize, chunks: usize) -> Vec<Vec<f64>> {
        (0..chunks).map(|j| self.partial(job, j)).collect()
    }

    /// Full gradient `g(t) = sum_{j < chunks} g_j(t)`.
    pub fn full(&self, job: usize, chunks: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for j in 0..chunks {
            for (o, v) in out.iter_mut().zip(self.partial(job, j)) {
                *o += v;
            }
        }
        out
    }
}

/// `||a - b|| / max(||b||, tiny)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn results_for(
        code: &GcCode,
        oracle: &GradientOracle,
        job: usize,
        workers: &[usize],
    ) -> BTreeMap<usize, Vec<f64>> {
        let partials = oracle.partials(job, code.n());
        workers
            .iter()
            .map(|&w| (w, code.encode(w, &partials)))
            .collect()
    }

    #[test]
    fn support_is_cyclic() {
        let code = build_gc(4, 2, 7).unwrap();
        for i in 0..4 {
            let support: Vec<usize> = code.support(i).collect();
            for j in 0..4 {
                let nonzero = code.coeff(i, j) != 0.0;
                assert_eq!(nonzero, support.contains(&j), "row {i} col {j}");
            }
        }
        assert_eq!(code.support(0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(code.support(3).collect::<Vec<_>>(), vec![3, 0, 1]);
    }

    #[test]
    fn s_zero_needs_everyone() {
        let code = build_gc(4, 0, 0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(code.coeff(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert!(matches!(
            code.decoding_coefficients(&[0, 1, 2]),
            Err(Error::InsufficientResults(_))
        ));
        let oracle = GradientOracle::new(3, 1).unwrap();
        let res = results_for(&code, &oracle, 1, &[0, 1, 2, 3]);
        let g = gc_decode(&code, &res).unwrap();
        assert!(relative_error(&g, &oracle.full(1, 4)) < 1e-12);
    }

    #[test]
    fn deterministic_for_seed() {
        assert_eq!(build_gc(6, 2, 11).unwrap(), build_gc(6, 2, 11).unwrap());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_gc(3, 3, 0), Err(Error::Parameter(_))));
        assert!(matches!(build_gc(0, 0, 0), Err(Error::Parameter(_))));
        assert!(matches!(build_gc_rep(6, 3), Err(Error::Parameter(_))));
    }

    #[test]
    fn n3_s1_two_responders() {
        let code = build_gc(3, 1, 5).unwrap();
        let oracle = GradientOracle::new(5, 9).unwrap();
        let want = oracle.full(2, 3);
        for workers in [[0usize, 1], [1, 2], [0, 2]] {
            let g = gc_decode(&code, &results_for(&code, &oracle, 2, &workers)).unwrap();
            assert!(relative_error(&g, &want) < 1e-8, "{workers:?}");
        }
        let all = gc_decode(&code, &results_for(&code, &oracle, 2, &[0, 1, 2])).unwrap();
        assert!(relative_error(&all, &want) < 1e-8);
        assert!(matches!(
            gc_decode(&code, &results_for(&code, &oracle, 2, &[1])),
            Err(Error::InsufficientResults(_))
        ));
    }

    #[test]
    fn n6_s2_every_straggler_pair() {
        let code = build_gc(6, 2, 1).unwrap();
        let oracle = GradientOracle::new(4, 3).unwrap();
        let want = oracle.full(1, 6);
        let mut checked = 0;
        for a in 0..6 {
            for b in a + 1..6 {
                let workers: Vec<usize> = (0..6).filter(|&w| w != a && w != b).collect();
                let g = gc_decode(&code, &results_for(&code, &oracle, 1, &workers)).unwrap();
                assert!(relative_error(&g, &want) < 1e-8);
                checked += 1;
            }
        }
        assert_eq!(checked, 15);
    }

    #[test]
    fn rep_decode_cases() {
        let code = build_gc_rep(6, 2).unwrap();
        let oracle = GradientOracle::new(3, 4).unwrap();
        let partials = oracle.partials(1, 6);
        let want = oracle.full(1, 6);
        let res = |ws: &[usize]| -> BTreeMap<usize, Vec<f64>> {
            ws.iter().map(|&w| (w, code.encode(w, &partials))).collect()
        };
        let g = gc_rep_decode(&code, &res(&[0, 4])).unwrap();
        assert!(relative_error(&g, &want) < 1e-14);
        // Stragglers 1, 2, 3 and 5.
        let g = gc_rep_decode(&code, &res(&[0, 4])).unwrap();
        assert!(relative_error(&g, &want) < 1e-14);
        let g = gc_rep_decode(&code, &res(&[0, 1, 3, 5])).unwrap();
        assert!(relative_error(&g, &want) < 1e-14);

        let small = build_gc_rep(4, 1).unwrap();
        let p4 = oracle.partials(1, 4);
        let r: BTreeMap<usize, Vec<f64>> =
            [0, 1].iter().map(|&w| (w, small.encode(w, &p4))).collect();
        assert!(matches!(
            gc_rep_decode(&small, &r),
            Err(Error::InsufficientResults(_))
        ));
    }

    #[test]
    fn rep_and_cyclic_have_equal_chunk_counts() {
        for (n, s) in [(6, 2), (4, 1), (8, 3), (6, 0)] {
            let rep = build_gc_rep(n, s).unwrap();
            let gc = build_gc(n, s, 3).unwrap();
            for w in 0..n {
                assert_eq!(rep.support(w).len(), s + 1);
                assert_eq!(gc.support(w).count(), s + 1);
            }
        }
    }

    #[test]
    fn oracle_is_bitwise_deterministic() {
        let a = GradientOracle::new(8, 42).unwrap();
        let b = GradientOracle::new(8, 42).unwrap();
        assert_eq!(a.partial(3, 5), b.partial(3, 5));
        assert_ne!(a.partial(3, 5), a.partial(3, 6));
        assert_ne!(a.partial(3, 5), a.partial(4, 5));
        assert!(GradientOracle::new(0, 1).is_err());
    }

    #[test]
    fn combination_enumeration_counts() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 6) {
            count += 1;
        }
        assert_eq!(count, 15);
        assert!(binomial_at_most(6, 2, 15));
        assert!(!binomial_at_most(6, 2, 14));
    }

    #[test]
    fn sampled_verification_path() {
        // C(12, 4) = 495 exceeds the cap, so sets are sampled.
        let code = build_gc_with_cap(12, 4, 2, 50).unwrap();
        assert_eq!(code.n(), 12);
    }
}
