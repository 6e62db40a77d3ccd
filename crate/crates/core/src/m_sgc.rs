//! Multiplexed sequential gradient coding (M-SGC).
//!
//! The dataset is split into `(W-1+B) n` chunks. The first `(W-1) n` chunks
//! (`D1`) are uncoded: worker `i` owns chunks `[i(W-1), (i+1)(W-1))` and
//! failed computations on them are reattempted. The remaining `B n` chunks
//! (`D2`) form `B` groups of `n`, each protected by an `(n, lambda)` gradient
//! code. Each round a worker runs `W-1+B` mini-tasks; slot `j` of round `t`
//! always serves job `t-j`, so job `t` is decoded by the end of round
//! `t + W-2+B`.
//!
//! A `D1` chunk holds `lambda+1` times as many points as a `D2` chunk, so
//! every non-trivial mini-task costs the same.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gc::{BaseCode, CodeFamily, GradientOracle};
use crate::simulator::RoundScheme;
use crate::straggler::{ArbitraryModel, AssumedModel, BurstyModel};
use crate::{Error, Fraction, Result};

/// Validated M-SGC parameters and the derived chunk layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MSgcParams {
    pub n: usize,
    pub burst: usize,
    pub window: usize,
    pub lambda: usize,
    /// Code used for the `D2` groups.
    pub family: CodeFamily,
}

/// One data chunk of the placement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkInfo {
    pub index: usize,
    /// Fraction of the dataset's points.
    pub size: Fraction,
    pub workers: Vec<usize>,
}

pub fn derive_m_params(n: usize, burst: usize, window: usize, lambda: usize) -> Result<MSgcParams> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    if burst == 0 || burst >= window {
        return Err(Error::param(format!(
            "M-SGC needs 0 < B < W, got B={burst}, W={window}"
        )));
    }
    if lambda > n {
        return Err(Error::param(format!(
            "M-SGC needs lambda <= n, got lambda={lambda}, n={n}"
        )));
    }
    Ok(MSgcParams {
        n,
        burst,
        window,
        lambda,
        family: CodeFamily::Cyclic,
    })
}

/// M-SGC with replication codes for the `D2` groups; needs `(lambda+1) | n`.
pub fn derive_m_rep_params(
    n: usize,
    burst: usize,
    window: usize,
    lambda: usize,
) -> Result<MSgcParams> {
    let p = derive_m_params(n, burst, window, lambda)?;
    if lambda == n || n % (lambda + 1) != 0 {
        return Err(Error::param(format!(
            "M-SGC-Rep needs (lambda+1) | n, got lambda={lambda}, n={n}"
        )));
    }
    Ok(MSgcParams {
        family: CodeFamily::Replicated,
        ..p
    })
}

impl MSgcParams {
    /// `T = W - 2 + B`.
    pub fn delay(&self) -> usize {
        self.window - 2 + self.burst
    }

    /// Mini-task slots per round, `W - 1 + B`.
    pub fn slots(&self) -> usize {
        self.window - 1 + self.burst
    }

    pub fn d1_count(&self) -> usize {
        (self.window - 1) * self.n
    }

    /// `D2` chunks exist only when `lambda < n`.
    pub fn has_coded_part(&self) -> bool {
        self.lambda < self.n
    }

    /// Total number of (non-trivial) chunks.
    pub fn chunk_count(&self) -> usize {
        if self.has_coded_part() {
            self.slots() * self.n
        } else {
            self.d1_count()
        }
    }

    /// `n (B + (W-1)(lambda+1))`, the common denominator of chunk sizes.
    fn unit(&self) -> i64 {
        (self.n * (self.burst + (self.window - 1) * (self.lambda + 1))) as i64
    }

    pub fn d1_size(&self) -> Fraction {
        if self.has_coded_part() {
            Fraction::new((self.lambda + 1) as i64, self.unit())
        } else {
            Fraction::new(1, self.d1_count() as i64)
        }
    }

    pub fn d2_size(&self) -> Fraction {
        if self.has_coded_part() {
            Fraction::new(1, self.unit())
        } else {
            Fraction::from_integer(0)
        }
    }

    /// Normalized load per worker per round.
    pub fn load(&self) -> Fraction {
        let (n, b, w, l) = (
            self.n as i64,
            self.burst as i64,
            self.window as i64,
            self.lambda as i64,
        );
        if self.has_coded_part() {
            Fraction::new((l + 1) * (w - 1 + b), n * (b + (w - 1) * (l + 1)))
        } else {
            Fraction::new(w - 1 + b, n * (w - 1))
        }
    }

    /// Patterns conforming to the bursty model or to the
    /// `(N=B, W'=W+B-1, lambda'=lambda)`-arbitrary model.
    pub fn design_model(&self) -> AssumedModel {
        AssumedModel::AnyOf(vec![
            AssumedModel::Bursty(BurstyModel {
                burst: self.burst,
                window: self.window,
                lambda: self.lambda,
            }),
            AssumedModel::Arbitrary(ArbitraryModel {
                max_per_worker: self.burst,
                window: self.window + self.burst - 1,
                lambda: self.lambda,
            }),
        ])
    }

    /// `D1` chunk computed by `worker` in fixed slot `j`.
    pub fn d1_chunk(&self, worker: usize, j: usize) -> usize {
        worker * (self.window - 1) + j
    }

    /// `D2` chunks of `group` used by `worker`.
    pub fn d2_chunks(&self, worker: usize, group: usize) -> Vec<usize> {
        let base = (self.window - 1 + group) * self.n;
        self.family
            .support(worker, self.n, self.lambda)
            .into_iter()
            .map(|l| base + l)
            .collect()
    }

    /// Chunks stored by `worker`, `D1` first.
    pub fn worker_chunks(&self, worker: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.window - 1)
            .map(|j| self.d1_chunk(worker, j))
            .collect();
        if self.has_coded_part() {
            for m in 0..self.burst {
                out.extend(self.d2_chunks(worker, m));
            }
        }
        out
    }

    /// Full placement: every chunk with its size and owners.
    pub fn layout(&self) -> Vec<ChunkInfo> {
        let mut chunks: Vec<ChunkInfo> = (0..self.chunk_count())
            .map(|index| ChunkInfo {
                index,
                size: if index < self.d1_count() {
                    self.d1_size()
                } else {
                    self.d2_size()
                },
                workers: Vec::new(),
            })
            .collect();
        for w in 0..self.n {
            for c in self.worker_chunks(w) {
                chunks[c].workers.push(w);
            }
        }
        chunks
    }
}

/// Work done in one mini-task slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    /// Partial gradient of one `D1` chunk.
    SingleGrad {
        chunk: usize,
        job: usize,
    },
    /// Coded combination `l_{i,group}(job)` over the worker's `lambda+1`
    /// chunks of `group` (see [`MSgcParams::d2_chunks`]).
    Coded {
        group: usize,
        job: usize,
    },
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiniTask {
    pub worker: usize,
    pub round: usize,
    pub slot: usize,
    pub payload: Payload,
}

impl MiniTask {
    pub fn is_trivial(&self) -> bool {
        matches!(self.payload, Payload::Trivial)
    }

    /// Job served by this slot, `round - slot`, if it is a real job.
    pub fn job(&self) -> Option<usize> {
        match self.payload {
            Payload::SingleGrad { job, .. } | Payload::Coded { job, .. } => Some(job),
            Payload::Trivial => None,
        }
    }
}

#[derive(Debug, Clone)]
struct JobEntry {
    /// Per `D1` chunk: received flag.
    d1: Vec<bool>,
    d1_values: BTreeMap<usize, Vec<f64>>,
    /// `coded[m][i]`: coded result `l_{i,m}` received.
    coded: Vec<Vec<bool>>,
    coded_values: Vec<BTreeMap<usize, Vec<f64>>>,
}

/// Master-side record of received mini-task results per job.
#[derive(Debug, Clone)]
pub struct MLedger {
    params: MSgcParams,
    jobs: Vec<JobEntry>,
}

impl MLedger {
    pub fn new(params: &MSgcParams, jobs: usize) -> Self {
        let entry = JobEntry {
            d1: vec![false; params.d1_count()],
            d1_values: BTreeMap::new(),
            coded: vec![vec![false; params.n]; params.burst],
            coded_values: vec![BTreeMap::new(); params.burst],
        };
        Self {
            params: *params,
            jobs: vec![entry; jobs],
        }
    }

    pub fn job_count(&self) -> usize {
        self.jobs.len()
    }

    fn entry(&self, job: usize) -> Option<&JobEntry> {
        job.checked_sub(1).and_then(|k| self.jobs.get(k))
    }

    fn entry_mut(&mut self, job: usize) -> Option<&mut JobEntry> {
        job.checked_sub(1).and_then(|k| self.jobs.get_mut(k))
    }

    pub fn d1_received(&self, job: usize, chunk: usize) -> bool {
        self.entry(job).is_some_and(|e| e.d1[chunk])
    }

    pub fn coded_received(&self, job: usize, group: usize, worker: usize) -> bool {
        self.entry(job).is_some_and(|e| e.coded[group][worker])
    }

    /// Number of coded results of `group` received for `job`.
    pub fn coded_count(&self, job: usize, group: usize) -> usize {
        self.entry(job)
            .map_or(0, |e| e.coded[group].iter().filter(|&&r| r).count())
    }

    /// Lowest fixed slot `j'` whose `D1` partial of `worker` for `job` is
    /// still missing.
    fn first_missing(&self, job: usize, worker: usize) -> Option<usize> {
        let e = self.entry(job)?;
        (0..self.params.window - 1).find(|&j| !e.d1[self.params.d1_chunk(worker, j)])
    }

    /// Records a delivered mini-task result.
    pub fn record(&mut self, task: &MiniTask, value: Option<Vec<f64>>) {
        match &task.payload {
            Payload::SingleGrad { chunk, job } => {
                if let Some(e) = self.entry_mut(*job) {
                    e.d1[*chunk] = true;
                    if let Some(v) = value {
                        e.d1_values.insert(*chunk, v);
                    }
                }
            }
            Payload::Coded { group, job, .. } => {
                let all_d1 = self.first_missing(*job, task.worker).is_none();
                debug_assert!(all_d1, "coded result before all D1 partials");
                if let Some(e) = self.entry_mut(*job) {
                    e.coded[*group][task.worker] = true;
                    if let Some(v) = value {
                        e.coded_values[*group].insert(task.worker, v);
                    }
                }
            }
            Payload::Trivial => {}
        }
    }

    /// Whether `g(job)` can be decoded from what has been received.
    pub fn decodable(&self, job: usize) -> bool {
        let Some(e) = self.entry(job) else {
            return false;
        };
        let p = &self.params;
        e.d1.iter().all(|&r| r)
            && (!p.has_coded_part() || e.coded.iter().all(|c| p.family.decodable(p.n, p.lambda, c)))
    }
}

/// Mini-task assignment of round `t`, worker-major then slot order.
pub fn m_assign_round(params: &MSgcParams, ledger: &MLedger, t: usize) -> Vec<MiniTask> {
    let jobs = ledger.job_count();
    let fixed = params.window - 1;
    let mut tasks = Vec::with_capacity(params.n * params.slots());
    for i in 0..params.n {
        for j in 0..params.slots() {
            let job = t.checked_sub(j).filter(|&job| job >= 1 && job <= jobs);
            let payload = match job {
                None => Payload::Trivial,
                Some(job) if j < fixed => Payload::SingleGrad {
                    chunk: params.d1_chunk(i, j),
                    job,
                },
                Some(job) => match ledger.first_missing(job, i) {
                    Some(jp) => Payload::SingleGrad {
                        chunk: params.d1_chunk(i, jp),
                        job,
                    },
                    None if params.has_coded_part() => Payload::Coded {
                        group: j - fixed,
                        job,
                    },
                    None => Payload::Trivial,
                },
            };
            tasks.push(MiniTask {
                worker: i,
                round: t,
                slot: j,
                payload,
            });
        }
    }
    tasks
}

/// Decodes `g(job) = g'(job) + g''(job)` from the values stored in the
/// ledger: the sum of all `D1` partials plus one gradient-code decode per
/// `D2` group.
pub fn m_decode_job(
    params: &MSgcParams,
    code: &BaseCode,
    ledger: &MLedger,
    job: usize,
) -> Result<Vec<f64>> {
    let fail = |reason: String| Error::DecodeFailure { job, reason };
    let e = ledger
        .entry(job)
        .ok_or_else(|| fail("job out of range".into()))?;
    if let Some(c) = e.d1.iter().position(|&r| !r) {
        return Err(fail(format!("D1 partial {c} missing")));
    }
    if e.d1_values.len() != params.d1_count() {
        return Err(fail("ledger holds no partial gradient values".into()));
    }
    let dim = e.d1_values.values().next().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for v in e.d1_values.values() {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    if params.has_coded_part() {
        for (m, values) in e.coded_values.iter().enumerate() {
            if !params
                .family
                .decodable(params.n, params.lambda, &e.coded[m])
            {
                return Err(fail(format!(
                    "group {m} has {} coded results, need {}",
                    ledger.coded_count(job, m),
                    params.n - params.lambda
                )));
            }
            let part = code
                .decode(values)
                .map_err(|err| fail(format!("group {m}: {err}")))?;
            for (o, x) in out.iter_mut().zip(part) {
                *o += x;
            }
        }
    }
    Ok(out)
}

pub(crate) struct MRunner {
    params: MSgcParams,
    ledger: MLedger,
    numeric: Option<(BaseCode, GradientOracle)>,
}

impl MRunner {
    pub(crate) fn new(
        params: MSgcParams,
        jobs: usize,
        numeric: Option<(BaseCode, GradientOracle)>,
    ) -> Self {
        Self {
            ledger: MLedger::new(&params, jobs),
            params,
            numeric,
        }
    }

    fn value_of(&self, task: &MiniTask) -> Option<Vec<f64>> {
        let (code, oracle) = self.numeric.as_ref()?;
        match &task.payload {
            Payload::SingleGrad { chunk, job } => Some(oracle.partial(*job, *chunk)),
            Payload::Coded { group, job, .. } => {
                let base = (self.params.window - 1 + group) * self.params.n;
                let partials: Vec<Vec<f64>> = (0..self.params.n)
                    .map(|l| oracle.partial(*job, base + l))
                    .collect();
                Some(code.encode(task.worker, &partials))
            }
            Payload::Trivial => None,
        }
    }
}

impl RoundScheme for MRunner {
    fn chunk_count(&self) -> usize {
        self.params.chunk_count()
    }

    fn play_round(&mut self, t: usize, stragglers: &[bool]) -> Result<Vec<Fraction>> {
        let tasks = m_assign_round(&self.params, &self.ledger, t);
        let mut loads = vec![Fraction::from_integer(0); self.params.n];
        let slot_mass = self.params.d1_size();
        for task in &tasks {
            if task.is_trivial() {
                continue;
            }
            loads[task.worker] += slot_mass;
            if !stragglers[task.worker] {
                let value = self.value_of(task);
                self.ledger.record(task, value);
            }
        }
        Ok(loads)
    }

    fn is_decodable(&self, job: usize) -> bool {
        self.ledger.decodable(job)
    }

    fn finish_job(&mut self, job: usize) -> Result<Option<Vec<f64>>> {
        let Some((code, _)) = &self.numeric else {
            return Ok(None);
        };
        let out = m_decode_job(&self.params, code, &self.ledger, job)?;
        if let Some(e) = self.ledger.entry_mut(job) {
            e.d1_values.clear();
            e.coded_values.iter_mut().for_each(BTreeMap::clear);
        }
        Ok(Some(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_layout() {
        let p = derive_m_params(4, 2, 3, 2).unwrap();
        assert_eq!(p.chunk_count(), 16);
        assert_eq!(p.d1_size(), Fraction::new(3, 32));
        assert_eq!(p.d2_size(), Fraction::new(1, 32));
        assert_eq!(p.delay(), 3);
        assert_eq!(p.load(), Fraction::new(12, 32));
        let mut w0 = p.worker_chunks(0);
        w0.sort_unstable();
        assert_eq!(w0, vec![0, 1, 8, 9, 10, 12, 13, 14]);
        assert_eq!(p.worker_chunks(2), vec![4, 5, 10, 11, 8, 14, 15, 12]);
        assert_eq!(p.worker_chunks(3), vec![6, 7, 11, 8, 9, 15, 12, 13]);
        let total: Fraction = p.layout().iter().map(|c| c.size).sum();
        assert_eq!(total, Fraction::from_integer(1));
    }

    #[test]
    fn table_and_fig10_loads() {
        let p = derive_m_params(256, 1, 2, 27).unwrap();
        assert_eq!(p.load(), Fraction::new(56, 7424));
        assert!((crate::to_f64(p.load()) - 0.007543).abs() < 5e-7);
        let p = derive_m_params(4, 1, 2, 4).unwrap();
        assert_eq!(p.load(), Fraction::new(1, 2));
        assert_eq!(p.chunk_count(), 4);
        let total: Fraction = p.layout().iter().map(|c| c.size).sum();
        assert_eq!(total, Fraction::from_integer(1));
    }

    #[test]
    fn equal_mass_slots_and_load_cap() {
        for n in 1..10usize {
            for w in 2..7 {
                for b in 1..w {
                    for l in 0..=n {
                        let p = derive_m_params(n, b, w, l).unwrap();
                        if p.has_coded_part() {
                            assert_eq!(
                                p.d1_size(),
                                p.d2_size() * Fraction::from_integer((l + 1) as i64)
                            );
                        }
                        assert_eq!(
                            p.load(),
                            p.d1_size() * Fraction::from_integer(p.slots() as i64)
                        );
                        assert!(p.load() <= Fraction::new(2, n as i64));
                        let total: Fraction = p.layout().iter().map(|c| c.size).sum();
                        assert_eq!(total, Fraction::from_integer(1));
                    }
                }
            }
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(derive_m_params(4, 3, 3, 1).is_err());
        assert!(derive_m_params(4, 0, 3, 1).is_err());
        assert!(derive_m_params(4, 1, 3, 5).is_err());
        assert!(derive_m_rep_params(4, 1, 2, 2).is_err());
        assert!(derive_m_rep_params(4, 1, 2, 1).is_ok());
    }

    #[test]
    fn no_stragglers_gives_coded_slots() {
        let p = derive_m_params(4, 2, 3, 2).unwrap();
        let mut ledger = MLedger::new(&p, 10);
        for t in 1..=6 {
            let tasks = m_assign_round(&p, &ledger, t);
            assert_eq!(tasks.len(), 16);
            for task in &tasks {
                if t >= 4 && task.slot >= 2 {
                    assert!(
                        matches!(task.payload, Payload::Coded { group, .. } if group == task.slot - 2)
                    );
                }
                ledger.record(task, None);
            }
        }
        assert!(ledger.decodable(1) && ledger.decodable(3));
    }

    #[test]
    fn lambda_n_coded_slots_are_trivial() {
        let p = derive_m_params(4, 1, 2, 4).unwrap();
        let mut ledger = MLedger::new(&p, 6);
        for t in 1..=3 {
            let tasks = m_assign_round(&p, &ledger, t);
            for task in &tasks {
                if task.slot == 1 {
                    assert!(task.is_trivial());
                }
                ledger.record(task, None);
            }
        }
    }

    #[test]
    fn diagonal_property() {
        let p = derive_m_params(3, 2, 4, 1).unwrap();
        let ledger = MLedger::new(&p, 20);
        for t in 1..15 {
            for task in m_assign_round(&p, &ledger, t) {
                if let Some(job) = task.job() {
                    assert_eq!(job + task.slot, t);
                }
            }
        }
    }
}
