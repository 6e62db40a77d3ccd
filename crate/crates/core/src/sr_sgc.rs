//! Selective-reattempt sequential gradient coding (SR-SGC).
//!
//! An `(n, s)` gradient code with `s = ceil(B*lambda / (W-1+B))` is the base
//! scheme. In round `t`, if job `t-B` collected fewer than `n-s` results in
//! its own round, just enough workers that did not return a job-`(t-B)`
//! result reattempt it; everyone else works on job `t`. Delay is `T = B`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gc::{BaseCode, CodeFamily, GradientOracle};
use crate::simulator::RoundScheme;
use crate::straggler::{AssumedModel, BurstyModel};
use crate::{Error, Fraction, Result};

/// Validated SR-SGC parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrSgcParams {
    pub n: usize,
    pub burst: usize,
    pub window: usize,
    pub lambda: usize,
    /// `x = (W-1) / B`.
    pub x: usize,
    /// Straggler tolerance of the base code.
    pub s: usize,
    pub family: CodeFamily,
}

impl SrSgcParams {
    pub fn delay(&self) -> usize {
        self.burst
    }

    /// `(s+1)/n`.
    pub fn load(&self) -> Fraction {
        Fraction::new((self.s + 1) as i64, self.n as i64)
    }

    /// Patterns whose every `W`-window is bursty or has at most `s`
    /// stragglers per round.
    pub fn design_model(&self) -> AssumedModel {
        AssumedModel::WindowMixture {
            bursty: BurstyModel {
                burst: self.burst,
                window: self.window,
                lambda: self.lambda,
            },
            s: self.s,
        }
    }
}

/// Derives `x`, `s` for SR-SGC on an `(n, s)` cyclic gradient code.
pub fn derive_sr_params(
    n: usize,
    burst: usize,
    window: usize,
    lambda: usize,
) -> Result<SrSgcParams> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    if burst == 0 {
        return Err(Error::param("SR-SGC needs B > 0"));
    }
    if window < burst + 1 || (window - 1) % burst != 0 {
        return Err(Error::param(format!(
            "SR-SGC needs B | (W-1) with W > B, got B={burst}, W={window}"
        )));
    }
    if lambda == 0 || lambda > n {
        return Err(Error::param(format!(
            "SR-SGC needs 0 < lambda <= n, got lambda={lambda}, n={n}"
        )));
    }
    let x = (window - 1) / burst;
    let s = (burst * lambda).div_ceil(window - 1 + burst);
    if s >= n {
        return Err(Error::param(format!("derived s={s} must be below n={n}")));
    }
    Ok(SrSgcParams {
        n,
        burst,
        window,
        lambda,
        x,
        s,
        family: CodeFamily::Cyclic,
    })
}

/// SR-SGC on a replication code; needs `(s+1) | n`.
pub fn derive_sr_rep_params(
    n: usize,
    burst: usize,
    window: usize,
    lambda: usize,
) -> Result<SrSgcParams> {
    let p = derive_sr_params(n, burst, window, lambda)?;
    if n % (p.s + 1) != 0 {
        return Err(Error::param(format!(
            "SR-SGC-Rep needs (s+1) | n, got s={}, n={n}",
            p.s
        )));
    }
    Ok(SrSgcParams {
        family: CodeFamily::Replicated,
        ..p
    })
}

#[derive(Debug, Clone, Default)]
struct JobEntry {
    /// Workers that returned this job's result in round `job`.
    own_round: Vec<bool>,
    own_count: usize,
    /// Workers whose result for this job has been received in any round.
    received: Vec<bool>,
    values: BTreeMap<usize, Vec<f64>>,
}

/// What the master knows about each job's task results.
///
/// Jobs outside `[1, J]` count as fully received.
#[derive(Debug, Clone)]
pub struct SrLedger {
    n: usize,
    jobs: Vec<JobEntry>,
}

impl SrLedger {
    pub fn new(n: usize, jobs: usize) -> Self {
        let entry = JobEntry {
            own_round: vec![false; n],
            received: vec![false; n],
            ..Default::default()
        };
        Self {
            n,
            jobs: vec![entry; jobs],
        }
    }

    pub fn job_count(&self) -> usize {
        self.jobs.len()
    }

    fn entry(&self, job: usize) -> Option<&JobEntry> {
        job.checked_sub(1).and_then(|k| self.jobs.get(k))
    }

    /// `N(job)`: results for `job` returned in round `job`.
    pub fn own_round_count(&self, job: usize) -> usize {
        self.entry(job).map_or(self.n, |e| e.own_count)
    }

    pub fn returned_in_own_round(&self, job: usize, worker: usize) -> bool {
        self.entry(job).is_none_or(|e| e.own_round[worker])
    }

    pub fn received(&self, job: usize) -> Option<&[bool]> {
        self.entry(job).map(|e| e.received.as_slice())
    }

    /// Records that `worker` returned its result for `job` in `round`.
    pub fn record(&mut self, job: usize, worker: usize, round: usize, value: Option<Vec<f64>>) {
        let Some(e) = job.checked_sub(1).and_then(|k| self.jobs.get_mut(k)) else {
            return;
        };
        if round == job && !e.own_round[worker] {
            e.own_round[worker] = true;
            e.own_count += 1;
        }
        e.received[worker] = true;
        if let Some(v) = value {
            e.values.insert(worker, v);
        }
    }

    fn take_values(&mut self, job: usize) -> BTreeMap<usize, Vec<f64>> {
        job.checked_sub(1)
            .and_then(|k| self.jobs.get_mut(k))
            .map(|e| std::mem::take(&mut e.values))
            .unwrap_or_default()
    }
}

fn previous_job(params: &SrSgcParams, t: usize) -> usize {
    // Job 0 and below are outside [1, J] and count as fully received.
    t.saturating_sub(params.burst)
}

/// Task assignment of round `t`: the job index each worker works on.
pub fn sr_assign_round(params: &SrSgcParams, ledger: &SrLedger, t: usize) -> Vec<usize> {
    let prev = previous_job(params, t);
    let mut delta = ledger.own_round_count(prev);
    (0..params.n)
        .map(|i| {
            if delta + params.s < params.n && !ledger.returned_in_own_round(prev, i) {
                delta += 1;
                prev
            } else {
                t
            }
        })
        .collect()
}

/// Task assignment of round `t` for SR-SGC on a replication code: members of
/// a group whose result for job `t-B` already arrived move on to job `t`.
pub fn sr_rep_assign_round(
    params: &SrSgcParams,
    ledger: &SrLedger,
    t: usize,
) -> Result<Vec<usize>> {
    let group = params.s + 1;
    if params.n % group != 0 {
        return Err(Error::param(format!(
            "SR-SGC-Rep needs (s+1) | n, got s={}, n={}",
            params.s, params.n
        )));
    }
    let prev = previous_job(params, t);
    let group_done =
        |g: usize| (g * group..(g + 1) * group).any(|w| ledger.returned_in_own_round(prev, w));
    let mut delta = ledger.own_round_count(prev);
    Ok((0..params.n)
        .map(|i| {
            if group_done(i / group) {
                t
            } else if delta + params.s < params.n && !ledger.returned_in_own_round(prev, i) {
                delta += 1;
                prev
            } else {
                t
            }
        })
        .collect())
}

/// Round-by-round state of an SR-SGC run.
pub(crate) struct SrRunner {
    params: SrSgcParams,
    ledger: SrLedger,
    numeric: Option<(BaseCode, GradientOracle)>,
}

impl SrRunner {
    pub(crate) fn new(
        params: SrSgcParams,
        jobs: usize,
        numeric: Option<(BaseCode, GradientOracle)>,
    ) -> Self {
        Self {
            ledger: SrLedger::new(params.n, jobs),
            params,
            numeric,
        }
    }
}

impl RoundScheme for SrRunner {
    fn chunk_count(&self) -> usize {
        self.params.n
    }

    fn play_round(&mut self, t: usize, stragglers: &[bool]) -> Result<Vec<Fraction>> {
        let assignment = match self.params.family {
            CodeFamily::Cyclic => sr_assign_round(&self.params, &self.ledger, t),
            CodeFamily::Replicated => sr_rep_assign_round(&self.params, &self.ledger, t)?,
        };
        let jobs = self.ledger.job_count();
        let mut loads = Vec::with_capacity(self.params.n);
        for (worker, &job) in assignment.iter().enumerate() {
            if job == 0 || job > jobs {
                loads.push(Fraction::from_integer(0));
                continue;
            }
            loads.push(self.params.load());
            if stragglers[worker] {
                continue;
            }
            let value = self.numeric.as_ref().map(|(code, oracle)| {
                let partials = oracle.partials(job, self.params.n);
                code.encode(worker, &partials)
            });
            self.ledger.record(job, worker, t, value);
        }
        Ok(loads)
    }

    fn is_decodable(&self, job: usize) -> bool {
        self.ledger.received(job).is_some_and(|r| {
            self.params
                .family
                .decodable(self.params.n, self.params.s, r)
        })
    }

    fn finish_job(&mut self, job: usize) -> Result<Option<Vec<f64>>> {
        let values = self.ledger.take_values(job);
        let Some((code, _)) = &self.numeric else {
            return Ok(None);
        };
        code.decode(&values)
            .map(Some)
            .map_err(|e| Error::DecodeFailure {
                job,
                reason: e.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_parameters() {
        let p = derive_sr_params(256, 2, 3, 23).unwrap();
        assert_eq!(p.s, 12);
        assert_eq!(p.load(), Fraction::new(13, 256));
        assert!((crate::to_f64(p.load()) - 0.050781).abs() < 5e-7);
    }

    #[test]
    fn fig10_parameters() {
        let p = derive_sr_params(4, 1, 2, 4).unwrap();
        assert_eq!(p.s, 2);
        assert_eq!(p.load(), Fraction::new(3, 4));
    }

    #[test]
    fn formula_forms_agree() {
        let p = derive_sr_params(5, 2, 5, 5).unwrap();
        assert_eq!(p.x, 2);
        assert_eq!(p.s, 2);
        for n in 1..12 {
            for b in 1..4 {
                for x in 1..4 {
                    for l in 1..=n {
                        if let Ok(p) = derive_sr_params(n, b, x * b + 1, l) {
                            assert_eq!(p.s, l.div_ceil(x + 1));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(derive_sr_params(4, 2, 4, 2).is_err());
        assert!(derive_sr_params(4, 1, 2, 0).is_err());
        assert!(derive_sr_params(4, 1, 2, 5).is_err());
        assert!(derive_sr_params(4, 0, 2, 1).is_err());
        assert!(derive_sr_rep_params(4, 1, 3, 4).is_err()); // s = 2, 3 does not divide 4
        assert!(derive_sr_rep_params(6, 1, 3, 6).is_ok()); // s = 2
    }

    #[test]
    fn no_deviation_when_enough_results() {
        let p = derive_sr_params(4, 1, 2, 4).unwrap();
        let mut ledger = SrLedger::new(4, 5);
        for w in [0, 1] {
            ledger.record(2, w, 2, None);
        }
        assert_eq!(sr_assign_round(&p, &ledger, 3), vec![3; 4]);
        // Jobs before the first are fully known.
        assert_eq!(sr_assign_round(&p, &ledger, 1), vec![1; 4]);
    }

    #[test]
    fn hand_traced_reattempt() {
        // n = 4, s = 2: only worker 3 returned job t-B, so one reattempt.
        let p = derive_sr_params(4, 1, 2, 4).unwrap();
        assert_eq!(p.s, 2);
        let mut ledger = SrLedger::new(4, 5);
        ledger.record(2, 3, 2, None);
        assert_eq!(sr_assign_round(&p, &ledger, 3), vec![2, 3, 3, 3]);
    }

    #[test]
    fn reattempts_go_to_round_stragglers() {
        // n = 5, s = 1 (B = 1, W = 3, lambda = 3). Stragglers 1, 2, 4 in
        // round 1: lambda_0 - s = 2 reattempts, by workers 1 and 2.
        let p = derive_sr_params(5, 1, 3, 3).unwrap();
        assert_eq!(p.s, 1);
        let mut ledger = SrLedger::new(5, 4);
        for w in [0, 3] {
            ledger.record(1, w, 1, None);
        }
        let a = sr_assign_round(&p, &ledger, 2);
        assert_eq!(a, vec![2, 1, 1, 2, 2]);
        assert_eq!(a.iter().filter(|&&j| j == 1).count(), 3 - 1);
    }

    #[test]
    fn rep_assignment() {
        let p = derive_sr_rep_params(6, 1, 3, 6).unwrap();
        assert_eq!(p.s, 2);
        let mut ledger = SrLedger::new(6, 4);
        // Group 0 fully returned job 1, group 1 entirely straggled.
        for w in 0..3 {
            ledger.record(1, w, 1, None);
        }
        let a = sr_rep_assign_round(&p, &ledger, 2).unwrap();
        assert_eq!(&a[..3], &[2, 2, 2]);
        assert!(a[3..].contains(&1));
        assert_eq!(a.iter().filter(|&&j| j == 1).count(), 1);

        let mut full = SrLedger::new(6, 4);
        for w in 0..6 {
            full.record(1, w, 1, None);
        }
        assert_eq!(sr_rep_assign_round(&p, &full, 2).unwrap(), vec![2; 6]);
    }
}
