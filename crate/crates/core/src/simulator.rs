//! Deterministic round engine.
//!
//! Each round the scheme assigns tasks, the round's stragglers are taken from
//! a pattern (or derived from a delay profile with the `mu` rule), the
//! wait-out rule filters them against the scheme's assumed straggler model,
//! and non-straggler results are delivered. A job that is still undecodable
//! at its deadline is a hard error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gc::{relative_error, BaseCode, CodeFamily, GradientOracle, DECODE_TOLERANCE};
use crate::m_sgc::{derive_m_params, derive_m_rep_params, MRunner, MSgcParams};
use crate::sr_sgc::{derive_sr_params, derive_sr_rep_params, SrRunner, SrSgcParams};
pub use crate::straggler::AssumedModel;
use crate::straggler::{
    straggler_column, ConformanceTracker, DelayProfile, PerRoundModel, StragglerPattern,
};
use crate::{Error, Fraction, Result};

/// Round-by-round behaviour shared by every scheme.
pub(crate) trait RoundScheme {
    /// Number of data chunks the gradient is split into.
    fn chunk_count(&self) -> usize;
    /// Assigns round `t`, delivers results of non-stragglers and returns the
    /// normalized load of every worker.
    fn play_round(&mut self, t: usize, stragglers: &[bool]) -> Result<Vec<Fraction>>;
    fn is_decodable(&self, job: usize) -> bool;
    /// Numeric decode of a decodable job; `None` without an oracle.
    fn finish_job(&mut self, job: usize) -> Result<Option<Vec<f64>>>;
}

/// Coding scheme and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum Scheme {
    NoCoding,
    Gc {
        s: usize,
    },
    GcRep {
        s: usize,
    },
    SrSgc {
        burst: usize,
        window: usize,
        lambda: usize,
    },
    SrSgcRep {
        burst: usize,
        window: usize,
        lambda: usize,
    },
    MSgc {
        burst: usize,
        window: usize,
        lambda: usize,
    },
    MSgcRep {
        burst: usize,
        window: usize,
        lambda: usize,
    },
}

enum Resolved {
    Gc { s: usize, family: CodeFamily },
    Sr(SrSgcParams),
    M(MSgcParams),
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::NoCoding => "no-coding",
            Scheme::Gc { .. } => "gc",
            Scheme::GcRep { .. } => "gc-rep",
            Scheme::SrSgc { .. } => "sr-sgc",
            Scheme::SrSgcRep { .. } => "sr-sgc-rep",
            Scheme::MSgc { .. } => "m-sgc",
            Scheme::MSgcRep { .. } => "m-sgc-rep",
        }
    }

    /// Short parameter label such as `B=1;W=2;lambda=27`.
    pub fn params_label(&self) -> String {
        match *self {
            Scheme::NoCoding => String::new(),
            Scheme::Gc { s } | Scheme::GcRep { s } => format!("s={s}"),
            Scheme::SrSgc {
                burst,
                window,
                lambda,
            }
            | Scheme::SrSgcRep {
                burst,
                window,
                lambda,
            }
            | Scheme::MSgc {
                burst,
                window,
                lambda,
            }
            | Scheme::MSgcRep {
                burst,
                window,
                lambda,
            } => format!("B={burst};W={window};lambda={lambda}"),
        }
    }

    /// Builds a scheme from its CLI name and the flags that apply to it.
    pub fn from_name(
        name: &str,
        s: Option<usize>,
        burst: Option<usize>,
        window: Option<usize>,
        lambda: Option<usize>,
    ) -> Result<Self> {
        let need = |v: Option<usize>, flag: &str| {
            v.ok_or_else(|| Error::param(format!("scheme {name} needs --{flag}")))
        };
        let bwl = || -> Result<(usize, usize, usize)> {
            Ok((
                need(burst, "B")?,
                need(window, "W")?,
                need(lambda, "lambda")?,
            ))
        };
        Ok(match name {
            "no-coding" | "nocoding" => Scheme::NoCoding,
            "gc" => Scheme::Gc { s: need(s, "s")? },
            "gc-rep" => Scheme::GcRep { s: need(s, "s")? },
            "sr-sgc" => {
                let (burst, window, lambda) = bwl()?;
                Scheme::SrSgc {
                    burst,
                    window,
                    lambda,
                }
            }
            "sr-sgc-rep" => {
                let (burst, window, lambda) = bwl()?;
                Scheme::SrSgcRep {
                    burst,
                    window,
                    lambda,
                }
            }
            "m-sgc" => {
                let (burst, window, lambda) = bwl()?;
                Scheme::MSgc {
                    burst,
                    window,
                    lambda,
                }
            }
            "m-sgc-rep" => {
                let (burst, window, lambda) = bwl()?;
                Scheme::MSgcRep {
                    burst,
                    window,
                    lambda,
                }
            }
            other => return Err(Error::param(format!("unknown scheme {other:?}"))),
        })
    }

    fn resolve(&self, n: usize) -> Result<Resolved> {
        let gc = |s: usize, family| -> Result<Resolved> {
            if n == 0 || s >= n {
                return Err(Error::param(format!(
                    "gradient code needs 0 <= s < n, got n={n}, s={s}"
                )));
            }
            if family == CodeFamily::Replicated && n % (s + 1) != 0 {
                return Err(Error::param(format!(
                    "GC-Rep needs (s+1) | n, got s={s}, n={n}"
                )));
            }
            Ok(Resolved::Gc { s, family })
        };
        match *self {
            Scheme::NoCoding => gc(0, CodeFamily::Cyclic),
            Scheme::Gc { s } => gc(s, CodeFamily::Cyclic),
            Scheme::GcRep { s } => gc(s, CodeFamily::Replicated),
            Scheme::SrSgc {
                burst,
                window,
                lambda,
            } => Ok(Resolved::Sr(derive_sr_params(n, burst, window, lambda)?)),
            Scheme::SrSgcRep {
                burst,
                window,
                lambda,
            } => Ok(Resolved::Sr(derive_sr_rep_params(
                n, burst, window, lambda,
            )?)),
            Scheme::MSgc {
                burst,
                window,
                lambda,
            } => Ok(Resolved::M(derive_m_params(n, burst, window, lambda)?)),
            Scheme::MSgcRep {
                burst,
                window,
                lambda,
            } => Ok(Resolved::M(derive_m_rep_params(n, burst, window, lambda)?)),
        }
    }

    /// Checks the parameters against `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.resolve(n).map(|_| ())
    }

    /// Decoding delay `T`.
    pub fn delay(&self, n: usize) -> Result<usize> {
        Ok(match self.resolve(n)? {
            Resolved::Gc { .. } => 0,
            Resolved::Sr(p) => p.delay(),
            Resolved::M(p) => p.delay(),
        })
    }

    /// Normalized per-worker load on non-trivial rounds.
    pub fn load(&self, n: usize) -> Result<Fraction> {
        Ok(match self.resolve(n)? {
            Resolved::Gc { s, .. } => Fraction::new((s + 1) as i64, n as i64),
            Resolved::Sr(p) => p.load(),
            Resolved::M(p) => p.load(),
        })
    }

    /// Straggler model the scheme is designed to tolerate.
    pub fn design_model(&self, n: usize) -> Result<AssumedModel> {
        Ok(match self.resolve(n)? {
            Resolved::Gc { s, .. } => AssumedModel::PerRound(PerRoundModel { s }),
            Resolved::Sr(p) => p.design_model(),
            Resolved::M(p) => p.design_model(),
        })
    }

    fn runner(&self, n: usize, jobs: usize, dim: usize, seed: u64) -> Result<Box<dyn RoundScheme>> {
        let oracle = if dim > 0 {
            Some(GradientOracle::new(dim, seed)?)
        } else {
            None
        };
        let numeric = |family, s| -> Result<Option<(BaseCode, GradientOracle)>> {
            oracle
                .map(|o| Ok((BaseCode::build(family, n, s, seed)?, o)))
                .transpose()
        };
        Ok(match self.resolve(n)? {
            Resolved::Gc { s, family } => {
                Box::new(GcRunner::new(n, s, family, jobs, numeric(family, s)?))
            }
            Resolved::Sr(p) => Box::new(SrRunner::new(p, jobs, numeric(p.family, p.s)?)),
            Resolved::M(p) => {
                // With lambda = n there is no coded part and the code is unused.
                let s = if p.has_coded_part() { p.lambda } else { 0 };
                let family = if p.has_coded_part() {
                    p.family
                } else {
                    CodeFamily::Cyclic
                };
                Box::new(MRunner::new(p, jobs, numeric(family, s)?))
            }
        })
    }

    fn is_no_coding(&self) -> bool {
        matches!(self, Scheme::NoCoding)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let label = self.params_label();
        if label.is_empty() {
            f.write_str(self.name())
        } else {
            write!(f, "{}({label})", self.name())
        }
    }
}

/// Plain `(n, s)` gradient coding: every worker works on job `t` in round `t`.
struct GcRunner {
    n: usize,
    s: usize,
    family: CodeFamily,
    received: Vec<Vec<bool>>,
    values: Vec<BTreeMap<usize, Vec<f64>>>,
    numeric: Option<(BaseCode, GradientOracle)>,
}

impl GcRunner {
    fn new(
        n: usize,
        s: usize,
        family: CodeFamily,
        jobs: usize,
        numeric: Option<(BaseCode, GradientOracle)>,
    ) -> Self {
        Self {
            n,
            s,
            family,
            received: vec![vec![false; n]; jobs],
            values: vec![BTreeMap::new(); jobs],
            numeric,
        }
    }
}

impl RoundScheme for GcRunner {
    fn chunk_count(&self) -> usize {
        self.n
    }

    fn play_round(&mut self, t: usize, stragglers: &[bool]) -> Result<Vec<Fraction>> {
        if t > self.received.len() {
            return Ok(vec![Fraction::from_integer(0); self.n]);
        }
        let partials = self.numeric.as_ref().map(|(_, o)| o.partials(t, self.n));
        for w in (0..self.n).filter(|&w| !stragglers[w]) {
            self.received[t - 1][w] = true;
            if let (Some((code, _)), Some(p)) = (&self.numeric, &partials) {
                self.values[t - 1].insert(w, code.encode(w, p));
            }
        }
        Ok(vec![
            Fraction::new((self.s + 1) as i64, self.n as i64);
            self.n
        ])
    }

    fn is_decodable(&self, job: usize) -> bool {
        job.checked_sub(1)
            .and_then(|k| self.received.get(k))
            .is_some_and(|r| self.family.decodable(self.n, self.s, r))
    }

    fn finish_job(&mut self, job: usize) -> Result<Option<Vec<f64>>> {
        let values = std::mem::take(&mut self.values[job - 1]);
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

/// Which model the wait-out rule enforces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum WaitoutPolicy {
    /// The scheme's own design model.
    #[default]
    Design,
    Model(AssumedModel),
    /// Never wait; deadline misses surface as errors.
    Disabled,
}

/// Source of each round's stragglers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SimInput {
    Pattern(StragglerPattern),
    Timed { profile: DelayProfile, mu: f64 },
}

impl SimInput {
    fn rounds(&self) -> usize {
        match self {
            SimInput::Pattern(p) => p.rounds(),
            SimInput::Timed { profile, .. } => profile.rounds(),
        }
    }

    fn n(&self) -> usize {
        match self {
            SimInput::Pattern(p) => p.n(),
            SimInput::Timed { profile, .. } => profile.n(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub jobs: usize,
    pub scheme: Scheme,
    pub input: SimInput,
    #[serde(default)]
    pub waitout: WaitoutPolicy,
    /// Gradient dimension for numeric decode checks; 0 checks decodability
    /// only.
    #[serde(default)]
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job: usize,
    pub completion_round: usize,
    /// `completion_round - job`.
    pub delay: usize,
    /// Relative decode error against the oracle, when checked.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Stragglers observed in the input.
    pub observed: Vec<usize>,
    /// Stragglers kept after the wait-out rule.
    pub accepted: Vec<usize>,
    pub waited: bool,
    /// Seconds, in timed mode.
    pub duration: Option<f64>,
    /// Per-worker normalized load.
    pub loads: Vec<Fraction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scheme: Scheme,
    pub n: usize,
    pub jobs: usize,
    pub delay: usize,
    pub load: Fraction,
    pub job_records: Vec<JobRecord>,
    pub rounds: Vec<RoundRecord>,
    pub waitout_count: usize,
    /// Sum of round durations, in timed mode.
    pub total_runtime: Option<f64>,
    pub max_residual: Option<f64>,
}

impl SimReport {
    pub fn max_delay(&self) -> usize {
        self.job_records.iter().map(|j| j.delay).max().unwrap_or(0)
    }

    /// Effective straggler pattern after wait-outs.
    pub fn effective_pattern(&self) -> StragglerPattern {
        let columns = self
            .rounds
            .iter()
            .map(|r| {
                let mut c = vec![false; self.n];
                r.accepted.iter().for_each(|&w| c[w] = true);
                c
            })
            .collect();
        StragglerPattern::from_columns(self.n, columns).expect("accepted workers < n")
    }

    /// Cumulative `(seconds, completed jobs)` after each round, in timed mode.
    pub fn completion_curve(&self) -> Vec<(f64, usize)> {
        let mut done_by_round = vec![0usize; self.rounds.len() + 1];
        for j in &self.job_records {
            done_by_round[j.completion_round] += 1;
        }
        let (mut clock, mut done) = (0.0, 0);
        self.rounds
            .iter()
            .map(|r| {
                clock += r.duration.unwrap_or(1.0);
                done += done_by_round[r.round];
                (clock, done)
            })
            .collect()
    }
}

/// Applies the wait-out rule to round `effective.rounds() + 1`: keeps the
/// candidate stragglers if the pattern stays conforming to `model`,
/// otherwise waits for everyone. Returns the accepted stragglers and whether
/// the round was waited out.
pub fn waitout_rule(
    effective: &StragglerPattern,
    candidate: &[bool],
    model: &AssumedModel,
) -> (Vec<bool>, bool) {
    let mut tracker = ConformanceTracker::new(effective.n(), model.clone());
    for column in effective.columns() {
        tracker.push(column);
    }
    if tracker.admits(candidate) {
        (candidate.to_vec(), false)
    } else {
        (vec![false; candidate.len()], true)
    }
}

fn indices(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| i)
        .collect()
}

/// Runs rounds `1..=J+T` of the configured scheme.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    let n = config.n;
    if config.input.n() != n {
        return Err(Error::param(format!(
            "input has {} workers, config has n={n}",
            config.input.n()
        )));
    }
    if config.jobs == 0 {
        return Err(Error::param("at least one job is required"));
    }
    let delay = config.scheme.delay(n)?;
    let horizon = config.jobs + delay;
    if config.input.rounds() < horizon {
        return Err(Error::param(format!(
            "input has {} rounds, need J+T = {horizon}",
            config.input.rounds()
        )));
    }
    if let SimInput::Timed { mu, .. } = config.input {
        if !(mu > 0.0) {
            return Err(Error::param(format!("mu must be positive, got {mu}")));
        }
    }
    let mut tracker = match &config.waitout {
        WaitoutPolicy::Design => Some(ConformanceTracker::new(n, config.scheme.design_model(n)?)),
        WaitoutPolicy::Model(m) => Some(ConformanceTracker::new(n, m.clone())),
        WaitoutPolicy::Disabled => None,
    };
    let mut runner = config
        .scheme
        .runner(n, config.jobs, config.dim, config.seed)?;
    let oracle = if config.dim > 0 {
        Some(GradientOracle::new(config.dim, config.seed)?)
    } else {
        None
    };

    let mut rounds = Vec::with_capacity(horizon);
    let mut completion: Vec<Option<usize>> = vec![None; config.jobs];
    let mut residuals: Vec<Option<f64>> = vec![None; config.jobs];
    for t in 1..=horizon {
        let observed = match &config.input {
            SimInput::Pattern(p) => p.column(t).to_vec(),
            SimInput::Timed { profile, mu } => straggler_column(profile.round_times(t), *mu),
        };
        let (accepted, waited) = match tracker.as_mut() {
            Some(tr) => {
                let ok = tr.push(&observed);
                if ok {
                    (observed.clone(), false)
                } else {
                    (vec![false; n], true)
                }
            }
            None => (observed.clone(), false),
        };
        let loads = runner.play_round(t, &accepted)?;
        let duration = match &config.input {
            SimInput::Pattern(_) => None,
            SimInput::Timed { profile, mu } => Some(if waited || config.scheme.is_no_coding() {
                profile.slowest(t)
            } else {
                (1.0 + mu) * profile.kappa(t)
            }),
        };

        let first = t.saturating_sub(delay).max(1);
        for job in first..=t.min(config.jobs) {
            if completion[job - 1].is_some() || !runner.is_decodable(job) {
                continue;
            }
            completion[job - 1] = Some(t);
            if let Some(decoded) = runner.finish_job(job)? {
                let oracle = oracle.as_ref().expect("numeric runs carry an oracle");
                let expected = oracle.full(job, runner.chunk_count());
                let err = relative_error(&decoded, &expected);
                if err > DECODE_TOLERANCE {
                    return Err(Error::SimulationInvariant(format!(
                        "job {job} decoded with relative error {err:e} > {DECODE_TOLERANCE:e}"
                    )));
                }
                residuals[job - 1] = Some(err);
            }
        }
        if let Some(job) = t.checked_sub(delay).filter(|&j| j >= 1 && j <= config.jobs) {
            if completion[job - 1].is_none() {
                return Err(Error::SimulationInvariant(format!(
                    "job {job} of {} not decodable by its deadline round {t}",
                    config.scheme
                )));
            }
        }
        rounds.push(RoundRecord {
            round: t,
            observed: indices(&observed),
            accepted: indices(&accepted),
            waited,
            duration,
            loads,
        });
    }

    let job_records: Vec<JobRecord> = completion
        .iter()
        .zip(&residuals)
        .enumerate()
        .map(|(k, (c, r))| {
            let round = c.expect("deadline check covers every job");
            JobRecord {
                job: k + 1,
                completion_round: round,
                delay: round - (k + 1),
                residual: *r,
            }
        })
        .collect();
    let total_runtime = match config.input {
        SimInput::Timed { .. } => Some(rounds.iter().filter_map(|r| r.duration).sum()),
        SimInput::Pattern(_) => None,
    };
    let max_residual = residuals.iter().flatten().copied().reduce(f64::max);
    Ok(SimReport {
        scheme: config.scheme,
        n,
        jobs: config.jobs,
        delay,
        load: config.scheme.load(n)?,
        waitout_count: rounds.iter().filter(|r| r.waited).count(),
        job_records,
        rounds,
        total_runtime,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::straggler::{gen_periodic_bursty, BurstyModel};

    fn pattern_config(n: usize, jobs: usize, scheme: Scheme, p: StragglerPattern) -> SimConfig {
        SimConfig {
            n,
            jobs,
            scheme,
            input: SimInput::Pattern(p),
            waitout: WaitoutPolicy::Design,
            dim: 3,
            seed: 5,
        }
    }

    #[test]
    fn gc_per_round_conforming_has_zero_delay() {
        let p =
            StragglerPattern::from_events(5, 6, &[(0, 1), (3, 1), (2, 2), (4, 4), (1, 4)]).unwrap();
        let r = run(&pattern_config(5, 6, Scheme::Gc { s: 2 }, p)).unwrap();
        assert_eq!(r.max_delay(), 0);
        assert_eq!(r.waitout_count, 0);
        assert!(r.max_residual.unwrap() <= 1e-8);
    }

    #[test]
    fn gc_waits_out_excess_stragglers() {
        let p = StragglerPattern::from_events(4, 2, &[(0, 1), (1, 1), (2, 1)]).unwrap();
        let r = run(&pattern_config(4, 2, Scheme::Gc { s: 2 }, p)).unwrap();
        assert!(r.rounds[0].waited);
        assert!(r.rounds[0].accepted.is_empty());
        assert_eq!(r.max_delay(), 0);
    }

    #[test]
    fn fig10_alternating_pattern() {
        let bursty = BurstyModel::new(1, 2, 4).unwrap();
        let p = gen_periodic_bursty(4, 12, &bursty).unwrap();
        for scheme in [
            Scheme::SrSgc {
                burst: 1,
                window: 2,
                lambda: 4,
            },
            Scheme::MSgc {
                burst: 1,
                window: 2,
                lambda: 4,
            },
        ] {
            let r = run(&pattern_config(4, 10, scheme, p.clone())).unwrap();
            assert_eq!(r.waitout_count, 0, "{scheme}");
            for j in &r.job_records {
                let t = j.job.div_ceil(2);
                assert_eq!(j.completion_round, 2 * t, "{scheme} job {}", j.job);
            }
        }
    }

    #[test]
    fn waitout_rule_examples() {
        let model = AssumedModel::PerRound(PerRoundModel { s: 2 });
        let empty = StragglerPattern::empty(4, 0);
        assert_eq!(
            waitout_rule(&empty, &[true, true, true, false], &model),
            (vec![false; 4], true)
        );
        assert_eq!(
            waitout_rule(&empty, &[true, true, false, false], &model),
            (vec![true, true, false, false], false)
        );
        let bursty = AssumedModel::Bursty(BurstyModel::new(1, 2, 1).unwrap());
        let prev = StragglerPattern::from_events(2, 1, &[(0, 1)]).unwrap();
        assert!(waitout_rule(&prev, &[true, false], &bursty).1);
    }

    #[test]
    fn short_horizon_is_parameter_error() {
        let p = StragglerPattern::empty(4, 3);
        let err = run(&pattern_config(
            4,
            3,
            Scheme::MSgc {
                burst: 1,
                window: 2,
                lambda: 1,
            },
            p,
        ))
        .unwrap_err();
        assert!(err.is_parameter_error());
    }

    #[test]
    fn disabled_waitout_surfaces_deadline_miss() {
        let p = StragglerPattern::from_events(3, 2, &[(0, 1), (1, 1)]).unwrap();
        let mut c = pattern_config(3, 2, Scheme::Gc { s: 1 }, p);
        c.waitout = WaitoutPolicy::Disabled;
        assert!(matches!(run(&c), Err(Error::SimulationInvariant(_))));
    }

    #[test]
    fn timed_durations() {
        let profile = DelayProfile::new(3, vec![vec![1.0, 1.5, 4.0], vec![1.0, 1.2, 1.1]]).unwrap();
        let cfg = |scheme| SimConfig {
            n: 3,
            jobs: 2,
            scheme,
            input: SimInput::Timed {
                profile: profile.clone(),
                mu: 1.0,
            },
            waitout: WaitoutPolicy::Design,
            dim: 0,
            seed: 0,
        };
        let nc = run(&cfg(Scheme::NoCoding)).unwrap();
        assert_eq!(nc.total_runtime, Some(4.0 + 1.2));
        assert_eq!(nc.waitout_count, 1);
        let gc = run(&cfg(Scheme::Gc { s: 1 })).unwrap();
        assert_eq!(gc.total_runtime, Some(2.0 + 2.0));
        assert_eq!(gc.waitout_count, 0);
    }
}
