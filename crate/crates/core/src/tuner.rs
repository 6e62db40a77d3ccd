//! Parameter selection from a reference delay profile.
//!
//! A reference profile holds completion times measured at load `1/n`.
//! Runtime grows linearly with load, with slope `alpha` seconds per unit of
//! normalized load. A candidate with load `L` is therefore
//! evaluated by shifting every entry by `(L - 1/n) * alpha` and simulating
//! the candidate on the shifted profile.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::simulator::{run, Scheme, SimConfig, SimInput, SimReport, WaitoutPolicy};
use crate::straggler::DelayProfile;
use crate::{to_f64, Error, Fraction, Result};

/// Least-squares line through `(load, mean seconds)` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub samples: Vec<(f64, f64)>,
    /// Seconds per unit of normalized load.
    pub alpha: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn fit_slope(samples: &[(f64, f64)]) -> Result<SlopeFit> {
    if samples.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(Error::Fit("samples must be finite".into()));
    }
    let k = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / k;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / k;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) * k {
        return Err(Error::Fit("all samples share the same load".into()));
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residual = (samples
        .iter()
        .map(|s| (s.1 - intercept - alpha * s.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(SlopeFit {
        samples: samples.to_vec(),
        alpha,
        intercept,
        residual,
    })
}

/// Adds `(load - 1/n) * alpha` seconds to every entry.
pub fn adjust_profile(reference: &DelayProfile, load: f64, alpha: f64) -> Result<DelayProfile> {
    if !(load >= 0.0) || !alpha.is_finite() {
        return Err(Error::Adjustment(format!(
            "invalid load {load} or alpha {alpha}"
        )));
    }
    let shift = (load - 1.0 / reference.n() as f64) * alpha;
    let times: Vec<Vec<f64>> = reference
        .rows()
        .iter()
        .map(|r| r.iter().map(|v| v + shift).collect())
        .collect();
    if let Some((t, _)) = times
        .iter()
        .enumerate()
        .find(|(_, r)| r.iter().any(|&v| !(v > 0.0)))
    {
        return Err(Error::Adjustment(format!(
            "shift of {shift} s makes a time in round {} non-positive",
            t + 1
        )));
    }
    DelayProfile::new(reference.n(), times).map_err(|e| Error::Adjustment(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    /// Reference profile measured at load `1/n`.
    pub profile: DelayProfile,
    pub mu: f64,
    /// Jobs in the estimation horizon.
    pub jobs: usize,
    pub candidates: Vec<Scheme>,
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub scheme: Scheme,
    pub load: Fraction,
    pub estimated_runtime: f64,
    pub waitout_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    /// All candidates, best first.
    pub ranking: Vec<Candidate>,
    /// Best candidate per scheme name.
    pub best: BTreeMap<String, Candidate>,
}

impl TuneResult {
    pub fn winner(&self) -> &Candidate {
        &self.ranking[0]
    }
}

/// SR-SGC grid: every `(B, W, lambda)` with `B | (W-1)` valid for `n`.
pub fn sr_grid(
    n: usize,
    bursts: &[usize],
    windows: &[usize],
    lambdas: &[usize],
    replicated: bool,
) -> Vec<Scheme> {
    let mut out = Vec::new();
    for &burst in bursts {
        for &window in windows {
            for &lambda in lambdas {
                let s = if replicated {
                    Scheme::SrSgcRep {
                        burst,
                        window,
                        lambda,
                    }
                } else {
                    Scheme::SrSgc {
                        burst,
                        window,
                        lambda,
                    }
                };
                if s.validate(n).is_ok() {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// M-SGC grid: every `(B, W, lambda)` with `B < W` valid for `n`.
pub fn m_grid(
    n: usize,
    bursts: &[usize],
    windows: &[usize],
    lambdas: &[usize],
    replicated: bool,
) -> Vec<Scheme> {
    let mut out = Vec::new();
    for &burst in bursts {
        for &window in windows {
            for &lambda in lambdas {
                let s = if replicated {
                    Scheme::MSgcRep {
                        burst,
                        window,
                        lambda,
                    }
                } else {
                    Scheme::MSgc {
                        burst,
                        window,
                        lambda,
                    }
                };
                if s.validate(n).is_ok() {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// GC grid over `s`.
pub fn gc_grid(n: usize, ss: &[usize]) -> Vec<Scheme> {
    ss.iter()
        .map(|&s| Scheme::Gc { s })
        .filter(|s| s.validate(n).is_ok())
        .collect()
}

/// Simulated run of `scheme` on the load-adjusted reference profile.
pub fn estimate_report(scheme: &Scheme, tune: &TuneConfig, alpha: f64) -> Result<SimReport> {
    let n = tune.profile.n();
    let load = scheme.load(n)?;
    let horizon = tune.jobs + scheme.delay(n)?;
    if tune.profile.rounds() == 0 {
        return Err(Error::param("reference profile has no rounds"));
    }
    let adjusted = adjust_profile(&tune.profile, to_f64(load), alpha)?.cycled(horizon);
    run(&SimConfig {
        n,
        jobs: tune.jobs,
        scheme: *scheme,
        input: SimInput::Timed {
            profile: adjusted,
            mu: tune.mu,
        },
        waitout: WaitoutPolicy::Design,
        dim: 0,
        seed: 0,
    })
}

/// Estimated total runtime of `scheme`.
pub fn estimate_runtime(scheme: &Scheme, tune: &TuneConfig, alpha: f64) -> Result<Candidate> {
    let report = estimate_report(scheme, tune, alpha)?;
    Ok(Candidate {
        scheme: *scheme,
        load: report.load,
        estimated_runtime: report.total_runtime.expect("timed run"),
        waitout_count: report.waitout_count,
    })
}

fn param_key(s: &Scheme) -> (&'static str, Vec<usize>) {
    let params = match *s {
        Scheme::NoCoding => vec![],
        Scheme::Gc { s } | Scheme::GcRep { s } => vec![s],
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
        } => vec![burst, window, lambda],
    };
    (s.name(), params)
}

/// Ranking order: runtime, then load, then scheme name and parameters.
pub fn rank_cmp(a: &Candidate, b: &Candidate) -> Ordering {
    a.estimated_runtime
        .total_cmp(&b.estimated_runtime)
        .then(a.load.cmp(&b.load))
        .then_with(|| param_key(&a.scheme).cmp(&param_key(&b.scheme)))
}

/// Evaluates every candidate (in parallel) and ranks them.
pub fn grid_search(tune: &TuneConfig, alpha: f64) -> Result<TuneResult> {
    if tune.candidates.is_empty() {
        return Err(Error::param("empty candidate grid"));
    }
    let mut ranking = tune
        .candidates
        .par_iter()
        .map(|s| estimate_runtime(s, tune, alpha))
        .collect::<Result<Vec<_>>>()?;
    ranking.sort_by(rank_cmp);
    let mut best = BTreeMap::new();
    for c in &ranking {
        best.entry(c.scheme.name().to_string())
            .or_insert_with(|| c.clone());
    }
    Ok(TuneResult { ranking, best })
}

/// Uncoded probe phase, parameter selection on the probe rounds, then the
/// chosen scheme for the remaining jobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub probe_rounds: usize,
    pub probe: SimReport,
    pub tune: TuneResult,
    pub chosen: Scheme,
    pub coded: SimReport,
    pub total_runtime: f64,
}

/// Runs `probe_rounds` uncoded jobs on `profile`, tunes over `candidates`
/// using those rounds as the reference, and runs the winner on the rest of
/// `profile` (shifted by the winner's load) for the remaining jobs.
pub fn probe_then_switch(
    profile: &DelayProfile,
    mu: f64,
    probe_rounds: usize,
    jobs: usize,
    candidates: Vec<Scheme>,
    alpha: f64,
) -> Result<SwitchReport> {
    if probe_rounds == 0 || probe_rounds >= jobs {
        return Err(Error::param(format!(
            "need 0 < T_probe < J, got T_probe={probe_rounds}, J={jobs}"
        )));
    }
    let n = profile.n();
    let reference = profile.prefix(probe_rounds);
    let probe = run(&SimConfig {
        n,
        jobs: probe_rounds,
        scheme: Scheme::NoCoding,
        input: SimInput::Timed {
            profile: reference.clone(),
            mu,
        },
        waitout: WaitoutPolicy::Design,
        dim: 0,
        seed: 0,
    })?;
    let remaining = jobs - probe_rounds;
    let tune = grid_search(
        &TuneConfig {
            profile: reference,
            mu,
            jobs: remaining,
            candidates,
        },
        alpha,
    )?;
    let chosen = tune.winner().scheme;
    let rest = adjust_profile(
        &profile.suffix(probe_rounds + 1),
        to_f64(chosen.load(n)?),
        alpha,
    )?;
    let coded = run(&SimConfig {
        n,
        jobs: remaining,
        scheme: chosen,
        input: SimInput::Timed { profile: rest, mu },
        waitout: WaitoutPolicy::Design,
        dim: 0,
        seed: 0,
    })?;
    let total_runtime = probe.total_runtime.unwrap_or(0.0) + coded.total_runtime.unwrap_or(0.0);
    Ok(SwitchReport {
        probe_rounds,
        probe,
        tune,
        chosen,
        coded,
        total_runtime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_examples() {
        let pts: Vec<(f64, f64)> = (0..5)
            .map(|k| (k as f64 * 0.1, 3.0 * k as f64 * 0.1 + 1.0))
            .collect();
        let f = fit_slope(&pts).unwrap();
        assert!((f.alpha - 3.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        let f = fit_slope(&[(0.1, 2.0), (0.3, 5.0)]).unwrap();
        assert!((f.alpha - 15.0).abs() < 1e-12);
        assert!(fit_slope(&[(0.2, 1.0), (0.2, 3.0)]).is_err());
        assert!(fit_slope(&[(0.2, 1.0)]).is_err());
    }

    #[test]
    fn adjust_examples() {
        let p = DelayProfile::new(4, vec![vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        assert_eq!(adjust_profile(&p, 0.25, 10.0).unwrap(), p);
        assert_eq!(adjust_profile(&p, 0.7, 0.0).unwrap(), p);
        assert_eq!(
            adjust_profile(&p, 0.5, 10.0).unwrap().round_times(1),
            &[3.5, 4.5, 5.5, 6.5]
        );
        assert!(adjust_profile(&p, 0.0, 10.0).is_err());
    }

    #[test]
    fn stragglerless_grid_prefers_lowest_load() {
        let profile = DelayProfile::new(6, vec![vec![1.0; 6]; 10]).unwrap();
        let tune = TuneConfig {
            profile,
            mu: 1.0,
            jobs: 10,
            candidates: gc_grid(6, &[1, 2, 3, 4, 5]),
        };
        let r = grid_search(&tune, 4.0).unwrap();
        assert_eq!(r.winner().scheme, Scheme::Gc { s: 1 });
        assert!(grid_search(
            &TuneConfig {
                candidates: vec![],
                ..tune
            },
            4.0
        )
        .is_err());
    }

    #[test]
    fn no_coding_runtime_is_sum_of_maxima() {
        let profile = DelayProfile::new(3, vec![vec![1.0, 3.0, 2.0], vec![2.0, 1.0, 1.5]]).unwrap();
        let tune = TuneConfig {
            profile,
            mu: 1.0,
            jobs: 2,
            candidates: vec![Scheme::NoCoding],
        };
        let c = estimate_runtime(&Scheme::NoCoding, &tune, 5.0).unwrap();
        assert!((c.estimated_runtime - 5.0).abs() < 1e-12);
    }
}
