//! Sequential gradient coding.
//!
//! A master distributes the computation of a sequence of gradients
//! `g(1), ..., g(J)` across `n` workers in synchronous rounds. Job `t` starts
//! in round `t` and must be decoded by the end of round `t + T`. This crate
//! provides:
//!
//! * classical `(n, s)` gradient coding and its replication variant
//!   ([`gc`]),
//! * the selective-reattempt scheme SR-SGC ([`sr_sgc`]) and the multiplexed
//!   scheme M-SGC ([`m_sgc`]),
//! * straggler patterns, delay profiles, model checkers and generators
//!   ([`straggler`]),
//! * a deterministic round engine with model-driven wait-outs
//!   ([`simulator`]),
//! * exact load lower bounds ([`bounds`]) and a delay-profile driven
//!   parameter tuner ([`tuner`]).

pub mod bounds;
pub mod error;
pub mod gc;
pub mod m_sgc;
pub mod simulator;
pub mod sr_sgc;
pub mod straggler;
pub mod tuner;

pub use error::{Error, Result};

/// Exact normalized loads and bounds.
pub type Fraction = num_rational::Ratio<i64>;

pub use bounds::{lb_arbitrary, lb_bursty, optimality_gap, BoundReport};
pub use gc::{
    build_gc, build_gc_rep, gc_decode, gc_rep_decode, BaseCode, CodeFamily, GcCode, GcRepCode,
    GradientOracle,
};
pub use m_sgc::{
    derive_m_params, derive_m_rep_params, m_assign_round, m_decode_job, MLedger, MSgcParams,
    MiniTask, Payload,
};
pub use simulator::{run, waitout_rule, Scheme, SimConfig, SimInput, SimReport, WaitoutPolicy};
pub use sr_sgc::{
    derive_sr_params, derive_sr_rep_params, sr_assign_round, sr_rep_assign_round, SrLedger,
    SrSgcParams,
};
pub use straggler::{
    pattern_from_profile, ArbitraryModel, AssumedModel, BurstyModel, DelayProfile, GeParams,
    PerRoundModel, StragglerPattern,
};
pub use tuner::{
    adjust_profile, estimate_runtime, fit_slope, grid_search, Candidate, SlopeFit, TuneConfig,
    TuneResult,
};

/// Converts an exact fraction to `f64`.
pub fn to_f64(f: Fraction) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}
