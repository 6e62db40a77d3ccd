//! Information-theoretic lower bounds on the normalized load of any scheme
//! that meets the decoding deadline under the bursty or arbitrary straggler
//! models.

use serde::{Deserialize, Serialize};

use crate::m_sgc::derive_m_params;
use crate::{Error, Fraction, Result};

/// M-SGC load against the bursty-model bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub burst: usize,
    pub window: usize,
    pub lambda: usize,
    pub bound: Fraction,
    pub load: Fraction,
    /// `load - bound`.
    pub gap: Fraction,
    /// `gap * W`.
    pub gap_times_window: Fraction,
}

/// `L_B* = (W-1+B) / (n(W-1) + B(n-lambda))` for `B < W`, and `1/(n-lambda)`
/// for `B = W`.
pub fn lb_bursty(n: usize, burst: usize, window: usize, lambda: usize) -> Result<Fraction> {
    if n == 0 || lambda > n || burst == 0 || burst > window {
        return Err(Error::param(format!(
            "bursty bound needs n > 0, 0 <= lambda <= n, 1 <= B <= W; got n={n}, B={burst}, W={window}, lambda={lambda}"
        )));
    }
    let (n, b, w, l) = (n as i64, burst as i64, window as i64, lambda as i64);
    if b < w {
        Ok(Fraction::new(w - 1 + b, n * (w - 1) + b * (n - l)))
    } else if l < n {
        Ok(Fraction::new(1, n - l))
    } else {
        Err(Error::param(
            "bursty bound is undefined for B = W and lambda = n",
        ))
    }
}

/// `L_A* = W' / (n(W'-N) + N(n-lambda'))` for `N < W'`, and `1/(n-lambda')`
/// for `N = W'`.
pub fn lb_arbitrary(
    n: usize,
    max_per_worker: usize,
    window: usize,
    lambda: usize,
) -> Result<Fraction> {
    if n == 0 || lambda > n || window == 0 || max_per_worker > window {
        return Err(Error::param(format!(
            "arbitrary bound needs n > 0, 0 <= lambda' <= n, 0 <= N <= W'; got n={n}, N={max_per_worker}, W'={window}, lambda'={lambda}"
        )));
    }
    let (n, k, w, l) = (
        n as i64,
        max_per_worker as i64,
        window as i64,
        lambda as i64,
    );
    if k < w {
        Ok(Fraction::new(w, n * (w - k) + k * (n - l)))
    } else if l < n {
        Ok(Fraction::new(1, n - l))
    } else {
        Err(Error::param(
            "arbitrary bound is undefined for N = W' and lambda' = n",
        ))
    }
}

/// Compares the M-SGC load with `L_B*`.
pub fn optimality_gap(n: usize, burst: usize, window: usize, lambda: usize) -> Result<BoundReport> {
    let load = derive_m_params(n, burst, window, lambda)?.load();
    let bound = lb_bursty(n, burst, window, lambda)?;
    let gap = load - bound;
    Ok(BoundReport {
        n,
        burst,
        window,
        lambda,
        bound,
        load,
        gap,
        gap_times_window: gap * Fraction::from_integer(window as i64),
    })
}
