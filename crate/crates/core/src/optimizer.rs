//! Privacy-utility trade-off search.
//!
//! For a fixed utility threshold `h` the smallest achievable budget is
//! either the closed form of the utility-safe mechanism (`Safe`) or found
//! by bisecting the feasibility program over `eps` (`Optimal`). For a
//! fixed budget, the largest reachable threshold is found by binary search
//! over `h`; feasibility is monotone in `h` because raising the threshold
//! only adds forced zeros.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{check_feasibility, FeasibilityOptions};
use crate::leakage::corollary_epsilon;
use crate::mechanisms::utility_safe;
use crate::model::{Mechanism, Prior, UtilityOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Utility-safe mechanism with the output support pinned to Y+(h).
    Safe,
    /// Linear-feasibility optimum without the support constraint.
    Optimal,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Safe => "safe",
            Mode::Optimal => "optimal",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "safe" => Ok(Mode::Safe),
            "optimal" => Ok(Mode::Optimal),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub h: usize,
    pub min_eps: f64,
    pub witness: Mechanism,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Bisection stops once the bracket is at most this wide.
    pub tol: f64,
    pub feasibility: FeasibilityOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            tol: 1e-6,
            feasibility: FeasibilityOptions::default(),
        }
    }
}

impl SearchOptions {
    pub fn with_tol(tol: f64) -> Self {
        SearchOptions {
            tol,
            ..Default::default()
        }
    }
}

pub fn min_epsilon(prior: &Prior, order: &UtilityOrder, h: usize, mode: Mode, tol: f64) -> Result<TradeoffPoint> {
    min_epsilon_with(prior, order, h, mode, &SearchOptions::with_tol(tol))
}

pub fn min_epsilon_with(
    prior: &Prior,
    order: &UtilityOrder,
    h: usize,
    mode: Mode,
    opts: &SearchOptions,
) -> Result<TradeoffPoint> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance {} must be > 0", opts.tol)));
    }
    let upper = corollary_epsilon(prior, order, h)?;
    let safe = utility_safe(order, h)?;
    if mode == Mode::Safe || upper <= 0.0 {
        return Ok(TradeoffPoint {
            h,
            min_eps: upper,
            witness: safe,
            mode,
        });
    }

    let feasible_at = |eps: f64| -> Result<Option<Mechanism>> {
        let res = check_feasibility(prior, order, h, eps, &opts.feasibility)?;
        Ok(res.witness)
    };

    if let Some(w) = feasible_at(0.0)? {
        return Ok(TradeoffPoint {
            h,
            min_eps: 0.0,
            witness: w,
            mode,
        });
    }
    // the utility-safe mechanism certifies the upper end
    let (mut lo, mut hi, mut witness) = (0.0, upper, safe);
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        match feasible_at(mid)? {
            Some(w) => {
                hi = mid;
                witness = w;
            }
            None => lo = mid,
        }
    }
    Ok(TradeoffPoint {
        h,
        min_eps: hi,
        witness,
        mode,
    })
}

pub fn max_h_for_budget(prior: &Prior, order: &UtilityOrder, eps: f64, mode: Mode) -> Result<TradeoffPoint> {
    max_h_for_budget_with(prior, order, eps, mode, &SearchOptions::default())
}

pub fn max_h_for_budget_with(
    prior: &Prior,
    order: &UtilityOrder,
    eps: f64,
    mode: Mode,
    opts: &SearchOptions,
) -> Result<TradeoffPoint> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be >= 0")));
    }
    let m = order.cols();
    let reachable: Box<dyn Fn(usize) -> Result<bool>> = match mode {
        Mode::Safe => {
            // M*(h') has worst-case order h' >= h, so h counts as reachable
            // whenever some h' >= h fits; this envelope is monotone in h
            // even where the closed form itself is not.
            let mut envelope = vec![f64::INFINITY; m + 2];
            for h in (1..=m).rev() {
                envelope[h] = envelope[h + 1].min(corollary_epsilon(prior, order, h)?);
            }
            Box::new(move |h| Ok(envelope[h] <= eps))
        }
        Mode::Optimal => Box::new(|h| Ok(check_feasibility(prior, order, h, eps, &opts.feasibility)?.is_feasible())),
    };
    let (mut lo, mut hi) = (1, m);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if reachable(mid)? {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    min_epsilon_with(prior, order, lo, mode, opts)
}

/// One point per threshold `h = 1..=M`; failed points carry their error.
pub fn tradeoff_curve(
    prior: &Prior,
    order: &UtilityOrder,
    mode: Mode,
    opts: &SearchOptions,
) -> Vec<(usize, Result<TradeoffPoint>)> {
    (1..=order.cols())
        .map(|h| (h, min_epsilon_with(prior, order, h, mode, opts)))
        .collect()
}
