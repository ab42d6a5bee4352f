//! Mechanism constructors: the utility-safe mechanism, independent
//! mechanisms, the three-letter example fixture and the LDP-style
//! baselines calibrated to a PML budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leakage::corollary_epsilon;
use crate::model::{Mechanism, Prior, UtilityOrder, UtilityValues};

/// An LDP budget in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LdpBudget(f64);

impl LdpBudget {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "LDP budget must be finite and nonnegative, got {value}"
            )));
        }
        Ok(LdpBudget(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Zero on every rank below `h`, uniform over the `M - h + 1` ranks at or
/// above it.
pub fn utility_safe(order: &UtilityOrder, h: usize) -> Result<Mechanism> {
    order.check_threshold(h)?;
    let mass = 1.0 / (order.cols() - h + 1) as f64;
    let rows = order
        .as_rows()
        .iter()
        .map(|row| row.iter().map(|&u| if u < h { 0.0 } else { mass }).collect())
        .collect();
    Mechanism::new(rows)
}

/// Every row equal to `weights`.
pub fn independent(inputs: usize, weights: &[f64]) -> Result<Mechanism> {
    if inputs == 0 {
        return Err(Error::InvalidMechanism("no inputs".into()));
    }
    Mechanism::new(vec![weights.to_vec(); inputs])
}

/// Optimal mechanism of the three-letter example for priors with
/// `P(x_2) + P(x_3) <= 1/2` and `x_1` most likely.
pub fn example1_mechanism(prior: &Prior) -> Result<Mechanism> {
    let p = prior.probs();
    if p.len() != 3 {
        return Err(Error::Precondition(format!(
            "example mechanism needs 3 inputs, prior has {}",
            p.len()
        )));
    }
    if p[1] + p[2] > 0.5 {
        return Err(Error::Precondition(format!(
            "P(x_2) + P(x_3) = {} exceeds 1/2",
            p[1] + p[2]
        )));
    }
    if p[0] < p[1] || p[0] < p[2] {
        return Err(Error::Precondition("x_1 must be the most likely input".into()));
    }
    let a = (1.0 - 2.0 * p[2]) / (2.0 * p[0]);
    let b = (1.0 - 2.0 * p[1]) / (2.0 * p[0]);
    Mechanism::new(vec![vec![a, b, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]])
}

/// Largest LDP budget that still guarantees `eps`-PML for priors whose
/// smallest mass is `p_min`.
pub fn ldp_budget(eps: f64, p_min: f64) -> Result<LdpBudget> {
    if !(p_min > 0.0 && p_min < 1.0) {
        return Err(Error::InvalidParameter(format!("p_min = {p_min} not in (0, 1)")));
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be finite and >= 0")));
    }
    let limit = -p_min.ln();
    if eps >= limit {
        return Err(Error::BudgetDegenerate { eps, limit });
    }
    let ratio = ((-eps).exp() - p_min) / (1.0 - p_min);
    if ratio.is_nan() || ratio <= 0.0 {
        // eps within rounding of the limit
        return Err(Error::BudgetDegenerate { eps, limit });
    }
    LdpBudget::new((-ratio.ln()).max(0.0))
}

/// Normalizer of the exponential mechanism: twice the largest utility
/// magnitude.
pub fn exponential_normalizer(values: &UtilityValues) -> f64 {
    2.0 * values.max_abs()
}

/// Row `i` proportional to `exp(u'_ij * budget / normalizer)`.
pub fn exponential_mechanism(values: &UtilityValues, ldp: LdpBudget) -> Result<Mechanism> {
    let delta = exponential_normalizer(values);
    let scale = if delta > 0.0 { ldp.value() / delta } else { 0.0 };
    let rows = values
        .as_rows()
        .iter()
        .map(|row| {
            let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = row.iter().map(|&u| ((u - top) * scale).exp()).collect();
            let total: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / total).collect()
        })
        .collect();
    Mechanism::new(rows)
}

/// Randomized response on the inputs followed by releasing the best output
/// for the perturbed input.
pub fn randomized_response(values: &UtilityValues, ldp: LdpBudget) -> Result<Mechanism> {
    let n = values.rows();
    // e^b / (n - 1 + e^b) written to stay finite for large budgets
    let decay = (-ldp.value()).exp();
    let denom = 1.0 + (n as f64 - 1.0) * decay;
    let keep = 1.0 / denom;
    let flip = decay / denom;
    let remap: Vec<usize> = (0..n).map(|x| values.row_argmax(x)).collect();
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![0.0; values.cols()];
            for (x, &j) in remap.iter().enumerate() {
                row[j] += if x == i { keep } else { flip };
            }
            row
        })
        .collect();
    Mechanism::new(rows)
}

/// Largest threshold whose utility-safe mechanism fits in `eps`.
pub fn piecewise_safe_for_budget(prior: &Prior, order: &UtilityOrder, eps: f64) -> Result<(usize, Mechanism)> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be >= 0")));
    }
    let mut best = 1;
    for h in 2..=order.cols() {
        if corollary_epsilon(prior, order, h)? <= eps {
            best = h;
        }
    }
    Ok((best, utility_safe(order, best)?))
}
