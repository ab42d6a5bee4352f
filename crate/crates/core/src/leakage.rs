//! Pointwise maximal leakage of discrete mechanisms.
//!
//! For an output `y_j` in the support, the PML is the log of the largest
//! posterior-to-prior ratio. By Bayes this is `log(max_i p_ij / P_Y(y_j))`,
//! which is how it is computed here. All quantities are in nats.
//!
//! The PML of an output splits into a *support term*, `-log` of the prior
//! mass of the inputs that can produce it, plus a *residual term*, the PML
//! under the prior rescaled to those inputs. The residual is nonnegative
//! and vanishes exactly when the positive entries of the column are equal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{induced_input_support, output_support, y_plus, Mechanism, Prior, UtilityOrder};

/// Leakage of one supported output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputLeakage {
    pub output: usize,
    pub pml: f64,
    pub support_term: f64,
    pub residual_term: f64,
    pub input_support: Vec<usize>,
}

/// Per-output and worst-case leakage of a mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub per_output: Vec<OutputLeakage>,
    pub worst_case: f64,
    pub argmax_output: usize,
}

fn check_dims(prior: &Prior, mech: &Mechanism) -> Result<()> {
    if prior.len() != mech.rows() {
        return Err(Error::DimensionMismatch(format!(
            "prior has {} entries but the mechanism has {} rows",
            prior.len(),
            mech.rows()
        )));
    }
    Ok(())
}

fn column_max(mech: &Mechanism, j: usize) -> f64 {
    mech.column(j).fold(0.0, f64::max)
}

pub fn pml_of_output(prior: &Prior, mech: &Mechanism, j: usize) -> Result<f64> {
    check_dims(prior, mech)?;
    if j >= mech.cols() {
        return Err(Error::NotInSupport(j));
    }
    let p_y = mech.output_probability(prior, j);
    if p_y <= 0.0 {
        return Err(Error::NotInSupport(j));
    }
    // Clamp rounding noise below zero; the ratio is >= 1 analytically.
    Ok((column_max(mech, j) / p_y).ln().max(0.0))
}

/// Largest PML over the output support.
pub fn worst_case_pml(prior: &Prior, mech: &Mechanism) -> Result<f64> {
    check_dims(prior, mech)?;
    output_support(mech)
        .into_iter()
        .map(|j| pml_of_output(prior, mech, j))
        .try_fold(0.0_f64, |acc, pml| Ok(acc.max(pml?)))
}

/// `(support_term, residual_term)` for output `j`.
pub fn decompose(prior: &Prior, mech: &Mechanism, j: usize) -> Result<(f64, f64)> {
    check_dims(prior, mech)?;
    let support = induced_input_support(mech, j)?;
    let mass = prior.mass(support.iter().copied());
    let support_term = -mass.ln();
    let rescaled_p_y: f64 = support.iter().map(|&i| prior.probs()[i] / mass * mech.get(i, j)).sum();
    let residual_term = (column_max(mech, j) / rescaled_p_y).ln();
    Ok((support_term, residual_term))
}

/// Posterior `P(X = x_i | Y = y_j)` for every input.
pub fn posterior(prior: &Prior, mech: &Mechanism, j: usize) -> Result<Vec<f64>> {
    check_dims(prior, mech)?;
    let p_y = mech.output_probability(prior, j);
    if p_y <= 0.0 {
        return Err(Error::NotInSupport(j));
    }
    Ok(prior
        .probs()
        .iter()
        .zip(mech.column(j))
        .map(|(px, p)| px * p / p_y)
        .collect())
}

/// Lower bound on the PML of output `j` for any mechanism that sends
/// only inputs ranking `j` at `h` or above to it.
pub fn column_lower_bound(prior: &Prior, order: &UtilityOrder, h: usize, j: usize) -> Result<f64> {
    order.check_threshold(h)?;
    if j >= order.cols() {
        return Err(Error::NotInSupport(j));
    }
    let rows: Vec<usize> = order.qualifying_rows(j, h).collect();
    if rows.len() == order.rows() {
        // the stored prior only sums to 1 up to rounding
        return Ok(0.0);
    }
    let mass = prior.mass(rows);
    if mass <= 0.0 {
        return Err(Error::EmptyQualifyingSet { column: j, h });
    }
    let bound = -mass.ln();
    Ok(if bound > 0.0 { bound } else { 0.0 })
}

/// Closed-form leakage of the utility-safe mechanism at threshold `h`.
pub fn corollary_epsilon(prior: &Prior, order: &UtilityOrder, h: usize) -> Result<f64> {
    if prior.len() != order.rows() {
        return Err(Error::DimensionMismatch(format!(
            "prior has {} entries but the utility order has {} rows",
            prior.len(),
            order.rows()
        )));
    }
    y_plus(order, h)?
        .into_iter()
        .map(|j| column_lower_bound(prior, order, h, j))
        .try_fold(0.0_f64, |acc, b| Ok(acc.max(b?)))
}

pub fn leakage_report(prior: &Prior, mech: &Mechanism) -> Result<LeakageReport> {
    check_dims(prior, mech)?;
    let mut per_output = Vec::new();
    for j in output_support(mech) {
        let pml = pml_of_output(prior, mech, j)?;
        let (support_term, residual_term) = decompose(prior, mech, j)?;
        per_output.push(OutputLeakage {
            output: j,
            pml,
            support_term,
            residual_term,
            input_support: induced_input_support(mech, j)?,
        });
    }
    let (argmax_output, worst_case) = per_output
        .iter()
        .fold((per_output[0].output, f64::NEG_INFINITY), |best, o| {
            if o.pml > best.1 {
                (o.output, o.pml)
            } else {
                best
            }
        });
    Ok(LeakageReport {
        per_output,
        worst_case,
        argmax_output,
    })
}
