//! Shared data model: priors, utility tables, mechanisms and scenarios,
//! plus the structural quantities derived from them (supports, zero
//! counts, worst-case utility).
//!
//! Indices are zero-based everywhere in the API. Utility ranks are
//! one-based: rank 1 is the worst output for a given input, rank `M` the
//! best.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability vectors summing to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

fn check_distribution(probs: &[f64]) -> std::result::Result<(), String> {
    if probs.is_empty() {
        return Err("empty probability vector".into());
    }
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(format!("entry {i} = {p} is not in [0, 1]"));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(format!("entries sum to {total}, not 1"));
    }
    Ok(())
}

/// Full-support distribution of the secret input.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Prior(Vec<f64>);

impl Prior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs).map_err(Error::InvalidPrior)?;
        if let Some(i) = probs.iter().position(|&p| p <= 0.0) {
            return Err(Error::InvalidPrior(format!(
                "entry {i} is zero; the prior must have full support"
            )));
        }
        Ok(Prior(probs))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPrior("empty alphabet".into()));
        }
        Prior::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn p_min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Total prior mass of the given rows.
    pub fn mass<I: IntoIterator<Item = usize>>(&self, rows: I) -> f64 {
        rows.into_iter().map(|i| self.0[i]).sum()
    }
}

impl<'de> Deserialize<'de> for Prior {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        Prior::new(probs).map_err(serde::de::Error::custom)
    }
}

fn check_rectangular<T>(rows: &[Vec<T>]) -> std::result::Result<usize, String> {
    let first = rows.first().ok_or_else(|| "table has no rows".to_string())?;
    let m = first.len();
    if m == 0 {
        return Err("table has no columns".into());
    }
    if let Some(i) = rows.iter().position(|r| r.len() != m) {
        return Err(format!("row {i} has {} entries, expected {m}", rows[i].len()));
    }
    Ok(m)
}

/// Raw utility values `u'(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UtilityValues(Vec<Vec<f64>>);

impl UtilityValues {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        check_rectangular(&rows).map_err(Error::InvalidValues)?;
        for (i, row) in rows.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidValues(format!("entry ({i}, {j}) is not finite")));
            }
        }
        Ok(UtilityValues(rows))
    }

    pub fn rows(&self) -> usize {
        self.0.len()
    }

    pub fn cols(&self) -> usize {
        self.0[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn as_rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.0.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Column of the largest value in row `i`; ties go to the smallest index.
    pub fn row_argmax(&self, i: usize) -> usize {
        let row = &self.0[i];
        let mut best = 0;
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = j;
            }
        }
        best
    }
}

/// Per-row utility ranks `u_ij` in `1..=M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct UtilityOrder(Vec<Vec<usize>>);

impl UtilityOrder {
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self> {
        let m = check_rectangular(&rows).map_err(Error::InvalidOrder)?;
        for (i, row) in rows.iter().enumerate() {
            let mut seen = vec![false; m];
            for &r in row {
                if r == 0 || r > m || seen[r - 1] {
                    return Err(Error::InvalidOrder(format!("row {i} is not a permutation of 1..={m}")));
                }
                seen[r - 1] = true;
            }
        }
        Ok(UtilityOrder(rows))
    }

    pub fn rows(&self) -> usize {
        self.0.len()
    }

    pub fn cols(&self) -> usize {
        self.0[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.0[i][j]
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.0[i]
    }

    pub fn as_rows(&self) -> &[Vec<usize>] {
        &self.0
    }

    pub fn check_threshold(&self, h: usize) -> Result<()> {
        if h == 0 || h > self.cols() {
            return Err(Error::ThresholdOutOfRange { h, m: self.cols() });
        }
        Ok(())
    }

    /// Rows whose rank in column `j` is at least `h`.
    pub fn qualifying_rows(&self, j: usize, h: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.rows()).filter(move |&i| self.0[i][j] >= h)
    }
}

impl<'de> Deserialize<'de> for UtilityOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<usize>>::deserialize(d)?;
        UtilityOrder::new(rows).map_err(serde::de::Error::custom)
    }
}

/// Row-stochastic conditional distribution `p_ij = P(Y = y_j | X = x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Mechanism(Vec<Vec<f64>>);

impl Mechanism {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        check_rectangular(&rows).map_err(Error::InvalidMechanism)?;
        for (i, row) in rows.iter().enumerate() {
            check_distribution(row).map_err(|e| Error::InvalidMechanism(format!("row {i}: {e}")))?;
        }
        Ok(Mechanism(rows))
    }

    pub fn rows(&self) -> usize {
        self.0.len()
    }

    pub fn cols(&self) -> usize {
        self.0[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn as_rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(move |r| r[j])
    }

    /// Iterator over `(i, j)` for all strictly positive entries.
    pub fn positive_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(move |(j, _)| (i, j))
        })
    }

    pub fn output_probability(&self, prior: &Prior, j: usize) -> f64 {
        prior.probs().iter().zip(self.column(j)).map(|(px, p)| px * p).sum()
    }
}

/// Optional display names for inputs and outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

/// One experiment's inputs: prior, utility order and optionally the raw
/// values the order was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    prior: Prior,
    order: UtilityOrder,
    values: Option<UtilityValues>,
    labels: Option<Labels>,
}

impl Scenario {
    pub fn new(
        prior: Prior,
        order: UtilityOrder,
        values: Option<UtilityValues>,
        labels: Option<Labels>,
    ) -> Result<Self> {
        if prior.len() != order.rows() {
            return Err(Error::DimensionMismatch(format!(
                "prior has {} entries but the utility order has {} rows",
                prior.len(),
                order.rows()
            )));
        }
        if let Some(values) = &values {
            if values.rows() != order.rows() || values.cols() != order.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "utility values are {}x{} but the utility order is {}x{}",
                    values.rows(),
                    values.cols(),
                    order.rows(),
                    order.cols()
                )));
            }
            if order_from_values(values) != order {
                return Err(Error::InvalidScenario(
                    "utility_order is not the rank order of utility_values".into(),
                ));
            }
        }
        if let Some(labels) = &labels {
            if !labels.inputs.is_empty() && labels.inputs.len() != order.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "{} input labels for {} inputs",
                    labels.inputs.len(),
                    order.rows()
                )));
            }
            if !labels.outputs.is_empty() && labels.outputs.len() != order.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "{} output labels for {} outputs",
                    labels.outputs.len(),
                    order.cols()
                )));
            }
        }
        Ok(Scenario {
            prior,
            order,
            values,
            labels,
        })
    }

    pub fn from_values(prior: Prior, values: UtilityValues) -> Result<Self> {
        let order = order_from_values(&values);
        Scenario::new(prior, order, Some(values), None)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        let Scenario {
            prior, order, values, ..
        } = self;
        self = Scenario::new(prior, order, values, Some(labels))?;
        Ok(self)
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn order(&self) -> &UtilityOrder {
        &self.order
    }

    pub fn values(&self) -> Option<&UtilityValues> {
        self.values.as_ref()
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn inputs(&self) -> usize {
        self.order.rows()
    }

    pub fn outputs(&self) -> usize {
        self.order.cols()
    }

    pub fn check_mechanism(&self, mech: &Mechanism) -> Result<()> {
        if mech.rows() != self.inputs() || mech.cols() != self.outputs() {
            return Err(Error::DimensionMismatch(format!(
                "mechanism is {}x{} but the scenario is {}x{}",
                mech.rows(),
                mech.cols(),
                self.inputs(),
                self.outputs()
            )));
        }
        Ok(())
    }
}

/// Rank each row ascending; equal values get ranks in column order.
pub fn order_from_values(values: &UtilityValues) -> UtilityOrder {
    let rows = values
        .as_rows()
        .iter()
        .map(|row| {
            let mut cols: Vec<usize> = (0..row.len()).collect();
            // stable sort keeps column order among ties
            cols.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
            let mut ranks = vec![0; row.len()];
            for (rank, &j) in cols.iter().enumerate() {
                ranks[j] = rank + 1;
            }
            ranks
        })
        .collect();
    UtilityOrder(rows)
}

/// Columns with positive output probability. Priors have full support, so
/// this is the set of columns holding at least one positive entry.
pub fn output_support(mech: &Mechanism) -> Vec<usize> {
    (0..mech.cols()).filter(|&j| mech.column(j).any(|p| p > 0.0)).collect()
}

/// Inputs that can produce output `j`.
pub fn induced_input_support(mech: &Mechanism, j: usize) -> Result<Vec<usize>> {
    if j >= mech.cols() {
        return Err(Error::NotInSupport(j));
    }
    let rows: Vec<usize> = (0..mech.rows()).filter(|&i| mech.get(i, j) > 0.0).collect();
    if rows.is_empty() {
        return Err(Error::NotInSupport(j));
    }
    Ok(rows)
}

/// Columns holding at least one rank `>= h`.
pub fn y_plus(order: &UtilityOrder, h: usize) -> Result<Vec<usize>> {
    order.check_threshold(h)?;
    Ok((0..order.cols())
        .filter(|&j| order.qualifying_rows(j, h).next().is_some())
        .collect())
}

/// Minimum rank over the positive entries of `mech`.
pub fn worst_case_order(mech: &Mechanism, order: &UtilityOrder) -> usize {
    mech.positive_cells()
        .map(|(i, j)| order.get(i, j))
        .min()
        .expect("a row-stochastic mechanism has a positive entry")
}

/// Minimum raw utility over the positive entries of `mech`.
pub fn worst_case_value(mech: &Mechanism, values: &UtilityValues) -> f64 {
    mech.positive_cells()
        .map(|(i, j)| values.get(i, j))
        .fold(f64::INFINITY, f64::min)
}

/// Number of exact zeros in each row.
pub fn row_zero_counts(mech: &Mechanism) -> Vec<usize> {
    mech.as_rows()
        .iter()
        .map(|row| row.iter().filter(|&&p| p == 0.0).count())
        .collect()
}
