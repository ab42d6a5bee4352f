//! Linear feasibility program for "is there an `eps`-PML mechanism whose
//! worst-case utility order is at least `h`?".
//!
//! Variables are the cells `(i, j)` with `u_ij >= h` in columns that
//! survive pruning. Constraints:
//!
//! * `sum_j p_ij = 1` for every row,
//! * `p_ij - e^eps * sum_k P_X(x_k) p_kj <= 0` for every free cell,
//! * `p_ij >= 0`.
//!
//! A column is pruned when even its most favourable support (every input
//! ranking it at `h` or above) leaks more than `eps`; such an output can
//! only appear with zero probability.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::leakage::column_lower_bound;
use crate::model::{y_plus, Mechanism, Prior, UtilityOrder};
use crate::simplex::{phase_one, DenseRow, PhaseOne, RowSense};

/// Witness entries below this are snapped to exact zeros.
pub const SNAP_THRESHOLD: f64 = 1e-9;
/// Constraint re-validation tolerance for post-processed witnesses.
pub const WITNESS_TOLERANCE: f64 = 1e-6;
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeasibilityOptions {
    pub prune: bool,
    pub max_pivots: usize,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        FeasibilityOptions {
            prune: true,
            max_pivots: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

/// Sparse linear constraint over program variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityProgram {
    rows: usize,
    cols: usize,
    h: usize,
    eps: f64,
    /// Variable `k` is the mechanism cell `free_cells[k]`.
    free_cells: Vec<(usize, usize)>,
    forced_zero_cells: Vec<(usize, usize)>,
    pruned_columns: Vec<usize>,
    equalities: Vec<LinearConstraint>,
    inequalities: Vec<LinearConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    pub witness: Option<Mechanism>,
    pub pruned_columns: Vec<usize>,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// Columns excluded from the program: those without any rank `>= h` and
/// those whose leakage lower bound exceeds `eps`.
pub fn prune_columns(prior: &Prior, order: &UtilityOrder, h: usize, eps: f64) -> Result<Vec<usize>> {
    let reachable: BTreeSet<usize> = y_plus(order, h)?.into_iter().collect();
    let mut pruned = Vec::new();
    for j in 0..order.cols() {
        if !reachable.contains(&j) || column_lower_bound(prior, order, h, j)? > eps + PRUNE_SLACK {
            pruned.push(j);
        }
    }
    Ok(pruned)
}

pub fn build_program(prior: &Prior, order: &UtilityOrder, h: usize, eps: f64) -> Result<FeasibilityProgram> {
    build_program_with(prior, order, h, eps, true)
}

pub fn build_program_with(
    prior: &Prior,
    order: &UtilityOrder,
    h: usize,
    eps: f64,
    prune: bool,
) -> Result<FeasibilityProgram> {
    if prior.len() != order.rows() {
        return Err(Error::DimensionMismatch(format!(
            "prior has {} entries but the utility order has {} rows",
            prior.len(),
            order.rows()
        )));
    }
    order.check_threshold(h)?;
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be >= 0")));
    }
    let (n, m) = (order.rows(), order.cols());
    let pruned_columns = if prune {
        prune_columns(prior, order, h, eps)?
    } else {
        Vec::new()
    };
    let pruned: BTreeSet<usize> = pruned_columns.iter().copied().collect();

    let mut free_cells = Vec::new();
    let mut forced_zero_cells = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if order.get(i, j) >= h && !pruned.contains(&j) {
                free_cells.push((i, j));
            } else {
                forced_zero_cells.push((i, j));
            }
        }
    }

    let mut equalities = Vec::with_capacity(n);
    for i in 0..n {
        let terms: Vec<(usize, f64)> = free_cells
            .iter()
            .enumerate()
            .filter(|(_, &(r, _))| r == i)
            .map(|(k, _)| (k, 1.0))
            .collect();
        if terms.is_empty() {
            return Err(Error::StructurallyInfeasible { row: i });
        }
        equalities.push(LinearConstraint {
            terms,
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }

    let growth = eps.exp();
    let mut inequalities = Vec::with_capacity(free_cells.len());
    for (k, &(i, j)) in free_cells.iter().enumerate() {
        let terms = free_cells
            .iter()
            .enumerate()
            .filter(|(_, &(_, c))| c == j)
            .map(|(v, &(r, _))| {
                let mut coeff = -growth * prior.probs()[r];
                if r == i {
                    coeff += 1.0;
                }
                (v, coeff)
            })
            .collect();
        debug_assert_eq!(free_cells[k], (i, j));
        inequalities.push(LinearConstraint {
            terms,
            sense: Sense::Le,
            rhs: 0.0,
        });
    }

    Ok(FeasibilityProgram {
        rows: n,
        cols: m,
        h,
        eps,
        free_cells,
        forced_zero_cells,
        pruned_columns,
        equalities,
        inequalities,
    })
}

impl FeasibilityProgram {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn threshold(&self) -> usize {
        self.h
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn free_cells(&self) -> &[(usize, usize)] {
        &self.free_cells
    }

    pub fn forced_zero_cells(&self) -> &[(usize, usize)] {
        &self.forced_zero_cells
    }

    pub fn pruned_columns(&self) -> &[usize] {
        &self.pruned_columns
    }

    pub fn equalities(&self) -> &[LinearConstraint] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[LinearConstraint] {
        &self.inequalities
    }

    pub fn num_variables(&self) -> usize {
        self.free_cells.len()
    }

    /// Largest constraint violation of `mech` against this program,
    /// including forced zeros and nonnegativity.
    pub fn max_violation(&self, mech: &Mechanism) -> Result<f64> {
        if mech.rows() != self.rows || mech.cols() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "mechanism is {}x{} but the program is {}x{}",
                mech.rows(),
                mech.cols(),
                self.rows,
                self.cols
            )));
        }
        let x: Vec<f64> = self.free_cells.iter().map(|&(i, j)| mech.get(i, j)).collect();
        let mut worst = self
            .forced_zero_cells
            .iter()
            .map(|&(i, j)| mech.get(i, j).abs())
            .fold(0.0, f64::max);
        worst = x.iter().fold(worst, |w, &v| w.max(-v));
        for c in self.equalities.iter().chain(&self.inequalities) {
            let lhs: f64 = c.terms.iter().map(|&(k, a)| a * x[k]).sum();
            let v = match c.sense {
                Sense::Eq => (lhs - c.rhs).abs(),
                Sense::Le => lhs - c.rhs,
            };
            worst = worst.max(v);
        }
        Ok(worst)
    }

    /// Structured dump for comparison with external solvers.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn dense_rows(&self) -> Vec<DenseRow> {
        let n = self.num_variables();
        self.equalities
            .iter()
            .chain(&self.inequalities)
            .map(|c| {
                let mut coeffs = vec![0.0; n];
                for &(k, a) in &c.terms {
                    coeffs[k] += a;
                }
                let sense = match c.sense {
                    Sense::Eq => RowSense::Eq,
                    Sense::Le => RowSense::Le,
                };
                DenseRow {
                    coeffs,
                    sense,
                    rhs: c.rhs,
                }
            })
            .collect()
    }

    fn witness_from(&self, x: &[f64]) -> Result<Mechanism> {
        let mut probs = vec![vec![0.0; self.cols]; self.rows];
        for (&(i, j), &v) in self.free_cells.iter().zip(x) {
            probs[i][j] = if v < SNAP_THRESHOLD { 0.0 } else { v };
        }
        for (i, row) in probs.iter_mut().enumerate() {
            let total: f64 = row.iter().sum();
            if total <= 0.0 {
                return Err(Error::NumericalFailure(format!(
                    "witness row {i} vanished after snapping"
                )));
            }
            row.iter_mut().for_each(|v| *v /= total);
        }
        Mechanism::new(probs).map_err(|e| Error::NumericalFailure(format!("witness is not a mechanism: {e}")))
    }
}

pub fn solve_feasibility(prog: &FeasibilityProgram) -> Result<FeasibilityResult> {
    solve_feasibility_with(prog, &FeasibilityOptions::default())
}

pub fn solve_feasibility_with(prog: &FeasibilityProgram, opts: &FeasibilityOptions) -> Result<FeasibilityResult> {
    let rows = prog.dense_rows();
    match phase_one(prog.num_variables(), &rows, opts.max_pivots)? {
        PhaseOne::Infeasible { .. } => Ok(FeasibilityResult {
            status: FeasibilityStatus::Infeasible,
            witness: None,
            pruned_columns: prog.pruned_columns.clone(),
        }),
        PhaseOne::Feasible(x) => {
            let witness = prog.witness_from(&x)?;
            let violation = prog.max_violation(&witness)?;
            if violation > WITNESS_TOLERANCE {
                return Err(Error::NumericalFailure(format!(
                    "witness violates the program by {violation:e} after post-processing"
                )));
            }
            Ok(FeasibilityResult {
                status: FeasibilityStatus::Feasible,
                witness: Some(witness),
                pruned_columns: prog.pruned_columns.clone(),
            })
        }
    }
}

/// Builds and solves in one step, reporting a structurally infeasible
/// program as an ordinary infeasible verdict.
pub fn check_feasibility(
    prior: &Prior,
    order: &UtilityOrder,
    h: usize,
    eps: f64,
    opts: &FeasibilityOptions,
) -> Result<FeasibilityResult> {
    match build_program_with(prior, order, h, eps, opts.prune) {
        Ok(prog) => solve_feasibility_with(&prog, opts),
        Err(Error::StructurallyInfeasible { .. }) => Ok(FeasibilityResult {
            status: FeasibilityStatus::Infeasible,
            witness: None,
            pruned_columns: if opts.prune {
                prune_columns(prior, order, h, eps)?
            } else {
                Vec::new()
            },
        }),
        Err(e) => Err(e),
    }
}
