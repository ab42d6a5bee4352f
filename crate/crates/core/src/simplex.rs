//! Dense phase-one simplex for `A x (<= | =) b`, `x >= 0`, `b >= 0`.
//!
//! Inequality rows start with their slack basic, equality rows with an
//! artificial. The total artificial mass is minimized with Bland's rule;
//! the system is feasible iff that minimum is (numerically) zero.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowSense {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct DenseRow {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PhaseOne {
    Feasible(Vec<f64>),
    Infeasible { residual: f64 },
}

/// Phase-one optimum at or below this counts as feasible.
pub(crate) const FEASIBILITY_TOLERANCE: f64 = 1e-8;
const PIVOT_TOLERANCE: f64 = 1e-12;
const COST_TOLERANCE: f64 = 1e-11;

pub(crate) fn phase_one(n: usize, rows: &[DenseRow], max_pivots: usize) -> Result<PhaseOne> {
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.sense == RowSense::Le).count();
    let n_art = m - n_slack;
    let width = n + n_slack + n_art + 1;
    let rhs_col = width - 1;
    let art_start = n + n_slack;

    let mut tab = vec![vec![0.0; width]; m];
    let mut basis = vec![0; m];
    let (mut next_slack, mut next_art) = (n, art_start);
    for (r, row) in rows.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(Error::NumericalFailure(format!(
                "constraint {r} has {} coefficients, expected {n}",
                row.coeffs.len()
            )));
        }
        if row.rhs.is_nan() || row.rhs < 0.0 {
            return Err(Error::NumericalFailure(format!(
                "constraint {r} has right-hand side {}; phase one needs b >= 0",
                row.rhs
            )));
        }
        tab[r][..n].copy_from_slice(&row.coeffs);
        tab[r][rhs_col] = row.rhs;
        let basic = match row.sense {
            RowSense::Le => {
                next_slack += 1;
                next_slack - 1
            }
            RowSense::Eq => {
                next_art += 1;
                next_art - 1
            }
        };
        tab[r][basic] = 1.0;
        basis[r] = basic;
    }

    // reduced costs of the artificial-sum objective; obj[rhs] holds -w
    let mut obj = vec![0.0; width];
    for (r, row) in rows.iter().enumerate() {
        if row.sense == RowSense::Eq {
            for c in 0..art_start {
                obj[c] -= tab[r][c];
            }
            obj[rhs_col] -= tab[r][rhs_col];
        }
    }

    let mut pivots = 0;
    while let Some(enter) = (0..art_start).find(|&c| obj[c] < -COST_TOLERANCE) {
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = tab[r][enter];
            if a > PIVOT_TOLERANCE {
                let ratio = tab[r][rhs_col].max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        if ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && basis[r] < basis[best]) {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
        }
        let Some((pr, _)) = leave else {
            // phase one is bounded below by zero; an open ray means the
            // tableau has lost precision
            return Err(Error::NumericalFailure("unbounded direction in phase one".into()));
        };
        pivot(&mut tab, &mut obj, pr, enter);
        basis[pr] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::NumericalFailure(format!("simplex exceeded {max_pivots} pivots")));
        }
    }

    let residual = -obj[rhs_col];
    if !residual.is_finite() {
        return Err(Error::NumericalFailure("non-finite phase-one objective".into()));
    }
    if residual > FEASIBILITY_TOLERANCE {
        return Ok(PhaseOne::Infeasible { residual });
    }
    let mut x = vec![0.0; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tab[r][rhs_col].max(0.0);
        }
    }
    Ok(PhaseOne::Feasible(x))
}

fn pivot(tab: &mut [Vec<f64>], obj: &mut [f64], pr: usize, pc: usize) {
    let inv = 1.0 / tab[pr][pc];
    for v in tab[pr].iter_mut() {
        *v *= inv;
    }
    tab[pr][pc] = 1.0;
    let pivot_row = tab[pr].clone();
    let eliminate = |row: &mut [f64]| {
        let factor = row[pc];
        if factor != 0.0 {
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[pc] = 0.0;
        }
    };
    for (r, row) in tab.iter_mut().enumerate() {
        if r != pr {
            eliminate(row);
        }
    }
    eliminate(obj);
}
