//! Self-contained linear programming layer.
//!
//! Models are maximization problems over bounded variables with sparse
//! `<=` / `=` / `>=` rows. The solver is a two-phase primal simplex on the
//! bounded-variable form (see [`simplex`]); it is deterministic, which the
//! byte-identical-report guarantee of the CLI relies on.

mod simplex;

pub use simplex::solve;

use thiserror::Error;

/// Largest row coefficient magnitude accepted by [`solve`]. Models are
/// expected to arrive reasonably scaled; rejecting instead of silently
/// grinding through ill-conditioned pivots keeps failures diagnosable.
pub const MAX_COEFF: f64 = 1e6;

/// Primal feasibility tolerance on scaled data.
pub const FEAS_TOL: f64 = 1e-9;

/// Reduced-cost tolerance for declaring optimality.
pub const OPT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// Sparse constraint row `coeffs · x  (relation)  rhs`.
#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Bounded-variable LP, always a maximization.
///
/// Lower bounds must be finite; upper bounds may be `f64::INFINITY`.
#[derive(Debug, Clone, Default)]
pub struct LpModel {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpModel {
    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, lower: f64, upper: f64, objective: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(objective);
        self.lower.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(LpRow { coeffs, relation, rhs });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve. `x` and `row_duals` are empty unless `status` is
/// `Optimal`.
///
/// Dual convention: `row_duals[i]` is the multiplier `y_i` in the reduced
/// costs `c_j - Σ_i y_i a_ij`; for this maximization form, `<=` rows get
/// `y >= 0` and `>=` rows `y <= 0` (up to tolerance).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub row_duals: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed model: {0}")]
    InvalidModel(String),
    #[error("row {row} has coefficient {value} beyond the {MAX_COEFF:e} scaling limit")]
    BadScaling { row: usize, value: f64 },
    #[error("simplex iteration limit hit ({0} iterations)")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Independent feasibility check: plain dot products against bounds and
/// rows, no solver state involved. Returns one message per violation;
/// tolerances scale with row activity.
pub fn check_feasibility(model: &LpModel, x: &[f64], tol: f64) -> Vec<String> {
    let mut violations = Vec::new();
    if x.len() != model.num_vars() {
        violations.push(format!(
            "solution has {} values for {} variables",
            x.len(),
            model.num_vars()
        ));
        return violations;
    }
    for (j, &v) in x.iter().enumerate() {
        let scale = 1.0_f64.max(model.lower[j].abs()).max(v.abs());
        if v < model.lower[j] - tol * scale {
            violations.push(format!("x[{j}] = {v} below lower bound {}", model.lower[j]));
        }
        if v > model.upper[j] + tol * scale {
            violations.push(format!("x[{j}] = {v} above upper bound {}", model.upper[j]));
        }
    }
    for (i, row) in model.rows.iter().enumerate() {
        let mut activity = 0.0;
        let mut mass = 0.0;
        for &(j, a) in &row.coeffs {
            activity += a * x[j];
            mass += (a * x[j]).abs();
        }
        let scale = 1.0_f64.max(row.rhs.abs()).max(mass);
        let defect = match row.relation {
            Relation::Le => activity - row.rhs,
            Relation::Ge => row.rhs - activity,
            Relation::Eq => (activity - row.rhs).abs(),
        };
        if defect > tol * scale {
            violations.push(format!(
                "row {i}: activity {activity} vs rhs {} ({:?})",
                row.rhs, row.relation
            ));
        }
    }
    violations
}
