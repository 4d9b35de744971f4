//! Two-phase primal simplex on the bounded-variable form, dense tableau.
//!
//! Phase 1 drives explicit artificial variables (added where a row's slack
//! or surplus cannot start basic feasibly, and always for equalities) to
//! zero; phase 2 maximizes the real objective. Entering variables follow
//! Dantzig pricing with lowest-index tie-breaking, switching to Bland's
//! rule once a stall counter exceeds `2 * (columns + rows)` iterations so
//! degenerate models cannot cycle. All pivoting is index-ordered, which
//! makes solves bit-reproducible.

use super::{check_feasibility, LpError, LpModel, LpSolution, LpStatus, Relation, MAX_COEFF};

const PIVOT_TOL: f64 = 1e-9;
const PRICE_TOL: f64 = 1e-9;
const RATIO_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColStatus {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

enum StepResult {
    Optimal,
    Unbounded,
    Moved,
}

struct Tableau {
    n_struct: usize,
    m: usize,
    ncols: usize,
    /// Row-major `m x ncols` dense tableau, kept equal to B^-1 * A.
    t: Vec<f64>,
    /// Reduced cost per column for the active phase.
    z: Vec<f64>,
    /// Value of the basic variable of each row.
    xb: Vec<f64>,
    /// Column basic in each row.
    basis: Vec<usize>,
    status: Vec<ColStatus>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    kind: Vec<ColKind>,
    /// Phase-2 cost per column (structural objective, zero elsewhere).
    cost: Vec<f64>,
    /// Per row: a cost-zero unit column of the original matrix and its
    /// coefficient sign, used to read duals off the final reduced costs.
    dual_col: Vec<(usize, f64)>,
    phase1: bool,
    pivot_row_buf: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    stall: usize,
    stall_limit: usize,
    bland: bool,
    objective_estimate: f64,
}

pub fn solve(model: &LpModel) -> Result<LpSolution, LpError> {
    validate(model)?;
    let mut tab = Tableau::build(model);

    let initial_infeasibility: f64 = (0..tab.m)
        .filter(|&i| tab.kind[tab.basis[i]] == ColKind::Artificial)
        .map(|i| tab.xb[i])
        .sum();
    let b_scale = model.rows.iter().fold(1.0_f64, |acc, r| acc.max(r.rhs.abs()));

    if initial_infeasibility > 1e-12 * b_scale {
        tab.load_phase_costs(true);
        match tab.run()? {
            StepResult::Unbounded => {
                return Err(LpError::Numerical("phase-1 objective diverged".into()))
            }
            StepResult::Optimal | StepResult::Moved => {}
        }
        let infeasibility: f64 = (0..tab.m)
            .filter(|&i| tab.kind[tab.basis[i]] == ColKind::Artificial)
            .map(|i| tab.xb[i].max(0.0))
            .sum();
        if infeasibility > 1e-7 * b_scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
                row_duals: Vec::new(),
            });
        }
    }
    // Artificials may stay basic at zero (redundant rows); pinning their
    // range keeps them there for good.
    for j in 0..tab.ncols {
        if tab.kind[j] == ColKind::Artificial {
            tab.hi[j] = 0.0;
        }
    }

    tab.load_phase_costs(false);
    match tab.run()? {
        StepResult::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: Vec::new(),
                objective: f64::NAN,
                row_duals: Vec::new(),
            })
        }
        StepResult::Optimal | StepResult::Moved => {}
    }

    let x = tab.structural_solution();
    let objective = model
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum::<f64>();
    let row_duals = tab.row_duals();

    let violations = check_feasibility(model, &x, 1e-6);
    if !violations.is_empty() {
        return Err(LpError::Numerical(format!(
            "solution failed the post-solve feasibility check: {}",
            violations.join("; ")
        )));
    }

    Ok(LpSolution { status: LpStatus::Optimal, x, objective, row_duals })
}

fn validate(model: &LpModel) -> Result<(), LpError> {
    let n = model.num_vars();
    if model.upper.len() != n || model.objective.len() != n {
        return Err(LpError::InvalidModel("bound/objective lengths disagree".into()));
    }
    for j in 0..n {
        let (lo, hi) = (model.lower[j], model.upper[j]);
        if !lo.is_finite() {
            return Err(LpError::InvalidModel(format!("variable {j} has non-finite lower bound")));
        }
        if hi.is_nan() || hi < lo {
            return Err(LpError::InvalidModel(format!("variable {j} has bad bounds [{lo}, {hi}]")));
        }
        if !model.objective[j].is_finite() {
            return Err(LpError::InvalidModel(format!("variable {j} has non-finite objective")));
        }
    }
    for (i, row) in model.rows.iter().enumerate() {
        if !row.rhs.is_finite() {
            return Err(LpError::InvalidModel(format!("row {i} has non-finite rhs")));
        }
        for &(j, a) in &row.coeffs {
            if j >= n {
                return Err(LpError::InvalidModel(format!("row {i} references variable {j}")));
            }
            if !a.is_finite() {
                return Err(LpError::InvalidModel(format!("row {i} has non-finite coefficient")));
            }
            if a.abs() > MAX_COEFF {
                return Err(LpError::BadScaling { row: i, value: a });
            }
        }
    }
    Ok(())
}

impl Tableau {
    fn build(model: &LpModel) -> Tableau {
        let n = model.num_vars();
        let m = model.rows.len();

        // Column layout: structurals, then slack/surplus, then artificials.
        let mut lo = model.lower.clone();
        let mut hi = model.upper.clone();
        let mut kind = vec![ColKind::Structural; n];
        let mut slack_col = vec![usize::MAX; m];
        let mut slack_sign = vec![0.0_f64; m];
        for (i, row) in model.rows.iter().enumerate() {
            let sign = match row.relation {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => continue,
            };
            slack_col[i] = lo.len();
            slack_sign[i] = sign;
            lo.push(0.0);
            hi.push(f64::INFINITY);
            kind.push(ColKind::Slack);
        }

        // Nonbasic columns start at their lower bound; residuals decide
        // which rows can begin with their own slack basic.
        let residual: Vec<f64> = model
            .rows
            .iter()
            .map(|row| {
                row.rhs
                    - row
                        .coeffs
                        .iter()
                        .map(|&(j, a)| a * model.lower[j])
                        .sum::<f64>()
            })
            .collect();

        let mut basis = vec![usize::MAX; m];
        let mut beta = vec![1.0_f64; m];
        let mut xb = vec![0.0_f64; m];
        let mut art_col = vec![usize::MAX; m];
        let mut art_sign = vec![0.0_f64; m];
        for (i, row) in model.rows.iter().enumerate() {
            let r = residual[i];
            let slack_ok = match row.relation {
                Relation::Le => r >= 0.0,
                Relation::Ge => r <= 0.0,
                Relation::Eq => false,
            };
            if slack_ok {
                basis[i] = slack_col[i];
                beta[i] = slack_sign[i];
                xb[i] = slack_sign[i] * r;
            } else {
                let sign = if r >= 0.0 { 1.0 } else { -1.0 };
                art_col[i] = lo.len();
                art_sign[i] = sign;
                basis[i] = lo.len();
                beta[i] = sign;
                xb[i] = sign * r;
                lo.push(0.0);
                hi.push(f64::INFINITY);
                kind.push(ColKind::Artificial);
            }
        }

        let ncols = lo.len();
        let mut t = vec![0.0_f64; m * ncols];
        for (i, row) in model.rows.iter().enumerate() {
            let tr = &mut t[i * ncols..(i + 1) * ncols];
            for &(j, a) in &row.coeffs {
                tr[j] += beta[i] * a;
            }
            if slack_col[i] != usize::MAX {
                tr[slack_col[i]] = beta[i] * slack_sign[i];
            }
            if art_col[i] != usize::MAX {
                tr[art_col[i]] = beta[i] * art_sign[i];
            }
        }

        let mut cost = vec![0.0_f64; ncols];
        cost[..n].copy_from_slice(&model.objective);

        let mut status = vec![ColStatus::Lower; ncols];
        for &b in &basis {
            status[b] = ColStatus::Basic;
        }

        let dual_col = (0..m)
            .map(|i| match model.rows[i].relation {
                Relation::Le => (slack_col[i], 1.0),
                Relation::Ge => (slack_col[i], -1.0),
                Relation::Eq => (art_col[i], art_sign[i]),
            })
            .collect();

        let stall_limit = 2 * (ncols + m);
        let max_iterations = 100 * (ncols + m) + 50_000;
        Tableau {
            n_struct: n,
            m,
            ncols,
            t,
            z: vec![0.0; ncols],
            xb,
            basis,
            status,
            lo,
            hi,
            kind,
            cost,
            dual_col,
            phase1: true,
            pivot_row_buf: vec![0.0; ncols],
            iterations: 0,
            max_iterations,
            stall: 0,
            stall_limit,
            bland: false,
            objective_estimate: 0.0,
        }
    }

    fn phase_cost(&self, j: usize) -> f64 {
        if self.phase1 {
            if self.kind[j] == ColKind::Artificial {
                -1.0
            } else {
                0.0
            }
        } else {
            self.cost[j]
        }
    }

    fn load_phase_costs(&mut self, phase1: bool) {
        self.phase1 = phase1;
        self.refresh_reduced_costs();
        self.stall = 0;
        self.bland = false;
        self.objective_estimate = 0.0;
    }

    /// Recomputes the full reduced-cost row `z = c - c_B * T` from scratch.
    fn refresh_reduced_costs(&mut self) {
        for j in 0..self.ncols {
            self.z[j] = self.phase_cost(j);
        }
        for i in 0..self.m {
            let cb = self.phase_cost(self.basis[i]);
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (zj, &tij) in self.z.iter_mut().zip(row) {
                    *zj -= cb * tij;
                }
            }
        }
        for &b in &self.basis {
            self.z[b] = 0.0;
        }
    }

    fn price_scale(&self) -> f64 {
        let mut s = 1.0_f64;
        if !self.phase1 {
            for j in 0..self.n_struct {
                s = s.max(self.cost[j].abs());
            }
        }
        s
    }

    /// One full run to optimality (or unboundedness) for the active phase.
    fn run(&mut self) -> Result<StepResult, LpError> {
        // Claimed optimality is only accepted after a fresh reduced-cost
        // row agrees; pivoting drift can otherwise hide candidates.
        let mut confirmations = 0;
        loop {
            match self.step()? {
                StepResult::Moved => continue,
                StepResult::Unbounded => return Ok(StepResult::Unbounded),
                StepResult::Optimal => {
                    self.refresh_reduced_costs();
                    if self.choose_entering().is_none() || confirmations >= 2 {
                        return Ok(StepResult::Optimal);
                    }
                    confirmations += 1;
                }
            }
        }
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        let tol = PRICE_TOL * self.price_scale();
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            if self.status[j] == ColStatus::Basic || self.lo[j] == self.hi[j] {
                continue;
            }
            let improvement = match self.status[j] {
                ColStatus::Lower => self.z[j],
                ColStatus::Upper => -self.z[j],
                ColStatus::Basic => unreachable!(),
            };
            if improvement > tol {
                let dir = if self.status[j] == ColStatus::Lower { 1.0 } else { -1.0 };
                if self.bland {
                    return Some((j, dir));
                }
                if best.map_or(true, |(_, _, bi)| improvement > bi) {
                    best = Some((j, dir, improvement));
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn step(&mut self) -> Result<StepResult, LpError> {
        let Some((e, dir)) = self.choose_entering() else {
            return Ok(StepResult::Optimal);
        };
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(LpError::IterationLimit(self.iterations));
        }

        // Ratio test: the entering variable moves by theta in direction
        // dir; basic variables move by -theta * dir * column.
        let span = self.hi[e] - self.lo[e];
        let mut theta_rows = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for i in 0..self.m {
            let v = dir * self.t[i * self.ncols + e];
            let b = self.basis[i];
            let ratio = if v > PIVOT_TOL {
                (self.xb[i] - self.lo[b]).max(0.0) / v
            } else if v < -PIVOT_TOL {
                if self.hi[b].is_infinite() {
                    continue;
                }
                (self.xb[i] - self.hi[b]).min(0.0) / v
            } else {
                continue;
            };
            if ratio < theta_rows - RATIO_TIE_TOL {
                theta_rows = ratio;
                leaving = Some(i);
            } else if ratio <= theta_rows + RATIO_TIE_TOL {
                // Tie: lowest variable index, for determinism.
                if let Some(cur) = leaving {
                    if self.basis[i] < self.basis[cur] {
                        leaving = Some(i);
                    }
                }
            }
        }

        let improvement;
        if span <= theta_rows && span.is_finite() {
            // Bound flip: the entering variable crosses to its other bound
            // before any basic variable blocks.
            let theta = span;
            for i in 0..self.m {
                let v = dir * self.t[i * self.ncols + e];
                if v != 0.0 {
                    self.xb[i] -= theta * v;
                }
            }
            self.status[e] = match self.status[e] {
                ColStatus::Lower => ColStatus::Upper,
                ColStatus::Upper => ColStatus::Lower,
                ColStatus::Basic => unreachable!(),
            };
            improvement = theta * (dir * self.z[e]);
        } else {
            let Some(r) = leaving else {
                return if self.phase1 {
                    Err(LpError::Numerical("phase-1 ratio test found no blocker".into()))
                } else {
                    Ok(StepResult::Unbounded)
                };
            };
            let theta = theta_rows.max(0.0);
            for i in 0..self.m {
                let v = dir * self.t[i * self.ncols + e];
                if v != 0.0 {
                    self.xb[i] -= theta * v;
                }
            }
            let enter_from = match self.status[e] {
                ColStatus::Lower => self.lo[e],
                ColStatus::Upper => self.hi[e],
                ColStatus::Basic => unreachable!(),
            };
            let leave_var = self.basis[r];
            let v_r = dir * self.t[r * self.ncols + e];
            self.status[leave_var] = if v_r > 0.0 { ColStatus::Lower } else { ColStatus::Upper };
            self.status[e] = ColStatus::Basic;
            self.basis[r] = e;
            self.xb[r] = enter_from + dir * theta;
            improvement = theta * (dir * self.z[e]);
            self.eliminate(r, e);
        }

        if improvement > 1e-12 * (1.0 + self.objective_estimate.abs()) {
            self.objective_estimate += improvement;
            self.stall = 0;
            self.bland = false;
        } else {
            self.stall += 1;
            if self.stall > self.stall_limit {
                self.bland = true;
            }
        }
        Ok(StepResult::Moved)
    }

    /// Gaussian elimination around pivot (r, e), updating tableau and
    /// reduced costs; the pivot column is set to exact unit afterwards.
    fn eliminate(&mut self, r: usize, e: usize) {
        let ncols = self.ncols;
        let pivot = self.t[r * ncols + e];
        let inv = 1.0 / pivot;
        {
            let row = &mut self.t[r * ncols..(r + 1) * ncols];
            for v in row.iter_mut() {
                *v *= inv;
            }
            self.pivot_row_buf.copy_from_slice(row);
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * ncols + e];
            if f != 0.0 {
                let row = &mut self.t[i * ncols..(i + 1) * ncols];
                for (v, &p) in row.iter_mut().zip(&self.pivot_row_buf) {
                    *v -= f * p;
                }
                row[e] = 0.0;
            }
        }
        let f = self.z[e];
        if f != 0.0 {
            for (v, &p) in self.z.iter_mut().zip(&self.pivot_row_buf) {
                *v -= f * p;
            }
        }
        self.z[e] = 0.0;
        self.t[r * ncols + e] = 1.0;
    }

    fn structural_solution(&self) -> Vec<f64> {
        let mut x = vec![0.0_f64; self.n_struct];
        for j in 0..self.n_struct {
            x[j] = match self.status[j] {
                ColStatus::Lower | ColStatus::Basic => self.lo[j],
                ColStatus::Upper => self.hi[j],
            };
        }
        for i in 0..self.m {
            if self.basis[i] < self.n_struct {
                x[self.basis[i]] = self.xb[i];
            }
        }
        x
    }

    fn row_duals(&self) -> Vec<f64> {
        self.dual_col
            .iter()
            .map(|&(col, sign)| -sign * self.z[col])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    fn model(
        bounds: &[(f64, f64)],
        objective: &[f64],
        rows: &[(&[(usize, f64)], Relation, f64)],
    ) -> LpModel {
        let mut m = LpModel::default();
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            m.add_var(lo, hi, objective[i]);
        }
        for (coeffs, rel, rhs) in rows {
            m.add_row(coeffs.to_vec(), *rel, *rhs);
        }
        m
    }

    #[test]
    fn bounds_only_model() {
        let m = model(&[(0.0, 2.0), (1.0, 5.0)], &[3.0, -1.0], &[]);
        let s = solve(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![2.0, 1.0]);
        assert!((s.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn simple_capacity_split() {
        // max x + 2y, x + y <= 3, x in [0,2], y in [0,2] -> (1, 2).
        let m = model(
            &[(0.0, 2.0), (0.0, 2.0)],
            &[1.0, 2.0],
            &[(&[(0, 1.0), (1, 1.0)], Relation::Le, 3.0)],
        );
        let s = solve(&m).unwrap();
        assert!((s.objective - 5.0).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!((s.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn equality_row_and_dual_signs() {
        // max 2x s.t. x <= 3: binding row has dual 2.
        let m = model(&[(0.0, 10.0)], &[2.0], &[(&[(0, 1.0)], Relation::Le, 3.0)]);
        let s = solve(&m).unwrap();
        assert!((s.objective - 6.0).abs() < 1e-9);
        assert!((s.row_duals[0] - 2.0).abs() < 1e-9);

        // max -x s.t. x >= 1: dual is negative for a >= row.
        let m = model(&[(0.0, 10.0)], &[-1.0], &[(&[(0, 1.0)], Relation::Ge, 1.0)]);
        let s = solve(&m).unwrap();
        assert!((s.objective + 1.0).abs() < 1e-9);
        assert!((s.row_duals[0] + 1.0).abs() < 1e-9);

        let m = model(&[(0.0, 10.0)], &[5.0], &[(&[(0, 1.0)], Relation::Eq, 2.0)]);
        let s = solve(&m).unwrap();
        assert!((s.objective - 10.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_window_is_reported() {
        let m = model(
            &[(0.0, 10.0)],
            &[1.0],
            &[
                (&[(0, 1.0)], Relation::Ge, 3.0),
                (&[(0, 1.0)], Relation::Le, 1.0),
            ],
        );
        let s = solve(&m).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction_is_reported() {
        let m = model(&[(0.0, f64::INFINITY)], &[1.0], &[]);
        let s = solve(&m).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);

        // A row that does not block the ray.
        let m = model(
            &[(0.0, f64::INFINITY), (0.0, 1.0)],
            &[1.0, 0.0],
            &[(&[(0, -1.0), (1, 1.0)], Relation::Le, 1.0)],
        );
        let s = solve(&m).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_variable_ranges() {
        let m = model(&[(-5.0, -2.0)], &[1.0], &[]);
        let s = solve(&m).unwrap();
        assert_eq!(s.x, vec![-2.0]);

        let m = model(
            &[(-5.0, 5.0), (-5.0, 5.0)],
            &[1.0, 1.0],
            &[(&[(0, 1.0), (1, 2.0)], Relation::Le, -3.0)],
        );
        let s = solve(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        let lhs = s.x[0] + 2.0 * s.x[1];
        assert!(lhs <= -3.0 + 1e-9);
        assert!((s.objective - 1.0).abs() < 1e-9, "x + y maxes at (5, -4)");
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Classic degenerate instance that cycles under naive Dantzig
        // pricing; the stall counter must hand control to Bland's rule.
        let m = model(
            &[
                (0.0, f64::INFINITY),
                (0.0, f64::INFINITY),
                (0.0, f64::INFINITY),
                (0.0, f64::INFINITY),
            ],
            &[0.75, -150.0, 0.02, -6.0],
            &[
                (&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0),
                (&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0),
                (&[(2, 1.0)], Relation::Le, 1.0),
            ],
        );
        let s = solve(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 0.05).abs() < 1e-9, "objective = {}", s.objective);
    }

    #[test]
    fn equality_system_with_negative_residual() {
        // Initial point (lower bounds) overshoots the equality: the
        // artificial setup must handle residuals of either sign.
        let m = model(
            &[(1.0, 4.0), (1.0, 4.0)],
            &[1.0, 0.0],
            &[(&[(0, 1.0), (1, 1.0)], Relation::Eq, 3.0)],
        );
        let s = solve(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-9);
        assert!((s.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn oversized_coefficients_are_rejected() {
        let m = model(&[(0.0, 1.0)], &[1.0], &[(&[(0, 1e7)], Relation::Le, 1.0)]);
        assert!(matches!(solve(&m), Err(LpError::BadScaling { row: 0, .. })));
    }

    #[test]
    fn fixed_variables_stay_fixed() {
        let m = model(
            &[(2.0, 2.0), (0.0, 10.0)],
            &[10.0, 1.0],
            &[(&[(0, 1.0), (1, 1.0)], Relation::Le, 5.0)],
        );
        let s = solve(&m).unwrap();
        assert_eq!(s.x[0], 2.0);
        assert!((s.x[1] - 3.0).abs() < 1e-9);
    }
}
