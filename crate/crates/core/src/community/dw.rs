//! Column generation for large community instances.
//!
//! The coupling between entities is thin: a regime assignment constrains
//! only each request's window energy and the community profit floor, and
//! both are linear in two per-entity statistics, the sale profit and the
//! window sales. The master problem therefore works over convex weights
//! of whole per-entity schedules, and new schedules are priced one entity
//! at a time against the master's duals using the cheap reduced baseline
//! model. Schedules found once are kept in a [`ColumnPool`] shared across
//! regime assignments, so later assignments usually start hot.

use crate::lp::{self, LpModel, LpStatus, Relation};
use crate::model::{EntitySchedule, EntitySpec, Scenario};
use crate::standalone;
use rayon::prelude::*;

use super::evaluate_psi;

/// Give up on a single assignment after this many master solves; the
/// incumbent master solution is still returned, so the cost of hitting
/// the cap is bounded suboptimality, not failure.
const MAX_ROUNDS: usize = 400;

/// One feasible schedule of one entity together with the two statistics
/// the master prices it by.
#[derive(Debug, Clone)]
pub(crate) struct Column {
    pub schedule: EntitySchedule,
    /// Sale profit of the schedule.
    pub psi: f64,
    /// Grid sales summed over each request's window.
    pub window: Vec<f64>,
}

impl Column {
    fn new(scenario: &Scenario, entity: &EntitySpec, schedule: EntitySchedule) -> Column {
        let psi = evaluate_psi(&schedule, entity);
        let window = scenario
            .program
            .requests
            .iter()
            .map(|req| req.interval.slots().map(|t| schedule.e_grid[t]).sum())
            .collect();
        Column { schedule, psi, window }
    }

    /// Two columns with the same statistics are interchangeable in the
    /// master, whatever their schedules look like.
    fn same_stats(&self, other: &Column) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * (1.0 + a.abs() + b.abs());
        close(self.psi, other.psi)
            && self.window.iter().zip(&other.window).all(|(&a, &b)| close(a, b))
    }
}

/// Schedule columns per entity, reused across regime assignments.
#[derive(Debug)]
pub(crate) struct ColumnPool {
    pub columns: Vec<Vec<Column>>,
}

fn add_vertex(
    scenario: &Scenario,
    entity: &EntitySpec,
    c_obj: &[f64],
    d_obj: &[f64],
    out: &mut Vec<Column>,
) -> Result<(), lp::LpError> {
    let model = standalone::build_reduced(entity, &scenario.grid, c_obj, d_obj);
    let sol = lp::solve(&model)?;
    if sol.status != LpStatus::Optimal {
        return Ok(());
    }
    let schedule = standalone::reduced_schedule(entity, scenario.grid.slot_count, &sol.x);
    let column = Column::new(scenario, entity, schedule);
    if !out.iter().any(|c| c.same_stats(&column)) {
        out.push(column);
    }
    Ok(())
}

impl ColumnPool {
    /// Seeds every entity with its standalone optimum first (so the pool
    /// always contains the baseline plan) and then with the schedules
    /// that push each request window to either extreme, which gives the
    /// master room to hit energy ranges without any pricing rounds.
    pub fn seed(scenario: &Scenario) -> Result<ColumnPool, lp::LpError> {
        let t_count = scenario.grid.slot_count;
        let columns = scenario
            .entities
            .par_iter()
            .map(|entity| {
                let mut out = Vec::new();
                let (c_base, d_base, _) = standalone::reduced_objective(entity, t_count);
                let schedule = standalone::net_simultaneous_flows(
                    entity,
                    &{
                        let model =
                            standalone::build_reduced(entity, &scenario.grid, &c_base, &d_base);
                        let sol = lp::solve(&model)?;
                        if sol.status != LpStatus::Optimal {
                            return Err(lp::LpError::Numerical(format!(
                                "entity {} has no feasible schedule",
                                entity.id
                            )));
                        }
                        standalone::reduced_schedule(entity, t_count, &sol.x)
                    },
                );
                out.push(Column::new(scenario, entity, schedule));
                for req in &scenario.program.requests {
                    for sign in [1.0, -1.0] {
                        let mut c_obj = vec![0.0; t_count];
                        let mut d_obj = vec![0.0; t_count];
                        for t in req.interval.slots() {
                            c_obj[t] = -sign;
                            d_obj[t] = sign;
                        }
                        add_vertex(scenario, entity, &c_obj, &d_obj, &mut out)?;
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>, lp::LpError>>()?;
        Ok(ColumnPool { columns })
    }

    fn push_unique(&mut self, entity: usize, column: Column) -> bool {
        if self.columns[entity].iter().any(|c| c.same_stats(&column)) {
            return false;
        }
        self.columns[entity].push(column);
        true
    }

    /// Total profit of the seeded baseline plans.
    pub fn seed_profit_total(&self) -> f64 {
        self.columns.iter().map(|cols| cols[0].psi).sum()
    }
}

/// One coupling row of the master: `psi_weight · Σψ + Σ_j
/// window_weight[j] · Σw_j  (relation)  rhs`, where the inner sums run
/// over entities.
#[derive(Debug, Clone)]
pub(crate) struct CouplingRow {
    pub psi_weight: f64,
    pub window_weight: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Master objective in the same statistic space as [`CouplingRow`].
#[derive(Debug, Clone)]
pub(crate) struct MasterObjective {
    pub psi_weight: f64,
    pub window_weight: Vec<f64>,
    pub constant: f64,
}

impl MasterObjective {
    fn of(&self, column: &Column) -> f64 {
        self.psi_weight * column.psi
            + self
                .window_weight
                .iter()
                .zip(&column.window)
                .map(|(&w, &v)| w * v)
                .sum::<f64>()
    }
}

/// How the master handles coupling-row residuals: a feasibility phase
/// maximizes `-Σ slack` with free slacks, the exact master has none, and
/// the tolerant fallback allows slack up to a crumb-size bound.
#[derive(Debug, Clone, Copy)]
enum MasterMode {
    Feasibility,
    Exact,
    Tolerant(f64),
}

/// Maps master variables back to pool columns.
struct MasterMap {
    entries: Vec<(usize, usize)>,
}

fn build_master(
    pool: &ColumnPool,
    spec: &MasterObjective,
    rows: &[CouplingRow],
    mode: MasterMode,
) -> (LpModel, MasterMap) {
    let mut model = LpModel::default();
    let mut entries = Vec::new();
    for (u, cols) in pool.columns.iter().enumerate() {
        for (v, col) in cols.iter().enumerate() {
            let obj = match mode {
                MasterMode::Feasibility => 0.0,
                _ => spec.of(col),
            };
            model.add_var(0.0, 1.0, obj);
            entries.push((u, v));
        }
    }
    let slack: Vec<Option<usize>> = rows
        .iter()
        .map(|_| match mode {
            MasterMode::Feasibility => Some(model.add_var(0.0, f64::INFINITY, -1.0)),
            MasterMode::Exact => None,
            MasterMode::Tolerant(bound) => Some(model.add_var(0.0, bound, 0.0)),
        })
        .collect();
    for (i, row) in rows.iter().enumerate() {
        let mut coeffs = Vec::new();
        for (var, &(u, v)) in entries.iter().enumerate() {
            let col = &pool.columns[u][v];
            let a = row.psi_weight * col.psi
                + row
                    .window_weight
                    .iter()
                    .zip(&col.window)
                    .map(|(&w, &x)| w * x)
                    .sum::<f64>();
            if a != 0.0 {
                coeffs.push((var, a));
            }
        }
        if let Some(s) = slack[i] {
            let dir = match row.relation {
                Relation::Le => -1.0,
                Relation::Ge => 1.0,
                Relation::Eq => unreachable!("coupling rows are inequalities"),
            };
            coeffs.push((s, dir));
        }
        model.add_row(coeffs, row.relation, row.rhs);
    }
    for u in 0..pool.columns.len() {
        let coeffs = entries
            .iter()
            .enumerate()
            .filter(|&(_, &(eu, _))| eu == u)
            .map(|(var, _)| (var, 1.0))
            .collect();
        model.add_row(coeffs, Relation::Eq, 1.0);
    }
    (model, MasterMap { entries })
}

struct PriceOutcome {
    added: usize,
    positive_rc: f64,
}

/// Prices one round of candidate schedules against the master duals.
///
/// The reduced cost of an entity-`u` schedule is `p·ψ + Σ_j q_j·w_j -
/// y_conv_u` with `p` and `q` read off the coupling duals; maximizing it
/// is a baseline model solve because `ψ` and `w` are both linear in the
/// schedule. `objective` is `None` during the feasibility phase.
fn price(
    scenario: &Scenario,
    pool: &mut ColumnPool,
    rows: &[CouplingRow],
    duals: &[f64],
    objective: Option<&MasterObjective>,
) -> Result<PriceOutcome, lp::LpError> {
    let t_count = scenario.grid.slot_count;
    let requests = &scenario.program.requests;
    let mut p = objective.map_or(0.0, |o| o.psi_weight);
    let mut q: Vec<f64> =
        objective.map_or_else(|| vec![0.0; requests.len()], |o| o.window_weight.clone());
    for (i, row) in rows.iter().enumerate() {
        p -= duals[i] * row.psi_weight;
        for (j, qj) in q.iter_mut().enumerate() {
            *qj -= duals[i] * row.window_weight[j];
        }
    }
    let conv = &duals[rows.len()..rows.len() + scenario.entities.len()];

    let priced = scenario
        .entities
        .par_iter()
        .enumerate()
        .map(|(u, entity)| {
            let (c_base, d_base, psi_const) = standalone::reduced_objective(entity, t_count);
            let mut c_obj: Vec<f64> = c_base.iter().map(|&c| p * c).collect();
            let mut d_obj: Vec<f64> = d_base.iter().map(|&d| p * d).collect();
            let mut constant = p * psi_const;
            for (j, req) in requests.iter().enumerate() {
                for t in req.interval.slots() {
                    c_obj[t] -= q[j];
                    d_obj[t] += q[j];
                }
                constant += q[j] * req.interval.slots().map(|t| entity.gen_forecast[t]).sum::<f64>();
            }
            let model = standalone::build_reduced(entity, &scenario.grid, &c_obj, &d_obj);
            let sol = lp::solve(&model)?;
            if sol.status != LpStatus::Optimal {
                return Err(lp::LpError::Numerical(format!(
                    "pricing model for entity {} failed with {:?}",
                    entity.id, sol.status
                )));
            }
            let schedule = standalone::reduced_schedule(entity, t_count, &sol.x);
            let rc = sol.objective + constant - conv[u];
            Ok((rc, Column::new(scenario, entity, schedule)))
        })
        .collect::<Result<Vec<_>, lp::LpError>>()?;

    let mut outcome = PriceOutcome { added: 0, positive_rc: 0.0 };
    for (u, (rc, column)) in priced.into_iter().enumerate() {
        if rc > 1e-9 * (1.0 + rc.abs()) {
            outcome.positive_rc += rc;
            if pool.push_unique(u, column) {
                outcome.added += 1;
            }
        }
    }
    Ok(outcome)
}

/// Blends the pool columns with the master weights into one schedule per
/// entity. Grid sales are recomputed from the balance equation, which
/// every column satisfies, so the blend does too.
fn extract(scenario: &Scenario, pool: &ColumnPool, map: &MasterMap, x: &[f64]) -> Vec<EntitySchedule> {
    let t_count = scenario.grid.slot_count;
    let mut schedules: Vec<EntitySchedule> = scenario
        .entities
        .iter()
        .map(|_| EntitySchedule {
            e_grid: vec![0.0; t_count],
            e_charge: vec![0.0; t_count],
            e_discharge: vec![0.0; t_count],
            soc: vec![0.0; t_count + 1],
        })
        .collect();
    for (var, &(u, v)) in map.entries.iter().enumerate() {
        let weight = x[var];
        if weight == 0.0 {
            continue;
        }
        let col = &pool.columns[u][v].schedule;
        for t in 0..t_count {
            schedules[u].e_charge[t] += weight * col.e_charge[t];
            schedules[u].e_discharge[t] += weight * col.e_discharge[t];
        }
        for t in 0..=t_count {
            schedules[u].soc[t] += weight * col.soc[t];
        }
    }
    for (u, entity) in scenario.entities.iter().enumerate() {
        for t in 0..t_count {
            schedules[u].e_grid[t] = (entity.gen_forecast[t] - schedules[u].e_charge[t]
                + schedules[u].e_discharge[t])
                .max(0.0);
        }
    }
    schedules
}

/// Runs column generation for one regime assignment.
///
/// Returns `Ok(None)` when the assignment is infeasible, which is proven
/// the way simplex proves it: a feasibility master that cannot reach zero
/// slack while no schedule anywhere has positive reduced cost. Otherwise
/// returns the optimal value (including the objective constant) and the
/// blended schedules.
pub(crate) fn solve_with_columns(
    scenario: &Scenario,
    pool: &mut ColumnPool,
    objective: &MasterObjective,
    rows: &[CouplingRow],
) -> Result<Option<(f64, Vec<EntitySchedule>)>, lp::LpError> {
    let rhs_scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
    let mut rounds = 0;

    // Feasibility phase: pull columns until the coupling rows are
    // reachable, or prove they never will be.
    loop {
        rounds += 1;
        let (model, _) = build_master(pool, objective, rows, MasterMode::Feasibility);
        let sol = lp::solve(&model)?;
        if sol.status != LpStatus::Optimal {
            return Err(lp::LpError::Numerical(
                "feasibility master must always be solvable".into(),
            ));
        }
        if sol.objective >= -1e-9 * rhs_scale {
            break;
        }
        let outcome = price(scenario, pool, rows, &sol.row_duals, None)?;
        if outcome.positive_rc <= 1e-9 * rhs_scale {
            return Ok(None);
        }
        if outcome.added == 0 || rounds >= MAX_ROUNDS {
            // No fresh columns despite positive reduced costs: leave the
            // verdict to the exact master below.
            break;
        }
    }

    let mut crumbs = false;
    loop {
        rounds += 1;
        let mode = if crumbs { MasterMode::Tolerant(1e-9 * rhs_scale) } else { MasterMode::Exact };
        let (model, map) = build_master(pool, objective, rows, mode);
        let sol = lp::solve(&model)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible if !crumbs => {
                // The feasibility phase stopped within its tolerance but
                // the exact master misses by a crumb; allow exactly that
                // much slack and try again.
                crumbs = true;
                continue;
            }
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => {
                return Err(lp::LpError::Numerical(
                    "master over convex weights cannot be unbounded".into(),
                ))
            }
        }
        let done = if rounds >= MAX_ROUNDS {
            true
        } else {
            let outcome = price(scenario, pool, rows, &sol.row_duals, Some(objective))?;
            outcome.positive_rc <= 1e-7 * (1.0 + sol.objective.abs()) || outcome.added == 0
        };
        if done {
            let schedules = extract(scenario, pool, &map, &sol.x);
            return Ok(Some((sol.objective + objective.constant, schedules)));
        }
    }
}
