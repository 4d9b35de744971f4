//! Baseline scheduling: each entity's best day operating alone (the
//! pipeline's first step).
//!
//! The baseline profit is the reference point for the settlement and the
//! aggregate floor the community solution must respect. It comes from a
//! per-entity linear program over grid sales, storage flows, and the
//! state-of-charge trajectory.

use crate::lp::{self, LpModel, LpStatus, Relation};
use crate::model::{EntitySchedule, EntitySpec, Scenario, TimeGrid};
use rayon::prelude::*;
use thiserror::Error;

/// Optimal standalone day for one entity.
#[derive(Debug, Clone)]
pub struct StandaloneResult {
    pub schedule: EntitySchedule,
    /// Optimal sale profit (€); matches the sale profit recomputed from
    /// `schedule`.
    pub profit: f64,
}

#[derive(Debug, Error)]
pub enum StandaloneError {
    #[error("entity {entity:?} admits no feasible schedule (check storage endpoints)")]
    Infeasible { entity: String },
    #[error("entity {entity:?}: {source}")]
    Solver {
        entity: String,
        #[source]
        source: lp::LpError,
    },
}

/// Column layout of the full baseline model: grid sales, charges,
/// discharges, then the `T + 1` state-of-charge values.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FullLayout {
    pub t: usize,
}

impl FullLayout {
    pub fn eg(self, t: usize) -> usize {
        t
    }
    pub fn ec(self, t: usize) -> usize {
        self.t + t
    }
    pub fn ed(self, t: usize) -> usize {
        2 * self.t + t
    }
    pub fn soc(self, t: usize) -> usize {
        3 * self.t + t
    }
    pub fn num_vars(self) -> usize {
        4 * self.t + 1
    }
}

/// Builds the full baseline model for one entity.
///
/// Maximizes the sale profit (grid revenue minus the storage operating
/// cost of both flows) subject to storage dynamics, the per-slot energy
/// balance, the no-grid-charging rule, and fixed storage endpoints.
/// Simultaneous charging and discharging is not excluded here: it cannot
/// pay off under ordinary tariffs, and reported schedules are cleaned up
/// by [`net_simultaneous_flows`] afterwards, so the model stays linear.
pub fn build_problem1(entity: &EntitySpec, grid: &TimeGrid) -> LpModel {
    let t_count = grid.slot_count;
    let lay = FullLayout { t: t_count };
    let b = &entity.bess;
    let mut m = LpModel::default();
    for t in 0..t_count {
        m.add_var(0.0, f64::INFINITY, entity.sell_price[t]);
    }
    for _ in 0..t_count {
        m.add_var(0.0, b.max_charge, -b.storage_price * b.eta_c);
    }
    for _ in 0..t_count {
        m.add_var(0.0, b.max_discharge, -b.storage_price / b.eta_d);
    }
    for _ in 0..=t_count {
        m.add_var(0.0, b.capacity, 0.0);
    }
    for t in 0..t_count {
        m.add_row(
            vec![
                (lay.soc(t + 1), 1.0),
                (lay.soc(t), -1.0),
                (lay.ec(t), -b.eta_c),
                (lay.ed(t), 1.0 / b.eta_d),
            ],
            Relation::Eq,
            0.0,
        );
    }
    for t in 0..t_count {
        m.add_row(
            vec![(lay.eg(t), 1.0), (lay.ec(t), 1.0), (lay.ed(t), -1.0)],
            Relation::Eq,
            entity.gen_forecast[t],
        );
    }
    for t in 0..t_count {
        m.add_row(vec![(lay.ec(t), 1.0)], Relation::Le, entity.gen_forecast[t]);
    }
    m.add_row(vec![(lay.soc(0), 1.0)], Relation::Eq, b.soc_initial);
    m.add_row(vec![(lay.soc(t_count), 1.0)], Relation::Eq, b.soc_final);
    m
}

/// Column layout of the reduced model: charges, discharges, then the
/// `T + 1` state-of-charge values.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ReducedLayout {
    pub t: usize,
}

impl ReducedLayout {
    pub fn ec(self, t: usize) -> usize {
        t
    }
    pub fn ed(self, t: usize) -> usize {
        self.t + t
    }
    pub fn soc(self, t: usize) -> usize {
        2 * self.t + t
    }
}

/// Sale-profit objective over the reduced variables. The balance equation
/// turns each sold slot into `forecast - charge + discharge`, so the
/// profit splits into a schedule-independent constant (selling the whole
/// forecast) plus per-slot charge and discharge coefficients. Returns
/// `(charge_coeffs, discharge_coeffs, constant)`.
pub(crate) fn reduced_objective(entity: &EntitySpec, t_count: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let b = &entity.bess;
    let mut c_obj = Vec::with_capacity(t_count);
    let mut d_obj = Vec::with_capacity(t_count);
    let mut constant = 0.0;
    for t in 0..t_count {
        let pg = entity.sell_price[t];
        c_obj.push(-(pg + b.storage_price * b.eta_c));
        d_obj.push(pg - b.storage_price / b.eta_d);
        constant += pg * entity.gen_forecast[t];
    }
    (c_obj, d_obj, constant)
}

/// Builds the reduced baseline model under a caller-chosen objective.
///
/// Grid sales are eliminated through the balance equation; capping each
/// slot's charge by its forecast enforces no-grid-charging and keeps the
/// eliminated sale nonnegative. Storage endpoints become variable bounds,
/// leaving exactly the `T` dynamics equalities as rows. The solution is
/// equivalent to the full model's but roughly an order of magnitude
/// cheaper on a dense-tableau solver.
pub(crate) fn build_reduced(
    entity: &EntitySpec,
    grid: &TimeGrid,
    c_obj: &[f64],
    d_obj: &[f64],
) -> LpModel {
    let t_count = grid.slot_count;
    let lay = ReducedLayout { t: t_count };
    let b = &entity.bess;
    let mut m = LpModel::default();
    for t in 0..t_count {
        m.add_var(0.0, b.max_charge.min(entity.gen_forecast[t]), c_obj[t]);
    }
    for t in 0..t_count {
        m.add_var(0.0, b.max_discharge, d_obj[t]);
    }
    for t in 0..=t_count {
        let (lo, hi) = if t == 0 {
            (b.soc_initial, b.soc_initial)
        } else if t == t_count {
            (b.soc_final, b.soc_final)
        } else {
            (0.0, b.capacity)
        };
        m.add_var(lo, hi, 0.0);
    }
    for t in 0..t_count {
        m.add_row(
            vec![
                (lay.soc(t + 1), 1.0),
                (lay.soc(t), -1.0),
                (lay.ec(t), -b.eta_c),
                (lay.ed(t), 1.0 / b.eta_d),
            ],
            Relation::Eq,
            0.0,
        );
    }
    m
}

/// Expands a reduced-model solution vector into a full schedule; grid
/// sales come from the balance equation, so it holds exactly.
pub(crate) fn reduced_schedule(entity: &EntitySpec, t_count: usize, x: &[f64]) -> EntitySchedule {
    let lay = ReducedLayout { t: t_count };
    let e_charge: Vec<f64> = (0..t_count).map(|t| x[lay.ec(t)]).collect();
    let e_discharge: Vec<f64> = (0..t_count).map(|t| x[lay.ed(t)]).collect();
    let e_grid = (0..t_count)
        .map(|t| (entity.gen_forecast[t] - e_charge[t] + e_discharge[t]).max(0.0))
        .collect();
    let soc = (0..=t_count).map(|t| x[lay.soc(t)]).collect();
    EntitySchedule { e_grid, e_charge, e_discharge, soc }
}

/// Solves one entity's baseline day to optimality.
///
/// The reported profit is the optimal objective value; the schedule is
/// post-processed by [`net_simultaneous_flows`], which leaves the
/// objective untouched at an optimum.
pub fn solve_standalone(
    entity: &EntitySpec,
    grid: &TimeGrid,
) -> Result<StandaloneResult, StandaloneError> {
    let t_count = grid.slot_count;
    let (c_obj, d_obj, constant) = reduced_objective(entity, t_count);
    let model = build_reduced(entity, grid, &c_obj, &d_obj);
    let sol = lp::solve(&model)
        .map_err(|source| StandaloneError::Solver { entity: entity.id.clone(), source })?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(StandaloneError::Infeasible { entity: entity.id.clone() })
        }
        LpStatus::Unbounded => {
            return Err(StandaloneError::Solver {
                entity: entity.id.clone(),
                source: lp::LpError::Numerical(
                    "baseline model reported unbounded despite box constraints".into(),
                ),
            })
        }
    }
    let schedule = reduced_schedule(entity, t_count, &sol.x);
    let schedule = net_simultaneous_flows(entity, &schedule);
    Ok(StandaloneResult { schedule, profit: sol.objective + constant })
}

/// Solves every entity's baseline, one concurrent task per entity.
/// Results keep the scenario's entity order.
pub fn solve_all(scenario: &Scenario) -> Result<Vec<StandaloneResult>, StandaloneError> {
    scenario
        .entities
        .par_iter()
        .map(|e| solve_standalone(e, &scenario.grid))
        .collect()
}

/// Removes simultaneous charging and discharging from a schedule without
/// moving the state-of-charge trajectory.
///
/// Both flows shrink together so their net storage effect cancels; the
/// energy freed by skipping the round trip goes to the grid instead, so
/// the sale never drops under ordinary tariffs. With round-trip losses or
/// a positive storage price the cleaned schedule earns strictly more,
/// which is why an optimum can only contain exact ties; ties are resolved
/// toward zero flows. Grid sales are recomputed from the balance
/// equation, so the output satisfies it exactly and
/// `e_charge(t) * e_discharge(t) == 0` in every slot.
pub fn net_simultaneous_flows(entity: &EntitySpec, schedule: &EntitySchedule) -> EntitySchedule {
    let b = &entity.bess;
    let round_trip = b.eta_c * b.eta_d;
    let mut out = schedule.clone();
    for t in 0..out.e_charge.len() {
        let c = out.e_charge[t];
        let d = out.e_discharge[t];
        if c > 0.0 && d > 0.0 {
            if c * round_trip <= d {
                out.e_charge[t] = 0.0;
                out.e_discharge[t] = d - c * round_trip;
            } else {
                out.e_discharge[t] = 0.0;
                out.e_charge[t] = c - d / round_trip;
            }
        }
        out.e_grid[t] =
            (entity.gen_forecast[t] - out.e_charge[t] + out.e_discharge[t]).max(0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BessParams, Series};

    fn entity(
        forecast: Vec<f64>,
        prices: Vec<f64>,
        eta: f64,
        storage_price: f64,
        capacity: f64,
    ) -> EntitySpec {
        EntitySpec {
            id: "e1".into(),
            bess: BessParams {
                capacity,
                max_charge: 1.0,
                max_discharge: 1.0,
                eta_c: eta,
                eta_d: eta,
                soc_initial: 0.0,
                soc_final: 0.0,
                storage_price,
            },
            gen_forecast: Series::kwh(forecast),
            sell_price: Series::price(prices),
        }
    }

    #[test]
    fn one_slot_model_has_five_variables_and_five_rows() {
        let e = entity(vec![1.0], vec![0.1], 1.0, 0.0, 1.0);
        let m = build_problem1(&e, &TimeGrid::new(1, 1.0));
        assert_eq!(m.num_vars(), 5);
        assert_eq!(m.rows.len(), 5);
    }

    #[test]
    fn full_day_model_has_the_expected_variable_count() {
        let e = entity(vec![1.0; 96], vec![0.1; 96], 0.95, 0.01, 10.0);
        let m = build_problem1(&e, &TimeGrid::new(96, 0.25));
        assert_eq!(m.num_vars(), 4 * 96 + 1);
    }

    #[test]
    fn zero_capacity_pins_every_soc_variable() {
        let e = entity(vec![1.0, 1.0], vec![0.1, 0.2], 1.0, 0.0, 0.0);
        let grid = TimeGrid::new(2, 1.0);
        let m = build_problem1(&e, &grid);
        let lay = FullLayout { t: 2 };
        for t in 0..=2 {
            assert_eq!((m.lower[lay.soc(t)], m.upper[lay.soc(t)]), (0.0, 0.0));
        }
        // With no storage the whole forecast is sold as it arrives.
        let r = solve_standalone(&e, &grid).unwrap();
        assert!((r.profit - 0.3).abs() < 1e-9);
    }

    #[test]
    fn zero_forecast_yields_zero_schedule_and_profit() {
        let e = entity(vec![0.0, 0.0], vec![0.5, 0.9], 0.9, 0.02, 2.0);
        let r = solve_standalone(&e, &TimeGrid::new(2, 1.0)).unwrap();
        assert_eq!(r.profit, 0.0);
        assert!(r.schedule.e_grid.iter().all(|&v| v == 0.0));
        assert!(r.schedule.e_charge.iter().all(|&v| v == 0.0));
        assert!(r.schedule.e_discharge.iter().all(|&v| v == 0.0));
        assert!(r.schedule.soc.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lossless_storage_shifts_generation_to_the_peak_price() {
        let e = entity(vec![1.0, 0.0], vec![1.0, 2.0], 1.0, 0.0, 1.0);
        let r = solve_standalone(&e, &TimeGrid::new(2, 1.0)).unwrap();
        assert!((r.profit - 2.0).abs() < 1e-9, "profit {}", r.profit);
        assert!((r.schedule.e_charge[0] - 1.0).abs() < 1e-9);
        assert!((r.schedule.e_discharge[1] - 1.0).abs() < 1e-9);
        assert!(r.schedule.e_grid[0].abs() < 1e-9);
        assert!((r.schedule.e_grid[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lossy_storage_still_prefers_the_price_spread() {
        // Charging 1 kWh stores 0.95, discharging returns 0.95^2 = 0.9025
        // sold at 2; operating cost 0.01 * (0.95 + 0.9025 / 0.95). That
        // beats selling at 1 immediately: 1.805 - 0.019 = 1.786.
        let e = entity(vec![1.0, 0.0], vec![1.0, 2.0], 0.95, 0.01, 1.0);
        let r = solve_standalone(&e, &TimeGrid::new(2, 1.0)).unwrap();
        assert!((r.profit - 1.786).abs() < 1e-9, "profit {}", r.profit);
        assert!((r.schedule.e_discharge[1] - 0.9025).abs() < 1e-9);
    }

    #[test]
    fn netting_leaves_complementary_slots_alone() {
        let e = entity(vec![1.0], vec![0.1], 0.9, 0.01, 2.0);
        let s = EntitySchedule {
            e_grid: vec![1.5],
            e_charge: vec![0.0],
            e_discharge: vec![0.5],
            soc: vec![0.45, 0.0],
        };
        let out = net_simultaneous_flows(&e, &s);
        assert_eq!(out.e_charge, vec![0.0]);
        assert_eq!(out.e_discharge, vec![0.5]);
        assert_eq!(out.e_grid, vec![1.5]);
    }

    #[test]
    fn netting_cancels_a_lossless_wash_to_exact_zero() {
        let e = entity(vec![1.0], vec![0.1], 1.0, 0.0, 2.0);
        let s = EntitySchedule {
            e_grid: vec![1.0],
            e_charge: vec![1.0],
            e_discharge: vec![1.0],
            soc: vec![0.5, 0.5],
        };
        let out = net_simultaneous_flows(&e, &s);
        assert_eq!(out.e_charge, vec![0.0]);
        assert_eq!(out.e_discharge, vec![0.0]);
        assert_eq!(out.e_grid, vec![1.0]);
        assert_eq!(out.soc, s.soc);
    }

    #[test]
    fn netting_a_lossy_overlap_never_cuts_the_sale_profit() {
        let e = entity(vec![2.0], vec![0.3], 0.9, 0.02, 5.0);
        let s = EntitySchedule {
            e_grid: vec![1.5],
            e_charge: vec![1.0],
            e_discharge: vec![0.5],
            soc: vec![1.0, 1.3444444444444446],
        };
        let out = net_simultaneous_flows(&e, &s);
        assert_eq!(out.e_charge[0] * out.e_discharge[0], 0.0);
        let psi = |sched: &EntitySchedule| {
            0.3 * sched.e_grid[0]
                - 0.02 * (0.9 * sched.e_charge[0] + sched.e_discharge[0] / 0.9)
        };
        assert!(psi(&out) >= psi(&s) - 1e-12);
        // The net storage movement is preserved exactly.
        let net = |sched: &EntitySchedule| {
            0.9 * sched.e_charge[0] - sched.e_discharge[0] / 0.9
        };
        assert!((net(&out) - net(&s)).abs() < 1e-12);
    }

    #[test]
    fn reduced_and_full_models_agree() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for case in 0..40 {
            let t_count = rng.gen_range(1..=5);
            let grid = TimeGrid::new(t_count, 1.0);
            let capacity = rng.gen_range(0.0..4.0);
            let soc0 = rng.gen_range(0.0..=capacity);
            let mut e = EntitySpec {
                id: format!("r{case}"),
                bess: BessParams {
                    capacity,
                    max_charge: rng.gen_range(0.1..2.0),
                    max_discharge: rng.gen_range(0.1..2.0),
                    eta_c: rng.gen_range(0.7..=1.0),
                    eta_d: rng.gen_range(0.7..=1.0),
                    soc_initial: soc0,
                    soc_final: 0.0,
                    storage_price: rng.gen_range(0.0..0.05),
                },
                gen_forecast: Series::kwh((0..t_count).map(|_| rng.gen_range(0.0..3.0)).collect()),
                sell_price: Series::price(
                    (0..t_count).map(|_| rng.gen_range(0.0..0.6)).collect(),
                ),
            };
            // Aim the terminal state at something reachable: drain fully.
            let reachable_floor = (0..t_count)
                .fold(soc0, |acc, _| (acc - e.bess.max_discharge / e.bess.eta_d).max(0.0));
            e.bess.soc_final = reachable_floor;
            let full = lp::solve(&build_problem1(&e, &grid)).unwrap();
            assert_eq!(full.status, LpStatus::Optimal, "case {case}");
            let reduced = solve_standalone(&e, &grid).unwrap();
            let scale = 1.0 + full.objective.abs();
            assert!(
                (full.objective - reduced.profit).abs() / scale < 1e-7,
                "case {case}: full {} vs reduced {}",
                full.objective,
                reduced.profit
            );
        }
    }

    #[test]
    fn larger_capacity_never_hurts() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for case in 0..25 {
            let t_count = rng.gen_range(2..=6);
            let grid = TimeGrid::new(t_count, 1.0);
            let mut e = entity(
                (0..t_count).map(|_| rng.gen_range(0.0..2.0)).collect(),
                (0..t_count).map(|_| rng.gen_range(0.05..0.5)).collect(),
                rng.gen_range(0.8..=1.0),
                rng.gen_range(0.0..0.03),
                rng.gen_range(0.5..2.0),
            );
            let small = solve_standalone(&e, &grid).unwrap().profit;
            e.bess.capacity *= 1.5;
            let large = solve_standalone(&e, &grid).unwrap().profit;
            assert!(large >= small - 1e-9, "case {case}: {small} vs {large}");
        }
    }

    #[test]
    fn unreachable_terminal_state_names_the_entity() {
        let mut e = entity(vec![0.0, 0.0], vec![0.1, 0.2], 1.0, 0.0, 2.0);
        e.bess.soc_final = 2.0;
        let err = solve_standalone(&e, &TimeGrid::new(2, 1.0)).unwrap_err();
        assert!(matches!(err, StandaloneError::Infeasible { .. }));
        assert!(err.to_string().contains("e1"));
    }
}
