//! Scenario-level self-checks: each named check cross-examines one layer
//! of the pipeline against an independent reference (brute-force search,
//! the indicator encoding, or the settlement identities) and prints one
//! PASS/SKIP/FAIL line. The command exits 0 only when nothing failed.

use crate::Failure;
use recdr::community::{self, Objective, MAX_REQUESTS};
use recdr::dr;
use recdr::io;
use recdr::model::Scenario;
use recdr::oracle::{self, OracleError};
use recdr::settlement::{self, Settlement};
use recdr::standalone;
use std::path::Path;

/// Discretization density (steps per kWh) for the search oracles.
const SEARCH_STEPS: u32 = 4;

enum Status {
    Pass,
    Skip,
    Fail,
}

struct Check {
    name: &'static str,
    status: Status,
    detail: String,
}

impl Check {
    fn pass(name: &'static str, detail: impl Into<String>) -> Check {
        Check { name, status: Status::Pass, detail: detail.into() }
    }

    fn skip(name: &'static str, detail: impl Into<String>) -> Check {
        Check { name, status: Status::Skip, detail: detail.into() }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Check {
        Check { name, status: Status::Fail, detail: detail.into() }
    }
}

pub fn run(scenario_path: &Path) -> Result<u8, Failure> {
    let loaded = io::load_scenario(scenario_path)?;
    crate::print_warnings(&loaded.warnings);
    let scenario = loaded.scenario;
    let fault = std::env::var("REC_DR_FAULT_INJECT").map_or(false, |v| !v.is_empty());
    if fault {
        eprintln!("fault injection active (REC_DR_FAULT_INJECT): expecting a failure below");
    }

    let checks = [
        encoding_equivalence(&scenario),
        standalone_vs_search(&scenario),
        community_vs_search(&scenario),
        window_range_inside_big_m(&scenario),
        pipeline_identities(&scenario, fault),
        reward_ordering(&scenario),
    ];

    let mut failed = 0usize;
    for check in &checks {
        match check.status {
            Status::Pass => println!("PASS {}: {}", check.name, check.detail),
            Status::Skip => println!("SKIP {} ({})", check.name, check.detail),
            Status::Fail => {
                failed += 1;
                println!("FAIL {}: {}", check.name, check.detail);
            }
        }
    }
    if failed == 0 {
        println!("all checks passed");
        Ok(0)
    } else {
        println!("{failed} check(s) failed");
        Ok(crate::EXIT_VERIFY_FAILED)
    }
}

/// The piecewise reward formula must agree with its indicator encoding at
/// breakpoints, interior points, and points outside the band.
fn encoding_equivalence(scenario: &Scenario) -> Check {
    const NAME: &str = "encoding-equivalence";
    if scenario.program.requests.is_empty() {
        return Check::skip(NAME, "scenario has no reward requests");
    }
    let mut samples = 0usize;
    for (j, req) in scenario.program.requests.iter().enumerate() {
        let big_m = dr::default_big_m(scenario, req);
        let span = (req.e_hi - req.e_lo).max(1.0);
        let probes = [
            req.e_lo,
            req.e_hi,
            0.5 * (req.e_lo + req.e_hi),
            req.e_lo - 0.5 * span,
            req.e_hi + 0.5 * span,
            req.e_lo + 0.25 * span,
            req.e_lo + 0.75 * span,
        ];
        for &e_dr in &probes {
            samples += 1;
            if !oracle::check_encoding(req, e_dr, &big_m) {
                return Check::fail(
                    NAME,
                    format!("request {} disagrees with its encoding at E = {e_dr}", j + 1),
                );
            }
        }
    }
    Check::pass(
        NAME,
        format!(
            "{samples} probes across {} request(s) agree",
            scenario.program.requests.len()
        ),
    )
}

/// Each baseline profit must dominate an exhaustive discretized search
/// over that entity's feasible storage paths.
fn standalone_vs_search(scenario: &Scenario) -> Check {
    const NAME: &str = "standalone-vs-search";
    let mut compared = 0usize;
    let mut skipped = Vec::new();
    for entity in &scenario.entities {
        let reference = match oracle::brute_force_standalone(entity, &scenario.grid, SEARCH_STEPS)
        {
            Ok(r) => r,
            Err(OracleError::TooLarge(why)) | Err(OracleError::OffGrid(why)) => {
                skipped.push(format!("{}: {why}", entity.id));
                continue;
            }
            Err(e) => return Check::fail(NAME, format!("oracle failed on {}: {e}", entity.id)),
        };
        let solved = match standalone::solve_standalone(entity, &scenario.grid) {
            Ok(s) => s,
            Err(e) => return Check::fail(NAME, format!("solver failed on {}: {e}", entity.id)),
        };
        let lo = reference.profit - 1e-6;
        let hi = reference.profit + reference.gap + 1e-6;
        if solved.profit < lo || solved.profit > hi {
            return Check::fail(
                NAME,
                format!(
                    "entity {}: profit {:.9} outside search bracket [{lo:.9}, {hi:.9}]",
                    entity.id, solved.profit
                ),
            );
        }
        compared += 1;
    }
    if compared == 0 {
        return Check::skip(
            NAME,
            format!("no entity fits the search grid ({})", skipped.join("; ")),
        );
    }
    let mut detail = format!("{compared} of {} entities bracketed", scenario.entities.len());
    if !skipped.is_empty() {
        detail.push_str(&format!(", {} skipped as too large", skipped.len()));
    }
    Check::pass(NAME, detail)
}

/// The community objective must land inside the bracket established by an
/// exhaustive search over discretized schedule tuples, for both objectives.
fn community_vs_search(scenario: &Scenario) -> Check {
    const NAME: &str = "community-vs-search";
    let baselines = match baseline_profits(scenario) {
        Ok(b) => b,
        Err(e) => return Check::fail(NAME, format!("baseline solve failed: {e}")),
    };
    for objective in [Objective::Entities, Objective::Manager] {
        let reference =
            match oracle::brute_force_community(scenario, objective, &baselines, SEARCH_STEPS) {
                Ok(r) => r,
                Err(OracleError::TooLarge(why)) | Err(OracleError::OffGrid(why)) => {
                    return Check::skip(NAME, why)
                }
                Err(e) => return Check::fail(NAME, format!("oracle failed: {e}")),
            };
        let solution = match community::solve_community(scenario, objective, &baselines) {
            Ok(s) => s,
            Err(e) => return Check::fail(NAME, format!("{objective} solve failed: {e}")),
        };
        let hi = reference.best_slack + reference.objective_gap + 1e-6;
        if solution.objective_value > hi {
            return Check::fail(
                NAME,
                format!(
                    "{objective} objective {:.9} exceeds the search ceiling {hi:.9}",
                    solution.objective_value
                ),
            );
        }
        if let Some(strict) = reference.best_strict {
            if solution.objective_value < strict - 1e-6 {
                return Check::fail(
                    NAME,
                    format!(
                        "{objective} objective {:.9} below the search floor {:.9}",
                        solution.objective_value,
                        strict - 1e-6
                    ),
                );
            }
        }
    }
    Check::pass(NAME, "both objectives inside the search bracket")
}

/// The default linearization constants must dominate every window energy
/// the community can physically produce, and every reward the program can
/// pay, so the exported MILP never cuts off a feasible point.
fn window_range_inside_big_m(scenario: &Scenario) -> Check {
    const NAME: &str = "window-range-inside-big-m";
    if scenario.program.requests.is_empty() {
        return Check::skip(NAME, "scenario has no reward requests");
    }
    let cells = scenario.entities.len() * scenario.grid.slot_count;
    if cells > 5000 {
        return Check::skip(NAME, format!("{cells} entity-slots exceed the range-scan cap"));
    }
    for (j, req) in scenario.program.requests.iter().enumerate() {
        let (lo, hi) = match oracle::window_energy_range(scenario, req.interval) {
            Ok(range) => range,
            Err(e) => return Check::fail(NAME, format!("range solve failed: {e}")),
        };
        let big_m = dr::default_big_m(scenario, req);
        let reach = lo.abs().max(hi.abs()).max(req.e_lo.abs()).max(req.e_hi.abs());
        if big_m.m_energy < reach - 1e-9 {
            return Check::fail(
                NAME,
                format!(
                    "request {}: energy constant {:.6} below reachable magnitude {reach:.6}",
                    j + 1,
                    big_m.m_energy
                ),
            );
        }
        if big_m.m_reward < req.gamma_max - 1e-9 {
            return Check::fail(
                NAME,
                format!("request {}: reward constant below the reward cap", j + 1),
            );
        }
    }
    Check::pass(
        NAME,
        format!("{} request(s) fit their linearization constants", scenario.program.requests.len()),
    )
}

/// Runs the full pipeline and re-derives every settlement identity from
/// scratch. With REC_DR_FAULT_INJECT set, the settlement is deliberately
/// corrupted after the solve so this check must fail (negative control).
fn pipeline_identities(scenario: &Scenario, fault: bool) -> Check {
    const NAME: &str = "pipeline-identities";
    if scenario.program.requests.len() > MAX_REQUESTS {
        return Check::skip(
            NAME,
            format!(
                "{} requests exceed the exact-enumeration cap; use export-milp instead",
                scenario.program.requests.len()
            ),
        );
    }
    let baselines = match baseline_profits(scenario) {
        Ok(b) => b,
        Err(e) => return Check::fail(NAME, format!("baseline solve failed: {e}")),
    };
    let solution = match community::solve_community(scenario, Objective::Entities, &baselines) {
        Ok(s) => s,
        Err(e) => return Check::fail(NAME, format!("community solve failed: {e}")),
    };
    let mut outcome: Settlement = match settlement::settle(
        &baselines,
        &solution.psi,
        &solution.gamma,
        scenario.program.alpha,
        Default::default(),
    ) {
        Ok(s) => s,
        Err(e) => return Check::fail(NAME, format!("settlement rejected the solve: {e}")),
    };
    if fault {
        outcome.rho += 1e-3;
    }

    let baseline_total: f64 = baselines.iter().sum();
    let psi_total: f64 = solution.psi.iter().sum();
    let gamma_total: f64 = solution.gamma.iter().sum();
    let achieved = psi_total + scenario.program.alpha * gamma_total;
    if achieved < baseline_total - 1e-6 * (1.0 + baseline_total.abs()) {
        return Check::fail(
            NAME,
            format!("profit floor broken: {achieved:.9} < baseline total {baseline_total:.9}"),
        );
    }
    if outcome.rho < -1e-9 {
        return Check::fail(NAME, format!("uplift rate is negative: {:.3e}", outcome.rho));
    }
    let xi_sum: f64 = outcome.entities.iter().map(|e| e.xi).sum();
    if (xi_sum - outcome.xi_total).abs() > 1e-9 * outcome.xi_total.abs().max(1.0) {
        return Check::fail(
            NAME,
            format!(
                "redistributed shares sum to {xi_sum:.12} but the pot is {:.12}",
                outcome.xi_total
            ),
        );
    }
    for (u, e) in outcome.entities.iter().enumerate() {
        let want_profit = (1.0 + outcome.rho) * e.baseline;
        if (e.profit - want_profit).abs() > 1e-9 * (1.0 + want_profit.abs()) {
            return Check::fail(
                NAME,
                format!(
                    "entity {u}: profit {:.12} breaks the uniform-uplift identity {want_profit:.12}",
                    e.profit
                ),
            );
        }
        let want_delta = outcome.rho * e.baseline;
        if (e.delta - want_delta).abs() > 1e-9 * (1.0 + want_delta.abs()) {
            return Check::fail(
                NAME,
                format!("entity {u}: gain {:.12} is not rate times baseline", e.delta),
            );
        }
    }
    for (u, schedule) in solution.schedules.iter().enumerate() {
        for t in 0..scenario.grid.slot_count {
            if schedule.e_charge[t] * schedule.e_discharge[t] != 0.0 {
                return Check::fail(
                    NAME,
                    format!("entity {u} charges and discharges simultaneously in slot {t}"),
                );
            }
        }
    }
    Check::pass(
        NAME,
        format!("rho {:.6}, floor slack {:.3e}", outcome.rho, achieved - baseline_total),
    )
}

/// Maximizing the manager's take can never shrink the total claimed reward
/// below what the entity-profit objective claims.
fn reward_ordering(scenario: &Scenario) -> Check {
    const NAME: &str = "reward-ordering";
    if scenario.program.requests.is_empty() {
        return Check::skip(NAME, "scenario has no reward requests");
    }
    if scenario.program.requests.len() > MAX_REQUESTS {
        return Check::skip(NAME, "request count exceeds the exact-enumeration cap");
    }
    let baselines = match baseline_profits(scenario) {
        Ok(b) => b,
        Err(e) => return Check::fail(NAME, format!("baseline solve failed: {e}")),
    };
    let mut totals = [0.0f64; 2];
    for (i, objective) in [Objective::Entities, Objective::Manager].into_iter().enumerate() {
        match community::solve_community(scenario, objective, &baselines) {
            Ok(s) => totals[i] = s.gamma.iter().sum(),
            Err(e) => return Check::fail(NAME, format!("{objective} solve failed: {e}")),
        }
    }
    if totals[1] < totals[0] - 1e-6 {
        return Check::fail(
            NAME,
            format!(
                "manager run claims {:.9} in rewards, less than the entities run's {:.9}",
                totals[1], totals[0]
            ),
        );
    }
    Check::pass(NAME, format!("rewards {:.6} (entities) <= {:.6} (manager)", totals[0], totals[1]))
}

fn baseline_profits(scenario: &Scenario) -> Result<Vec<f64>, recdr::standalone::StandaloneError> {
    Ok(standalone::solve_all(scenario)?.iter().map(|r| r.profit).collect())
}
