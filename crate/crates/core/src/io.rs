//! Scenario files, time-series ingestion, and report output.
//!
//! Scenarios arrive as one JSON document that either inlines its time
//! series or points at two-column CSV files. Results leave as a set of
//! flat CSV tables (or one JSON document) whose bytes depend only on the
//! inputs, never on timing, so repeated runs can be diffed.

use crate::community::{CommunitySolution, Objective};
use crate::dr::Regime;
use crate::model::{
    clock_to_slot, has_errors, validate_scenario, BessParams, ClockError, DrProgram, DrRequest,
    EntitySchedule, EntitySpec, Finding, Interval, Scenario, Series, SeriesUnit, TimeGrid,
};
use crate::settlement::Settlement;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    WriteFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a valid scenario file: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    BadSeries { path: PathBuf, message: String },
    #[error("{context}: {message}")]
    Schema { context: String, message: String },
    #[error("{context}: {source}")]
    Clock {
        context: String,
        #[source]
        source: ClockError,
    },
    #[error("scenario failed validation:{}", render_findings(.findings))]
    Invalid { findings: Vec<Finding> },
}

fn render_findings(findings: &[Finding]) -> String {
    let mut out = String::new();
    for f in findings {
        let label = match f.severity {
            crate::model::Severity::Error => "error",
            crate::model::Severity::Warning => "warning",
        };
        write!(out, "\n  {label} [{}]: {}", f.code, f.message).expect("string write");
    }
    out
}

/// On-disk scenario schema. Each time series is either inline or a CSV
/// reference, exactly one of the two.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    grid: GridFile,
    entities: Vec<EntityFile>,
    aggregate: AggregateFile,
    dr: DrFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    slots: usize,
    slot_minutes: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityFile {
    id: String,
    capacity_kwh: f64,
    max_charge_kwh: f64,
    max_discharge_kwh: f64,
    eta_c: f64,
    eta_d: f64,
    soc_initial_kwh: f64,
    soc_final_kwh: f64,
    storage_cost_eur_per_kwh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price_inline: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forecast_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forecast_inline: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AggregateFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nonsched_gen_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nonsched_gen_inline: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    load_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    load_inline: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DrFile {
    alpha: f64,
    requests: Vec<RequestFile>,
}

/// Request endpoints accept either a slot index or a wall-clock "HH:MM"
/// string; the end is exclusive either way.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum SlotOrClock {
    Slot(usize),
    Clock(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestFile {
    start: SlotOrClock,
    end: SlotOrClock,
    e_lo_kwh: f64,
    e_hi_kwh: f64,
    gamma_max_eur: f64,
}

/// A parsed scenario plus the non-fatal validation findings; callers
/// decide how loudly to surface the warnings.
#[derive(Debug)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub warnings: Vec<Finding>,
}

fn read_series_csv(path: &Path, unit: SeriesUnit, slots: usize) -> Result<Series, IoError> {
    let expected_value = match unit {
        SeriesUnit::KilowattHours => "value_kwh",
        SeriesUnit::EurPerKilowattHour => "value_eur_per_kwh",
    };
    let bad = |message: String| IoError::BadSeries { path: path.to_path_buf(), message };
    let content = fs::read_to_string(path)
        .map_err(|source| IoError::Read { path: path.to_path_buf(), source })?;
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "slot" || &headers[1] != expected_value {
        return Err(bad(format!(
            "expected header `slot,{expected_value}`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut values = Vec::with_capacity(slots);
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 2 {
            return Err(bad(format!("row {}: expected 2 columns, found {}", i + 1, record.len())));
        }
        let slot: usize = record[0]
            .parse()
            .map_err(|_| bad(format!("row {}: slot {:?} is not an integer", i + 1, &record[0])))?;
        if slot != i {
            return Err(bad(format!("row {}: slots must run 0..{} in order, found {slot}", i + 1, slots - 1)));
        }
        let value: f64 = record[1]
            .parse()
            .map_err(|_| bad(format!("row {}: value {:?} is not a number", i + 1, &record[1])))?;
        values.push(value);
    }
    if values.len() != slots {
        return Err(bad(format!("expected {slots} data rows, found {}", values.len())));
    }
    Ok(Series { unit, values })
}

fn resolve_series(
    context: &str,
    base: &Path,
    csv_name: &str,
    inline_name: &str,
    csv: Option<String>,
    inline: Option<Vec<f64>>,
    unit: SeriesUnit,
    slots: usize,
) -> Result<Series, IoError> {
    match (csv, inline) {
        (Some(rel), None) => read_series_csv(&base.join(rel), unit, slots),
        (None, Some(values)) => Ok(Series { unit, values }),
        _ => Err(IoError::Schema {
            context: context.to_string(),
            message: format!("give exactly one of {csv_name} and {inline_name}"),
        }),
    }
}

fn endpoint_to_slot(grid: &TimeGrid, context: &str, value: &SlotOrClock) -> Result<usize, IoError> {
    match value {
        SlotOrClock::Slot(s) => Ok(*s),
        SlotOrClock::Clock(c) => clock_to_slot(grid, c)
            .map_err(|source| IoError::Clock { context: context.to_string(), source }),
    }
}

/// Reads, unit-converts, and validates a scenario file. Validation
/// findings of error severity abort the load; warnings ride along.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario, IoError> {
    let content = fs::read_to_string(path)
        .map_err(|source| IoError::Read { path: path.to_path_buf(), source })?;
    let file: ScenarioFile = serde_json::from_str(&content)
        .map_err(|source| IoError::Parse { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let grid = TimeGrid::new(file.grid.slots, file.grid.slot_minutes / 60.0);
    let slots = grid.slot_count;

    let mut entities = Vec::with_capacity(file.entities.len());
    for e in file.entities {
        let context = format!("entity {:?}", e.id);
        let sell_price = resolve_series(
            &context,
            base,
            "price_csv",
            "price_inline",
            e.price_csv,
            e.price_inline,
            SeriesUnit::EurPerKilowattHour,
            slots,
        )?;
        let gen_forecast = resolve_series(
            &context,
            base,
            "forecast_csv",
            "forecast_inline",
            e.forecast_csv,
            e.forecast_inline,
            SeriesUnit::KilowattHours,
            slots,
        )?;
        entities.push(EntitySpec {
            id: e.id,
            bess: BessParams {
                capacity: e.capacity_kwh,
                max_charge: e.max_charge_kwh,
                max_discharge: e.max_discharge_kwh,
                eta_c: e.eta_c,
                eta_d: e.eta_d,
                soc_initial: e.soc_initial_kwh,
                soc_final: e.soc_final_kwh,
                storage_price: e.storage_cost_eur_per_kwh,
            },
            gen_forecast,
            sell_price,
        });
    }

    let non_sched_gen = resolve_series(
        "aggregate",
        base,
        "nonsched_gen_csv",
        "nonsched_gen_inline",
        file.aggregate.nonsched_gen_csv,
        file.aggregate.nonsched_gen_inline,
        SeriesUnit::KilowattHours,
        slots,
    )?;
    let loads = resolve_series(
        "aggregate",
        base,
        "load_csv",
        "load_inline",
        file.aggregate.load_csv,
        file.aggregate.load_inline,
        SeriesUnit::KilowattHours,
        slots,
    )?;

    let mut requests = Vec::with_capacity(file.dr.requests.len());
    for (j, r) in file.dr.requests.iter().enumerate() {
        let start = endpoint_to_slot(&grid, &format!("dr.requests[{j}].start"), &r.start)?;
        let end = endpoint_to_slot(&grid, &format!("dr.requests[{j}].end"), &r.end)?;
        requests.push(DrRequest {
            interval: Interval::new(start, end),
            e_lo: r.e_lo_kwh,
            e_hi: r.e_hi_kwh,
            gamma_max: r.gamma_max_eur,
        });
    }

    let scenario = Scenario {
        grid,
        entities,
        non_sched_gen,
        loads,
        program: DrProgram { requests, alpha: file.dr.alpha },
    };
    let findings = validate_scenario(&scenario);
    if has_errors(&findings) {
        return Err(IoError::Invalid { findings });
    }
    Ok(LoadedScenario { scenario, warnings: findings })
}

/// Writes a scenario back out in canonical form (all series inline,
/// endpoints as slots). Loading the written file yields an equal
/// [`Scenario`].
pub fn write_scenario(scenario: &Scenario, path: &Path) -> Result<(), IoError> {
    let file = ScenarioFile {
        grid: GridFile {
            slots: scenario.grid.slot_count,
            slot_minutes: scenario.grid.slot_hours * 60.0,
        },
        entities: scenario
            .entities
            .iter()
            .map(|e| EntityFile {
                id: e.id.clone(),
                capacity_kwh: e.bess.capacity,
                max_charge_kwh: e.bess.max_charge,
                max_discharge_kwh: e.bess.max_discharge,
                eta_c: e.bess.eta_c,
                eta_d: e.bess.eta_d,
                soc_initial_kwh: e.bess.soc_initial,
                soc_final_kwh: e.bess.soc_final,
                storage_cost_eur_per_kwh: e.bess.storage_price,
                price_csv: None,
                price_inline: Some(e.sell_price.values.clone()),
                forecast_csv: None,
                forecast_inline: Some(e.gen_forecast.values.clone()),
            })
            .collect(),
        aggregate: AggregateFile {
            nonsched_gen_csv: None,
            nonsched_gen_inline: Some(scenario.non_sched_gen.values.clone()),
            load_csv: None,
            load_inline: Some(scenario.loads.values.clone()),
        },
        dr: DrFile {
            alpha: scenario.program.alpha,
            requests: scenario
                .program
                .requests
                .iter()
                .map(|r| RequestFile {
                    start: SlotOrClock::Slot(r.interval.start),
                    end: SlotOrClock::Slot(r.interval.end),
                    e_lo_kwh: r.e_lo,
                    e_hi_kwh: r.e_hi,
                    gamma_max_eur: r.gamma_max,
                })
                .collect(),
        },
    };
    let mut text = serde_json::to_string_pretty(&file).expect("scenario serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| IoError::WriteFile { path: path.to_path_buf(), source })
}

/// Output flavor of the report writers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// One entity's line in a day report.
#[derive(Debug, Clone, Serialize)]
pub struct EntityReport {
    pub entity: String,
    /// Standalone profit J_u0.
    pub baseline: f64,
    pub psi: f64,
    pub xi: f64,
    pub profit: f64,
    pub delta: f64,
    /// True when the entity pays into the pot instead of drawing from it.
    pub negative_xi: bool,
}

/// One request's line in a day report.
#[derive(Debug, Clone, Serialize)]
pub struct RequestReport {
    /// 1-based request number, matching the scenario order.
    pub request: usize,
    pub e_dr: f64,
    pub gamma: f64,
    pub regime: Regime,
}

/// Everything the pipeline reports for one day. Wall-clock timing stays
/// out on purpose: these files must be byte-identical across reruns.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    /// Day label, normally the scenario file stem.
    pub day: String,
    pub objective: Objective,
    /// Baseline profit total J_0*.
    pub baseline_total: f64,
    pub rho: f64,
    pub xi_total: f64,
    pub sum_delta: f64,
    pub sum_gamma: f64,
    pub entities: Vec<EntityReport>,
    pub requests: Vec<RequestReport>,
    pub schedules: Vec<EntitySchedule>,
    pub net_injection: Vec<f64>,
}

impl Report {
    /// Joins the community solution and its settlement into one record.
    pub fn assemble(
        day: &str,
        scenario: &Scenario,
        objective: Objective,
        solution: &CommunitySolution,
        settlement: &Settlement,
    ) -> Report {
        let entities = scenario
            .entities
            .iter()
            .zip(&settlement.entities)
            .map(|(spec, e)| EntityReport {
                entity: spec.id.clone(),
                baseline: e.baseline,
                psi: e.psi,
                xi: e.xi,
                profit: e.profit,
                delta: e.delta,
                negative_xi: e.xi < 0.0,
            })
            .collect();
        let requests = solution
            .e_dr
            .iter()
            .zip(&solution.gamma)
            .zip(&solution.regime)
            .enumerate()
            .map(|(j, ((&e_dr, &gamma), &regime))| RequestReport {
                request: j + 1,
                e_dr,
                gamma,
                regime,
            })
            .collect();
        Report {
            day: day.to_string(),
            objective,
            baseline_total: solution.baseline_total,
            rho: settlement.rho,
            xi_total: settlement.xi_total,
            sum_delta: settlement.entities.iter().map(|e| e.delta).sum(),
            sum_gamma: solution.gamma.iter().sum(),
            entities,
            requests,
            schedules: solution.schedules.clone(),
            net_injection: solution.net_injection.values.clone(),
        }
    }
}

/// Money column format: four decimals, matching settlement-grade cents.
fn money(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

/// Energy and ratio column format: six decimals.
fn qty(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), IoError> {
    let failed = |source: csv::Error| match source.into_kind() {
        csv::ErrorKind::Io(source) => IoError::WriteFile { path: path.to_path_buf(), source },
        other => IoError::WriteFile {
            path: path.to_path_buf(),
            source: std::io::Error::other(format!("{other:?}")),
        },
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(failed)?;
    for row in rows {
        writer.write_record(&row).map_err(failed)?;
    }
    let bytes = writer.into_inner().expect("vec sink cannot fail");
    fs::write(path, bytes).map_err(|source| IoError::WriteFile { path: path.to_path_buf(), source })
}

fn summary_row(report: &Report) -> Vec<String> {
    vec![
        report.day.clone(),
        report.objective.to_string(),
        money(report.baseline_total),
        money(report.sum_delta),
        money(report.sum_gamma),
        qty(report.rho),
    ]
}

const SUMMARY_HEADER: [&str; 6] = ["date", "objective", "J0", "sum_delta", "sum_gamma", "rho"];

/// Writes one day's report into `dir` and returns the created paths.
///
/// CSV gets the four flat tables; JSON gets a single `report.json` with
/// full floating-point precision.
pub fn write_report(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(dir)
        .map_err(|source| IoError::WriteFile { path: dir.to_path_buf(), source })?;
    match format {
        Format::Json => {
            let path = dir.join("report.json");
            let mut text = serde_json::to_string_pretty(report).expect("report serializes");
            text.push('\n');
            fs::write(&path, text)
                .map_err(|source| IoError::WriteFile { path: path.clone(), source })?;
            Ok(vec![path])
        }
        Format::Csv => {
            let summary = dir.join("summary.csv");
            write_csv(&summary, &SUMMARY_HEADER, [summary_row(report)])?;

            let entities = dir.join("entities.csv");
            write_csv(
                &entities,
                &["date", "entity", "J_u0", "psi", "xi", "J_u", "delta"],
                report.entities.iter().map(|e| {
                    vec![
                        report.day.clone(),
                        e.entity.clone(),
                        money(e.baseline),
                        money(e.psi),
                        money(e.xi),
                        money(e.profit),
                        money(e.delta),
                    ]
                }),
            )?;

            let requests = dir.join("requests.csv");
            write_csv(
                &requests,
                &["date", "request", "e_dr", "gamma", "regime"],
                report.requests.iter().map(|r| {
                    vec![
                        report.day.clone(),
                        r.request.to_string(),
                        qty(r.e_dr),
                        money(r.gamma),
                        r.regime.to_string(),
                    ]
                }),
            )?;

            let trajectories = dir.join("trajectories.csv");
            let slot_count = report.net_injection.len();
            let mut rows = Vec::with_capacity(slot_count * report.entities.len());
            for t in 0..slot_count {
                for (e, s) in report.entities.iter().zip(&report.schedules) {
                    rows.push(vec![
                        t.to_string(),
                        e.entity.clone(),
                        qty(s.e_grid[t]),
                        qty(s.e_charge[t]),
                        qty(s.e_discharge[t]),
                        qty(s.soc[t + 1]),
                        qty(report.net_injection[t]),
                    ]);
                }
            }
            write_csv(
                &trajectories,
                &["slot", "entity", "e_grid", "e_charge", "e_discharge", "soc", "net_injection"],
                rows,
            )?;
            Ok(vec![summary, entities, requests, trajectories])
        }
    }
}

/// Writes the multi-day aggregate summary, one line per report.
pub fn write_summary(reports: &[Report], dir: &Path, format: Format) -> Result<PathBuf, IoError> {
    fs::create_dir_all(dir)
        .map_err(|source| IoError::WriteFile { path: dir.to_path_buf(), source })?;
    match format {
        Format::Csv => {
            let path = dir.join("summary.csv");
            write_csv(&path, &SUMMARY_HEADER, reports.iter().map(summary_row))?;
            Ok(path)
        }
        Format::Json => {
            let path = dir.join("summary.json");
            let rows: Vec<serde_json::Value> = reports
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "date": r.day,
                        "objective": r.objective,
                        "J0": r.baseline_total,
                        "sum_delta": r.sum_delta,
                        "sum_gamma": r.sum_gamma,
                        "rho": r.rho,
                    })
                })
                .collect();
            let mut text =
                serde_json::to_string_pretty(&rows).expect("summary serializes");
            text.push('\n');
            fs::write(&path, text)
                .map_err(|source| IoError::WriteFile { path: path.clone(), source })?;
            Ok(path)
        }
    }
}
