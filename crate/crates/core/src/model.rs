//! Domain model for a renewable energy community (REC) scheduling day.
//!
//! A [`Scenario`] bundles everything the optimizers need for one day-ahead
//! run: the time grid, the storage-equipped community members, the
//! aggregated non-schedulable forecasts, and the demand-response program.
//! Validation is centralized in [`validate_scenario`]; the structs
//! themselves are plain data so they can round-trip through serde.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Uniform discretization of the scheduling day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Number of slots in the day (e.g. 96 for 15-minute slots).
    pub slot_count: usize,
    /// Slot duration in hours (e.g. 0.25).
    pub slot_hours: f64,
}

impl TimeGrid {
    pub fn new(slot_count: usize, slot_hours: f64) -> Self {
        TimeGrid { slot_count, slot_hours }
    }
}

/// Half-open slot range `[start, end)` within a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Self {
        Interval { start, end }
    }

    pub fn slots(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn contains(&self, slot: usize) -> bool {
        slot >= self.start && slot < self.end
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Unit tag for per-slot series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesUnit {
    KilowattHours,
    EurPerKilowattHour,
}

/// Per-slot values with a unit tag; length must equal the grid's slot count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub unit: SeriesUnit,
    pub values: Vec<f64>,
}

impl Series {
    pub fn kwh(values: Vec<f64>) -> Self {
        Series { unit: SeriesUnit::KilowattHours, values }
    }

    pub fn price(values: Vec<f64>) -> Self {
        Series { unit: SeriesUnit::EurPerKilowattHour, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl std::ops::Index<usize> for Series {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Battery storage parameters of one entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessParams {
    /// Usable capacity S̄ (kWh).
    pub capacity: f64,
    /// Max charge per slot Ē^c (kWh).
    pub max_charge: f64,
    /// Max discharge per slot Ē^d (kWh).
    pub max_discharge: f64,
    /// Charging efficiency, 0 < η_c ≤ 1.
    pub eta_c: f64,
    /// Discharging efficiency, 0 < η_d ≤ 1.
    pub eta_d: f64,
    /// State of charge at the start of the day (kWh).
    pub soc_initial: f64,
    /// Required state of charge at the end of the day (kWh).
    pub soc_final: f64,
    /// Storage operation price π^s (€/kWh moved through the battery).
    pub storage_price: f64,
}

/// One community member: a generator with a battery behind the same meter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntitySpec {
    pub id: String,
    pub bess: BessParams,
    /// Generation forecast Ê (kWh per slot, nonnegative).
    pub gen_forecast: Series,
    /// Grid sale price π^g (€/kWh; may be negative).
    pub sell_price: Series,
}

/// One price-volume demand-response request.
///
/// The reward is 0 at or below `e_lo`, `gamma_max` at or above `e_hi`, and
/// linear in between, applied to the community net injection summed over
/// `interval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrRequest {
    pub interval: Interval,
    /// Lower energy bound E̲ (kWh); may be negative.
    pub e_lo: f64,
    /// Upper energy bound Ē (kWh); strictly greater than `e_lo`.
    pub e_hi: f64,
    /// Max reward γ̄ (€), strictly positive.
    pub gamma_max: f64,
}

impl DrRequest {
    /// Slope of the linear segment (€/kWh).
    pub fn slope(&self) -> f64 {
        self.gamma_max / (self.e_hi - self.e_lo)
    }
}

/// The demand-response program for the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrProgram {
    pub requests: Vec<DrRequest>,
    /// Share of each reward passed through to the entities, 0 < α < 1.
    pub alpha: f64,
}

/// Full input for one scheduling day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub grid: TimeGrid,
    pub entities: Vec<EntitySpec>,
    /// Aggregated non-schedulable generation E^p (kWh per slot).
    pub non_sched_gen: Series,
    /// Aggregated community load E^l (kWh per slot).
    pub loads: Series,
    pub program: DrProgram,
}

/// One entity's scheduled day.
///
/// `soc` has `slot_count + 1` entries; `soc[t]` is the state of charge at
/// the start of slot `t`, so `soc[slot_count]` is the end-of-day state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntitySchedule {
    /// Energy sold to the grid per slot (kWh, nonnegative).
    pub e_grid: Vec<f64>,
    /// Energy sent into the battery per slot (kWh, nonnegative).
    pub e_charge: Vec<f64>,
    /// Energy delivered from the battery per slot (kWh, nonnegative).
    pub e_discharge: Vec<f64>,
    /// State of charge trajectory (kWh), length `slot_count + 1`.
    pub soc: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding; `code` is a stable slug, `message` names the
/// offending entity or field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

impl Finding {
    fn error(code: &str, message: String) -> Self {
        Finding { severity: Severity::Error, code: code.to_string(), message }
    }

    fn warning(code: &str, message: String) -> Self {
        Finding { severity: Severity::Warning, code: code.to_string(), message }
    }
}

pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}

#[derive(Debug, Error, PartialEq)]
pub enum ClockError {
    #[error("clock value {0:?} is not in HH:MM form")]
    Malformed(String),
    #[error("clock value {clock:?} ({minutes} min) is not aligned to the {slot_minutes} min slot length")]
    Misaligned { clock: String, minutes: u32, slot_minutes: f64 },
}

/// Converts a wall-clock "HH:MM" string to a slot index on `grid`.
///
/// "24:00" is accepted as the end of the day. The result is not range
/// checked against the grid; interval validation covers that.
pub fn clock_to_slot(grid: &TimeGrid, clock: &str) -> Result<usize, ClockError> {
    let malformed = || ClockError::Malformed(clock.to_string());
    let (h, m) = clock.split_once(':').ok_or_else(malformed)?;
    if h.is_empty() || m.len() != 2 {
        return Err(malformed());
    }
    let hours: u32 = h.parse().map_err(|_| malformed())?;
    let mins: u32 = m.parse().map_err(|_| malformed())?;
    if hours > 24 || mins > 59 || (hours == 24 && mins != 0) {
        return Err(malformed());
    }
    let minutes = hours * 60 + mins;
    let slot_minutes = grid.slot_hours * 60.0;
    let slots = minutes as f64 / slot_minutes;
    if (slots - slots.round()).abs() > 1e-9 {
        return Err(ClockError::Misaligned { clock: clock.to_string(), minutes, slot_minutes });
    }
    Ok(slots.round() as usize)
}

/// Range of terminal states of charge reachable from `soc_initial`.
///
/// Forward pass over the exact per-slot reachable interval: charging is
/// limited by the charge cap and the slot's own generation (no grid
/// charging), discharging by the discharge cap, both clamped to
/// `[0, capacity]`. Because the per-slot control set is a product of
/// intervals, the reachable set stays an interval, so the two endpoints
/// are exact.
fn reachable_terminal_range(bess: &BessParams, forecast: &[f64]) -> (f64, f64) {
    let mut lo = bess.soc_initial;
    let mut hi = bess.soc_initial;
    for &gen in forecast {
        let charge = bess.eta_c * bess.max_charge.min(gen.max(0.0));
        hi = (hi + charge).min(bess.capacity);
        lo = (lo - bess.max_discharge / bess.eta_d).max(0.0);
    }
    (lo, hi)
}

fn check_series(
    findings: &mut Vec<Finding>,
    what: &str,
    series: &Series,
    expect_unit: SeriesUnit,
    expect_len: usize,
    nonneg: bool,
) {
    if series.unit != expect_unit {
        findings.push(Finding::error(
            "series unit mismatch",
            format!("{what}: expected {expect_unit:?}, found {:?}", series.unit),
        ));
    }
    if series.len() != expect_len {
        findings.push(Finding::error(
            "series length mismatch",
            format!("{what}: expected {expect_len} slots, found {}", series.len()),
        ));
    }
    for (t, &v) in series.values.iter().enumerate() {
        if !v.is_finite() {
            findings.push(Finding::error("non-finite value", format!("{what}[{t}] = {v}")));
            return;
        }
        if nonneg && v < 0.0 {
            findings.push(Finding::error("negative value", format!("{what}[{t}] = {v}")));
            return;
        }
    }
}

/// Checks every scenario invariant and returns the findings, errors and
/// warnings together. An empty result means the scenario is well formed and
/// every entity admits at least one feasible schedule (the greedy pass
/// behind the terminal-reachability check is a witness).
pub fn validate_scenario(s: &Scenario) -> Vec<Finding> {
    let mut findings = Vec::new();
    let t_count = s.grid.slot_count;

    if t_count == 0 {
        findings.push(Finding::error("empty grid", "slot_count must be at least 1".into()));
    }
    if !(s.grid.slot_hours > 0.0 && s.grid.slot_hours.is_finite()) {
        findings.push(Finding::error(
            "bad slot length",
            format!("slot_hours = {}", s.grid.slot_hours),
        ));
    }

    if s.entities.is_empty() {
        findings.push(Finding::error("no entities", "scenario has no entities".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for e in &s.entities {
        if e.id.is_empty() {
            findings.push(Finding::error("empty entity id", "entity with empty id".into()));
        }
        if !seen.insert(e.id.as_str()) {
            findings.push(Finding::error("duplicate entity id", format!("entity {:?}", e.id)));
        }
    }

    for e in &s.entities {
        let b = &e.bess;
        let id = &e.id;
        let finite = [
            ("capacity", b.capacity),
            ("max_charge", b.max_charge),
            ("max_discharge", b.max_discharge),
            ("eta_c", b.eta_c),
            ("eta_d", b.eta_d),
            ("soc_initial", b.soc_initial),
            ("soc_final", b.soc_final),
            ("storage_price", b.storage_price),
        ];
        if let Some((name, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            findings.push(Finding::error(
                "non-finite value",
                format!("entity {id:?}: {name} = {v}"),
            ));
            continue;
        }
        if b.capacity < 0.0 || b.max_charge < 0.0 || b.max_discharge < 0.0 {
            findings.push(Finding::error(
                "negative storage limit",
                format!("entity {id:?}: capacity/charge/discharge limits must be nonnegative"),
            ));
        }
        if !(b.eta_c > 0.0 && b.eta_c <= 1.0 && b.eta_d > 0.0 && b.eta_d <= 1.0) {
            findings.push(Finding::error(
                "efficiency out of range",
                format!("entity {id:?}: eta_c = {}, eta_d = {} (need 0 < eta <= 1)", b.eta_c, b.eta_d),
            ));
        }
        if b.storage_price < 0.0 {
            findings.push(Finding::error(
                "negative storage price",
                format!("entity {id:?}: storage_price = {}", b.storage_price),
            ));
        }
        if b.soc_initial < 0.0 || b.soc_initial > b.capacity {
            findings.push(Finding::error(
                "initial SOC out of range",
                format!("entity {id:?}: soc_initial = {} not in [0, {}]", b.soc_initial, b.capacity),
            ));
        }
        if b.soc_final < 0.0 || b.soc_final > b.capacity {
            findings.push(Finding::error(
                "terminal SOC out of range",
                format!("entity {id:?}: soc_final = {} not in [0, {}]", b.soc_final, b.capacity),
            ));
        }

        check_series(
            &mut findings,
            &format!("entity {id:?} gen_forecast"),
            &e.gen_forecast,
            SeriesUnit::KilowattHours,
            t_count,
            true,
        );
        check_series(
            &mut findings,
            &format!("entity {id:?} sell_price"),
            &e.sell_price,
            SeriesUnit::EurPerKilowattHour,
            t_count,
            false,
        );

        // Reachability only makes sense once the pieces above are sane.
        if !has_errors(&findings) {
            let (lo, hi) = reachable_terminal_range(b, &e.gen_forecast.values);
            if b.soc_final > hi + 1e-9 || b.soc_final < lo - 1e-9 {
                findings.push(Finding::error(
                    "terminal SOC unreachable",
                    format!(
                        "entity {id:?}: soc_final = {} outside reachable [{lo:.6}, {hi:.6}]",
                        b.soc_final
                    ),
                ));
            }
        }
    }

    check_series(
        &mut findings,
        "non_sched_gen",
        &s.non_sched_gen,
        SeriesUnit::KilowattHours,
        t_count,
        true,
    );
    check_series(&mut findings, "loads", &s.loads, SeriesUnit::KilowattHours, t_count, true);

    let p = &s.program;
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        findings.push(Finding::error(
            "alpha out of range",
            format!("alpha = {} (need 0 < alpha < 1)", p.alpha),
        ));
    }
    for (j, r) in p.requests.iter().enumerate() {
        if !(r.e_lo.is_finite() && r.e_hi.is_finite() && r.gamma_max.is_finite()) {
            findings.push(Finding::error("non-finite value", format!("request {j}: bounds")));
            continue;
        }
        if !(r.interval.start < r.interval.end && r.interval.end <= t_count) {
            findings.push(Finding::error(
                "bad request interval",
                format!("request {j}: [{}, {}) on a {t_count}-slot grid", r.interval.start, r.interval.end),
            ));
        }
        if r.e_lo == r.e_hi {
            findings.push(Finding::error(
                "degenerate DR bounds",
                format!("request {j}: e_lo = e_hi = {}", r.e_lo),
            ));
        } else if r.e_lo > r.e_hi {
            findings.push(Finding::error(
                "inverted DR bounds",
                format!("request {j}: e_lo = {} > e_hi = {}", r.e_lo, r.e_hi),
            ));
        }
        if !(r.gamma_max > 0.0) {
            findings.push(Finding::error(
                "non-positive reward cap",
                format!("request {j}: gamma_max = {}", r.gamma_max),
            ));
        }
    }
    for j in 0..p.requests.len() {
        for k in (j + 1)..p.requests.len() {
            if p.requests[j].interval.overlaps(&p.requests[k].interval) {
                findings.push(Finding::warning(
                    "overlapping DR requests",
                    format!("requests {j} and {k} share slots"),
                ));
            }
        }
    }

    findings
}
