//! Price-volume demand-response rewards and their mixed-integer encoding.
//!
//! A request pays the community for the net energy it injects into the grid
//! over the request window: nothing at or below a lower threshold, the full
//! reward at or above an upper threshold, and a linear ramp in between. The
//! community optimizer needs that piecewise rule in constraint form;
//! [`encode_bigm`] produces the big-M rows over three regime indicator
//! binaries, and [`export_milp`] writes the complete community problem as an
//! LP-format file so external MILP solvers can cross-check the built-in
//! solver.

use crate::community::Objective;
use crate::lp::Relation;
use crate::model::{DrRequest, Interval, Scenario};
use crate::standalone::{self, StandaloneError};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Branch of the piecewise reward that a realized window energy falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// At or below the lower threshold; no reward.
    Below,
    /// Strictly between the thresholds; the reward interpolates linearly.
    Linear,
    /// At or above the upper threshold; the reward is capped.
    Above,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Below, Regime::Linear, Regime::Above];

    /// Position of this regime's indicator among the three binaries.
    pub fn index(self) -> usize {
        match self {
            Regime::Below => 0,
            Regime::Linear => 1,
            Regime::Above => 2,
        }
    }

    /// Classifies a realized window energy. At a breakpoint the two
    /// adjacent regimes price identically; the lower-indexed one is
    /// returned so every caller reports ties the same way.
    pub fn classify(e_dr: f64, req: &DrRequest) -> Regime {
        if e_dr <= req.e_lo {
            Regime::Below
        } else if e_dr <= req.e_hi {
            Regime::Linear
        } else {
            Regime::Above
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Below => "below",
            Regime::Linear => "linear",
            Regime::Above => "above",
        })
    }
}

/// Reward (€) granted for a realized window energy `e_dr` (kWh).
///
/// Continuous and nondecreasing in `e_dr`, constant outside the threshold
/// band.
pub fn reward(e_dr: f64, req: &DrRequest) -> f64 {
    if e_dr <= req.e_lo {
        0.0
    } else if e_dr >= req.e_hi {
        req.gamma_max
    } else {
        req.gamma_max * (e_dr - req.e_lo) / (req.e_hi - req.e_lo)
    }
}

/// Net energy injected over a request window: the per-slot community net
/// injection summed across the window.
pub fn compute_e_dr(net_injection: &[f64], interval: Interval) -> f64 {
    interval.slots().map(|t| net_injection[t]).sum()
}

/// Big-M constants for one request, sized so the deactivated side of every
/// indicator row stays slack for any schedule the scenario admits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    /// Energy-row constant (kWh); dominates any realizable window energy
    /// magnitude as well as both thresholds.
    pub m_energy: f64,
    /// Reward-row constant (€); dominates the reward cap.
    pub m_reward: f64,
}

/// Conservative big-M constants derived from the scenario data.
///
/// The balance equations bracket the window energy: it cannot exceed the
/// total schedulable-plus-passive generation in the window (everything
/// sold, batteries drained at full rate) and cannot fall below the negated
/// window load. Summing all those magnitudes plus both thresholds
/// over-bounds the realizable range; the factor 2 is headroom on top.
pub fn default_big_m(scenario: &Scenario, req: &DrRequest) -> BigM {
    let mut total = 0.0;
    for t in req.interval.slots() {
        for e in &scenario.entities {
            total += e.gen_forecast[t] + e.bess.max_discharge;
        }
        total += scenario.non_sched_gen[t] + scenario.loads[t];
    }
    BigM {
        m_energy: 2.0 * (total + req.e_lo.abs() + req.e_hi.abs()),
        m_reward: 2.0 * req.gamma_max,
    }
}

/// [`default_big_m`] for every request in the program.
pub fn default_big_ms(scenario: &Scenario) -> Vec<BigM> {
    scenario.program.requests.iter().map(|r| default_big_m(scenario, r)).collect()
}

/// One encoded constraint over the window energy, the reward variable, and
/// the three regime binaries:
/// `e_dr·E + gamma·γ + z[0]·z_1 + z[1]·z_2 + z[2]·z_3  (relation)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncRow {
    /// Stable short name (`zsum`, `edr_lo`, `lin_hi`, ...); the LP export
    /// suffixes it with the request number.
    pub tag: &'static str,
    pub e_dr: f64,
    pub gamma: f64,
    pub z: [f64; 3],
    pub relation: Relation,
    pub rhs: f64,
}

/// Mixed-integer encoding of one request's reward rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    /// Exactly nine rows: the regime-sum equality, the two-sided energy
    /// sandwich, and a two-sided reward window per regime.
    pub rows: Vec<EncRow>,
    /// Bounds for the reward variable.
    pub gamma_lower: f64,
    pub gamma_upper: f64,
}

/// Encodes one request's reward rule with indicator binaries.
///
/// Exactly one binary is forced to 1 (the regime sum is an equality: with
/// all three indicators at 0 the energy sandwich would pin the window
/// energy to 0 while every reward window stays open, and a maximizer
/// would exploit that spurious point). The active indicator selects which
/// threshold pair brackets the energy and which window pins the reward;
/// the inactive windows are slacked by the big-M constants.
///
/// The linear-regime window compares the reward against a sloped function
/// of the window energy, so its slack must absorb reward and energy
/// magnitudes at once; it gets its own widened constant instead of the
/// plain reward constant.
pub fn encode_bigm(req: &DrRequest, big_m: &BigM) -> Encoding {
    let me = big_m.m_energy;
    let mr = big_m.m_reward;
    let slope = req.slope();
    let ml = mr + 2.0 * slope.abs() * me;
    let rows = vec![
        EncRow {
            tag: "zsum",
            e_dr: 0.0,
            gamma: 0.0,
            z: [1.0, 1.0, 1.0],
            relation: Relation::Eq,
            rhs: 1.0,
        },
        // -M z_1 + e_lo z_2 + e_hi z_3 <= E <= e_lo z_1 + e_hi z_2 + M z_3
        EncRow {
            tag: "edr_lo",
            e_dr: 1.0,
            gamma: 0.0,
            z: [me, -req.e_lo, -req.e_hi],
            relation: Relation::Ge,
            rhs: 0.0,
        },
        EncRow {
            tag: "edr_hi",
            e_dr: 1.0,
            gamma: 0.0,
            z: [-req.e_lo, -req.e_hi, -me],
            relation: Relation::Le,
            rhs: 0.0,
        },
        // |γ - γ_max| <= M (1 - z_3)
        EncRow {
            tag: "abv_lo",
            e_dr: 0.0,
            gamma: 1.0,
            z: [0.0, 0.0, -mr],
            relation: Relation::Ge,
            rhs: req.gamma_max - mr,
        },
        EncRow {
            tag: "abv_hi",
            e_dr: 0.0,
            gamma: 1.0,
            z: [0.0, 0.0, mr],
            relation: Relation::Le,
            rhs: req.gamma_max + mr,
        },
        // |γ - slope (E - e_lo)| <= M (1 - z_2)
        EncRow {
            tag: "lin_lo",
            e_dr: -slope,
            gamma: 1.0,
            z: [0.0, -ml, 0.0],
            relation: Relation::Ge,
            rhs: -slope * req.e_lo - ml,
        },
        EncRow {
            tag: "lin_hi",
            e_dr: -slope,
            gamma: 1.0,
            z: [0.0, ml, 0.0],
            relation: Relation::Le,
            rhs: -slope * req.e_lo + ml,
        },
        // |γ| <= M (1 - z_1)
        EncRow {
            tag: "blw_lo",
            e_dr: 0.0,
            gamma: 1.0,
            z: [-mr, 0.0, 0.0],
            relation: Relation::Ge,
            rhs: -mr,
        },
        EncRow {
            tag: "blw_hi",
            e_dr: 0.0,
            gamma: 1.0,
            z: [mr, 0.0, 0.0],
            relation: Relation::Le,
            rhs: mr,
        },
    ];
    Encoding { rows, gamma_lower: 0.0, gamma_upper: req.gamma_max }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{supplied} big-M values supplied for {requests} requests")]
    BigMCount { supplied: usize, requests: usize },
    #[error(transparent)]
    Baseline(#[from] StandaloneError),
}

/// Accumulates one logical LP line, wrapping long expressions onto
/// continuation lines so the output stays diff-friendly.
struct LineBuf {
    out: String,
    line: String,
    any_term: bool,
}

const WRAP_COLUMN: usize = 78;

impl LineBuf {
    fn new() -> Self {
        LineBuf { out: String::new(), line: String::new(), any_term: false }
    }

    fn raw(&mut self, text: &str) {
        debug_assert!(self.line.is_empty());
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn begin(&mut self, label: &str) {
        debug_assert!(self.line.is_empty());
        self.line.push(' ');
        self.line.push_str(label);
        self.line.push(':');
        self.any_term = false;
    }

    fn push_piece(&mut self, piece: &str) {
        if self.line.len() + piece.len() > WRAP_COLUMN && !self.line.is_empty() {
            self.out.push_str(&self.line);
            self.out.push('\n');
            self.line.clear();
            self.line.push(' ');
        }
        self.line.push_str(piece);
    }

    fn term(&mut self, coef: f64, name: &str) {
        if coef == 0.0 {
            return;
        }
        let piece = if self.any_term {
            let sign = if coef < 0.0 { '-' } else { '+' };
            format!(" {} {} {}", sign, format_num(coef.abs()), name)
        } else if coef < 0.0 {
            format!(" -{} {}", format_num(coef.abs()), name)
        } else {
            format!(" {} {}", format_num(coef), name)
        };
        self.any_term = true;
        self.push_piece(&piece);
    }

    /// Emits a literal zero term; LP expressions may not be empty.
    fn zero_term(&mut self, name: &str) {
        if !self.any_term {
            self.push_piece(&format!(" 0 {name}"));
            self.any_term = true;
        }
    }

    fn end(&mut self, relation: Relation, rhs: f64) {
        let rel = match relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        self.push_piece(&format!(" {} {}", rel, format_num(rhs)));
        self.end_expr();
    }

    fn end_expr(&mut self) {
        self.out.push_str(&self.line);
        self.out.push('\n');
        self.line.clear();
    }
}

/// Shortest decimal form; integral values drop the trailing ".0" so the
/// file reads like hand-written LP input.
fn format_num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn var_eg(u: usize, t: usize) -> String {
    format!("eg_{u}_{t}")
}
fn var_ec(u: usize, t: usize) -> String {
    format!("ec_{u}_{t}")
}
fn var_ed(u: usize, t: usize) -> String {
    format!("ed_{u}_{t}")
}
fn var_soc(u: usize, t: usize) -> String {
    format!("soc_{u}_{t}")
}
fn var_gam(j: usize) -> String {
    format!("gam_{j}")
}
fn var_z(j: usize, k: usize) -> String {
    format!("z_{j}_{k}")
}

/// Emits every entity's sale-profit term (grid revenue minus storage
/// operating cost) into the current expression.
fn psi_terms(buf: &mut LineBuf, scenario: &Scenario) {
    for (ui, e) in scenario.entities.iter().enumerate() {
        let u = ui + 1;
        for t in 0..scenario.grid.slot_count {
            buf.term(e.sell_price[t], &var_eg(u, t));
        }
        for t in 0..scenario.grid.slot_count {
            buf.term(-e.bess.storage_price * e.bess.eta_c, &var_ec(u, t));
        }
        for t in 0..scenario.grid.slot_count {
            buf.term(-e.bess.storage_price / e.bess.eta_d, &var_ed(u, t));
        }
    }
}

/// Writes the full community problem (sale profits, storage dynamics,
/// balance and no-grid-charging rows, the profit floor, and every
/// request's big-M encoding) as LP-format text.
///
/// Variable names are `eg_u_t`, `ec_u_t`, `ed_u_t`, `soc_u_t` with 1-based
/// entity numbers and 0-based slots, plus `gam_j` and `z_j_k` with 1-based
/// request and regime numbers. Baselines for the profit floor are computed
/// internally. The output is deterministic byte for byte.
pub fn export_milp(
    scenario: &Scenario,
    objective: Objective,
    big_m: &[BigM],
) -> Result<String, ExportError> {
    let requests = &scenario.program.requests;
    if big_m.len() != requests.len() {
        return Err(ExportError::BigMCount { supplied: big_m.len(), requests: requests.len() });
    }
    let t_count = scenario.grid.slot_count;
    let alpha = scenario.program.alpha;
    let baseline_total: f64 = standalone::solve_all(scenario)?
        .iter()
        .map(|r| r.profit)
        .sum();

    let mut buf = LineBuf::new();
    buf.raw("\\ Day-ahead community dispatch with price-volume demand response");
    buf.raw(&format!("\\ objective: {objective}"));
    buf.raw("Maximize");
    buf.begin("obj");
    match objective {
        Objective::Entities => {
            psi_terms(&mut buf, scenario);
            for j in 1..=requests.len() {
                buf.term(alpha, &var_gam(j));
            }
        }
        Objective::Manager => {
            for j in 1..=requests.len() {
                buf.term(1.0 - alpha, &var_gam(j));
            }
        }
    }
    buf.zero_term(&var_eg(1, 0));
    buf.end_expr();

    buf.raw("Subject To");
    for (ui, e) in scenario.entities.iter().enumerate() {
        let u = ui + 1;
        let b = &e.bess;
        for t in 0..t_count {
            buf.begin(&format!("dyn_{u}_{t}"));
            buf.term(1.0, &var_soc(u, t + 1));
            buf.term(-1.0, &var_soc(u, t));
            buf.term(-b.eta_c, &var_ec(u, t));
            buf.term(1.0 / b.eta_d, &var_ed(u, t));
            buf.end(Relation::Eq, 0.0);
        }
        for t in 0..t_count {
            buf.begin(&format!("bal_{u}_{t}"));
            buf.term(1.0, &var_eg(u, t));
            buf.term(1.0, &var_ec(u, t));
            buf.term(-1.0, &var_ed(u, t));
            buf.end(Relation::Eq, e.gen_forecast[t]);
        }
        for t in 0..t_count {
            buf.begin(&format!("chg_{u}_{t}"));
            buf.term(1.0, &var_ec(u, t));
            buf.end(Relation::Le, e.gen_forecast[t]);
        }
        buf.begin(&format!("soc0_{u}"));
        buf.term(1.0, &var_soc(u, 0));
        buf.end(Relation::Eq, b.soc_initial);
        buf.begin(&format!("socT_{u}"));
        buf.term(1.0, &var_soc(u, t_count));
        buf.end(Relation::Eq, b.soc_final);
    }

    buf.begin("floor");
    psi_terms(&mut buf, scenario);
    for j in 1..=requests.len() {
        buf.term(alpha, &var_gam(j));
    }
    buf.zero_term(&var_eg(1, 0));
    buf.end(Relation::Ge, baseline_total);

    for (ji, (req, m)) in requests.iter().zip(big_m).enumerate() {
        let j = ji + 1;
        // Passive net injection over the window; the encoding's energy
        // variable expands to the schedulable sales plus this constant,
        // which moves to the right-hand side.
        let passive: f64 =
            req.interval.slots().map(|t| scenario.non_sched_gen[t] - scenario.loads[t]).sum();
        for row in &encode_bigm(req, m).rows {
            buf.begin(&format!("{}_{j}", row.tag));
            if row.e_dr != 0.0 {
                for u in 1..=scenario.entities.len() {
                    for t in req.interval.slots() {
                        buf.term(row.e_dr, &var_eg(u, t));
                    }
                }
            }
            buf.term(row.gamma, &var_gam(j));
            for (k, &coef) in row.z.iter().enumerate() {
                buf.term(coef, &var_z(j, k + 1));
            }
            buf.end(row.relation, row.rhs - row.e_dr * passive);
        }
    }

    buf.raw("Bounds");
    for (ui, e) in scenario.entities.iter().enumerate() {
        let u = ui + 1;
        for t in 0..t_count {
            buf.raw(&format!(" ec_{u}_{t} <= {}", format_num(e.bess.max_charge)));
        }
        for t in 0..t_count {
            buf.raw(&format!(" ed_{u}_{t} <= {}", format_num(e.bess.max_discharge)));
        }
        for t in 0..=t_count {
            buf.raw(&format!(" soc_{u}_{t} <= {}", format_num(e.bess.capacity)));
        }
    }
    for (ji, req) in requests.iter().enumerate() {
        buf.raw(&format!(" gam_{} <= {}", ji + 1, format_num(req.gamma_max)));
    }

    if !requests.is_empty() {
        buf.raw("Binary");
        for j in 1..=requests.len() {
            for k in 1..=3 {
                buf.raw(&format!(" z_{j}_{k}"));
            }
        }
    }
    buf.raw("End");
    Ok(buf.out)
}
