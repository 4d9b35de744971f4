//! Reward redistribution among entities (the pipeline's third step).
//!
//! The community optimum fixes total sale profit and the entity share of
//! the rewards, but not who pockets what: entities whose flexibility was
//! spent on the program would end up below their standalone profit if
//! everyone just kept their own sales. The settlement closes that gap by
//! splitting the reward pot so every entity's final profit scales its
//! standalone profit by one common growth ratio.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How the reward pot is split. The interface leaves room for other
/// policies; only the proportional rule ships.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedistributionRule {
    /// Every entity's final profit is `(1 + rho)` times its standalone
    /// profit, with one `rho` across the community.
    #[default]
    ProportionalToBaseline,
}

#[derive(Debug, Error)]
pub enum SettlementError {
    #[error("expected one sale profit per baseline ({baselines}), got {profits}")]
    LengthMismatch { baselines: usize, profits: usize },
    #[error(
        "total baseline profit {total} is not positive, so the proportional growth ratio \
         is undefined; this rule needs entities that earn money on their own (check the \
         sale prices and forecasts, or settle the rewards under a different policy)"
    )]
    NonPositiveBaseline { total: f64 },
    #[error(
        "sale profits plus the entity reward share come to {achieved}, below the baseline \
         total {baseline}; the community optimizer guarantees at least the baseline, so \
         these inputs do not belong to one valid solve"
    )]
    FloorViolated { achieved: f64, baseline: f64 },
}

/// One entity's line in the settlement.
#[derive(Debug, Clone, Serialize)]
pub struct EntitySettlement {
    /// Standalone profit, the entity's floor.
    pub baseline: f64,
    /// Sale profit under the community schedule.
    pub psi: f64,
    /// Reward share received; negative when the community schedule
    /// already pays the entity more than its grown baseline.
    pub xi: f64,
    /// Final profit, sale plus reward share.
    pub profit: f64,
    /// Gain over the baseline.
    pub delta: f64,
}

/// The day's reward split.
#[derive(Debug, Clone, Serialize)]
pub struct Settlement {
    /// Entity share of the rewards, `alpha` times the reward total.
    pub xi_total: f64,
    /// Common growth ratio of every entity's profit over its baseline.
    pub rho: f64,
    /// Per-entity lines, in input order.
    pub entities: Vec<EntitySettlement>,
}

impl Settlement {
    /// True when some entity receives a negative reward share; reports
    /// call this out because the share is a transfer, not a clamp.
    pub fn has_negative_xi(&self) -> bool {
        self.entities.iter().any(|e| e.xi < 0.0)
    }
}

/// Tolerance on the profit-floor precondition, matching what the
/// community optimizer guarantees.
const FLOOR_TOL: f64 = 1e-6;

/// Splits the reward pot over the entities.
///
/// `baselines` are the standalone profits, `psi` the sale profits under
/// the community schedule, `gamma` the per-request rewards, and `alpha`
/// the entity share. The inputs must come from one solve: the floor
/// precondition and the positive-baseline requirement are checked, not
/// assumed.
pub fn settle(
    baselines: &[f64],
    psi: &[f64],
    gamma: &[f64],
    alpha: f64,
    rule: RedistributionRule,
) -> Result<Settlement, SettlementError> {
    if baselines.len() != psi.len() {
        return Err(SettlementError::LengthMismatch {
            baselines: baselines.len(),
            profits: psi.len(),
        });
    }
    let baseline_total: f64 = baselines.iter().sum();
    if baseline_total <= 0.0 {
        return Err(SettlementError::NonPositiveBaseline { total: baseline_total });
    }
    let psi_total: f64 = psi.iter().sum();
    let xi_total: f64 = alpha * gamma.iter().sum::<f64>();
    let achieved = psi_total + xi_total;
    if achieved < baseline_total - FLOOR_TOL * (1.0 + baseline_total.abs()) {
        return Err(SettlementError::FloorViolated { achieved, baseline: baseline_total });
    }
    let RedistributionRule::ProportionalToBaseline = rule;
    let rho = (achieved - baseline_total) / baseline_total;
    let entities = baselines
        .iter()
        .zip(psi)
        .map(|(&baseline, &psi)| {
            let profit = (1.0 + rho) * baseline;
            EntitySettlement { baseline, psi, xi: profit - psi, profit, delta: rho * baseline }
        })
        .collect();
    Ok(Settlement { xi_total, rho, entities })
}
