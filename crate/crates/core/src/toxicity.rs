//! Marginal effect of liquidation on position health, and the LTV
//! frontier separating benign from toxic liquidations.
//!
//! Liquidating `da` of debt at bonus `i` against a market with penalty
//! factor `λ` changes health at the rate
//!
//! ```text
//! dh/da = (v/q) · (c/q − (1+i)·λ)
//! ```
//!
//! The first term is the relief from shrinking the debt; the second is
//! the collateral drained per unit repaid once price impact is marked to
//! market. A liquidation is *toxic* when `dh/da < 0` — it pushes the
//! position further under water — which happens exactly when LTV exceeds
//! a frontier `ℓ*`:
//!
//! * constant bonus `i`:          `ℓ* = 1 / ((1+i)·λ)`
//! * health-linked bonus `i(h)`:  `ℓ* = (1 + i_max·v·λ) / ((1+i_max)·λ)`
//!
//! Setting the liquidation threshold itself at the frontier gives the
//! depth-only safety criterion `v ≤ 1/λ`: with a health-linked bonus
//! (zero at the boundary), positions crossing into liquidation start
//! benign regardless of `v` precisely when the market is deep enough.
//! Equality sits on the frontier and is classified non-toxic.

use crate::lending::{IncentivePolicy, Position, RiskParams};
use crate::market::PenaltyFactor;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToxicityError {
    /// Classification is only defined for positions at or past the
    /// liquidation boundary (`h ≤ 1`).
    #[error("position not liquidatable: health {health} > 1")]
    NotLiquidatable { health: f64 },
    /// The marginal analysis needs strictly positive collateral and debt.
    #[error("degenerate position: collateral value {collateral_value}, debt {debt}")]
    DegeneratePosition { collateral_value: f64, debt: f64 },
    #[error(transparent)]
    Lending(#[from] crate::lending::LendingError),
}

/// Health change per unit of debt repaid, at the current state.
///
/// `dh/da = (v/q)·(c/q − (1+i)·λ)`. Requires `c > 0`, `q > 0`,
/// `i ≥ 0`; the sign decides toxicity.
pub fn health_differential(
    collateral_value: f64,
    debt: f64,
    lltv: f64,
    bonus: f64,
    lambda: PenaltyFactor,
) -> f64 {
    assert!(
        collateral_value > 0.0 && debt > 0.0 && bonus >= 0.0,
        "health_differential needs c > 0, q > 0, i >= 0 (got c = {collateral_value}, q = {debt}, i = {bonus})"
    );
    (lltv / debt) * (collateral_value / debt - (1.0 + bonus) * lambda.value())
}

/// Toxicity frontier for a constant bonus: `ℓ* = 1/((1+i)·λ)`.
///
/// LTV above this makes every marginal liquidation reduce health. With no
/// impact (`λ = 1`) this is `1/(1+i)` exactly.
pub fn constant_bonus_frontier(bonus: f64, lambda: PenaltyFactor) -> f64 {
    assert!(bonus >= 0.0, "bonus must be non-negative, got {bonus}");
    1.0 / ((1.0 + bonus) * lambda.value())
}

/// Toxicity frontier for a health-linked bonus
/// `i(h) = i_max·clamp(1−h, 0, 1)`:
///
/// `ℓ* = (1 + i_max·v·λ) / ((1+i_max)·λ)`.
///
/// Always at or above the constant-bonus frontier at the same `i_max`:
/// fading the bonus out near the boundary widens the benign region.
pub fn health_linked_frontier(i_max: f64, lltv: f64, lambda: PenaltyFactor) -> f64 {
    assert!(
        i_max >= 0.0 && lltv > 0.0 && lltv < 1.0,
        "health_linked_frontier needs i_max >= 0 and v in (0, 1), got i_max = {i_max}, v = {lltv}"
    );
    (1.0 + i_max * lltv * lambda.value()) / ((1.0 + i_max) * lambda.value())
}

/// Largest liquidation LTV for which positions *entering* liquidation do
/// so benignly under a health-linked bonus: `v ≤ 1/λ`.
///
/// At the boundary `h = 1` the health-linked bonus is zero, so the sign
/// of `dh/da` there depends only on market depth — not on the bonus cap.
pub fn max_safe_lltv(lambda: PenaltyFactor) -> f64 {
    1.0 / lambda.value()
}

/// Verdict on a marginal liquidation at a given state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToxicityVerdict {
    /// True when a marginal liquidation strictly reduces health.
    pub toxic: bool,
    /// `dh/da` at this state, with the bonus evaluated at current health.
    pub dh_per_da: f64,
    /// The frontier `ℓ*` the position's LTV was compared against.
    pub threshold_ltv: f64,
}

/// Classify a marginal liquidation as toxic or benign.
///
/// The bonus is evaluated at the pre-liquidation health; the verdict
/// compares LTV against the policy's frontier. `toxic ⇔ dh/da < 0 ⇔
/// ℓ > ℓ*`, with equality (the frontier itself) classified non-toxic.
/// Defined for liquidatable-or-boundary positions (`h ≤ 1`).
pub fn classify(
    position: &Position,
    params: &RiskParams,
    policy: &IncentivePolicy,
    lambda: PenaltyFactor,
) -> Result<ToxicityVerdict, ToxicityError> {
    classify_with_tolerance(position, params, policy, lambda, 0.0)
}

/// [`classify`] with an explicit tolerance band on the frontier
/// comparison: LTV within `band` of `ℓ*` is treated as non-toxic. The
/// default comparison is exact (`band = 0`).
pub fn classify_with_tolerance(
    position: &Position,
    params: &RiskParams,
    policy: &IncentivePolicy,
    lambda: PenaltyFactor,
    band: f64,
) -> Result<ToxicityVerdict, ToxicityError> {
    let c = position.collateral_value();
    let q = position.debt();
    if c <= 0.0 || q <= 0.0 {
        return Err(ToxicityError::DegeneratePosition {
            collateral_value: c,
            debt: q,
        });
    }
    let h = position.health(params)?;
    if h > 1.0 {
        return Err(ToxicityError::NotLiquidatable { health: h });
    }
    let ltv = position.ltv()?;
    let bonus = policy.incentive(h);
    let dh_per_da = health_differential(c, q, params.lltv(), bonus, lambda);
    let threshold_ltv = match policy {
        IncentivePolicy::Constant { i_max } => constant_bonus_frontier(*i_max, lambda),
        IncentivePolicy::HealthLinked { i_max } => {
            health_linked_frontier(*i_max, params.lltv(), lambda)
        }
    };
    Ok(ToxicityVerdict {
        toxic: ltv > threshold_ltv + band,
        dh_per_da,
        threshold_ltv,
    })
}
