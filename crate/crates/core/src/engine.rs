//! Discrete finite-step liquidation engine.
//!
//! One step repays `da` of debt: the liquidator seizes collateral worth
//! `(1+i)·da` at the pre-step price, sells it through the market's exact
//! execution primitive, and the position is re-marked at the post-trade
//! price. The bonus `i` is evaluated once per step at the pre-step
//! health. No price recovery happens between steps.
//!
//! [`run_spiral`] iterates steps under a [`StepRule`] until the position
//! recovers (`h ≥ 1`), the debt is repaid (to within a relative epsilon
//! of the starting debt), the collateral runs out (bad debt), or a step
//! cap is hit. When remaining collateral can no longer cover a step's
//! seizure, a final closing step seizes everything and records the
//! unbacked remainder as bad debt.
//!
//! [`liquidation_step`] itself enforces only mechanical preconditions
//! (`0 < da ≤ q`, seizure within the collateral). Eligibility — health
//! strictly below 1 — is checked at spiral entry, so analysis code can
//! probe marginal steps at or above the boundary.

use crate::lending::{IncentivePolicy, LendingError, Position, RiskParams};
use crate::market::{Market, MarketError};
use thiserror::Error;

/// Debt fraction (of the starting debt) below which the residual is
/// treated as fully repaid.
pub const Q_EPSILON_REL: f64 = 1e-9;

/// Default step cap for [`run_spiral`].
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    /// Spirals only start on liquidatable positions (`h < 1`).
    #[error("position not liquidatable: health {health} >= 1")]
    NotLiquidatable { health: f64 },
    /// Repay amounts must satisfy `0 < da ≤ q`.
    #[error("repay amount {da} out of range: debt is {debt}")]
    RepayOutOfRange { da: f64, debt: f64 },
    /// The step would seize more collateral than the position holds; the
    /// caller should close out via [`final_step`] instead.
    #[error("insufficient collateral: step needs {needed} units, position holds {available}")]
    InsufficientCollateral { needed: f64, available: f64 },
    /// Step-rule parameters out of range.
    #[error("invalid step rule: {reason}")]
    InvalidStepRule { reason: String },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Lending(#[from] LendingError),
}

/// How much debt each spiral step repays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Repay a fixed fraction `η ∈ (0, 1]` of the *current* debt.
    FixedFraction(f64),
    /// Repay a fixed amount (capped at the remaining debt).
    FixedAmount(f64),
}

impl StepRule {
    pub fn fixed_fraction(eta: f64) -> Result<Self, EngineError> {
        if !eta.is_finite() || eta <= 0.0 || eta > 1.0 {
            return Err(EngineError::InvalidStepRule {
                reason: format!("fraction {eta} must lie in (0, 1]"),
            });
        }
        Ok(StepRule::FixedFraction(eta))
    }

    pub fn fixed_amount(amount: f64) -> Result<Self, EngineError> {
        if !amount.is_finite() || amount <= 0.0 {
            return Err(EngineError::InvalidStepRule {
                reason: format!("amount {amount} must be positive"),
            });
        }
        Ok(StepRule::FixedAmount(amount))
    }

    /// The repay amount for a position with current debt `q`.
    pub fn repay_amount(&self, debt: f64) -> f64 {
        match self {
            StepRule::FixedFraction(eta) => eta * debt,
            StepRule::FixedAmount(amount) => amount.min(debt),
        }
    }
}

/// Everything observable about one executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidationStepResult {
    /// Debt repaid.
    pub da: f64,
    /// Collateral units seized (worth `(1+i)·da` at the pre-step price).
    pub ds: f64,
    /// Debt tokens realised by selling the seizure.
    pub proceeds: f64,
    /// Bonus applied, evaluated at the pre-step health.
    pub i_applied: f64,
    pub h_before: f64,
    /// Health after the step; `+∞` once the debt is fully repaid.
    pub h_after: f64,
    /// Penalty factor at the pre-step state.
    pub lambda_before: f64,
    pub position_after: Position,
    pub market_after: Market,
}

impl LiquidationStepResult {
    /// Liquidator's profit on the step: sale proceeds minus debt repaid.
    pub fn liquidator_pnl(&self) -> f64 {
        self.proceeds - self.da
    }
}

/// Why a spiral stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpiralOutcome {
    /// Health recovered to `h ≥ 1`.
    Recovered,
    /// Debt fell to within `Q_EPSILON_REL` of zero.
    FullyRepaid,
    /// Collateral ran out with debt outstanding.
    BadDebt,
    /// Step cap reached first.
    MaxSteps,
}

/// Full record of a spiral run. `steps` is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralTrajectory {
    pub steps: Vec<LiquidationStepResult>,
    pub outcome: SpiralOutcome,
    /// Unbacked debt left at the end; positive only for
    /// [`SpiralOutcome::BadDebt`].
    pub bad_debt: f64,
}

impl SpiralTrajectory {
    pub fn final_position(&self) -> &Position {
        &self.steps.last().expect("trajectory has at least one step").position_after
    }

    pub fn final_market(&self) -> &Market {
        &self.steps.last().expect("trajectory has at least one step").market_after
    }

    /// Health at the end of the run; `+∞` once fully repaid, `0` once
    /// wiped out.
    pub fn final_health(&self, params: &RiskParams) -> f64 {
        match self.final_position().health(params) {
            Ok(h) => h,
            Err(LendingError::NoDebt) => f64::INFINITY,
            Err(_) => 0.0,
        }
    }
}

fn health_or_infinite(position: &Position, params: &RiskParams) -> Result<f64, EngineError> {
    match position.health(params) {
        Ok(h) => Ok(h),
        Err(LendingError::NoDebt) => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

/// Execute one partial liquidation repaying `da`.
///
/// Sequence: evaluate the bonus at the pre-step health, seize
/// `ds = (1+i)·da / P` collateral units at the pre-step price `P`, sell
/// them through the market, then re-mark the remaining collateral at the
/// post-trade price. Debt decreases by exactly `da`.
pub fn liquidation_step(
    position: &Position,
    params: &RiskParams,
    policy: &IncentivePolicy,
    market: &Market,
    da: f64,
) -> Result<LiquidationStepResult, EngineError> {
    let q = position.debt();
    if !da.is_finite() || da <= 0.0 || da > q {
        return Err(EngineError::RepayOutOfRange { da, debt: q });
    }
    let h_before = position.health(params)?;
    let price_before = market.price();
    let lambda_before = market
        .penalty_factor(position.collateral_value())
        .value();
    let i_applied = policy.incentive(h_before);
    let ds = (1.0 + i_applied) * da / price_before;
    let s = position.collateral_units();
    if ds > s {
        return Err(EngineError::InsufficientCollateral {
            needed: ds,
            available: s,
        });
    }
    let (proceeds, market_after) = market.sell_collateral(ds)?;
    let position_after = Position::new(s - ds, q - da, market_after.price())?;
    let h_after = health_or_infinite(&position_after, params)?;
    Ok(LiquidationStepResult {
        da,
        ds,
        proceeds,
        i_applied,
        h_before,
        h_after,
        lambda_before,
        position_after,
        market_after,
    })
}

/// Close out a position whose collateral cannot cover full repayment:
/// seize everything, repay what the seizure is worth at the pre-step
/// price net of the bonus (`da = s·P/(1+i)`), and leave the remainder
/// as bad debt.
pub fn final_step(
    position: &Position,
    params: &RiskParams,
    policy: &IncentivePolicy,
    market: &Market,
) -> Result<LiquidationStepResult, EngineError> {
    let q = position.debt();
    let s = position.collateral_units();
    let h_before = position.health(params)?;
    let price_before = market.price();
    let lambda_before = market
        .penalty_factor(position.collateral_value())
        .value();
    let i_applied = policy.incentive(h_before);
    let da = s * price_before / (1.0 + i_applied);
    if da > q {
        // Collateral would cover the whole debt; this is a routing bug.
        return Err(EngineError::RepayOutOfRange { da, debt: q });
    }
    let (proceeds, market_after) = market.sell_collateral(s)?;
    let position_after = Position::new(0.0, q - da, market_after.price())?;
    let h_after = health_or_infinite(&position_after, params)?;
    Ok(LiquidationStepResult {
        da,
        ds: s,
        proceeds,
        i_applied,
        h_before,
        h_after,
        lambda_before,
        position_after,
        market_after,
    })
}

/// Run liquidation steps until the position recovers, repays, defaults,
/// or `max_steps` is exhausted.
///
/// The starting position must be liquidatable (`h < 1` strictly).
/// Termination checks run after each step in precedence order: full
/// repayment (debt within `Q_EPSILON_REL` of the starting debt scale),
/// then recovery (`h ≥ 1`).
pub fn run_spiral(
    position: &Position,
    params: &RiskParams,
    policy: &IncentivePolicy,
    market: &Market,
    rule: &StepRule,
    max_steps: usize,
) -> Result<SpiralTrajectory, EngineError> {
    if max_steps == 0 {
        return Err(EngineError::InvalidStepRule {
            reason: "max_steps must be at least 1".into(),
        });
    }
    let h0 = position.health(params)?;
    if h0 >= 1.0 {
        return Err(EngineError::NotLiquidatable { health: h0 });
    }
    let q_epsilon = Q_EPSILON_REL * position.debt();

    let mut pos = position.clone();
    let mut market = market.clone();
    let mut h = h0;
    let mut steps = Vec::new();
    let mut outcome = SpiralOutcome::MaxSteps;

    for _ in 0..max_steps {
        let da = rule.repay_amount(pos.debt());
        let price = market.price();
        let i = policy.incentive(h);
        let ds_needed = (1.0 + i) * da / price;

        let result = if ds_needed > pos.collateral_units() {
            final_step(&pos, params, policy, &market)?
        } else {
            liquidation_step(&pos, params, policy, &market, da)?
        };
        let closed_out = result.ds >= pos.collateral_units();
        pos = result.position_after.clone();
        market = result.market_after.clone();
        h = result.h_after;
        steps.push(result);

        if pos.debt() <= q_epsilon {
            outcome = SpiralOutcome::FullyRepaid;
            break;
        }
        if closed_out && pos.collateral_units() == 0.0 {
            outcome = SpiralOutcome::BadDebt;
            break;
        }
        if h >= 1.0 {
            outcome = SpiralOutcome::Recovered;
            break;
        }
    }

    let bad_debt = if outcome == SpiralOutcome::BadDebt {
        pos.debt()
    } else {
        0.0
    };
    Ok(SpiralTrajectory {
        steps,
        outcome,
        bad_debt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toxicity::{classify, constant_bonus_frontier};
    use approx::assert_relative_eq;

    fn setup(
        q: f64,
        pool_reserve: f64,
        i_max: f64,
    ) -> (Position, RiskParams, IncentivePolicy, Market) {
        (
            Position::new(100.0, q, 1.0).unwrap(),
            RiskParams::new(0.8, i_max).unwrap(),
            IncentivePolicy::constant(i_max).unwrap(),
            Market::cpamm(pool_reserve, pool_reserve).unwrap(),
        )
    }

    #[test]
    fn deep_pool_step_improves_health() {
        let (pos, params, policy, market) = setup(95.0, 1e9, 0.05);
        let r = liquidation_step(&pos, &params, &policy, &market, 1.0).unwrap();
        assert_relative_eq!(r.ds, 1.05, max_relative = 1e-12);
        assert_eq!(r.position_after.debt(), 94.0);
        assert_relative_eq!(r.h_before, 0.8421052631578947, max_relative = 1e-12);
        // Essentially the zero-impact value 0.8·98.95/94.
        assert_relative_eq!(r.h_after, 0.8421276595744681, max_relative = 1e-6);
        assert!(r.h_after > r.h_before);
    }

    #[test]
    fn shallow_pool_step_degrades_health_matching_classification() {
        let (pos, params, policy, market) = setup(95.0, 1000.0, 0.05);
        let r = liquidation_step(&pos, &params, &policy, &market, 1.0).unwrap();
        assert!(r.h_after < r.h_before);

        let lambda = market.penalty_factor(pos.collateral_value());
        let verdict = classify(&pos, &params, &policy, lambda).unwrap();
        assert!(verdict.toxic);
        // ℓ = 0.95 is past the λ = 1.2 frontier.
        assert!(pos.ltv().unwrap() > constant_bonus_frontier(0.05, lambda));
    }

    #[test]
    fn step_conserves_flows() {
        let (pos, params, policy, market) = setup(95.0, 1000.0, 0.05);
        let y_before = match &market {
            Market::CpAmm(pool) => pool.y(),
            _ => unreachable!(),
        };
        let r = liquidation_step(&pos, &params, &policy, &market, 1.0).unwrap();
        let y_after = match &r.market_after {
            Market::CpAmm(pool) => pool.y(),
            _ => unreachable!(),
        };
        // Proceeds are exactly the pool's y-outflow; debt drops by da;
        // seizure is worth (1+i)·da at the pre-step price.
        assert_relative_eq!(y_before - y_after, r.proceeds, max_relative = 1e-12);
        assert_eq!(pos.debt() - r.position_after.debt(), r.da);
        assert_relative_eq!(r.ds * 1.0, (1.0 + r.i_applied) * r.da, max_relative = 1e-12);
    }

    #[test]
    fn step_rejects_bad_repay_amounts() {
        let (pos, params, policy, market) = setup(95.0, 1000.0, 0.05);
        for bad in [0.0, -1.0, 95.1, f64::NAN] {
            assert!(matches!(
                liquidation_step(&pos, &params, &policy, &market, bad),
                Err(EngineError::RepayOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn step_rejects_seizure_beyond_collateral() {
        // q = 95 at double price needs 2·(1+i)·da units; da = 95 wants
        // ~199.5 units against 100 held.
        let pos = Position::new(100.0, 95.0, 1.0).unwrap();
        let params = RiskParams::new(0.8, 0.05).unwrap();
        let policy = IncentivePolicy::constant(0.05).unwrap();
        let market = Market::cpamm(2000.0, 1000.0).unwrap(); // price 0.5
        assert!(matches!(
            liquidation_step(&pos, &params, &policy, &market, 95.0),
            Err(EngineError::InsufficientCollateral { .. })
        ));
    }

    #[test]
    fn final_step_books_the_shortfall() {
        let pos = Position::new(10.0, 20.0, 1.0).unwrap();
        let params = RiskParams::new(0.8, 0.0).unwrap();
        let policy = IncentivePolicy::constant(0.0).unwrap();
        let market = Market::cpamm(1e9, 1e9).unwrap();
        let r = final_step(&pos, &params, &policy, &market).unwrap();
        assert_relative_eq!(r.da, 10.0, max_relative = 1e-12);
        assert_eq!(r.position_after.collateral_units(), 0.0);
        assert_relative_eq!(r.position_after.debt(), 10.0, max_relative = 1e-9);

        let policy = IncentivePolicy::constant(0.1).unwrap();
        let params = RiskParams::new(0.8, 0.1).unwrap();
        let r = final_step(&pos, &params, &policy, &market).unwrap();
        assert_relative_eq!(r.da, 9.090909090909092, max_relative = 1e-12);
        assert_relative_eq!(r.position_after.debt(), 10.909090909090908, max_relative = 1e-9);
    }

    #[test]
    fn benign_spiral_recovers() {
        let (pos, params, policy, market) = setup(90.0, 1e8, 0.05);
        let rule = StepRule::fixed_fraction(0.01).unwrap();
        let t = run_spiral(&pos, &params, &policy, &market, &rule, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(t.outcome, SpiralOutcome::Recovered);
        assert!(t.final_health(&params) >= 1.0);
        assert_eq!(t.bad_debt, 0.0);
    }

    #[test]
    fn toxic_spiral_ends_in_bad_debt() {
        // Shallow pool (λ = 2) with LTV above any recovery frontier.
        let pos = Position::new(100.0, 110.0, 1.0).unwrap();
        let params = RiskParams::new(0.8, 0.05).unwrap();
        let policy = IncentivePolicy::constant(0.05).unwrap();
        let market = Market::cpamm(200.0, 200.0).unwrap();
        let rule = StepRule::fixed_fraction(0.01).unwrap();
        let t = run_spiral(&pos, &params, &policy, &market, &rule, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(t.outcome, SpiralOutcome::BadDebt);
        assert!(t.bad_debt > 0.0);
        assert_eq!(t.final_position().collateral_units(), 0.0);
        assert!(t.final_position().debt() > 0.0);
    }

    #[test]
    fn full_fraction_repays_in_one_step() {
        // η = 1 with ample collateral clears the debt immediately.
        let pos = Position::new(110.0, 100.0, 1.0).unwrap();
        let params = RiskParams::new(0.8, 0.05).unwrap();
        let policy = IncentivePolicy::constant(0.05).unwrap();
        let market = Market::cpamm(1e9, 1e9).unwrap();
        let rule = StepRule::fixed_fraction(1.0).unwrap();
        let t = run_spiral(&pos, &params, &policy, &market, &rule, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(t.outcome, SpiralOutcome::FullyRepaid);
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.final_position().debt(), 0.0);
        assert_eq!(t.final_health(&params), f64::INFINITY);
    }

    #[test]
    fn healthy_position_cannot_start_a_spiral() {
        let (pos, params, policy, market) = setup(50.0, 1e9, 0.05); // h = 1.6
        let rule = StepRule::fixed_fraction(0.01).unwrap();
        assert!(matches!(
            run_spiral(&pos, &params, &policy, &market, &rule, 100),
            Err(EngineError::NotLiquidatable { .. })
        ));
    }

    #[test]
    fn max_steps_caps_the_run() {
        let (pos, params, policy, market) = setup(95.0, 1e9, 0.05);
        let rule = StepRule::fixed_fraction(1e-6).unwrap();
        let t = run_spiral(&pos, &params, &policy, &market, &rule, 10).unwrap();
        assert_eq!(t.outcome, SpiralOutcome::MaxSteps);
        assert_eq!(t.steps.len(), 10);
    }

    #[test]
    fn fixed_amount_rule_caps_at_remaining_debt() {
        let rule = StepRule::fixed_amount(30.0).unwrap();
        assert_eq!(rule.repay_amount(100.0), 30.0);
        assert_eq!(rule.repay_amount(10.0), 10.0);
    }

    #[test]
    fn step_rule_validation() {
        assert!(StepRule::fixed_fraction(0.0).is_err());
        assert!(StepRule::fixed_fraction(1.5).is_err());
        assert!(StepRule::fixed_amount(0.0).is_err());
        assert!(StepRule::fixed_fraction(1.0).is_ok());
    }

    #[test]
    fn spiral_on_linear_market_runs() {
        let model =
            crate::market::LinearImpactModel::new(0.0, 1.0, 100_000.0).unwrap();
        let market = Market::linear(model, 1.0).unwrap();
        let pos = Position::new(100.0, 90.0, 1.0).unwrap();
        let params = RiskParams::new(0.8, 0.05).unwrap();
        let policy = IncentivePolicy::constant(0.05).unwrap();
        let rule = StepRule::fixed_fraction(0.01).unwrap();
        let t = run_spiral(&pos, &params, &policy, &market, &rule, DEFAULT_MAX_STEPS).unwrap();
        // φ·c = 1e-3: effectively deep, so the benign region applies.
        assert_eq!(t.outcome, SpiralOutcome::Recovered);
    }
}
