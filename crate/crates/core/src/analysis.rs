//! Brute-force verification of the closed-form toxicity results.
//!
//! Everything in this module treats the discrete liquidation engine as
//! ground truth and measures the analytic layer against it:
//!
//! * [`finite_difference_dh`] — the marginal health differential dh/da
//!   estimated from a single real engine step, no closed forms involved;
//! * [`locate_frontier`] — bisection on the sign of the finite
//!   difference to find the empirical toxicity frontier in LTV space,
//!   reported next to its analytic counterpart;
//! * [`boundary_audit`] — a scan across the liquidation threshold that
//!   checks the maximum safe liquidation threshold `1/λ` against engine
//!   behaviour exactly at the boundary;
//! * [`convergence_study`] — finite-difference error as a function of
//!   step size, confirming first-order convergence to the analytic
//!   differential;
//! * [`run_sweep`] — a deterministic grid sweep over market model,
//!   liquidation threshold, bonus size, market depth, and bonus policy,
//!   producing one row per cell with analytic and empirical frontiers
//!   plus the outcome of a spiral started just inside the toxic region.
//!
//! Probes are built around a fixed reference position: collateral worth
//! [`PROBE_COLLATERAL_VALUE`] at a unit mark price, with debt chosen to
//! hit a target LTV. Holding collateral value fixed keeps the penalty
//! factor `λ` constant across probes, so a bisection in LTV space sees a
//! stationary frontier.

pub mod suite;

use crate::engine::{self, EngineError, SpiralOutcome, StepRule};
use crate::lending::{IncentivePolicy, LendingError, PolicyKind, Position, RiskParams};
use crate::market::{LinearImpactModel, Market, MarketError};
use crate::toxicity;
use thiserror::Error;

/// Collateral value shared by all probe positions (units × mark price).
pub const PROBE_COLLATERAL_VALUE: f64 = 100.0;

/// Mark price shared by all probe positions.
pub const PROBE_PRICE: f64 = 1.0;

/// Errors surfaced by the verification layer.
#[derive(Debug, Error)]
pub enum AnalysisError {
    /// A bracketing interval did not straddle a sign change, so
    /// bisection cannot proceed.
    #[error(
        "no sign change in bracket [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}"
    )]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    /// A scalar input was outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The underlying engine refused a probe step.
    #[error(transparent)]
    Engine(#[from] EngineError),
    /// A probe position could not be constructed.
    #[error(transparent)]
    Lending(#[from] LendingError),
    /// A probe market could not be constructed.
    #[error(transparent)]
    Market(#[from] MarketError),
}

/// Builds a probe position holding collateral worth `collateral_value`
/// at the market's current price, with debt set so that the LTV is
/// exactly `ltv`.
///
/// Debt is computed from the realised collateral value (units × price)
/// rather than the requested one, so the LTV — and, at `ltv` equal to
/// the liquidation threshold, the health — is exact to the last bit even
/// when `collateral_value / price` rounds.
pub fn probe_position(
    market: &Market,
    collateral_value: f64,
    ltv: f64,
) -> Result<Position, AnalysisError> {
    if collateral_value <= 0.0 || !collateral_value.is_finite() {
        return Err(AnalysisError::InvalidParameter(format!(
            "probe collateral value must be positive and finite, got {collateral_value}"
        )));
    }
    if ltv <= 0.0 || !ltv.is_finite() {
        return Err(AnalysisError::InvalidParameter(format!(
            "probe LTV must be positive and finite, got {ltv}"
        )));
    }
    let price = market.price();
    let units = collateral_value / price;
    let realised_value = units * price;
    Ok(Position::new(units, ltv * realised_value, price)?)
}

/// Estimates dh/da at a state by executing one real liquidation step of
/// size `da` and differencing the health before and after.
///
/// This is a pure engine measurement: the step seizes collateral at the
/// policy's current bonus, sells it into the market, and re-marks the
/// remainder, exactly as a spiral would. The estimate carries an O(`da`)
/// discretisation bias, which [`convergence_study`] quantifies.
pub fn finite_difference_dh(
    position: &Position,
    params: &RiskParams,
    policy: &IncentivePolicy,
    market: &Market,
    da: f64,
) -> Result<f64, AnalysisError> {
    let step = engine::liquidation_step(position, params, policy, market, da)?;
    Ok((step.h_after - step.h_before) / da)
}

/// Outcome of an empirical frontier search.
#[derive(Debug, Clone)]
pub struct FrontierEstimate {
    /// Frontier LTV found by bisection on the finite-difference sign.
    pub empirical: f64,
    /// Closed-form frontier for the same policy and penalty factor.
    pub analytic: f64,
    /// `|empirical - analytic|`.
    pub abs_error: f64,
    /// Relative step size used for the finite-difference probes.
    pub eta: f64,
    /// Number of bisection iterations performed.
    pub iterations: u32,
}

/// Locates the toxicity frontier in LTV space by bisection.
///
/// At each probe LTV `ℓ` a fresh position with collateral value
/// `collateral_value` and debt `ℓ ·` value is placed against `market`,
/// and one engine step of size `da = eta · debt` is executed. Below the
/// frontier the step improves health (positive finite difference), above
/// it health degrades; bisection narrows the sign change to within
/// `tol`. The market itself is never mutated — every probe starts from
/// the same state.
///
/// The analytic frontier is computed from the same penalty factor the
/// market reports at `collateral_value`, using the constant-bonus or
/// health-linked closed form according to `policy`.
///
/// `bracket` must straddle the sign change: the finite difference must
/// be positive at `bracket.0` and negative at `bracket.1` (or the
/// reverse). Probes may lie at or above the liquidation threshold —
/// the step primitive is mechanical, so the search is free to explore
/// the region where the health-linked bonus fades to zero.
pub fn locate_frontier(
    params: &RiskParams,
    policy: &IncentivePolicy,
    market: &Market,
    collateral_value: f64,
    bracket: (f64, f64),
    eta: f64,
    tol: f64,
) -> Result<FrontierEstimate, AnalysisError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "probe step fraction must lie in (0, 1], got {eta}"
        )));
    }
    if tol <= 0.0 || !tol.is_finite() {
        return Err(AnalysisError::InvalidParameter(format!(
            "bisection tolerance must be positive and finite, got {tol}"
        )));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(AnalysisError::InvalidParameter(format!(
            "bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }

    let eval = |ltv: f64| -> Result<f64, AnalysisError> {
        let position = probe_position(market, collateral_value, ltv)?;
        let da = eta * position.debt();
        finite_difference_dh(&position, params, policy, market, da)
    };

    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;

    let lambda = market.penalty_factor(collateral_value);
    let analytic = match policy.kind() {
        PolicyKind::Constant => toxicity::constant_bonus_frontier(policy.i_max(), lambda),
        PolicyKind::HealthLinked => {
            toxicity::health_linked_frontier(policy.i_max(), params.lltv(), lambda)
        }
    };

    let mut iterations = 0u32;
    let empirical = if f_lo == 0.0 {
        lo
    } else if f_hi == 0.0 {
        hi
    } else if f_lo.signum() == f_hi.signum() {
        return Err(AnalysisError::NoSignChange { lo, hi, f_lo, f_hi });
    } else {
        let benign_sign = f_lo.signum();
        // 2^-200 of any sensible bracket width is far below f64 spacing,
        // so the iteration cap only guards against a degenerate tol.
        while hi - lo > tol && iterations < 200 {
            let mid = 0.5 * (lo + hi);
            let f_mid = eval(mid)?;
            if f_mid == 0.0 {
                lo = mid;
                hi = mid;
                iterations += 1;
                break;
            }
            if f_mid.signum() == benign_sign {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        0.5 * (lo + hi)
    };

    Ok(FrontierEstimate {
        empirical,
        analytic,
        abs_error: (empirical - analytic).abs(),
        eta,
        iterations,
    })
}

/// One row of a boundary audit: behaviour of a single liquidation step
/// taken exactly at the liquidation threshold `h = 1`.
#[derive(Debug, Clone)]
pub struct BoundaryAuditRow {
    /// Liquidation threshold probed (position LTV equals it, so h = 1).
    pub lltv: f64,
    /// Penalty factor of the market at the probe collateral value.
    pub lambda: f64,
    /// Finite-difference dh/da measured at the boundary.
    pub dh_rate: f64,
    /// Whether the closed form `lltv ≤ 1/λ` calls the threshold safe.
    pub safe_analytic: bool,
    /// Whether the engine step at the boundary kept health from falling.
    pub safe_empirical: bool,
}

/// Audits the maximum safe liquidation threshold `1/λ`.
///
/// For each threshold in `lltv_grid`, a position is placed exactly at
/// the liquidation boundary (LTV = threshold, so h = 1) under a
/// health-linked bonus policy — whose bonus vanishes at the boundary —
/// and one engine step measures whether health holds or degrades. The
/// closed form predicts safety exactly when the threshold does not
/// exceed `1/λ`.
pub fn boundary_audit(
    market: &Market,
    collateral_value: f64,
    lltv_grid: &[f64],
    i_max: f64,
    eta: f64,
) -> Result<Vec<BoundaryAuditRow>, AnalysisError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "probe step fraction must lie in (0, 1], got {eta}"
        )));
    }
    let policy = IncentivePolicy::health_linked(i_max)?;
    let lambda = market.penalty_factor(collateral_value);
    let mut rows = Vec::with_capacity(lltv_grid.len());
    for &lltv in lltv_grid {
        let params = RiskParams::new(lltv, i_max)?;
        let position = probe_position(market, collateral_value, lltv)?;
        let da = eta * position.debt();
        let dh_rate = finite_difference_dh(&position, &params, &policy, market, da)?;
        rows.push(BoundaryAuditRow {
            lltv,
            lambda: lambda.value(),
            dh_rate,
            safe_analytic: lltv <= toxicity::max_safe_lltv(lambda),
            safe_empirical: dh_rate >= 0.0,
        });
    }
    Ok(rows)
}

/// One step size in a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    /// Relative step size (repay amount as a fraction of debt).
    pub eta: f64,
    /// Finite-difference estimate of dh/da at this step size.
    pub fd: f64,
    /// Closed-form dh/da at the same state.
    pub analytic: f64,
    /// `|fd - analytic|`.
    pub abs_error: f64,
}

/// Result of a convergence study: error rows plus a fitted order.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    /// One row per step size, in the order supplied.
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of ln(error) against ln(eta); ≈ 1 for a
    /// first-order method.
    pub fitted_order: f64,
}

/// Measures how the finite-difference health differential converges to
/// the closed form as the step size shrinks.
///
/// For each `eta`, a single engine step of size `eta · debt` is taken
/// from `position` and the resulting dh/da estimate is compared with the
/// analytic differential evaluated at the same state — bonus at the
/// current health, penalty factor at the current collateral value. The
/// discretisation bias of the one-sided difference is first order in
/// `eta`, with an exact deep-pool coefficient of `analytic · η/(1−η)`,
/// so successive decade steps shrink the error by almost exactly 10×.
pub fn convergence_study(
    position: &Position,
    params: &RiskParams,
    policy: &IncentivePolicy,
    market: &Market,
    etas: &[f64],
) -> Result<ConvergenceStudy, AnalysisError> {
    if etas.is_empty() {
        return Err(AnalysisError::InvalidParameter(
            "convergence study needs at least one step size".into(),
        ));
    }
    let c = position.collateral_value();
    let q = position.debt();
    let h = position.health(params)?;
    let bonus = policy.incentive(h);
    let lambda = market.penalty_factor(c);
    let analytic = toxicity::health_differential(c, q, params.lltv(), bonus, lambda);

    let mut rows = Vec::with_capacity(etas.len());
    for &eta in etas {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(AnalysisError::InvalidParameter(format!(
                "probe step fraction must lie in (0, 1], got {eta}"
            )));
        }
        let fd = finite_difference_dh(position, params, policy, market, eta * q)?;
        rows.push(ConvergenceRow {
            eta,
            fd,
            analytic,
            abs_error: (fd - analytic).abs(),
        });
    }

    Ok(ConvergenceStudy {
        fitted_order: fit_log_log_slope(&rows),
        rows,
    })
}

/// Least-squares slope of ln(abs_error) against ln(eta). Rows with an
/// exact zero error carry no information about the order and are
/// skipped; with fewer than two usable rows the slope is NaN.
fn fit_log_log_slope(rows: &[ConvergenceRow]) -> f64 {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_error > 0.0)
        .map(|r| (r.eta.ln(), r.abs_error.ln()))
        .collect();
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    sxy / sxx
}

/// Market model axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Constant-product pool; depth is quoted as reserve-to-collateral
    /// ratio `y / c`.
    CpAmm,
    /// Linear impact curve; depth is mapped to the penalty-equivalent
    /// curve with `φ · c = 2 / depth`, so both models share a `λ` axis.
    Linear,
}

impl ModelKind {
    /// Stable lowercase label used in tabular output.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::CpAmm => "cpamm",
            ModelKind::Linear => "linear",
        }
    }
}

/// Specification of a sweep grid. Cells are visited in nested order:
/// model, then liquidation threshold, then maximum bonus, then depth,
/// then policy — the innermost axis varying fastest.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Market models to sweep.
    pub models: Vec<ModelKind>,
    /// Liquidation thresholds (each in (0, 1)).
    pub lltv: Vec<f64>,
    /// Maximum liquidation bonuses (each ≥ 0).
    pub max_bonus: Vec<f64>,
    /// Market depths as reserve-to-collateral ratios (each > 0).
    pub depth: Vec<f64>,
    /// Bonus policies to sweep.
    pub policies: Vec<PolicyKind>,
    /// Relative step size for finite-difference probes.
    pub eta: f64,
    /// Bisection tolerance for empirical frontiers.
    pub tol: f64,
}

impl SweepSpec {
    /// A small single-model grid: three thresholds × three bonuses ×
    /// three depths under a constant bonus policy, 27 cells.
    pub fn smoke() -> Self {
        SweepSpec {
            models: vec![ModelKind::CpAmm],
            lltv: vec![0.5, 0.7, 0.8],
            max_bonus: vec![0.0, 0.05, 0.1],
            depth: vec![4.0, 10.0, 40.0],
            policies: vec![PolicyKind::Constant],
            eta: 1e-6,
            tol: 1e-8,
        }
    }
}

/// Input coordinates of one sweep cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub model: ModelKind,
    pub lltv: f64,
    pub max_bonus: f64,
    pub depth: f64,
    pub policy: PolicyKind,
}

/// Measured contents of one sweep cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    /// Penalty factor of the cell's market at the probe size.
    pub lambda: f64,
    /// Closed-form toxicity frontier. For a health-linked policy whose
    /// fade-out region lies entirely above the sign change (`lltv · λ >
    /// 1`) this is the pre-boundary crossing `1/λ`.
    pub frontier_analytic: f64,
    /// Frontier found by bisection on the engine's finite difference.
    pub frontier_empirical: f64,
    /// `|frontier_empirical - frontier_analytic|`.
    pub frontier_abs_error: f64,
    /// Closed-form maximum safe liquidation threshold `1/λ`.
    pub boundary_safe_analytic: f64,
    /// Threshold at which a boundary step stops improving health, found
    /// by bisection; NaN when the crossing lies outside (0.2, 0.9999) —
    /// in very deep markets every threshold in range is boundary-safe.
    pub boundary_safe_empirical: f64,
    /// Outcome of a spiral started at LTV `1.05 × lltv`.
    pub spiral_outcome: SpiralOutcome,
    /// Number of engine steps that spiral took.
    pub spiral_steps: usize,
    /// Health at the end of the spiral (∞ if fully repaid, 0 if the
    /// collateral was wiped out).
    pub spiral_final_health: f64,
    /// Debt left unbacked when the spiral ended in bad debt, else 0.
    pub spiral_bad_debt: f64,
}

/// One sweep row: cell coordinates plus either a result or the error
/// that prevented one.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub result: Result<CellResult, String>,
}

/// Completed sweep: every cell of the grid in deterministic order.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub rows: Vec<SweepRow>,
}

/// Fraction of debt repaid per step by sweep spirals.
const SWEEP_SPIRAL_ETA: f64 = 0.01;

/// Step cap for sweep spirals.
const SWEEP_SPIRAL_MAX_STEPS: usize = 100_000;

/// Builds the probe market for one sweep cell: unit price, depth quoted
/// as reserve-to-collateral ratio against [`PROBE_COLLATERAL_VALUE`].
fn cell_market(model: ModelKind, depth: f64) -> Result<Market, AnalysisError> {
    if depth <= 0.0 || !depth.is_finite() {
        return Err(AnalysisError::InvalidParameter(format!(
            "depth must be positive and finite, got {depth}"
        )));
    }
    let market = match model {
        ModelKind::CpAmm => {
            let reserve = depth * PROBE_COLLATERAL_VALUE;
            Market::cpamm(reserve, reserve)?
        }
        ModelKind::Linear => {
            // φ · c = 2 / depth matches the penalty factor of the
            // constant-product pool with the same depth ratio, so the
            // two models are directly comparable along the depth axis.
            let liquidity = 0.5 * depth * PROBE_COLLATERAL_VALUE;
            Market::linear(LinearImpactModel::new(0.0, 1.0, liquidity)?, PROBE_PRICE)?
        }
    };
    Ok(market)
}

/// Runs the full sweep. Infeasible cells (parameters out of domain, or
/// a frontier that escapes its bracket) carry a description of the
/// failure instead of aborting the grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepGrid, AnalysisError> {
    if spec.models.is_empty()
        || spec.lltv.is_empty()
        || spec.max_bonus.is_empty()
        || spec.depth.is_empty()
        || spec.policies.is_empty()
    {
        return Err(AnalysisError::InvalidParameter(
            "every sweep axis needs at least one value".into(),
        ));
    }
    let mut rows = Vec::new();
    for &model in &spec.models {
        for &lltv in &spec.lltv {
            for &max_bonus in &spec.max_bonus {
                for &depth in &spec.depth {
                    for &policy in &spec.policies {
                        let cell = SweepCell { model, lltv, max_bonus, depth, policy };
                        let result = run_cell(&cell, spec.eta, spec.tol)
                            .map_err(|e| e.to_string());
                        rows.push(SweepRow { cell, result });
                    }
                }
            }
        }
    }
    Ok(SweepGrid { rows })
}

fn run_cell(cell: &SweepCell, eta: f64, tol: f64) -> Result<CellResult, AnalysisError> {
    let params = RiskParams::new(cell.lltv, cell.max_bonus)?;
    let policy = IncentivePolicy::from_kind(cell.policy, cell.max_bonus)?;
    let market = cell_market(cell.model, cell.depth)?;
    let lambda = market.penalty_factor(PROBE_COLLATERAL_VALUE);

    // Closed-form frontier. The health-linked form assumes the bonus is
    // still fading at the crossing; when lltv · λ > 1 the crossing sits
    // below the liquidation threshold, where the bonus is clamped to
    // zero and the sign change is at 1/λ instead.
    let frontier_analytic = match cell.policy {
        PolicyKind::Constant => toxicity::constant_bonus_frontier(cell.max_bonus, lambda),
        PolicyKind::HealthLinked => {
            if cell.lltv * lambda.value() > 1.0 {
                toxicity::max_safe_lltv(lambda)
            } else {
                toxicity::health_linked_frontier(cell.max_bonus, cell.lltv, lambda)
            }
        }
    };

    let frontier = locate_frontier(
        &params,
        &policy,
        &market,
        PROBE_COLLATERAL_VALUE,
        (0.3, 1.4),
        eta,
        tol,
    )?;

    let boundary_safe_analytic = toxicity::max_safe_lltv(lambda);
    let boundary_safe_empirical =
        locate_boundary_crossing(&market, cell.max_bonus, eta, tol)?;

    // Spiral started 5% past the liquidation threshold, the canonical
    // "just became liquidatable" entry state.
    let spiral_ltv = 1.05 * cell.lltv;
    let position = probe_position(&market, PROBE_COLLATERAL_VALUE, spiral_ltv)?;
    let rule = StepRule::fixed_fraction(SWEEP_SPIRAL_ETA)?;
    let trajectory = engine::run_spiral(
        &position,
        &params,
        &policy,
        &market,
        &rule,
        SWEEP_SPIRAL_MAX_STEPS,
    )?;

    Ok(CellResult {
        lambda: lambda.value(),
        frontier_analytic,
        frontier_empirical: frontier.empirical,
        frontier_abs_error: (frontier.empirical - frontier_analytic).abs(),
        boundary_safe_analytic,
        boundary_safe_empirical,
        spiral_outcome: trajectory.outcome,
        spiral_steps: trajectory.steps.len(),
        spiral_final_health: trajectory.final_health(&params),
        spiral_bad_debt: trajectory.bad_debt,
    })
}

/// Bisects for the liquidation threshold at which a boundary step (h
/// exactly 1, health-linked bonus, hence zero bonus) stops improving
/// health. The crossing is at `1/λ`; when the whole bracket is safe —
/// very deep markets — returns NaN rather than inventing a value.
fn locate_boundary_crossing(
    market: &Market,
    i_max: f64,
    eta: f64,
    tol: f64,
) -> Result<f64, AnalysisError> {
    let policy = IncentivePolicy::health_linked(i_max)?;
    let eval = |lltv: f64| -> Result<f64, AnalysisError> {
        let params = RiskParams::new(lltv, i_max)?;
        let position = probe_position(market, PROBE_COLLATERAL_VALUE, lltv)?;
        let da = eta * position.debt();
        finite_difference_dh(&position, &params, &policy, market, da)
    };
    let (mut lo, mut hi) = (0.2, 0.9999);
    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Ok(f64::NAN);
    }
    let benign_sign = f_lo.signum();
    let mut iterations = 0u32;
    while hi - lo > tol && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = eval(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == benign_sign {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn deep_market() -> Market {
        Market::cpamm(1e14, 1e14).unwrap()
    }

    #[test]
    fn probe_position_hits_target_ltv_exactly() {
        let market = deep_market();
        let pos = probe_position(&market, 100.0, 0.8).unwrap();
        assert_eq!(pos.collateral_value(), 100.0);
        assert_eq!(pos.ltv().unwrap(), 0.8);
    }

    #[test]
    fn finite_difference_matches_analytic_in_deep_pool() {
        // Deep pool, constant 5% bonus, LTV 0.8: the analytic rate is
        // (v/q)(c/q - (1+i)λ) with λ ≈ 1. The one-sided difference at
        // η = 1e-6 carries a relative bias of about η/(1-η) ≈ 1e-6.
        let market = deep_market();
        let params = RiskParams::new(0.8, 0.05).unwrap();
        let policy = IncentivePolicy::constant(0.05).unwrap();
        let pos = probe_position(&market, 100.0, 0.8).unwrap();
        let fd = finite_difference_dh(&pos, &params, &policy, &market, 1e-6 * 80.0).unwrap();
        let analytic = (0.8 / 80.0) * (100.0 / 80.0 - 1.05);
        assert_relative_eq!(fd, analytic, max_relative = 1e-5);
    }

    #[test]
    fn frontier_bisection_recovers_deep_pool_limit() {
        // With λ ≈ 1 and a constant 10% bonus the frontier is 1/1.1.
        let market = deep_market();
        let params = RiskParams::new(0.5, 0.1).unwrap();
        let policy = IncentivePolicy::constant(0.1).unwrap();
        let est = locate_frontier(&params, &policy, &market, 100.0, (0.3, 1.4), 1e-6, 1e-9)
            .unwrap();
        assert_relative_eq!(est.empirical, 1.0 / 1.1, epsilon = 1e-6);
        assert!(est.abs_error < 1e-6);
        assert!(est.iterations > 20);
    }

    #[test]
    fn frontier_bisection_rejects_bad_bracket() {
        let market = deep_market();
        let params = RiskParams::new(0.5, 0.1).unwrap();
        let policy = IncentivePolicy::constant(0.1).unwrap();
        // Both endpoints are below the frontier: no sign change.
        let err = locate_frontier(&params, &policy, &market, 100.0, (0.3, 0.5), 1e-6, 1e-9)
            .unwrap_err();
        assert!(matches!(err, AnalysisError::NoSignChange { .. }));
    }

    #[test]
    fn boundary_audit_flips_at_inverse_lambda() {
        // Pool depth y/c = 4 gives λ = 1.5, so 1/λ ≈ 0.667: thresholds
        // below are safe at the boundary, thresholds above are not.
        let market = Market::cpamm(400.0, 400.0).unwrap();
        let rows = boundary_audit(&market, 100.0, &[0.5, 0.6, 0.7, 0.8], 0.1, 1e-6).unwrap();
        let safety: Vec<bool> = rows.iter().map(|r| r.safe_empirical).collect();
        assert_eq!(safety, vec![true, true, false, false]);
        for row in &rows {
            assert_eq!(row.safe_analytic, row.safe_empirical);
            assert_relative_eq!(row.lambda, 1.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn convergence_study_is_first_order() {
        let market = deep_market();
        let params = RiskParams::new(0.8, 0.05).unwrap();
        let policy = IncentivePolicy::constant(0.05).unwrap();
        let pos = probe_position(&market, 100.0, 0.8).unwrap();
        let study =
            convergence_study(&pos, &params, &policy, &market, &[1e-2, 1e-3, 1e-4, 1e-5])
                .unwrap();
        assert_relative_eq!(study.fitted_order, 1.0, epsilon = 0.05);
        for pair in study.rows.windows(2) {
            let ratio = pair[0].abs_error / pair[1].abs_error;
            assert!(
                (8.0..=12.0).contains(&ratio),
                "decade error ratio {ratio} outside first-order band"
            );
        }
    }

    #[test]
    fn sweep_smoke_grid_completes() {
        let grid = run_sweep(&SweepSpec::smoke()).unwrap();
        assert_eq!(grid.rows.len(), 27);
        for row in &grid.rows {
            let result = row.result.as_ref().expect("smoke cell failed");
            assert!(result.frontier_abs_error < 1e-5);
            // Spirals start 5% past the threshold; whether they recover
            // depends on depth, but every cell must terminate cleanly.
            assert!(result.spiral_steps > 0);
            assert!(result.spiral_steps < SWEEP_SPIRAL_MAX_STEPS);
        }
    }

    #[test]
    fn sweep_rejects_empty_axis() {
        let mut spec = SweepSpec::smoke();
        spec.depth.clear();
        assert!(matches!(
            run_sweep(&spec),
            Err(AnalysisError::InvalidParameter(_))
        ));
    }

    #[test]
    fn linear_depth_mapping_matches_cpamm_penalty() {
        // The depth axis is λ-equivalent across models by construction.
        let cp = cell_market(ModelKind::CpAmm, 10.0).unwrap();
        let lin = cell_market(ModelKind::Linear, 10.0).unwrap();
        let lam_cp = cp.penalty_factor(PROBE_COLLATERAL_VALUE).value();
        let lam_lin = lin.penalty_factor(PROBE_COLLATERAL_VALUE).value();
        assert_relative_eq!(lam_cp, lam_lin, epsilon = 1e-12);
        assert_relative_eq!(lam_cp, 1.2, epsilon = 1e-12);
    }
}
