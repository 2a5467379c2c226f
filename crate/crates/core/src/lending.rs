//! Collateralised debt positions and liquidation incentives.
//!
//! A position holds `s` units of collateral marked at price `P` against a
//! debt of `q`, giving collateral value `c = s·P`, loan-to-value
//! `ℓ = q/c` and health `h = v·c/q` where `v` is the protocol's
//! liquidation LTV. The identity `h·ℓ = v` holds throughout. A position
//! is liquidatable exactly when `h < 1` (strict: `h = 1` sits on the
//! boundary and is not yet liquidatable).
//!
//! The liquidation bonus paid to liquidators is set by an
//! [`IncentivePolicy`]: either a constant `i_max`, or linked to health as
//! `i(h) = i_max · clamp(1 − h, 0, 1)` so the bonus fades out exactly at
//! the liquidation boundary.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LendingError {
    /// Position fields must be finite, with non-negative collateral and
    /// debt and a strictly positive mark price.
    #[error("invalid position: units = {units}, debt = {debt}, mark_price = {mark_price}")]
    InvalidPosition { units: f64, debt: f64, mark_price: f64 },
    /// LTV is undefined once the collateral is gone; a remaining debt is
    /// reported distinctly because it is unrecoverable.
    #[error("position wiped out: no collateral left against debt {debt}")]
    WipedOut { debt: f64 },
    /// Health is undefined without debt.
    #[error("health undefined: position has no debt")]
    NoDebt,
    /// Liquidation LTV must lie strictly inside (0, 1).
    #[error("invalid liquidation LTV {lltv}: must lie in (0, 1)")]
    InvalidLltv { lltv: f64 },
    /// Bonus caps must be non-negative and finite.
    #[error("invalid max bonus {i_max}: must be >= 0 and finite")]
    InvalidMaxBonus { i_max: f64 },
}

/// A collateralised debt position.
///
/// Immutable; the engine produces new positions rather than mutating.
#[derive(Debug, Clone, PartialEq)]
pub struct Position {
    collateral_units: f64,
    debt: f64,
    mark_price: f64,
}

impl Position {
    pub fn new(collateral_units: f64, debt: f64, mark_price: f64) -> Result<Self, LendingError> {
        let ok = collateral_units.is_finite()
            && collateral_units >= 0.0
            && debt.is_finite()
            && debt >= 0.0
            && mark_price.is_finite()
            && mark_price > 0.0;
        if !ok {
            return Err(LendingError::InvalidPosition {
                units: collateral_units,
                debt,
                mark_price,
            });
        }
        Ok(Position {
            collateral_units,
            debt,
            mark_price,
        })
    }

    /// Collateral units held (`s`).
    pub fn collateral_units(&self) -> f64 {
        self.collateral_units
    }

    /// Outstanding debt (`q`).
    pub fn debt(&self) -> f64 {
        self.debt
    }

    /// Price the collateral is currently marked at.
    pub fn mark_price(&self) -> f64 {
        self.mark_price
    }

    /// Collateral value `c = s·P`.
    pub fn collateral_value(&self) -> f64 {
        self.collateral_units * self.mark_price
    }

    /// Loan-to-value `ℓ = q/c`. Zero debt gives `ℓ = 0`; zero collateral
    /// is reported as [`LendingError::WipedOut`].
    pub fn ltv(&self) -> Result<f64, LendingError> {
        let c = self.collateral_value();
        if c <= 0.0 {
            return Err(LendingError::WipedOut { debt: self.debt });
        }
        Ok(self.debt / c)
    }

    /// Health `h = v·c/q`. The position is liquidatable iff `h < 1`.
    pub fn health(&self, params: &RiskParams) -> Result<f64, LendingError> {
        if self.debt <= 0.0 {
            return Err(LendingError::NoDebt);
        }
        Ok(params.lltv() * self.collateral_value() / self.debt)
    }
}

/// Protocol risk parameters: the liquidation LTV `v` and the cap on the
/// liquidation bonus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskParams {
    lltv: f64,
    i_max: f64,
}

impl RiskParams {
    pub fn new(lltv: f64, i_max: f64) -> Result<Self, LendingError> {
        if !lltv.is_finite() || lltv <= 0.0 || lltv >= 1.0 {
            return Err(LendingError::InvalidLltv { lltv });
        }
        if !i_max.is_finite() || i_max < 0.0 {
            return Err(LendingError::InvalidMaxBonus { i_max });
        }
        Ok(RiskParams { lltv, i_max })
    }

    /// Liquidation LTV `v`.
    pub fn lltv(&self) -> f64 {
        self.lltv
    }

    /// Maximum liquidation bonus.
    pub fn i_max(&self) -> f64 {
        self.i_max
    }
}

/// Which bonus schedule a policy applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Constant,
    HealthLinked,
}

/// Liquidation-bonus policy.
///
/// * `Constant` — pays `i_max` at any health.
/// * `HealthLinked` — pays `i_max · clamp(1 − h, 0, 1)`: the bonus grows
///   as the position deteriorates and is exactly zero at `h = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncentivePolicy {
    Constant { i_max: f64 },
    HealthLinked { i_max: f64 },
}

impl IncentivePolicy {
    pub fn constant(i_max: f64) -> Result<Self, LendingError> {
        if !i_max.is_finite() || i_max < 0.0 {
            return Err(LendingError::InvalidMaxBonus { i_max });
        }
        Ok(IncentivePolicy::Constant { i_max })
    }

    pub fn health_linked(i_max: f64) -> Result<Self, LendingError> {
        if !i_max.is_finite() || i_max < 0.0 {
            return Err(LendingError::InvalidMaxBonus { i_max });
        }
        Ok(IncentivePolicy::HealthLinked { i_max })
    }

    pub fn from_kind(kind: PolicyKind, i_max: f64) -> Result<Self, LendingError> {
        match kind {
            PolicyKind::Constant => Self::constant(i_max),
            PolicyKind::HealthLinked => Self::health_linked(i_max),
        }
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            IncentivePolicy::Constant { .. } => PolicyKind::Constant,
            IncentivePolicy::HealthLinked { .. } => PolicyKind::HealthLinked,
        }
    }

    pub fn i_max(&self) -> f64 {
        match self {
            IncentivePolicy::Constant { i_max } | IncentivePolicy::HealthLinked { i_max } => *i_max,
        }
    }

    /// Bonus paid at health `h` (`h ≥ 0`). Bounded by `0 ≤ i(h) ≤ i_max`.
    pub fn incentive(&self, h: f64) -> f64 {
        debug_assert!(h >= 0.0, "health must be non-negative, got {h}");
        match self {
            IncentivePolicy::Constant { i_max } => *i_max,
            IncentivePolicy::HealthLinked { i_max } => i_max * (1.0 - h).clamp(0.0, 1.0),
        }
    }
}

/// A position is liquidatable exactly when its health is strictly below 1.
pub fn is_liquidatable(health: f64) -> bool {
    health < 1.0
}
