//! Price-impact models for liquidating collateral into a market.
//!
//! Two models, each exposing a trade-execution primitive and a liquidity
//! penalty factor `λ`:
//!
//! * [`CpAmmPool`] — a constant-product AMM holding reserves `x` of the
//!   collateral token and `y` of the debt token, with invariant `x·y = k`.
//!   The spot price of collateral is `y/x`. Selling `ds` collateral yields
//!   `y·ds/(x + ds)` debt tokens exactly (no fees). For a position of
//!   collateral value `c` the penalty factor is `λ = 1 + 2c/y`.
//! * [`LinearImpactModel`] — a linear slippage curve `s(x) = γ + (σ/L)·x`
//!   for a sale of value `x`, with per-unit impact `φ = σ/(L(1−γ))` and
//!   penalty factor `λ = 1 + φ·c`. Impact is permanent: the mark price is
//!   scaled by `(1 − φ·x)` after each sale.
//!
//! Execution is always exact; the linearised CP-AMM log-price impact
//! `d(ln P) = −2·ds/x` is exposed separately so callers can compare the
//! two. `λ ≥ 1` always, with equality exactly in the infinite-depth (or
//! zero-collateral) limit.

use thiserror::Error;

/// Errors from market construction and trade execution.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    /// Pool reserves must be strictly positive and finite.
    #[error("invalid pool reserves: x = {x}, y = {y}")]
    InvalidReserves { x: f64, y: f64 },
    /// A trade size was negative or non-finite. Signals a caller bug, not
    /// a market condition.
    #[error("invalid trade size {size}: must be non-negative and finite")]
    InvalidTradeSize { size: f64 },
    /// Slippage-model parameters out of range.
    #[error("invalid impact parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    /// A sale large enough that the linear slippage reaches 100%: the
    /// market cannot absorb it at any positive price.
    #[error("market exhausted: sale of value {value} hits slippage {slippage} >= 1")]
    MarketExhausted { value: f64, slippage: f64 },
    /// A penalty factor below one is meaningless (it would imply the
    /// market pays a premium for size).
    #[error("penalty factor {value} out of range: must be >= 1 and finite")]
    InvalidPenaltyFactor { value: f64 },
}

/// Liquidity penalty factor `λ ≥ 1`.
///
/// Scales the effective cost of seizing collateral: a liquidation that
/// repays `da` of debt removes `(1+i)·λ·da` of collateral value once the
/// price impact of the accompanying sale is marked to market. `λ = 1`
/// exactly in the infinite-depth limit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PenaltyFactor(f64);

impl PenaltyFactor {
    /// The zero-impact factor (infinitely deep market).
    pub const ONE: PenaltyFactor = PenaltyFactor(1.0);

    pub fn new(value: f64) -> Result<Self, MarketError> {
        if !value.is_finite() || value < 1.0 {
            return Err(MarketError::InvalidPenaltyFactor { value });
        }
        Ok(PenaltyFactor(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for PenaltyFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A constant-product AMM pool: reserves `x` (collateral token) and `y`
/// (debt token), invariant `x·y = k`, no fees.
///
/// Values are immutable; [`CpAmmPool::sell_collateral`] returns the
/// post-trade pool rather than mutating.
#[derive(Debug, Clone, PartialEq)]
pub struct CpAmmPool {
    x: f64,
    y: f64,
    /// `x·y` at construction; carried unchanged through swaps so drift
    /// can be audited.
    k: f64,
}

impl CpAmmPool {
    pub fn new(x: f64, y: f64) -> Result<Self, MarketError> {
        if !x.is_finite() || !y.is_finite() || x <= 0.0 || y <= 0.0 {
            return Err(MarketError::InvalidReserves { x, y });
        }
        Ok(CpAmmPool { x, y, k: x * y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// The invariant recorded at construction.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Spot price of collateral in debt-token units: `y/x`.
    pub fn spot_price(&self) -> f64 {
        self.y / self.x
    }

    /// Relative drift of `x·y` from the recorded invariant. Should stay
    /// within a few ulps per swap; exposed for auditing.
    pub fn invariant_drift(&self) -> f64 {
        ((self.x * self.y - self.k) / self.k).abs()
    }

    /// Sell `ds` collateral into the pool. Returns the proceeds in debt
    /// tokens and the post-trade pool.
    ///
    /// Exact execution along the curve: `proceeds = y·ds/(x + ds)`, new
    /// reserves `(x + ds, y − proceeds)`. Proceeds are always strictly
    /// below `y`; a zero-size trade leaves the pool untouched.
    pub fn sell_collateral(&self, ds: f64) -> Result<(f64, CpAmmPool), MarketError> {
        if !ds.is_finite() || ds < 0.0 {
            return Err(MarketError::InvalidTradeSize { size: ds });
        }
        let proceeds = self.y * ds / (self.x + ds);
        let pool = CpAmmPool {
            x: self.x + ds,
            y: self.y - proceeds,
            k: self.k,
        };
        Ok((proceeds, pool))
    }

    /// First-order log-price impact of selling `ds`: `d(ln P) ≈ −2·ds/x`.
    ///
    /// The exact impact is `−2·ln(1 + ds/x)`; the two agree to within
    /// `2·(ds/x)²` for `ds/x ≤ 0.1`.
    pub fn linearized_log_price_impact(&self, ds: f64) -> f64 {
        -2.0 * ds / self.x
    }

    /// Penalty factor for a position of collateral value `c` liquidated
    /// against this pool: `λ = 1 + 2c/y`.
    pub fn penalty_factor(&self, collateral_value: f64) -> PenaltyFactor {
        assert!(
            collateral_value >= 0.0,
            "collateral value must be non-negative, got {collateral_value}"
        );
        PenaltyFactor(1.0 + 2.0 * collateral_value / self.y)
    }
}

/// Linear (depth-`L`) slippage model: a sale of value `x` executes at a
/// discount `s(x) = γ + (σ/L)·x` to the mark price.
///
/// `γ` is a fixed spread, `σ/L` the marginal impact per unit of value.
/// The induced per-unit price impact is `φ = σ/(L(1−γ))` and the penalty
/// factor for a position of collateral value `c` is `λ = 1 + φ·c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImpactModel {
    gamma: f64,
    sigma: f64,
    liquidity: f64,
    phi: f64,
}

impl LinearImpactModel {
    pub fn new(gamma: f64, sigma: f64, liquidity: f64) -> Result<Self, MarketError> {
        if !gamma.is_finite() || !(0.0..1.0).contains(&gamma) {
            return Err(MarketError::InvalidParameter {
                name: "gamma",
                value: gamma,
            });
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(MarketError::InvalidParameter {
                name: "sigma",
                value: sigma,
            });
        }
        if !liquidity.is_finite() || liquidity <= 0.0 {
            return Err(MarketError::InvalidParameter {
                name: "liquidity",
                value: liquidity,
            });
        }
        let phi = sigma / (liquidity * (1.0 - gamma));
        Ok(LinearImpactModel {
            gamma,
            sigma,
            liquidity,
            phi,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn liquidity(&self) -> f64 {
        self.liquidity
    }

    /// Per-unit permanent price impact `φ = σ/(L(1−γ))`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Slippage on a sale of the given value: `s(x) = γ + (σ/L)·x`.
    pub fn slippage(&self, value: f64) -> f64 {
        self.gamma + self.sigma / self.liquidity * value
    }

    /// Execute a sale of `value` (collateral marked at `mark_price`).
    ///
    /// Returns `(proceeds, new_mark_price)` where
    /// `proceeds = value·(1 − s(value))` and the impact is permanent:
    /// `new_mark_price = mark_price·(1 − φ·value)`, floored at a small
    /// positive fraction of the old price. Errors once `s(value) ≥ 1`
    /// (the market cannot absorb the sale).
    pub fn execute_sale(&self, value: f64, mark_price: f64) -> Result<(f64, f64), MarketError> {
        if !value.is_finite() || value < 0.0 {
            return Err(MarketError::InvalidTradeSize { size: value });
        }
        let slippage = self.slippage(value);
        if slippage >= 1.0 {
            return Err(MarketError::MarketExhausted { value, slippage });
        }
        let proceeds = (value * (1.0 - slippage)).max(0.0);
        // s(value) < 1 implies φ·value < 1, so the factor below stays
        // positive; the floor only guards the exhaustion edge.
        let new_price = (mark_price * (1.0 - self.phi * value)).max(mark_price * 1e-12);
        Ok((proceeds, new_price))
    }

    /// Penalty factor for a position of collateral value `c`: `λ = 1 + φ·c`.
    pub fn penalty_factor(&self, collateral_value: f64) -> PenaltyFactor {
        assert!(
            collateral_value >= 0.0,
            "collateral value must be non-negative, got {collateral_value}"
        );
        PenaltyFactor(1.0 + self.phi * collateral_value)
    }
}

/// Linear-impact market state: the model parameters plus the current mark
/// price (the model itself is stateless; permanent impact lives here).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMarket {
    pub model: LinearImpactModel,
    pub mark_price: f64,
}

/// A market a liquidation engine can sell collateral into.
///
/// Unifies the two impact models behind one execution interface. All
/// operations are pure: selling returns the post-trade market.
#[derive(Debug, Clone, PartialEq)]
pub enum Market {
    CpAmm(CpAmmPool),
    Linear(LinearMarket),
}

impl Market {
    pub fn cpamm(x: f64, y: f64) -> Result<Self, MarketError> {
        Ok(Market::CpAmm(CpAmmPool::new(x, y)?))
    }

    pub fn linear(model: LinearImpactModel, mark_price: f64) -> Result<Self, MarketError> {
        if !mark_price.is_finite() || mark_price <= 0.0 {
            return Err(MarketError::InvalidParameter {
                name: "mark_price",
                value: mark_price,
            });
        }
        Ok(Market::Linear(LinearMarket { model, mark_price }))
    }

    /// Current price of collateral in debt units.
    pub fn price(&self) -> f64 {
        match self {
            Market::CpAmm(pool) => pool.spot_price(),
            Market::Linear(m) => m.mark_price,
        }
    }

    /// Sell `ds` collateral units. Returns proceeds (debt tokens) and the
    /// post-trade market; the new [`Market::price`] reflects the impact.
    pub fn sell_collateral(&self, ds: f64) -> Result<(f64, Market), MarketError> {
        match self {
            Market::CpAmm(pool) => {
                let (proceeds, pool) = pool.sell_collateral(ds)?;
                Ok((proceeds, Market::CpAmm(pool)))
            }
            Market::Linear(m) => {
                if !ds.is_finite() || ds < 0.0 {
                    return Err(MarketError::InvalidTradeSize { size: ds });
                }
                let value = ds * m.mark_price;
                let (proceeds, new_price) = m.model.execute_sale(value, m.mark_price)?;
                Ok((
                    proceeds,
                    Market::Linear(LinearMarket {
                        model: m.model.clone(),
                        mark_price: new_price,
                    }),
                ))
            }
        }
    }

    /// Penalty factor for a position of collateral value `c` against this
    /// market.
    pub fn penalty_factor(&self, collateral_value: f64) -> PenaltyFactor {
        match self {
            Market::CpAmm(pool) => pool.penalty_factor(collateral_value),
            Market::Linear(m) => m.model.penalty_factor(collateral_value),
        }
    }
}
