//! Simulation and analysis of liquidation toxicity under price impact.
//!
//! When liquidating a levered position, the seized collateral has to be
//! sold into a market with finite depth. The sale moves the price, the
//! remaining collateral is re-marked lower, and — past a sharp LTV
//! frontier — each liquidation leaves the position *less* healthy than
//! before, feeding a spiral that ends in bad debt. This crate provides:
//!
//! * [`market`] — exact price-impact models (constant-product AMM and a
//!   linear slippage curve), each exposing a penalty factor `λ`;
//! * [`lending`] — positions, health/LTV accounting, and liquidation
//!   bonus policies (constant or health-linked);
//! * [`toxicity`] — the marginal health differential and the closed-form
//!   LTV frontiers separating benign from toxic liquidations;
//! * [`engine`] — a discrete finite-step liquidation engine that executes
//!   spirals against the exact market primitives;
//! * [`analysis`] — brute-force verification of the closed forms against
//!   the engine: finite-difference health differentials, empirical
//!   frontier location by bisection, boundary audits, convergence
//!   studies, and deterministic parameter sweeps.
//!
//! The engine is deliberately independent of the closed-form layer: it
//! only ever executes exact trades and re-marks collateral, so it can
//! serve as an oracle for the analytic results.
//!
//! # Example
//!
//! ```
//! use spiralsim::lending::{IncentivePolicy, Position, RiskParams};
//! use spiralsim::market::Market;
//! use spiralsim::toxicity::classify;
//!
//! let market = Market::cpamm(1000.0, 1000.0)?;
//! let position = Position::new(100.0, 95.0, 1.0)?;
//! let params = RiskParams::new(0.8, 0.05)?;
//! let policy = IncentivePolicy::constant(0.05)?;
//! let lambda = market.penalty_factor(position.collateral_value());
//!
//! let verdict = classify(&position, &params, &policy, lambda)?;
//! assert!(verdict.toxic); // shallow pool, high LTV: spiral territory
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod analysis;
pub mod engine;
pub mod lending;
pub mod market;
pub mod toxicity;

pub use engine::{SpiralOutcome, SpiralTrajectory, StepRule};
pub use lending::{IncentivePolicy, PolicyKind, Position, RiskParams};
pub use market::{CpAmmPool, LinearImpactModel, Market, PenaltyFactor};
pub use toxicity::ToxicityVerdict;
