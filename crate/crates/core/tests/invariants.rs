//! Cross-module property tests: conservation laws, algebraic
//! identities, and closed-form/engine sign agreement under randomised
//! inputs.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spiralsim::engine::{self, SpiralOutcome, StepRule};
use spiralsim::lending::{IncentivePolicy, Position, RiskParams};
use spiralsim::market::{CpAmmPool, LinearImpactModel, Market};
use spiralsim::toxicity;

proptest! {
    /// Selling any amount into a constant-product pool leaves `x·y`
    /// within a few ulps of the recorded invariant.
    #[test]
    fn cpamm_swap_preserves_invariant(
        x_exp in -3.0f64..12.0,
        y_exp in -3.0f64..12.0,
        rel_exp in -8.0f64..2.0,
    ) {
        let x = 10f64.powf(x_exp);
        let y = 10f64.powf(y_exp);
        let ds = x * 10f64.powf(rel_exp);
        let pool = CpAmmPool::new(x, y).unwrap();
        let (_, after) = pool.sell_collateral(ds).unwrap();
        prop_assert!(after.invariant_drift() <= 1e-12,
            "invariant drift {} too large", after.invariant_drift());
    }

    /// A sale always executes below the pre-trade spot value and moves
    /// the price against the seller.
    #[test]
    fn cpamm_sale_moves_price_against_seller(
        x_exp in -3.0f64..12.0,
        y_exp in -3.0f64..12.0,
        rel_exp in -8.0f64..2.0,
    ) {
        let x = 10f64.powf(x_exp);
        let y = 10f64.powf(y_exp);
        let ds = x * 10f64.powf(rel_exp);
        let pool = CpAmmPool::new(x, y).unwrap();
        let (proceeds, after) = pool.sell_collateral(ds).unwrap();
        prop_assert!(proceeds < ds * pool.spot_price());
        prop_assert!(after.spot_price() < pool.spot_price());
        prop_assert!(proceeds < pool.y());
    }

    /// For trades up to 10% of the pool the linearised log-price impact
    /// agrees with the exact one to within `2·(ds/x)²`.
    #[test]
    fn cpamm_linearization_within_quadratic_bound(
        x_exp in -3.0f64..12.0,
        y_exp in -3.0f64..12.0,
        rel_exp in -6.0f64..-1.0,
    ) {
        let x = 10f64.powf(x_exp);
        let y = 10f64.powf(y_exp);
        let rel = 10f64.powf(rel_exp);
        let ds = x * rel;
        let pool = CpAmmPool::new(x, y).unwrap();
        let (_, after) = pool.sell_collateral(ds).unwrap();
        let exact = (after.spot_price() / pool.spot_price()).ln();
        let linear = pool.linearized_log_price_impact(ds);
        prop_assert!((exact - linear).abs() <= 2.0 * rel * rel,
            "residual {} above bound {}", (exact - linear).abs(), 2.0 * rel * rel);
    }

    /// Linear-impact sales follow the closed form exactly: proceeds
    /// `value·(1−s)` and a permanent mark-down by `1 − φ·value`.
    ///
    /// Sale size is parameterised as a fraction of the exhaustion size
    /// `(1−γ)·L/σ`, at which the realised discount reaches 100%; below
    /// it, `φ·value` equals that fraction exactly.
    #[test]
    fn linear_sale_follows_closed_form(
        gamma in 0.0f64..0.5,
        sigma_exp in -2.0f64..1.0,
        liq_exp in 0.0f64..9.0,
        frac in 0.0f64..0.9,
        price_exp in -3.0f64..3.0,
    ) {
        let sigma = 10f64.powf(sigma_exp);
        let liquidity = 10f64.powf(liq_exp);
        let mark_price = 10f64.powf(price_exp);
        let model = LinearImpactModel::new(gamma, sigma, liquidity).unwrap();
        let value = frac * (1.0 - gamma) * liquidity / sigma;
        let (proceeds, new_price) = model.execute_sale(value, mark_price).unwrap();
        let s = gamma + sigma / liquidity * value;
        prop_assert!((proceeds - value * (1.0 - s)).abs() <= 1e-12 * value.max(1.0));
        // φ·value = frac by construction, so the mark-down is 1 − frac.
        assert_relative_eq!(new_price, mark_price * (1.0 - frac), max_relative = 1e-9);
    }

    /// Health times LTV equals the liquidation threshold, at any state.
    #[test]
    fn health_ltv_identity(
        units_exp in -3.0f64..9.0,
        price_exp in -3.0f64..3.0,
        ltv in 0.01f64..5.0,
        lltv in 0.01f64..0.99,
    ) {
        let units = 10f64.powf(units_exp);
        let price = 10f64.powf(price_exp);
        let debt = ltv * units * price;
        let position = Position::new(units, debt, price).unwrap();
        let params = RiskParams::new(lltv, 0.1).unwrap();
        let h = position.health(&params).unwrap();
        let l = position.ltv().unwrap();
        assert_relative_eq!(h * l, lltv, max_relative = 1e-12);
    }

    /// Both market models report a penalty factor of at least one.
    #[test]
    fn penalty_factors_at_least_one(
        depth_exp in -2.0f64..12.0,
        value_exp in -2.0f64..4.0,
    ) {
        let c = 10f64.powf(value_exp);
        let reserve = 10f64.powf(depth_exp) * c;
        let pool = Market::cpamm(reserve, reserve).unwrap();
        prop_assert!(pool.penalty_factor(c).value() >= 1.0);
        let model = LinearImpactModel::new(0.0, 1.0, reserve).unwrap();
        let linear = Market::linear(model, 1.0).unwrap();
        prop_assert!(linear.penalty_factor(c).value() >= 1.0);
    }

    /// One engine step conserves every flow it touches: debt falls by
    /// exactly `da`, the seizure is worth `(1+i)·da` at the pre-step
    /// price, pool outflow equals sale proceeds, and the position is
    /// re-marked at the post-trade price.
    #[test]
    fn engine_step_conserves_flows(
        depth_exp in 0.5f64..8.0,
        ltv in 0.2f64..1.2,
        lltv in 0.3f64..0.95,
        i_max in 0.0f64..0.2,
        da_frac in 1e-6f64..0.5,
    ) {
        let c = 100.0;
        let reserve = 10f64.powf(depth_exp) * c;
        let market = Market::cpamm(reserve, reserve).unwrap();
        let position = Position::new(c, ltv * c, 1.0).unwrap();
        let params = RiskParams::new(lltv, i_max).unwrap();
        let policy = IncentivePolicy::constant(i_max).unwrap();
        let da = da_frac * position.debt();
        let step = match engine::liquidation_step(&position, &params, &policy, &market, da) {
            Ok(s) => s,
            // Shallow pools can make the seizure exceed the collateral;
            // that rejection is itself correct behaviour.
            Err(engine::EngineError::InsufficientCollateral { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        assert_abs_diff_eq!(step.da, da);
        // The pre-step price is 1, so the seizure is (1+i)·da units.
        assert_relative_eq!(step.ds, (1.0 + i_max) * da, max_relative = 1e-12);
        assert_abs_diff_eq!(step.position_after.debt(), position.debt() - da,
            epsilon = 1e-12 * position.debt());
        // The pool's debt reserve drops by exactly the proceeds paid
        // out — same subtraction the pool performs, so bit-for-bit.
        // (Differencing the reserves instead would drown tiny trades in
        // the ulp of a deep reserve.)
        match (&market, &step.market_after) {
            (Market::CpAmm(before), Market::CpAmm(after)) => {
                prop_assert_eq!(after.y(), before.y() - step.proceeds);
            }
            _ => unreachable!("constant-product in, constant-product out"),
        }
        assert_abs_diff_eq!(step.position_after.mark_price(), step.market_after.price());
        prop_assert!(step.lambda_before >= 1.0);
    }

    /// Spirals always stop at one of the four declared outcomes, with a
    /// non-empty trajectory, weakly decreasing debt, and bad debt
    /// reported exactly when collateral ran out first.
    #[test]
    fn spiral_terminates_cleanly(
        depth_exp in 0.0f64..6.0,
        ltv in 0.85f64..1.3,
        i_max in 0.0f64..0.2,
        eta in 0.05f64..1.0,
    ) {
        let c = 100.0;
        let lltv = 0.8;
        let reserve = 10f64.powf(depth_exp) * c;
        let market = Market::cpamm(reserve, reserve).unwrap();
        let position = Position::new(c, ltv * c, 1.0).unwrap();
        let params = RiskParams::new(lltv, i_max).unwrap();
        prop_assume!(position.health(&params).unwrap() < 1.0);
        let policy = IncentivePolicy::constant(i_max).unwrap();
        let rule = StepRule::fixed_fraction(eta).unwrap();
        let traj = engine::run_spiral(&position, &params, &policy, &market, &rule, 500)
            .unwrap();
        prop_assert!(!traj.steps.is_empty());
        prop_assert!(traj.steps.len() <= 500);
        let mut debt = position.debt();
        for step in &traj.steps {
            prop_assert!(step.position_after.debt() <= debt);
            debt = step.position_after.debt();
        }
        match traj.outcome {
            SpiralOutcome::BadDebt => prop_assert!(traj.bad_debt > 0.0),
            _ => prop_assert!(traj.bad_debt == 0.0),
        }
        if traj.outcome == SpiralOutcome::Recovered {
            prop_assert!(traj.final_health(&params) >= 1.0);
        }
    }
}

/// The classification verdict and the sign of the health differential
/// are two views of the same inequality; they must agree on every state
/// that is not exactly on the frontier. 100,000 random states across
/// both policies and six decades of pool depth.
#[test]
fn classification_matches_differential_sign() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0usize;
    while checked < 100_000 {
        let c = 100.0;
        let depth_ratio = 10f64.powf(rng.gen_range(0.0..6.0));
        let ltv: f64 = rng.gen_range(0.1..1.5);
        let v: f64 = rng.gen_range(0.1..0.99);
        if v > ltv {
            continue; // healthy; classification refuses these
        }
        let i: f64 = rng.gen_range(0.0..0.2);
        let market = Market::cpamm(depth_ratio * c, depth_ratio * c).unwrap();
        let lambda = market.penalty_factor(c);
        let position = Position::new(c, ltv * c, 1.0).unwrap();
        let params = RiskParams::new(v, i).unwrap();
        let policy = if rng.gen_bool(0.5) {
            IncentivePolicy::health_linked(i).unwrap()
        } else {
            IncentivePolicy::constant(i).unwrap()
        };
        let verdict = toxicity::classify(&position, &params, &policy, lambda).unwrap();
        if (position.ltv().unwrap() - verdict.threshold_ltv).abs() < 1e-12 {
            continue; // exactly on the frontier: sign is a coin toss in fp
        }
        assert_eq!(
            verdict.toxic,
            verdict.dh_per_da < 0.0,
            "verdict and differential disagree at ltv {ltv}, v {v}, i {i}, \
             depth {depth_ratio}, dh/da {}",
            verdict.dh_per_da
        );
        checked += 1;
    }
}
