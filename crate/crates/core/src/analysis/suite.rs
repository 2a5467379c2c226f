//! The standing verification suite: deterministic engine-vs-closed-form
//! checks with pinned tolerances.
//!
//! Each check pits an analytic result against the discrete liquidation
//! engine and reports a [`CheckOutcome`] instead of panicking, so a
//! caller (the `verify` CLI command, integration tests) can print one
//! line per check and aggregate. All randomness is drawn from a seeded
//! [`ChaCha8Rng`], so a given [`SuiteConfig`] always reproduces the same
//! numbers bit for bit.
//!
//! [`SuiteConfig::lambda_scale`] exists to prove the checks have teeth:
//! it multiplies the penalty factor used on the *analytic* side of the
//! frontier-agreement checks, leaving the engine untouched. At 1.0 the
//! suite passes; at 1.01 the frontier checks must fail, demonstrating
//! the comparisons are sensitive to a 1% error in λ.

use crate::analysis::{
    self, boundary_audit, convergence_study, finite_difference_dh, locate_frontier,
    probe_position, ModelKind, SweepSpec, PROBE_COLLATERAL_VALUE,
};
use crate::engine::{self, SpiralOutcome, StepRule};
use crate::lending::{IncentivePolicy, PolicyKind, RiskParams};
use crate::market::{CpAmmPool, Market, PenaltyFactor};
use crate::toxicity;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Configuration of a suite run.
#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    /// Seed for all randomised checks.
    pub seed: u64,
    /// Multiplier applied to the analytic penalty factor in the
    /// frontier-agreement checks. 1.0 for a genuine run; anything else
    /// injects a deliberate analytic error to confirm the checks can
    /// fail.
    pub lambda_scale: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 42, lambda_scale: 1.0 }
    }
}

/// Result of one suite check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    /// Stable kebab-case check name.
    pub name: &'static str,
    /// Whether the check passed.
    pub passed: bool,
    /// Worst observed error, in the units of `tolerance`. For counting
    /// checks this is the number of violations.
    pub max_error: f64,
    /// Pass threshold the error is compared against.
    pub tolerance: f64,
    /// Number of cases examined.
    pub cases: usize,
    /// Human-readable elaboration (worst case, sub-measurements).
    pub detail: String,
}

impl CheckOutcome {
    fn failed_with(name: &'static str, tolerance: f64, detail: String) -> Self {
        CheckOutcome {
            name,
            passed: false,
            max_error: f64::INFINITY,
            tolerance,
            cases: 0,
            detail,
        }
    }
}

/// Runs every core check and returns their outcomes in a stable order.
pub fn run_core_checks(config: &SuiteConfig) -> Vec<CheckOutcome> {
    vec![
        deep_pool_frontier_recovery(config),
        cpamm_frontier_agreement(config),
        health_linked_frontier_agreement(config),
        boundary_depth_criterion(config),
        oracle_sign_agreement(config),
        convergence_order(config),
        spiral_monotonicity(config),
        swap_exactness(config),
    ]
}

/// Scales the analytic penalty factor per the suite config. The scaled
/// value still has to be a valid penalty factor (≥ 1), so a scale that
/// pushes λ below 1 surfaces as a check failure, not a panic.
fn scaled_lambda(
    config: &SuiteConfig,
    lambda: PenaltyFactor,
) -> Result<PenaltyFactor, crate::market::MarketError> {
    PenaltyFactor::new(lambda.value() * config.lambda_scale)
}

/// Check 1: in a pool ~1e12× deeper than the position, the empirical
/// frontier under a constant bonus i must match 1/(1+i) to 1e-6 — the
/// zero-impact limit where λ → 1.
fn deep_pool_frontier_recovery(config: &SuiteConfig) -> CheckOutcome {
    const NAME: &str = "deep-pool-frontier-recovery";
    const TOL: f64 = 1e-6;
    let market = match Market::cpamm(1e14, 1e14) {
        Ok(m) => m,
        Err(e) => return CheckOutcome::failed_with(NAME, TOL, e.to_string()),
    };
    let mut max_error: f64 = 0.0;
    let mut cases = 0;
    let mut worst = String::new();
    for &i in &[0.01, 0.05, 0.1] {
        let run = || -> Result<f64, analysis::AnalysisError> {
            let lambda =
                scaled_lambda(config, market.penalty_factor(PROBE_COLLATERAL_VALUE))?;
            let params = RiskParams::new(0.5, i)?;
            let policy = IncentivePolicy::constant(i)?;
            let est = locate_frontier(
                &params,
                &policy,
                &market,
                PROBE_COLLATERAL_VALUE,
                (0.4, 1.4),
                1e-6,
                1e-9,
            )?;
            Ok((est.empirical - toxicity::constant_bonus_frontier(i, lambda)).abs())
        };
        match run() {
            Ok(err) => {
                cases += 1;
                if err > max_error {
                    max_error = err;
                    worst = format!("worst at i = {i}: |error| = {err:.3e}");
                }
            }
            Err(e) => return CheckOutcome::failed_with(NAME, TOL, e.to_string()),
        }
    }
    CheckOutcome {
        name: NAME,
        passed: max_error <= TOL,
        max_error,
        tolerance: TOL,
        cases,
        detail: worst,
    }
}

/// Check 2: constant-bonus frontier agreement 1/((1+i)λ) across pool
/// depths y/c ∈ {4, 10, 40} and bonuses i ∈ {0, 0.05, 0.1}, to 1e-5.
fn cpamm_frontier_agreement(config: &SuiteConfig) -> CheckOutcome {
    const NAME: &str = "cpamm-frontier-agreement";
    const TOL: f64 = 1e-5;
    let mut max_error: f64 = 0.0;
    let mut cases = 0;
    let mut worst = String::new();
    for &reserve in &[400.0, 1000.0, 4000.0] {
        for &i in &[0.0, 0.05, 0.1] {
            let run = || -> Result<f64, analysis::AnalysisError> {
                let market = Market::cpamm(reserve, reserve)?;
                let lambda =
                    scaled_lambda(config, market.penalty_factor(PROBE_COLLATERAL_VALUE))?;
                let params = RiskParams::new(0.5, i)?;
                let policy = IncentivePolicy::constant(i)?;
                let est = locate_frontier(
                    &params,
                    &policy,
                    &market,
                    PROBE_COLLATERAL_VALUE,
                    (0.3, 1.4),
                    1e-6,
                    1e-9,
                )?;
                Ok((est.empirical - toxicity::constant_bonus_frontier(i, lambda)).abs())
            };
            match run() {
                Ok(err) => {
                    cases += 1;
                    if err > max_error {
                        max_error = err;
                        worst =
                            format!("worst at y = {reserve}, i = {i}: |error| = {err:.3e}");
                    }
                }
                Err(e) => return CheckOutcome::failed_with(NAME, TOL, e.to_string()),
            }
        }
    }
    CheckOutcome {
        name: NAME,
        passed: max_error <= TOL,
        max_error,
        tolerance: TOL,
        cases,
        detail: worst,
    }
}

/// Check 3: health-linked frontier agreement (1 + i·v·λ)/((1+i)λ) over
/// a 3×3×3 grid of thresholds, bonuses, and penalty factors, to 1e-5.
/// Includes the boundary-saturating cell v = 0.8, i = 0.1, λ = 1.25
/// where the frontier lands exactly on v.
fn health_linked_frontier_agreement(config: &SuiteConfig) -> CheckOutcome {
    const NAME: &str = "health-linked-frontier-agreement";
    const TOL: f64 = 1e-5;
    // Reserves chosen so λ = 1 + 2c/y hits 1 (to ~1e-12), 1.1, 1.25.
    let depths: &[(f64, f64)] = &[(1e14, 1.0), (2000.0, 1.1), (800.0, 1.25)];
    let mut max_error: f64 = 0.0;
    let mut cases = 0;
    let mut worst = String::new();
    let mut boundary_note = String::new();
    for &(reserve, lambda_nominal) in depths {
        for &v in &[0.5, 0.7, 0.8] {
            for &i in &[0.05, 0.1, 0.2] {
                let run = || -> Result<f64, analysis::AnalysisError> {
                    let market = Market::cpamm(reserve, reserve)?;
                    let lambda = scaled_lambda(
                        config,
                        market.penalty_factor(PROBE_COLLATERAL_VALUE),
                    )?;
                    let params = RiskParams::new(v, i)?;
                    let policy = IncentivePolicy::health_linked(i)?;
                    let est = locate_frontier(
                        &params,
                        &policy,
                        &market,
                        PROBE_COLLATERAL_VALUE,
                        (0.3, 1.4),
                        1e-6,
                        1e-9,
                    )?;
                    Ok((est.empirical - toxicity::health_linked_frontier(i, v, lambda))
                        .abs())
                };
                match run() {
                    Ok(err) => {
                        cases += 1;
                        if err > max_error {
                            max_error = err;
                            worst = format!(
                                "worst at v = {v}, i = {i}, λ ≈ {lambda_nominal}: \
                                 |error| = {err:.3e}"
                            );
                        }
                        if v == 0.8 && i == 0.1 && lambda_nominal == 1.25 {
                            boundary_note = format!(
                                "; boundary cell (v = 0.8, λ = 1.25): |error| = {err:.3e}"
                            );
                        }
                    }
                    Err(e) => return CheckOutcome::failed_with(NAME, TOL, e.to_string()),
                }
            }
        }
    }
    CheckOutcome {
        name: NAME,
        passed: max_error <= TOL,
        max_error,
        tolerance: TOL,
        cases,
        detail: format!("{worst}{boundary_note}"),
    }
}

/// Check 4: the maximum safe liquidation threshold. Steps taken exactly
/// at h = 1 under a health-linked bonus must keep health from falling
/// iff the threshold does not exceed 1/λ, across four pool depths and a
/// fine threshold grid (points within 0.005 of 1/λ excluded — there the
/// finite difference's own O(η) bias could flip an honest sign).
fn boundary_depth_criterion(config: &SuiteConfig) -> CheckOutcome {
    const NAME: &str = "boundary-depth-criterion";
    let _ = config;
    let reserves = [1e14, 2000.0, 800.0, 400.0];
    let mut mismatches = 0usize;
    let mut cases = 0usize;
    let mut first_bad = String::new();
    for &reserve in &reserves {
        let mut run = || -> Result<(), analysis::AnalysisError> {
            let market = Market::cpamm(reserve, reserve)?;
            let lambda = market.penalty_factor(PROBE_COLLATERAL_VALUE);
            let safe_max = toxicity::max_safe_lltv(lambda);
            let grid: Vec<f64> = (50..=99)
                .map(|k| k as f64 / 100.0)
                .filter(|v| (v - safe_max).abs() >= 0.005)
                .collect();
            let rows = boundary_audit(&market, PROBE_COLLATERAL_VALUE, &grid, 0.1, 1e-6)?;
            for row in rows {
                cases += 1;
                if row.safe_analytic != row.safe_empirical {
                    mismatches += 1;
                    if first_bad.is_empty() {
                        first_bad = format!(
                            "first mismatch at lltv = {}, λ = {:.6}: dh rate {:.3e}",
                            row.lltv, row.lambda, row.dh_rate
                        );
                    }
                }
            }
            Ok(())
        };
        if let Err(e) = run() {
            return CheckOutcome::failed_with(NAME, 0.0, e.to_string());
        }
    }
    CheckOutcome {
        name: NAME,
        passed: mismatches == 0,
        max_error: mismatches as f64,
        tolerance: 0.0,
        cases,
        detail: if mismatches == 0 {
            format!("{cases} boundary states agree with the 1/λ rule")
        } else {
            first_bad
        },
    }
}

/// What one random state contributed to the sign-agreement tally.
enum SignSample {
    /// Rejected before evaluation (not liquidatable, or within the
    /// frontier exclusion band).
    Rejected,
    /// Evaluated; closed form and engine agree.
    Agreed,
    /// Evaluated; they disagree.
    Mismatch(String),
}

/// Check 5: sign agreement between the closed-form verdict and the
/// engine's finite difference over 10,000 random liquidatable states —
/// both bonus policies, pool depths spanning 1–1e6× the position,
/// states within 1e-3 of their frontier excluded.
fn oracle_sign_agreement(config: &SuiteConfig) -> CheckOutcome {
    const NAME: &str = "oracle-sign-agreement";
    const TARGET: usize = 10_000;
    const EXCLUSION: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mismatches = 0usize;
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let mut first_bad = String::new();
    while accepted < TARGET {
        attempts += 1;
        if attempts > 100 * TARGET {
            return CheckOutcome::failed_with(
                NAME,
                0.0,
                format!("rejection sampling stalled after {attempts} attempts"),
            );
        }
        let depth_ratio = 10f64.powf(rng.gen_range(0.0..6.0));
        let ltv: f64 = rng.gen_range(0.1..1.5);
        let v: f64 = rng.gen_range(0.1..0.99);
        let i: f64 = rng.gen_range(0.0..0.2);
        let health_linked: bool = rng.gen_bool(0.5);

        let run = || -> Result<SignSample, Box<dyn std::error::Error>> {
            if v > ltv {
                return Ok(SignSample::Rejected); // health v/ℓ ≥ 1, not liquidatable
            }
            let reserve = depth_ratio * PROBE_COLLATERAL_VALUE;
            let market = Market::cpamm(reserve, reserve)?;
            let lambda = market.penalty_factor(PROBE_COLLATERAL_VALUE);
            let frontier = if health_linked {
                toxicity::health_linked_frontier(i, v, lambda)
            } else {
                toxicity::constant_bonus_frontier(i, lambda)
            };
            if (ltv - frontier).abs() <= EXCLUSION {
                return Ok(SignSample::Rejected); // too close to call at finite step
            }
            let params = RiskParams::new(v, i)?;
            let policy = if health_linked {
                IncentivePolicy::health_linked(i)?
            } else {
                IncentivePolicy::constant(i)?
            };
            let position = probe_position(&market, PROBE_COLLATERAL_VALUE, ltv)?;
            let verdict = toxicity::classify(&position, &params, &policy, lambda)?;
            let fd = finite_difference_dh(
                &position,
                &params,
                &policy,
                &market,
                1e-6 * position.debt(),
            )?;
            if verdict.toxic == (fd < 0.0) {
                Ok(SignSample::Agreed)
            } else {
                Ok(SignSample::Mismatch(format!(
                    "verdict/engine disagree at ltv = {ltv:.6}, v = {v:.3}, i = {i:.4}, \
                     depth = {depth_ratio:.3e}, health_linked = {health_linked}: \
                     toxic = {}, fd = {fd:.3e}",
                    verdict.toxic
                )))
            }
        };
        match run() {
            Ok(SignSample::Rejected) => {}
            Ok(SignSample::Agreed) => accepted += 1,
            Ok(SignSample::Mismatch(bad)) => {
                accepted += 1;
                mismatches += 1;
                if first_bad.is_empty() {
                    first_bad = bad;
                }
            }
            Err(e) => return CheckOutcome::failed_with(NAME, 0.0, e.to_string()),
        }
    }
    CheckOutcome {
        name: NAME,
        passed: mismatches == 0,
        max_error: mismatches as f64,
        tolerance: 0.0,
        cases: accepted,
        detail: if mismatches == 0 {
            format!("{accepted} sampled states, signs agree everywhere")
        } else {
            first_bad
        },
    }
}

/// Check 6: first-order convergence of the finite difference. In a deep
/// pool at LTV 0.8 under a constant 5% bonus, shrinking the step decade
/// by decade must shrink the error by 8–12× per decade.
fn convergence_order(config: &SuiteConfig) -> CheckOutcome {
    const NAME: &str = "convergence-order";
    let _ = config;
    let run = || -> Result<CheckOutcome, analysis::AnalysisError> {
        let market = Market::cpamm(1e14, 1e14)?;
        let params = RiskParams::new(0.8, 0.05)?;
        let policy = IncentivePolicy::constant(0.05)?;
        let position = probe_position(&market, PROBE_COLLATERAL_VALUE, 0.8)?;
        let study = convergence_study(
            &position,
            &params,
            &policy,
            &market,
            &[1e-2, 1e-3, 1e-4, 1e-5],
        )?;
        let mut max_dev: f64 = 0.0;
        let mut ratios = Vec::new();
        for pair in study.rows.windows(2) {
            let ratio = pair[0].abs_error / pair[1].abs_error;
            ratios.push(ratio);
            max_dev = max_dev.max((ratio - 10.0).abs());
        }
        let passed = ratios.iter().all(|r| (8.0..=12.0).contains(r));
        Ok(CheckOutcome {
            name: NAME,
            passed,
            max_error: max_dev,
            tolerance: 2.0,
            cases: study.rows.len(),
            detail: format!(
                "decade error ratios {:?}, fitted order {:.4}",
                ratios
                    .iter()
                    .map(|r| (r * 1e4).round() / 1e4)
                    .collect::<Vec<_>>(),
                study.fitted_order
            ),
        })
    };
    run().unwrap_or_else(|e| CheckOutcome::failed_with(NAME, 2.0, e.to_string()))
}

/// Check 7: spiral behaviour on toxic and benign cohorts. 100 randomly
/// drawn positions past their frontier must degrade monotonically
/// (health down, LTV up, every step) and end in bad debt; 100 positions
/// safely below their frontier in deep pools must recover.
fn spiral_monotonicity(config: &SuiteConfig) -> CheckOutcome {
    const NAME: &str = "spiral-monotonicity";
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut violations = 0usize;
    let mut cases = 0usize;
    let mut first_bad = String::new();
    let mut toxic_bad_debt = 0usize;
    let mut benign_recovered = 0usize;
    let mut benign_repaid = 0usize;

    let mut record = |ok: bool, msg: String, first_bad: &mut String| {
        if !ok {
            violations += 1;
            if first_bad.is_empty() {
                *first_bad = msg;
            }
        }
    };

    // Toxic cohort: start past the frontier with margin ≥ 0.05, so the
    // spiral must ratchet LTV upward and end in bad debt.
    for case in 0..100 {
        cases += 1;
        let depth_ratio = 10f64.powf(rng.gen_range(0.0..1.0));
        let v: f64 = rng.gen_range(0.5..0.86);
        let i: f64 = rng.gen_range(0.0..0.2);
        let health_linked: bool = rng.gen_bool(0.5);
        let margin: f64 = rng.gen_range(0.05..0.35);
        let eta: f64 = rng.gen_range(2e-3..1e-2);
        // Whatever the market depth, the frontier never exceeds this
        // zero-impact cap, so cap + margin is past it for sure.
        let frontier_cap = if health_linked {
            (1.0 + i * v) / (1.0 + i)
        } else {
            1.0 / (1.0 + i)
        };
        let ltv0 = frontier_cap + margin;

        let mut run = || -> Result<Option<String>, Box<dyn std::error::Error>> {
            let reserve = depth_ratio * PROBE_COLLATERAL_VALUE;
            let market = Market::cpamm(reserve, reserve)?;
            let params = RiskParams::new(v, i)?;
            let policy = if health_linked {
                IncentivePolicy::health_linked(i)?
            } else {
                IncentivePolicy::constant(i)?
            };
            let position = probe_position(&market, PROBE_COLLATERAL_VALUE, ltv0)?;
            let rule = StepRule::fixed_fraction(eta)?;
            let traj =
                engine::run_spiral(&position, &params, &policy, &market, &rule, 200_000)?;
            if traj.outcome != SpiralOutcome::BadDebt {
                return Ok(Some(format!(
                    "toxic case {case}: expected bad debt, got {:?} after {} steps",
                    traj.outcome,
                    traj.steps.len()
                )));
            }
            toxic_bad_debt += 1;
            let mut prev_ltv = ltv0;
            for (k, step) in traj.steps.iter().enumerate() {
                if step.h_after >= step.h_before {
                    return Ok(Some(format!(
                        "toxic case {case} step {k}: health rose {:.6e} -> {:.6e}",
                        step.h_before, step.h_after
                    )));
                }
                // A wiped-out position has no finite LTV; treat it as +∞.
                let ltv_after = step.position_after.ltv().unwrap_or(f64::INFINITY);
                if ltv_after <= prev_ltv {
                    return Ok(Some(format!(
                        "toxic case {case} step {k}: LTV fell {prev_ltv:.6e} -> \
                         {ltv_after:.6e}"
                    )));
                }
                prev_ltv = ltv_after;
            }
            Ok(None)
        };
        match run() {
            Ok(opt) => record(opt.is_none(), opt.unwrap_or_default(), &mut first_bad),
            Err(e) => {
                record(false, format!("toxic case {case}: {e}"), &mut first_bad)
            }
        }
    }

    // Benign cohort: deep pools, LTV at least 0.05 below the frontier,
    // so the spiral must restore health (or repay everything).
    for case in 0..100 {
        cases += 1;
        let depth_ratio = 10f64.powf(rng.gen_range(3.0..6.0));
        let v: f64 = rng.gen_range(0.5..0.85);
        let i_cap = (1.0 / (v + 0.09) - 1.0).min(0.2);
        let i: f64 = rng.gen_range(0.0..i_cap);
        let health_linked: bool = rng.gen_bool(0.5);

        let mut run = || -> Result<Option<String>, Box<dyn std::error::Error>> {
            let reserve = depth_ratio * PROBE_COLLATERAL_VALUE;
            let market = Market::cpamm(reserve, reserve)?;
            let lambda = market.penalty_factor(PROBE_COLLATERAL_VALUE);
            let frontier = if health_linked {
                toxicity::health_linked_frontier(i, v, lambda)
            } else {
                toxicity::constant_bonus_frontier(i, lambda)
            };
            let lo = v + 0.01;
            let hi = frontier - 0.05;
            let window = hi - lo;
            if !window.is_finite() || window <= 0.0 {
                // Construction guarantees a gap; treat failure loudly.
                return Ok(Some(format!(
                    "benign case {case}: empty LTV window [{lo:.4}, {hi:.4}]"
                )));
            }
            let ltv0: f64 = rng.gen_range(lo..hi);
            let params = RiskParams::new(v, i)?;
            let policy = if health_linked {
                IncentivePolicy::health_linked(i)?
            } else {
                IncentivePolicy::constant(i)?
            };
            let position = probe_position(&market, PROBE_COLLATERAL_VALUE, ltv0)?;
            let rule = StepRule::fixed_fraction(0.01)?;
            let traj =
                engine::run_spiral(&position, &params, &policy, &market, &rule, 100_000)?;
            match traj.outcome {
                SpiralOutcome::Recovered => benign_recovered += 1,
                SpiralOutcome::FullyRepaid => benign_repaid += 1,
                other => {
                    return Ok(Some(format!(
                        "benign case {case}: expected recovery, got {other:?} after {} \
                         steps",
                        traj.steps.len()
                    )))
                }
            }
            for (k, step) in traj.steps.iter().enumerate() {
                if step.h_after <= step.h_before {
                    return Ok(Some(format!(
                        "benign case {case} step {k}: health fell {:.6e} -> {:.6e}",
                        step.h_before, step.h_after
                    )));
                }
            }
            Ok(None)
        };
        match run() {
            Ok(opt) => record(opt.is_none(), opt.unwrap_or_default(), &mut first_bad),
            Err(e) => {
                record(false, format!("benign case {case}: {e}"), &mut first_bad)
            }
        }
    }

    CheckOutcome {
        name: NAME,
        passed: violations == 0,
        max_error: violations as f64,
        tolerance: 0.0,
        cases,
        detail: if violations == 0 {
            format!(
                "100 toxic spirals all monotone into bad debt ({toxic_bad_debt} \
                 confirmed); 100 benign spirals all monotone out \
                 ({benign_recovered} recovered, {benign_repaid} fully repaid)"
            )
        } else {
            first_bad
        },
    }
}

/// Check 8: exactness of the trade primitive. 10,000 random swaps must
/// conserve the pool invariant to 1e-12 relative, and for small trades
/// (ds/x ≤ 0.1) the exact log price move must match its linearisation
/// within the quadratic bound 2(ds/x)².
fn swap_exactness(config: &SuiteConfig) -> CheckOutcome {
    const NAME: &str = "swap-exactness";
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut max_drift: f64 = 0.0;
    let mut bound_violations = 0usize;
    let mut max_bound_ratio: f64 = 0.0;
    let mut cases = 0usize;

    // Invariant conservation over a wide trade range (ds/x up to 10).
    for _ in 0..10_000 {
        let x = 10f64.powf(rng.gen_range(2.0..8.0));
        let y = 10f64.powf(rng.gen_range(2.0..8.0));
        let ds = x * 10f64.powf(rng.gen_range(-6.0..1.0));
        let swap = CpAmmPool::new(x, y).and_then(|pool| {
            pool.sell_collateral(ds).map(|(_, after)| after.invariant_drift())
        });
        match swap {
            Ok(drift) => max_drift = max_drift.max(drift),
            Err(e) => return CheckOutcome::failed_with(NAME, TOL, e.to_string()),
        }
        cases += 1;
    }

    // Linearisation agreement for small trades (ds/x ≤ 0.1).
    for _ in 0..10_000 {
        let x = 10f64.powf(rng.gen_range(2.0..8.0));
        let y = 10f64.powf(rng.gen_range(2.0..8.0));
        let rel = 10f64.powf(rng.gen_range(-6.0..-1.0));
        let ds = x * rel;
        let swap = CpAmmPool::new(x, y).and_then(|pool| {
            let linear = pool.linearized_log_price_impact(ds);
            let before = pool.spot_price();
            pool.sell_collateral(ds)
                .map(|(_, after)| (after.spot_price() / before).ln() - linear)
        });
        match swap {
            Ok(residual) => {
                let residual = residual.abs();
                let bound = 2.0 * rel * rel;
                if residual > bound {
                    bound_violations += 1;
                }
                max_bound_ratio = max_bound_ratio.max(residual / bound);
            }
            Err(e) => return CheckOutcome::failed_with(NAME, TOL, e.to_string()),
        }
        cases += 1;
    }

    CheckOutcome {
        name: NAME,
        passed: max_drift <= TOL && bound_violations == 0,
        max_error: max_drift,
        tolerance: TOL,
        cases,
        detail: format!(
            "max invariant drift {max_drift:.3e}; linearisation residual/bound peaks at \
             {max_bound_ratio:.3} with {bound_violations} bound violations"
        ),
    }
}

/// Runs a sweep twice and confirms the results are identical field for
/// field — the sweep has no hidden state, so reruns must be bit-equal.
/// Exposed for the CLI's determinism check.
pub fn sweep_determinism_check() -> CheckOutcome {
    const NAME: &str = "sweep-determinism";
    let spec = SweepSpec {
        models: vec![ModelKind::CpAmm, ModelKind::Linear],
        lltv: vec![0.5, 0.8],
        max_bonus: vec![0.05],
        depth: vec![4.0, 1000.0],
        policies: vec![PolicyKind::Constant, PolicyKind::HealthLinked],
        eta: 1e-6,
        tol: 1e-8,
    };
    let run = || -> Result<(usize, usize), analysis::AnalysisError> {
        let a = analysis::run_sweep(&spec)?;
        let b = analysis::run_sweep(&spec)?;
        let mut mismatches = 0usize;
        for (ra, rb) in a.rows.iter().zip(b.rows.iter()) {
            let same = match (&ra.result, &rb.result) {
                (Ok(ca), Ok(cb)) => {
                    ca.lambda.to_bits() == cb.lambda.to_bits()
                        && ca.frontier_empirical.to_bits() == cb.frontier_empirical.to_bits()
                        && ca.boundary_safe_empirical.to_bits()
                            == cb.boundary_safe_empirical.to_bits()
                        && ca.spiral_outcome == cb.spiral_outcome
                        && ca.spiral_steps == cb.spiral_steps
                        && ca.spiral_final_health.to_bits()
                            == cb.spiral_final_health.to_bits()
                        && ca.spiral_bad_debt.to_bits() == cb.spiral_bad_debt.to_bits()
                }
                (Err(ea), Err(eb)) => ea == eb,
                _ => false,
            };
            if !same {
                mismatches += 1;
            }
        }
        Ok((a.rows.len(), mismatches))
    };
    match run() {
        Ok((cases, mismatches)) => CheckOutcome {
            name: NAME,
            passed: mismatches == 0,
            max_error: mismatches as f64,
            tolerance: 0.0,
            cases,
            detail: format!("{cases} cells compared bit for bit across two runs"),
        },
        Err(e) => CheckOutcome::failed_with(NAME, 0.0, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes_every_check() {
        let outcomes = run_core_checks(&SuiteConfig::default());
        assert_eq!(outcomes.len(), 8);
        for outcome in &outcomes {
            assert!(
                outcome.passed,
                "check {} failed: max_error = {:.3e} (tolerance {:.3e}); {}",
                outcome.name, outcome.max_error, outcome.tolerance, outcome.detail
            );
            assert!(outcome.cases > 0, "check {} examined no cases", outcome.name);
        }
    }

    #[test]
    fn suite_is_reproducible_across_runs() {
        let a = run_core_checks(&SuiteConfig::default());
        let b = run_core_checks(&SuiteConfig::default());
        for (oa, ob) in a.iter().zip(b.iter()) {
            assert_eq!(oa.name, ob.name);
            assert_eq!(oa.passed, ob.passed);
            assert_eq!(oa.max_error.to_bits(), ob.max_error.to_bits());
            assert_eq!(oa.cases, ob.cases);
        }
    }

    #[test]
    fn lambda_perturbation_trips_the_frontier_checks() {
        // A 1% analytic error in λ must be caught: the frontier
        // tolerances are orders of magnitude tighter than the shift it
        // causes. This is the proof the suite can actually fail.
        let config = SuiteConfig { seed: 42, lambda_scale: 1.01 };
        let outcomes = run_core_checks(&config);
        let by_name = |name: &str| {
            outcomes
                .iter()
                .find(|o| o.name == name)
                .unwrap_or_else(|| panic!("missing check {name}"))
        };
        assert!(!by_name("deep-pool-frontier-recovery").passed);
        assert!(!by_name("cpamm-frontier-agreement").passed);
        assert!(!by_name("health-linked-frontier-agreement").passed);
    }

    #[test]
    fn sweep_determinism_holds() {
        let outcome = sweep_determinism_check();
        assert!(outcome.passed, "{}", outcome.detail);
        assert_eq!(outcome.cases, 16);
    }
}
