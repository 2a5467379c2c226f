//! Configuration files: the TOML schema for scenarios, sweep grids, and
//! verification runs, plus validation and construction of engine-ready
//! values.
//!
//! Validation collects **every** violation before failing and reports
//! each with the dotted path of the offending field
//! (`market.cpamm.x`, `step_rule.fraction`, ...), so a bad file is fixed
//! in one round trip rather than one error per run.
//!
//! For constant-product markets the configured `position.price` must
//! agree with the pool spot `y / x` to one part in 10⁹; the built
//! position is then marked at the exact spot so the engine starts from a
//! bit-consistent state. For linear-impact markets `position.price`
//! *defines* the venue's mark price.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spiralsim::analysis::{ModelKind, SweepSpec};
use spiralsim::{
    IncentivePolicy, LinearImpactModel, Market, PolicyKind, Position, RiskParams, StepRule,
};

/// Relative tolerance for the `position.price` vs. pool-spot cross-check.
pub const PRICE_CONSISTENCY_REL: f64 = 1e-9;

/// Probe fraction used by sweeps when the file does not set one.
pub const DEFAULT_SWEEP_ETA: f64 = 1e-6;

/// Bisection tolerance used by sweeps when the file does not set one.
pub const DEFAULT_SWEEP_TOL: f64 = 1e-8;

/// Sampling seed used by `verify` when neither file nor flag sets one.
pub const DEFAULT_VERIFY_SEED: u64 = 42;

/// What can go wrong between a path on disk and a runnable scenario.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid configuration:\n  {}", violations.join("\n  "))]
    Invalid { violations: Vec<String> },
}

fn invalid(violations: Vec<String>) -> ConfigError {
    ConfigError::Invalid { violations }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse {
        origin: path.display().to_string(),
        message: e.to_string(),
    })
}

/// One violation, rendered as `path: requirement, got value`.
fn check(violations: &mut Vec<String>, ok: bool, path: &str, requirement: &str, got: f64) {
    if !ok {
        violations.push(format!("{path}: {requirement}, got {got}"));
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn non_negative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

fn open_unit(v: f64) -> bool {
    v.is_finite() && v > 0.0 && v < 1.0
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

/// The market half of a scenario: exactly one venue.
///
/// ```toml
/// [market.cpamm]
/// x = 1000.0
/// y = 1000.0
/// ```
/// or
/// ```toml
/// [market.linear]
/// gamma = 0.0
/// sigma = 1.0
/// L = 1000.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum MarketConfig {
    /// Constant-product pool holding `x` collateral and `y` debt tokens.
    Cpamm { x: f64, y: f64 },
    /// Linear impact venue: fraction lost to slippage is
    /// `gamma + (sigma / L) · value`.
    Linear {
        gamma: f64,
        sigma: f64,
        #[serde(rename = "L")]
        l: f64,
    },
}

/// Starting position: `s` collateral units marked at `price`, owing `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionConfig {
    pub s: f64,
    pub price: f64,
    pub q: f64,
}

/// Protocol risk parameters: liquidation threshold `v` and maximum
/// bonus `i_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub v: f64,
    pub i_max: f64,
}

/// Which bonus schedule the liquidator is paid under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyConfig {
    /// Flat bonus `i_max` regardless of health.
    Constant,
    /// Bonus `i_max · (1 − h)`, zero at the liquidation boundary.
    HealthLinked,
}

impl PolicyConfig {
    pub fn kind(self) -> PolicyKind {
        match self {
            PolicyConfig::Constant => PolicyKind::Constant,
            PolicyConfig::HealthLinked => PolicyKind::HealthLinked,
        }
    }

    /// Stable lowercase label used in tabular output.
    pub fn label(self) -> &'static str {
        match self {
            PolicyConfig::Constant => "constant",
            PolicyConfig::HealthLinked => "health_linked",
        }
    }
}

/// How much debt each liquidation step repays.
///
/// ```toml
/// step_rule = { fraction = 0.01 }   # or { amount = 1.5 }
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum StepRuleConfig {
    /// Repay this fraction of the *current* debt each step.
    Fraction(f64),
    /// Repay this fixed amount each step (capped at the remaining debt).
    Amount(f64),
}

/// A complete scenario file. `max_steps` defaults to 100 000 and `seed`
/// to 0 when omitted; everything else is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub market: MarketConfig,
    pub position: PositionConfig,
    pub params: ParamsConfig,
    pub policy: PolicyConfig,
    pub step_rule: StepRuleConfig,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_steps() -> usize {
    100_000
}

/// Engine-ready values built from a validated [`ScenarioConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub market: Market,
    pub position: Position,
    pub params: RiskParams,
    pub policy: IncentivePolicy,
    pub rule: StepRule,
    pub max_steps: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        read_toml(path)
    }

    /// Every constraint of the underlying types, each failure tagged
    /// with its field path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        match self.market {
            MarketConfig::Cpamm { x, y } => {
                check(&mut v, positive(x), "market.cpamm.x", "must be a positive finite number", x);
                check(&mut v, positive(y), "market.cpamm.y", "must be a positive finite number", y);
            }
            MarketConfig::Linear { gamma, sigma, l } => {
                check(
                    &mut v,
                    gamma.is_finite() && (0.0..1.0).contains(&gamma),
                    "market.linear.gamma",
                    "must lie in [0, 1)",
                    gamma,
                );
                check(&mut v, non_negative(sigma), "market.linear.sigma", "must be a non-negative finite number", sigma);
                check(&mut v, positive(l), "market.linear.L", "must be a positive finite number", l);
            }
        }
        check(&mut v, non_negative(self.position.s), "position.s", "must be a non-negative finite number", self.position.s);
        check(&mut v, positive(self.position.price), "position.price", "must be a positive finite number", self.position.price);
        check(&mut v, non_negative(self.position.q), "position.q", "must be a non-negative finite number", self.position.q);
        check(&mut v, open_unit(self.params.v), "params.v", "must lie strictly between 0 and 1", self.params.v);
        check(&mut v, non_negative(self.params.i_max), "params.i_max", "must be a non-negative finite number", self.params.i_max);
        match self.step_rule {
            StepRuleConfig::Fraction(f) => {
                check(&mut v, f.is_finite() && f > 0.0 && f <= 1.0, "step_rule.fraction", "must lie in (0, 1]", f);
            }
            StepRuleConfig::Amount(a) => {
                check(&mut v, positive(a), "step_rule.amount", "must be a positive finite number", a);
            }
        }
        if self.max_steps == 0 {
            v.push("max_steps: must be at least 1".into());
        }
        // Cross-field: for a constant-product market the configured price
        // must agree with the pool spot, which then becomes the canonical
        // mark.
        if let MarketConfig::Cpamm { x, y } = self.market {
            if positive(x) && positive(y) && positive(self.position.price) {
                let spot = y / x;
                if (self.position.price - spot).abs() > PRICE_CONSISTENCY_REL * spot {
                    v.push(format!(
                        "position.price: must match the pool spot price y/x = {spot} to relative {PRICE_CONSISTENCY_REL:e}, got {}",
                        self.position.price
                    ));
                }
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(invalid(v))
        }
    }

    /// Validate and construct the engine-ready scenario.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        self.validate()?;
        let err = |path: &str, e: &dyn std::fmt::Display| invalid(vec![format!("{path}: {e}")]);
        let (market, mark_price) = match self.market {
            MarketConfig::Cpamm { x, y } => {
                let market = Market::cpamm(x, y).map_err(|e| err("market.cpamm", &e))?;
                let spot = market.price();
                (market, spot)
            }
            MarketConfig::Linear { gamma, sigma, l } => {
                let model =
                    LinearImpactModel::new(gamma, sigma, l).map_err(|e| err("market.linear", &e))?;
                let market = Market::linear(model, self.position.price)
                    .map_err(|e| err("market.linear", &e))?;
                (market, self.position.price)
            }
        };
        let position = Position::new(self.position.s, self.position.q, mark_price)
            .map_err(|e| err("position", &e))?;
        let params =
            RiskParams::new(self.params.v, self.params.i_max).map_err(|e| err("params", &e))?;
        let policy = IncentivePolicy::from_kind(self.policy.kind(), self.params.i_max)
            .map_err(|e| err("policy", &e))?;
        let rule = match self.step_rule {
            StepRuleConfig::Fraction(f) => {
                StepRule::fixed_fraction(f).map_err(|e| err("step_rule.fraction", &e))?
            }
            StepRuleConfig::Amount(a) => {
                StepRule::fixed_amount(a).map_err(|e| err("step_rule.amount", &e))?
            }
        };
        Ok(Scenario {
            market,
            position,
            params,
            policy,
            rule,
            max_steps: self.max_steps,
            seed: self.seed,
        })
    }
}

// ---------------------------------------------------------------------------
// Sweep grid files
// ---------------------------------------------------------------------------

/// Which venue model a sweep cell uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelConfig {
    Cpamm,
    Linear,
}

impl ModelConfig {
    pub fn kind(self) -> ModelKind {
        match self {
            ModelConfig::Cpamm => ModelKind::CpAmm,
            ModelConfig::Linear => ModelKind::Linear,
        }
    }
}

/// A sweep grid file: one list per axis, visited in nested order with
/// the later axes varying fastest.
///
/// ```toml
/// models = ["cpamm", "linear"]
/// v = [0.5, 0.7, 0.8]
/// i_max = [0.0, 0.05, 0.1]
/// depth = [4.0, 10.0, 40.0]
/// policies = ["constant", "health_linked"]
/// ```
///
/// `depth` is the dimensionless reserve-to-collateral ratio `y / c`; the
/// linear venue is mapped onto the same axis by matching penalty
/// factors. `eta`, `tol`, and `seed` are optional and overridable from
/// the command line. The sweep itself draws no random numbers, so the
/// seed does not change the output; it is carried for interface
/// symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub models: Vec<ModelConfig>,
    pub v: Vec<f64>,
    pub i_max: Vec<f64>,
    pub depth: Vec<f64>,
    pub policies: Vec<PolicyConfig>,
    #[serde(default = "default_sweep_eta")]
    pub eta: f64,
    #[serde(default = "default_sweep_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_sweep_eta() -> f64 {
    DEFAULT_SWEEP_ETA
}

fn default_sweep_tol() -> f64 {
    DEFAULT_SWEEP_TOL
}

impl GridConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        read_toml(path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        for (name, len) in [
            ("models", self.models.len()),
            ("v", self.v.len()),
            ("i_max", self.i_max.len()),
            ("depth", self.depth.len()),
            ("policies", self.policies.len()),
        ] {
            if len == 0 {
                v.push(format!("{name}: axis must not be empty"));
            }
        }
        for (idx, &value) in self.v.iter().enumerate() {
            check(&mut v, open_unit(value), &format!("v[{idx}]"), "must lie strictly between 0 and 1", value);
        }
        for (idx, &value) in self.i_max.iter().enumerate() {
            check(&mut v, non_negative(value), &format!("i_max[{idx}]"), "must be a non-negative finite number", value);
        }
        for (idx, &value) in self.depth.iter().enumerate() {
            check(&mut v, positive(value), &format!("depth[{idx}]"), "must be a positive finite number", value);
        }
        check(&mut v, open_unit(self.eta), "eta", "must lie strictly between 0 and 1", self.eta);
        check(&mut v, positive(self.tol), "tol", "must be a positive finite number", self.tol);
        if v.is_empty() {
            Ok(())
        } else {
            Err(invalid(v))
        }
    }

    /// Convert to the analysis-layer sweep specification.
    pub fn to_spec(&self) -> SweepSpec {
        SweepSpec {
            models: self.models.iter().map(|m| m.kind()).collect(),
            lltv: self.v.clone(),
            max_bonus: self.i_max.clone(),
            depth: self.depth.clone(),
            policies: self.policies.iter().map(|p| p.kind()).collect(),
            eta: self.eta,
            tol: self.tol,
        }
    }
}

// ---------------------------------------------------------------------------
// Verification run files
// ---------------------------------------------------------------------------

/// Settings for `verify`. Both fields are optional; the defaults
/// reproduce the shipped verification run exactly.
///
/// `lambda_scale` multiplies the analytic penalty factor inside the
/// frontier-agreement checks only — `1.0` is the honest run, and any
/// other value demonstrates that those checks actually bite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_verify_seed")]
    pub seed: u64,
    #[serde(default = "default_lambda_scale")]
    pub lambda_scale: f64,
}

fn default_verify_seed() -> u64 {
    DEFAULT_VERIFY_SEED
}

fn default_lambda_scale() -> f64 {
    1.0
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: DEFAULT_VERIFY_SEED,
            lambda_scale: 1.0,
        }
    }
}

impl VerifyConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        read_toml(path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        check(&mut v, positive(self.lambda_scale), "lambda_scale", "must be a positive finite number", self.lambda_scale);
        if v.is_empty() {
            Ok(())
        } else {
            Err(invalid(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_scenario() -> ScenarioConfig {
        ScenarioConfig {
            market: MarketConfig::Cpamm { x: 1000.0, y: 1000.0 },
            position: PositionConfig { s: 100.0, price: 1.0, q: 85.0 },
            params: ParamsConfig { v: 0.8, i_max: 0.05 },
            policy: PolicyConfig::Constant,
            step_rule: StepRuleConfig::Fraction(0.01),
            max_steps: 50_000,
            seed: 7,
        }
    }

    #[test]
    fn scenario_round_trips_through_toml() {
        let config = sample_scenario();
        let text = toml::to_string(&config).expect("serializes");
        let reloaded: ScenarioConfig = toml::from_str(&text).expect("parses");
        assert_eq!(reloaded, config);
    }

    #[test]
    fn violations_carry_field_paths() {
        let mut config = sample_scenario();
        config.params.v = 1.2;
        config.position.q = f64::NAN;
        let err = config.validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("params.v"), "missing path in: {text}");
        assert!(text.contains("position.q"), "missing path in: {text}");
    }

    #[test]
    fn cpamm_price_must_match_spot() {
        let mut config = sample_scenario();
        config.position.price = 1.5;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("position.price"));

        // Within tolerance the build canonicalizes the mark to the exact
        // spot price.
        config.market = MarketConfig::Cpamm { x: 3000.0, y: 1000.0 };
        config.position.price = 0.333333333333; // spot is 0.333...; off by ~1e-12 rel
        let scenario = config.build().expect("builds");
        assert_eq!(scenario.position.mark_price(), 1000.0 / 3000.0);
    }

    #[test]
    fn linear_market_takes_price_from_position() {
        let mut config = sample_scenario();
        config.market = MarketConfig::Linear { gamma: 0.0, sigma: 1.0, l: 1000.0 };
        config.position.price = 2.0;
        let scenario = config.build().expect("builds");
        assert_eq!(scenario.market.price(), 2.0);
        assert_eq!(scenario.position.mark_price(), 2.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = "\
[market.cpamm]
x = 1000.0
y = 1000.0
bonus = 3.0

[position]
s = 100.0
price = 1.0
q = 85.0

[params]
v = 0.8
i_max = 0.05

policy = \"constant\"
step_rule = { fraction = 0.01 }
";
        let err = toml::from_str::<ScenarioConfig>(text).unwrap_err();
        assert!(err.to_string().contains("bonus"));
    }

    #[test]
    fn step_rule_amount_variant_parses() {
        let text = "\
policy = \"health_linked\"
step_rule = { amount = 2.5 }

[market.linear]
gamma = 0.1
sigma = 1.0
L = 500.0

[position]
s = 10.0
price = 3.0
q = 25.0

[params]
v = 0.7
i_max = 0.1
";
        let config: ScenarioConfig = toml::from_str(text).expect("parses");
        assert_eq!(config.step_rule, StepRuleConfig::Amount(2.5));
        assert_eq!(config.max_steps, 100_000);
        let scenario = config.build().expect("builds");
        assert!(matches!(scenario.rule, StepRule::FixedAmount(a) if a == 2.5));
    }

    #[test]
    fn empty_grid_axis_is_a_usage_error() {
        let grid = GridConfig {
            models: vec![ModelConfig::Cpamm],
            v: vec![],
            i_max: vec![0.05],
            depth: vec![10.0],
            policies: vec![PolicyConfig::Constant],
            eta: DEFAULT_SWEEP_ETA,
            tol: DEFAULT_SWEEP_TOL,
            seed: 0,
        };
        let err = grid.validate().unwrap_err();
        assert!(err.to_string().contains("v: axis must not be empty"));
    }

    #[test]
    fn verify_config_defaults_are_the_shipped_run() {
        let config = VerifyConfig::default();
        assert_eq!(config.seed, DEFAULT_VERIFY_SEED);
        assert_eq!(config.lambda_scale, 1.0);
        config.validate().expect("valid");
    }
}
