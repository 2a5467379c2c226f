//! Subcommand implementations, shared by the binary and the integration
//! tests.
//!
//! Every command follows the same shape: load and validate configuration
//! (exit 2 on any problem), do the work (domain failures exit 1), and
//! render tables through [`crate::format`] so output bytes are
//! deterministic. Human-facing notes — the simulate summary line,
//! zero-collateral warnings — go to stderr so stdout stays parseable.

use std::io::Write;
use std::path::Path;

use spiralsim::analysis::suite::{run_core_checks, sweep_determinism_check, SuiteConfig};
use spiralsim::analysis::{run_sweep, AnalysisError};
use spiralsim::engine::{run_spiral, EngineError};
use spiralsim::toxicity::{constant_bonus_frontier, health_linked_frontier, max_safe_lltv};
use spiralsim::{PolicyKind, SpiralOutcome};

use crate::config::{ConfigError, GridConfig, ScenarioConfig, VerifyConfig};
use crate::format::{num, open_sink, write_table, Cell, OutputFormat};

/// Command failures, partitioned by exit code: configuration and I/O
/// problems exit 2, domain failures (not liquidatable, verification red)
/// exit 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config(_) | CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

/// Stable lowercase label for a spiral outcome.
pub fn outcome_label(outcome: SpiralOutcome) -> &'static str {
    match outcome {
        SpiralOutcome::Recovered => "recovered",
        SpiralOutcome::FullyRepaid => "fully_repaid",
        SpiralOutcome::BadDebt => "bad_debt",
        SpiralOutcome::MaxSteps => "max_steps",
    }
}

fn policy_label(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::Constant => "constant",
        PolicyKind::HealthLinked => "health_linked",
    }
}

/// Columns of the `frontier` report, in output order.
pub const FRONTIER_COLUMNS: [&str; 5] = [
    "collateral_value",
    "lambda",
    "constant_frontier",
    "health_linked_frontier",
    "max_safe_lltv",
];

/// Columns of the per-step `simulate` trajectory, in output order.
pub const TRAJECTORY_COLUMNS: [&str; 12] = [
    "step",
    "da",
    "ds",
    "proceeds",
    "i_applied",
    "h_before",
    "h_after",
    "lambda_before",
    "price_after",
    "s_after",
    "q_after",
    "liquidator_pnl",
];

/// Columns of the `sweep` table, in output order. `error` is empty for
/// cells that evaluated cleanly.
pub const SWEEP_COLUMNS: [&str; 16] = [
    "model",
    "v",
    "i_max",
    "depth_ratio",
    "policy",
    "lambda",
    "frontier_analytic",
    "frontier_empirical",
    "abs_error",
    "boundary_safe_analytic",
    "boundary_safe_empirical",
    "outcome",
    "steps",
    "final_health",
    "bad_debt",
    "error",
];

/// Report the penalty factor, both toxicity frontiers, and the maximum
/// safe liquidation threshold for the configured market and position.
pub fn cmd_frontier(
    config: &Path,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let scenario = ScenarioConfig::load(config)?.build()?;
    let collateral_value = scenario.position.collateral_value();
    if collateral_value == 0.0 {
        eprintln!(
            "warning: collateral value is zero; sales have no price impact and the penalty factor is exactly 1"
        );
    }
    let lambda = scenario.market.penalty_factor(collateral_value);
    let i_max = scenario.params.i_max();
    let row = vec![
        Cell::Num(collateral_value),
        Cell::Num(lambda.value()),
        Cell::Num(constant_bonus_frontier(i_max, lambda)),
        Cell::Num(health_linked_frontier(i_max, scenario.params.lltv(), lambda)),
        Cell::Num(max_safe_lltv(lambda)),
    ];
    let mut sink = open_sink(out)?;
    write_table(&mut sink, format, &FRONTIER_COLUMNS, &[row])?;
    sink.flush()?;
    Ok(())
}

/// Run one liquidation spiral and write the per-step trajectory, plus a
/// one-line summary on stderr.
pub fn cmd_simulate(
    config: &Path,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let scenario = ScenarioConfig::load(config)?.build()?;
    let trajectory = run_spiral(
        &scenario.position,
        &scenario.params,
        &scenario.policy,
        &scenario.market,
        &scenario.rule,
        scenario.max_steps,
    )
    .map_err(|e| match e {
        EngineError::NotLiquidatable { health } => CliError::Run(format!(
            "position is not liquidatable: health = {} >= 1; simulate requires a starting health below 1",
            num(health)
        )),
        other => CliError::Run(format!("simulation failed: {other}")),
    })?;

    let rows: Vec<Vec<Cell>> = trajectory
        .steps
        .iter()
        .enumerate()
        .map(|(index, step)| {
            vec![
                Cell::Int(index as u64),
                Cell::Num(step.da),
                Cell::Num(step.ds),
                Cell::Num(step.proceeds),
                Cell::Num(step.i_applied),
                Cell::Num(step.h_before),
                Cell::Num(step.h_after),
                Cell::Num(step.lambda_before),
                Cell::Num(step.market_after.price()),
                Cell::Num(step.position_after.collateral_units()),
                Cell::Num(step.position_after.debt()),
                Cell::Num(step.liquidator_pnl()),
            ]
        })
        .collect();

    let mut sink = open_sink(out)?;
    write_table(&mut sink, format, &TRAJECTORY_COLUMNS, &rows)?;
    sink.flush()?;

    eprintln!(
        "summary: outcome={} steps={} final_health={} bad_debt={}",
        outcome_label(trajectory.outcome),
        trajectory.steps.len(),
        num(trajectory.final_health(&scenario.params)),
        num(trajectory.bad_debt),
    );
    Ok(())
}

/// Flag overrides for `sweep`; `None` keeps the config-file value.
#[derive(Debug, Default, Clone, Copy)]
pub struct SweepFlags {
    pub eta: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

/// Evaluate frontier agreement, boundary safety, and a reference spiral
/// over the configured parameter grid; one output row per cell.
pub fn cmd_sweep(
    config: &Path,
    out: Option<&Path>,
    format: OutputFormat,
    flags: SweepFlags,
) -> Result<(), CliError> {
    let mut grid = GridConfig::load(config)?;
    if let Some(eta) = flags.eta {
        grid.eta = eta;
    }
    if let Some(tol) = flags.tol {
        grid.tol = tol;
    }
    if let Some(seed) = flags.seed {
        grid.seed = seed;
    }
    grid.validate()?;

    let result = run_sweep(&grid.to_spec()).map_err(|e| match e {
        AnalysisError::InvalidParameter(msg) => CliError::Usage(msg),
        other => CliError::Run(format!("sweep failed: {other}")),
    })?;

    let rows: Vec<Vec<Cell>> = result
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![
                Cell::Text(row.cell.model.label().into()),
                Cell::Num(row.cell.lltv),
                Cell::Num(row.cell.max_bonus),
                Cell::Num(row.cell.depth),
                Cell::Text(policy_label(row.cell.policy).into()),
            ];
            match &row.result {
                Ok(r) => cells.extend([
                    Cell::Num(r.lambda),
                    Cell::Num(r.frontier_analytic),
                    Cell::Num(r.frontier_empirical),
                    Cell::Num(r.frontier_abs_error),
                    Cell::Num(r.boundary_safe_analytic),
                    Cell::Num(r.boundary_safe_empirical),
                    Cell::Text(outcome_label(r.spiral_outcome).into()),
                    Cell::Int(r.spiral_steps as u64),
                    Cell::Num(r.spiral_final_health),
                    Cell::Num(r.spiral_bad_debt),
                    Cell::Null,
                ]),
                Err(message) => {
                    cells.resize(SWEEP_COLUMNS.len() - 1, Cell::Null);
                    cells.push(Cell::Text(message.clone()));
                }
            }
            cells
        })
        .collect();

    let mut sink = open_sink(out)?;
    write_table(&mut sink, format, &SWEEP_COLUMNS, &rows)?;
    sink.flush()?;
    Ok(())
}

/// Flag overrides for `verify`; `None` keeps the config-file value (or
/// the built-in default when no file is given).
#[derive(Debug, Default, Clone, Copy)]
pub struct VerifyFlags {
    pub seed: Option<u64>,
    pub lambda_scale: Option<f64>,
}

/// Run the full verification suite and print one line per check; exits
/// nonzero unless every check passes.
pub fn cmd_verify(
    config: Option<&Path>,
    out: Option<&Path>,
    flags: VerifyFlags,
) -> Result<(), CliError> {
    let mut verify = match config {
        Some(path) => VerifyConfig::load(path)?,
        None => VerifyConfig::default(),
    };
    if let Some(seed) = flags.seed {
        verify.seed = seed;
    }
    if let Some(scale) = flags.lambda_scale {
        verify.lambda_scale = scale;
    }
    verify.validate()?;

    let suite = SuiteConfig {
        seed: verify.seed,
        lambda_scale: verify.lambda_scale,
    };
    let mut checks = run_core_checks(&suite);
    checks.push(sweep_determinism_check());

    let mut sink = open_sink(out)?;
    let mut failed = 0usize;
    for check in &checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        if !check.passed {
            failed += 1;
        }
        let mut line = format!(
            "{status} {}: cases={} max_error={} tolerance={}",
            check.name,
            check.cases,
            num(check.max_error),
            num(check.tolerance),
        );
        if !check.detail.is_empty() {
            line.push_str(&format!(" ({})", check.detail));
        }
        writeln!(sink, "{line}")?;
    }
    writeln!(sink, "result: {}/{} checks passed", checks.len() - failed, checks.len())?;
    sink.flush()?;

    if failed > 0 {
        return Err(CliError::Run(format!(
            "{failed} of {} verification checks failed",
            checks.len()
        )));
    }
    Ok(())
}
