//! Library surface of the `spiralsim` command-line tool.
//!
//! The binary in `main.rs` is a thin argument parser; everything it does
//! lives here so integration tests can drive the same code paths
//! in-process:
//!
//! - [`config`] — TOML schema, field-path validation, and construction
//!   of engine-ready scenarios, sweep grids, and verification settings.
//! - [`format`] — canonical 12-significant-digit rendering and the
//!   CSV / line-delimited-JSON table writers.
//! - [`commands`] — the `frontier`, `simulate`, `sweep`, and `verify`
//!   subcommand implementations and their exit-code policy.

pub mod commands;
pub mod config;
pub mod format;
