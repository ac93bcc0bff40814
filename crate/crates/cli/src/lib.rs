//! Experiment harness around `qrk-core`: configuration, multi-trial runs,
//! trace persistence, aggregation and SVG plots.
//!
//! The `qrk` binary exposes four subcommands: `gen` writes a problem
//! directory, `solve` runs trials and writes traces, `bench` adds
//! cross-trial aggregates and plots, and `rate` tabulates the theoretical
//! contraction factor.

pub mod aggregate;
pub mod commands;
pub mod config;
pub mod error;
pub mod problem_io;
pub mod runner;
pub mod svg;
pub mod tracefile;

pub use config::{ExperimentConfig, PartialConfig, SolverKind};
pub use error::CliError;
