//! Benchmark harness: build a problem from a TOML run configuration, solve
//! it, and write `trace.csv` plus `summary.json`; or run several engines over
//! a range of seeds and tabulate oracle counts.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod error;
pub mod instance;
pub mod output;
pub mod run;

pub use compare::{compare, CompareReport, CompareRow};
pub use config::{Algorithm, ProblemConfig, RunConfig, StepPolicy};
pub use error::BenchError;
pub use run::{execute, RunOutcome, Summary, TraceRow};
