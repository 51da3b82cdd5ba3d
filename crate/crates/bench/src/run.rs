//! A single solve: configuration in, trace and summary out.

use std::path::Path;

use qnsplit::admm::{self, admm_ls_solve, admm_solve, AdmmConfig};
use qnsplit::certificate::{certificate_admm, certificate_drs};
use qnsplit::drs::{self, drs_ls_solve, drs_solve, DrsConfig};
use qnsplit::trace::{Counters, IterationRecord, Status};
use qnsplit::Error;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, RunConfig, StepPolicy};
use crate::error::BenchError;
use crate::instance::{self, Instance};
use crate::output::{write_atomic, write_trace};

/// Version of the `summary.json` layout.
pub const SUMMARY_SCHEMA: u32 = 1;

/// Tolerance on `‖∇f(x) + Aᵀy‖` when judging ADMM certificates.
const X_STATIONARITY_TOL: f64 = 1e-8;

/// One row of `trace.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub res_norm: f64,
    pub merit: f64,
    pub tau: f64,
    pub backtracks: usize,
    /// Cumulative φ₁-prox (DRS) or x-step (ADMM) calls, the linear systems
    /// solved for the quadratic problems.
    pub oracle_calls: usize,
    pub time_s: f64,
}

impl From<&IterationRecord> for TraceRow {
    fn from(rec: &IterationRecord) -> Self {
        TraceRow {
            k: rec.k,
            res_norm: rec.res_norm,
            merit: rec.merit,
            tau: rec.tau,
            backtracks: rec.backtracks,
            oracle_calls: rec.cumulative.prox1,
            time_s: rec.elapsed_s,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub family: &'static str,
    pub algorithm: &'static str,
    pub engine: &'static str,
    pub seed: u64,
    pub status: Status,
    pub iterations: usize,
    /// `"gamma"` or `"beta"`.
    pub step_name: &'static str,
    /// Step parameter in force at termination.
    pub step: f64,
    pub lambda: f64,
    pub c: f64,
    pub epsilon: f64,
    /// `‖r‖/γ` (DRS) or `β‖r‖` (ADMM) at the final iterate.
    pub final_residual: f64,
    /// `φ₁(u) + φ₂(v)` (DRS) or `f(x) + g(z)` (ADMM) at the final iterate,
    /// each term evaluated at its own oracle output.
    pub objective: f64,
    pub initial_merit: f64,
    pub final_merit: Option<f64>,
    /// All oracle calls, including the evaluation of the starting point.
    pub totals: Counters,
    pub init_calls: Counters,
    pub backtracks: usize,
    pub fallbacks: usize,
    /// Iterations at which the adaptive guard changed the step.
    pub adjustments: Vec<usize>,
    /// `null` unless the run converged.
    pub certificate: Option<serde_json::Value>,
    pub certificate_holds: Option<bool>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub trace: Vec<TraceRow>,
}

impl RunOutcome {
    /// Writes `trace.csv` and `summary.json` into `dir`, creating it if
    /// needed. Each file appears atomically.
    pub fn write(&self, dir: &Path) -> Result<(), BenchError> {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        write_trace(&dir.join("trace.csv"), &self.trace)?;
        let json = serde_json::to_vec_pretty(&self.summary).expect("summary serializes");
        write_atomic(&dir.join("summary.json"), &json)
    }
}

fn explicit_c(config: &RunConfig, constant: qnsplit::Result<f64>, what: &str, value: f64) -> Result<f64, BenchError> {
    let big_c = constant?;
    if !(big_c > 0.0) {
        return Err(BenchError::Validation(format!(
            "{what} = {value} is outside the admissible range (decrease constant {big_c})"
        )));
    }
    Ok(config.c_fraction * big_c)
}

fn drs_config(config: &RunConfig, problem: &qnsplit::SplitProblem) -> Result<DrsConfig, BenchError> {
    let (lambda, cf) = (config.lambda, config.c_fraction);
    let base = match config.step {
        StepPolicy::Explicit { value } => {
            let c = explicit_c(config, drs::regime_constant(problem.regime(), value, lambda), "gamma", value)?;
            DrsConfig {
                lambda,
                gamma: value,
                c,
                ..DrsConfig::default()
            }
        }
        StepPolicy::Fraction { value } => DrsConfig::from_bounds(problem, lambda, value, cf)?,
        StepPolicy::Adaptive {
            value,
            fraction,
            lower_bound,
        } => DrsConfig {
            phi_lb: lower_bound,
            ..DrsConfig::adaptive(problem, lambda, value, fraction, cf)?
        },
    };
    let cfg = DrsConfig {
        epsilon: config.epsilon,
        max_iters: config.max_iters,
        i_max: config.i_max(),
        quadcache: config.quadcache,
        ..base
    };
    cfg.validate(problem)?;
    Ok(cfg)
}

fn admm_config(config: &RunConfig, problem: &dyn admm::AdmmProblem) -> Result<AdmmConfig, BenchError> {
    let (lambda, cf) = (config.lambda, config.c_fraction);
    let base = match config.step {
        StepPolicy::Explicit { value } => {
            let c = explicit_c(config, admm::regime_constant(problem.regime(), value, lambda), "beta", value)?;
            AdmmConfig {
                lambda,
                beta: value,
                c,
                ..AdmmConfig::default()
            }
        }
        StepPolicy::Fraction { value } => AdmmConfig::from_bounds(problem, lambda, value, cf)?,
        StepPolicy::Adaptive {
            value,
            fraction,
            lower_bound,
        } => AdmmConfig {
            phi_lb: lower_bound,
            ..AdmmConfig::adaptive(problem, lambda, value, fraction, cf)?
        },
    };
    let cfg = AdmmConfig {
        epsilon: config.epsilon,
        max_iters: config.max_iters,
        i_max: config.i_max(),
        quadcache: config.quadcache,
        ..base
    };
    cfg.validate(problem)?;
    Ok(cfg)
}

fn totals(trace: &[IterationRecord]) -> (usize, usize) {
    (
        trace.iter().map(|r| r.backtracks).sum(),
        trace.iter().filter(|r| r.fallback).count(),
    )
}

/// Validates `config`, builds the instance and solves it.
pub fn execute(config: &RunConfig) -> Result<RunOutcome, BenchError> {
    config.validate()?;
    let kind = config.engine_kind()?;
    let explicit_beta = match config.step {
        StepPolicy::Explicit { value } | StepPolicy::Adaptive { value, .. } if config.algorithm.is_admm() => Some(value),
        _ => None,
    };
    let instance = instance::build(&config.problem, config.algorithm, config.seed, explicit_beta)?;
    let family = config.problem.family();
    let summary_and_trace = match instance {
        Instance::Split { problem, s0 } => {
            let cfg = drs_config(config, &problem)?;
            let report = match config.algorithm {
                Algorithm::Drs => drs_solve(&problem, &s0, &cfg)?,
                _ => {
                    let mut engine = kind.build(problem.dim(), cfg.lambda);
                    drs_ls_solve(&problem, &s0, &cfg, engine.as_mut())?
                }
            };
            let certificate = match certificate_drs(&problem, &report) {
                Ok(cert) => Some(cert),
                Err(Error::CertificateUnavailable) => None,
                Err(e) => return Err(e.into()),
            };
            let state = &report.state;
            let (backtracks, fallbacks) = totals(&report.trace);
            let summary = Summary {
                schema: SUMMARY_SCHEMA,
                family,
                algorithm: config.algorithm.name(),
                engine: report.engine,
                seed: config.seed,
                status: report.status,
                iterations: report.iterations,
                step_name: "gamma",
                step: report.gamma,
                lambda: report.lambda,
                c: report.c,
                epsilon: report.epsilon,
                final_residual: state.r.norm() / report.gamma,
                objective: problem.phi1().value(&state.u) + problem.phi2().value(&state.v),
                initial_merit: report.initial_merit,
                final_merit: report.trace.last().map(|r| r.merit_next),
                totals: report.counters,
                init_calls: report.init_calls,
                backtracks,
                fallbacks,
                adjustments: report.adjustments.clone(),
                certificate_holds: certificate.as_ref().map(|c| c.holds()),
                certificate: certificate.map(|c| serde_json::to_value(c).expect("certificate serializes")),
                elapsed_s: report.trace.last().map_or(0.0, |r| r.elapsed_s),
            };
            (summary, report.trace)
        }
        Instance::Admm { problem, init } => {
            let cfg = admm_config(config, problem.as_ref())?;
            let init = (&init.0, &init.1, &init.2);
            let report = match config.algorithm {
                Algorithm::Admm => admm_solve(problem.as_ref(), init, &cfg)?,
                _ => {
                    // directions live in the space of the DRS image `Ax − y/β`
                    let (_, _, nb) = problem.dims();
                    let mut engine = kind.build(nb, cfg.lambda);
                    admm_ls_solve(problem.as_ref(), init, &cfg, engine.as_mut())?
                }
            };
            let certificate = match certificate_admm(problem.as_ref(), &report) {
                Ok(cert) => Some(cert),
                Err(Error::CertificateUnavailable) => None,
                Err(e) => return Err(e.into()),
            };
            let state = &report.state;
            let (backtracks, fallbacks) = totals(&report.trace);
            let summary = Summary {
                schema: SUMMARY_SCHEMA,
                family,
                algorithm: config.algorithm.name(),
                engine: report.engine,
                seed: config.seed,
                status: report.status,
                iterations: report.iterations,
                step_name: "beta",
                step: report.beta,
                lambda: report.lambda,
                c: report.c,
                epsilon: report.epsilon,
                final_residual: report.beta * problem.residual(&state.x, &state.z).norm(),
                objective: problem.f_value(&state.x) + problem.g_value(&state.z),
                initial_merit: report.initial_merit,
                final_merit: report.trace.last().map(|r| r.merit_next),
                totals: report.counters,
                init_calls: report.init_calls,
                backtracks,
                fallbacks,
                adjustments: report.adjustments.clone(),
                certificate_holds: certificate.as_ref().map(|c| c.holds(X_STATIONARITY_TOL)),
                certificate: certificate.map(|c| serde_json::to_value(c).expect("certificate serializes")),
                elapsed_s: report.trace.last().map_or(0.0, |r| r.elapsed_s),
            };
            (summary, report.trace)
        }
    };
    let (summary, trace) = summary_and_trace;
    Ok(RunOutcome {
        summary,
        trace: trace.iter().map(TraceRow::from).collect(),
    })
}
