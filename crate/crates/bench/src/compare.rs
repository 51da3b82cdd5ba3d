//! Several engines over a range of seeds, tabulated against the plain method.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use qnsplit::trace::Status;
use serde::Serialize;

use crate::config::{Algorithm, RunConfig};
use crate::error::BenchError;
use crate::output::{write_atomic, write_csv};
use crate::run::{execute, RunOutcome, SUMMARY_SCHEMA};

/// One solve inside a comparison.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub seed: u64,
    pub status: Status,
    pub iterations: usize,
    /// φ₁-prox or x-step calls, the quantity the table aggregates.
    pub oracle_calls: usize,
    pub total_prox: usize,
    pub objective: f64,
    /// `(objective − baseline)/|baseline|` against the plain method on the
    /// same seed.
    pub relative_objective: f64,
}

/// Aggregate over seeds for one engine. Runs that hit the iteration limit
/// are included with the count they stopped at.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub runs: usize,
    pub converged: usize,
    pub q1_calls: f64,
    pub median_calls: f64,
    pub q3_calls: f64,
    pub median_iterations: f64,
    pub median_relative_objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub schema: u32,
    pub family: &'static str,
    pub baseline: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<CompareRow>,
    pub runs: Vec<RunRecord>,
}

impl CompareReport {
    /// `summary.json`, `compare.csv` (one row per engine) and `runs.csv`
    /// (one row per solve).
    pub fn write(&self, dir: &Path) -> Result<(), BenchError> {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        write_csv(&dir.join("compare.csv"), &self.rows)?;
        write_csv(&dir.join("runs.csv"), &self.runs)?;
        let json = serde_json::to_vec_pretty(self).expect("report serializes");
        write_atomic(&dir.join("summary.json"), &json)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<24} {:>5} {:>5} {:>10} {:>10} {:>10} {:>8} {:>12}\n",
            "engine", "runs", "conv", "q1", "median", "q3", "iters", "rel.obj"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<24} {:>5} {:>5} {:>10.1} {:>10.1} {:>10.1} {:>8.1} {:>12.3e}\n",
                r.label,
                r.runs,
                r.converged,
                r.q1_calls,
                r.median_calls,
                r.q3_calls,
                r.median_iterations,
                r.median_relative_objective
            ));
        }
        out
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Concurrency cap from `BENCH_THREADS`, defaulting to the available cores.
pub fn thread_budget() -> Result<usize, BenchError> {
    match std::env::var("BENCH_THREADS") {
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(BenchError::Validation(format!(
                "BENCH_THREADS must be a positive integer, got {text:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run_all(jobs: &[RunConfig], threads: usize) -> Result<Vec<RunOutcome>, BenchError> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunOutcome, BenchError>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                *slots[i].lock().expect("no panics while holding the lock") = Some(execute(job));
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("lock not poisoned").expect("every job ran"))
        .collect()
}

/// Runs every config (or, when `engines` is given, every config with each
/// listed engine) on `seeds` consecutive seeds starting at the configured
/// one, plus the plain method as baseline.
pub fn compare(
    configs: &[RunConfig],
    engines: Option<&[String]>,
    seeds: usize,
    threads: usize,
) -> Result<CompareReport, BenchError> {
    let Some(first) = configs.first() else {
        return Err(BenchError::Validation("at least one config is required".into()));
    };
    if seeds == 0 {
        return Err(BenchError::Validation("seeds must be positive".into()));
    }
    for (i, cfg) in configs.iter().enumerate().skip(1) {
        if cfg.problem != first.problem || cfg.seed != first.seed {
            return Err(BenchError::Validation(format!(
                "config {} describes a different problem than config 1 ({:?} seed {} vs {:?} seed {})",
                i + 1,
                cfg.problem,
                cfg.seed,
                first.problem,
                first.seed
            )));
        }
        if cfg.algorithm.is_admm() != first.algorithm.is_admm() {
            return Err(BenchError::Validation("cannot mix DRS and ADMM configs".into()));
        }
    }

    // distinct requested variants in order of appearance
    let mut requested: Vec<RunConfig> = Vec::new();
    for cfg in configs {
        let engine_list: Vec<String> = match engines {
            Some(list) => list.to_vec(),
            None => vec![cfg.engine.clone()],
        };
        for engine in engine_list {
            let mut v = RunConfig {
                engine,
                ..cfg.clone()
            };
            if engines.is_some() {
                // an engine list only makes sense for the linesearch variant
                v.algorithm = if v.algorithm.is_admm() { Algorithm::AdmmLs } else { Algorithm::DrsLs };
            }
            v.validate()?;
            if !requested.iter().any(|w| w.label() == v.label()) {
                requested.push(v);
            }
        }
    }
    if requested.is_empty() {
        return Err(BenchError::Validation("no engines to compare".into()));
    }
    let baseline = RunConfig {
        algorithm: first.algorithm.plain(),
        ..first.clone()
    };
    let mut variants = requested.clone();
    if !variants.iter().any(|v| v.label() == baseline.label()) {
        variants.push(baseline.clone());
    }

    let seed_list: Vec<u64> = (0..seeds as u64).map(|i| first.seed + i).collect();
    let jobs: Vec<RunConfig> = variants
        .iter()
        .flat_map(|v| {
            seed_list.iter().map(move |&seed| RunConfig {
                seed,
                ..v.clone()
            })
        })
        .collect();
    let outcomes = run_all(&jobs, threads)?;

    let base_objective: BTreeMap<u64, f64> = jobs
        .iter()
        .zip(&outcomes)
        .filter(|(job, _)| job.label() == baseline.label())
        .map(|(job, out)| (job.seed, out.summary.objective))
        .collect();
    let runs: Vec<RunRecord> = jobs
        .iter()
        .zip(&outcomes)
        .map(|(job, out)| {
            let s = &out.summary;
            let base = base_objective[&job.seed];
            RunRecord {
                label: job.label(),
                seed: job.seed,
                status: s.status,
                iterations: s.iterations,
                oracle_calls: s.totals.prox1,
                total_prox: s.totals.total_prox(),
                objective: s.objective,
                relative_objective: (s.objective - base) / base.abs().max(1e-12),
            }
        })
        .collect();

    let rows = requested
        .iter()
        .map(|v| {
            let label = v.label();
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.label == label).collect();
            let calls = sorted(mine.iter().map(|r| r.oracle_calls as f64).collect());
            let iters = sorted(mine.iter().map(|r| r.iterations as f64).collect());
            let rel = sorted(mine.iter().map(|r| r.relative_objective).collect());
            CompareRow {
                label,
                runs: mine.len(),
                converged: mine.iter().filter(|r| r.status == Status::Converged).count(),
                q1_calls: quantile(&calls, 0.25),
                median_calls: quantile(&calls, 0.5),
                q3_calls: quantile(&calls, 0.75),
                median_iterations: quantile(&iters, 0.5),
                median_relative_objective: quantile(&rel, 0.5),
            }
        })
        .collect();

    Ok(CompareReport {
        schema: SUMMARY_SCHEMA,
        family: first.problem.family(),
        baseline: baseline.label(),
        seeds: seed_list,
        rows,
        runs,
    })
}
