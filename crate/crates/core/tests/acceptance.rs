//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed. Built without the libtest harness so the
//! summary is always visible in `cargo test` output.

use std::process::ExitCode;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use qnsplit::admm::{admm_ls_solve, AdmmConfig, AdmmProblem, AdmmRegime, AdmmSolveReport};
use qnsplit::certificate::{certificate_admm, certificate_drs, DrsCertificate};
use qnsplit::constants::max_stepsize;
use qnsplit::diagnostics::superlinear_diagnostics;
use qnsplit::directions::EngineKind;
use qnsplit::drs::{drs_ls_solve, drs_solve, DrsConfig, DrsSolveReport};
use qnsplit::oracles::{BoxIndicator, Huber, L1Norm, Quadratic};
use qnsplit::problems::consensus::ConsensusSpca;
use qnsplit::problems::mpc::soft_corridor_value;
use qnsplit::problems::{
    build_mpc, build_sparse_lsq, build_spca, project_sparse_sphere, soft_corridor_prox, LHalfNorm, MpcSpec,
    QuadraticBoxAdmm, SparseLsqDims, SparseLsqSpec, SpcaDims, SpcaSpec,
};
use qnsplit::testkit::{
    bruteforce_scalar_prox, exhaustive_sparse_projection, run_equivalence_check, run_selfdual_check,
    selfdual_pair, sweep_invariants,
};
use qnsplit::trace::Status;
use qnsplit::{Matrix, ProxOracle, Regime, SplitProblem, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lbfgs() -> EngineKind {
    EngineKind::Lbfgs { memory: 5 }
}

// ---------------------------------------------------------------- problems

fn lsq_toy(seed: u64) -> SplitProblem {
    let spec = SparseLsqSpec::generate(
        SparseLsqDims {
            m: 30,
            n: 80,
            k: 8,
            r: 0.1,
        },
        seed,
    );
    build_sparse_lsq(&spec).unwrap()
}

fn lipschitz(problem: &SplitProblem) -> f64 {
    match problem.regime() {
        Regime::Smooth { lipschitz, .. } => lipschitz,
        Regime::StronglyConvex { .. } => panic!("smooth problem expected"),
    }
}

fn spca_toy() -> (SpcaSpec, SplitProblem) {
    let spec = SpcaSpec::generate(
        SpcaDims {
            m: 60,
            n: 30,
            k: 5,
            signal: 3.0,
        },
        21,
    );
    let problem = build_spca(&spec, 0.0).unwrap();
    (spec, problem)
}

fn consensus_toy() -> Arc<ConsensusSpca> {
    let spec = SpcaSpec::generate(
        SpcaDims {
            m: 30,
            n: 20,
            k: 4,
            signal: 3.0,
        },
        33,
    );
    Arc::new(ConsensusSpca::split(&spec.w, 3, spec.k).unwrap())
}

fn consensus_init(p: &ConsensusSpca) -> (Vector, Vector, Vector) {
    let n = p.n();
    let z = project_sparse_sphere(&Vector::from_fn(n, |i, _| ((i * 7 % 5) as f64) - 1.7), 4);
    let mut x = Vector::zeros(n * p.agents());
    for i in 0..p.agents() {
        x.rows_mut(i * n, n).copy_from(&z);
    }
    (x, Vector::zeros(n * p.agents()), z)
}

/// `½(x − a)ᵀQ(x − a) + Huber`, smooth and strongly convex.
fn huber_toy() -> SplitProblem {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = &g * g.transpose() / n as f64 + Matrix::identity(n, n);
    let a = Vector::from_fn(n, |i, _| 2.0 * (i as f64 * 1.3).sin());
    let quad = Quadratic::new(q, a, 0.0).unwrap();
    let l = quad.lipschitz();
    SplitProblem::new(
        Arc::new(quad),
        Arc::new(Huber::new(n, 1.0, 0.5)),
        Regime::Smooth {
            lipschitz: l,
            phi1_convex: true,
        },
    )
    .unwrap()
}

fn quadbox_toy() -> QuadraticBoxAdmm {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let p = &g * g.transpose() + Matrix::identity(n, n);
    let mu = p.symmetric_eigenvalues().min();
    let q = Vector::from_fn(n, |i, _| 3.0 * (i as f64).cos());
    QuadraticBoxAdmm::new(
        p,
        q,
        Matrix::identity(n, n),
        Vector::zeros(n),
        Vector::from_element(n, -0.5),
        Vector::from_element(n, 0.5),
        AdmmRegime::StronglyConvex { mu_f: mu, a_norm: 1.0 },
    )
    .unwrap()
}

// -------------------------------------------------------------- shared runs

struct DrsRun {
    name: String,
    problem: SplitProblem,
    report: DrsSolveReport,
    quadcache: bool,
}

struct AdmmRun {
    name: String,
    problem: Arc<dyn AdmmProblem>,
    report: AdmmSolveReport,
}

struct Runs {
    drs: Vec<DrsRun>,
    admm: Vec<AdmmRun>,
    /// Adaptive runs: (name, report).
    adaptive: Vec<(String, DrsSolveReport)>,
    mpc_ls: DrsSolveReport,
    mpc_plain: DrsSolveReport,
}

fn drs_run(name: &str, problem: SplitProblem, s0: Vector, config: DrsConfig, engine: EngineKind) -> DrsRun {
    let mut e = engine.build(problem.dim(), config.lambda);
    let report = drs_ls_solve(&problem, &s0, &config, e.as_mut()).unwrap_or_else(|e| panic!("{name}: {e}"));
    let quadcache = config.quadcache && problem.phi1().is_generalized_quadratic();
    DrsRun {
        name: format!("{name}/{}", engine.name()),
        problem,
        report,
        quadcache,
    }
}

fn runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut drs = Vec::new();
        for engine in [
            lbfgs(),
            EngineKind::Broyden { theta_bar: 0.2 },
            EngineKind::Anderson { memory: 5 },
            EngineKind::Nesterov,
            EngineKind::Nominal,
        ] {
            let p = lsq_toy(1);
            let config = DrsConfig::from_bounds(&p, 1.0, 0.95, 0.5).unwrap();
            let n = p.dim();
            drs.push(drs_run("sparse-lsq", p, Vector::zeros(n), config, engine));
        }
        let (spec, p) = spca_toy();
        let config = DrsConfig {
            max_iters: 5000,
            ..DrsConfig::from_bounds(&p, 1.0, 0.9, 0.5).unwrap()
        };
        let s0 = project_sparse_sphere(&Vector::from_fn(spec.w.ncols(), |i, _| 1.0 + (i as f64).sin()), spec.k);
        drs.push(drs_run("spca", p, s0, config, lbfgs()));

        let h = huber_toy();
        let config = DrsConfig::from_bounds(&h, 1.0, 0.95, 0.5).unwrap();
        let n = h.dim();
        drs.push(drs_run("quadratic-huber", h, Vector::zeros(n), config, EngineKind::Broyden { theta_bar: 0.2 }));

        let mpc = build_mpc(&MpcSpec::double_integrator(10)).unwrap();
        let mpc_config = DrsConfig {
            epsilon: 1e-5,
            ..DrsConfig::from_bounds(&mpc.problem, 1.0, 0.95, 0.5).unwrap()
        };
        let n = mpc.layout.dim();
        let mpc_run = drs_run("mpc", mpc.problem, Vector::zeros(n), mpc_config.clone(), lbfgs());
        let mpc_ls = mpc_run.report.clone();
        drs.push(mpc_run);
        let mpc2 = build_mpc(&MpcSpec::double_integrator(10)).unwrap();
        let mpc_plain = drs_solve(&mpc2.problem, &Vector::zeros(n), &mpc_config).unwrap();

        let mut admm: Vec<AdmmRun> = Vec::new();
        let cons = consensus_toy();
        for engine in [lbfgs(), EngineKind::Nominal] {
            let config = AdmmConfig {
                max_iters: 5000,
                ..AdmmConfig::from_bounds(cons.as_ref(), 1.0, 0.9, 0.5).unwrap()
            };
            let (x, y, z) = consensus_init(&cons);
            let mut e = engine.build(x.len(), 1.0);
            let report = admm_ls_solve(cons.as_ref(), (&x, &y, &z), &config, e.as_mut()).unwrap();
            admm.push(AdmmRun {
                name: format!("consensus-spca/{}", engine.name()),
                problem: cons.clone(),
                report,
            });
        }
        let qb: Arc<dyn AdmmProblem> = Arc::new(quadbox_toy());
        for engine in [EngineKind::Broyden { theta_bar: 0.2 }, lbfgs()] {
            let config = AdmmConfig::from_bounds(qb.as_ref(), 1.0, 0.9, 0.5).unwrap();
            let (n, m, _) = qb.dims();
            let (x, y, z) = (Vector::zeros(n), Vector::zeros(m), Vector::zeros(m));
            let mut e = engine.build(m, 1.0);
            let report = admm_ls_solve(qb.as_ref(), (&x, &y, &z), &config, e.as_mut()).unwrap();
            admm.push(AdmmRun {
                name: format!("quadratic-box/{}", engine.name()),
                problem: qb.clone(),
                report,
            });
        }

        let mut adaptive = Vec::new();
        let p = build_sparse_lsq(&SparseLsqSpec::generate(SparseLsqDims::default(), 2)).unwrap();
        let gamma = 100.0 * max_stepsize(lipschitz(&p), 1.0, false);
        // both terms are nonnegative
        let config = DrsConfig {
            phi_lb: Some(0.0),
            ..DrsConfig::adaptive(&p, 1.0, gamma, 0.95, 0.5).unwrap()
        };
        let mut e = lbfgs().build(p.dim(), 1.0);
        let report = drs_ls_solve(&p, &Vector::zeros(p.dim()), &config, e.as_mut()).unwrap();
        adaptive.push(("sparse-lsq gamma=100x bound".to_string(), report.clone()));
        drs.push(DrsRun {
            name: "sparse-lsq/adaptive".into(),
            problem: p,
            report,
            quadcache: true,
        });
        let mpc = build_mpc(&MpcSpec::double_integrator(10)).unwrap();
        let config = DrsConfig {
            epsilon: 1e-5,
            ..DrsConfig::adaptive(&mpc.problem, 1.0, 0.01 / mpc.mu, 0.95, 0.5).unwrap()
        };
        let mut e = lbfgs().build(n, 1.0);
        let report = drs_ls_solve(&mpc.problem, &Vector::zeros(n), &config, e.as_mut()).unwrap();
        adaptive.push(("mpc gamma=0.01/mu".to_string(), report.clone()));
        drs.push(DrsRun {
            name: "mpc/adaptive".into(),
            problem: mpc.problem,
            report,
            quadcache: true,
        });

        Runs {
            drs,
            admm,
            adaptive,
            mpc_ls,
            mpc_plain,
        }
    })
}

// ---------------------------------------------------------------- criteria

fn merit_decrease() -> Check {
    let runs = runs();
    let mut checked = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for run in &runs.drs {
        let pi = run.report.pi;
        for rec in &run.report.trace {
            let bound = pi * rec.merit - rec.c / rec.step * rec.res_norm * rec.res_norm;
            let excess = (pi * rec.merit_next - bound) / (1.0 + rec.merit.abs());
            worst = worst.max(excess);
            if excess > 1e-12 {
                failures.push(format!("{} k={}", run.name, rec.k));
            }
            checked += 1;
        }
    }
    for run in &runs.admm {
        let pi = run.report.pi;
        for rec in &run.report.trace {
            let bound = pi * rec.merit - rec.step * rec.c * rec.res_norm * rec.res_norm;
            let excess = (pi * rec.merit_next - bound) / (1.0 + rec.merit.abs());
            worst = worst.max(excess);
            if excess > 1e-12 {
                failures.push(format!("{} k={}", run.name, rec.k));
            }
            checked += 1;
        }
    }
    let combos = runs.drs.len() + runs.admm.len();
    ensure(
        failures.is_empty() && combos >= 6,
        format!(
            "{checked} accepted iterations over {combos} runs, worst relative excess {worst:.2e}, violations {:?}",
            &failures[..failures.len().min(5)]
        ),
    )
}

fn nominal_equivalence() -> Check {
    let p = lsq_toy(3);
    let config = DrsConfig {
        epsilon: 0.0,
        max_iters: 200,
        record_iterates: true,
        ..DrsConfig::from_bounds(&p, 1.0, 0.95, 0.5).unwrap()
    };
    let s0 = Vector::from_fn(p.dim(), |i, _| (i as f64 * 0.37).sin());
    let plain = drs_solve(&p, &s0, &config).map_err(|e| e.to_string())?;
    let mut e = EngineKind::Nominal.build(p.dim(), 1.0);
    let ls = drs_ls_solve(&p, &s0, &config, e.as_mut()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (a, b) in plain.trace.iter().zip(ls.trace.iter()) {
        let (sa, sb) = (a.iterate.as_ref().unwrap(), b.iterate.as_ref().unwrap());
        worst = worst.max((sa - sb).amax());
    }
    worst = worst.max((&plain.state.s - &ls.state.s).amax());
    let n = plain.trace.len().min(ls.trace.len());
    ensure(
        n == 200 && worst <= 1e-12,
        format!("{n} iterations compared, max coordinate deviation {worst:.2e}"),
    )
}

fn alg_equivalence() -> Check {
    let cons = consensus_toy();
    let split = cons.as_split_problem().map_err(|e| e.to_string())?;
    let config = AdmmConfig {
        epsilon: 0.0,
        max_iters: 100,
        ..AdmmConfig::from_bounds(cons.as_ref(), 1.0, 0.9, 0.5).unwrap()
    };
    let (x, y, z) = consensus_init(&cons);
    let mut lines = Vec::new();
    let mut ok = true;
    for engine in [EngineKind::Nominal, lbfgs()] {
        let report =
            run_equivalence_check(cons.as_ref(), &split, (&x, &y, &z), &config, engine, 1.0).map_err(|e| e.to_string())?;
        ok &= report.max_deviation() <= 1e-8 && report.drs_iterations == 100;
        let mismatch = match report.first_tau_mismatch {
            Some((k, r)) => format!(" (first tau mismatch at k={k}, |r|={r:.1e})"),
            None => String::new(),
        };
        lines.push(format!(
            "{}: {} iterations, |r| dev {:.1e}, tau dev {:.1e}{mismatch}",
            engine.name(),
            report.drs_iterations,
            report.residual_deviation,
            report.tau_deviation
        ));
    }
    ensure(ok, lines.join("; "))
}

fn self_duality() -> Check {
    let pair = selfdual_pair(
        Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
        Vector::from_column_slice(&[0.3, -0.7]),
        Vector::from_element(2, -0.5),
        Vector::from_element(2, 0.5),
    )
    .map_err(|e| e.to_string())?;
    let gamma = 1.5 / pair.mu;
    let worst = run_selfdual_check(&pair, gamma, 100, 3.0, 17).map_err(|e| e.to_string())?;
    ensure(worst <= 1e-10, format!("max |DRE* + DRE| over 100 samples = {worst:.2e}"))
}

fn appendix_invariants() -> Check {
    let mut lines = Vec::new();
    let mut worst_all: f64 = 0.0;
    let p = lsq_toy(4);
    let gamma = 0.95 / lipschitz(&p);
    let r = sweep_invariants(&p, gamma, 1000, 2.0, 5, None).map_err(|e| e.to_string())?;
    worst_all = worst_all.max(r.worst());
    lines.push(format!("lhalf sandwich {:.1e} qg {:.1e}", r.sandwich, r.quadratic_growth));
    let (_, spca) = spca_toy();
    let gamma = 0.9 / lipschitz(&spca);
    let r = sweep_invariants(&spca, gamma, 1000, 1.0, 6, None).map_err(|e| e.to_string())?;
    worst_all = worst_all.max(r.worst());
    lines.push(format!("spca sandwich {:.1e} qg {:.1e}", r.sandwich, r.quadratic_growth));

    // quadratic + box with diagonal Q: minimizer is the clamped centre
    let pair = selfdual_pair(
        Matrix::from_diagonal(&Vector::from_column_slice(&[2.0, 1.0])),
        Vector::from_column_slice(&[0.9, -0.2]),
        Vector::from_element(2, -0.5),
        Vector::from_element(2, 0.5),
    )
    .map_err(|e| e.to_string())?;
    let x_star = Vector::from_column_slice(&[0.5, -0.2]);
    let inf_phi = pair.primal.objective(&x_star);
    let r = sweep_invariants(&pair.primal, 1.5 / pair.mu, 1000, 3.0, 7, Some((&x_star, inf_phi)))
        .map_err(|e| e.to_string())?;
    worst_all = worst_all.max(r.worst());
    lines.push(format!("box lower bound {:.1e}", r.lower_bound));

    // quadratic + ℓ1 with diagonal Q: minimizer by soft-thresholding
    let qd = Vector::from_column_slice(&[3.0, 1.0, 0.5]);
    let a = Vector::from_column_slice(&[1.0, -0.2, 2.0]);
    let w = 0.4;
    let quad = Quadratic::new(Matrix::from_diagonal(&qd), a.clone(), 0.0).unwrap();
    let problem = SplitProblem::new(
        Arc::new(quad),
        Arc::new(L1Norm::new(3, w)),
        Regime::StronglyConvex { mu: 0.5 },
    )
    .unwrap();
    let x_star = Vector::from_fn(3, |i, _| qnsplit::oracles::soft_threshold(a[i], w / qd[i]));
    let inf_phi = problem.objective(&x_star);
    let r = sweep_invariants(&problem, 3.0, 1000, 3.0, 8, Some((&x_star, inf_phi))).map_err(|e| e.to_string())?;
    worst_all = worst_all.max(r.worst());
    lines.push(format!("l1 lower bound {:.1e}", r.lower_bound));
    ensure(worst_all <= 1e-9, lines.join("; "))
}

fn prox_adjudication() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 10_000;
    let (mut lhalf, mut corridor, mut boxed): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let x: f64 = rng.random_range(-5.0..5.0);
        let gamma: f64 = rng.random_range(0.1..2.0);

        let weight: f64 = rng.random_range(0.05..2.0);
        let closed = LHalfNorm::new(1, weight).prox(&Vector::from_element(1, x), gamma).unwrap()[0];
        let brute = bruteforce_scalar_prox(|w| weight * w.abs().sqrt(), x, gamma);
        lhalf = lhalf.max((closed - brute).abs());

        let rho: f64 = rng.random_range(0.0..2.0);
        let kappa: f64 = rng.random_range(0.1..5.0);
        let closed = soft_corridor_prox(x, rho, kappa, gamma);
        let brute = bruteforce_scalar_prox(|w| soft_corridor_value(w, rho, kappa), x, gamma);
        corridor = corridor.max((closed - brute).abs());

        let lo: f64 = rng.random_range(-2.0..0.5);
        let hi = lo + rng.random_range(0.1..2.5);
        let b = BoxIndicator::new(Vector::from_element(1, lo), Vector::from_element(1, hi)).unwrap();
        let closed = b.prox(&Vector::from_element(1, x), gamma).unwrap()[0];
        let brute = bruteforce_scalar_prox(
            |w| if w >= lo && w <= hi { 0.0 } else { f64::INFINITY },
            x,
            gamma,
        );
        boxed = boxed.max((closed - brute).abs());
    }

    let mut mismatches = 0;
    let mut cases = 0;
    for n in 1..=10 {
        for k in 1..=n {
            for trial in 0..20 {
                let x = if trial < 4 {
                    // small integers produce many magnitude ties
                    Vector::from_fn(n, |_, _| rng.random_range(-2i32..=2) as f64)
                } else {
                    Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
                };
                if project_sparse_sphere(&x, k) != exhaustive_sparse_projection(&x, k) {
                    mismatches += 1;
                }
                cases += 1;
            }
        }
    }
    let worst = lhalf.max(corridor).max(boxed);
    ensure(
        worst <= 1e-8 && mismatches == 0,
        format!(
            "max |closed - brute|: lhalf {lhalf:.1e}, corridor {corridor:.1e}, box {boxed:.1e} ({samples} each); \
             sparse sphere {mismatches}/{cases} mismatches"
        ),
    )
}

fn sparse_lsq_trend() -> Check {
    let seeds: Vec<u64> = (100..120).collect();
    let max_iters = 20_000;
    let results: Vec<(usize, usize, bool, bool)> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                scope.spawn(move || {
                    let spec = SparseLsqSpec::generate(SparseLsqDims::default(), seed);
                    let p = build_sparse_lsq(&spec).unwrap();
                    let config = DrsConfig {
                        max_iters,
                        ..DrsConfig::from_bounds(&p, 1.0, 0.95, 0.5).unwrap()
                    };
                    let s0 = Vector::zeros(p.dim());
                    let mut e = lbfgs().build(p.dim(), 1.0);
                    let ls = drs_ls_solve(&p, &s0, &config, e.as_mut()).unwrap();
                    let plain = drs_solve(&p, &s0, &config).unwrap();
                    (
                        ls.counters.prox1,
                        plain.counters.prox1,
                        ls.status == Status::Converged,
                        plain.status == Status::Converged,
                    )
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut ratios: Vec<f64> = results.iter().map(|(a, b, _, _)| *a as f64 / *b as f64).collect();
    ratios.sort_by(f64::total_cmp);
    let median = 0.5 * (ratios[9] + ratios[10]);
    let ls_conv = results.iter().filter(|r| r.2).count();
    let plain_conv = results.iter().filter(|r| r.3).count();
    let mut ls_counts: Vec<usize> = results.iter().map(|r| r.0).collect();
    let mut plain_counts: Vec<usize> = results.iter().map(|r| r.1).collect();
    ls_counts.sort();
    plain_counts.sort();
    ensure(
        median <= 0.5 && ls_conv == 20,
        format!(
            "median solve ratio {median:.3} (range {:.3}..{:.3}); median solves lbfgs {} vs drs {}; converged {ls_conv}/20 vs {plain_conv}/20",
            ratios[0],
            ratios[19],
            ls_counts[10],
            plain_counts[10]
        ),
    )
}

fn oracle_count_bound() -> Check {
    let runs = runs();
    let mut checked = 0;
    let mut worst = 0;
    for run in runs.drs.iter().filter(|r| r.quadcache) {
        for rec in &run.report.trace {
            worst = worst.max(rec.calls.prox1);
            checked += 1;
        }
    }
    for run in runs.admm.iter().filter(|r| r.problem.x_step_is_affine()) {
        for rec in &run.report.trace {
            worst = worst.max(rec.calls.prox1);
            checked += 1;
        }
    }
    ensure(
        worst <= 2 && checked > 0,
        format!("max phi1-prox/x-step calls per iteration {worst} over {checked} iterations"),
    )
}

fn superlinear_tail() -> Check {
    let p = huber_toy();
    let base = DrsConfig {
        record_iterates: true,
        ..DrsConfig::from_bounds(&p, 1.0, 0.95, 0.5).unwrap()
    };
    let s0 = Vector::from_fn(p.dim(), |i, _| 3.0 * (i as f64 * 0.9).cos());
    let engine = EngineKind::Broyden { theta_bar: 0.2 };
    let reference = {
        let config = DrsConfig {
            epsilon: 1e-12,
            ..base.clone()
        };
        let mut e = engine.build(p.dim(), 1.0);
        drs_ls_solve(&p, &s0, &config, e.as_mut()).map_err(|e| e.to_string())?
    };
    let config = DrsConfig {
        epsilon: 1e-9,
        ..base
    };
    let mut e = engine.build(p.dim(), 1.0);
    let run = drs_ls_solve(&p, &s0, &config, e.as_mut()).map_err(|e| e.to_string())?;
    let tail = 10;
    let diag = superlinear_diagnostics(&run.trace, &run.state.s, Some(&reference.state.s), tail);
    let ratios = &diag.convergence_ratios[diag.convergence_ratios.len().saturating_sub(tail)..];
    let all_small = ratios.iter().all(|r| *r < 0.1);
    let monotone = ratios.windows(2).all(|w| w[1] <= w[0]);
    ensure(
        reference.status == Status::Converged
            && run.status == Status::Converged
            && diag.tail == tail
            && diag.unit_step_fraction == 1.0
            && all_small
            && monotone,
        format!(
            "{} iterations, unit steps in last {}: {:.0}%, tail ratios {:?}",
            run.iterations,
            diag.tail,
            100.0 * diag.unit_step_fraction,
            ratios.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>()
        ),
    )
}

fn adaptive_guards() -> Check {
    let runs = runs();
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, report) in &runs.adaptive {
        let cutoff = 0.2 * report.iterations as f64;
        let late = report.adjustments.iter().filter(|&&k| k as f64 >= cutoff).count();
        let converged = report.status == Status::Converged;
        ok &= converged && late == 0 && !report.adjustments.is_empty();
        lines.push(format!(
            "{name}: {} adjustments (last at k={:?}) over {} iterations, final step {:.3e}, {:?}",
            report.adjustments.len(),
            report.adjustments.last(),
            report.iterations,
            report.gamma,
            report.status
        ));
    }
    ensure(ok, lines.join("; "))
}

fn certificates() -> Check {
    let runs = runs();
    let mut checked = 0;
    let mut failures = Vec::new();
    for run in runs.drs.iter().filter(|r| r.report.status == Status::Converged) {
        let cert = certificate_drs(&run.problem, &run.report).map_err(|e| e.to_string())?;
        if !cert.holds() {
            let detail = match &cert {
                DrsCertificate::Smooth { bound, limit, stationarity, .. } => {
                    format!("bound {bound:.2e} limit {limit:.2e} stationarity {stationarity:?}")
                }
                DrsCertificate::StronglyConvex { dual_residual, primal_residual, .. } => {
                    format!("dual {dual_residual:.2e} primal {primal_residual:.2e}")
                }
            };
            failures.push(format!("{}: {detail}", run.name));
        }
        checked += 1;
    }
    for run in runs.admm.iter().filter(|r| r.report.status == Status::Converged) {
        let cert = certificate_admm(run.problem.as_ref(), &run.report).map_err(|e| e.to_string())?;
        let scaled_ok = run.report.beta * cert.primal_residual <= run.report.epsilon * (1.0 + 1e-12);
        if !(cert.holds(1e-8) && scaled_ok) {
            failures.push(format!(
                "{}: primal {:.2e} (bound {:.2e}), x-stationarity {:?}",
                run.name, cert.primal_residual, cert.primal_bound, cert.x_stationarity
            ));
        }
        checked += 1;
    }
    let total = runs.drs.len() + runs.admm.len();
    ensure(
        failures.is_empty() && checked > 0,
        format!("{checked}/{total} runs converged and were certified; failures {failures:?}"),
    )
}

fn mpc_branch() -> Check {
    let runs = runs();
    let (ls, plain) = (&runs.mpc_ls, &runs.mpc_plain);
    let nondecreasing = |r: &DrsSolveReport| r.trace.iter().all(|rec| rec.merit_next >= rec.merit - 1e-12 * (1.0 + rec.merit.abs()));
    let converged = |r: &DrsSolveReport| r.status == Status::Converged && r.state.r.norm() / r.gamma <= 1e-5;
    let (ls_calls, plain_calls) = (ls.counters.total_prox(), plain.counters.total_prox());
    ensure(
        ls.pi == -1.0 && converged(ls) && nondecreasing(ls) && nondecreasing(plain) && ls_calls < plain_calls,
        format!(
            "pi={}, lbfgs {} iterations / {ls_calls} prox calls ({:?}), drs {} iterations / {plain_calls} prox calls ({:?})",
            ls.pi, ls.iterations, ls.status, plain.iterations, plain.status
        ),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("merit decrease on accepted iterations", merit_decrease),
        ("nominal engine reproduces plain DRS", nominal_equivalence),
        ("linesearch DRS and ADMM coincide", alg_equivalence),
        ("self-duality of the envelope", self_duality),
        ("sandwich, growth and lower-bound invariants", appendix_invariants),
        ("closed-form proxes match brute force", prox_adjudication),
        ("sparse least squares: L-BFGS halves the solves", sparse_lsq_trend),
        ("at most two phi1 proxes per iteration", oracle_count_bound),
        ("Broyden superlinear tail", superlinear_tail),
        ("adaptive stepsize guards settle", adaptive_guards),
        ("stationarity certificates", certificates),
        ("MPC strongly convex branch", mpc_branch),
    ];
    let start = Instant::now();
    // the shared runs are reused by several criteria; build them up front
    runs();
    let results: Vec<(Check, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                scope.spawn(move || {
                    let t = Instant::now();
                    let out = std::panic::catch_unwind(f).unwrap_or_else(|e| {
                        let msg = e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        Err(format!("panicked: {msg}"))
                    });
                    (out, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    println!();
    for (i, ((name, _), (result, secs))) in criteria.iter().zip(results.iter()).enumerate() {
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {:>2}. {name} ({secs:.1}s): {detail}", i + 1);
    }
    println!(
        "\nacceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
