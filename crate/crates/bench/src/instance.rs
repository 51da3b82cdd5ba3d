//! Problem instances built from a configuration.

use std::sync::Arc;

use qnsplit::admm::{AdmmProblem, AdmmRegime};
use qnsplit::problems::{
    build_consensus_spca, build_mpc, build_sparse_lsq, build_spca, project_sparse_sphere, ConsensusSpca, MpcSpec,
    QuadraticBoxAdmm, SparseLsqDims, SparseLsqSpec, SpcaDims, SpcaSpec,
};
use qnsplit::{Matrix, SplitProblem, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Algorithm, ProblemConfig};
use crate::error::BenchError;

pub enum Instance {
    Split {
        problem: SplitProblem,
        s0: Vector,
    },
    Admm {
        problem: Arc<dyn AdmmProblem>,
        init: (Vector, Vector, Vector),
    },
}

/// Deterministic feasible start for the sparse-sphere problems.
fn sphere_start(n: usize, k: usize) -> Vector {
    project_sparse_sphere(&Vector::from_fn(n, |i, _| 1.0 + (i as f64).sin()), k)
}

fn replicate(z: &Vector, copies: usize) -> Vector {
    let n = z.len();
    let mut x = Vector::zeros(n * copies);
    for i in 0..copies {
        x.rows_mut(i * n, n).copy_from(z);
    }
    x
}

/// `beta` is only consulted for the consensus problem, whose x-step needs
/// `β > L`; pass `None` when β is derived from the problem afterwards.
pub fn build(problem: &ProblemConfig, algorithm: Algorithm, seed: u64, beta: Option<f64>) -> Result<Instance, BenchError> {
    let instance = match problem {
        ProblemConfig::SparseLsq(p) => {
            let spec = SparseLsqSpec::generate(
                SparseLsqDims {
                    m: p.m,
                    n: p.n,
                    k: p.k,
                    r: p.r,
                },
                seed,
            );
            Instance::Split {
                problem: build_sparse_lsq(&spec)?,
                s0: Vector::zeros(p.n),
            }
        }
        ProblemConfig::Spca(p) => {
            let dims = SpcaDims {
                m: p.m,
                n: p.n,
                k: p.k,
                signal: p.signal,
            };
            let spec = SpcaSpec::generate(dims, seed);
            Instance::Split {
                problem: build_spca(&spec, 0.0)?,
                s0: sphere_start(p.n, p.k),
            }
        }
        ProblemConfig::ConsensusSpca(p) => {
            let dims = SpcaDims {
                m: p.m,
                n: p.n,
                k: p.k,
                signal: p.signal,
            };
            let spec = SpcaSpec::generate(dims, seed);
            let consensus = match beta {
                Some(beta) => build_consensus_spca(&spec, p.agents, beta)?,
                None => ConsensusSpca::split(&spec.w, p.agents, p.k)?,
            };
            let consensus = Arc::new(consensus);
            let z0 = sphere_start(p.n, p.k);
            let x0 = replicate(&z0, p.agents);
            if algorithm.is_admm() {
                let y0 = Vector::zeros(x0.len());
                Instance::Admm {
                    problem: consensus,
                    init: (x0, y0, z0),
                }
            } else {
                Instance::Split {
                    problem: consensus.as_split_problem()?,
                    s0: x0,
                }
            }
        }
        ProblemConfig::Mpc(p) => {
            let mut spec = MpcSpec::double_integrator(p.horizon);
            if let Some(x0) = &p.x0 {
                spec.x0 = Vector::from_column_slice(x0);
            }
            let mpc = build_mpc(&spec)?;
            let n = mpc.layout.dim();
            Instance::Split {
                problem: mpc.problem,
                s0: Vector::zeros(n),
            }
        }
        ProblemConfig::QuadraticBox(p) => {
            let n = p.n;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let pm = &g * g.transpose() / n as f64 + Matrix::identity(n, n);
            let q = Vector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
            let mu = pm.symmetric_eigenvalues().min();
            let problem = QuadraticBoxAdmm::new(
                pm,
                q,
                Matrix::identity(n, n),
                Vector::zeros(n),
                Vector::from_element(n, -p.bound),
                Vector::from_element(n, p.bound),
                AdmmRegime::StronglyConvex { mu_f: mu, a_norm: 1.0 },
            )?;
            Instance::Admm {
                problem: Arc::new(problem),
                init: (Vector::zeros(n), Vector::zeros(n), Vector::zeros(n)),
            }
        }
    };
    Ok(instance)
}
