use std::sync::Arc;

use nalgebra::{Cholesky, Dyn};
use rand::SeedableRng;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cache::StepCache;
use crate::error::{Error, OracleError, Result};
use crate::problem::{ProxOracle, Regime, SplitProblem};
use crate::{Matrix, Vector};

/// `maximize (1/2m)‖Wx‖²` over unit vectors with at most `k` nonzeros.
#[derive(Debug, Clone)]
pub struct SpcaSpec {
    pub w: Matrix,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpcaDims {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// Strength of the planted direction relative to unit noise.
    pub signal: f64,
}

impl Default for SpcaDims {
    fn default() -> Self {
        SpcaDims {
            m: 60,
            n: 40,
            k: 5,
            signal: 3.0,
        }
    }
}

impl SpcaSpec {
    /// `W = G + signal·g·vᵀ` with `G`, `g` standard Gaussian and `v` a
    /// `k`-sparse unit vector with Gaussian entries; columns are then centred.
    pub fn generate(dims: SpcaDims, seed: u64) -> Self {
        let SpcaDims { m, n, k, signal } = dims;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Matrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
        let g = Vector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
        let mut v = Vector::zeros(n);
        for i in sample(&mut rng, n, k.min(n)).into_iter() {
            v[i] = StandardNormal.sample(&mut rng);
        }
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
        }
        w += signal * &g * v.transpose();
        for mut col in w.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        SpcaSpec { w, k, seed }
    }
}

enum Factor {
    /// `κI − WWᵀ`.
    Rows(Cholesky<f64, Dyn>),
    /// `I − WᵀW/κ`.
    Cols(Cholesky<f64, Dyn>),
}

/// Solves `(I − WᵀW/κ)w = x` through whichever of the two equivalent systems
/// is smaller; factorizations are cached per `κ`.
pub struct NegGramSolver {
    w: Matrix,
    factors: StepCache<Factor>,
}

impl NegGramSolver {
    pub fn new(w: Matrix) -> Self {
        NegGramSolver {
            w,
            factors: StepCache::new(),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    /// `‖W‖²`.
    pub fn norm_sq(&self) -> f64 {
        if self.w.nrows() == 0 || self.w.ncols() == 0 {
            return 0.0;
        }
        let gram = if self.w.nrows() <= self.w.ncols() {
            &self.w * self.w.transpose()
        } else {
            self.w.tr_mul(&self.w)
        };
        gram.symmetric_eigenvalues().max().max(0.0)
    }

    pub fn solve(&self, x: &Vector, kappa: f64) -> std::result::Result<Vector, OracleError> {
        let (m, n) = self.w.shape();
        if m == 0 {
            return Ok(x.clone());
        }
        let factor = self.factors.get_or_try_insert(kappa, || {
            let fail = || OracleError::new(format!("I − WᵀW/κ is not positive definite at κ = {kappa}"));
            if m <= n {
                let k = Matrix::identity(m, m) * kappa - &self.w * self.w.transpose();
                Cholesky::new(k).map(Factor::Rows).ok_or_else(fail)
            } else {
                let k = Matrix::identity(n, n) - self.w.tr_mul(&self.w) / kappa;
                Cholesky::new(k).map(Factor::Cols).ok_or_else(fail)
            }
        })?;
        Ok(match factor.as_ref() {
            // (I − WᵀW/κ)⁻¹ = I + Wᵀ(κI − WWᵀ)⁻¹W
            Factor::Rows(chol) => x + self.w.tr_mul(&chol.solve(&(&self.w * x))),
            Factor::Cols(chol) => chol.solve(x),
        })
    }
}

/// `h(x) = −(1/2m)‖Wx‖²` with `m` the total number of samples (which may
/// exceed the rows of `W` when `W` is one block of a larger data matrix).
pub struct NegQuadratic {
    solver: NegGramSolver,
    samples: usize,
}

impl NegQuadratic {
    pub fn new(w: Matrix, samples: usize) -> Self {
        NegQuadratic {
            solver: NegGramSolver::new(w),
            samples,
        }
    }

    /// `‖W‖²/m`.
    pub fn lipschitz(&self) -> f64 {
        self.solver.norm_sq() / self.samples as f64
    }
}

impl ProxOracle for NegQuadratic {
    fn dim(&self) -> usize {
        self.solver.w.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        -(&self.solver.w * x).norm_squared() / (2.0 * self.samples as f64)
    }

    /// `(I − (γ/m)WᵀW)⁻¹x`; fails unless `γ < m/‖W‖²`.
    fn prox(&self, x: &Vector, gamma: f64) -> std::result::Result<Vector, OracleError> {
        self.solver.solve(x, self.samples as f64 / gamma)
    }

    fn is_generalized_quadratic(&self) -> bool {
        true
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(-self.solver.w.tr_mul(&(&self.solver.w * x)) / self.samples as f64)
    }
}

/// Projection onto `{x : ‖x‖ = 1, ‖x‖₀ ≤ k}`: keep the `k` entries of largest
/// magnitude (ties to the lowest index) and normalize. If the kept entries
/// are all zero, returns `e₁`.
pub fn project_sparse_sphere(x: &Vector, k: usize) -> Vector {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    // stable sort keeps the lower index first among equal magnitudes
    idx.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()));
    let mut out = Vector::zeros(n);
    for &i in idx.iter().take(k) {
        out[i] = x[i];
    }
    let norm = out.norm();
    if norm == 0.0 {
        let mut e1 = Vector::zeros(n);
        if n > 0 {
            e1[0] = 1.0;
        }
        return e1;
    }
    out / norm
}

/// Indicator of the sparse unit sphere. Membership is checked with relative
/// tolerance `1e−9` on the norm.
#[derive(Debug, Clone)]
pub struct SparseSphere {
    dim: usize,
    k: usize,
}

impl SparseSphere {
    pub fn new(dim: usize, k: usize) -> Self {
        SparseSphere { dim, k }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        (x.norm() - 1.0).abs() <= 1e-9 && x.iter().filter(|v| **v != 0.0).count() <= self.k
    }
}

impl ProxOracle for SparseSphere {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        if self.contains(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, x: &Vector, _gamma: f64) -> std::result::Result<Vector, OracleError> {
        Ok(project_sparse_sphere(x, self.k))
    }
}

/// `φ₁ = −(1/2m)‖W·‖²`, `φ₂ = δ_𝒮`. `gamma_hint` is checked against the
/// positive-definiteness limit `m/‖W‖²` of the prox system.
pub fn build_spca(spec: &SpcaSpec, gamma_hint: f64) -> Result<SplitProblem> {
    let (m, n) = spec.w.shape();
    if spec.k == 0 || spec.k > n {
        return Err(Error::InvalidProblem(format!("sparsity k = {} must be in 1..={n}", spec.k)));
    }
    let phi1 = NegQuadratic::new(spec.w.clone(), m);
    let lipschitz = phi1.lipschitz();
    if gamma_hint * lipschitz >= 1.0 {
        return Err(Error::InvalidProblem(format!(
            "gamma = {gamma_hint} must be below m/|W|^2 = {}",
            1.0 / lipschitz
        )));
    }
    SplitProblem::new(
        Arc::new(phi1),
        Arc::new(SparseSphere::new(n, spec.k)),
        Regime::Smooth {
            lipschitz: lipschitz.max(f64::MIN_POSITIVE),
            phi1_convex: false,
        },
    )
}
