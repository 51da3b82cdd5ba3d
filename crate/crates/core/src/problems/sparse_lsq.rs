use std::sync::Arc;

use nalgebra::{Cholesky, Dyn};
use rand::SeedableRng;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::lhalf::LHalfNorm;
use crate::cache::StepCache;
use crate::error::{OracleError, Result};
use crate::problem::{ProxOracle, Regime, SplitProblem};
use crate::{Matrix, Vector};

/// `minimize ½‖Ax − b‖² + r‖x‖_{1/2}^{1/2}`.
#[derive(Debug, Clone)]
pub struct SparseLsqSpec {
    pub a: Matrix,
    pub b: Vector,
    pub r: f64,
    /// Planted sparse solution, when generated.
    pub x_hat: Option<Vector>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseLsqDims {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub r: f64,
}

impl Default for SparseLsqDims {
    fn default() -> Self {
        SparseLsqDims {
            m: 100,
            n: 500,
            k: 50,
            r: 0.1,
        }
    }
}

impl SparseLsqSpec {
    /// `A` has i.i.d. `N(0, 1/m)` entries; `x̂` has `k` nonzero `N(0, 1)`
    /// entries at uniformly random positions; `b = Ax̂`.
    pub fn generate(dims: SparseLsqDims, seed: u64) -> Self {
        let SparseLsqDims { m, n, k, r } = dims;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entry = Normal::new(0.0, (1.0 / m as f64).sqrt()).expect("positive variance");
        let a = Matrix::from_fn(m, n, |_, _| entry.sample(&mut rng));
        let mut x_hat = Vector::zeros(n);
        for i in sample(&mut rng, n, k.min(n)).into_iter() {
            x_hat[i] = StandardNormal.sample(&mut rng);
        }
        let b = &a * &x_hat;
        SparseLsqSpec {
            a,
            b,
            r,
            x_hat: Some(x_hat),
            seed,
        }
    }
}

enum Factor {
    /// `ρI + AAᵀ` (used when `m ≤ n`).
    Wide(Cholesky<f64, Dyn>),
    /// `AᵀA + ρI`.
    Tall(Cholesky<f64, Dyn>),
}

/// `h(x) = ½‖Ax − b‖²`, prox `(AᵀA + γ⁻¹I)⁻¹(Aᵀb + γ⁻¹x)`, factored on the
/// smaller of the two dimensions.
pub struct LeastSquares {
    a: Matrix,
    b: Vector,
    atb: Vector,
    factors: StepCache<Factor>,
}

impl LeastSquares {
    pub fn new(a: Matrix, b: Vector) -> Self {
        let atb = a.tr_mul(&b);
        LeastSquares {
            a,
            b,
            atb,
            factors: StepCache::new(),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    /// `σ_max(A)²`.
    pub fn lipschitz(&self) -> f64 {
        let gram = if self.a.nrows() <= self.a.ncols() {
            &self.a * self.a.transpose()
        } else {
            self.a.tr_mul(&self.a)
        };
        gram.symmetric_eigenvalues().max()
    }
}

impl ProxOracle for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn prox(&self, x: &Vector, gamma: f64) -> std::result::Result<Vector, OracleError> {
        let rho = 1.0 / gamma;
        let (m, n) = self.a.shape();
        let factor = self.factors.get_or_try_insert(gamma, || {
            let fail = || OracleError::new("least-squares prox factorization failed");
            if m <= n {
                let k = &self.a * self.a.transpose() + Matrix::identity(m, m) * rho;
                Cholesky::new(k).map(Factor::Wide).ok_or_else(fail)
            } else {
                let k = self.a.tr_mul(&self.a) + Matrix::identity(n, n) * rho;
                Cholesky::new(k).map(Factor::Tall).ok_or_else(fail)
            }
        })?;
        let v = &self.atb + rho * x;
        Ok(match factor.as_ref() {
            // (AᵀA + ρI)⁻¹v = (v − Aᵀ(ρI + AAᵀ)⁻¹Av)/ρ
            Factor::Wide(chol) => (&v - self.a.tr_mul(&chol.solve(&(&self.a * &v)))) / rho,
            Factor::Tall(chol) => chol.solve(&v),
        })
    }

    fn is_generalized_quadratic(&self) -> bool {
        true
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(self.a.tr_mul(&(&self.a * x - &self.b)))
    }
}

/// Smooth regime with `L = σ_max(A)²`, convex `φ₁`.
pub fn build_sparse_lsq(spec: &SparseLsqSpec) -> Result<SplitProblem> {
    let lsq = LeastSquares::new(spec.a.clone(), spec.b.clone());
    let lipschitz = lsq.lipschitz();
    let n = spec.a.ncols();
    SplitProblem::new(
        Arc::new(lsq),
        Arc::new(LHalfNorm::new(n, spec.r)),
        Regime::Smooth {
            lipschitz,
            phi1_convex: true,
        },
    )
}
