use nalgebra::{Cholesky, Dyn};

use crate::admm::{AdmmProblem, AdmmRegime};
use crate::cache::StepCache;
use crate::error::{Error, OracleError, Result};
use crate::{Matrix, Vector};

/// `minimize ½xᵀPx + qᵀx + δ_[lo,hi](z)` subject to `Ax − z = b`.
pub struct QuadraticBoxAdmm {
    p: Matrix,
    q: Vector,
    a: Matrix,
    b: Vector,
    lo: Vector,
    hi: Vector,
    regime: AdmmRegime,
    factors: StepCache<Cholesky<f64, Dyn>>,
}

impl QuadraticBoxAdmm {
    /// The regime is supplied by the caller since it depends on how `A` and
    /// `P` interact.
    pub fn new(p: Matrix, q: Vector, a: Matrix, b: Vector, lo: Vector, hi: Vector, regime: AdmmRegime) -> Result<Self> {
        let n = p.nrows();
        let m = a.nrows();
        if p.ncols() != n || q.len() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if q.len() != n { q.len() } else { a.ncols() },
            });
        }
        if b.len() != m || lo.len() != m || hi.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: b.len().max(lo.len()).max(hi.len()),
            });
        }
        if (&p - p.transpose()).amax() > 1e-12 * (1.0 + p.amax()) {
            return Err(Error::InvalidProblem("P must be symmetric".into()));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidProblem("box bounds must satisfy lo <= hi".into()));
        }
        Ok(QuadraticBoxAdmm {
            p,
            q,
            a,
            b,
            lo,
            hi,
            regime,
            factors: StepCache::new(),
        })
    }
}

impl AdmmProblem for QuadraticBoxAdmm {
    fn dims(&self) -> (usize, usize, usize) {
        (self.p.nrows(), self.a.nrows(), self.a.nrows())
    }

    fn apply_a(&self, x: &Vector) -> Vector {
        &self.a * x
    }

    fn apply_b(&self, z: &Vector) -> Vector {
        -z
    }

    fn apply_at(&self, y: &Vector) -> Vector {
        self.a.tr_mul(y)
    }

    fn apply_bt(&self, y: &Vector) -> Vector {
        -y
    }

    fn offset(&self) -> &Vector {
        &self.b
    }

    fn f_value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    fn g_value(&self, z: &Vector) -> f64 {
        let inside = z.iter().zip(self.lo.iter().zip(self.hi.iter())).all(|(v, (l, h))| l <= v && v <= h);
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn f_gradient(&self, x: &Vector) -> Option<Vector> {
        Some(&self.p * x + &self.q)
    }

    /// `(P + βAᵀA)x = −q − Aᵀy + βAᵀ(z + b)`.
    fn argmin_x(&self, y: &Vector, z: &Vector, beta: f64) -> std::result::Result<Vector, OracleError> {
        let chol = self.factors.get_or_try_insert(beta, || {
            Cholesky::new(&self.p + beta * self.a.tr_mul(&self.a))
                .ok_or_else(|| OracleError::new(format!("P + βAᵀA is not positive definite at β = {beta}")))
        })?;
        let rhs = -&self.q - self.a.tr_mul(y) + beta * self.a.tr_mul(&(z + &self.b));
        Ok(chol.solve(&rhs))
    }

    /// `z = clamp(Ax − b + y/β)`.
    fn argmin_z(&self, x: &Vector, y: &Vector, beta: f64) -> std::result::Result<Vector, OracleError> {
        let w = &self.a * x - &self.b + y / beta;
        Ok(Vector::from_fn(w.len(), |i, _| w[i].clamp(self.lo[i], self.hi[i])))
    }

    fn x_step_is_affine(&self) -> bool {
        true
    }

    fn regime(&self) -> AdmmRegime {
        self.regime
    }

    fn b_norm(&self) -> f64 {
        1.0
    }
}
