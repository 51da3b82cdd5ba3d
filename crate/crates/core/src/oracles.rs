//! General-purpose proximal oracles.

use nalgebra::Cholesky;

use crate::cache::StepCache;
use crate::error::OracleError;
use crate::problem::ProxOracle;
use crate::{Matrix, Vector};

/// `h ≡ 0`; its prox is the identity.
#[derive(Debug, Clone)]
pub struct Zero {
    dim: usize,
}

impl Zero {
    pub fn new(dim: usize) -> Self {
        Zero { dim }
    }
}

impl ProxOracle for Zero {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }

    fn prox(&self, x: &Vector, _gamma: f64) -> Result<Vector, OracleError> {
        Ok(x.clone())
    }

    fn is_generalized_quadratic(&self) -> bool {
        true
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(Vector::zeros(x.len()))
    }
}

/// `h(x) = ½(x − a)ᵀQ(x − a) + offset` for symmetric `Q` (possibly indefinite).
///
/// The prox solves `(I + γQ)w = x + γQa`; factorizations are cached per γ and
/// the call fails when `I + γQ` is not positive definite.
pub struct Quadratic {
    q: Matrix,
    center: Vector,
    offset: f64,
    factors: StepCache<Cholesky<f64, nalgebra::Dyn>>,
}

impl Quadratic {
    pub fn new(q: Matrix, center: Vector, offset: f64) -> Result<Self, OracleError> {
        if !q.is_square() || q.nrows() != center.len() {
            return Err(OracleError::new("quadratic: Q must be square and match the center"));
        }
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 * (1.0 + q.amax()) {
            return Err(OracleError::new("quadratic: Q must be symmetric"));
        }
        Ok(Quadratic {
            q,
            center,
            offset,
            factors: StepCache::new(),
        })
    }

    pub fn hessian(&self) -> &Matrix {
        &self.q
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    /// Spectral norm of `Q`, i.e. the Lipschitz modulus of the gradient.
    pub fn lipschitz(&self) -> f64 {
        self.q.clone().symmetric_eigenvalues().amax()
    }

    /// Smallest eigenvalue of `Q`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.q.clone().symmetric_eigenvalues().min()
    }
}

impl ProxOracle for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let d = x - &self.center;
        0.5 * d.dot(&(&self.q * &d)) + self.offset
    }

    fn prox(&self, x: &Vector, gamma: f64) -> Result<Vector, OracleError> {
        let n = self.dim();
        let chol = self.factors.get_or_try_insert(gamma, || {
            let m = Matrix::identity(n, n) + gamma * &self.q;
            Cholesky::new(m).ok_or_else(|| OracleError::new(format!("I + γQ is not positive definite at γ = {gamma}")))
        })?;
        let rhs = x + gamma * (&self.q * &self.center);
        Ok(chol.solve(&rhs))
    }

    fn is_generalized_quadratic(&self) -> bool {
        true
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(&self.q * (x - &self.center))
    }
}

/// Indicator of the box `[lo, hi]`; the prox is the coordinatewise clamp.
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    lo: Vector,
    hi: Vector,
}

impl BoxIndicator {
    pub fn new(lo: Vector, hi: Vector) -> Result<Self, OracleError> {
        if lo.len() != hi.len() {
            return Err(OracleError::new("box: bounds have different lengths"));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h)) {
            return Err(OracleError::new("box: lower bound exceeds upper bound"));
        }
        Ok(BoxIndicator { lo, hi })
    }

    pub fn lower(&self) -> &Vector {
        &self.lo
    }

    pub fn upper(&self) -> &Vector {
        &self.hi
    }
}

impl ProxOracle for BoxIndicator {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let inside = x
            .iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .all(|(xi, (l, h))| xi >= l && xi <= h);
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, x: &Vector, _gamma: f64) -> Result<Vector, OracleError> {
        Ok(Vector::from_iterator(
            x.len(),
            x.iter()
                .zip(self.lo.iter().zip(self.hi.iter()))
                .map(|(xi, (l, h))| xi.clamp(*l, *h)),
        ))
    }
}

/// `h(x) = w‖x‖₁`; the prox is soft thresholding.
#[derive(Debug, Clone)]
pub struct L1Norm {
    dim: usize,
    weight: f64,
}

impl L1Norm {
    pub fn new(dim: usize, weight: f64) -> Self {
        L1Norm { dim, weight }
    }
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

impl ProxOracle for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        self.weight * x.lp_norm(1)
    }

    fn prox(&self, x: &Vector, gamma: f64) -> Result<Vector, OracleError> {
        Ok(x.map(|xi| soft_threshold(xi, gamma * self.weight)))
    }
}

/// Weighted Huber function `w Σ hδ(xᵢ)` with `hδ(t) = t²/(2δ)` for `|t| ≤ δ`
/// and `|t| − δ/2` otherwise. Smooth, convex, single-valued prox.
#[derive(Debug, Clone)]
pub struct Huber {
    dim: usize,
    weight: f64,
    delta: f64,
}

impl Huber {
    pub fn new(dim: usize, weight: f64, delta: f64) -> Self {
        Huber { dim, weight, delta }
    }

    pub fn scalar(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= self.delta {
            self.weight * t * t / (2.0 * self.delta)
        } else {
            self.weight * (a - 0.5 * self.delta)
        }
    }

    pub fn scalar_prox(&self, x: f64, gamma: f64) -> f64 {
        let gw = gamma * self.weight;
        if x.abs() <= self.delta + gw {
            x * self.delta / (self.delta + gw)
        } else {
            x - gw * x.signum()
        }
    }
}

impl ProxOracle for Huber {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        x.iter().map(|&t| self.scalar(t)).sum()
    }

    fn prox(&self, x: &Vector, gamma: f64) -> Result<Vector, OracleError> {
        Ok(x.map(|t| self.scalar_prox(t, gamma)))
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(x.map(|t| self.weight * (t / self.delta).clamp(-1.0, 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_prox_solves_optimality_system() {
        let q = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let a = Vector::from_vec(vec![1.0, -2.0]);
        let h = Quadratic::new(q.clone(), a.clone(), 0.0).unwrap();
        let x = Vector::from_vec(vec![0.3, 0.7]);
        let w = h.prox(&x, 0.4).unwrap();
        let res = (&w - &x) / 0.4 + &q * (&w - &a);
        assert!(res.norm() < 1e-12);
        // second call hits the cache and must agree bitwise
        assert_eq!(w, h.prox(&x, 0.4).unwrap());
    }

    #[test]
    fn quadratic_rejects_too_large_step_when_concave() {
        let h = Quadratic::new(Matrix::from_element(1, 1, -1.0), Vector::zeros(1), 0.0).unwrap();
        assert!(h.prox(&Vector::from_element(1, 1.0), 0.5).is_ok());
        assert!(h.prox(&Vector::from_element(1, 1.0), 2.0).is_err());
    }

    #[test]
    fn box_prox_is_clamp() {
        let b = BoxIndicator::new(Vector::from_vec(vec![-1.0, 0.0]), Vector::from_vec(vec![1.0, 2.0])).unwrap();
        let w = b.prox(&Vector::from_vec(vec![-3.0, 1.5]), 1.0).unwrap();
        assert_eq!(w.as_slice(), &[-1.0, 1.5]);
        assert_eq!(b.value(&w), 0.0);
        assert_eq!(b.value(&Vector::from_vec(vec![0.0, 2.5])), f64::INFINITY);
    }

    #[test]
    fn huber_prox_is_continuous_at_the_kink() {
        let h = Huber::new(1, 2.0, 0.5);
        let gamma = 0.3;
        let edge = 0.5 + gamma * 2.0;
        let left = h.scalar_prox(edge - 1e-12, gamma);
        let right = h.scalar_prox(edge + 1e-12, gamma);
        assert!((left - right).abs() < 1e-10);
        assert!((left - 0.5).abs() < 1e-10);
    }

    #[test]
    fn soft_threshold_by_hand() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }
}
