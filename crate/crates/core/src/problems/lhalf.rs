use std::f64::consts::PI;

use crate::error::OracleError;
use crate::problem::ProxOracle;
use crate::Vector;

/// Scalar prox of `t ↦ step·√|t|`: the minimizer of `step·√|w| + ½(w − x)²`.
///
/// Nonzero branch for `|x| > (3/2)·step^{2/3}`:
/// `w = (2/3)·x·(1 + cos((2/3)(π − arccos((step/4)(|x|/3)^{−3/2}))))`.
/// At the threshold both `0` and `step^{2/3}·sgn(x)` are minimizers; `0` is
/// returned.
pub fn prox_l_half_scalar(x: f64, step: f64) -> f64 {
    let threshold = 1.5 * step.powf(2.0 / 3.0);
    if x.abs() <= threshold {
        return 0.0;
    }
    let arg = (step / 4.0) * (x.abs() / 3.0).powf(-1.5);
    let phi = arg.min(1.0).acos();
    (2.0 / 3.0) * x * (1.0 + ((2.0 / 3.0) * (PI - phi)).cos())
}

/// Coordinatewise [`prox_l_half_scalar`].
pub fn prox_l_half(x: &Vector, step: f64) -> Vector {
    x.map(|xi| prox_l_half_scalar(xi, step))
}

/// `h(x) = weight·Σ √|xᵢ|`. Nonconvex; the prox uses step `γ·weight`.
#[derive(Debug, Clone)]
pub struct LHalfNorm {
    dim: usize,
    weight: f64,
}

impl LHalfNorm {
    pub fn new(dim: usize, weight: f64) -> Self {
        LHalfNorm { dim, weight }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl ProxOracle for LHalfNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        self.weight * x.iter().map(|t| t.abs().sqrt()).sum::<f64>()
    }

    fn prox(&self, x: &Vector, gamma: f64) -> Result<Vector, OracleError> {
        Ok(prox_l_half(x, gamma * self.weight))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(w: f64, x: f64, step: f64) -> f64 {
        step * w.abs().sqrt() + 0.5 * (w - x) * (w - x)
    }

    #[test]
    fn below_threshold_is_zero() {
        assert_eq!(prox_l_half_scalar(0.0, 1.0), 0.0);
        assert_eq!(prox_l_half_scalar(1.0, 1.0), 0.0);
        assert_eq!(prox_l_half_scalar(-1.5, 1.0), 0.0);
    }

    #[test]
    fn stationary_above_threshold() {
        // 1/(2√w) + w − x = 0 at the returned point
        for &x in &[1.6, 2.0, 10.0, 100.0] {
            let w = prox_l_half_scalar(x, 1.0);
            assert!((0.5 / w.sqrt() + w - x).abs() < 1e-12, "x = {x}");
            assert!(objective(w, x, 1.0) < objective(0.0, x, 1.0));
        }
        let w = prox_l_half_scalar(10.0, 1.0);
        assert!((w - 9.840611).abs() < 1e-6);
    }

    #[test]
    fn odd_and_tie_at_threshold() {
        assert_eq!(prox_l_half_scalar(-10.0, 0.7), -prox_l_half_scalar(10.0, 0.7));
        let step: f64 = 0.3;
        let thr = 1.5 * step.powf(2.0 / 3.0);
        let nonzero = step.powf(2.0 / 3.0);
        assert!((objective(nonzero, thr, step) - objective(0.0, thr, step)).abs() < 1e-14);
        let just_above = prox_l_half_scalar(thr * (1.0 + 1e-12), step);
        assert!((just_above - nonzero).abs() < 1e-5);
    }
}
