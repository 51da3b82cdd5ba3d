//! DRS applied to the dual problem `min φ₁*(−·) + φ₂*`, expressed through the
//! primal oracles.

use std::sync::Arc;

use crate::error::OracleError;
use crate::problem::ProxOracle;
use crate::Vector;

/// Image of a primal DRS triple under the self-duality map.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTriple {
    pub s: Vector,
    pub u: Vector,
    pub v: Vector,
    pub gamma: f64,
}

/// `γ* = 1/γ`, `s* = −s/γ`, `u* = (u − s)/γ`, `v* = (2u − s − v)/γ`.
pub fn self_dual_transform(s: &Vector, u: &Vector, v: &Vector, gamma: f64) -> DualTriple {
    DualTriple {
        s: -s / gamma,
        u: (u - s) / gamma,
        v: (2.0 * u - s - v) / gamma,
        gamma: 1.0 / gamma,
    }
}

/// Inverse of [`self_dual_transform`]; returns `(s, u, v, γ)`.
pub fn self_dual_inverse(dual: &DualTriple) -> (Vector, Vector, Vector, f64) {
    let gs = dual.gamma;
    let s = -&dual.s / gs;
    let u = (&dual.u - &dual.s) / gs;
    let v = (2.0 * &dual.u - &dual.s - &dual.v) / gs;
    (s, u, v, 1.0 / gs)
}

/// Which dual term a [`Conjugate`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualSide {
    /// `y ↦ φ₁*(−y)`, with prox `y + δ·prox_{φ₁/δ}(−y/δ)`.
    Mirrored,
    /// `y ↦ φ₂*(y)`, with prox `y − δ·prox_{φ₂/δ}(y/δ)`.
    Plain,
}

type ValueFn = dyn Fn(&Vector) -> f64 + Send + Sync;

/// Conjugate of a convex oracle. The prox comes from the Moreau identity; the
/// conjugate value has no generic formula and is supplied by the caller.
pub struct Conjugate {
    inner: Arc<dyn ProxOracle>,
    side: DualSide,
    value: Box<ValueFn>,
}

impl Conjugate {
    /// `conj_value` must evaluate the conjugate `h*` itself (not mirrored);
    /// the mirroring for [`DualSide::Mirrored`] is applied here.
    pub fn new(
        inner: Arc<dyn ProxOracle>,
        side: DualSide,
        conj_value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Conjugate {
            inner,
            side,
            value: Box::new(conj_value),
        }
    }
}

impl ProxOracle for Conjugate {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, y: &Vector) -> f64 {
        match self.side {
            DualSide::Mirrored => (self.value)(&-y),
            DualSide::Plain => (self.value)(y),
        }
    }

    fn prox(&self, y: &Vector, delta: f64) -> Result<Vector, OracleError> {
        match self.side {
            DualSide::Mirrored => Ok(y + delta * self.inner.prox(&(-y / delta), 1.0 / delta)?),
            DualSide::Plain => Ok(y - delta * self.inner.prox(&(y / delta), 1.0 / delta)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_image() {
        let s = Vector::from_vec(vec![1.0, -0.5]);
        let u = Vector::from_vec(vec![0.2, 0.4]);
        let d = self_dual_transform(&s, &u, &u, 2.0);
        assert_eq!(d.u, d.v);
        assert_eq!(d.u, (&u - &s) / 2.0);
        assert_eq!(d.s, -&s / 2.0);
        assert_eq!(d.gamma, 0.5);
    }

    #[test]
    fn round_trip() {
        let s = Vector::from_vec(vec![1.0, -0.5, 3.0]);
        let u = Vector::from_vec(vec![0.25, 0.5, -1.0]);
        let v = Vector::from_vec(vec![-2.0, 0.125, 4.0]);
        let (s2, u2, v2, g2) = self_dual_inverse(&self_dual_transform(&s, &u, &v, 0.5));
        assert_eq!(g2, 0.5);
        assert_eq!(s2, s);
        assert_eq!(u2, u);
        assert_eq!(v2, v);
    }
}
