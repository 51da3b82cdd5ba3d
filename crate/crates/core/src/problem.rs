//! The composite problem `minimize φ₁(s) + φ₂(s)` as seen by the DRS driver.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, OracleError, Result};
use crate::Vector;

/// Value and proximal-map access to one term of a composite problem.
///
/// `prox` returns one element of the (possibly set-valued) proximal map
/// `argmin_w h(w) + ‖w − x‖²/(2γ)`. Implementations document their tie-break.
/// `value` returns `f64::INFINITY` outside the domain; it must never return
/// NaN.
pub trait ProxOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn prox(&self, x: &Vector, gamma: f64) -> std::result::Result<Vector, OracleError>;

    /// Quadratic plus the indicator of an affine subspace. Such functions have
    /// an affine proximal map, which the linesearch exploits.
    fn is_generalized_quadratic(&self) -> bool {
        false
    }

    /// Gradient, when the term is differentiable and the oracle knows it.
    /// Only used for certificates and diagnostics.
    fn gradient(&self, _x: &Vector) -> Option<Vector> {
        None
    }
}

/// Which standing assumption the problem satisfies. Decides the sign `π` of
/// the merit decrease test and which stepsizes are admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `φ₁` has `lipschitz`-Lipschitz gradient; `φ₂` is merely lsc.
    Smooth { lipschitz: f64, phi1_convex: bool },
    /// `φ₁` is `mu`-strongly convex and `φ₂` convex.
    StronglyConvex { mu: f64 },
}

impl Regime {
    /// `+1` in the smooth regime (merit decreases), `−1` otherwise.
    pub fn pi(&self) -> f64 {
        match self {
            Regime::Smooth { .. } => 1.0,
            Regime::StronglyConvex { .. } => -1.0,
        }
    }
}

#[derive(Clone)]
pub struct SplitProblem {
    phi1: Arc<dyn ProxOracle>,
    phi2: Arc<dyn ProxOracle>,
    regime: Regime,
}

impl SplitProblem {
    pub fn new(phi1: Arc<dyn ProxOracle>, phi2: Arc<dyn ProxOracle>, regime: Regime) -> Result<Self> {
        if phi1.dim() != phi2.dim() {
            return Err(Error::DimensionMismatch {
                expected: phi1.dim(),
                found: phi2.dim(),
            });
        }
        match regime {
            Regime::Smooth { lipschitz, .. } if !(lipschitz > 0.0 && lipschitz.is_finite()) => {
                return Err(Error::InvalidProblem(format!(
                    "Lipschitz modulus must be positive and finite, got {lipschitz}"
                )))
            }
            Regime::StronglyConvex { mu } if !(mu > 0.0 && mu.is_finite()) => {
                return Err(Error::InvalidProblem(format!(
                    "strong convexity modulus must be positive and finite, got {mu}"
                )))
            }
            _ => {}
        }
        Ok(SplitProblem { phi1, phi2, regime })
    }

    pub fn dim(&self) -> usize {
        self.phi1.dim()
    }

    pub fn phi1(&self) -> &dyn ProxOracle {
        self.phi1.as_ref()
    }

    pub fn phi2(&self) -> &dyn ProxOracle {
        self.phi2.as_ref()
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn pi(&self) -> f64 {
        self.regime.pi()
    }

    /// `φ(x) = φ₁(x) + φ₂(x)`.
    pub fn objective(&self, x: &Vector) -> f64 {
        self.phi1.value(x) + self.phi2.value(x)
    }

    pub(crate) fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for SplitProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitProblem")
            .field("dim", &self.dim())
            .field("regime", &self.regime)
            .finish()
    }
}

/// Full state of one DRS oracle call: `(u, v) ∈ DRS(s)` together with the
/// residual `r = u − v` and the envelope value.
#[derive(Debug, Clone, PartialEq)]
pub struct DrsTriple {
    pub s: Vector,
    pub u: Vector,
    pub v: Vector,
    pub r: Vector,
    pub dre: f64,
}

impl DrsTriple {
    pub fn evaluate(problem: &SplitProblem, s: Vector, gamma: f64) -> Result<Self> {
        let (u, v) = crate::envelope::drs_oracle(problem, &s, gamma)?;
        let dre = crate::envelope::dre_eval(problem, &s, &u, &v, gamma)?;
        let r = &u - &v;
        Ok(DrsTriple { s, u, v, r, dre })
    }
}

/// `(x, y, z)` iterate of ADMM with its residual `r = Ax + Bz − b` and the
/// augmented Lagrangian value.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmTriple {
    pub x: Vector,
    pub y: Vector,
    pub z: Vector,
    pub r: Vector,
    pub auglag: f64,
}
