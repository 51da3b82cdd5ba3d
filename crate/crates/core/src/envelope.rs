//! DRS and ADMM oracles and the merit functions evaluated from their output.

use crate::error::{Error, OracleSide, Result};
use crate::problem::SplitProblem;
use crate::Vector;

/// One DRS oracle call: `u = prox_{γφ₁}(s)`, `v = prox_{γφ₂}(2u − s)`.
pub fn drs_oracle(problem: &SplitProblem, s: &Vector, gamma: f64) -> Result<(Vector, Vector)> {
    problem.check_dim(s)?;
    let u = problem
        .phi1()
        .prox(s, gamma)
        .map_err(|e| Error::oracle(OracleSide::Phi1, e))?;
    let reflected = 2.0 * &u - s;
    let v = problem
        .phi2()
        .prox(&reflected, gamma)
        .map_err(|e| Error::oracle(OracleSide::Phi2, e))?;
    Ok((u, v))
}

/// Douglas-Rachford envelope from an already computed oracle pair:
/// `φ₁(u) + φ₂(v) + ⟨s − u, v − u⟩/γ + ‖v − u‖²/(2γ)`.
pub fn dre_eval(problem: &SplitProblem, s: &Vector, u: &Vector, v: &Vector, gamma: f64) -> Result<f64> {
    let phi1_u = problem.phi1().value(u);
    let phi2_v = problem.phi2().value(v);
    dre_from_values(phi1_u, phi2_v, s, u, v, gamma)
}

/// Same as [`dre_eval`] with the two function values supplied by the caller
/// (the linesearch obtains `φ₁(u)` from its quadratic line model).
pub fn dre_from_values(phi1_u: f64, phi2_v: f64, s: &Vector, u: &Vector, v: &Vector, gamma: f64) -> Result<f64> {
    let vu = v - u;
    let su = s - u;
    let value = phi1_u + phi2_v + su.dot(&vu) / gamma + vu.norm_squared() / (2.0 * gamma);
    finite(value)
}

/// The envelope written through Moreau envelopes:
/// `φ₁^γ(s) − ‖s − u‖²/γ + φ₂^γ(2u − s)`. Used to cross-check [`dre_eval`].
pub fn dre_eval_moreau(problem: &SplitProblem, s: &Vector, gamma: f64) -> Result<f64> {
    let (u, v) = drs_oracle(problem, s, gamma)?;
    let moreau1 = problem.phi1().value(&u) + (&u - s).norm_squared() / (2.0 * gamma);
    let reflected = 2.0 * &u - s;
    let moreau2 = problem.phi2().value(&v) + (&v - &reflected).norm_squared() / (2.0 * gamma);
    finite(moreau1 - (s - &u).norm_squared() / gamma + moreau2)
}

/// `β`-augmented Lagrangian `f(x) + g(z) + ⟨y, Ax + Bz − b⟩ + (β/2)‖Ax + Bz − b‖²`.
#[allow(clippy::too_many_arguments)]
pub fn auglag_eval(
    f_val: f64,
    g_val: f64,
    a_apply: impl Fn(&Vector) -> Vector,
    b_apply: impl Fn(&Vector) -> Vector,
    b: &Vector,
    x: &Vector,
    z: &Vector,
    y: &Vector,
    beta: f64,
) -> Result<f64> {
    let r = a_apply(x) + b_apply(z) - b;
    auglag_from_residual(f_val, g_val, &r, y, beta)
}

pub(crate) fn auglag_from_residual(f_val: f64, g_val: f64, r: &Vector, y: &Vector, beta: f64) -> Result<f64> {
    finite(f_val + g_val + y.dot(r) + 0.5 * beta * r.norm_squared())
}

fn finite(value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteMerit { value })
    }
}
