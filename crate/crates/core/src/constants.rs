//! Closed-form stepsize bounds and sufficient-decrease constants.

use crate::error::{Error, Result};

/// `C(α, λ) = λ/(1+α)² · ((2−λ)/2 − α·m)` with `m = max{α − λ/2, 0}` when
/// `φ₁` is convex and `m = 1` otherwise. `α` is the product `γL`.
///
/// May return a nonpositive value; callers reject it.
pub fn decrease_constant(alpha: f64, lambda: f64, phi1_convex: bool) -> f64 {
    let m = if phi1_convex { (alpha - 0.5 * lambda).max(0.0) } else { 1.0 };
    lambda / ((1.0 + alpha) * (1.0 + alpha)) * ((2.0 - lambda) / 2.0 - alpha * m)
}

/// Increase constant of the strongly convex regime, `C(1/(γμ), λ)` with the
/// convex branch. Requires `γμ > 1`.
pub fn dual_decrease_constant(gamma: f64, mu: f64, lambda: f64) -> Result<f64> {
    if !(gamma * mu > 1.0) {
        return Err(Error::InvalidConfig(format!(
            "strongly convex regime needs gamma * mu > 1, got {}",
            gamma * mu
        )));
    }
    Ok(decrease_constant(1.0 / (gamma * mu), lambda, true))
}

/// Largest admissible DRS stepsize in the smooth regime: `1/L` if `φ₁` is
/// convex, `(2−λ)/(2L)` otherwise (exclusive bound).
pub fn max_stepsize(lipschitz: f64, lambda: f64, phi1_convex: bool) -> f64 {
    if phi1_convex {
        1.0 / lipschitz
    } else {
        (2.0 - lambda) / (2.0 * lipschitz)
    }
}

/// Smallest admissible ADMM penalty in the smooth regime, the reciprocal of
/// [`max_stepsize`] (exclusive bound).
pub fn min_penalty(lipschitz_af: f64, lambda: f64, f_convex: bool) -> f64 {
    if f_convex {
        lipschitz_af
    } else {
        2.0 * lipschitz_af / (2.0 - lambda)
    }
}

/// ADMM decrease constant `D = C(L_{A▷f}/β, λ)`.
pub fn admm_decrease_constant(lipschitz_af: f64, beta: f64, lambda: f64, f_convex: bool) -> f64 {
    decrease_constant(lipschitz_af / beta, lambda, f_convex)
}

/// ADMM increase constant of the strongly convex regime,
/// `C(β‖A‖²/μ_f, λ)` with the convex branch. Requires `β < μ_f/‖A‖²`.
pub fn admm_dual_decrease_constant(beta: f64, mu_f: f64, a_norm: f64, lambda: f64) -> Result<f64> {
    dual_decrease_constant(1.0 / beta, mu_f / (a_norm * a_norm), lambda)
}
