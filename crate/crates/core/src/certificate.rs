//! Approximate stationarity certificates recomputed from a converged solve.

use serde::Serialize;

use crate::admm::{AdmmProblem, AdmmSolveReport};
use crate::drs::DrsSolveReport;
use crate::error::{Error, Result};
use crate::problem::{Regime, SplitProblem};
use crate::trace::Status;
use crate::Vector;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DrsCertificate {
    /// `z = v` is approximately stationary for `φ`. The element
    /// `∇φ₁(v) + (2u − s − v)/γ` of `∂̂φ(v)` has norm at most
    /// `bound = (1 + γL)‖r‖/γ`, which is `≤ 2ε` when `γL ≤ 1`. An adaptive
    /// run may stop with `γL > 1`; the limit is then `(1 + γL)ε`.
    Smooth {
        #[serde(skip)]
        z: Vector,
        bound: f64,
        /// `max(2, 1 + γL)·ε`.
        limit: f64,
        /// Norm of the subgradient element above, when `∇φ₁` is available.
        stationarity: Option<f64>,
        epsilon: f64,
    },
    /// `(x, y, z) = (u, (u − s)/γ, v)` with `−y ∈ ∂φ₁(x)` exactly,
    /// `dist(y, ∂φ₂(z)) ≤ ‖r‖/γ ≤ ε` and `‖x − z‖ = ‖r‖ ≤ γε`.
    StronglyConvex {
        #[serde(skip)]
        x: Vector,
        #[serde(skip)]
        y: Vector,
        #[serde(skip)]
        z: Vector,
        dual_residual: f64,
        primal_residual: f64,
        epsilon: f64,
        gamma: f64,
    },
}

impl DrsCertificate {
    /// Whether the recomputed residuals satisfy the stated ε-bounds.
    pub fn holds(&self) -> bool {
        let slack = 1.0 + 1e-12;
        match self {
            DrsCertificate::Smooth {
                bound,
                limit,
                stationarity,
                ..
            } => {
                let ok_surrogate = stationarity.is_none_or(|st| st <= *bound * slack + 1e-14);
                ok_surrogate && *bound <= limit * slack
            }
            DrsCertificate::StronglyConvex {
                dual_residual,
                primal_residual,
                epsilon,
                gamma,
                ..
            } => *dual_residual <= epsilon * slack && *primal_residual <= gamma * epsilon * slack,
        }
    }
}

pub fn certificate_drs(problem: &SplitProblem, report: &DrsSolveReport) -> Result<DrsCertificate> {
    if report.status != Status::Converged {
        return Err(Error::CertificateUnavailable);
    }
    let t = &report.state;
    let gamma = report.gamma;
    let r_norm = t.r.norm();
    Ok(match problem.regime() {
        Regime::Smooth { lipschitz, .. } => {
            let stationarity = problem
                .phi1()
                .gradient(&t.v)
                .map(|g| (g + (2.0 * &t.u - &t.s - &t.v) / gamma).norm());
            DrsCertificate::Smooth {
                z: t.v.clone(),
                bound: (1.0 + gamma * lipschitz) * r_norm / gamma,
                limit: (1.0 + gamma * lipschitz).max(2.0) * report.epsilon,
                stationarity,
                epsilon: report.epsilon,
            }
        }
        Regime::StronglyConvex { .. } => {
            let y = (&t.u - &t.s) / gamma;
            let y_phi2 = (2.0 * &t.u - &t.s - &t.v) / gamma;
            DrsCertificate::StronglyConvex {
                x: t.u.clone(),
                dual_residual: (&y - y_phi2).norm(),
                y,
                z: t.v.clone(),
                primal_residual: (&t.u - &t.v).norm(),
                epsilon: report.epsilon,
                gamma,
            }
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmmCertificate {
    /// `‖Ax + Bz − b‖`, recomputed.
    pub primal_residual: f64,
    /// `ε/β`.
    pub primal_bound: f64,
    /// `‖∇f(x) + Aᵀy‖` when `∇f` is available; zero up to the accuracy of the
    /// x-step.
    pub x_stationarity: Option<f64>,
    /// Surrogate bound `β‖B‖‖r‖` on `dist(−Bᵀy, ∂̂g(z))`.
    pub z_stationarity_bound: f64,
    pub epsilon: f64,
}

impl AdmmCertificate {
    pub fn holds(&self, stationarity_tol: f64) -> bool {
        self.primal_residual <= self.primal_bound * (1.0 + 1e-12)
            && self.x_stationarity.is_none_or(|s| s <= stationarity_tol)
    }
}

pub fn certificate_admm(problem: &dyn AdmmProblem, report: &AdmmSolveReport) -> Result<AdmmCertificate> {
    if report.status != Status::Converged {
        return Err(Error::CertificateUnavailable);
    }
    let t = &report.state;
    let r = problem.residual(&t.x, &t.z);
    let x_stationarity = problem
        .f_gradient(&t.x)
        .map(|g| (&g + problem.apply_at(&t.y)).norm() / (1.0 + g.norm()));
    Ok(AdmmCertificate {
        primal_residual: r.norm(),
        primal_bound: report.epsilon / report.beta,
        x_stationarity,
        z_stationarity_bound: report.beta * problem.b_norm() * r.norm(),
        epsilon: report.epsilon,
    })
}
