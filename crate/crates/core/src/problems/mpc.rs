use std::sync::Arc;

use nalgebra::{Dyn, LU};

use crate::cache::StepCache;
use crate::error::{Error, OracleError, Result};
use crate::problem::{ProxOracle, Regime, SplitProblem};
use crate::{Matrix, Vector};

/// Finite-horizon linear MPC:
///
/// ```text
/// minimize  Σ_{t<N} ½uₜᵀRuₜ + Σ_{1≤t≤N} ½(xₜ − x̄)ᵀQ(xₜ − x̄) + κ·max(0, |xₜ| − ρ)
/// s.t.      x_{t+1} = A xₜ + B uₜ,  lo ≤ uₜ ≤ hi
/// ```
///
/// The soft corridor penalty is applied per state component.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcSpec {
    pub a: Matrix,
    pub b: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub x_ref: Vector,
    pub horizon: usize,
    pub u_lo: Vector,
    pub u_hi: Vector,
    pub rho: Vector,
    pub kappa: Vector,
    pub x0: Vector,
}

impl MpcSpec {
    /// Double integrator sampled at `Ts = 0.2` by exact discretization:
    /// `A = [[1, Ts], [0, 1]]`, `B = [[Ts²/2], [Ts]]`, `Q = diag(1, 0.1)`,
    /// `R = 0.1`, `|u| ≤ 1`, corridor `ρ = (2.5, 1)` with weight 5, starting
    /// from `(−3, 1)` and tracking `(1, 0)`.
    pub fn double_integrator(horizon: usize) -> Self {
        let ts = 0.2;
        MpcSpec {
            a: Matrix::from_row_slice(2, 2, &[1.0, ts, 0.0, 1.0]),
            b: Matrix::from_row_slice(2, 1, &[ts * ts / 2.0, ts]),
            q: Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, 0.1])),
            r: Matrix::from_element(1, 1, 0.1),
            x_ref: Vector::from_column_slice(&[1.0, 0.0]),
            horizon,
            u_lo: Vector::from_element(1, -1.0),
            u_hi: Vector::from_element(1, 1.0),
            rho: Vector::from_column_slice(&[2.5, 1.0]),
            kappa: Vector::from_column_slice(&[5.0, 5.0]),
            x0: Vector::from_column_slice(&[-3.0, 1.0]),
        }
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b.ncols()
    }

    fn validate(&self) -> Result<()> {
        let (nx, nu) = (self.nx(), self.nu());
        let bad = |what: &str| Err(Error::InvalidProblem(format!("mpc: {what}")));
        if self.horizon == 0 {
            return bad("horizon must be positive");
        }
        if self.a.shape() != (nx, nx) || self.b.nrows() != nx {
            return bad("dynamics dimensions");
        }
        if self.q.shape() != (nx, nx) || self.r.shape() != (nu, nu) {
            return bad("cost dimensions");
        }
        if [self.x_ref.len(), self.rho.len(), self.kappa.len(), self.x0.len()] != [nx; 4] {
            return bad("state vector dimensions");
        }
        if self.u_lo.len() != nu || self.u_hi.len() != nu {
            return bad("input bound dimensions");
        }
        if self.u_lo.iter().zip(self.u_hi.iter()).any(|(l, h)| !(l <= h)) {
            return bad("input bounds must satisfy lo <= hi");
        }
        if self.rho.iter().chain(self.kappa.iter()).any(|v| !(*v >= 0.0)) {
            return bad("corridor widths and weights must be nonnegative");
        }
        for (name, m) in [("Q", &self.q), ("R", &self.r)] {
            if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) || m.clone().cholesky().is_none() {
                return bad(&format!("{name} must be symmetric positive definite"));
            }
        }
        Ok(())
    }
}

/// Scalar prox of `κ·max(0, |w| − ρ)` with step `γ`.
pub fn soft_corridor_prox(x: f64, rho: f64, kappa: f64, gamma: f64) -> f64 {
    let a = x.abs();
    if a >= rho + gamma * kappa {
        x - gamma * kappa * x.signum()
    } else if a > rho {
        rho * x.signum()
    } else {
        x
    }
}

pub fn soft_corridor_value(x: f64, rho: f64, kappa: f64) -> f64 {
    kappa * (x.abs() - rho).max(0.0)
}

/// Decision vector layout: `(u₀, …, u_{N−1}, x₁, …, x_N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MpcLayout {
    pub nx: usize,
    pub nu: usize,
    pub horizon: usize,
}

impl MpcLayout {
    pub fn dim(&self) -> usize {
        self.horizon * (self.nx + self.nu)
    }

    pub fn input(&self, t: usize) -> usize {
        t * self.nu
    }

    /// Offset of `x_t` for `1 ≤ t ≤ N`.
    pub fn state(&self, t: usize) -> usize {
        self.horizon * self.nu + (t - 1) * self.nx
    }
}

/// A built MPC problem in scaled variables `ŵ = D⁻¹w` with
/// `D = diag(H)^{−1/2}`. With diagonal `Q`, `R` the scaled Hessian is the
/// identity.
pub struct MpcProblem {
    pub problem: SplitProblem,
    pub layout: MpcLayout,
    /// Diagonal of `D`.
    pub scaling: Vector,
    /// Smallest eigenvalue of the scaled Hessian on the dynamics subspace.
    pub mu: f64,
    tracking: Arc<TrackingCost>,
}

impl MpcProblem {
    /// `w = Dŵ`.
    pub fn unscale(&self, w_hat: &Vector) -> Vector {
        w_hat.component_mul(&self.scaling)
    }

    pub fn scale(&self, w: &Vector) -> Vector {
        w.component_div(&self.scaling)
    }

    /// Gradient of the scaled quadratic cost (without the subspace
    /// indicator).
    pub fn cost_gradient(&self, w_hat: &Vector) -> Vector {
        &self.tracking.hessian * w_hat + &self.tracking.linear
    }

    /// Scaled dynamics `Êŵ = e`.
    pub fn constraints(&self) -> (&Matrix, &Vector) {
        (&self.tracking.e, &self.tracking.rhs)
    }

    /// A point of the dynamics subspace: inputs `u`, states by simulation.
    pub fn feasible_point(&self, spec: &MpcSpec, inputs: &[Vector]) -> Vector {
        let l = self.layout;
        let mut w = Vector::zeros(l.dim());
        let mut x = spec.x0.clone();
        for t in 0..l.horizon {
            let u = &inputs[t % inputs.len()];
            w.rows_mut(l.input(t), l.nu).copy_from(u);
            x = &spec.a * &x + &spec.b * u;
            w.rows_mut(l.state(t + 1), l.nx).copy_from(&x);
        }
        self.scale(&w)
    }
}

/// `½ŵᵀĤŵ + ĥᵀŵ + const + δ{Êŵ = e}`.
struct TrackingCost {
    hessian: Matrix,
    linear: Vector,
    constant: f64,
    e: Matrix,
    rhs: Vector,
    kkt: StepCache<LU<f64, Dyn, Dyn>>,
}

impl TrackingCost {
    fn cost(&self, w: &Vector) -> f64 {
        0.5 * w.dot(&(&self.hessian * w)) + self.linear.dot(w) + self.constant
    }
}

impl ProxOracle for TrackingCost {
    fn dim(&self) -> usize {
        self.hessian.nrows()
    }

    fn value(&self, w: &Vector) -> f64 {
        let violation = (&self.e * w - &self.rhs).amax();
        if violation <= 1e-9 * (1.0 + self.rhs.amax() + w.amax()) {
            self.cost(w)
        } else {
            f64::INFINITY
        }
    }

    /// Solves `[Ĥ + I/γ, Êᵀ; Ê, 0][w; ν] = [x/γ − ĥ; e]`.
    fn prox(&self, x: &Vector, gamma: f64) -> std::result::Result<Vector, OracleError> {
        let n = self.dim();
        let p = self.e.nrows();
        let lu = self.kkt.get_or_try_insert(gamma, || {
            let mut k = Matrix::zeros(n + p, n + p);
            k.view_mut((0, 0), (n, n)).copy_from(&(&self.hessian + Matrix::identity(n, n) / gamma));
            k.view_mut((0, n), (n, p)).copy_from(&self.e.transpose());
            k.view_mut((n, 0), (p, n)).copy_from(&self.e);
            let lu = k.lu();
            if lu.is_invertible() {
                Ok(lu)
            } else {
                Err(OracleError::new("singular KKT system"))
            }
        })?;
        let mut rhs = Vector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&(x / gamma - &self.linear));
        rhs.rows_mut(n, p).copy_from(&self.rhs);
        let sol = lu.solve(&rhs).ok_or_else(|| OracleError::new("KKT solve failed"))?;
        Ok(sol.rows(0, n).into_owned())
    }

    fn is_generalized_quadratic(&self) -> bool {
        true
    }
}

/// Box on the scaled inputs, soft corridor on the scaled states.
struct InputStatePenalty {
    layout: MpcLayout,
    lo: Vector,
    hi: Vector,
    rho: Vector,
    kappa: Vector,
}

impl ProxOracle for InputStatePenalty {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn value(&self, w: &Vector) -> f64 {
        let split = self.layout.horizon * self.layout.nu;
        let mut total = 0.0;
        for i in 0..w.len() {
            if i < split {
                if w[i] < self.lo[i] || w[i] > self.hi[i] {
                    return f64::INFINITY;
                }
            } else {
                total += soft_corridor_value(w[i], self.rho[i - split], self.kappa[i - split]);
            }
        }
        total
    }

    fn prox(&self, x: &Vector, gamma: f64) -> std::result::Result<Vector, OracleError> {
        let split = self.layout.horizon * self.layout.nu;
        Ok(Vector::from_fn(x.len(), |i, _| {
            if i < split {
                x[i].clamp(self.lo[i], self.hi[i])
            } else {
                soft_corridor_prox(x[i], self.rho[i - split], self.kappa[i - split], gamma)
            }
        }))
    }
}

pub fn build_mpc(spec: &MpcSpec) -> Result<MpcProblem> {
    spec.validate()?;
    let layout = MpcLayout {
        nx: spec.nx(),
        nu: spec.nu(),
        horizon: spec.horizon,
    };
    let (nx, nu, big_n) = (layout.nx, layout.nu, layout.horizon);
    let n = layout.dim();

    // unscaled cost ½wᵀHw + hᵀw + c
    let mut h = Matrix::zeros(n, n);
    let mut lin = Vector::zeros(n);
    let qxr = &spec.q * &spec.x_ref;
    for t in 0..big_n {
        h.view_mut((layout.input(t), layout.input(t)), (nu, nu)).copy_from(&spec.r);
        let s = layout.state(t + 1);
        h.view_mut((s, s), (nx, nx)).copy_from(&spec.q);
        lin.rows_mut(s, nx).copy_from(&(-&qxr));
    }
    let constant = 0.5 * big_n as f64 * spec.x_ref.dot(&qxr);

    // dynamics: x_{t+1} − A x_t − B u_t = 0, with x_0 moved to the right
    let mut e = Matrix::zeros(big_n * nx, n);
    let mut rhs = Vector::zeros(big_n * nx);
    for t in 0..big_n {
        let row = t * nx;
        e.view_mut((row, layout.state(t + 1)), (nx, nx)).fill_with_identity();
        e.view_mut((row, layout.input(t)), (nx, nu)).copy_from(&(-&spec.b));
        if t == 0 {
            rhs.rows_mut(row, nx).copy_from(&(&spec.a * &spec.x0));
        } else {
            e.view_mut((row, layout.state(t)), (nx, nx)).copy_from(&(-&spec.a));
        }
    }

    let d = h.diagonal().map(|v| 1.0 / v.sqrt());
    let dm = Matrix::from_diagonal(&d);
    let hessian = &dm * &h * &dm;
    let linear = lin.component_mul(&d);
    let e_hat = &e * &dm;

    let mu = reduced_min_eigenvalue(&hessian, &e_hat)?;

    let split = big_n * nu;
    let mut lo = Vector::zeros(split);
    let mut hi = Vector::zeros(split);
    for t in 0..big_n {
        for j in 0..nu {
            let i = layout.input(t) + j;
            lo[i] = spec.u_lo[j] / d[i];
            hi[i] = spec.u_hi[j] / d[i];
        }
    }
    let mut rho = Vector::zeros(big_n * nx);
    let mut kappa = Vector::zeros(big_n * nx);
    for t in 1..=big_n {
        for j in 0..nx {
            let i = layout.state(t) + j;
            rho[i - split] = spec.rho[j] / d[i];
            kappa[i - split] = spec.kappa[j] * d[i];
        }
    }

    let tracking = Arc::new(TrackingCost {
        hessian,
        linear,
        constant,
        e: e_hat,
        rhs,
        kkt: StepCache::new(),
    });
    let penalty = InputStatePenalty {
        layout,
        lo,
        hi,
        rho,
        kappa,
    };
    let problem = SplitProblem::new(tracking.clone(), Arc::new(penalty), Regime::StronglyConvex { mu })?;
    Ok(MpcProblem {
        problem,
        layout,
        scaling: d,
        mu,
        tracking,
    })
}

/// `λ_min(ZᵀĤZ)` with `Z` an orthonormal basis of `ker Ê`, taken from the
/// unit eigenvectors of the projector onto the kernel.
fn reduced_min_eigenvalue(hessian: &Matrix, e: &Matrix) -> Result<f64> {
    let n = hessian.nrows();
    let gram = e * e.transpose();
    let gram_inv = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidProblem("dynamics constraints are rank deficient".into()))?;
    let projector = Matrix::identity(n, n) - e.transpose() * gram_inv.solve(e);
    let eig = projector.symmetric_eigen();
    let cols: Vec<_> = (0..n)
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return Err(Error::InvalidProblem("dynamics leave no free variables".into()));
    }
    let z = Matrix::from_columns(&cols);
    let reduced = z.transpose() * hessian * &z;
    let mu = reduced.symmetric_eigenvalues().min();
    if !(mu > 0.0) {
        return Err(Error::InvalidProblem(format!("reduced Hessian is not positive definite (min eig {mu})")));
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corridor_prox_regions() {
        // |x| ≤ ρ: unchanged; ρ < |x| < ρ+γκ: clipped to ρ; beyond: shifted
        assert_eq!(soft_corridor_prox(0.5, 1.0, 2.0, 0.5), 0.5);
        assert_eq!(soft_corridor_prox(1.5, 1.0, 2.0, 0.5), 1.0);
        assert_eq!(soft_corridor_prox(-1.5, 1.0, 2.0, 0.5), -1.0);
        assert_eq!(soft_corridor_prox(3.0, 1.0, 2.0, 0.5), 2.0);
        assert_eq!(soft_corridor_prox(-3.0, 1.0, 2.0, 0.5), -2.0);
    }

    #[test]
    fn scaled_hessian_is_identity() {
        let built = build_mpc(&MpcSpec::double_integrator(10)).unwrap();
        let n = built.layout.dim();
        assert_eq!(n, 30);
        assert!((&built.tracking.hessian - Matrix::identity(n, n)).amax() < 1e-14);
        assert!((built.mu - 1.0).abs() < 1e-10);
        assert_eq!(built.problem.regime(), Regime::StronglyConvex { mu: built.mu });
    }

    #[test]
    fn one_step_scalar_kkt_by_hand() {
        // x₁ = a x₀ + b u, cost ½ r u² + ½ q (x₁ − x̄)²; no scaling effect
        // since q = r = 1.
        let spec = MpcSpec {
            a: Matrix::from_element(1, 1, 1.0),
            b: Matrix::from_element(1, 1, 1.0),
            q: Matrix::from_element(1, 1, 1.0),
            r: Matrix::from_element(1, 1, 1.0),
            x_ref: Vector::from_element(1, 0.0),
            horizon: 1,
            u_lo: Vector::from_element(1, -10.0),
            u_hi: Vector::from_element(1, 10.0),
            rho: Vector::from_element(1, 10.0),
            kappa: Vector::from_element(1, 1.0),
            x0: Vector::from_element(1, 2.0),
        };
        let built = build_mpc(&spec).unwrap();
        // prox at (0, 0), γ = 1: minimize u² + x² s.t. x − u = 2 → u = −1, x = 1
        let w = built.problem.phi1().prox(&Vector::zeros(2), 1.0).unwrap();
        assert!((w - Vector::from_column_slice(&[-1.0, 1.0])).norm() < 1e-14);
    }

    #[test]
    fn feasible_stationary_point_is_fixed() {
        let spec = MpcSpec::double_integrator(4);
        let built = build_mpc(&spec).unwrap();
        let (e, rhs) = built.constraints();
        // unconstrained optimum of the cost on the subspace, via a big-γ prox
        let w = built.problem.phi1().prox(&Vector::zeros(built.layout.dim()), 1e12).unwrap();
        assert!((e * &w - rhs).amax() < 1e-9);
        let again = built.problem.phi1().prox(&w, 0.7).unwrap();
        assert!((again - &w).norm() < 1e-9);
    }

    #[test]
    fn feasible_point_satisfies_dynamics() {
        let spec = MpcSpec::double_integrator(6);
        let built = build_mpc(&spec).unwrap();
        let w = built.feasible_point(&spec, &[Vector::from_element(1, 0.3)]);
        assert!(built.problem.phi1().value(&w).is_finite());
        let (e, rhs) = built.constraints();
        assert!((e * &w - rhs).amax() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let mut spec = MpcSpec::double_integrator(3);
        spec.r = Matrix::from_element(1, 1, -1.0);
        assert!(build_mpc(&spec).is_err());
        let mut spec = MpcSpec::double_integrator(3);
        spec.horizon = 0;
        assert!(build_mpc(&spec).is_err());
    }
}
