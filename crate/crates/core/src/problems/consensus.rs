use std::sync::Arc;

use crate::admm::{AdmmProblem, AdmmRegime};
use crate::error::{Error, OracleError, Result};
use crate::problem::{ProxOracle, Regime, SplitProblem};
use crate::{Matrix, Vector};

use super::spca::{project_sparse_sphere, NegGramSolver, SparseSphere, SpcaSpec};

/// Sparse PCA with the data rows split over `N` agents:
/// `minimize Σᵢ −(1/2m)‖Wᵢxᵢ‖² + δ_𝒮(z)` subject to `xᵢ = z`.
///
/// As an ADMM problem `A = I`, `B = −[I; …; I]`, `b = 0` and `x` stacks the
/// local copies.
pub struct ConsensusSpca {
    blocks: Vec<NegGramSolver>,
    n: usize,
    k: usize,
    samples: usize,
    offset: Vector,
    lipschitz: f64,
}

impl ConsensusSpca {
    /// Splits the rows of `w` into `agents` contiguous groups of near-equal
    /// size.
    pub fn split(w: &Matrix, agents: usize, k: usize) -> Result<Self> {
        let (m, n) = w.shape();
        if agents == 0 || agents > m.max(1) {
            return Err(Error::InvalidProblem(format!("cannot split {m} rows over {agents} agents")));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidProblem(format!("sparsity k = {k} must be in 1..={n}")));
        }
        let mut blocks = Vec::with_capacity(agents);
        let mut start = 0;
        for i in 0..agents {
            let rows = m / agents + usize::from(i < m % agents);
            blocks.push(NegGramSolver::new(w.rows(start, rows).into_owned()));
            start += rows;
        }
        let lipschitz = blocks.iter().map(|b| b.norm_sq()).fold(0.0, f64::max) / m as f64;
        Ok(ConsensusSpca {
            blocks,
            n,
            k,
            samples: m,
            offset: Vector::zeros(agents * n),
            lipschitz,
        })
    }

    pub fn agents(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `maxᵢ ‖Wᵢ‖²/m`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn block_value(&self, x: &Vector) -> f64 {
        let n = self.n;
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (b.matrix() * x.rows(i * n, n)).norm_squared())
            .sum::<f64>()
            / (-2.0 * self.samples as f64)
    }

    fn block_solve(&self, x: &Vector, kappa: f64) -> std::result::Result<Vector, OracleError> {
        let n = self.n;
        let mut out = Vector::zeros(x.len());
        for (i, b) in self.blocks.iter().enumerate() {
            let xi = x.rows(i * n, n).into_owned();
            out.rows_mut(i * n, n).copy_from(&b.solve(&xi, kappa)?);
        }
        Ok(out)
    }

    fn block_mean(&self, x: &Vector) -> Vector {
        let n = self.n;
        let mut mean = Vector::zeros(n);
        for i in 0..self.agents() {
            mean += x.rows(i * n, n);
        }
        mean / self.agents() as f64
    }

    fn replicate(&self, z: &Vector) -> Vector {
        let n = self.n;
        let mut out = Vector::zeros(self.agents() * n);
        for i in 0..self.agents() {
            out.rows_mut(i * n, n).copy_from(z);
        }
        out
    }

    /// The same problem as a two-term split over the stacked copies:
    /// `φ₁` is the block objective and `φ₂` the indicator of
    /// `{x₁ = … = x_N ∈ 𝒮}`.
    pub fn as_split_problem(self: &Arc<Self>) -> Result<SplitProblem> {
        SplitProblem::new(
            Arc::new(ConsensusObjective(self.clone())),
            Arc::new(ConsensusSet(self.clone())),
            Regime::Smooth {
                lipschitz: self.lipschitz.max(f64::MIN_POSITIVE),
                phi1_convex: false,
            },
        )
    }
}

/// Splits `spec` over `agents` and checks that `beta` exceeds `L_{A▷f}`,
/// below which the x-step is not well defined.
pub fn build_consensus_spca(spec: &SpcaSpec, agents: usize, beta: f64) -> Result<ConsensusSpca> {
    let problem = ConsensusSpca::split(&spec.w, agents, spec.k)?;
    if !(beta > problem.lipschitz()) {
        return Err(Error::InvalidProblem(format!(
            "beta = {beta} must exceed L = {}",
            problem.lipschitz()
        )));
    }
    Ok(problem)
}

impl AdmmProblem for ConsensusSpca {
    fn dims(&self) -> (usize, usize, usize) {
        let nn = self.agents() * self.n;
        (nn, self.n, nn)
    }

    fn apply_a(&self, x: &Vector) -> Vector {
        x.clone()
    }

    fn apply_b(&self, z: &Vector) -> Vector {
        -self.replicate(z)
    }

    fn apply_at(&self, y: &Vector) -> Vector {
        y.clone()
    }

    fn apply_bt(&self, y: &Vector) -> Vector {
        -self.block_mean(y) * self.agents() as f64
    }

    fn offset(&self) -> &Vector {
        &self.offset
    }

    fn f_value(&self, x: &Vector) -> f64 {
        self.block_value(x)
    }

    fn g_value(&self, z: &Vector) -> f64 {
        SparseSphere::new(self.n, self.k).value(z)
    }

    fn f_gradient(&self, x: &Vector) -> Option<Vector> {
        let n = self.n;
        let mut g = Vector::zeros(x.len());
        for (i, b) in self.blocks.iter().enumerate() {
            let w = b.matrix();
            let gi = -w.tr_mul(&(w * x.rows(i * n, n))) / self.samples as f64;
            g.rows_mut(i * n, n).copy_from(&gi);
        }
        Some(g)
    }

    /// `xᵢ = (I − WᵢᵀWᵢ/(mβ))⁻¹(z − yᵢ/β)`.
    fn argmin_x(&self, y: &Vector, z: &Vector, beta: f64) -> std::result::Result<Vector, OracleError> {
        let rhs = self.replicate(z) - y / beta;
        self.block_solve(&rhs, self.samples as f64 * beta)
    }

    /// `z = Π_𝒮(mean(xᵢ + yᵢ/β))`.
    fn argmin_z(&self, x: &Vector, y: &Vector, beta: f64) -> std::result::Result<Vector, OracleError> {
        Ok(project_sparse_sphere(&self.block_mean(&(x + y / beta)), self.k))
    }

    fn x_step_is_affine(&self) -> bool {
        true
    }

    fn regime(&self) -> AdmmRegime {
        AdmmRegime::Smooth {
            lipschitz_af: self.lipschitz.max(f64::MIN_POSITIVE),
            f_convex: false,
        }
    }

    fn b_norm(&self) -> f64 {
        (self.agents() as f64).sqrt()
    }
}

struct ConsensusObjective(Arc<ConsensusSpca>);

impl ProxOracle for ConsensusObjective {
    fn dim(&self) -> usize {
        self.0.agents() * self.0.n
    }

    fn value(&self, x: &Vector) -> f64 {
        self.0.block_value(x)
    }

    fn prox(&self, x: &Vector, gamma: f64) -> std::result::Result<Vector, OracleError> {
        self.0.block_solve(x, self.0.samples as f64 / gamma)
    }

    fn is_generalized_quadratic(&self) -> bool {
        true
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        self.0.f_gradient(x)
    }
}

struct ConsensusSet(Arc<ConsensusSpca>);

impl ProxOracle for ConsensusSet {
    fn dim(&self) -> usize {
        self.0.agents() * self.0.n
    }

    fn value(&self, x: &Vector) -> f64 {
        let p = &self.0;
        let first = x.rows(0, p.n).into_owned();
        let equal = (1..p.agents()).all(|i| x.rows(i * p.n, p.n) == first);
        if equal {
            SparseSphere::new(p.n, p.k).value(&first)
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, x: &Vector, _gamma: f64) -> std::result::Result<Vector, OracleError> {
        let p = &self.0;
        Ok(p.replicate(&project_sparse_sphere(&p.block_mean(x), p.k)))
    }
}
