//! Independent oracles and cross-checks used by the test suites.
//!
//! Nothing here is used by the solvers themselves. The brute-force routines
//! are deliberately naive so that they share no code path with the closed
//! forms they adjudicate.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::admm::{admm_ls_solve, AdmmConfig, AdmmProblem};
use crate::directions::EngineKind;
use crate::drs::{drs_ls_solve, DrsConfig};
use crate::duality::{Conjugate, DualSide};
use crate::error::{Error, Result};
use crate::oracles::{BoxIndicator, Quadratic};
use crate::problem::{DrsTriple, ProxOracle, Regime, SplitProblem};
use crate::{Matrix, Vector};

const GRID: usize = 10_000;
const GOLDEN_TOL: f64 = 1e-10;

/// Minimizer of `h(w) + (w − x)²/(2γ)` by a 10⁴-point grid over
/// `[x − 10γ(1+|x|), x + 10γ(1+|x|)]`, golden-section refinement to `1e−10`
/// around each of the (up to five) lowest local grid minima, then a guarded
/// Newton step on finite differences.
///
/// Refining several basins matters for nonconvex `h`: near a branch switch
/// the two candidate minima can differ by less than the grid's
/// discretization error. The golden-section stage alone cannot resolve a
/// smooth minimizer much below `√ε_mach·|w|` because the objective is flat
/// there; the final step fixes that and is discarded whenever the finite
/// differences look unreliable (kinks, disagreeing step sizes, or an
/// increase in value).
///
/// The bracket `x ± 10γ(1+|x|)` is widened while the grid minimum sits on
/// its boundary; panics if that never stops.
pub fn bruteforce_scalar_prox(h: impl Fn(f64) -> f64, x: f64, gamma: f64) -> f64 {
    let f = |w: f64| h(w) + (w - x) * (w - x) / (2.0 * gamma);
    let mut half = 10.0 * gamma * (1.0 + x.abs());
    // widen until the grid minimum is interior (a constraint set may sit far
    // from x when γ is small)
    let (grid_lo, step, values, best) = loop {
        let lo = x - half;
        let step = 2.0 * half / (GRID - 1) as f64;
        let values: Vec<f64> = (0..GRID).map(|i| f(lo + step * i as f64)).collect();
        let best = (0..GRID).fold(0, |b, i| if values[i] < values[b] { i } else { b });
        if best > 0 && best < GRID - 1 {
            break (lo, step, values, best);
        }
        half *= 4.0;
        assert!(half < 1e12, "minimizer not interior to the bracket");
    };
    let grid = |i: usize| grid_lo + step * i as f64;

    let mut basins: Vec<usize> = (1..GRID - 1)
        .filter(|&i| values[i].is_finite() && values[i] <= values[i - 1] && values[i] <= values[i + 1])
        .collect();
    basins.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    basins.truncate(5);
    if !basins.contains(&best) {
        basins.push(best);
    }
    let mut w_best = grid(best);
    for i in basins {
        let w = golden_cell(&f, grid(i - 1), grid(i + 1), grid(i));
        if f(w) < f(w_best) {
            w_best = w;
        }
    }
    newton_polish(&f, w_best)
}

fn golden_cell(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, centre: f64) -> f64 {
    let (a0, b0) = (a, b);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mut w = 0.5 * (a + b);
    // the cell endpoints matter when the minimizer sits on a kink
    for cand in [centre, a0, b0, a, b] {
        if f(cand) < f(w) {
            w = cand;
        }
    }
    w
}

fn newton_polish(f: &impl Fn(f64) -> f64, w: f64) -> f64 {
    let newton = |delta: f64| {
        let (fm, f0, fp) = (f(w - delta), f(w), f(w + delta));
        let curvature = (fp - 2.0 * f0 + fm) / (delta * delta);
        let slope = (fp - fm) / (2.0 * delta);
        if [fm, f0, fp].iter().all(|v| v.is_finite()) && curvature > 0.0 {
            Some(w - slope / curvature)
        } else {
            None
        }
    };
    let delta = 1e-5 * (1.0 + w.abs());
    let (Some(w1), Some(w2)) = (newton(delta), newton(2.0 * delta)) else {
        return w;
    };
    let f0 = f(w);
    if (w1 - w2).abs() <= 5e-9 * (1.0 + w.abs()) && (w1 - w).abs() <= delta && f(w1) <= f0 + 4.0 * f64::EPSILON * f0.abs() {
        w1
    } else {
        w
    }
}

/// Projection onto the `k`-sparse unit sphere by enumerating all `k`-subsets
/// in lexicographic order. Each subset is scored by the sum of its squared
/// entries taken in decreasing order of magnitude, so subsets with equal
/// magnitudes score identically and the first one wins. Returns `e₁` if
/// every subset has zero norm. Exponential in `n`; meant for `n ≤ 10`.
pub fn exhaustive_sparse_projection(x: &Vector, k: usize) -> Vector {
    let n = x.len();
    let k = k.min(n);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let mut squares: Vec<f64> = subset.iter().map(|&i| x[i] * x[i]).collect();
        squares.sort_by(|p, q| q.total_cmp(p));
        let score: f64 = squares.iter().sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, subset.clone()));
        }
        // next subset in lexicographic order
        let Some(pos) = (0..k).rev().find(|&j| subset[j] < n - k + j) else {
            break;
        };
        subset[pos] += 1;
        for j in pos + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    let mut out = Vector::zeros(n);
    if let Some((score, support)) = best {
        if score > 0.0 {
            for i in support {
                out[i] = x[i];
            }
            let norm = out.norm();
            return out / norm;
        }
    }
    if n > 0 {
        out[0] = 1.0;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// `maxₖ |‖r^k‖_DRS − ‖r^k‖_ADMM|`.
    pub residual_deviation: f64,
    /// `maxₖ |τ_k^DRS − τ_k^ADMM|`.
    pub tau_deviation: f64,
    /// First iteration whose `τ` differs by more than `1e-8`, with the DRS
    /// residual norm there.
    pub first_tau_mismatch: Option<(usize, f64)>,
    pub drs_iterations: usize,
    pub admm_iterations: usize,
}

impl EquivalenceReport {
    pub fn max_deviation(&self) -> f64 {
        self.residual_deviation.max(self.tau_deviation)
    }
}

/// Runs linesearch ADMM on `admm` and linesearch DRS on its image `drs`
/// (which must be `A▷f` and `B▷g` shifted by `b`) with `γ = 1/β` and
/// `s⁰ = b − Bz⁻¹ − y^{−½}/β`, using fresh engines of the same kind on both
/// sides.
pub fn run_equivalence_check(
    admm: &dyn AdmmProblem,
    drs: &SplitProblem,
    init: (&Vector, &Vector, &Vector),
    config: &AdmmConfig,
    engine: EngineKind,
    h0_scale: f64,
) -> Result<EquivalenceReport> {
    let (x, y, z) = init;
    let beta = config.beta;
    let r = admm.residual(x, z);
    let y_half = y - beta * (1.0 - config.lambda) * &r;
    let s0 = admm.offset() - admm.apply_b(z) - &y_half / beta;

    let drs_config = DrsConfig {
        lambda: config.lambda,
        gamma: 1.0 / beta,
        c: config.c,
        epsilon: config.epsilon,
        i_max: config.i_max,
        max_iters: config.max_iters,
        adaptive: false,
        phi_lb: None,
        quadcache: config.quadcache,
        record_iterates: false,
    };
    let admm_config = AdmmConfig {
        adaptive: false,
        phi_lb: None,
        ..config.clone()
    };
    let mut e1 = engine.build(drs.dim(), h0_scale);
    let mut e2 = engine.build(drs.dim(), h0_scale);
    let a = drs_ls_solve(drs, &s0, &drs_config, e1.as_mut())?;
    let b = admm_ls_solve(admm, init, &admm_config, e2.as_mut())?;
    let mut report = EquivalenceReport {
        residual_deviation: 0.0,
        tau_deviation: 0.0,
        first_tau_mismatch: None,
        drs_iterations: a.iterations,
        admm_iterations: b.iterations,
    };
    for (p, q) in a.trace.iter().zip(b.trace.iter()) {
        report.residual_deviation = report.residual_deviation.max((p.res_norm - q.res_norm).abs());
        report.tau_deviation = report.tau_deviation.max((p.tau - q.tau).abs());
        if (p.tau - q.tau).abs() > 1e-8 && report.first_tau_mismatch.is_none() {
            report.first_tau_mismatch = Some((p.k, p.res_norm));
        }
    }
    if a.trace.len() != b.trace.len() {
        report.tau_deviation = f64::INFINITY;
    }
    Ok(report)
}

/// A strongly convex primal pair with its conjugate dual pair.
pub struct SelfDualPair {
    pub primal: SplitProblem,
    pub dual: SplitProblem,
    pub mu: f64,
}

/// `φ₁ = ½(x − a)ᵀQ(x − a)`, `φ₂ = δ_[lo,hi]`, and
/// `ψ₁ = φ₁*(−·)`, `ψ₂ = φ₂*` with closed-form conjugate values
/// `φ₁*(y) = ½yᵀQ⁻¹y + ⟨a, y⟩` and `φ₂*(y) = Σ max(loᵢyᵢ, hiᵢyᵢ)`.
pub fn selfdual_pair(q: Matrix, a: Vector, lo: Vector, hi: Vector) -> Result<SelfDualPair> {
    let quad = Quadratic::new(q.clone(), a.clone(), 0.0).map_err(|e| Error::InvalidProblem(e.0))?;
    let mu = quad.min_eigenvalue();
    if !(mu > 0.0) {
        return Err(Error::InvalidProblem("Q must be positive definite".into()));
    }
    let q_inv = q
        .cholesky()
        .ok_or_else(|| Error::InvalidProblem("Q must be positive definite".into()))?
        .inverse();
    let boxed = BoxIndicator::new(lo.clone(), hi.clone()).map_err(|e| Error::InvalidProblem(e.0))?;
    let quad: Arc<dyn ProxOracle> = Arc::new(quad);
    let boxed: Arc<dyn ProxOracle> = Arc::new(boxed);
    let primal = SplitProblem::new(quad.clone(), boxed.clone(), Regime::StronglyConvex { mu })?;
    let psi1 = Conjugate::new(quad, DualSide::Mirrored, move |y| 0.5 * y.dot(&(&q_inv * y)) + a.dot(y));
    let psi2 = Conjugate::new(boxed, DualSide::Plain, move |y| {
        y.iter()
            .zip(lo.iter().zip(hi.iter()))
            .map(|(yi, (l, h))| (l * yi).max(h * yi))
            .sum()
    });
    let dual = SplitProblem::new(
        Arc::new(psi1),
        Arc::new(psi2),
        Regime::Smooth {
            lipschitz: 1.0 / mu,
            phi1_convex: true,
        },
    )?;
    Ok(SelfDualPair { primal, dual, mu })
}

/// `max |DRE*_{1/γ}(−s/γ) + DRE_γ(s)|` over `samples` points `s` drawn
/// uniformly from `[−scale, scale]^p`. Requires `γμ > 1`.
pub fn run_selfdual_check(pair: &SelfDualPair, gamma: f64, samples: usize, scale: f64, seed: u64) -> Result<f64> {
    if !(gamma * pair.mu > 1.0) {
        return Err(Error::InvalidConfig(format!("need gamma*mu > 1, got {}", gamma * pair.mu)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = pair.primal.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let s = Vector::from_fn(p, |_, _| rng.random_range(-scale..=scale));
        let primal = DrsTriple::evaluate(&pair.primal, s.clone(), gamma)?;
        let dual = DrsTriple::evaluate(&pair.dual, -&s / gamma, 1.0 / gamma)?;
        worst = worst.max((primal.dre + dual.dre).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    pub samples: usize,
    /// Worst scaled violation of `φ(v) + (1−γL)/(2γ)‖v−u‖² ≤ DRE(s) ≤ φ(u)`.
    pub sandwich: f64,
    /// Worst scaled violation of `DRE(s) − φ(ū) ≤ (1+γL)/(2γ)‖u − ū‖²`.
    pub quadratic_growth: f64,
    /// Worst scaled violation of
    /// `‖x⋆−v‖²/(2γ) + (γμ−1)/(2γ)‖x⋆−u‖² ≤ inf φ − DRE(s)`.
    pub lower_bound: f64,
}

impl InvariantReport {
    pub fn worst(&self) -> f64 {
        self.sandwich.max(self.quadratic_growth).max(self.lower_bound)
    }
}

fn violation(lhs: f64, rhs: f64) -> f64 {
    if !lhs.is_finite() || !rhs.is_finite() {
        // an infinite right-hand side (or −∞ left) cannot be violated
        return if lhs == f64::INFINITY && rhs.is_finite() { f64::INFINITY } else { 0.0 };
    }
    ((lhs - rhs) / (1.0 + lhs.abs().max(rhs.abs()))).max(0.0)
}

/// Samples `s` (and `ū`) uniformly from `[−scale, scale]^p` and reports the
/// worst relative violation of the envelope inequalities that apply to the
/// problem's regime. The smooth regime needs `γL < 1` and checks the
/// sandwich and quadratic-growth bounds; the strongly convex regime needs
/// `known = Some((x⋆, inf φ))` and checks the lower bound.
pub fn sweep_invariants(
    problem: &SplitProblem,
    gamma: f64,
    samples: usize,
    scale: f64,
    seed: u64,
    known: Option<(&Vector, f64)>,
) -> Result<InvariantReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = problem.dim();
    let mut report = InvariantReport {
        samples,
        ..Default::default()
    };
    let phi = |x: &Vector| problem.phi1().value(x) + problem.phi2().value(x);
    let draw = |rng: &mut ChaCha8Rng| Vector::from_fn(p, |_, _| rng.random_range(-scale..=scale));
    match problem.regime() {
        Regime::Smooth { lipschitz, .. } => {
            if !(gamma * lipschitz < 1.0) {
                return Err(Error::InvalidConfig(format!("need gamma*L < 1, got {}", gamma * lipschitz)));
            }
            for _ in 0..samples {
                let s = draw(&mut rng);
                let u_bar = draw(&mut rng);
                let t = DrsTriple::evaluate(problem, s, gamma)?;
                let gap = (&t.v - &t.u).norm_squared();
                let lower = phi(&t.v) + (1.0 - gamma * lipschitz) / (2.0 * gamma) * gap;
                report.sandwich = report.sandwich.max(violation(lower, t.dre)).max(violation(t.dre, phi(&t.u)));
                let growth = (1.0 + gamma * lipschitz) / (2.0 * gamma) * (&t.u - &u_bar).norm_squared();
                report.quadratic_growth = report.quadratic_growth.max(violation(t.dre - phi(&u_bar), growth));
            }
        }
        Regime::StronglyConvex { mu } => {
            let Some((x_star, inf_phi)) = known else {
                return Err(Error::InvalidConfig("lower-bound sweep needs the minimizer and optimal value".into()));
            };
            if !(gamma * mu > 1.0) {
                return Err(Error::InvalidConfig(format!("need gamma*mu > 1, got {}", gamma * mu)));
            }
            for _ in 0..samples {
                let s = draw(&mut rng);
                let t = DrsTriple::evaluate(problem, s, gamma)?;
                let lhs = (x_star - &t.v).norm_squared() / (2.0 * gamma)
                    + (gamma * mu - 1.0) / (2.0 * gamma) * (x_star - &t.u).norm_squared();
                report.lower_bound = report.lower_bound.max(violation(lhs, inf_phi - t.dre));
            }
        }
    }
    Ok(report)
}
