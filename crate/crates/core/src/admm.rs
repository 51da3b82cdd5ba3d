//! Linesearch ADMM for `minimize f(x) + g(z)` subject to `Ax + Bz = b`.
//!
//! The iteration mirrors [`crate::drs`]: the nominal half-update
//! `ȳ = y − β(1−λ)r` is blended with `y − β(r + d)` and the augmented
//! Lagrangian `L_β` plays the role of the envelope. Under the change of
//! variables of [`admm_to_drs_image`] the two drivers produce the same
//! residuals and stepsizes.

use std::time::Instant;

use crate::constants::{admm_decrease_constant, admm_dual_decrease_constant, decrease_constant, max_stepsize, min_penalty};
use crate::directions::{DirectionEngine, SecantPair, StepInfo};
use crate::envelope::auglag_from_residual;
use crate::error::{Error, OracleError, OracleSide, Result};
use crate::problem::AdmmTriple;
use crate::quadcache::LineModel;
use crate::trace::{Counters, IterationRecord, Status};
use crate::Vector;

pub const BETA_RANGE: (f64, f64) = (1e-12, 1e12);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdmmRegime {
    /// `A▷f` has `lipschitz_af`-Lipschitz gradient.
    Smooth { lipschitz_af: f64, f_convex: bool },
    /// `f` is `mu_f`-strongly convex; `a_norm = ‖A‖`.
    StronglyConvex { mu_f: f64, a_norm: f64 },
}

impl AdmmRegime {
    pub fn pi(&self) -> f64 {
        match self {
            AdmmRegime::Smooth { .. } => 1.0,
            AdmmRegime::StronglyConvex { .. } => -1.0,
        }
    }
}

/// Structured access to an ADMM problem. The argmin oracles are supplied by
/// the problem; the library never forms the subproblems itself.
pub trait AdmmProblem: Send + Sync {
    /// `(dim x, dim z, dim b)`.
    fn dims(&self) -> (usize, usize, usize);
    fn apply_a(&self, x: &Vector) -> Vector;
    fn apply_b(&self, z: &Vector) -> Vector;
    fn apply_at(&self, y: &Vector) -> Vector;
    fn apply_bt(&self, y: &Vector) -> Vector;
    fn offset(&self) -> &Vector;
    fn f_value(&self, x: &Vector) -> f64;
    fn g_value(&self, z: &Vector) -> f64;
    fn f_gradient(&self, _x: &Vector) -> Option<Vector> {
        None
    }
    /// `x ∈ argmin L_β(·, y, z)`.
    fn argmin_x(&self, y: &Vector, z: &Vector, beta: f64) -> std::result::Result<Vector, OracleError>;
    /// `z ∈ argmin L_β(x, y, ·)`.
    fn argmin_z(&self, x: &Vector, y: &Vector, beta: f64) -> std::result::Result<Vector, OracleError>;
    /// The x-step is affine in `y` (f is a generalized quadratic).
    fn x_step_is_affine(&self) -> bool {
        false
    }
    fn regime(&self) -> AdmmRegime;
    /// `‖B‖`, used by the certificate.
    fn b_norm(&self) -> f64;

    fn residual(&self, x: &Vector, z: &Vector) -> Vector {
        self.apply_a(x) + self.apply_b(z) - self.offset()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub lambda: f64,
    pub beta: f64,
    pub c: f64,
    /// Tolerance on `β‖r‖`.
    pub epsilon: f64,
    pub i_max: Option<usize>,
    pub max_iters: usize,
    pub adaptive: bool,
    pub phi_lb: Option<f64>,
    pub quadcache: bool,
    /// Keep the DRS image `Ax − y/β` of every iterate and the directions.
    pub record_iterates: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            lambda: 1.0,
            beta: 1.0,
            c: 0.25,
            epsilon: 1e-6,
            i_max: Some(10),
            max_iters: 10_000,
            adaptive: false,
            phi_lb: None,
            quadcache: true,
            record_iterates: false,
        }
    }
}

/// `D = C(L/β, λ)` (smooth) or `D* = C(β‖A‖²/μ_f, λ)` (strongly convex).
pub fn regime_constant(regime: AdmmRegime, beta: f64, lambda: f64) -> Result<f64> {
    match regime {
        AdmmRegime::Smooth { lipschitz_af, f_convex } => Ok(admm_decrease_constant(lipschitz_af, beta, lambda, f_convex)),
        AdmmRegime::StronglyConvex { mu_f, a_norm } => admm_dual_decrease_constant(beta, mu_f, a_norm, lambda),
    }
}

impl AdmmConfig {
    /// Smooth regime: `β = β_min/fraction`. Strongly convex regime:
    /// `β = fraction·μ_f/‖A‖²`. Then `c = c_fraction·D`.
    pub fn from_bounds(problem: &dyn AdmmProblem, lambda: f64, fraction: f64, c_fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("penalty fraction must be in (0,1), got {fraction}")));
        }
        let beta = match problem.regime() {
            AdmmRegime::Smooth { lipschitz_af, f_convex } => min_penalty(lipschitz_af, lambda, f_convex) / fraction,
            AdmmRegime::StronglyConvex { mu_f, a_norm } => fraction * mu_f / (a_norm * a_norm),
        };
        let big_d = regime_constant(problem.regime(), beta, lambda)?;
        let config = AdmmConfig {
            lambda,
            beta,
            c: c_fraction * big_d,
            ..AdmmConfig::default()
        };
        config.validate(problem)?;
        Ok(config)
    }

    /// Adaptive variant starting from `beta`, with `c` computed as if β were
    /// `β_min/fraction` (smooth) or `fraction·μ_f/‖A‖²` (strongly convex).
    pub fn adaptive(problem: &dyn AdmmProblem, lambda: f64, beta: f64, fraction: f64, c_fraction: f64) -> Result<Self> {
        let (alpha, convex) = match problem.regime() {
            AdmmRegime::Smooth { f_convex, .. } => {
                let scale = if f_convex { 1.0 } else { max_stepsize(1.0, lambda, false) };
                (fraction * scale, f_convex)
            }
            AdmmRegime::StronglyConvex { .. } => (fraction, true),
        };
        let config = AdmmConfig {
            lambda,
            beta,
            c: c_fraction * decrease_constant(alpha, lambda, convex),
            adaptive: true,
            ..AdmmConfig::default()
        };
        config.validate(problem)?;
        Ok(config)
    }

    pub fn validate(&self, problem: &dyn AdmmProblem) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda > 0.0 && self.lambda < 2.0) {
            return bad(format!("lambda must be in (0,2), got {}", self.lambda));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive and finite, got {}", self.beta));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if self.i_max == Some(0) {
            return bad("i_max must be at least 1".into());
        }
        if self.adaptive {
            if self.c >= 0.5 {
                return bad(format!("c must be below 1/2, got {}", self.c));
            }
            return Ok(());
        }
        match problem.regime() {
            AdmmRegime::Smooth { lipschitz_af, f_convex } => {
                let bmin = min_penalty(lipschitz_af, self.lambda, f_convex);
                if self.beta <= bmin {
                    return bad(format!("beta = {} violates beta > {bmin}", self.beta));
                }
            }
            AdmmRegime::StronglyConvex { mu_f, a_norm } => {
                let bmax = mu_f / (a_norm * a_norm);
                if self.beta >= bmax {
                    return bad(format!("beta = {} violates beta < mu_f/|A|^2 = {bmax}", self.beta));
                }
            }
        }
        let big_d = regime_constant(problem.regime(), self.beta, self.lambda)?;
        if self.c >= big_d {
            return bad(format!("c = {} violates c < D = {big_d}", self.c));
        }
        Ok(())
    }
}

/// `(s, u, v) = (Ax − y/β, Ax, b − Bz)`.
pub fn admm_to_drs_image(
    x: &Vector,
    y: &Vector,
    z: &Vector,
    beta: f64,
    a_apply: impl Fn(&Vector) -> Vector,
    b_apply: impl Fn(&Vector) -> Vector,
    b: &Vector,
) -> (Vector, Vector, Vector) {
    let u = a_apply(x);
    let s = &u - y / beta;
    let v = b - b_apply(z);
    (s, u, v)
}

/// One ADMM oracle call from `(ỹ, z̃)`: x-step, multiplier update, z-step.
pub fn admm_oracle(problem: &dyn AdmmProblem, y_tilde: &Vector, z_tilde: &Vector, beta: f64) -> Result<(Vector, Vector, Vector)> {
    let x = problem
        .argmin_x(y_tilde, z_tilde, beta)
        .map_err(|e| Error::oracle(OracleSide::XStep, e))?;
    let y = y_tilde + beta * problem.residual(&x, z_tilde);
    let z = problem
        .argmin_z(&x, &y, beta)
        .map_err(|e| Error::oracle(OracleSide::ZStep, e))?;
    Ok((x, y, z))
}

fn nominal_half(y: &Vector, r: &Vector, beta: f64, lambda: f64) -> Vector {
    // y − β(r + d) with d = −λr, written so that the nominal direction
    // reproduces it bitwise.
    y - beta * (r - lambda * r)
}

#[derive(Debug, Clone)]
pub struct AdmmSolveReport {
    pub status: Status,
    pub iterations: usize,
    pub state: AdmmTriple,
    /// Oracle input `(y^{k−½}, z^{k−1})` that produced the final state.
    pub last_input: (Vector, Vector),
    pub beta: f64,
    pub c: f64,
    pub lambda: f64,
    pub pi: f64,
    pub epsilon: f64,
    pub initial_merit: f64,
    pub trace: Vec<IterationRecord>,
    pub init_calls: Counters,
    pub counters: Counters,
    pub adjustments: Vec<usize>,
    pub algorithm: &'static str,
    pub engine: &'static str,
}

struct Calls<'a> {
    problem: &'a dyn AdmmProblem,
    counters: Counters,
}

impl<'a> Calls<'a> {
    fn x_step(&mut self, y: &Vector, z: &Vector, beta: f64) -> Result<Vector> {
        self.counters.prox1 += 1;
        self.problem
            .argmin_x(y, z, beta)
            .map_err(|e| Error::oracle(OracleSide::XStep, e))
    }

    fn z_step(&mut self, x: &Vector, y: &Vector, beta: f64) -> Result<Vector> {
        self.counters.prox2 += 1;
        self.problem
            .argmin_z(x, y, beta)
            .map_err(|e| Error::oracle(OracleSide::ZStep, e))
    }

    fn f(&mut self, x: &Vector) -> f64 {
        self.counters.value1 += 1;
        self.problem.f_value(x)
    }

    fn g(&mut self, z: &Vector) -> f64 {
        self.counters.value2 += 1;
        self.problem.g_value(z)
    }

    /// Finish an oracle call given the x-step output and `f(x)`.
    fn finish(&mut self, y_tilde: &Vector, z_tilde: &Vector, x: Vector, f_x: f64, beta: f64) -> Result<AdmmTriple> {
        let y = y_tilde + beta * self.problem.residual(&x, z_tilde);
        let z = self.z_step(&x, &y, beta)?;
        let g_z = self.g(&z);
        let r = self.problem.residual(&x, &z);
        let auglag = auglag_from_residual(f_x, g_z, &r, &y, beta)?;
        Ok(AdmmTriple { x, y, z, r, auglag })
    }

    fn full_with_value(&mut self, y_tilde: &Vector, z_tilde: &Vector, beta: f64) -> Result<(AdmmTriple, f64)> {
        let x = self.x_step(y_tilde, z_tilde, beta)?;
        let f_x = self.f(&x);
        Ok((self.finish(y_tilde, z_tilde, x, f_x, beta)?, f_x))
    }

    fn full(&mut self, y_tilde: &Vector, z_tilde: &Vector, beta: f64) -> Result<AdmmTriple> {
        Ok(self.full_with_value(y_tilde, z_tilde, beta)?.0)
    }
}

fn check_init(problem: &dyn AdmmProblem, x: &Vector, y: &Vector, z: &Vector) -> Result<()> {
    let (m, n, p) = problem.dims();
    for (expected, found) in [(m, x.len()), (p, y.len()), (n, z.len())] {
        if expected != found {
            return Err(Error::DimensionMismatch { expected, found });
        }
    }
    Ok(())
}

fn drs_image(problem: &dyn AdmmProblem, t: &AdmmTriple, beta: f64) -> Vector {
    problem.apply_a(&t.x) - &t.y / beta
}

struct Solver<'a> {
    problem: &'a dyn AdmmProblem,
    config: &'a AdmmConfig,
    calls: Calls<'a>,
    beta: f64,
    pi: f64,
    use_cache: bool,
}

enum Guard {
    Keep((AdmmTriple, f64)),
    Adjusted,
}

type Trial = (AdmmTriple, Vector, f64, usize, bool, Vector);

impl<'a> Solver<'a> {
    fn guard(
        &mut self,
        state: &mut AdmmTriple,
        input: &(Vector, Vector),
        y_bar: &Vector,
        restart: &mut Counters,
    ) -> Result<Guard> {
        let before = self.calls.counters;
        let (nominal, f_x) = self.calls.full_with_value(y_bar, &state.z, self.beta)?;
        let res_sq = state.r.norm_squared();
        let no_decrease = !(self.pi * nominal.auglag < self.pi * state.auglag - self.beta * self.config.c * res_sq);
        let below_lb = match self.config.phi_lb {
            Some(lb) => self.pi * nominal.auglag < self.pi * lb,
            None => false,
        };
        if !(no_decrease || below_lb) {
            return Ok(Guard::Keep((nominal, f_x)));
        }
        let beta = self.beta * 2f64.powf(self.pi);
        if !(beta >= BETA_RANGE.0 && beta <= BETA_RANGE.1) {
            return Err(Error::BetaOutOfRange { beta });
        }
        self.beta = beta;
        *state = self.calls.full(&input.0, &input.1, beta)?;
        *restart = *restart + (self.calls.counters - before);
        Ok(Guard::Adjusted)
    }

    /// Returns the accepted triple, the oracle input `y^{k+½}` that produced
    /// it, τ, rejected trials, fallback flag and first-trial residual.
    fn linesearch(
        &mut self,
        k: usize,
        state: &AdmmTriple,
        y_bar: &Vector,
        mut nominal: Option<(AdmmTriple, f64)>,
        d: &Vector,
    ) -> Result<Trial> {
        let beta = self.beta;
        let res_sq = state.r.norm_squared();
        let threshold = self.pi * state.auglag - beta * self.config.c * res_sq;
        let y_d = &state.y - beta * (&state.r + d);
        let z = &state.z;
        let mut tau = 1.0;
        let mut rejected = 0usize;
        let mut first_residual: Option<Vector> = None;
        let mut x0: Option<(Vector, f64)> = None;
        let mut line: Option<(Vector, Vector, LineModel)> = None;
        loop {
            let y_tilde = if tau == 1.0 {
                y_d.clone()
            } else {
                (1.0 - tau) * y_bar + tau * &y_d
            };
            let at_nominal = y_tilde == *y_bar;
            let trial = if tau == 1.0 {
                let x = self.calls.x_step(&y_tilde, z, beta)?;
                let f_x = self.calls.f(&x);
                if self.use_cache {
                    x0 = Some((x.clone(), f_x));
                }
                self.calls.finish(&y_tilde, z, x, f_x, beta)?
            } else if self.use_cache {
                if line.is_none() {
                    let (x_bar, f_bar, y_plus) = match &nominal {
                        Some((t, f_x)) => (t.x.clone(), *f_x, t.y.clone()),
                        None => {
                            let xb = self.calls.x_step(y_bar, z, beta)?;
                            let fb = self.calls.f(&xb);
                            let yp = y_bar + beta * self.problem.residual(&xb, z);
                            (xb, fb, yp)
                        }
                    };
                    let (x0v, f0) = x0.clone().expect("first trial evaluated");
                    let slope = -y_plus.dot(&self.problem.apply_a(&(&x0v - &x_bar)));
                    line = Some((x_bar, x0v, LineModel::from_endpoints(f_bar, f0, slope)));
                }
                let (x_bar, x0v, model) = line.as_ref().expect("line model built");
                let x = (1.0 - tau) * x_bar + tau * x0v;
                let f_x = model.value(tau);
                self.calls.finish(&y_tilde, z, x, f_x, beta)?
            } else {
                self.calls.full(&y_tilde, z, beta)?
            };
            if first_residual.is_none() {
                first_residual = Some(trial.r.clone());
            }
            if self.pi * trial.auglag <= threshold {
                return Ok((trial, y_tilde, tau, rejected, false, first_residual.unwrap()));
            }
            rejected += 1;
            if let Some(i_max) = self.config.i_max {
                if rejected >= i_max {
                    let fallback = match nominal.take() {
                        Some((t, _)) => t,
                        None => match &line {
                            Some((x_bar, _, model)) => self.calls.finish(y_bar, z, x_bar.clone(), model.a, beta)?,
                            None => self.calls.full(y_bar, z, beta)?,
                        },
                    };
                    return Ok((fallback, y_bar.clone(), 0.0, rejected, true, first_residual.unwrap()));
                }
            }
            // with a finite i_max the fallback above always ends the loop
            if self.config.i_max.is_none() && (at_nominal || tau == 0.0) {
                return Err(Error::BacktrackOverflow { iteration: k });
            }
            tau *= 0.5;
        }
    }
}

/// Runs linesearch ADMM from `(x⁻¹, y⁻¹, z⁻¹)`.
pub fn admm_ls_solve(
    problem: &dyn AdmmProblem,
    init: (&Vector, &Vector, &Vector),
    config: &AdmmConfig,
    engine: &mut dyn DirectionEngine,
) -> Result<AdmmSolveReport> {
    config.validate(problem)?;
    let (x_init, y_init, z_init) = init;
    check_init(problem, x_init, y_init, z_init)?;
    let start = Instant::now();
    let mut solver = Solver {
        problem,
        config,
        calls: Calls {
            problem,
            counters: Counters::default(),
        },
        beta: config.beta,
        pi: problem.regime().pi(),
        use_cache: config.quadcache && problem.x_step_is_affine(),
    };
    let r_init = problem.residual(x_init, z_init);
    let y_half = y_init - config.beta * (1.0 - config.lambda) * &r_init;
    let mut input = (y_half, z_init.clone());
    let mut state = solver.calls.full(&input.0, &input.1, config.beta)?;
    let init_calls = solver.calls.counters;
    let initial_merit = state.auglag;
    let b = problem.offset().clone();
    let mut trace = Vec::new();
    let mut adjustments = Vec::new();
    let mut restart = Counters::default();
    let mut k = 0usize;
    let status = loop {
        if solver.beta * state.r.norm() <= config.epsilon {
            break Status::Converged;
        }
        if k >= config.max_iters {
            break Status::MaxIters;
        }
        let iter_start = solver.calls.counters;
        let y_bar = nominal_half(&state.y, &state.r, solver.beta, config.lambda);
        let nominal = if config.adaptive {
            match solver.guard(&mut state, &input, &y_bar, &mut restart)? {
                Guard::Keep(t) => Some(t),
                Guard::Adjusted => {
                    adjustments.push(k);
                    engine.reset();
                    continue;
                }
            }
        } else {
            None
        };
        let beta = solver.beta;
        let nominal_point = &b - problem.apply_b(&state.z) - &y_bar / beta;
        let d = engine.direction(&StepInfo {
            k,
            residual: &state.r,
            nominal_point: &nominal_point,
            lambda: config.lambda,
        });
        if d.len() != state.r.len() || d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteDirection { iteration: k });
        }
        let (next, y_tilde, tau, backtracks, fallback, r_first) = solver.linesearch(k, &state, &y_bar, nominal, &d)?;
        engine.feed(&SecantPair {
            p: d.clone(),
            q: &r_first - &state.r,
        });
        trace.push(IterationRecord {
            k,
            res_norm: state.r.norm(),
            merit: state.auglag,
            merit_next: next.auglag,
            step: beta,
            c: config.c,
            tau,
            backtracks,
            fallback,
            calls: solver.calls.counters - iter_start,
            restart_calls: restart,
            cumulative: solver.calls.counters,
            elapsed_s: start.elapsed().as_secs_f64(),
            iterate: config.record_iterates.then(|| drs_image(problem, &state, beta)),
            direction: config.record_iterates.then_some(d),
        });
        restart = Counters::default();
        input = (y_tilde, state.z.clone());
        state = next;
        k += 1;
    };
    Ok(AdmmSolveReport {
        status,
        iterations: k,
        state,
        last_input: input,
        beta: solver.beta,
        c: config.c,
        lambda: config.lambda,
        pi: solver.pi,
        epsilon: config.epsilon,
        initial_merit,
        trace,
        init_calls,
        counters: solver.calls.counters,
        adjustments,
        algorithm: "admm_ls",
        engine: engine.name(),
    })
}

/// Plain relaxed ADMM with the same bookkeeping as [`admm_ls_solve`].
pub fn admm_solve(problem: &dyn AdmmProblem, init: (&Vector, &Vector, &Vector), config: &AdmmConfig) -> Result<AdmmSolveReport> {
    if !(config.lambda > 0.0 && config.lambda < 2.0) {
        return Err(Error::InvalidConfig(format!("lambda must be in (0,2), got {}", config.lambda)));
    }
    if !(config.beta > 0.0 && config.beta.is_finite()) {
        return Err(Error::InvalidConfig(format!("beta must be positive and finite, got {}", config.beta)));
    }
    let (x_init, y_init, z_init) = init;
    check_init(problem, x_init, y_init, z_init)?;
    let start = Instant::now();
    let beta = config.beta;
    let mut calls = Calls {
        problem,
        counters: Counters::default(),
    };
    let r_init = problem.residual(x_init, z_init);
    let y_half = y_init - beta * (1.0 - config.lambda) * &r_init;
    let mut input = (y_half, z_init.clone());
    let mut state = calls.full(&input.0, &input.1, beta)?;
    let init_calls = calls.counters;
    let initial_merit = state.auglag;
    let mut trace = Vec::new();
    let mut k = 0usize;
    let status = loop {
        if beta * state.r.norm() <= config.epsilon {
            break Status::Converged;
        }
        if k >= config.max_iters {
            break Status::MaxIters;
        }
        let before = calls.counters;
        let y_bar = nominal_half(&state.y, &state.r, beta, config.lambda);
        let next = calls.full(&y_bar, &state.z, beta)?;
        trace.push(IterationRecord {
            k,
            res_norm: state.r.norm(),
            merit: state.auglag,
            merit_next: next.auglag,
            step: beta,
            c: 0.0,
            tau: 1.0,
            backtracks: 0,
            fallback: false,
            calls: calls.counters - before,
            restart_calls: Counters::default(),
            cumulative: calls.counters,
            elapsed_s: start.elapsed().as_secs_f64(),
            iterate: config.record_iterates.then(|| drs_image(problem, &state, beta)),
            direction: config.record_iterates.then(|| -config.lambda * &state.r),
        });
        input = (y_bar, state.z.clone());
        state = next;
        k += 1;
    };
    Ok(AdmmSolveReport {
        status,
        iterations: k,
        state,
        last_input: input,
        beta,
        c: 0.0,
        lambda: config.lambda,
        pi: problem.regime().pi(),
        epsilon: config.epsilon,
        initial_merit,
        trace,
        init_calls,
        counters: calls.counters,
        adjustments: Vec::new(),
        algorithm: "admm",
        engine: "nominal",
    })
}
