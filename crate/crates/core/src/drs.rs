//! Linesearch Douglas-Rachford splitting.
//!
//! Every iteration computes the nominal DRS point `s̄ = s − λr`, asks the
//! direction engine for `d`, and tries the candidates
//! `(1−τ)s̄ + τ(s+d)` for `τ = 1, ½, ¼, …` until the envelope passes the
//! sufficient-decrease test
//!
//! ```text
//! π·DRE(s⁺) ≤ π·DRE(s) − (c/γ)‖r‖²
//! ```
//!
//! falling back to `s̄` after `i_max` rejections. `π = +1` in the smooth
//! regime and `−1` in the strongly convex one.

use std::time::Instant;

use crate::constants::{decrease_constant, dual_decrease_constant, max_stepsize};
use crate::directions::{DirectionEngine, SecantPair, StepInfo};
use crate::envelope::dre_from_values;
use crate::error::{Error, OracleSide, Result};
use crate::problem::{DrsTriple, Regime, SplitProblem};
use crate::quadcache::LinesearchCache;
use crate::trace::{Counters, IterationRecord, Status};
use crate::Vector;

pub const GAMMA_RANGE: (f64, f64) = (1e-12, 1e12);

#[derive(Debug, Clone, PartialEq)]
pub struct DrsConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub c: f64,
    /// Tolerance on `‖r‖/γ`.
    pub epsilon: f64,
    /// `None` backtracks without limit.
    pub i_max: Option<usize>,
    pub max_iters: usize,
    /// Tune γ online instead of trusting the declared regime constants.
    pub adaptive: bool,
    /// Lower bound on `inf φ` for the adaptive escape test.
    pub phi_lb: Option<f64>,
    /// Reuse prox evaluations along the segment when `φ₁` is a generalized
    /// quadratic.
    pub quadcache: bool,
    /// Keep `s^k` and `d^k` in the trace.
    pub record_iterates: bool,
}

impl Default for DrsConfig {
    fn default() -> Self {
        DrsConfig {
            lambda: 1.0,
            gamma: 1.0,
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

impl DrsConfig {
    /// Stepsize and decrease constant from the regime constants: in the smooth
    /// regime `γ = fraction·γ_max`, in the strongly convex one
    /// `γ = 1/(fraction·μ)`; then `c = c_fraction·C`.
    pub fn from_bounds(problem: &SplitProblem, lambda: f64, gamma_fraction: f64, c_fraction: f64) -> Result<Self> {
        if !(gamma_fraction > 0.0 && gamma_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("gamma fraction must be in (0,1), got {gamma_fraction}")));
        }
        let gamma = match problem.regime() {
            Regime::Smooth { lipschitz, phi1_convex } => gamma_fraction * max_stepsize(lipschitz, lambda, phi1_convex),
            Regime::StronglyConvex { mu } => 1.0 / (gamma_fraction * mu),
        };
        let big_c = regime_constant(problem.regime(), gamma, lambda)?;
        let config = DrsConfig {
            lambda,
            gamma,
            c: c_fraction * big_c,
            ..DrsConfig::default()
        };
        config.validate(problem)?;
        Ok(config)
    }

    /// Configuration for the adaptive variant starting from `gamma`. The
    /// decrease constant is `c_fraction·C` evaluated as if the stepsize were
    /// `fraction·γ_max` (smooth) or `1/(fraction·μ)` (strongly convex); the
    /// guard then moves γ until the decrease test holds with that `c`.
    pub fn adaptive(problem: &SplitProblem, lambda: f64, gamma: f64, fraction: f64, c_fraction: f64) -> Result<Self> {
        let convex = match problem.regime() {
            Regime::Smooth { phi1_convex, .. } => phi1_convex,
            Regime::StronglyConvex { .. } => true,
        };
        let alpha = match problem.regime() {
            Regime::Smooth { phi1_convex: false, .. } => fraction * max_stepsize(1.0, lambda, false),
            _ => fraction,
        };
        let config = DrsConfig {
            lambda,
            gamma,
            c: c_fraction * decrease_constant(alpha, lambda, convex),
            adaptive: true,
            ..DrsConfig::default()
        };
        config.validate(problem)?;
        Ok(config)
    }

    pub fn validate(&self, problem: &SplitProblem) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda > 0.0 && self.lambda < 2.0) {
            return bad(format!("lambda must be in (0,2), got {}", self.lambda));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive and finite, got {}", self.gamma));
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
            Regime::Smooth { lipschitz, phi1_convex } => {
                let gmax = max_stepsize(lipschitz, self.lambda, phi1_convex);
                if self.gamma >= gmax {
                    return bad(format!("gamma = {} violates gamma < {gmax}", self.gamma));
                }
            }
            Regime::StronglyConvex { mu } => {
                if self.gamma * mu <= 1.0 {
                    return bad(format!("gamma = {} violates gamma > 1/mu = {}", self.gamma, 1.0 / mu));
                }
            }
        }
        let big_c = regime_constant(problem.regime(), self.gamma, self.lambda)?;
        if self.c >= big_c {
            return bad(format!("c = {} violates c < C = {big_c}", self.c));
        }
        Ok(())
    }
}

/// `C(γL, λ)` in the smooth regime, `C*(1/(γμ), λ)` in the strongly convex one.
pub fn regime_constant(regime: Regime, gamma: f64, lambda: f64) -> Result<f64> {
    match regime {
        Regime::Smooth { lipschitz, phi1_convex } => Ok(decrease_constant(gamma * lipschitz, lambda, phi1_convex)),
        Regime::StronglyConvex { mu } => dual_decrease_constant(gamma, mu, lambda),
    }
}

#[derive(Debug, Clone)]
pub struct DrsSolveReport {
    pub status: Status,
    pub iterations: usize,
    pub state: DrsTriple,
    /// γ in force at termination.
    pub gamma: f64,
    pub c: f64,
    pub lambda: f64,
    pub pi: f64,
    pub epsilon: f64,
    pub initial_merit: f64,
    pub trace: Vec<IterationRecord>,
    /// Calls made while evaluating the starting point.
    pub init_calls: Counters,
    /// All calls, `init + Σ per-iteration + Σ restarts`.
    pub counters: Counters,
    /// Iterations at which the adaptive guard changed γ (one entry per change).
    pub adjustments: Vec<usize>,
    pub algorithm: &'static str,
    pub engine: &'static str,
}

/// Counts every oracle call made by a solve.
pub(crate) struct Instrumented<'a> {
    problem: &'a SplitProblem,
    pub(crate) counters: Counters,
}

impl<'a> Instrumented<'a> {
    pub(crate) fn new(problem: &'a SplitProblem) -> Self {
        Instrumented {
            problem,
            counters: Counters::default(),
        }
    }

    fn prox1(&mut self, x: &Vector, gamma: f64) -> Result<Vector> {
        self.counters.prox1 += 1;
        self.problem
            .phi1()
            .prox(x, gamma)
            .map_err(|e| Error::oracle(OracleSide::Phi1, e))
    }

    fn prox2(&mut self, x: &Vector, gamma: f64) -> Result<Vector> {
        self.counters.prox2 += 1;
        self.problem
            .phi2()
            .prox(x, gamma)
            .map_err(|e| Error::oracle(OracleSide::Phi2, e))
    }

    fn value1(&mut self, x: &Vector) -> f64 {
        self.counters.value1 += 1;
        self.problem.phi1().value(x)
    }

    fn value2(&mut self, x: &Vector) -> f64 {
        self.counters.value2 += 1;
        self.problem.phi2().value(x)
    }

    /// Second half of the oracle plus the envelope, given `u` and `φ₁(u)`.
    fn finish(&mut self, s: Vector, u: Vector, phi1_u: f64, gamma: f64) -> Result<DrsTriple> {
        let v = self.prox2(&(2.0 * &u - &s), gamma)?;
        let phi2_v = self.value2(&v);
        let dre = dre_from_values(phi1_u, phi2_v, &s, &u, &v, gamma)?;
        let r = &u - &v;
        Ok(DrsTriple { s, u, v, r, dre })
    }

    fn full(&mut self, s: Vector, gamma: f64) -> Result<DrsTriple> {
        Ok(self.full_with_value(s, gamma)?.0)
    }

    /// Also returns `φ₁(u)`.
    fn full_with_value(&mut self, s: Vector, gamma: f64) -> Result<(DrsTriple, f64)> {
        let u = self.prox1(&s, gamma)?;
        let phi1_u = self.value1(&u);
        Ok((self.finish(s, u, phi1_u, gamma)?, phi1_u))
    }
}

fn accepts(pi: f64, new_merit: f64, merit: f64, c: f64, gamma: f64, res_sq: f64) -> bool {
    pi * new_merit <= pi * merit - c / gamma * res_sq
}

/// Outcome of the adaptive check on the nominal point.
enum Guard {
    Keep((DrsTriple, f64)),
    Adjusted,
}

struct Solver<'a> {
    config: &'a DrsConfig,
    calls: Instrumented<'a>,
    gamma: f64,
    pi: f64,
    use_cache: bool,
}

impl<'a> Solver<'a> {
    fn adaptive_guard(&mut self, state: &mut DrsTriple, s_bar: &Vector, restart: &mut Counters) -> Result<Guard> {
        let before = self.calls.counters;
        let (nominal, phi1_u) = self.calls.full_with_value(s_bar.clone(), self.gamma)?;
        let res_sq = state.r.norm_squared();
        let no_decrease = !(self.pi * nominal.dre < self.pi * state.dre - self.config.c / self.gamma * res_sq);
        let below_lb = match self.config.phi_lb {
            Some(lb) => self.pi * nominal.dre < self.pi * lb,
            None => false,
        };
        if !(no_decrease || below_lb) {
            return Ok(Guard::Keep((nominal, phi1_u)));
        }
        let gamma = self.gamma * 2f64.powf(-self.pi);
        if !(gamma >= GAMMA_RANGE.0 && gamma <= GAMMA_RANGE.1) {
            return Err(Error::GammaOutOfRange { gamma });
        }
        self.gamma = gamma;
        *state = self.calls.full(state.s.clone(), gamma)?;
        *restart = *restart + (self.calls.counters - before);
        Ok(Guard::Adjusted)
    }

    /// Backtracking along `[s̄, s+d]`. Returns the accepted triple, τ, the
    /// number of rejected trials, whether the nominal fallback was taken, and
    /// the residual at the first trial.
    fn linesearch(
        &mut self,
        k: usize,
        state: &DrsTriple,
        s_bar: &Vector,
        mut nominal: Option<(DrsTriple, f64)>,
        d: &Vector,
    ) -> Result<(DrsTriple, f64, usize, bool, Vector)> {
        let gamma = self.gamma;
        let res_sq = state.r.norm_squared();
        let s_d = &state.s + d;
        let mut tau = 1.0;
        let mut rejected = 0usize;
        let mut first_residual: Option<Vector> = None;
        // u₀ = prox(s+d) and its value, used by the line model.
        let mut u0: Option<(Vector, f64)> = None;
        let mut cache: Option<LinesearchCache> = None;
        loop {
            let candidate = if tau == 1.0 {
                s_d.clone()
            } else {
                (1.0 - tau) * s_bar + tau * &s_d
            };
            let at_nominal = candidate == *s_bar;
            let trial = if tau == 1.0 {
                let u = self.calls.prox1(&candidate, gamma)?;
                let phi1_u = self.calls.value1(&u);
                if self.use_cache {
                    u0 = Some((u.clone(), phi1_u));
                }
                self.calls.finish(candidate, u, phi1_u, gamma)?
            } else if self.use_cache {
                if cache.is_none() {
                    let (ub, vb) = match &nominal {
                        Some((t, phi1_u)) => (t.u.clone(), *phi1_u),
                        None => {
                            let ub = self.calls.prox1(s_bar, gamma)?;
                            let vb = self.calls.value1(&ub);
                            (ub, vb)
                        }
                    };
                    let (u0v, v0) = u0.clone().expect("first trial evaluated");
                    cache = Some(LinesearchCache::new(s_bar, ub, u0v, vb, v0, gamma));
                }
                let lc = cache.as_ref().expect("cache built");
                self.calls.finish(candidate, lc.blend(tau), lc.line_value(tau), gamma)?
            } else {
                self.calls.full(candidate, gamma)?
            };
            if first_residual.is_none() {
                first_residual = Some(trial.r.clone());
            }
            if accepts(self.pi, trial.dre, state.dre, self.config.c, gamma, res_sq) {
                return Ok((trial, tau, rejected, false, first_residual.unwrap()));
            }
            rejected += 1;
            match self.config.i_max {
                Some(i_max) if rejected >= i_max => {
                    let fallback = match nominal.take() {
                        Some((t, _)) => t,
                        None => match &cache {
                            Some(lc) => {
                                let ub = lc.u_bar.clone();
                                let vb = lc.model.a;
                                self.calls.finish(s_bar.clone(), ub, vb, gamma)?
                            }
                            None => self.calls.full(s_bar.clone(), gamma)?,
                        },
                    };
                    return Ok((fallback, 0.0, rejected, true, first_residual.unwrap()));
                }
                _ => {}
            }
            // with a finite i_max the fallback above always ends the loop
            if self.config.i_max.is_none() && (at_nominal || tau == 0.0) {
                return Err(Error::BacktrackOverflow { iteration: k });
            }
            tau *= 0.5;
        }
    }
}

/// Runs the linesearch DRS method from `s0`.
pub fn drs_ls_solve(
    problem: &SplitProblem,
    s0: &Vector,
    config: &DrsConfig,
    engine: &mut dyn DirectionEngine,
) -> Result<DrsSolveReport> {
    config.validate(problem)?;
    problem.check_dim(s0)?;
    let start = Instant::now();
    let mut solver = Solver {
        config,
        calls: Instrumented::new(problem),
        gamma: config.gamma,
        pi: problem.pi(),
        use_cache: config.quadcache && problem.phi1().is_generalized_quadratic(),
    };
    let mut state = solver.calls.full(s0.clone(), config.gamma)?;
    let init_calls = solver.calls.counters;
    let initial_merit = state.dre;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut adjustments = Vec::new();
    let mut restart = Counters::default();
    let mut k = 0usize;
    let status = loop {
        if state.r.norm() / solver.gamma <= config.epsilon {
            break Status::Converged;
        }
        if k >= config.max_iters {
            break Status::MaxIters;
        }
        let iter_start = solver.calls.counters;
        let s_bar = &state.s - config.lambda * &state.r;
        let nominal = if config.adaptive {
            match solver.adaptive_guard(&mut state, &s_bar, &mut restart)? {
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
        let d = engine.direction(&StepInfo {
            k,
            residual: &state.r,
            nominal_point: &s_bar,
            lambda: config.lambda,
        });
        if d.len() != state.s.len() || d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteDirection { iteration: k });
        }
        let (next, tau, backtracks, fallback, r_first) = solver.linesearch(k, &state, &s_bar, nominal, &d)?;
        engine.feed(&SecantPair {
            p: d.clone(),
            q: &r_first - &state.r,
        });
        let calls = solver.calls.counters - iter_start;
        let record = IterationRecord {
            k,
            res_norm: state.r.norm(),
            merit: state.dre,
            merit_next: next.dre,
            step: solver.gamma,
            c: config.c,
            tau,
            backtracks,
            fallback,
            calls,
            restart_calls: restart,
            cumulative: solver.calls.counters,
            elapsed_s: start.elapsed().as_secs_f64(),
            iterate: config.record_iterates.then(|| state.s.clone()),
            direction: config.record_iterates.then_some(d),
        };
        trace.push(record);
        restart = Counters::default();
        state = next;
        k += 1;
    };
    Ok(DrsSolveReport {
        status,
        iterations: k,
        state,
        gamma: solver.gamma,
        c: config.c,
        lambda: config.lambda,
        pi: solver.pi,
        epsilon: config.epsilon,
        initial_merit,
        trace,
        init_calls,
        counters: solver.calls.counters,
        adjustments,
        algorithm: "drs_ls",
        engine: engine.name(),
    })
}

/// Plain (relaxed) DRS, `s⁺ = s − λr`, with the same bookkeeping as
/// [`drs_ls_solve`]. The envelope is evaluated for the trace only; `c` is
/// ignored and the regime bounds are not enforced beyond `λ ∈ (0,2)`.
pub fn drs_solve(problem: &SplitProblem, s0: &Vector, config: &DrsConfig) -> Result<DrsSolveReport> {
    if !(config.lambda > 0.0 && config.lambda < 2.0) {
        return Err(Error::InvalidConfig(format!("lambda must be in (0,2), got {}", config.lambda)));
    }
    if !(config.gamma > 0.0 && config.gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!("gamma must be positive and finite, got {}", config.gamma)));
    }
    problem.check_dim(s0)?;
    let start = Instant::now();
    let mut calls = Instrumented::new(problem);
    let gamma = config.gamma;
    let mut state = calls.full(s0.clone(), gamma)?;
    let init_calls = calls.counters;
    let initial_merit = state.dre;
    let mut trace = Vec::new();
    let mut k = 0usize;
    let status = loop {
        if state.r.norm() / gamma <= config.epsilon {
            break Status::Converged;
        }
        if k >= config.max_iters {
            break Status::MaxIters;
        }
        let before = calls.counters;
        let s_bar = &state.s - config.lambda * &state.r;
        let next = calls.full(s_bar, gamma)?;
        trace.push(IterationRecord {
            k,
            res_norm: state.r.norm(),
            merit: state.dre,
            merit_next: next.dre,
            step: gamma,
            c: 0.0,
            tau: 1.0,
            backtracks: 0,
            fallback: false,
            calls: calls.counters - before,
            restart_calls: Counters::default(),
            cumulative: calls.counters,
            elapsed_s: start.elapsed().as_secs_f64(),
            iterate: config.record_iterates.then(|| state.s.clone()),
            direction: config.record_iterates.then(|| -config.lambda * &state.r),
        });
        state = next;
        k += 1;
    };
    Ok(DrsSolveReport {
        status,
        iterations: k,
        state,
        gamma,
        c: 0.0,
        lambda: config.lambda,
        pi: problem.pi(),
        epsilon: config.epsilon,
        initial_merit,
        trace,
        init_calls,
        counters: calls.counters,
        adjustments: Vec::new(),
        algorithm: "drs",
        engine: "nominal",
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::directions::{Lbfgs, Nominal};
    use crate::oracles::{Quadratic, Zero};
    use crate::Matrix;

    fn half_square_1d() -> SplitProblem {
        let phi1 = Arc::new(Quadratic::new(Matrix::identity(1, 1), Vector::zeros(1), 0.0).unwrap());
        SplitProblem::new(
            phi1,
            Arc::new(Zero::new(1)),
            Regime::Smooth {
                lipschitz: 1.0,
                phi1_convex: true,
            },
        )
        .unwrap()
    }

    #[test]
    fn first_nominal_step_by_hand() {
        let problem = half_square_1d();
        let config = DrsConfig {
            gamma: 0.5,
            c: 0.1,
            max_iters: 1,
            record_iterates: true,
            ..DrsConfig::default()
        };
        let report = drs_ls_solve(&problem, &Vector::from_element(1, 1.0), &config, &mut Nominal).unwrap();
        assert_eq!(report.trace.len(), 1);
        assert!((report.state.s[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(report.trace[0].tau, 1.0);
    }

    #[test]
    fn fixed_point_start_takes_no_iterations() {
        let problem = half_square_1d();
        let config = DrsConfig {
            gamma: 0.5,
            c: 0.1,
            ..DrsConfig::default()
        };
        let report = drs_ls_solve(&problem, &Vector::zeros(1), &config, &mut Nominal).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(report.status, Status::Converged);
        assert_eq!(report.counters.prox1, 1);
    }

    #[test]
    fn rejects_invalid_configs() {
        let problem = half_square_1d();
        let ok = DrsConfig {
            gamma: 0.5,
            c: 0.1,
            ..DrsConfig::default()
        };
        assert!(ok.validate(&problem).is_ok());
        for bad in [
            DrsConfig { lambda: 2.5, ..ok.clone() },
            DrsConfig { gamma: 1.5, ..ok.clone() },
            DrsConfig { c: 0.3, ..ok.clone() },
            DrsConfig { c: -1.0, ..ok.clone() },
            DrsConfig { i_max: Some(0), ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(&problem), Err(Error::InvalidConfig(_))), "{bad:?}");
        }
    }

    #[test]
    fn from_bounds_uses_fractions() {
        let problem = half_square_1d();
        let config = DrsConfig::from_bounds(&problem, 1.0, 0.95, 0.5).unwrap();
        assert_eq!(config.gamma, 0.95);
        assert_eq!(config.c, 0.5 * decrease_constant(0.95, 1.0, true));
    }

    #[test]
    fn quadratic_converges_with_lbfgs() {
        let q = Matrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
        let phi1 = Arc::new(Quadratic::new(q, Vector::from_vec(vec![1.0, -1.0, 2.0]), 0.0).unwrap());
        let l = phi1.lipschitz();
        let problem = SplitProblem::new(
            phi1,
            Arc::new(crate::oracles::L1Norm::new(3, 0.3)),
            Regime::Smooth {
                lipschitz: l,
                phi1_convex: true,
            },
        )
        .unwrap();
        let config = DrsConfig {
            epsilon: 1e-10,
            ..DrsConfig::from_bounds(&problem, 1.0, 0.95, 0.5).unwrap()
        };
        let report = drs_ls_solve(&problem, &Vector::zeros(3), &config, &mut Lbfgs::new(5, 1.0)).unwrap();
        assert_eq!(report.status, Status::Converged);
        for rec in &report.trace {
            assert!(rec.calls.prox1 <= 2);
            assert!(rec.merit_next <= rec.merit - rec.c / rec.step * rec.res_norm.powi(2) + 1e-12 * rec.merit.abs());
        }
    }
}
