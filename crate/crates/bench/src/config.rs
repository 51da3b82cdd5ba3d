//! TOML run configuration.
//!
//! ```toml
//! algorithm = "drs_ls"      # drs | drs_ls | admm | admm_ls
//! engine = "lbfgs(5)"
//! lambda = 1.0
//! seed = 7
//!
//! [problem]
//! family = "sparse_lsq"     # sparse_lsq | spca | consensus_spca | mpc | quadratic_box
//! m = 100
//! n = 500
//!
//! [step]
//! policy = "fraction"       # explicit | fraction | adaptive
//! value = 0.95
//! ```

use std::path::{Path, PathBuf};

use qnsplit::directions::EngineKind;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Drs,
    DrsLs,
    Admm,
    AdmmLs,
}

impl Algorithm {
    pub fn is_admm(self) -> bool {
        matches!(self, Algorithm::Admm | Algorithm::AdmmLs)
    }

    /// Whether a direction engine is used at all.
    pub fn has_linesearch(self) -> bool {
        matches!(self, Algorithm::DrsLs | Algorithm::AdmmLs)
    }

    /// The plain method of the same family.
    pub fn plain(self) -> Algorithm {
        if self.is_admm() {
            Algorithm::Admm
        } else {
            Algorithm::Drs
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Drs => "drs",
            Algorithm::DrsLs => "drs_ls",
            Algorithm::Admm => "admm",
            Algorithm::AdmmLs => "admm_ls",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemConfig {
    SparseLsq(SparseLsqParams),
    Spca(SpcaParams),
    ConsensusSpca(ConsensusParams),
    Mpc(MpcParams),
    QuadraticBox(QuadraticBoxParams),
}

impl ProblemConfig {
    pub fn family(&self) -> &'static str {
        match self {
            ProblemConfig::SparseLsq(_) => "sparse_lsq",
            ProblemConfig::Spca(_) => "spca",
            ProblemConfig::ConsensusSpca(_) => "consensus_spca",
            ProblemConfig::Mpc(_) => "mpc",
            ProblemConfig::QuadraticBox(_) => "quadratic_box",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparseLsqParams {
    pub m: usize,
    pub n: usize,
    /// Nonzeros of the planted solution.
    pub k: usize,
    /// Weight of the ℓ½ term.
    pub r: f64,
}

impl Default for SparseLsqParams {
    fn default() -> Self {
        SparseLsqParams {
            m: 100,
            n: 500,
            k: 50,
            r: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpcaParams {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub signal: f64,
}

impl Default for SpcaParams {
    fn default() -> Self {
        SpcaParams {
            m: 60,
            n: 30,
            k: 5,
            signal: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusParams {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub signal: f64,
    pub agents: usize,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        ConsensusParams {
            m: 30,
            n: 20,
            k: 4,
            signal: 3.0,
            agents: 3,
        }
    }
}

/// Double integrator with the default weights and corridors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcParams {
    pub horizon: usize,
    /// Initial state; two entries.
    pub x0: Option<Vec<f64>>,
}

impl Default for MpcParams {
    fn default() -> Self {
        MpcParams { horizon: 15, x0: None }
    }
}

/// `½xᵀPx + qᵀx` subject to `x = z ∈ [−bound, bound]ⁿ`, with random `P ≻ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadraticBoxParams {
    pub n: usize,
    pub bound: f64,
}

impl Default for QuadraticBoxParams {
    fn default() -> Self {
        QuadraticBoxParams { n: 20, bound: 0.5 }
    }
}

/// How γ (DRS) or β (ADMM) is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepPolicy {
    /// Use `value` as γ or β; `c` is `c_fraction` times the regime constant.
    Explicit { value: f64 },
    /// Fraction of the admissible bound derived from the problem constants.
    Fraction {
        #[serde(default = "default_fraction")]
        value: f64,
    },
    /// Start from `value` and let the adaptive guard correct it.
    Adaptive {
        value: f64,
        #[serde(default = "default_fraction")]
        fraction: f64,
        /// Known lower bound on the optimal value.
        #[serde(default)]
        lower_bound: Option<f64>,
    },
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Fraction {
            value: default_fraction(),
        }
    }
}

fn default_fraction() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_engine")]
    pub engine: String,
    #[serde(default)]
    pub step: StepPolicy,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// `c` as a fraction of the regime constant.
    #[serde(default = "default_c_fraction")]
    pub c_fraction: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Backtracking trials before falling back to the nominal step; 0 means
    /// no limit.
    #[serde(default = "default_i_max")]
    pub i_max: usize,
    #[serde(default = "default_true")]
    pub quadcache: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_algorithm() -> Algorithm {
    Algorithm::DrsLs
}
fn default_engine() -> String {
    "lbfgs(5)".into()
}
fn default_lambda() -> f64 {
    1.0
}
fn default_c_fraction() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    10_000
}
fn default_i_max() -> usize {
    10
}
fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| BenchError::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })
    }

    /// The parsed engine; plain algorithms always use the nominal one.
    pub fn engine_kind(&self) -> Result<EngineKind, BenchError> {
        if !self.algorithm.has_linesearch() {
            return Ok(EngineKind::Nominal);
        }
        EngineKind::parse(&self.engine).ok_or_else(|| BenchError::Validation(format!("unknown engine {:?}", self.engine)))
    }

    /// Label used in comparison tables.
    pub fn label(&self) -> String {
        if self.algorithm.has_linesearch() {
            format!("{}/{}", self.algorithm.name(), self.engine.trim())
        } else {
            self.algorithm.name().to_string()
        }
    }

    pub fn i_max(&self) -> Option<usize> {
        (self.i_max > 0).then_some(self.i_max)
    }

    /// `--gamma`/`--beta` override: replaces the starting value of an
    /// adaptive policy, otherwise switches to an explicit step.
    pub fn override_step(&mut self, value: f64) {
        match &mut self.step {
            StepPolicy::Adaptive { value: v, .. } => *v = value,
            _ => self.step = StepPolicy::Explicit { value },
        }
    }

    /// Checks everything that does not need the problem data.
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Validation(msg));
        if !(self.lambda > 0.0 && self.lambda < 2.0) {
            return bad(format!("lambda must be in (0,2), got {}", self.lambda));
        }
        if !(self.c_fraction > 0.0 && self.c_fraction < 1.0) {
            return bad(format!("c_fraction must be in (0,1), got {}", self.c_fraction));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be finite and nonnegative, got {}", self.epsilon));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        self.engine_kind()?;
        match self.step {
            StepPolicy::Explicit { value } if !(value > 0.0 && value.is_finite()) => {
                return bad(format!("explicit step must be positive and finite, got {value}"));
            }
            StepPolicy::Fraction { value } if !(value > 0.0 && value < 1.0) => {
                return bad(format!("step fraction must be in (0,1), got {value}"));
            }
            StepPolicy::Adaptive { value, fraction, lower_bound } => {
                if !(value > 0.0 && value.is_finite()) {
                    return bad(format!("adaptive starting step must be positive and finite, got {value}"));
                }
                if !(fraction > 0.0 && fraction < 1.0) {
                    return bad(format!("adaptive fraction must be in (0,1), got {fraction}"));
                }
                if lower_bound.is_some_and(|lb| !lb.is_finite()) {
                    return bad("lower_bound must be finite".into());
                }
            }
            _ => {}
        }
        let admm_capable = matches!(self.problem, ProblemConfig::ConsensusSpca(_) | ProblemConfig::QuadraticBox(_));
        if self.algorithm.is_admm() && !admm_capable {
            return bad(format!("{} has no ADMM form", self.problem.family()));
        }
        if !self.algorithm.is_admm() && matches!(self.problem, ProblemConfig::QuadraticBox(_)) {
            return bad("quadratic_box is only available for admm and admm_ls".into());
        }
        match &self.problem {
            ProblemConfig::SparseLsq(p) => {
                if p.m == 0 || p.n == 0 || p.k == 0 || p.k > p.n {
                    return bad(format!("sparse_lsq needs m, n ≥ 1 and 1 ≤ k ≤ n, got {p:?}"));
                }
                if !(p.r > 0.0 && p.r.is_finite()) {
                    return bad(format!("sparse_lsq weight r must be positive, got {}", p.r));
                }
            }
            ProblemConfig::Spca(p) => {
                if p.m == 0 || p.n == 0 || p.k == 0 || p.k > p.n || !p.signal.is_finite() {
                    return bad(format!("spca needs m, n ≥ 1 and 1 ≤ k ≤ n, got {p:?}"));
                }
            }
            ProblemConfig::ConsensusSpca(p) => {
                if p.m == 0 || p.n == 0 || p.k == 0 || p.k > p.n || !p.signal.is_finite() {
                    return bad(format!("consensus_spca needs m, n ≥ 1 and 1 ≤ k ≤ n, got {p:?}"));
                }
                if p.agents == 0 || p.agents > p.m {
                    return bad(format!("consensus_spca needs 1 ≤ agents ≤ m, got {}", p.agents));
                }
            }
            ProblemConfig::Mpc(p) => {
                if p.horizon == 0 {
                    return bad("mpc horizon must be positive".into());
                }
                if p.x0.as_ref().is_some_and(|x| x.len() != 2 || x.iter().any(|v| !v.is_finite())) {
                    return bad("mpc x0 must have two finite entries".into());
                }
            }
            ProblemConfig::QuadraticBox(p) => {
                if p.n == 0 || !(p.bound > 0.0 && p.bound.is_finite()) {
                    return bad(format!("quadratic_box needs n ≥ 1 and a positive bound, got {p:?}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_toml("[problem]\nfamily = \"spca\"\n").unwrap();
        assert_eq!(cfg.algorithm, Algorithm::DrsLs);
        assert_eq!(cfg.problem, ProblemConfig::Spca(SpcaParams::default()));
        assert_eq!(cfg.step, StepPolicy::Fraction { value: 0.95 });
        assert_eq!(cfg.i_max(), Some(10));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("gama = 1.0\n[problem]\nfamily = \"spca\"\n").is_err());
        assert!(RunConfig::from_toml("[problem]\nfamily = \"spca\"\nhorizon = 3\n").is_err());
        assert!(RunConfig::from_toml("[problem]\nfamily = \"lasso\"\n").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let base = RunConfig::from_toml("[problem]\nfamily = \"mpc\"\n").unwrap();
        let mut c = base.clone();
        c.lambda = 2.5;
        assert!(matches!(c.validate(), Err(BenchError::Validation(_))));
        let mut c = base.clone();
        c.engine = "bfgs".into();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.algorithm = Algorithm::Admm;
        assert!(c.validate().is_err());
        let mut c = base;
        c.step = StepPolicy::Fraction { value: 1.0 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn step_override_keeps_adaptive_policy() {
        let mut c = RunConfig::from_toml("[problem]\nfamily = \"spca\"\n[step]\npolicy = \"adaptive\"\nvalue = 1.0\n").unwrap();
        c.override_step(3.0);
        assert!(matches!(c.step, StepPolicy::Adaptive { value, .. } if value == 3.0));
        let mut c = RunConfig::from_toml("[problem]\nfamily = \"spca\"\n").unwrap();
        c.override_step(0.1);
        assert_eq!(c.step, StepPolicy::Explicit { value: 0.1 });
    }

    #[test]
    fn plain_algorithms_ignore_the_engine() {
        let c = RunConfig::from_toml("algorithm = \"drs\"\nengine = \"whatever\"\n[problem]\nfamily = \"spca\"\n").unwrap();
        assert_eq!(c.engine_kind().unwrap(), EngineKind::Nominal);
        assert_eq!(c.label(), "drs");
    }
}
