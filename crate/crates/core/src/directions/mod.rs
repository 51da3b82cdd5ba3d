//! Update directions for the linesearch drivers.
//!
//! An engine maps the current fixed-point residual `r^k` to a direction `d^k`
//! and learns from the secant pair `(p, q) = (d^k, r₀^{k+1} − r^k)`, where
//! `r₀^{k+1}` is the residual at the first linesearch trial `s^k + d^k`.
//! The drivers call [`DirectionEngine::feed`] exactly once per iteration.

mod anderson;
mod broyden;
mod lbfgs;
mod nesterov;

pub use anderson::Anderson;
pub use broyden::Broyden;
pub use lbfgs::Lbfgs;
pub use nesterov::{nesterov_direction_admm, nesterov_direction_drs, Nesterov};

use crate::Vector;

/// What the driver knows when it asks for `d^k`.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo<'a> {
    pub k: usize,
    pub residual: &'a Vector,
    /// The nominal next point `s̄^{k+1}` (for ADMM its DRS image
    /// `b − Bz^k − ȳ^{k+½}/β`).
    pub nominal_point: &'a Vector,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecantPair {
    pub p: Vector,
    pub q: Vector,
}

pub trait DirectionEngine: Send {
    fn direction(&mut self, info: &StepInfo<'_>) -> Vector;

    fn feed(&mut self, pair: &SecantPair);

    /// Forget all history (called when the step parameter changes).
    fn reset(&mut self);

    fn name(&self) -> &'static str;
}

/// `d = −λr`, i.e. the plain DRS/ADMM update.
pub fn nominal_direction(r: &Vector, lambda: f64) -> Vector {
    -lambda * r
}

#[derive(Debug, Clone, Default)]
pub struct Nominal;

impl DirectionEngine for Nominal {
    fn direction(&mut self, info: &StepInfo<'_>) -> Vector {
        nominal_direction(info.residual, info.lambda)
    }

    fn feed(&mut self, _pair: &SecantPair) {}

    fn reset(&mut self) {}

    fn name(&self) -> &'static str {
        "nominal"
    }
}

/// Engine selector used by configuration front ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EngineKind {
    Nominal,
    Nesterov,
    Lbfgs { memory: usize },
    Broyden { theta_bar: f64 },
    Anderson { memory: usize },
}

impl EngineKind {
    /// Build an engine for problems of dimension `dim`. `h0_scale` is the `μ`
    /// of the initial inverse Jacobian estimate `H₀ = μI`.
    pub fn build(&self, dim: usize, h0_scale: f64) -> Box<dyn DirectionEngine> {
        match *self {
            EngineKind::Nominal => Box::new(Nominal),
            EngineKind::Nesterov => Box::new(Nesterov::new()),
            EngineKind::Lbfgs { memory } => Box::new(Lbfgs::new(memory, h0_scale)),
            EngineKind::Broyden { theta_bar } => Box::new(Broyden::new(dim, theta_bar, h0_scale)),
            EngineKind::Anderson { memory } => Box::new(Anderson::new(memory, h0_scale)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Nominal => "nominal",
            EngineKind::Nesterov => "nesterov",
            EngineKind::Lbfgs { .. } => "lbfgs",
            EngineKind::Broyden { .. } => "broyden",
            EngineKind::Anderson { .. } => "anderson",
        }
    }

    /// Parses `nominal`, `nesterov`, `lbfgs`, `lbfgs(7)`, `broyden`,
    /// `broyden(0.1)`, `anderson`, `anderson(3)`.
    pub fn parse(text: &str) -> Option<EngineKind> {
        let text = text.trim().to_ascii_lowercase();
        let (name, arg) = match text.find('(') {
            Some(i) if text.ends_with(')') => (&text[..i], Some(&text[i + 1..text.len() - 1])),
            Some(_) => return None,
            None => (text.as_str(), None),
        };
        let usize_arg = |default: usize| match arg {
            None => Some(default),
            Some(a) => a.trim().parse::<usize>().ok().filter(|&m| m > 0),
        };
        match name {
            "nominal" if arg.is_none() => Some(EngineKind::Nominal),
            "nesterov" if arg.is_none() => Some(EngineKind::Nesterov),
            "lbfgs" => usize_arg(5).map(|memory| EngineKind::Lbfgs { memory }),
            "anderson" => usize_arg(5).map(|memory| EngineKind::Anderson { memory }),
            "broyden" => match arg {
                None => Some(EngineKind::Broyden { theta_bar: 0.2 }),
                Some(a) => a
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|t| *t > 0.0 && *t < 1.0)
                    .map(|theta_bar| EngineKind::Broyden { theta_bar }),
            },
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_examples() {
        assert_eq!(nominal_direction(&Vector::zeros(2), 1.0), Vector::zeros(2));
        assert_eq!(
            nominal_direction(&Vector::from_vec(vec![1.0, 2.0]), 1.0).as_slice(),
            &[-1.0, -2.0]
        );
        assert_eq!(nominal_direction(&Vector::from_element(1, 2.0), 0.5)[0], -1.0);
    }

    #[test]
    fn parse_engines() {
        assert_eq!(EngineKind::parse("lbfgs"), Some(EngineKind::Lbfgs { memory: 5 }));
        assert_eq!(EngineKind::parse("LBFGS(7)"), Some(EngineKind::Lbfgs { memory: 7 }));
        assert_eq!(EngineKind::parse("broyden(0.1)"), Some(EngineKind::Broyden { theta_bar: 0.1 }));
        assert_eq!(EngineKind::parse("anderson"), Some(EngineKind::Anderson { memory: 5 }));
        assert_eq!(EngineKind::parse("nominal"), Some(EngineKind::Nominal));
        assert_eq!(EngineKind::parse("broyden(1.5)"), None);
        assert_eq!(EngineKind::parse("lbfgs(0)"), None);
        assert_eq!(EngineKind::parse("newton"), None);
    }

    #[test]
    fn all_engines_map_zero_to_zero_initially() {
        let kinds = [
            EngineKind::Nominal,
            EngineKind::Nesterov,
            EngineKind::Lbfgs { memory: 5 },
            EngineKind::Broyden { theta_bar: 0.2 },
            EngineKind::Anderson { memory: 5 },
        ];
        let zero = Vector::zeros(3);
        for kind in kinds {
            let mut e = kind.build(3, 1.0);
            let info = StepInfo {
                k: 0,
                residual: &zero,
                nominal_point: &zero,
                lambda: 1.0,
            };
            assert_eq!(e.direction(&info), zero, "{}", kind.name());
        }
    }
}
