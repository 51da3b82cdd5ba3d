use super::{DirectionEngine, SecantPair, StepInfo};
use crate::Vector;

fn momentum(k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        (k as f64 - 1.0) / (k as f64 + 2.0)
    }
}

/// `d⁰ = −λr⁰`, `d^k = ((k−1)/(k+2))(s̄^{k+1} − s̄^k) − λr^k`.
/// `sbar_prev` is ignored at `k = 0`.
pub fn nesterov_direction_drs(k: usize, sbar_next: &Vector, sbar_prev: &Vector, r: &Vector, lambda: f64) -> Vector {
    if k == 0 {
        return -lambda * r;
    }
    momentum(k) * (sbar_next - sbar_prev) - lambda * r
}

/// `d^k = −λr^k − ((k−1)/(k+2))(Bz^k − Bz^{k−1} + (ȳ^{k+½} − ȳ^{k−½})/β)`.
#[allow(clippy::too_many_arguments)]
pub fn nesterov_direction_admm(
    k: usize,
    bz_k: &Vector,
    bz_prev: &Vector,
    ybar_half_k: &Vector,
    ybar_half_prev: &Vector,
    r: &Vector,
    lambda: f64,
    beta: f64,
) -> Vector {
    if k == 0 {
        return -lambda * r;
    }
    -lambda * r - momentum(k) * (bz_k - bz_prev + (ybar_half_k - ybar_half_prev) / beta)
}

/// Extrapolation on the nominal points. Never restarts on its own; a reset
/// (step change) starts the sequence over.
#[derive(Debug, Clone, Default)]
pub struct Nesterov {
    k: usize,
    prev_nominal: Option<Vector>,
}

impl Nesterov {
    pub fn new() -> Self {
        Self::default()
    }
}

impl DirectionEngine for Nesterov {
    fn direction(&mut self, info: &StepInfo<'_>) -> Vector {
        let d = match &self.prev_nominal {
            Some(prev) => nesterov_direction_drs(self.k, info.nominal_point, prev, info.residual, info.lambda),
            None => -info.lambda * info.residual,
        };
        self.prev_nominal = Some(info.nominal_point.clone());
        self.k += 1;
        d
    }

    fn feed(&mut self, _pair: &SecantPair) {}

    fn reset(&mut self) {
        self.k = 0;
        self.prev_nominal = None;
    }

    fn name(&self) -> &'static str {
        "nesterov"
    }
}
