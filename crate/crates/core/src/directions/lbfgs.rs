use std::collections::VecDeque;

use super::{DirectionEngine, SecantPair, StepInfo};
use crate::Vector;

const CURVATURE_TOL: f64 = 1e-12;

/// Limited-memory BFGS inverse-Jacobian estimate, applied with the two-loop
/// recursion. Pairs with `⟨p, q⟩ ≤ 1e−12‖p‖‖q‖` are dropped.
#[derive(Debug, Clone)]
pub struct Lbfgs {
    memory: usize,
    h0_scale: f64,
    pairs: VecDeque<(Vector, Vector, f64)>,
}

impl Lbfgs {
    pub fn new(memory: usize, h0_scale: f64) -> Self {
        assert!(memory > 0, "L-BFGS memory must be positive");
        Lbfgs {
            memory,
            h0_scale,
            pairs: VecDeque::with_capacity(memory),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `H r` via the two-loop recursion.
    pub fn apply_inverse(&self, r: &Vector) -> Vector {
        let mut w = r.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (p, q, rho) in self.pairs.iter().rev() {
            let a = rho * p.dot(&w);
            w.axpy(-a, q, 1.0);
            alphas.push(a);
        }
        let scale = match self.pairs.back() {
            Some((p, q, _)) => p.dot(q) / q.norm_squared(),
            None => self.h0_scale,
        };
        w *= scale;
        for ((p, q, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * q.dot(&w);
            w.axpy(a - b, p, 1.0);
        }
        w
    }
}

impl DirectionEngine for Lbfgs {
    fn direction(&mut self, info: &StepInfo<'_>) -> Vector {
        -self.apply_inverse(info.residual)
    }

    fn feed(&mut self, pair: &SecantPair) {
        let pq = pair.p.dot(&pair.q);
        if !(pq > CURVATURE_TOL * pair.p.norm() * pair.q.norm()) {
            return;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((pair.p.clone(), pair.q.clone(), 1.0 / pq));
    }

    fn reset(&mut self) {
        self.pairs.clear();
    }

    fn name(&self) -> &'static str {
        "lbfgs"
    }
}
