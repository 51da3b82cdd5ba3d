use std::collections::VecDeque;

use super::{DirectionEngine, SecantPair, StepInfo};
use crate::{Matrix, Vector};

const DROP_TOL: f64 = 1e-10;

/// `t = argmin ‖Qt − r‖` through an SVD, dropping singular values below
/// `1e−10·σ_max` (minimum-norm solution when `Q` is rank deficient).
pub fn least_squares(q: &Matrix, r: &Vector) -> Vector {
    let svd = q.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Vector::zeros(q.ncols());
    }
    svd.solve(r, DROP_TOL * smax).expect("SVD computed with both factors")
}

/// `d = −H r` with `H = μI + (𝒫 − μ𝒬)𝒬⁺` over the last `min(k, m)` pairs.
pub fn anderson_apply(p: &Matrix, q: &Matrix, r: &Vector, h0_scale: f64) -> Vector {
    if q.ncols() == 0 {
        return -h0_scale * r;
    }
    let t = least_squares(q, r);
    -(h0_scale * r + (p - h0_scale * q) * t)
}

/// Anderson acceleration seen as a multisecant quasi-Newton method. History
/// is kept across fallback iterations and cleared only by a reset.
#[derive(Debug, Clone)]
pub struct Anderson {
    memory: usize,
    h0_scale: f64,
    pairs: VecDeque<SecantPair>,
}

impl Anderson {
    pub fn new(memory: usize, h0_scale: f64) -> Self {
        assert!(memory > 0, "Anderson memory must be positive");
        Anderson {
            memory,
            h0_scale,
            pairs: VecDeque::with_capacity(memory),
        }
    }

    fn history(&self, dim: usize) -> (Matrix, Matrix) {
        let m = self.pairs.len();
        let mut p = Matrix::zeros(dim, m);
        let mut q = Matrix::zeros(dim, m);
        for (j, pair) in self.pairs.iter().enumerate() {
            p.set_column(j, &pair.p);
            q.set_column(j, &pair.q);
        }
        (p, q)
    }
}

impl DirectionEngine for Anderson {
    fn direction(&mut self, info: &StepInfo<'_>) -> Vector {
        let (p, q) = self.history(info.residual.len());
        anderson_apply(&p, &q, info.residual, self.h0_scale)
    }

    fn feed(&mut self, pair: &SecantPair) {
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back(pair.clone());
    }

    fn reset(&mut self) {
        self.pairs.clear();
    }

    fn name(&self) -> &'static str {
        "anderson"
    }
}
