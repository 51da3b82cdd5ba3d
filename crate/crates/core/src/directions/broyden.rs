use super::{DirectionEngine, SecantPair, StepInfo};
use crate::{Matrix, Vector};

/// Powell damping factor: `θ = 1` if `|δ| ≥ θ̄`, else `(1 − sgn(δ)θ̄)/(1 − δ)`
/// with `sgn(0) = 1`.
pub fn powell_theta(delta: f64, theta_bar: f64) -> f64 {
    if delta.abs() >= theta_bar {
        1.0
    } else {
        let sign = if delta >= 0.0 { 1.0 } else { -1.0 };
        (1.0 - sign * theta_bar) / (1.0 - delta)
    }
}

/// One modified Broyden update of the inverse Jacobian estimate:
/// `H' = H + (p − Hq)/⟨p, (1/θ − 1)p + Hq⟩ · pᵀH`.
/// Returns `None` (no update) when `p = 0`.
pub fn broyden_update(h: &Matrix, pair: &SecantPair, theta_bar: f64) -> Option<Matrix> {
    let p = &pair.p;
    let pp = p.norm_squared();
    if pp == 0.0 {
        return None;
    }
    let hq = h * &pair.q;
    let delta = hq.dot(p) / pp;
    let theta = powell_theta(delta, theta_bar);
    let denom = p.dot(&((1.0 / theta - 1.0) * p + &hq));
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let pt_h = p.transpose() * h;
    Some(h + ((p - hq) / denom) * pt_h)
}

/// Full-matrix modified Broyden method. Stores `H` densely, `O(n²)` memory.
#[derive(Debug, Clone)]
pub struct Broyden {
    h: Matrix,
    theta_bar: f64,
    h0_scale: f64,
}

impl Broyden {
    pub fn new(dim: usize, theta_bar: f64, h0_scale: f64) -> Self {
        Broyden {
            h: Matrix::identity(dim, dim) * h0_scale,
            theta_bar,
            h0_scale,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.h
    }
}

impl DirectionEngine for Broyden {
    fn direction(&mut self, info: &StepInfo<'_>) -> Vector {
        -(&self.h * info.residual)
    }

    fn feed(&mut self, pair: &SecantPair) {
        if let Some(h) = broyden_update(&self.h, pair, self.theta_bar) {
            if h.iter().all(|x| x.is_finite()) {
                self.h = h;
            }
        }
    }

    fn reset(&mut self) {
        let n = self.h.nrows();
        self.h = Matrix::identity(n, n) * self.h0_scale;
    }

    fn name(&self) -> &'static str {
        "broyden"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn secant_already_satisfied() {
        let h = Matrix::identity(2, 2);
        let pair = SecantPair {
            p: v(&[0.3, -1.0]),
            q: v(&[0.3, -1.0]),
        };
        assert_eq!(broyden_update(&h, &pair, 0.2).unwrap(), h);
    }

    #[test]
    fn diagonal_example() {
        let h = Matrix::identity(2, 2);
        let pair = SecantPair {
            p: v(&[1.0, 0.0]),
            q: v(&[2.0, 0.0]),
        };
        let h2 = broyden_update(&h, &pair, 0.2).unwrap();
        assert_eq!(h2, Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]));
        assert_eq!(&h2 * &pair.q, pair.p);
    }

    #[test]
    fn theta_with_zero_delta() {
        assert_eq!(powell_theta(0.0, 0.2), 0.8);
        assert_eq!(powell_theta(2.0, 0.2), 1.0);
        assert!((powell_theta(-0.1, 0.2) - 1.2 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn degenerate_pair_is_skipped() {
        let mut e = Broyden::new(2, 0.2, 1.0);
        e.feed(&SecantPair {
            p: Vector::zeros(2),
            q: v(&[1.0, 1.0]),
        });
        assert_eq!(e.matrix(), &Matrix::identity(2, 2));
    }
}
