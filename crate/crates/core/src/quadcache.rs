//! Linesearch caching for generalized-quadratic `φ₁`.
//!
//! When `prox_{γφ₁}` is affine, the prox at any blended candidate
//! `(1−τ)s̄ + τ(s+d)` is the same blend of the two endpoint proxes, and `φ₁`
//! along that segment is a quadratic polynomial in `τ`. A whole backtracking
//! sequence therefore costs two prox and two value evaluations of `φ₁`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::problem::ProxOracle;
use crate::Vector;

/// `(1−τ)ū + τu₀`.
pub fn blend_prox(u_bar: &Vector, u_0: &Vector, tau: f64) -> Vector {
    (1.0 - tau) * u_bar + tau * u_0
}

/// Quadratic model `ℓ(τ) = a + bτ + cτ²` of `φ₁` along the segment `[ū, u₀]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LineModel {
    /// Build from the two endpoint values and the slope at `τ = 0`.
    pub fn from_endpoints(value_bar: f64, value_0: f64, slope: f64) -> Self {
        LineModel {
            a: value_bar,
            b: slope,
            c: value_0 - value_bar - slope,
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.a + tau * (self.b + tau * self.c)
    }
}

/// Endpoint proxes and the quadratic line model for one DRS linesearch.
#[derive(Debug, Clone)]
pub struct LinesearchCache {
    pub u_bar: Vector,
    pub u_0: Vector,
    pub model: LineModel,
}

impl LinesearchCache {
    /// `s_bar` is the nominal point, `u_bar = prox_{γφ₁}(s_bar)`,
    /// `u_0 = prox_{γφ₁}(s + d)`; `value_bar`, `value_0` their `φ₁` values.
    /// The slope is `⟨s̄ − ū, u₀ − ū⟩/γ`, since `(s̄ − ū)/γ` is a gradient of
    /// `φ₁` at `ū` along the affine hull of its domain.
    pub fn new(s_bar: &Vector, u_bar: Vector, u_0: Vector, value_bar: f64, value_0: f64, gamma: f64) -> Self {
        let slope = (s_bar - &u_bar).dot(&(&u_0 - &u_bar)) / gamma;
        LinesearchCache {
            model: LineModel::from_endpoints(value_bar, value_0, slope),
            u_bar,
            u_0,
        }
    }

    pub fn blend(&self, tau: f64) -> Vector {
        blend_prox(&self.u_bar, &self.u_0, tau)
    }

    pub fn line_value(&self, tau: f64) -> f64 {
        self.model.value(tau)
    }
}

/// `a + bτ + cτ²` from an explicit cache.
pub fn quad_line_value(cache: &LinesearchCache, tau: f64) -> f64 {
    cache.line_value(tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityReport {
    pub passed: bool,
    pub worst: f64,
}

/// Checks numerically that `prox_{γh}` is affine on random convex
/// combinations of Gaussian points with standard deviation `scale`.
/// Violations are measured relative to `1 + ‖x‖`; the tolerance is `1e−8`.
pub fn affinity_validate(oracle: &dyn ProxOracle, gamma: f64, trials: usize, scale: f64, seed: u64) -> AffinityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = oracle.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = Vector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let b = Vector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let alpha: f64 = rng.random();
        let mid = alpha * &a + (1.0 - alpha) * &b;
        let (pa, pb, pm) = match (oracle.prox(&a, gamma), oracle.prox(&b, gamma), oracle.prox(&mid, gamma)) {
            (Ok(pa), Ok(pb), Ok(pm)) => (pa, pb, pm),
            _ => {
                return AffinityReport {
                    passed: false,
                    worst: f64::INFINITY,
                }
            }
        };
        let dev = (pm - (alpha * pa + (1.0 - alpha) * pb)).norm() / (1.0 + mid.norm());
        worst = worst.max(dev);
    }
    AffinityReport {
        passed: worst <= 1e-8,
        worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{BoxIndicator, Quadratic};
    use crate::Matrix;

    fn half_square() -> Quadratic {
        Quadratic::new(Matrix::identity(1, 1), Vector::zeros(1), 0.0).unwrap()
    }

    #[test]
    fn blend_endpoints_and_midpoint() {
        let ub = Vector::from_element(1, 1.0);
        let u0 = Vector::from_element(1, 2.0);
        assert_eq!(blend_prox(&ub, &u0, 0.0), ub);
        assert_eq!(blend_prox(&ub, &u0, 1.0), u0);
        let h = half_square();
        let mid = blend_prox(&ub, &u0, 0.5);
        assert_eq!(mid[0], 1.5);
        assert!((h.prox(&Vector::from_element(1, 3.0), 1.0).unwrap() - mid).norm() < 1e-15);
    }

    #[test]
    fn line_model_by_hand() {
        let h = half_square();
        let s_bar = Vector::from_element(1, 2.0);
        let ub = h.prox(&s_bar, 1.0).unwrap();
        let u0 = h.prox(&Vector::from_element(1, 4.0), 1.0).unwrap();
        let (vb, v0) = (h.value(&ub), h.value(&u0));
        let cache = LinesearchCache::new(&s_bar, ub, u0, vb, v0, 1.0);
        let m = &cache.model;
        assert!((m.a - 0.5).abs() < 1e-15 && (m.b - 1.0).abs() < 1e-15 && (m.c - 0.5).abs() < 1e-15);
        for &tau in &[0.0, 0.25, 0.5, 1.0] {
            let expect = 0.5 * (1.0 + tau) * (1.0 + tau);
            assert!((quad_line_value(&cache, tau) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn line_model_matches_direct_evaluation() {
        let q = Matrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5]);
        let h = Quadratic::new(q, Vector::from_vec(vec![1.0, 0.0, -1.0]), 0.7).unwrap();
        let gamma = 0.6;
        let s_bar = Vector::from_vec(vec![0.4, -1.0, 2.0]);
        let s_d = Vector::from_vec(vec![-0.3, 0.8, 1.1]);
        let ub = h.prox(&s_bar, gamma).unwrap();
        let u0 = h.prox(&s_d, gamma).unwrap();
        let (vb, v0) = (h.value(&ub), h.value(&u0));
        let cache = LinesearchCache::new(&s_bar, ub, u0, vb, v0, gamma);
        for i in 0..=10 {
            let tau = i as f64 / 10.0;
            let direct = h.prox(&((1.0 - tau) * &s_bar + tau * &s_d), gamma).unwrap();
            assert!((cache.blend(tau) - &direct).norm() < 1e-12);
            assert!((cache.line_value(tau) - h.value(&direct)).abs() < 1e-12);
        }
    }

    #[test]
    fn affinity_of_quadratic_and_box() {
        let h = Quadratic::new(Matrix::identity(4, 4) * 2.0, Vector::from_element(4, 1.0), 0.0).unwrap();
        assert!(affinity_validate(&h, 0.5, 50, 3.0, 1).passed);
        let b = BoxIndicator::new(Vector::from_element(4, -1.0), Vector::from_element(4, 1.0)).unwrap();
        assert!(!affinity_validate(&b, 0.5, 50, 3.0, 1).passed);
    }
}
