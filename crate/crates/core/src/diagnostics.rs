//! Tail diagnostics for superlinear convergence of a recorded trace.

use crate::trace::IterationRecord;
use crate::Vector;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuperlinearDiagnostics {
    /// `‖s^k + d^k − s⋆‖ / ‖s^k − s⋆‖` per iteration.
    pub direction_ratios: Vec<f64>,
    /// `‖s^{k+1} − s⋆‖ / ‖s^k − s⋆‖` per iteration.
    pub convergence_ratios: Vec<f64>,
    /// Fraction of the last `tail` iterations that accepted `τ = 1`.
    pub unit_step_fraction: f64,
    pub tail: usize,
}

/// Needs a trace recorded with iterates. `final_point` is the last iterate of
/// the run (the point the trace converged to); `s_star` defaults to it.
/// Iterations where `s^k = s⋆` are skipped.
pub fn superlinear_diagnostics(
    trace: &[IterationRecord],
    final_point: &Vector,
    s_star: Option<&Vector>,
    tail: usize,
) -> SuperlinearDiagnostics {
    if trace.is_empty() {
        return SuperlinearDiagnostics::default();
    }
    let star = s_star.unwrap_or(final_point);
    let mut points: Vec<&Vector> = trace.iter().filter_map(|r| r.iterate.as_ref()).collect();
    points.push(final_point);
    let mut direction_ratios = Vec::new();
    let mut convergence_ratios = Vec::new();
    for (k, rec) in trace.iter().enumerate() {
        let (Some(s), Some(d)) = (&rec.iterate, &rec.direction) else {
            continue;
        };
        let dist = (s - star).norm();
        if dist == 0.0 {
            continue;
        }
        direction_ratios.push((s + d - star).norm() / dist);
        if let Some(next) = points.get(k + 1) {
            convergence_ratios.push((*next - star).norm() / dist);
        }
    }
    let tail = tail.min(trace.len());
    let unit = trace[trace.len() - tail..].iter().filter(|r| r.tau == 1.0).count();
    SuperlinearDiagnostics {
        direction_ratios,
        convergence_ratios,
        unit_step_fraction: if tail == 0 { 0.0 } else { unit as f64 / tail as f64 },
        tail,
    }
}
