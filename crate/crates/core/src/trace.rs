//! Per-iteration records and oracle counters shared by both drivers.

use serde::Serialize;

use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
}

/// Oracle call counts. For ADMM, `prox1` counts x-steps and `prox2` counts
/// z-steps; `value1`/`value2` count `f`/`g` evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub prox1: usize,
    pub prox2: usize,
    pub value1: usize,
    pub value2: usize,
}

impl Counters {
    pub fn total_prox(&self) -> usize {
        self.prox1 + self.prox2
    }
}

impl std::ops::Add for Counters {
    type Output = Counters;

    fn add(self, o: Counters) -> Counters {
        Counters {
            prox1: self.prox1 + o.prox1,
            prox2: self.prox2 + o.prox2,
            value1: self.value1 + o.value1,
            value2: self.value2 + o.value2,
        }
    }
}

impl std::ops::Sub for Counters {
    type Output = Counters;

    fn sub(self, o: Counters) -> Counters {
        Counters {
            prox1: self.prox1 - o.prox1,
            prox2: self.prox2 - o.prox2,
            value1: self.value1 - o.value1,
            value2: self.value2 - o.value2,
        }
    }
}

/// One outer iteration `k → k+1`.
///
/// `merit` and `res_norm` describe the current iterate at the step parameter
/// `step` in force when the step was taken (after any adaptive adjustment);
/// `merit_next` is the merit of the accepted next iterate at the same step.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub res_norm: f64,
    pub merit: f64,
    pub merit_next: f64,
    /// γ for DRS, β for ADMM.
    pub step: f64,
    /// Decrease constant `c` used in the acceptance test.
    pub c: f64,
    pub tau: f64,
    pub backtracks: usize,
    /// Nominal step taken after `i_max` rejected trials.
    pub fallback: bool,
    /// Calls spent inside this iteration's linesearch (excluding adaptive
    /// restarts, which are reported separately).
    pub calls: Counters,
    /// Calls spent recomputing the current iterate after step adjustments.
    pub restart_calls: Counters,
    /// Cumulative calls up to and including this iteration.
    pub cumulative: Counters,
    pub elapsed_s: f64,
    /// `s^k` (DRS) or its image under the ADMM-to-DRS map, when requested.
    #[serde(skip)]
    pub iterate: Option<Vector>,
    /// `d^k` when iterates are recorded.
    #[serde(skip)]
    pub direction: Option<Vector>,
}
