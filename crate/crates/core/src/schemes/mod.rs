//! Contention resolution schemes: the vertical-horizontal composition, the
//! knapsack and multi-choice knapsack two-level schemes, the stochastic
//! knapsack scheme, single-copy column and k-uniform row building blocks,
//! and the Chernoff estimation machinery for availability probabilities.

mod estimator;
mod k_uniform;
mod knapsack;
mod multichoice;
mod single_copy;
mod stochastic;
mod vh;
mod wdist;

pub use estimator::{estimate_event_probability, estimation_repetitions, EventEstimator};
pub use k_uniform::{k_uniform_row_ocrs, KUniformRowScheme};
pub use knapsack::{knapsack_tocrs, KnapsackScheme};
pub use multichoice::{multichoice_knapsack_tocrs, MultiChoiceScheme};
pub use single_copy::{single_copy_column_ocrs, SingleCopyColumnScheme};
pub use stochastic::{
    stochastic_knapsack_ocrs, StochasticKnapsackInstance, StochasticKnapsackScheme,
};
pub use vh::{vh_compose, VhScheme};

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::ActiveSet;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("process infeasible for the target constraint: {0}")]
    InfeasibleProcess(String),
    #[error("row {0} violates its row constraint")]
    InfeasibleRow(usize),
    #[error("column marginals exceed 1 for column {0}")]
    InfeasibleColumn(usize),
    #[error("b mismatch between composed sides: {0} vs {1}")]
    BMismatch(f64, f64),
    #[error("oracle state space too large: {0}")]
    OracleTooLarge(String),
    #[error("bad scheme parameters: {0}")]
    BadParams(String),
    #[error("internal probability out of range ({0}); this signals a scheme bug")]
    InternalProbability(String),
}

/// How availability probabilities are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbMode {
    /// Exact values from enumeration / dynamic programming.
    Oracle,
    /// Monte Carlo estimates with Chernoff-calibrated repetition counts;
    /// the scheme selects with `1 / (normalizer * (estimate + eps))`.
    Estimated { eps: f64, delta: f64, seed: u64 },
}

/// A stateful online selector over a two-level ground set. Elements arrive
/// in row batches: agents in index order, items in index order within an
/// agent. Selections are irrevocable.
pub trait TwoLevelScheme {
    /// Start a new run: clears online state and redraws scheme-level
    /// randomness (e.g. the heavy/light branch).
    fn reset(&mut self, rng: &mut ChaCha8Rng);
    /// Announce the realized row type before the row's elements arrive.
    fn begin_row(&mut self, i: usize, row_type: usize);
    /// Offer element `(i, j)`; returns whether the scheme selects it.
    fn offer(&mut self, i: usize, j: usize, active: bool, rng: &mut ChaCha8Rng) -> bool;
    /// Elements selected so far in this run.
    fn selected(&self) -> &[(usize, usize)];
    /// Declared guarantee `(b, c)`.
    fn guarantee(&self) -> (f64, f64);
    /// Exact conditional selection probability `p*` for an active element,
    /// when the scheme knows it in closed form (oracle modes).
    fn pstar(&self, i: usize, j: usize, row_type: usize) -> Option<f64>;
    /// Number of times an internal selection probability had to be clamped
    /// into [0, 1] (possible under estimation noise only).
    fn clamp_count(&self) -> u64;
    fn rows(&self) -> usize;
    fn items(&self) -> usize;
}

/// Feed a realized active set through a scheme in the canonical arrival
/// order and return the selected set.
pub fn run_scheme(
    scheme: &mut dyn TwoLevelScheme,
    active: &ActiveSet,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    scheme.reset(rng);
    for (i, row) in active.active.iter().enumerate() {
        scheme.begin_row(i, active.row_types[i]);
        for (j, &a) in row.iter().enumerate() {
            scheme.offer(i, j, a, rng);
        }
    }
    scheme.selected().to_vec()
}

/// Clamp a selection probability into [0, 1]. Material overshoots (beyond
/// floating-point slack) are counted; they can only arise from estimation
/// noise.
pub(crate) fn clamp_probability(p: f64, clamps: &mut u64) -> f64 {
    if p > 1.0 + 1e-9 {
        *clamps += 1;
    }
    p.clamp(0.0, 1.0)
}
