//! Single-copy column scheme: at most one selection per column, with
//! closed-form availability probabilities and a constant conditional
//! selection rate of `1 / (1 + b)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{clamp_probability, SchemeError};

#[derive(Debug, Clone)]
pub struct SingleCopyColumnScheme {
    b: f64,
    /// `Pr[A_i] = 1 - b/(1+b) * sum_{i' < i} w_{i'}` per arriving row.
    availability: Vec<f64>,
    /// Uniform conditional selection rate: `1/(1+b)`, or 1 when the column
    /// has a single agent and the constraint is vacuous.
    rate: f64,
    taken: bool,
    clamps: u64,
}

/// Build the column scheme from the column's marginal activations
/// `w_{., j}`; requires `sum_i w <= 1`.
pub fn single_copy_column_ocrs(
    b: f64,
    marginals: &[f64],
) -> Result<SingleCopyColumnScheme, SchemeError> {
    if !(0.0..=1.0).contains(&b) {
        return Err(SchemeError::BadParams(format!("b = {b}")));
    }
    let total: f64 = marginals.iter().sum();
    if total > 1.0 + 1e-9 {
        return Err(SchemeError::InfeasibleColumn(0));
    }
    let mut availability = Vec::with_capacity(marginals.len());
    let mut prefix = 0.0;
    for w in marginals {
        availability.push(1.0 - b / (1.0 + b) * prefix);
        prefix += w;
    }
    let rate = if marginals.len() <= 1 { 1.0 } else { 1.0 / (1.0 + b) };
    Ok(SingleCopyColumnScheme { b, availability, rate, taken: false, clamps: 0 })
}

impl SingleCopyColumnScheme {
    pub fn reset(&mut self) {
        self.taken = false;
    }

    /// Offer the element of arriving row `i`; returns the selection decision.
    pub fn offer(&mut self, i: usize, active: bool, rng: &mut ChaCha8Rng) -> bool {
        if !active || self.taken {
            return false;
        }
        if self.rate >= 1.0 {
            self.taken = true;
            return true;
        }
        let p = 1.0 / ((1.0 + self.b) * self.availability[i]);
        debug_assert!(p <= 1.0 + 1e-9, "column normalizer {p}");
        let p = clamp_probability(p, &mut self.clamps);
        if rng.gen::<f64>() < p {
            self.taken = true;
            true
        } else {
            false
        }
    }

    /// Conditional selection probability of every active element.
    pub fn conditional_rate(&self) -> f64 {
        self.rate
    }

    pub fn clamp_count(&self) -> u64 {
        self.clamps
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}
