//! Chernoff-calibrated event probability estimation.

use rand_chacha::ChaCha8Rng;

/// Repetition count `T = ceil(log(2 n_elems / delta) / (2 eps^2))`.
pub fn estimation_repetitions(eps: f64, delta: f64, n_elems: usize) -> u64 {
    assert!(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0);
    ((2.0 * n_elems as f64 / delta).ln() / (2.0 * eps * eps)).ceil() as u64
}

/// Running estimator for one target event, with its conditioning frozen by
/// the caller (branch choice, row type).
#[derive(Debug, Clone)]
pub struct EventEstimator {
    pub label: String,
    pub repetitions: u64,
    pub successes: u64,
}

impl EventEstimator {
    pub fn new(label: impl Into<String>, eps: f64, delta: f64, n_elems: usize) -> Self {
        Self {
            label: label.into(),
            repetitions: estimation_repetitions(eps, delta, n_elems),
            successes: 0,
        }
    }

    pub fn push(&mut self, hit: bool) {
        self.successes += hit as u64;
    }

    pub fn estimate(&self) -> f64 {
        self.successes as f64 / self.repetitions as f64
    }
}

/// Run `T` independent simulations of an event and return the sample mean;
/// callers use `mean + eps` as the one-sided surrogate for the true
/// probability.
pub fn estimate_event_probability<F: FnMut(&mut ChaCha8Rng) -> bool>(
    mut simulator: F,
    eps: f64,
    delta: f64,
    n_elems: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, u64) {
    let t = estimation_repetitions(eps, delta, n_elems);
    let mut hits = 0u64;
    for _ in 0..t {
        hits += simulator(rng) as u64;
    }
    (hits as f64 / t as f64, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn repetition_formula() {
        // eps = 0.1, delta = 0.01, n m = 4 -> ceil(50 ln 800) = 335
        assert_eq!(estimation_repetitions(0.1, 0.01, 4), 335);
    }

    #[test]
    fn sure_event_estimates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (est, t) = estimate_event_probability(|_| true, 0.1, 0.01, 4, &mut rng);
        assert_eq!(est, 1.0);
        assert_eq!(t, 335);
    }
}
