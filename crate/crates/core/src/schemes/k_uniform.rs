//! k-uniform row scheme: at most `k` selections in one row, with exact
//! availability probabilities from a count dynamic program and the largest
//! uniform conditional rate `alpha` that keeps every normalizer valid.
//!
//! The floor `alpha >= 1/(1+b)` always holds (Markov on the selection count);
//! the calibrated value is reported as the scheme's constant.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{clamp_probability, SchemeError};

#[derive(Debug, Clone)]
pub struct KUniformRowScheme {
    b: f64,
    limit: usize,
    /// Calibrated uniform conditional selection rate.
    alpha: f64,
    /// `availability[d][j] = Pr[fewer than k selected before j | row type d]`
    /// under the calibrated alpha.
    availability: Vec<Vec<f64>>,
    activation: Vec<Vec<f64>>,
    selected_count: usize,
    row_type: usize,
    clamps: u64,
}

/// Availability table for a candidate alpha; `None` when some normalizer
/// would exceed 1.
fn availability_for(
    alpha: f64,
    b: f64,
    limit: usize,
    activation: &[Vec<f64>],
) -> Option<Vec<Vec<f64>>> {
    let mut tables = Vec::with_capacity(activation.len());
    for x_row in activation {
        let m = x_row.len();
        // state distribution over number of selected elements, 0..=limit
        let mut counts = vec![0.0; limit + 1];
        counts[0] = 1.0;
        let mut avail_row = Vec::with_capacity(m);
        for &x in x_row {
            let avail: f64 = counts[..limit].iter().sum();
            avail_row.push(avail);
            if alpha > avail + 1e-12 {
                return None;
            }
            // selection probability for states below the cap
            let rho = if avail > 0.0 { b * x * alpha / avail } else { 0.0 };
            if rho > 1.0 + 1e-9 {
                return None;
            }
            let rho = rho.min(1.0);
            let mut next = vec![0.0; limit + 1];
            for s in 0..=limit {
                if s < limit {
                    next[s] += counts[s] * (1.0 - rho);
                    next[s + 1] += counts[s] * rho;
                } else {
                    next[s] += counts[s];
                }
            }
            counts = next;
        }
        tables.push(avail_row);
    }
    Some(tables)
}

/// Build the row scheme for agent rows with limit `k` and per-type
/// activations `x[d][j]`; requires every row vector to satisfy
/// `sum_j x <= k`.
pub fn k_uniform_row_ocrs(
    b: f64,
    k: usize,
    activation: &[Vec<f64>],
) -> Result<KUniformRowScheme, SchemeError> {
    if !(0.0..=1.0).contains(&b) || k == 0 {
        return Err(SchemeError::BadParams(format!("b = {b}, k = {k}")));
    }
    let m = activation.first().map_or(0, |r| r.len());
    for row in activation {
        let sum: f64 = row.iter().sum();
        if sum > k as f64 + 1e-9 {
            return Err(SchemeError::InfeasibleRow(0));
        }
    }
    if k >= m {
        // Unconstrained row: select everything active.
        return Ok(KUniformRowScheme {
            b,
            limit: k,
            alpha: 1.0,
            availability: activation.iter().map(|r| vec![1.0; r.len()]).collect(),
            activation: activation.to_vec(),
            selected_count: 0,
            row_type: 0,
            clamps: 0,
        });
    }
    // Largest uniform alpha with all normalizers valid, by bisection; the
    // availability table shrinks as alpha grows, so validity is monotone.
    let mut lo = 1.0 / (1.0 + b);
    let mut hi = 1.0;
    if availability_for(hi, b, k, activation).is_some() {
        lo = hi;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if availability_for(mid, b, k, activation).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let alpha = lo;
    let availability = availability_for(alpha, b, k, activation)
        .ok_or_else(|| SchemeError::InternalProbability("k-uniform alpha floor".into()))?;
    Ok(KUniformRowScheme {
        b,
        limit: k,
        alpha,
        availability,
        activation: activation.to_vec(),
        selected_count: 0,
        row_type: 0,
        clamps: 0,
    })
}

impl KUniformRowScheme {
    pub fn reset(&mut self) {
        self.selected_count = 0;
    }

    pub fn set_row_type(&mut self, d: usize) {
        self.row_type = d;
    }

    pub fn offer(&mut self, j: usize, active: bool, rng: &mut ChaCha8Rng) -> bool {
        if !active || self.selected_count >= self.limit {
            return false;
        }
        if self.alpha >= 1.0 {
            self.selected_count += 1;
            return true;
        }
        let avail = self.availability[self.row_type][j];
        let p = clamp_probability(self.alpha / avail, &mut self.clamps);
        if rng.gen::<f64>() < p {
            self.selected_count += 1;
            true
        } else {
            false
        }
    }

    /// Calibrated conditional selection rate (exact, uniform over elements).
    pub fn conditional_rate(&self) -> f64 {
        self.alpha
    }

    pub fn clamp_count(&self) -> u64 {
        self.clamps
    }

    pub fn activation(&self) -> &[Vec<f64>] {
        &self.activation
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn unconstrained_row_selects_everything() {
        let s = k_uniform_row_ocrs(1.0, 3, &[vec![0.9, 0.9, 0.9]]).unwrap();
        assert_eq!(s.conditional_rate(), 1.0);
    }

    #[test]
    fn rejects_infeasible_row() {
        assert!(k_uniform_row_ocrs(1.0, 1, &[vec![0.7, 0.7]]).is_err());
    }

    #[test]
    fn alpha_floor_holds() {
        let s = k_uniform_row_ocrs(1.0, 1, &[vec![0.5, 0.5]]).unwrap();
        assert!(s.conditional_rate() >= 0.5 - 1e-9, "alpha {}", s.conditional_rate());
        let s2 = k_uniform_row_ocrs(0.5, 1, &[vec![0.4, 0.6]]).unwrap();
        assert!(s2.conditional_rate() >= 1.0 / 1.5 - 1e-9);
    }

    /// Independent oracle: enumerate every activation pattern analytically,
    /// taking the scheme's per-element coin probabilities as given, and
    /// compute both the availability marginals and the conditional selection
    /// rates by exhaustive expansion over selection histories.
    fn enumeration_oracle(
        b: f64,
        k: usize,
        x: &[f64],
        coin: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let m = x.len();
        let mut avail = vec![0.0; m];
        let mut selected = vec![0.0; m];
        // state: probability over number selected so far, expanded pattern by
        // pattern (activations resolved element-by-element, so a plain DP
        // over counts is exhaustive).
        let mut counts = vec![0.0; k + 1];
        counts[0] = 1.0;
        for j in 0..m {
            avail[j] = counts[..k].iter().sum();
            let mut next = vec![0.0; k + 1];
            for (s, &p) in counts.iter().enumerate() {
                if s < k {
                    let sel = b * x[j] * coin[j];
                    next[s + 1] += p * sel;
                    next[s] += p * (1.0 - sel);
                    selected[j] += p * sel;
                } else {
                    next[s] += p;
                }
            }
            counts = next;
        }
        // conditional on active: activation is independent of the past
        let rates = (0..m).map(|j| selected[j] / (b * x[j])).collect();
        (avail, rates)
    }

    #[test]
    fn one_uniform_rate_matches_exhaustive_enumeration() {
        let (b, k) = (1.0, 1usize);
        let x = vec![0.3, 0.4, 0.3];
        let scheme = k_uniform_row_ocrs(b, k, &[x.clone()]).unwrap();
        let alpha = scheme.conditional_rate();
        assert!(alpha >= 0.5 - 1e-9);
        let coin: Vec<f64> =
            (0..3).map(|j| alpha / scheme.availability[0][j]).collect();
        let (avail, rates) = enumeration_oracle(b, k, &x, &coin);
        for j in 0..3 {
            assert!(
                (avail[j] - scheme.availability[0][j]).abs() < 1e-12,
                "avail {j}: {} vs {}",
                avail[j],
                scheme.availability[0][j]
            );
            assert!((rates[j] - alpha).abs() < 1e-9, "rate {} vs alpha {alpha}", rates[j]);
        }
    }

    #[test]
    fn monte_carlo_conditional_rate_at_b_half() {
        let (b, k) = (0.5, 2usize);
        let x = vec![0.9, 0.5, 0.6];
        let mut scheme = k_uniform_row_ocrs(b, k, &[x.clone()]).unwrap();
        let alpha = scheme.conditional_rate();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 200_000;
        let mut active = vec![0u64; 3];
        let mut sel = vec![0u64; 3];
        for _ in 0..trials {
            scheme.reset();
            scheme.set_row_type(0);
            for j in 0..3 {
                let a = rng.gen::<f64>() < b * x[j];
                let s = scheme.offer(j, a, &mut rng);
                active[j] += a as u64;
                sel[j] += s as u64;
            }
        }
        for j in 0..3 {
            let rate = sel[j] as f64 / active[j] as f64;
            let sd = (alpha * (1.0 - alpha) / active[j] as f64).sqrt();
            assert!((rate - alpha).abs() < 4.0 * sd + 1e-3, "j={j} rate {rate} alpha {alpha}");
        }
        assert!(alpha >= 0.5);
        assert_eq!(scheme.clamp_count(), 0);
    }
}
