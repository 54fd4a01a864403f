//! Statistical helpers for Monte Carlo verification: binomial sigma margins,
//! rate accumulators, and a chi-square test against a geometric law.

/// Standard deviation of a Bernoulli(p) mean estimate over `n` samples.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One-sided lower-bound check: passes iff `observed >= bound - sigmas * sd`
/// where the sigma is taken at the bound.
pub fn passes_lower_bound(observed: f64, bound: f64, n: u64, sigmas: f64) -> bool {
    observed >= bound - sigmas * binomial_sigma(bound, n)
}

/// Two-sided equality check at `sigmas` binomial standard deviations.
pub fn within_two_sided(observed: f64, expected: f64, n: u64, sigmas: f64) -> bool {
    (observed - expected).abs() <= sigmas * binomial_sigma(expected, n) + 1e-12
}

/// Success/trial accumulator for conditional rates.
#[derive(Debug, Clone, Copy, Default)]
pub struct RateAccumulator {
    pub hits: u64,
    pub total: u64,
}

impl RateAccumulator {
    pub fn push(&mut self, hit: bool) {
        self.total += 1;
        self.hits += hit as u64;
    }

    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            f64::NAN
        } else {
            self.hits as f64 / self.total as f64
        }
    }

    pub fn merge(&mut self, other: &RateAccumulator) {
        self.hits += other.hits;
        self.total += other.total;
    }
}

/// Upper critical value of the chi-square distribution via the
/// Wilson-Hilferty cube approximation; adequate for the 1% tests here.
pub fn chi_square_critical(dof: usize, alpha: f64) -> f64 {
    let k = dof as f64;
    let z = normal_quantile(1.0 - alpha);
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

/// Standard normal quantile (Acklam's rational approximation).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Chi-square goodness-of-fit of observed counts (values are 1-based round
/// counts) against Geometric(rate): Pr[X = k] = rate (1-rate)^{k-1}.
/// Bins with small expectation are pooled into the tail. Returns
/// (statistic, dof, critical at `alpha`).
pub fn chi_square_geometric(counts: &[u64], rate: f64, alpha: f64) -> (f64, usize, f64) {
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut seen_prob = 0.0;
    let mut pool_obs = 0.0;
    let mut pool_exp = 0.0;
    for (idx, &c) in counts.iter().enumerate() {
        let k = idx + 1;
        let p = rate * (1.0 - rate).powi(k as i32 - 1);
        seen_prob += p;
        pool_obs += c as f64;
        pool_exp += p * nf;
        if pool_exp >= 10.0 {
            bins.push((pool_obs, pool_exp));
            pool_obs = 0.0;
            pool_exp = 0.0;
        }
    }
    // Tail beyond the last recorded count plus any unpooled remainder.
    pool_exp += (1.0 - seen_prob) * nf;
    if pool_exp > 0.0 {
        bins.push((pool_obs, pool_exp));
    }
    let stat: f64 = bins
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = bins.len().saturating_sub(1).max(1);
    (stat, dof, chi_square_critical(dof, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normal_quantile_known_points() {
        assert!((normal_quantile(0.975) - 1.959964).abs() < 1e-4);
        assert!((normal_quantile(0.5)).abs() < 1e-9);
        assert!((normal_quantile(0.99) - 2.326348).abs() < 1e-4);
    }

    #[test]
    fn chi_square_critical_sane() {
        // chi^2_{10, 0.01} ~ 23.21
        let c = chi_square_critical(10, 0.01);
        assert!((c - 23.21).abs() < 0.3, "{c}");
    }

    #[test]
    fn geometric_fit_accepts_geometric_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rate = 0.25;
        let mut counts = vec![0u64; 64];
        for _ in 0..100_000 {
            let mut k = 1usize;
            while rng.gen::<f64>() >= rate {
                k += 1;
            }
            if k <= counts.len() {
                counts[k - 1] += 1;
            }
        }
        let (stat, _dof, crit) = chi_square_geometric(&counts, rate, 0.01);
        assert!(stat < crit, "stat {stat} crit {crit}");
    }

    #[test]
    fn geometric_fit_rejects_wrong_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = vec![0u64; 64];
        for _ in 0..100_000 {
            let mut k = 1usize;
            while rng.gen::<f64>() >= 0.4 {
                k += 1;
            }
            if k <= counts.len() {
                counts[k - 1] += 1;
            }
        }
        let (stat, _dof, crit) = chi_square_geometric(&counts, 0.25, 0.01);
        assert!(stat > crit);
    }
}
