//! Finite distributions over accumulated weight, the substrate of the exact
//! availability-probability oracles.

use super::SchemeError;

/// Maximum number of configurations an exact oracle may track.
pub const ORACLE_STATE_CAP: usize = 1_000_000;

/// Weights closer than this are merged (they arise from the same subset sum
/// evaluated in different orders).
const MERGE_EPS: f64 = 1e-10;

/// Sparse distribution over accumulated weight, sorted by weight.
#[derive(Debug, Clone)]
pub struct WeightDist {
    pub entries: Vec<(f64, f64)>,
}

impl WeightDist {
    pub fn zero() -> Self {
        Self { entries: vec![(0.0, 1.0)] }
    }

    /// Probability mass on weights strictly below `threshold`.
    pub fn mass_below(&self, threshold: f64) -> f64 {
        self.entries
            .iter()
            .take_while(|(w, _)| *w < threshold)
            .map(|(_, p)| p)
            .sum()
    }

    /// Probability mass on weights at most `threshold`.
    pub fn mass_at_most(&self, threshold: f64) -> f64 {
        self.entries
            .iter()
            .take_while(|(w, _)| *w <= threshold + 1e-12)
            .map(|(_, p)| p)
            .sum()
    }

    /// Rebuild from raw entries: sort, merge near-equal weights, cap check.
    pub fn normalize(mut raw: Vec<(f64, f64)>, scale: f64) -> Result<Self, SchemeError> {
        raw.retain(|(_, p)| *p > 0.0);
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let eps = MERGE_EPS * scale.max(1.0);
        let mut entries: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (w, p) in raw {
            match entries.last_mut() {
                Some((lw, lp)) if (w - *lw).abs() <= eps => *lp += p,
                _ => entries.push((w, p)),
            }
        }
        if entries.len() > ORACLE_STATE_CAP {
            return Err(SchemeError::OracleTooLarge(format!(
                "{} weight states (cap {ORACLE_STATE_CAP})",
                entries.len()
            )));
        }
        Ok(Self { entries })
    }

    /// Mix distributions with the given weights.
    pub fn mix(parts: &[(f64, &WeightDist)], scale: f64) -> Result<Self, SchemeError> {
        let mut raw = Vec::new();
        for (prob, dist) in parts {
            for &(w, p) in &dist.entries {
                raw.push((w, prob * p));
            }
        }
        Self::normalize(raw, scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_queries() {
        let d = WeightDist { entries: vec![(0.0, 0.5), (1.0, 0.3), (2.0, 0.2)] };
        assert!((d.mass_below(1.0) - 0.5).abs() < 1e-15);
        assert!((d.mass_at_most(1.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalize_merges_near_equal() {
        let d = WeightDist::normalize(vec![(1.0, 0.5), (1.0 + 1e-12, 0.5)], 1.0).unwrap();
        assert_eq!(d.entries.len(), 1);
        assert!((d.entries[0].1 - 1.0).abs() < 1e-15);
    }
}
