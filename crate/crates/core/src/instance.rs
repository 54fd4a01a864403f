//! Domain types: auction instances, feasibility constraints, and the
//! two-level stochastic processes that drive every scheme in this crate.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for all polytope membership checks.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("probabilities must be nonnegative and sum to 1 (got sum {0})")]
    BadProbabilities(f64),
    #[error("valuation entries must be finite and nonnegative")]
    BadValuation,
    #[error("support vectors must be distinct")]
    DuplicateSupport,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("weight {got} outside [0, {cap}] at ({i}, {j})")]
    BadWeight { i: usize, j: usize, got: f64, cap: f64 },
    #[error("capacity must be positive (got {0})")]
    BadCapacity(f64),
    #[error("activation probability {got} outside [0, 1] at agent {i}, type {d}, item {j}")]
    BadActivation { i: usize, d: usize, j: usize, got: f64 },
    #[error("no linear polytope description registered for this constraint")]
    UnsupportedVariant,
}

/// Finite valuation distribution of one agent: a list of valuation vectors
/// (one value per item, in money units) and their probabilities.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AgentTypeSpace {
    pub support: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

impl AgentTypeSpace {
    pub fn new(support: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self, InstanceError> {
        let ts = Self { support, probs };
        ts.validate(None)?;
        Ok(ts)
    }

    pub fn validate(&self, m: Option<usize>) -> Result<(), InstanceError> {
        if self.support.len() != self.probs.len() || self.support.is_empty() {
            return Err(InstanceError::DimensionMismatch(
                "support and probs must have equal, nonzero length".into(),
            ));
        }
        let sum: f64 = self.probs.iter().sum();
        if self.probs.iter().any(|p| *p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-12 {
            return Err(InstanceError::BadProbabilities(sum));
        }
        for v in &self.support {
            if let Some(m) = m {
                if v.len() != m {
                    return Err(InstanceError::DimensionMismatch(format!(
                        "support vector has length {}, expected {}",
                        v.len(),
                        m
                    )));
                }
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(InstanceError::BadValuation);
            }
        }
        for a in 0..self.support.len() {
            for b in a + 1..self.support.len() {
                if self.support[a] == self.support[b] {
                    return Err(InstanceError::DuplicateSupport);
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Closed enumeration of feasibility constraints over the `[n] x [m]` ground
/// set. Each variant carries an explicit linear description of its polytope,
/// which is what the interim LP and the feasibility checker consume.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "variant")]
pub enum FeasibilityConstraint {
    /// Every item may be allocated to at most one agent.
    SingleCopyPerItem,
    /// Agent `i` may receive at most `limits[i]` items.
    KUniformPerAgent { limits: Vec<usize> },
    /// Total weight of selected cells is at most `capacity`.
    Knapsack { weights: Vec<Vec<f64>>, capacity: f64 },
    /// Knapsack plus at most one selected cell per agent.
    MultiChoiceKnapsack { weights: Vec<Vec<f64>>, capacity: f64 },
    /// Row and column cardinality caps: agent `i` gets at most
    /// `row_limits[i]` items, item `j` goes to at most `col_limits[j]` agents.
    #[serde(rename = "VH")]
    Vh { row_limits: Vec<usize>, col_limits: Vec<usize> },
}

impl FeasibilityConstraint {
    pub fn validate(&self, n: usize, m: usize) -> Result<(), InstanceError> {
        match self {
            FeasibilityConstraint::SingleCopyPerItem => Ok(()),
            FeasibilityConstraint::KUniformPerAgent { limits } => {
                if limits.len() != n {
                    return Err(InstanceError::DimensionMismatch(format!(
                        "need {} per-agent limits, got {}",
                        n,
                        limits.len()
                    )));
                }
                Ok(())
            }
            FeasibilityConstraint::Knapsack { weights, capacity }
            | FeasibilityConstraint::MultiChoiceKnapsack { weights, capacity } => {
                if !capacity.is_finite() || *capacity <= 0.0 {
                    return Err(InstanceError::BadCapacity(*capacity));
                }
                if weights.len() != n || weights.iter().any(|r| r.len() != m) {
                    return Err(InstanceError::DimensionMismatch(format!(
                        "weight matrix must be {}x{}",
                        n, m
                    )));
                }
                for (i, row) in weights.iter().enumerate() {
                    for (j, w) in row.iter().enumerate() {
                        if !w.is_finite() || *w < 0.0 || *w > *capacity {
                            return Err(InstanceError::BadWeight {
                                i,
                                j,
                                got: *w,
                                cap: *capacity,
                            });
                        }
                    }
                }
                Ok(())
            }
            FeasibilityConstraint::Vh { row_limits, col_limits } => {
                if row_limits.len() != n || col_limits.len() != m {
                    return Err(InstanceError::DimensionMismatch(format!(
                        "need {} row limits and {} column limits, got {} and {}",
                        n,
                        m,
                        row_limits.len(),
                        col_limits.len()
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Membership test for a set of selected cells. Downward-closed for every
/// variant (property-tested). Indices out of range are an error, not `false`.
pub fn is_feasible_set(
    constraint: &FeasibilityConstraint,
    n: usize,
    m: usize,
    selected: &[(usize, usize)],
) -> Result<bool, InstanceError> {
    for &(i, j) in selected {
        if i >= n || j >= m {
            return Err(InstanceError::DimensionMismatch(format!(
                "cell ({i}, {j}) outside {n}x{m}"
            )));
        }
    }
    Ok(match constraint {
        FeasibilityConstraint::SingleCopyPerItem => {
            let mut per_item = vec![0usize; m];
            for &(_, j) in selected {
                per_item[j] += 1;
            }
            per_item.iter().all(|c| *c <= 1)
        }
        FeasibilityConstraint::KUniformPerAgent { limits } => {
            let mut per_agent = vec![0usize; n];
            for &(i, _) in selected {
                per_agent[i] += 1;
            }
            per_agent.iter().zip(limits).all(|(c, k)| c <= k)
        }
        FeasibilityConstraint::Knapsack { weights, capacity } => {
            let total: f64 = selected.iter().map(|&(i, j)| weights[i][j]).sum();
            total <= capacity + FEAS_TOL
        }
        FeasibilityConstraint::MultiChoiceKnapsack { weights, capacity } => {
            let mut per_agent = vec![0usize; n];
            for &(i, _) in selected {
                per_agent[i] += 1;
            }
            let total: f64 = selected.iter().map(|&(i, j)| weights[i][j]).sum();
            per_agent.iter().all(|c| *c <= 1) && total <= capacity + FEAS_TOL
        }
        FeasibilityConstraint::Vh { row_limits, col_limits } => {
            let mut per_agent = vec![0usize; n];
            let mut per_item = vec![0usize; m];
            for &(i, j) in selected {
                per_agent[i] += 1;
                per_item[j] += 1;
            }
            per_agent.iter().zip(row_limits).all(|(c, k)| c <= k)
                && per_item.iter().zip(col_limits).all(|(c, k)| c <= k)
        }
    })
}

/// An auction instance: `n` agents with finite correlated type supports,
/// `m` items, and a feasibility constraint over allocations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AuctionInstance {
    pub n: usize,
    pub m: usize,
    pub agents: Vec<AgentTypeSpace>,
    pub constraint: FeasibilityConstraint,
}

impl AuctionInstance {
    pub fn new(
        agents: Vec<AgentTypeSpace>,
        m: usize,
        constraint: FeasibilityConstraint,
    ) -> Result<Self, InstanceError> {
        let inst = Self { n: agents.len(), m, agents, constraint };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.agents.len() != self.n {
            return Err(InstanceError::DimensionMismatch(format!(
                "n = {} but {} agents given",
                self.n,
                self.agents.len()
            )));
        }
        for ts in &self.agents {
            ts.validate(Some(self.m))?;
        }
        self.constraint.validate(self.n, self.m)
    }

    /// Number of types of agent `i`.
    pub fn support_size(&self, i: usize) -> usize {
        self.agents[i].len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, InstanceError> {
        let inst: Self = serde_json::from_str(s)
            .map_err(|e| InstanceError::DimensionMismatch(format!("bad instance JSON: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }
}

/// A two-level stochastic process `(D, x)`: row `i` draws a type index
/// `d_i ~ row_dists[i]`, then cell `(i, j)` activates independently with
/// probability `activation[i][d_i][j]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TwoLevelProcess {
    /// One finite distribution over row-type indices per row.
    pub row_dists: Vec<Vec<f64>>,
    /// `activation[i][d][j]` in [0, 1].
    pub activation: Vec<Vec<Vec<f64>>>,
}

impl TwoLevelProcess {
    pub fn new(
        row_dists: Vec<Vec<f64>>,
        activation: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, InstanceError> {
        let p = Self { row_dists, activation };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.row_dists.len() != self.activation.len() {
            return Err(InstanceError::DimensionMismatch(
                "row_dists and activation must agree on row count".into(),
            ));
        }
        let m = self.items();
        for (i, (dist, rows)) in self.row_dists.iter().zip(&self.activation).enumerate() {
            let sum: f64 = dist.iter().sum();
            if dist.iter().any(|p| *p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-12 {
                return Err(InstanceError::BadProbabilities(sum));
            }
            if dist.len() != rows.len() {
                return Err(InstanceError::DimensionMismatch(format!(
                    "agent {i}: {} type probabilities but {} activation rows",
                    dist.len(),
                    rows.len()
                )));
            }
            for (d, row) in rows.iter().enumerate() {
                if row.len() != m {
                    return Err(InstanceError::DimensionMismatch(format!(
                        "agent {i}, type {d}: activation row length {} != {}",
                        row.len(),
                        m
                    )));
                }
                for (j, x) in row.iter().enumerate() {
                    if !x.is_finite() || *x < -FEAS_TOL || *x > 1.0 + FEAS_TOL {
                        return Err(InstanceError::BadActivation { i, d, j, got: *x });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.row_dists.len()
    }

    pub fn items(&self) -> usize {
        self.activation
            .first()
            .and_then(|rows| rows.first())
            .map_or(0, |r| r.len())
    }

    /// Marginal activation probability `w_{i,j} = sum_d Pr[d] x_{i,j}(d)`.
    pub fn marginal(&self, i: usize, j: usize) -> f64 {
        self.row_dists[i]
            .iter()
            .zip(&self.activation[i])
            .map(|(p, row)| p * row[j])
            .sum()
    }

    pub fn marginal_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.items()).map(|j| self.marginal(i, j)).collect())
            .collect()
    }
}

/// The realized activation matrix of one draw from `(D, b x)`, together with
/// the row types that generated it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    pub active: Vec<Vec<bool>>,
    pub row_types: Vec<usize>,
}

impl ActiveSet {
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.active.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(j, a)| a.then_some((i, j)))
        })
    }
}

/// Draw a categorical index from `probs` (which sums to 1).
pub fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (idx, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return idx;
        }
    }
    probs.len() - 1
}

/// Sample `R(D, b x)`: row types first, then independent cell activations
/// scaled by `b`.
pub fn sample_active_set(process: &TwoLevelProcess, b: f64, rng: &mut ChaCha8Rng) -> ActiveSet {
    debug_assert!((0.0..=1.0).contains(&b));
    let m = process.items();
    let mut row_types = Vec::with_capacity(process.rows());
    let mut active = Vec::with_capacity(process.rows());
    for i in 0..process.rows() {
        let d = sample_index(&process.row_dists[i], rng);
        row_types.push(d);
        let x = &process.activation[i][d];
        active.push((0..m).map(|j| rng.gen::<f64>() < b * x[j]).collect());
    }
    ActiveSet { active, row_types }
}

/// One linear inequality of a polytope description, reported with its slack.
#[derive(Debug, Clone, Serialize)]
pub struct SlackRow {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative means violated.
    pub slack: f64,
}

/// Report from [`check_process_feasibility`].
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub rows: Vec<SlackRow>,
}

impl FeasibilityReport {
    pub fn worst_violation(&self) -> f64 {
        self.rows.iter().map(|r| -r.slack).fold(0.0, f64::max)
    }
}

/// Check that a two-level process is feasible for `constraint`: every
/// conditional row vector lies in the row polytope and the marginal matrix
/// lies in the full polytope, via the registered linear inequalities.
pub fn check_process_feasibility(
    process: &TwoLevelProcess,
    constraint: &FeasibilityConstraint,
) -> Result<FeasibilityReport, InstanceError> {
    let n = process.rows();
    let m = process.items();
    constraint.validate(n, m)?;
    let mut rows = Vec::new();
    let mut push = |label: String, lhs: f64, rhs: f64| {
        rows.push(SlackRow { label, lhs, rhs, slack: rhs - lhs });
    };

    match constraint {
        FeasibilityConstraint::SingleCopyPerItem => {
            for j in 0..m {
                let lhs: f64 = (0..n).map(|i| process.marginal(i, j)).sum();
                push(format!("item {j}: sum_i w <= 1"), lhs, 1.0);
            }
        }
        FeasibilityConstraint::KUniformPerAgent { limits } => {
            for i in 0..n {
                for (d, x) in process.activation[i].iter().enumerate() {
                    let lhs: f64 = x.iter().sum();
                    push(format!("agent {i} type {d}: sum_j x <= k"), lhs, limits[i] as f64);
                }
            }
        }
        FeasibilityConstraint::Knapsack { weights, capacity } => {
            for i in 0..n {
                for (d, x) in process.activation[i].iter().enumerate() {
                    let lhs: f64 = x.iter().zip(&weights[i]).map(|(x, k)| x * k).sum();
                    push(format!("agent {i} type {d}: sum_j x k <= K"), lhs, *capacity);
                }
            }
            let lhs: f64 = (0..n)
                .map(|i| {
                    (0..m)
                        .map(|j| process.marginal(i, j) * weights[i][j])
                        .sum::<f64>()
                })
                .sum();
            push("marginal: sum_ij w k <= K".into(), lhs, *capacity);
        }
        FeasibilityConstraint::MultiChoiceKnapsack { weights, capacity } => {
            for i in 0..n {
                for (d, x) in process.activation[i].iter().enumerate() {
                    let lhs: f64 = x.iter().sum();
                    push(format!("agent {i} type {d}: sum_j x <= 1"), lhs, 1.0);
                    let wk: f64 = x.iter().zip(&weights[i]).map(|(x, k)| x * k).sum();
                    push(format!("agent {i} type {d}: sum_j x k <= K"), wk, *capacity);
                }
            }
            let lhs: f64 = (0..n)
                .map(|i| {
                    (0..m)
                        .map(|j| process.marginal(i, j) * weights[i][j])
                        .sum::<f64>()
                })
                .sum();
            push("marginal: sum_ij w k <= K".into(), lhs, *capacity);
        }
        FeasibilityConstraint::Vh { row_limits, col_limits } => {
            for i in 0..n {
                for (d, x) in process.activation[i].iter().enumerate() {
                    let lhs: f64 = x.iter().sum();
                    push(format!("agent {i} type {d}: sum_j x <= k"), lhs, row_limits[i] as f64);
                }
            }
            for j in 0..m {
                let lhs: f64 = (0..n).map(|i| process.marginal(i, j)).sum();
                push(format!("item {j}: sum_i w <= c"), lhs, col_limits[j] as f64);
            }
        }
    }

    let feasible = rows.iter().all(|r| r.slack >= -FEAS_TOL);
    Ok(FeasibilityReport { feasible, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn type_space_rejects_bad_probs() {
        assert!(AgentTypeSpace::new(vec![vec![1.0], vec![2.0]], vec![0.5, 0.6]).is_err());
        assert!(AgentTypeSpace::new(vec![vec![1.0], vec![2.0]], vec![0.5, -0.5]).is_err());
        assert!(AgentTypeSpace::new(vec![vec![1.0], vec![1.0]], vec![0.5, 0.5]).is_err());
        assert!(AgentTypeSpace::new(vec![vec![1.0], vec![2.0]], vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn zero_activation_gives_empty_set() {
        let p = TwoLevelProcess::new(vec![vec![1.0]], vec![vec![vec![0.0, 0.0]]]).unwrap();
        let mut r = rng(1);
        for _ in 0..100 {
            let s = sample_active_set(&p, 1.0, &mut r);
            assert_eq!(s.cells().count(), 0);
        }
    }

    #[test]
    fn unit_activation_is_deterministic() {
        let p = TwoLevelProcess::new(vec![vec![1.0]], vec![vec![vec![1.0]]]).unwrap();
        let mut r = rng(2);
        for _ in 0..100 {
            let s = sample_active_set(&p, 1.0, &mut r);
            assert!(s.active[0][0]);
        }
    }

    #[test]
    fn half_activation_rate_matches_bernoulli_law() {
        let p = TwoLevelProcess::new(vec![vec![1.0]], vec![vec![vec![0.5]]]).unwrap();
        let mut r = rng(3);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| sample_active_set(&p, 1.0, &mut r).active[0][0])
            .count();
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.5).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn b_scaling_matches_marginal() {
        // Two row types with different activations; empirical rate = b * w.
        let p = TwoLevelProcess::new(
            vec![vec![0.3, 0.7]],
            vec![vec![vec![0.2], vec![0.8]]],
        )
        .unwrap();
        let w = p.marginal(0, 0);
        assert!((w - (0.3 * 0.2 + 0.7 * 0.8)).abs() < 1e-15);
        let b = 0.6;
        let mut r = rng(4);
        let trials = 200_000;
        let hits = (0..trials)
            .filter(|_| sample_active_set(&p, b, &mut r).active[0][0])
            .count();
        let rate = hits as f64 / trials as f64;
        let sigma = (b * w * (1.0 - b * w) / trials as f64).sqrt();
        assert!((rate - b * w).abs() < 3.0 * sigma + 1e-3, "rate {rate} vs {}", b * w);
    }

    #[test]
    fn rows_activate_independently() {
        // Empirical covariance of indicators in different rows ~ 0.
        let p = TwoLevelProcess::new(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![
                vec![vec![0.1], vec![0.9]],
                vec![vec![0.9], vec![0.1]],
            ],
        )
        .unwrap();
        let mut r = rng(5);
        let trials = 100_000;
        let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
        for _ in 0..trials {
            let s = sample_active_set(&p, 1.0, &mut r);
            let x = s.active[0][0] as u8 as f64;
            let y = s.active[1][0] as u8 as f64;
            a += x;
            b += y;
            ab += x * y;
        }
        let t = trials as f64;
        let cov = ab / t - (a / t) * (b / t);
        // var of each indicator is ~0.25; 3 sigma for the empirical covariance
        let sigma = (0.25 * 0.25 / t).sqrt() * 3.0 + 3e-3;
        assert!(cov.abs() < sigma, "cov {cov}");
    }

    #[test]
    fn knapsack_membership() {
        let c = FeasibilityConstraint::Knapsack {
            weights: vec![vec![6.0], vec![6.0]],
            capacity: 10.0,
        };
        assert!(!is_feasible_set(&c, 2, 1, &[(0, 0), (1, 0)]).unwrap());
        assert!(is_feasible_set(&c, 2, 1, &[(0, 0)]).unwrap());
        assert!(is_feasible_set(&c, 2, 1, &[]).unwrap());
    }

    #[test]
    fn empty_set_feasible_for_all_variants() {
        let variants: Vec<FeasibilityConstraint> = vec![
            FeasibilityConstraint::SingleCopyPerItem,
            FeasibilityConstraint::KUniformPerAgent { limits: vec![1, 1] },
            FeasibilityConstraint::Knapsack { weights: vec![vec![1.0, 1.0]; 2], capacity: 1.0 },
            FeasibilityConstraint::MultiChoiceKnapsack {
                weights: vec![vec![1.0, 1.0]; 2],
                capacity: 1.0,
            },
            FeasibilityConstraint::Vh { row_limits: vec![1, 1], col_limits: vec![1, 1] },
        ];
        for c in variants {
            assert!(is_feasible_set(&c, 2, 2, &[]).unwrap());
        }
    }

    #[test]
    fn multichoice_rejects_two_cells_in_a_row() {
        let c = FeasibilityConstraint::MultiChoiceKnapsack {
            weights: vec![vec![1.0, 1.0]],
            capacity: 10.0,
        };
        assert!(!is_feasible_set(&c, 1, 2, &[(0, 0), (0, 1)]).unwrap());
        assert!(is_feasible_set(&c, 1, 2, &[(0, 1)]).unwrap());
    }

    #[test]
    fn out_of_range_cell_is_an_error() {
        let c = FeasibilityConstraint::SingleCopyPerItem;
        assert!(is_feasible_set(&c, 2, 2, &[(2, 0)]).is_err());
    }

    #[test]
    fn process_feasibility_boundary_and_violation() {
        let c = FeasibilityConstraint::Knapsack { weights: vec![vec![1.0]], capacity: 1.0 };
        let p = TwoLevelProcess::new(vec![vec![1.0]], vec![vec![vec![1.0]]]).unwrap();
        let rep = check_process_feasibility(&p, &c).unwrap();
        assert!(rep.feasible);
        assert!(rep.worst_violation() <= 0.0 + 1e-12);

        let c2 = FeasibilityConstraint::Knapsack {
            weights: vec![vec![1.0], vec![1.0]],
            capacity: 1.0,
        };
        let p2 = TwoLevelProcess::new(
            vec![vec![1.0], vec![1.0]],
            vec![vec![vec![0.6]], vec![vec![0.6]]],
        )
        .unwrap();
        let rep2 = check_process_feasibility(&p2, &c2).unwrap();
        assert!(!rep2.feasible);
        assert!((rep2.worst_violation() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = AuctionInstance::new(
            vec![
                AgentTypeSpace::new(vec![vec![1.0, 0.0], vec![2.0, 1.0]], vec![0.5, 0.5]).unwrap(),
            ],
            2,
            FeasibilityConstraint::Vh { row_limits: vec![1], col_limits: vec![1, 1] },
        )
        .unwrap();
        let back = AuctionInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, back);
    }
}
