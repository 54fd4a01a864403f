//! Multi-choice knapsack two-level OCRS: heavy scheme with probability
//! `(1+4b)/(2+7b)` (single selection, same closed-form availability as the
//! knapsack heavy scheme), light scheme with probability `(1+3b)/(2+7b)`
//! gated on total light weight below half capacity and no prior selection in
//! the row; the joint gate probability uses the identity
//! `Pr[B_i and C_{i,j}(d)] = Pr[B_i] - b/(1+3b) * sum_{j'<j, light} x_{i,j'}(d)`.
//! Guarantee `(b, 1/(2+7b))` in oracle mode.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::knapsack::heavy_availability;
use super::wdist::WeightDist;
use super::{clamp_probability, estimation_repetitions, ProbMode, SchemeError, TwoLevelScheme};
use crate::instance::{
    check_process_feasibility, sample_index, FeasibilityConstraint, TwoLevelProcess,
};

pub struct MultiChoiceScheme {
    b: f64,
    weights: Vec<Vec<f64>>,
    capacity: f64,
    heavy: Vec<Vec<bool>>,
    activation: Vec<Vec<Vec<f64>>>,
    /// Heavy availabilities `Pr[A_{i,j}(d)]` (normalizer 1+4b).
    pr_a: Vec<Vec<Vec<f64>>>,
    /// `Pr[B_i]` per agent: exact in oracle mode, the raw estimate in
    /// estimated mode (the `+ eps` enters the joint-gate denominator).
    pr_b: Vec<f64>,
    mode: ProbMode,
    declared_c: f64,
    heavy_branch_prob: f64,
    branch_heavy: bool,
    selected: Vec<(usize, usize)>,
    light_weight: f64,
    light_prefix: f64,
    row_selected: bool,
    heavy_taken: bool,
    row_types: Vec<usize>,
    clamps: u64,
}

/// Light first-selection probabilities for one row of the oracle DP: given
/// the row type and `Pr[B_i]`, light element `j` is selected first with
/// probability `s_j prod_{j'<j, light} (1 - s_{j'})` where `s_j` is its
/// gated coin times its activation.
fn row_selection_profile(
    b: f64,
    x_row: &[f64],
    heavy_row: &[bool],
    pr_b: f64,
) -> Result<Vec<f64>, SchemeError> {
    let norm = 1.0 + 3.0 * b;
    let mut light_prefix = 0.0;
    let mut alive = 1.0;
    let mut profile = vec![0.0; x_row.len()];
    for (j, &x) in x_row.iter().enumerate() {
        if heavy_row[j] {
            continue;
        }
        let joint = pr_b - b / norm * light_prefix;
        if joint < 1.0 / norm - 1e-9 {
            return Err(SchemeError::InternalProbability(format!(
                "joint gate {joint} below 1/(1+3b)"
            )));
        }
        let coin = (1.0 / (norm * joint)).min(1.0);
        let s = b * x * coin;
        profile[j] = alive * s;
        alive *= 1.0 - s;
        light_prefix += x;
    }
    Ok(profile)
}

/// Exact `Pr[B_i]` per agent via the cross-row weight DP (each row selects
/// at most one light element, only from states under half capacity).
fn gate_oracle(
    b: f64,
    process: &TwoLevelProcess,
    weights: &[Vec<f64>],
    capacity: f64,
    heavy: &[Vec<bool>],
) -> Result<Vec<f64>, SchemeError> {
    let n = process.rows();
    let half = capacity / 2.0;
    let mut pr_b = Vec::with_capacity(n);
    let mut enter = WeightDist::zero();
    for i in 0..n {
        let gate = enter.mass_below(half);
        if gate < 1.0 / (1.0 + 3.0 * b) - 1e-9 {
            return Err(SchemeError::InternalProbability(format!(
                "Pr[B_{i}] = {gate} below 1/(1+3b)"
            )));
        }
        pr_b.push(gate);
        let types = process.activation[i].len();
        let mut evolved = Vec::with_capacity(types);
        for d in 0..types {
            let profile =
                row_selection_profile(b, &process.activation[i][d], &heavy[i], gate)?;
            let mut raw = Vec::new();
            for &(w, p) in &enter.entries {
                if w < half {
                    let mut none = 1.0;
                    for (j, &sel) in profile.iter().enumerate() {
                        if sel > 0.0 {
                            raw.push((w + weights[i][j], p * sel));
                            none -= sel;
                        }
                    }
                    raw.push((w, p * none));
                } else {
                    raw.push((w, p));
                }
            }
            evolved.push(WeightDist::normalize(raw, capacity)?);
        }
        let parts: Vec<(f64, &WeightDist)> = process.row_dists[i]
            .iter()
            .copied()
            .zip(evolved.iter())
            .collect();
        enter = WeightDist::mix(&parts, capacity)?;
    }
    Ok(pr_b)
}

/// Estimated `Pr[B_i]` per agent: simulate the light scheme over rows
/// before `i`, driving earlier rows with their own estimates.
fn gate_estimated(
    b: f64,
    process: &TwoLevelProcess,
    weights: &[Vec<f64>],
    capacity: f64,
    heavy: &[Vec<bool>],
    eps: f64,
    delta: f64,
    seed: u64,
) -> Vec<f64> {
    use rand::SeedableRng;
    let n = process.rows();
    let m = process.items();
    let norm = 1.0 + 3.0 * b;
    let half = capacity / 2.0;
    let t = estimation_repetitions(eps, delta, n * m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut est = vec![1.0; n];
    let mut clamps = 0u64;
    for i in 1..n {
        let mut hits = 0u64;
        for _ in 0..t {
            let mut w_acc = 0.0f64;
            for i2 in 0..i {
                let d2 = sample_index(&process.row_dists[i2], &mut rng);
                let mut light_prefix = 0.0;
                let mut row_done = false;
                for j2 in 0..m {
                    if heavy[i2][j2] {
                        continue;
                    }
                    let x = process.activation[i2][d2][j2];
                    if !row_done && w_acc < half {
                        let ell = est[i2] - b / norm * light_prefix;
                        let coin = clamp_probability(1.0 / (norm * (ell + eps)), &mut clamps);
                        if rng.gen::<f64>() < b * x && rng.gen::<f64>() < coin {
                            w_acc += weights[i2][j2];
                            row_done = true;
                        }
                    }
                    light_prefix += x;
                }
            }
            hits += (w_acc < half) as u64;
        }
        est[i] = hits as f64 / t as f64;
    }
    est
}

/// Build the multi-choice knapsack two-level OCRS for a feasible process.
pub fn multichoice_knapsack_tocrs(
    b: f64,
    weights: &[Vec<f64>],
    capacity: f64,
    process: &TwoLevelProcess,
    mode: ProbMode,
) -> Result<MultiChoiceScheme, SchemeError> {
    if !(0.0..=1.0).contains(&b) {
        return Err(SchemeError::BadParams(format!("b = {b}")));
    }
    let constraint = FeasibilityConstraint::MultiChoiceKnapsack {
        weights: weights.to_vec(),
        capacity,
    };
    let report = check_process_feasibility(process, &constraint)
        .map_err(|e| SchemeError::BadParams(e.to_string()))?;
    if !report.feasible {
        return Err(SchemeError::InfeasibleProcess(format!(
            "violation {:.3e}",
            report.worst_violation()
        )));
    }
    let n = process.rows();
    let heavy: Vec<Vec<bool>> = weights
        .iter()
        .map(|row| row.iter().map(|k| *k > capacity / 2.0).collect())
        .collect();
    let pr_a = heavy_availability(b, 4.0, process, &heavy);
    let (pr_b, declared_c) = match mode {
        ProbMode::Oracle => (
            gate_oracle(b, process, weights, capacity, &heavy)?,
            1.0 / (2.0 + 7.0 * b),
        ),
        ProbMode::Estimated { eps, delta, seed } => (
            gate_estimated(b, process, weights, capacity, &heavy, eps, delta, seed),
            1.0 / (2.0 + 7.0 * b) * (1.0 - delta) / (1.0 + 8.0 * eps),
        ),
    };
    Ok(MultiChoiceScheme {
        b,
        weights: weights.to_vec(),
        capacity,
        heavy,
        activation: process.activation.clone(),
        pr_a,
        pr_b,
        mode,
        declared_c,
        heavy_branch_prob: (1.0 + 4.0 * b) / (2.0 + 7.0 * b),
        branch_heavy: true,
        selected: Vec::new(),
        light_weight: 0.0,
        light_prefix: 0.0,
        row_selected: false,
        heavy_taken: false,
        row_types: vec![0; n],
        clamps: 0,
    })
}

impl MultiChoiceScheme {
    pub fn is_heavy_branch(&self) -> bool {
        self.branch_heavy
    }

    pub fn heavy_branch_prob(&self) -> f64 {
        self.heavy_branch_prob
    }

    pub fn selected_weight(&self) -> f64 {
        self.selected
            .iter()
            .map(|&(i, j)| self.weights[i][j])
            .sum()
    }
}

impl TwoLevelScheme for MultiChoiceScheme {
    fn reset(&mut self, rng: &mut ChaCha8Rng) {
        self.branch_heavy = rng.gen::<f64>() < self.heavy_branch_prob;
        self.selected.clear();
        self.light_weight = 0.0;
        self.light_prefix = 0.0;
        self.row_selected = false;
        self.heavy_taken = false;
    }

    fn begin_row(&mut self, i: usize, row_type: usize) {
        self.row_types[i] = row_type;
        self.row_selected = false;
        self.light_prefix = 0.0;
    }

    fn offer(&mut self, i: usize, j: usize, active: bool, rng: &mut ChaCha8Rng) -> bool {
        let d = self.row_types[i];
        let take = if !active {
            false
        } else if self.branch_heavy {
            if !self.heavy[i][j] || self.heavy_taken {
                false
            } else {
                let p = 1.0 / ((1.0 + 4.0 * self.b) * self.pr_a[i][d][j]);
                debug_assert!(p <= 1.0 + 1e-9, "heavy normalizer {p}");
                let p = clamp_probability(p, &mut self.clamps);
                if rng.gen::<f64>() < p {
                    self.heavy_taken = true;
                    true
                } else {
                    false
                }
            }
        } else if self.heavy[i][j]
            || self.row_selected
            || self.light_weight >= self.capacity / 2.0
        {
            false
        } else {
            let norm = 1.0 + 3.0 * self.b;
            let p = match self.mode {
                ProbMode::Oracle => {
                    let joint = self.pr_b[i] - self.b / norm * self.light_prefix;
                    let p = 1.0 / (norm * joint);
                    debug_assert!(p <= 1.0 + 1e-9, "light normalizer {p}");
                    p
                }
                ProbMode::Estimated { eps, .. } => {
                    let ell = self.pr_b[i] - self.b / norm * self.light_prefix;
                    1.0 / (norm * (ell + eps))
                }
            };
            let p = clamp_probability(p, &mut self.clamps);
            if rng.gen::<f64>() < p {
                self.row_selected = true;
                self.light_weight += self.weights[i][j];
                true
            } else {
                false
            }
        };
        if !self.heavy[i][j] {
            self.light_prefix += self.activation[i][d][j];
        }
        if take {
            self.selected.push((i, j));
        }
        take
    }

    fn selected(&self) -> &[(usize, usize)] {
        &self.selected
    }

    fn guarantee(&self) -> (f64, f64) {
        (self.b, self.declared_c)
    }

    fn pstar(&self, _i: usize, _j: usize, _row_type: usize) -> Option<f64> {
        match self.mode {
            ProbMode::Oracle => Some(self.declared_c),
            ProbMode::Estimated { .. } => None,
        }
    }

    fn clamp_count(&self) -> u64 {
        self.clamps
    }

    fn rows(&self) -> usize {
        self.weights.len()
    }

    fn items(&self) -> usize {
        self.weights.first().map_or(0, |r| r.len())
    }
}
