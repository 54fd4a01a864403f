//! Knapsack two-level OCRS: a fair coin picks the heavy scheme (single
//! selection among cells heavier than half the capacity, availability in
//! closed form) or the light scheme (greedy while the selected weight is
//! under half the capacity, availability from an exact weight-distribution
//! oracle or Chernoff estimates). Guarantee `(b, 1/(2+8b))` in oracle mode.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::wdist::WeightDist;
use super::{clamp_probability, estimation_repetitions, ProbMode, SchemeError, TwoLevelScheme};
use crate::instance::{
    check_process_feasibility, sample_index, FeasibilityConstraint, TwoLevelProcess,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Branch {
    Heavy,
    Light,
}

pub struct KnapsackScheme {
    b: f64,
    weights: Vec<Vec<f64>>,
    capacity: f64,
    heavy: Vec<Vec<bool>>,
    /// Closed-form `Pr[A_{i,j}(d)]` for heavy cells.
    pr_a: Vec<Vec<Vec<f64>>>,
    /// Light-gate denominators: exact `Pr[B_{i,j}(d)]` in oracle mode,
    /// `estimate + eps` in estimated mode.
    pr_b: Vec<Vec<Vec<f64>>>,
    mode: ProbMode,
    declared_c: f64,
    branch: Branch,
    selected: Vec<(usize, usize)>,
    light_weight: f64,
    heavy_taken: bool,
    row_types: Vec<usize>,
    clamps: u64,
}

/// Closed-form heavy availabilities for a heavy/light split: the running
/// marginal mass of earlier heavy cells, scaled by `b/(1+norm b)`.
pub(crate) fn heavy_availability(
    b: f64,
    norm: f64,
    process: &TwoLevelProcess,
    heavy: &[Vec<bool>],
) -> Vec<Vec<Vec<f64>>> {
    let scale = b / (1.0 + norm * b);
    let n = process.rows();
    let m = process.items();
    let mut tables = Vec::with_capacity(n);
    let mut w_before = 0.0;
    for i in 0..n {
        let types = process.activation[i].len();
        let mut per_type = Vec::with_capacity(types);
        for d in 0..types {
            let mut row = Vec::with_capacity(m);
            let mut x_before = 0.0;
            for j in 0..m {
                row.push(1.0 - scale * (w_before + x_before));
                if heavy[i][j] {
                    x_before += process.activation[i][d][j];
                }
            }
            per_type.push(row);
        }
        tables.push(per_type);
        for j in 0..m {
            if heavy[i][j] {
                w_before += process.marginal(i, j);
            }
        }
    }
    tables
}

/// Exact light-gate probabilities `Pr[B_{i,j}(d)]` via a forward dynamic
/// program over the distribution of selected light weight.
fn light_gate_oracle(
    b: f64,
    process: &TwoLevelProcess,
    weights: &[Vec<f64>],
    capacity: f64,
    heavy: &[Vec<bool>],
) -> Result<Vec<Vec<Vec<f64>>>, SchemeError> {
    let n = process.rows();
    let m = process.items();
    let norm = 1.0 + 4.0 * b;
    let half = capacity / 2.0;
    let mut pr_b = vec![Vec::new(); n];
    let mut enter = WeightDist::zero();
    for i in 0..n {
        let types = process.activation[i].len();
        let mut per_type = Vec::with_capacity(types);
        let mut evolved: Vec<WeightDist> = Vec::with_capacity(types);
        for d in 0..types {
            let mut dist = enter.clone();
            let mut row = vec![1.0; m];
            for j in 0..m {
                if heavy[i][j] {
                    continue;
                }
                let gate = dist.mass_below(half);
                row[j] = gate;
                if gate < 1.0 / norm - 1e-9 {
                    return Err(SchemeError::InternalProbability(format!(
                        "Pr[B] = {gate} below 1/(1+4b) at ({i},{j},{d})"
                    )));
                }
                let coin = (1.0 / (norm * gate)).min(1.0);
                let rho = b * process.activation[i][d][j] * coin;
                if rho == 0.0 {
                    continue;
                }
                let mut raw = Vec::with_capacity(dist.entries.len() * 2);
                for &(w, p) in &dist.entries {
                    if w < half {
                        raw.push((w + weights[i][j], p * rho));
                        raw.push((w, p * (1.0 - rho)));
                    } else {
                        raw.push((w, p));
                    }
                }
                dist = WeightDist::normalize(raw, capacity)?;
            }
            per_type.push(row);
            evolved.push(dist);
        }
        let parts: Vec<(f64, &WeightDist)> = process.row_dists[i]
            .iter()
            .copied()
            .zip(evolved.iter())
            .collect();
        enter = WeightDist::mix(&parts, capacity)?;
        pr_b[i] = per_type;
    }
    Ok(pr_b)
}

/// Light-gate estimates per the efficient-implementation recipe: for each
/// light cell and row type (in arrival order), simulate the light scheme up
/// to that cell `T` times with earlier cells driven by their own estimates,
/// freezing the branch and the row type under estimation.
fn light_gate_estimated(
    b: f64,
    process: &TwoLevelProcess,
    weights: &[Vec<f64>],
    capacity: f64,
    heavy: &[Vec<bool>],
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>, SchemeError> {
    use rand::SeedableRng;
    let n = process.rows();
    let m = process.items();
    let norm = 1.0 + 4.0 * b;
    let half = capacity / 2.0;
    let t = estimation_repetitions(eps, delta, n * m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // denominators est + eps, filled in arrival order
    let mut denom: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| vec![vec![1.0; m]; process.activation[i].len()])
        .collect();
    let mut clamps = 0u64;
    for i in 0..n {
        for d in 0..process.activation[i].len() {
            for j in 0..m {
                if heavy[i][j] {
                    continue;
                }
                let mut hits = 0u64;
                for _ in 0..t {
                    // replay the light scheme up to cell (i, j)
                    let mut w_acc = 0.0f64;
                    for i2 in 0..=i {
                        let d2 = if i2 == i {
                            d
                        } else {
                            sample_index(&process.row_dists[i2], &mut rng)
                        };
                        let j_end = if i2 == i { j } else { m };
                        for j2 in 0..j_end {
                            if heavy[i2][j2] {
                                continue;
                            }
                            let active =
                                rng.gen::<f64>() < b * process.activation[i2][d2][j2];
                            if active && w_acc < half {
                                let coin = clamp_probability(
                                    1.0 / (norm * denom[i2][d2][j2]),
                                    &mut clamps,
                                );
                                if rng.gen::<f64>() < coin {
                                    w_acc += weights[i2][j2];
                                }
                            }
                        }
                    }
                    hits += (w_acc < half) as u64;
                }
                denom[i][d][j] = hits as f64 / t as f64 + eps;
            }
        }
    }
    Ok(denom)
}

/// Build the knapsack two-level OCRS for a feasible process.
pub fn knapsack_tocrs(
    b: f64,
    weights: &[Vec<f64>],
    capacity: f64,
    process: &TwoLevelProcess,
    mode: ProbMode,
) -> Result<KnapsackScheme, SchemeError> {
    if !(0.0..=1.0).contains(&b) {
        return Err(SchemeError::BadParams(format!("b = {b}")));
    }
    let constraint = FeasibilityConstraint::Knapsack {
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
    for (i, per_type) in pr_a.iter().enumerate() {
        for (d, row) in per_type.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                if heavy[i][j] && *a < 1.0 / (1.0 + 4.0 * b) - 1e-9 {
                    return Err(SchemeError::InternalProbability(format!(
                        "Pr[A] = {a} below 1/(1+4b) at ({i},{j},{d})"
                    )));
                }
            }
        }
    }
    let (pr_b, declared_c) = match mode {
        ProbMode::Oracle => (
            light_gate_oracle(b, process, weights, capacity, &heavy)?,
            1.0 / (2.0 + 8.0 * b),
        ),
        ProbMode::Estimated { eps, delta, seed } => (
            light_gate_estimated(b, process, weights, capacity, &heavy, eps, delta, seed)?,
            1.0 / (2.0 + 8.0 * b) * (1.0 - delta) / (1.0 + 10.0 * eps),
        ),
    };
    Ok(KnapsackScheme {
        b,
        weights: weights.to_vec(),
        capacity,
        heavy,
        pr_a,
        pr_b,
        mode,
        declared_c,
        branch: Branch::Heavy,
        selected: Vec::new(),
        light_weight: 0.0,
        heavy_taken: false,
        row_types: vec![0; n],
        clamps: 0,
    })
}

impl KnapsackScheme {
    pub fn is_heavy_branch(&self) -> bool {
        self.branch == Branch::Heavy
    }

    /// Total selected weight of the current run.
    pub fn selected_weight(&self) -> f64 {
        self.selected
            .iter()
            .map(|&(i, j)| self.weights[i][j])
            .sum()
    }
}

impl TwoLevelScheme for KnapsackScheme {
    fn reset(&mut self, rng: &mut ChaCha8Rng) {
        self.branch = if rng.gen_bool(0.5) { Branch::Heavy } else { Branch::Light };
        self.selected.clear();
        self.light_weight = 0.0;
        self.heavy_taken = false;
    }

    fn begin_row(&mut self, i: usize, row_type: usize) {
        self.row_types[i] = row_type;
    }

    fn offer(&mut self, i: usize, j: usize, active: bool, rng: &mut ChaCha8Rng) -> bool {
        if !active {
            return false;
        }
        let d = self.row_types[i];
        let take = match self.branch {
            Branch::Heavy => {
                if !self.heavy[i][j] || self.heavy_taken {
                    false
                } else {
                    let p = 1.0 / ((1.0 + 4.0 * self.b) * self.pr_a[i][d][j]);
                    debug_assert!(
                        matches!(self.mode, ProbMode::Estimated { .. }) || p <= 1.0 + 1e-9
                    );
                    let p = clamp_probability(p, &mut self.clamps);
                    if rng.gen::<f64>() < p {
                        self.heavy_taken = true;
                        true
                    } else {
                        false
                    }
                }
            }
            Branch::Light => {
                if self.heavy[i][j] || self.light_weight >= self.capacity / 2.0 {
                    false
                } else {
                    let p = 1.0 / ((1.0 + 4.0 * self.b) * self.pr_b[i][d][j]);
                    let p = clamp_probability(p, &mut self.clamps);
                    if rng.gen::<f64>() < p {
                        self.light_weight += self.weights[i][j];
                        true
                    } else {
                        false
                    }
                }
            }
        };
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
            // Both branches select an active element with the exact
            // conditional rate 1/(1+4b), so p* = c for every cell.
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{is_feasible_set, sample_active_set};
    use crate::schemes::run_scheme;
    use rand::SeedableRng;

    /// 2x2 process with one row type per row; all cells heavy.
    fn heavy_only_process() -> (TwoLevelProcess, Vec<Vec<f64>>, f64) {
        let process = TwoLevelProcess::new(
            vec![vec![1.0], vec![1.0]],
            vec![vec![vec![0.5, 0.0]], vec![vec![0.0, 0.5]]],
        )
        .unwrap();
        let weights = vec![vec![0.8, 0.8], vec![0.8, 0.8]];
        (process, weights, 1.0)
    }

    #[test]
    fn single_active_heavy_selected_at_closed_form_rate() {
        // One heavy cell with x = 1: heavy branch w.p. 1/2, then Pr[A] = 1
        // and the normalizer 1/(1+4b), so selection = 1/(2+8b).
        let process =
            TwoLevelProcess::new(vec![vec![1.0]], vec![vec![vec![1.0]]]).unwrap();
        let weights = vec![vec![0.9]];
        let b = 1.0;
        let mut scheme =
            knapsack_tocrs(b, &weights, 1.0, &process, ProbMode::Oracle).unwrap();
        assert!((scheme.guarantee().1 - 0.1).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 200_000u64;
        let mut picks = 0u64;
        for _ in 0..trials {
            let active = sample_active_set(&process, b, &mut rng);
            let sel = run_scheme(&mut scheme, &active, &mut rng);
            picks += (!sel.is_empty()) as u64;
        }
        let rate = picks as f64 / trials as f64;
        let expect = 1.0 / (2.0 * (1.0 + 4.0 * b));
        let sd = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((rate - expect).abs() < 4.0 * sd, "rate {rate} vs {expect}");
        assert_eq!(scheme.clamp_count(), 0);
    }

    #[test]
    fn declared_constants() {
        let (process, weights, cap) = heavy_only_process();
        let s = knapsack_tocrs(1.0, &weights, cap, &process, ProbMode::Oracle).unwrap();
        assert!((s.guarantee().1 - 0.1).abs() < 1e-12);
        let s2 = knapsack_tocrs(0.5, &weights, cap, &process, ProbMode::Oracle).unwrap();
        assert!((s2.guarantee().1 - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_process_rejected() {
        let process = TwoLevelProcess::new(
            vec![vec![1.0], vec![1.0]],
            vec![vec![vec![0.9]], vec![vec![0.9]]],
        )
        .unwrap();
        let weights = vec![vec![1.0], vec![1.0]];
        assert!(matches!(
            knapsack_tocrs(1.0, &weights, 1.0, &process, ProbMode::Oracle),
            Err(SchemeError::InfeasibleProcess(_))
        ));
    }

    fn mixed_process() -> (TwoLevelProcess, Vec<Vec<f64>>, f64) {
        // 2 agents, 2 items, 2 row types each; mixture of heavy and light.
        let process = TwoLevelProcess::new(
            vec![vec![0.6, 0.4], vec![0.5, 0.5]],
            vec![
                vec![vec![0.3, 0.25], vec![0.1, 0.4]],
                vec![vec![0.2, 0.3], vec![0.4, 0.1]],
            ],
        )
        .unwrap();
        let capacity = 2.0;
        let weights = vec![vec![1.2, 0.7], vec![0.9, 1.5]];
        (process, weights, capacity)
    }

    #[test]
    fn feasibility_and_partition_invariants() {
        let (process, weights, cap) = mixed_process();
        let b = 1.0;
        let constraint =
            FeasibilityConstraint::Knapsack { weights: weights.clone(), capacity: cap };
        let mut scheme = knapsack_tocrs(b, &weights, cap, &process, ProbMode::Oracle).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50_000 {
            let active = sample_active_set(&process, b, &mut rng);
            let sel = run_scheme(&mut scheme, &active, &mut rng);
            assert!(is_feasible_set(&constraint, 2, 2, &sel).unwrap());
            // heavy/light partition: a branch never selects the other kind
            let heavy_branch = scheme.is_heavy_branch();
            for &(i, j) in &sel {
                assert_eq!(scheme.heavy[i][j], heavy_branch);
            }
        }
        assert_eq!(scheme.clamp_count(), 0);
    }

    #[test]
    fn oracle_selectability_meets_declared_c() {
        let (process, weights, cap) = mixed_process();
        let b = 1.0;
        let mut scheme = knapsack_tocrs(b, &weights, cap, &process, ProbMode::Oracle).unwrap();
        let c = scheme.guarantee().1;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let trials = 300_000;
        let mut active_ct = vec![vec![0u64; 2]; 2];
        let mut sel_ct = vec![vec![0u64; 2]; 2];
        for _ in 0..trials {
            let active = sample_active_set(&process, b, &mut rng);
            let sel = run_scheme(&mut scheme, &active, &mut rng);
            for (i, j) in active.cells() {
                active_ct[i][j] += 1;
            }
            for (i, j) in sel {
                sel_ct[i][j] += 1;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                if active_ct[i][j] < 2000 {
                    continue;
                }
                let rate = sel_ct[i][j] as f64 / active_ct[i][j] as f64;
                let sd = (c * (1.0 - c) / active_ct[i][j] as f64).sqrt();
                assert!(rate >= c - 4.0 * sd, "({i},{j}) rate {rate} below c {c}");
                // oracle mode gives the exact conditional rate c = p*
                assert!(
                    (rate - c).abs() < 4.0 * sd + 1e-3,
                    "({i},{j}) rate {rate} != {c}"
                );
            }
        }
    }

    #[test]
    fn estimated_mode_tracks_oracle() {
        let (process, weights, cap) = mixed_process();
        let b = 1.0;
        let eps = 0.05;
        let mode = ProbMode::Estimated { eps, delta: 0.01, seed: 99 };
        let est = knapsack_tocrs(b, &weights, cap, &process, mode).unwrap();
        let oracle = knapsack_tocrs(b, &weights, cap, &process, ProbMode::Oracle).unwrap();
        // estimated denominators sit within eps + noise of the exact gate
        for i in 0..2 {
            for d in 0..process.activation[i].len() {
                for j in 0..2 {
                    if oracle.heavy[i][j] {
                        continue;
                    }
                    let exact = oracle.pr_b[i][d][j];
                    let denom = est.pr_b[i][d][j];
                    assert!(
                        (denom - eps - exact).abs() <= eps + 4.0 * 0.02,
                        "({i},{d},{j}): denom {denom} vs exact {exact}"
                    );
                }
            }
        }
        let c_est = est.guarantee().1;
        assert!((c_est - 0.1 * 0.99 / 1.5).abs() < 1e-12);
    }
}
