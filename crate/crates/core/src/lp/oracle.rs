//! Exact optimal-revenue oracle for tiny instances.
//!
//! Solves the full ex-post LP: one probability distribution over explicitly
//! enumerated feasible allocations per type profile, plus interim payments,
//! under BIC/IR. This is the alpha = 1 benchmark the relaxation is compared
//! against.

use super::model::{LpError, LpModel, Relation};
use super::simplex::solve_lp;
use crate::instance::{is_feasible_set, AuctionInstance, FeasibilityConstraint};

const MAX_PROFILES: usize = 64;
const MAX_FEASIBLE_SETS: usize = 1 << 12;
const MAX_ORACLE_VARS: usize = 40_000;

/// Enumerate every feasible set of cells. Downward-closedness makes the
/// sorted-insertion search exhaustive.
pub fn enumerate_feasible_sets(
    constraint: &FeasibilityConstraint,
    n: usize,
    m: usize,
) -> Result<Vec<Vec<(usize, usize)>>, LpError> {
    let cells: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let mut out: Vec<Vec<(usize, usize)>> = vec![vec![]];
    let mut frontier: Vec<(Vec<(usize, usize)>, usize)> = vec![(vec![], 0)];
    while let Some((set, start)) = frontier.pop() {
        for idx in start..cells.len() {
            let mut bigger = set.clone();
            bigger.push(cells[idx]);
            let ok = is_feasible_set(constraint, n, m, &bigger)
                .map_err(|e| LpError::Malformed(e.to_string()))?;
            if ok {
                out.push(bigger.clone());
                if out.len() > MAX_FEASIBLE_SETS {
                    return Err(LpError::TooLarge(format!(
                        "more than {MAX_FEASIBLE_SETS} feasible sets"
                    )));
                }
                frontier.push((bigger, idx + 1));
            }
        }
    }
    Ok(out)
}

/// Exact optimal BIC-IR revenue. Errors with `TooLarge` beyond the
/// enumeration caps.
pub fn brute_force_optimal_revenue(instance: &AuctionInstance) -> Result<f64, LpError> {
    instance
        .validate()
        .map_err(|e| LpError::Malformed(e.to_string()))?;
    let n = instance.n;
    let m = instance.m;
    let profile_count: usize = (0..n).map(|i| instance.support_size(i)).product();
    if profile_count > MAX_PROFILES {
        return Err(LpError::TooLarge(format!(
            "{profile_count} type profiles (cap {MAX_PROFILES})"
        )));
    }
    let sets = enumerate_feasible_sets(&instance.constraint, n, m)?;
    let num_lambda = profile_count * sets.len();
    let num_q: usize = (0..n).map(|i| instance.support_size(i)).sum();
    if num_lambda + num_q > MAX_ORACLE_VARS {
        return Err(LpError::TooLarge(format!(
            "{} oracle variables (cap {MAX_ORACLE_VARS})",
            num_lambda + num_q
        )));
    }

    // Profile indexing: mixed radix over per-agent type indices.
    let radices: Vec<usize> = (0..n).map(|i| instance.support_size(i)).collect();
    let profile_types = |p: usize| -> Vec<usize> {
        let mut rem = p;
        let mut t = vec![0usize; n];
        for i in 0..n {
            t[i] = rem % radices[i];
            rem /= radices[i];
        }
        t
    };
    let profile_prob = |types: &[usize]| -> f64 {
        types
            .iter()
            .enumerate()
            .map(|(i, &t)| instance.agents[i].probs[t])
            .product()
    };
    // Probability of the others' part of a profile, relative to agent i.
    let others_prob = |types: &[usize], i: usize| -> f64 {
        types
            .iter()
            .enumerate()
            .filter(|(i2, _)| *i2 != i)
            .map(|(i2, &t)| instance.agents[i2].probs[t])
            .product()
    };

    // Variables: lambda[p][s] then q[i][t].
    let lambda_var = |p: usize, s: usize| p * sets.len() + s;
    let mut q_offsets = vec![0usize; n];
    let mut off = num_lambda;
    for i in 0..n {
        q_offsets[i] = off;
        off += instance.support_size(i);
    }
    let q_var = |i: usize, t: usize| q_offsets[i] + t;

    let mut model = LpModel::new(num_lambda + num_q);
    for p in 0..profile_count {
        for s in 0..sets.len() {
            model.names[lambda_var(p, s)] = format!("lam_{p}_{s}");
            model.bounds[lambda_var(p, s)] = (0.0, 1.0);
        }
    }
    for i in 0..n {
        for t in 0..instance.support_size(i) {
            model.names[q_var(i, t)] = format!("q_{i}_{t}");
            model.bounds[q_var(i, t)] = (f64::NEG_INFINITY, f64::INFINITY);
            model.objective[q_var(i, t)] = instance.agents[i].probs[t];
        }
    }

    // Each profile carries a probability distribution over feasible sets.
    for p in 0..profile_count {
        let pairs: Vec<_> = (0..sets.len()).map(|s| (lambda_var(p, s), 1.0)).collect();
        model.add_sparse_row(format!("dist_{p}"), &pairs, Relation::Eq, 1.0);
    }

    // Interim allocation of (i, j) for agent i of type t, as lambda terms.
    let interim_terms = |i: usize, t: usize, j: usize| -> Vec<(usize, f64)> {
        let mut pairs = Vec::new();
        for p in 0..profile_count {
            let types = profile_types(p);
            if types[i] != t {
                continue;
            }
            let w = others_prob(&types, i);
            if w == 0.0 {
                continue;
            }
            for (s, set) in sets.iter().enumerate() {
                if set.contains(&(i, j)) {
                    pairs.push((lambda_var(p, s), w));
                }
            }
        }
        pairs
    };

    // BIC and IR over interim utilities.
    for i in 0..n {
        let a = &instance.agents[i];
        for t in 0..a.len() {
            // IR: sum_j v_t[j] pi_{i,j}(t) - q_i(t) >= 0
            let mut pairs = vec![(q_var(i, t), -1.0)];
            for j in 0..m {
                for (v, c) in interim_terms(i, t, j) {
                    pairs.push((v, c * a.support[t][j]));
                }
            }
            model.add_sparse_row(format!("ir_{i}_{t}"), &pairs, Relation::Ge, 0.0);
            for t2 in 0..a.len() {
                if t2 == t {
                    continue;
                }
                let mut pairs = vec![(q_var(i, t), -1.0), (q_var(i, t2), 1.0)];
                for j in 0..m {
                    for (v, c) in interim_terms(i, t, j) {
                        pairs.push((v, c * a.support[t][j]));
                    }
                    for (v, c) in interim_terms(i, t2, j) {
                        pairs.push((v, -c * a.support[t][j]));
                    }
                }
                model.add_sparse_row(format!("bic_{i}_{t}_{t2}"), &pairs, Relation::Ge, 0.0);
            }
        }
    }
    let _ = profile_prob; // kept for clarity; objective uses interim q only

    let sol = solve_lp(&model)?;
    Ok(sol.objective)
}
