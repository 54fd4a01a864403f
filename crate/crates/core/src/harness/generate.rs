//! Seeded instance and process generators for experiments. Everything is a
//! pure function of the parameters and the randomness handle.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{
    AgentTypeSpace, AuctionInstance, FeasibilityConstraint, InstanceError, TwoLevelProcess,
};
use crate::lp::ProcurementInstance;

/// Which constraint family to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    SingleCopy,
    KUniform,
    Knapsack,
    MultiChoice,
    Vh,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n: usize,
    pub m: usize,
    pub types_per_agent: usize,
    pub kind: ConstraintKind,
    /// Valuations are drawn uniformly from this range.
    pub value_range: (f64, f64),
    /// Knapsack capacity; weights are drawn from a grid of this many steps
    /// over (0, capacity], which keeps exact oracles small.
    pub capacity: f64,
    pub weight_grid: usize,
    /// Per-agent limit for k-uniform / VH rows.
    pub row_limit: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            n: 2,
            m: 2,
            types_per_agent: 2,
            kind: ConstraintKind::SingleCopy,
            value_range: (0.0, 4.0),
            capacity: 2.0,
            weight_grid: 8,
            row_limit: 1,
        }
    }
}

fn random_probs(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 0.05).collect();
    let sum: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|x| x / sum).collect();
    // exact renormalization of the last entry
    let head: f64 = probs[..k - 1].iter().sum();
    probs[k - 1] = 1.0 - head;
    probs
}

fn random_type_space(
    m: usize,
    types: usize,
    range: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> AgentTypeSpace {
    loop {
        let support: Vec<Vec<f64>> = (0..types)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        let v: f64 = rng.gen_range(range.0..range.1);
                        (v * 64.0).round() / 64.0
                    })
                    .collect()
            })
            .collect();
        let distinct = (0..types).all(|a| (a + 1..types).all(|b| support[a] != support[b]));
        if distinct {
            let probs = random_probs(types, rng);
            return AgentTypeSpace { support, probs };
        }
    }
}

fn grid_weights(
    n: usize,
    m: usize,
    capacity: f64,
    grid: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| capacity * rng.gen_range(1..=grid) as f64 / grid as f64)
                .collect()
        })
        .collect()
}

/// Generate an auction instance; the result always passes validation.
pub fn generate_instance(
    params: &GeneratorParams,
    rng: &mut ChaCha8Rng,
) -> Result<AuctionInstance, InstanceError> {
    let agents: Vec<AgentTypeSpace> = (0..params.n)
        .map(|_| random_type_space(params.m, params.types_per_agent, params.value_range, rng))
        .collect();
    let constraint = match params.kind {
        ConstraintKind::SingleCopy => FeasibilityConstraint::SingleCopyPerItem,
        ConstraintKind::KUniform => FeasibilityConstraint::KUniformPerAgent {
            limits: vec![params.row_limit.max(1); params.n],
        },
        ConstraintKind::Knapsack => FeasibilityConstraint::Knapsack {
            weights: grid_weights(params.n, params.m, params.capacity, params.weight_grid, rng),
            capacity: params.capacity,
        },
        ConstraintKind::MultiChoice => FeasibilityConstraint::MultiChoiceKnapsack {
            weights: grid_weights(params.n, params.m, params.capacity, params.weight_grid, rng),
            capacity: params.capacity,
        },
        ConstraintKind::Vh => FeasibilityConstraint::Vh {
            row_limits: vec![params.row_limit.max(1); params.n],
            col_limits: vec![1; params.m],
        },
    };
    AuctionInstance::new(agents, params.m, constraint)
}

/// Generate a procurement instance: nonnegative buyer values, cost type
/// spaces, and a budget sized so the LP is not vacuous.
pub fn generate_procurement(
    params: &GeneratorParams,
    rng: &mut ChaCha8Rng,
) -> Result<ProcurementInstance, InstanceError> {
    let values: Vec<Vec<f64>> = (0..params.n)
        .map(|_| {
            (0..params.m)
                .map(|_| rng.gen_range(params.value_range.0..params.value_range.1))
                .collect()
        })
        .collect();
    let cost_range = (0.0, params.value_range.1 / 2.0);
    let sellers: Vec<AgentTypeSpace> = (0..params.n)
        .map(|_| random_type_space(params.m, params.types_per_agent, cost_range, rng))
        .collect();
    ProcurementInstance::new(values, sellers, params.capacity)
}

/// Generate a two-level process that is strictly feasible for the given
/// constraint (rows and marginals scaled into the polytope with slack).
pub fn generate_feasible_process(
    constraint: &FeasibilityConstraint,
    n: usize,
    m: usize,
    types: usize,
    rng: &mut ChaCha8Rng,
) -> TwoLevelProcess {
    let row_dists: Vec<Vec<f64>> = (0..n).map(|_| random_probs(types, rng)).collect();
    let mut activation: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| {
            (0..types)
                .map(|_| (0..m).map(|_| rng.gen::<f64>()).collect())
                .collect()
        })
        .collect();
    let safety = 0.95;
    match constraint {
        FeasibilityConstraint::SingleCopyPerItem => {
            for j in 0..m {
                let col: f64 = (0..n)
                    .map(|i| {
                        row_dists[i]
                            .iter()
                            .zip(&activation[i])
                            .map(|(p, x)| p * x[j])
                            .sum::<f64>()
                    })
                    .sum();
                if col > safety {
                    let scale = safety / col;
                    for rows in activation.iter_mut() {
                        for x in rows.iter_mut() {
                            x[j] *= scale;
                        }
                    }
                }
            }
        }
        FeasibilityConstraint::KUniformPerAgent { limits } => {
            for (i, rows) in activation.iter_mut().enumerate() {
                for x in rows.iter_mut() {
                    let sum: f64 = x.iter().sum();
                    let cap = limits[i] as f64 * safety;
                    if sum > cap {
                        let scale = cap / sum;
                        x.iter_mut().for_each(|v| *v *= scale);
                    }
                }
            }
        }
        FeasibilityConstraint::Knapsack { weights, capacity }
        | FeasibilityConstraint::MultiChoiceKnapsack { weights, capacity } => {
            let multi =
                matches!(constraint, FeasibilityConstraint::MultiChoiceKnapsack { .. });
            for (i, rows) in activation.iter_mut().enumerate() {
                for x in rows.iter_mut() {
                    let wk: f64 = x.iter().zip(&weights[i]).map(|(x, k)| x * k).sum();
                    let cap = capacity * safety;
                    if wk > cap {
                        let scale = cap / wk;
                        x.iter_mut().for_each(|v| *v *= scale);
                    }
                    if multi {
                        let sum: f64 = x.iter().sum();
                        if sum > safety {
                            let scale = safety / sum;
                            x.iter_mut().for_each(|v| *v *= scale);
                        }
                    }
                }
            }
            // the marginal knapsack row
            let total = |activation: &Vec<Vec<Vec<f64>>>| -> f64 {
                (0..n)
                    .map(|i| {
                        (0..m)
                            .map(|j| {
                                row_dists[i]
                                    .iter()
                                    .zip(&activation[i])
                                    .map(|(p, x)| p * x[j])
                                    .sum::<f64>()
                                    * weights[i][j]
                            })
                            .sum::<f64>()
                    })
                    .sum()
            };
            let t = total(&activation);
            if t > capacity * safety {
                let scale = capacity * safety / t;
                for rows in activation.iter_mut() {
                    for x in rows.iter_mut() {
                        x.iter_mut().for_each(|v| *v *= scale);
                    }
                }
            }
        }
        FeasibilityConstraint::Vh { row_limits, col_limits } => {
            for (i, rows) in activation.iter_mut().enumerate() {
                for x in rows.iter_mut() {
                    let sum: f64 = x.iter().sum();
                    let cap = row_limits[i] as f64 * safety;
                    if sum > cap {
                        let scale = cap / sum;
                        x.iter_mut().for_each(|v| *v *= scale);
                    }
                }
            }
            for j in 0..m {
                let col: f64 = (0..n)
                    .map(|i| {
                        row_dists[i]
                            .iter()
                            .zip(&activation[i])
                            .map(|(p, x)| p * x[j])
                            .sum::<f64>()
                    })
                    .sum();
                let cap = col_limits[j] as f64 * safety;
                if col > cap {
                    let scale = cap / col;
                    for rows in activation.iter_mut() {
                        for x in rows.iter_mut() {
                            x[j] *= scale;
                        }
                    }
                }
            }
        }
    }
    TwoLevelProcess { row_dists, activation }
}
