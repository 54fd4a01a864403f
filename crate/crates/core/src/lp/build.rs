//! Interim relaxation LPs: the auction LP (BIC, IR, row polytopes, marginal
//! polytope) and the procurement LP (seller BIC/IR, expected-budget row,
//! per-type payment caps), plus extraction of validated interim rules.

use serde::{Deserialize, Serialize};

use super::model::{LpError, LpModel, Relation};
use super::simplex::LpSolution;
use crate::instance::{
    check_process_feasibility, AgentTypeSpace, AuctionInstance, FeasibilityConstraint,
    InstanceError, TwoLevelProcess,
};

/// Residual tolerance when re-validating interim rules extracted from a
/// solver solution.
pub const INTERIM_TOL: f64 = 1e-7;
/// Residuals up to this size are silently clamped into range.
pub const CLAMP_TOL: f64 = 1e-9;

/// Variable layout shared by LP1 and LP2: per agent, per type, a block of
/// `m` allocation variables followed by one payment variable.
#[derive(Debug, Clone)]
pub struct VarLayout {
    pub m: usize,
    agent_offsets: Vec<usize>,
    type_counts: Vec<usize>,
}

impl VarLayout {
    pub fn new(agents: &[AgentTypeSpace], m: usize) -> Self {
        let mut agent_offsets = Vec::with_capacity(agents.len());
        let mut off = 0;
        for a in agents {
            agent_offsets.push(off);
            off += a.len() * (m + 1);
        }
        Self { m, agent_offsets, type_counts: agents.iter().map(|a| a.len()).collect() }
    }

    pub fn num_vars(&self) -> usize {
        self.agent_offsets.last().map_or(0, |&o| o + self.type_counts.last().unwrap() * (self.m + 1))
    }

    pub fn pi(&self, i: usize, t: usize, j: usize) -> usize {
        self.agent_offsets[i] + t * (self.m + 1) + j
    }

    pub fn q(&self, i: usize, t: usize) -> usize {
        self.agent_offsets[i] + t * (self.m + 1) + self.m
    }
}

fn name_vars(layout: &VarLayout, agents: &[AgentTypeSpace], model: &mut LpModel) {
    for (i, a) in agents.iter().enumerate() {
        for t in 0..a.len() {
            for j in 0..layout.m {
                model.names[layout.pi(i, t, j)] = format!("pi_{i}_{t}_{j}");
            }
            model.names[layout.q(i, t)] = format!("q_{i}_{t}");
        }
    }
}

/// Build the auction interim relaxation.
///
/// Families, in row order: BIC (all ordered type pairs per agent), IR,
/// per-type row-polytope membership, marginal-matrix polytope membership.
/// The objective is expected revenue.
pub fn build_lp1(instance: &AuctionInstance) -> Result<LpModel, LpError> {
    instance
        .validate()
        .map_err(|e| LpError::Malformed(e.to_string()))?;
    let m = instance.m;
    let layout = VarLayout::new(&instance.agents, m);
    let mut model = LpModel::new(layout.num_vars());
    name_vars(&layout, &instance.agents, &mut model);

    for (i, a) in instance.agents.iter().enumerate() {
        for t in 0..a.len() {
            for j in 0..m {
                model.bounds[layout.pi(i, t, j)] = (0.0, 1.0);
            }
            // Payments are free; IR/BIC pin them where it matters.
            model.bounds[layout.q(i, t)] = (f64::NEG_INFINITY, f64::INFINITY);
            model.objective[layout.q(i, t)] = a.probs[t];
        }
    }

    // BIC: truthful utility dominates every misreport.
    for (i, a) in instance.agents.iter().enumerate() {
        for t in 0..a.len() {
            for t2 in 0..a.len() {
                if t == t2 {
                    continue;
                }
                let mut pairs = Vec::with_capacity(2 * m + 2);
                for j in 0..m {
                    pairs.push((layout.pi(i, t, j), a.support[t][j]));
                    pairs.push((layout.pi(i, t2, j), -a.support[t][j]));
                }
                pairs.push((layout.q(i, t), -1.0));
                pairs.push((layout.q(i, t2), 1.0));
                model.add_sparse_row(format!("bic_{i}_{t}_{t2}"), &pairs, Relation::Ge, 0.0);
            }
        }
    }

    // IR.
    for (i, a) in instance.agents.iter().enumerate() {
        for t in 0..a.len() {
            let mut pairs: Vec<(usize, f64)> =
                (0..m).map(|j| (layout.pi(i, t, j), a.support[t][j])).collect();
            pairs.push((layout.q(i, t), -1.0));
            model.add_sparse_row(format!("ir_{i}_{t}"), &pairs, Relation::Ge, 0.0);
        }
    }

    add_polytope_rows(&mut model, &layout, instance)?;
    Ok(model)
}

/// Row-polytope and marginal-polytope rows for the registered variants.
fn add_polytope_rows(
    model: &mut LpModel,
    layout: &VarLayout,
    instance: &AuctionInstance,
) -> Result<(), LpError> {
    let n = instance.n;
    let m = instance.m;
    let marginal_coeff = |i: usize, t: usize| instance.agents[i].probs[t];
    match &instance.constraint {
        FeasibilityConstraint::SingleCopyPerItem => {
            for j in 0..m {
                let mut pairs = Vec::new();
                for i in 0..n {
                    for t in 0..instance.support_size(i) {
                        pairs.push((layout.pi(i, t, j), marginal_coeff(i, t)));
                    }
                }
                model.add_sparse_row(format!("pf_item_{j}"), &pairs, Relation::Le, 1.0);
            }
        }
        FeasibilityConstraint::KUniformPerAgent { limits } => {
            for i in 0..n {
                for t in 0..instance.support_size(i) {
                    let pairs: Vec<_> = (0..m).map(|j| (layout.pi(i, t, j), 1.0)).collect();
                    model.add_sparse_row(
                        format!("pfi_{i}_{t}"),
                        &pairs,
                        Relation::Le,
                        limits[i] as f64,
                    );
                }
            }
        }
        FeasibilityConstraint::Knapsack { weights, capacity } => {
            for i in 0..n {
                for t in 0..instance.support_size(i) {
                    let pairs: Vec<_> =
                        (0..m).map(|j| (layout.pi(i, t, j), weights[i][j])).collect();
                    model.add_sparse_row(format!("pfi_{i}_{t}"), &pairs, Relation::Le, *capacity);
                }
            }
            let mut pairs = Vec::new();
            for i in 0..n {
                for t in 0..instance.support_size(i) {
                    for j in 0..m {
                        pairs.push((layout.pi(i, t, j), marginal_coeff(i, t) * weights[i][j]));
                    }
                }
            }
            model.add_sparse_row("pf_knapsack".into(), &pairs, Relation::Le, *capacity);
        }
        FeasibilityConstraint::MultiChoiceKnapsack { weights, capacity } => {
            for i in 0..n {
                for t in 0..instance.support_size(i) {
                    let pairs: Vec<_> = (0..m).map(|j| (layout.pi(i, t, j), 1.0)).collect();
                    model.add_sparse_row(format!("pfi_{i}_{t}"), &pairs, Relation::Le, 1.0);
                }
            }
            let mut pairs = Vec::new();
            for i in 0..n {
                for t in 0..instance.support_size(i) {
                    for j in 0..m {
                        pairs.push((layout.pi(i, t, j), marginal_coeff(i, t) * weights[i][j]));
                    }
                }
            }
            model.add_sparse_row("pf_knapsack".into(), &pairs, Relation::Le, *capacity);
        }
        FeasibilityConstraint::Vh { row_limits, col_limits } => {
            for i in 0..n {
                for t in 0..instance.support_size(i) {
                    let pairs: Vec<_> = (0..m).map(|j| (layout.pi(i, t, j), 1.0)).collect();
                    model.add_sparse_row(
                        format!("pfi_{i}_{t}"),
                        &pairs,
                        Relation::Le,
                        row_limits[i] as f64,
                    );
                }
            }
            for j in 0..m {
                let mut pairs = Vec::new();
                for i in 0..n {
                    for t in 0..instance.support_size(i) {
                        pairs.push((layout.pi(i, t, j), marginal_coeff(i, t)));
                    }
                }
                model.add_sparse_row(
                    format!("pf_item_{j}"),
                    &pairs,
                    Relation::Le,
                    col_limits[j] as f64,
                );
            }
        }
    }
    Ok(())
}

/// The solved interim allocation/payment tables of an auction instance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InterimRule {
    /// `pi[i][t][j]` in [0, 1].
    pub pi: Vec<Vec<Vec<f64>>>,
    /// `q[i][t]` in money units.
    pub q: Vec<Vec<f64>>,
    /// Expected revenue of the rule.
    pub objective: f64,
}

impl InterimRule {
    /// The two-level process induced by truthful play of this rule: row
    /// types are the agents' valuation draws, activations the allocation
    /// probabilities.
    pub fn induced_process(&self, instance: &AuctionInstance) -> TwoLevelProcess {
        TwoLevelProcess {
            row_dists: instance.agents.iter().map(|a| a.probs.clone()).collect(),
            activation: self.pi.clone(),
        }
    }

    /// Re-validate every invariant against the instance.
    pub fn validate(&self, instance: &AuctionInstance) -> Result<(), LpError> {
        for (i, a) in instance.agents.iter().enumerate() {
            for t in 0..a.len() {
                for j in 0..instance.m {
                    let p = self.pi[i][t][j];
                    if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&p) {
                        return Err(LpError::ValidationFailed(format!(
                            "pi_{i}_{t}_{j} = {p} outside [0,1]"
                        )));
                    }
                }
            }
            let util = |t: usize, r: usize| -> f64 {
                (0..instance.m)
                    .map(|j| a.support[t][j] * self.pi[i][r][j])
                    .sum::<f64>()
                    - self.q[i][r]
            };
            for t in 0..a.len() {
                if util(t, t) < -INTERIM_TOL {
                    return Err(LpError::ValidationFailed(format!("ir_{i}_{t} violated")));
                }
                for t2 in 0..a.len() {
                    if t2 != t && util(t, t) - util(t, t2) < -INTERIM_TOL {
                        return Err(LpError::ValidationFailed(format!(
                            "bic_{i}_{t}_{t2} violated by {}",
                            util(t, t2) - util(t, t)
                        )));
                    }
                }
            }
        }
        let report = check_process_feasibility(&self.induced_process(instance), &instance.constraint)
            .map_err(|e: InstanceError| LpError::Malformed(e.to_string()))?;
        if report.worst_violation() > INTERIM_TOL {
            return Err(LpError::ValidationFailed(format!(
                "induced process infeasible by {:.3e}",
                report.worst_violation()
            )));
        }
        Ok(())
    }
}

fn clamp_unit(v: f64, what: &str) -> Result<f64, LpError> {
    if v < -CLAMP_TOL || v > 1.0 + CLAMP_TOL {
        return Err(LpError::ValidationFailed(format!("{what} = {v} outside [0,1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Extract the interim rule from an LP1 solution and re-validate it.
pub fn interim_from_lp1(
    instance: &AuctionInstance,
    solution: &LpSolution,
) -> Result<InterimRule, LpError> {
    let layout = VarLayout::new(&instance.agents, instance.m);
    let mut pi = Vec::with_capacity(instance.n);
    let mut q = Vec::with_capacity(instance.n);
    for (i, a) in instance.agents.iter().enumerate() {
        let mut pis = Vec::with_capacity(a.len());
        let mut qs = Vec::with_capacity(a.len());
        for t in 0..a.len() {
            let row: Result<Vec<f64>, LpError> = (0..instance.m)
                .map(|j| clamp_unit(solution.x[layout.pi(i, t, j)], &format!("pi_{i}_{t}_{j}")))
                .collect();
            pis.push(row?);
            qs.push(solution.x[layout.q(i, t)]);
        }
        pi.push(pis);
        q.push(qs);
    }
    let rule = InterimRule { pi, q, objective: solution.objective };
    rule.validate(instance)?;
    Ok(rule)
}

/// A procurement instance: a budgeted buyer facing `n` sellers, each with a
/// finite distribution over cost vectors for `m` services.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProcurementInstance {
    pub n: usize,
    pub m: usize,
    /// Buyer's value for service `j` of seller `i`.
    pub values: Vec<Vec<f64>>,
    /// Cost type space per seller (support vectors are cost vectors).
    pub sellers: Vec<AgentTypeSpace>,
    pub budget: f64,
}

impl ProcurementInstance {
    pub fn new(
        values: Vec<Vec<f64>>,
        sellers: Vec<AgentTypeSpace>,
        budget: f64,
    ) -> Result<Self, InstanceError> {
        let m = values.first().map_or(0, |v| v.len());
        let inst = Self { n: sellers.len(), m, values, sellers, budget };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.budget <= 0.0 || !self.budget.is_finite() {
            return Err(InstanceError::BadCapacity(self.budget));
        }
        if self.values.len() != self.n || self.sellers.len() != self.n {
            return Err(InstanceError::DimensionMismatch("values/sellers vs n".into()));
        }
        for row in &self.values {
            if row.len() != self.m {
                return Err(InstanceError::DimensionMismatch("values row width".into()));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(InstanceError::BadValuation);
            }
        }
        for s in &self.sellers {
            s.validate(Some(self.m))?;
        }
        Ok(())
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

/// Build the procurement interim relaxation: seller BIC/IR, the expected
/// budget row, and per-type payment caps; the objective is expected buyer
/// value.
pub fn build_lp2(instance: &ProcurementInstance) -> Result<LpModel, LpError> {
    instance
        .validate()
        .map_err(|e| LpError::Malformed(e.to_string()))?;
    let m = instance.m;
    let layout = VarLayout::new(&instance.sellers, m);
    let mut model = LpModel::new(layout.num_vars());
    name_vars(&layout, &instance.sellers, &mut model);

    for (i, s) in instance.sellers.iter().enumerate() {
        for t in 0..s.len() {
            for j in 0..m {
                model.bounds[layout.pi(i, t, j)] = (0.0, 1.0);
                model.objective[layout.pi(i, t, j)] = s.probs[t] * instance.values[i][j];
            }
            model.bounds[layout.q(i, t)] = (0.0, instance.budget);
        }
    }

    // Seller BIC: utility of truth dominates every misreported cost type.
    for (i, s) in instance.sellers.iter().enumerate() {
        for t in 0..s.len() {
            for t2 in 0..s.len() {
                if t == t2 {
                    continue;
                }
                let mut pairs = Vec::with_capacity(2 * m + 2);
                pairs.push((layout.q(i, t), 1.0));
                pairs.push((layout.q(i, t2), -1.0));
                for j in 0..m {
                    pairs.push((layout.pi(i, t, j), -s.support[t][j]));
                    pairs.push((layout.pi(i, t2, j), s.support[t][j]));
                }
                model.add_sparse_row(format!("bic_{i}_{t}_{t2}"), &pairs, Relation::Ge, 0.0);
            }
        }
    }

    // Seller IR.
    for (i, s) in instance.sellers.iter().enumerate() {
        for t in 0..s.len() {
            let mut pairs = vec![(layout.q(i, t), 1.0)];
            for j in 0..m {
                pairs.push((layout.pi(i, t, j), -s.support[t][j]));
            }
            model.add_sparse_row(format!("ir_{i}_{t}"), &pairs, Relation::Ge, 0.0);
        }
    }

    // Expected total payment within budget.
    let mut pairs = Vec::new();
    for (i, s) in instance.sellers.iter().enumerate() {
        for t in 0..s.len() {
            pairs.push((layout.q(i, t), s.probs[t]));
        }
    }
    model.add_sparse_row("budget".into(), &pairs, Relation::Le, instance.budget);
    Ok(model)
}

/// The solved interim tables of a procurement instance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProcurementInterimRule {
    pub pi: Vec<Vec<Vec<f64>>>,
    /// Expected payment to seller `i` reporting type `t`, in [0, B].
    pub q: Vec<Vec<f64>>,
    /// Expected buyer value of the rule.
    pub objective: f64,
}

impl ProcurementInterimRule {
    pub fn validate(&self, instance: &ProcurementInstance) -> Result<(), LpError> {
        let mut expected_payment = 0.0;
        for (i, s) in instance.sellers.iter().enumerate() {
            let util = |t: usize, r: usize| -> f64 {
                self.q[i][r]
                    - (0..instance.m)
                        .map(|j| s.support[t][j] * self.pi[i][r][j])
                        .sum::<f64>()
            };
            for t in 0..s.len() {
                if self.q[i][t] > instance.budget + CLAMP_TOL {
                    return Err(LpError::ValidationFailed(format!(
                        "q_{i}_{t} = {} above budget",
                        self.q[i][t]
                    )));
                }
                expected_payment += s.probs[t] * self.q[i][t];
                if util(t, t) < -INTERIM_TOL {
                    return Err(LpError::ValidationFailed(format!("ir_{i}_{t} violated")));
                }
                for t2 in 0..s.len() {
                    if t2 != t && util(t, t) - util(t, t2) < -INTERIM_TOL {
                        return Err(LpError::ValidationFailed(format!(
                            "bic_{i}_{t}_{t2} violated"
                        )));
                    }
                }
                for j in 0..instance.m {
                    let p = self.pi[i][t][j];
                    if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&p) {
                        return Err(LpError::ValidationFailed(format!(
                            "pi_{i}_{t}_{j} outside [0,1]"
                        )));
                    }
                }
            }
        }
        if expected_payment > instance.budget + INTERIM_TOL {
            return Err(LpError::ValidationFailed(format!(
                "expected payments {expected_payment} exceed budget {}",
                instance.budget
            )));
        }
        Ok(())
    }
}

/// Extract the procurement rule from an LP2 solution and re-validate it.
pub fn interim_from_lp2(
    instance: &ProcurementInstance,
    solution: &LpSolution,
) -> Result<ProcurementInterimRule, LpError> {
    let layout = VarLayout::new(&instance.sellers, instance.m);
    let mut pi = Vec::with_capacity(instance.n);
    let mut q = Vec::with_capacity(instance.n);
    for (i, s) in instance.sellers.iter().enumerate() {
        let mut pis = Vec::with_capacity(s.len());
        let mut qs = Vec::with_capacity(s.len());
        for t in 0..s.len() {
            let row: Result<Vec<f64>, LpError> = (0..instance.m)
                .map(|j| clamp_unit(solution.x[layout.pi(i, t, j)], &format!("pi_{i}_{t}_{j}")))
                .collect();
            pis.push(row?);
            let qv = solution.x[layout.q(i, t)];
            if qv < -CLAMP_TOL || qv > instance.budget + CLAMP_TOL {
                return Err(LpError::ValidationFailed(format!("q_{i}_{t} = {qv} out of range")));
            }
            qs.push(qv.clamp(0.0, instance.budget));
        }
        pi.push(pis);
        q.push(qs);
    }
    let rule = ProcurementInterimRule { pi, q, objective: solution.objective };
    rule.validate(instance)?;
    Ok(rule)
}
