//! Stochastic knapsack OCRS: elements reveal random weights on arrival; the
//! scheme selects online, never overfills, and guarantees selection
//! probability `max{(1-k*)/(2-k*), 1/6}` where `k*` is the largest support
//! weight over the capacity. When the gamma guarantee is weak (`k*` large) a
//! fair coin switches to a heavy/light dichotomy.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::wdist::WeightDist;
use super::{clamp_probability, estimation_repetitions, ProbMode, SchemeError};
use crate::instance::sample_index;

/// Elements with finite weight distributions over `[0, K]`; admissible when
/// the expected total weight is at most the capacity.
#[derive(Debug, Clone)]
pub struct StochasticKnapsackInstance {
    /// Per element, the weight support as (weight, probability) pairs.
    pub supports: Vec<Vec<(f64, f64)>>,
    pub capacity: f64,
}

impl StochasticKnapsackInstance {
    pub fn new(
        supports: Vec<Vec<(f64, f64)>>,
        capacity: f64,
    ) -> Result<Self, SchemeError> {
        if capacity <= 0.0 || !capacity.is_finite() {
            return Err(SchemeError::BadParams(format!("capacity {capacity}")));
        }
        let mut expected_total = 0.0;
        for (i, support) in supports.iter().enumerate() {
            let mass: f64 = support.iter().map(|(_, p)| p).sum();
            if (mass - 1.0).abs() > 1e-9 {
                return Err(SchemeError::BadParams(format!(
                    "element {i} weight probabilities sum to {mass}"
                )));
            }
            for &(k, p) in support {
                if !(0.0..=capacity + 1e-12).contains(&k) || p < 0.0 {
                    return Err(SchemeError::BadParams(format!(
                        "element {i} weight {k} outside [0, K]"
                    )));
                }
                expected_total += k * p;
            }
        }
        if expected_total > capacity + 1e-9 {
            return Err(SchemeError::InfeasibleProcess(format!(
                "expected total weight {expected_total} exceeds capacity {capacity}"
            )));
        }
        Ok(Self { supports, capacity })
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    /// Largest possible weight over the capacity.
    pub fn k_star(&self) -> f64 {
        self.supports
            .iter()
            .flat_map(|s| s.iter())
            .filter(|(_, p)| *p > 0.0)
            .map(|(k, _)| k / self.capacity)
            .fold(0.0, f64::max)
    }
}

pub struct StochasticKnapsackScheme {
    instance: StochasticKnapsackInstance,
    gamma: f64,
    declared_c: f64,
    /// Pure gamma scheme when true; otherwise the 1/2-1/2 dichotomy.
    pure_gamma: bool,
    /// Gate denominators for the gamma path: `Pr[C_i(k)]` per (element,
    /// support index) in oracle mode, `estimate + eps` in estimated mode.
    gate: Vec<Vec<f64>>,
    /// Light-branch gate denominators (dichotomy only).
    gate_light: Vec<Vec<f64>>,
    /// Heavy-branch availability `Pr[A_i]`, closed form.
    avail_heavy: Vec<f64>,
    mode: ProbMode,
    branch_heavy: bool,
    selected: Vec<(usize, usize)>,
    weight: f64,
    heavy_taken: bool,
    clamps: u64,
}

/// Exact `Pr[C_i(k)]` tables by forward DP over the selected-weight
/// distribution; `light_only` restricts both selection and gating to weights
/// at most `K/2` with the fixed rate 1/3 (the dichotomy's light branch).
fn gate_oracle(
    instance: &StochasticKnapsackInstance,
    rate: f64,
    light_only: bool,
) -> Result<Vec<Vec<f64>>, SchemeError> {
    let cap = instance.capacity;
    let half = cap / 2.0;
    let mut tables = Vec::with_capacity(instance.len());
    let mut dist = WeightDist::zero();
    for support in &instance.supports {
        let mut gates = Vec::with_capacity(support.len());
        for &(k, _) in support {
            gates.push(dist.mass_at_most(cap - k));
        }
        tables.push(gates.clone());
        let mut raw = Vec::new();
        for &(w, pw) in &dist.entries {
            for (t, &(k, pk)) in support.iter().enumerate() {
                if pk == 0.0 {
                    continue;
                }
                let selectable = w <= cap - k + 1e-12 && (!light_only || k <= half);
                if selectable {
                    let gate = gates[t];
                    if gate < rate - 1e-9 {
                        return Err(SchemeError::InternalProbability(format!(
                            "Pr[C] = {gate} below rate {rate}"
                        )));
                    }
                    let sel = rate / gate;
                    raw.push((w + k, pw * pk * sel));
                    raw.push((w, pw * pk * (1.0 - sel)));
                } else {
                    raw.push((w, pw * pk));
                }
            }
        }
        dist = WeightDist::normalize(raw, cap)?;
    }
    Ok(tables)
}

/// Estimated gate tables per the efficient-implementation recipe: simulate
/// the scheme up to each element with earlier elements driven by their own
/// estimates; returns `estimate + eps` denominators.
fn gate_estimated(
    instance: &StochasticKnapsackInstance,
    rate: f64,
    light_only: bool,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Vec<Vec<f64>> {
    use rand::SeedableRng;
    let cap = instance.capacity;
    let half = cap / 2.0;
    let n = instance.len();
    let t_reps = estimation_repetitions(eps, delta, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut denom: Vec<Vec<f64>> = instance
        .supports
        .iter()
        .map(|s| vec![1.0; s.len()])
        .collect();
    let mut clamps = 0u64;
    for i in 0..n {
        for t in 0..instance.supports[i].len() {
            let (k_target, _) = instance.supports[i][t];
            let mut hits = 0u64;
            for _ in 0..t_reps {
                let mut w = 0.0f64;
                for (i2, support) in instance.supports.iter().enumerate().take(i) {
                    let probs: Vec<f64> = support.iter().map(|(_, p)| *p).collect();
                    let ti = sample_index(&probs, &mut rng);
                    let (k, _) = support[ti];
                    let selectable =
                        w <= cap - k + 1e-12 && (!light_only || k <= half);
                    if selectable {
                        let coin =
                            clamp_probability(rate / denom[i2][ti], &mut clamps);
                        if rng.gen::<f64>() < coin {
                            w += k;
                        }
                    }
                }
                hits += (w <= cap - k_target + 1e-12) as u64;
            }
            denom[i][t] = hits as f64 / t_reps as f64 + eps;
        }
    }
    denom
}

/// Build the stochastic knapsack OCRS.
pub fn stochastic_knapsack_ocrs(
    instance: StochasticKnapsackInstance,
    mode: ProbMode,
) -> Result<StochasticKnapsackScheme, SchemeError> {
    let k_star = instance
        .supports
        .iter()
        .flat_map(|s| s.iter())
        .filter(|(_, p)| *p > 0.0)
        .map(|(k, _)| k / instance.capacity)
        .fold(0.0, f64::max);
    let gamma = (1.0 - k_star) / (2.0 - k_star);
    let pure_gamma = gamma >= 1.0 / 6.0;
    let base_c = gamma.max(1.0 / 6.0);
    let (gate, gate_light, declared_c) = match mode {
        ProbMode::Oracle => {
            if pure_gamma {
                (gate_oracle(&instance, gamma, false)?, Vec::new(), base_c)
            } else {
                (
                    Vec::new(),
                    gate_oracle(&instance, 1.0 / 3.0, true)?,
                    base_c,
                )
            }
        }
        ProbMode::Estimated { eps, delta, seed } => {
            let degraded = base_c * (1.0 - delta) / (1.0 + 2.0 * eps / base_c);
            if pure_gamma {
                (
                    gate_estimated(&instance, gamma, false, eps, delta, seed),
                    Vec::new(),
                    degraded,
                )
            } else {
                (
                    Vec::new(),
                    gate_estimated(&instance, 1.0 / 3.0, true, eps, delta, seed),
                    degraded,
                )
            }
        }
    };
    // Closed-form heavy availability: Pr[A_{i+1}] = 1 - 1/3 sum Pr[heavy].
    let mut avail_heavy = Vec::with_capacity(instance.len());
    let mut prefix = 0.0;
    for support in &instance.supports {
        avail_heavy.push(1.0 - prefix / 3.0);
        let heavy_mass: f64 = support
            .iter()
            .filter(|(k, _)| *k > instance.capacity / 2.0)
            .map(|(_, p)| p)
            .sum();
        prefix += heavy_mass;
    }
    Ok(StochasticKnapsackScheme {
        instance,
        gamma,
        declared_c,
        pure_gamma,
        gate,
        gate_light,
        avail_heavy,
        mode,
        branch_heavy: false,
        selected: Vec::new(),
        weight: 0.0,
        heavy_taken: false,
        clamps: 0,
    })
}

impl StochasticKnapsackScheme {
    pub fn reset(&mut self, rng: &mut ChaCha8Rng) {
        self.selected.clear();
        self.weight = 0.0;
        self.heavy_taken = false;
        self.branch_heavy = !self.pure_gamma && rng.gen_bool(0.5);
    }

    /// Draw a weight index for element `i` from its prior.
    pub fn sample_weight_index(&self, i: usize, rng: &mut ChaCha8Rng) -> usize {
        let probs: Vec<f64> = self.instance.supports[i].iter().map(|(_, p)| *p).collect();
        sample_index(&probs, rng)
    }

    /// Offer element `i` with the realized support index `t`; returns the
    /// irrevocable selection decision.
    pub fn offer(&mut self, i: usize, t: usize, rng: &mut ChaCha8Rng) -> bool {
        let (k, _) = self.instance.supports[i][t];
        let cap = self.instance.capacity;
        let take = if self.pure_gamma {
            if self.weight <= cap - k + 1e-12 {
                let p = clamp_probability(self.gamma / self.gate[i][t], &mut self.clamps);
                rng.gen::<f64>() < p
            } else {
                false
            }
        } else if self.branch_heavy {
            if k > cap / 2.0 && !self.heavy_taken {
                let p = 1.0 / (3.0 * self.avail_heavy[i]);
                debug_assert!(p <= 1.0 + 1e-9, "heavy normalizer {p}");
                let p = clamp_probability(p, &mut self.clamps);
                if rng.gen::<f64>() < p {
                    self.heavy_taken = true;
                    true
                } else {
                    false
                }
            } else {
                false
            }
        } else if k <= cap / 2.0 && self.weight <= cap - k + 1e-12 {
            let p = clamp_probability(
                (1.0 / 3.0) / self.gate_light[i][t],
                &mut self.clamps,
            );
            rng.gen::<f64>() < p
        } else {
            false
        };
        if take {
            self.weight += k;
            self.selected.push((i, t));
        }
        take
    }

    pub fn selected(&self) -> &[(usize, usize)] {
        &self.selected
    }

    pub fn selected_weight(&self) -> f64 {
        self.weight
    }

    pub fn declared_c(&self) -> f64 {
        self.declared_c
    }

    pub fn k_star(&self) -> f64 {
        let cap = self.instance.capacity;
        self.instance
            .supports
            .iter()
            .flat_map(|s| s.iter())
            .filter(|(_, p)| *p > 0.0)
            .map(|(k, _)| k / cap)
            .fold(0.0, f64::max)
    }

    /// Exact selection probability of an arriving element given its weight,
    /// in oracle mode (`= c` for every element and weight).
    pub fn pstar(&self, _i: usize, _t: usize) -> Option<f64> {
        match self.mode {
            ProbMode::Oracle => Some(self.declared_c),
            ProbMode::Estimated { .. } => None,
        }
    }

    pub fn clamp_count(&self) -> u64 {
        self.clamps
    }

    pub fn capacity(&self) -> f64 {
        self.instance.capacity
    }

    pub fn instance(&self) -> &StochasticKnapsackInstance {
        &self.instance
    }
}
