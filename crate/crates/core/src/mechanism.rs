//! End-to-end frameworks: the non-sequential mechanism (one batched scheme
//! query), the sequential mechanism (per-agent finalization), and the
//! sequential procurement auction, together with the simulated `p*`-coin and
//! the keep-coin that exactifies allocation probabilities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bernoulli::{constant_coin, divide, BernoulliError, Coin};
use crate::instance::{sample_index, AuctionInstance};
use crate::lp::{InterimRule, ProcurementInstance, ProcurementInterimRule};
use crate::schemes::{SchemeError, StochasticKnapsackScheme, TwoLevelScheme};

#[derive(Debug, Error)]
pub enum MechError {
    #[error("bad mechanism configuration: {0}")]
    BadConfig(String),
    #[error("keep-coin precondition failed: {0} (signals a scheme guarantee bug)")]
    KeepCoinPrecondition(String),
    #[error("scheme cannot supply p* in closed form; use the exact or estimated keep mode")]
    MissingPstar,
    #[error(transparent)]
    Bernoulli(#[from] BernoulliError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// How the keep-coin bias `(c - eps) / p*` is realized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeepCoinMode {
    /// Exact division factory over a simulated `p*`-coin; requires eps > 0.
    ExactBernoulli,
    /// `p*` known in closed form (oracle-mode schemes); allows eps = 0.
    KnownProbability,
    /// `p*` estimated from the given number of simulations; introduces a
    /// small incentive error, reported rather than hidden.
    Estimated { samples: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct MechanismConfig {
    pub b: f64,
    /// Declared scheme selectability used for payments and keep-coins.
    pub c: f64,
    pub eps: f64,
    pub keep_mode: KeepCoinMode,
}

impl MechanismConfig {
    pub fn validate(&self) -> Result<(), MechError> {
        if !(self.b > 0.0 && self.b <= 1.0) {
            return Err(MechError::BadConfig(format!("b = {}", self.b)));
        }
        if self.c - self.eps <= 0.0 {
            return Err(MechError::BadConfig(format!(
                "c - eps = {} must be positive",
                self.c - self.eps
            )));
        }
        if self.eps == 0.0 && self.keep_mode == KeepCoinMode::ExactBernoulli {
            return Err(MechError::BadConfig(
                "the exact keep mode needs eps > 0 (it is the division margin)".into(),
            ));
        }
        Ok(())
    }
}

/// Ordered event log of one mechanism run; replayable to identical outcome
/// under the same seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TraceEvent {
    Report { agent: usize, type_index: usize },
    Payment { agent: usize, amount: f64 },
    Activation { agent: usize, item: usize, active: bool },
    SchemeDecision { agent: usize, item: usize, selected: bool },
    KeepFlip { agent: usize, item: usize, kept: bool, pstar_tosses: u64 },
    Allocation { agent: usize, item: usize },
    ProcurementPayment { seller: usize, amount: f64 },
    Service { seller: usize, service: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunTrace {
    pub events: Vec<TraceEvent>,
}

/// Outcome of one auction mechanism run.
#[derive(Debug, Clone, Serialize)]
pub struct MechanismOutcome {
    pub allocation: Vec<(usize, usize)>,
    pub payments: Vec<f64>,
    pub trace: RunTrace,
    /// Total `p*`-coin simulations consumed by keep-coins.
    pub pstar_tosses: u64,
}

impl MechanismOutcome {
    pub fn revenue(&self) -> f64 {
        self.payments.iter().sum()
    }
}

/// A `p*`-coin: each flip simulates the full scheme run with the target cell
/// forced active (activation is independent, so forcing equals conditioning
/// on activity) and reports whether the scheme selected it. One toss per
/// flip.
pub struct PstarCoin<'a> {
    instance: &'a AuctionInstance,
    rule: &'a InterimRule,
    scheme: &'a mut dyn TwoLevelScheme,
    b: f64,
    agent: usize,
    item: usize,
    report: usize,
    tosses: u64,
}

/// Build the `p*`-coin for cell `(agent, item)` under the fixed `report`.
pub fn pstar_coin<'a>(
    instance: &'a AuctionInstance,
    rule: &'a InterimRule,
    scheme: &'a mut dyn TwoLevelScheme,
    b: f64,
    agent: usize,
    item: usize,
    report: usize,
) -> PstarCoin<'a> {
    PstarCoin { instance, rule, scheme, b, agent, item, report, tosses: 0 }
}

impl Coin for PstarCoin<'_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        self.tosses += 1;
        self.scheme.reset(rng);
        let mut picked = false;
        for i in 0..self.instance.n {
            let r = if i == self.agent {
                self.report
            } else {
                sample_index(&self.instance.agents[i].probs, rng)
            };
            self.scheme.begin_row(i, r);
            for j in 0..self.instance.m {
                let active = if (i, j) == (self.agent, self.item) {
                    true
                } else {
                    rng.gen::<f64>() < self.b * self.rule.pi[i][r][j]
                };
                let sel = self.scheme.offer(i, j, active, rng);
                if (i, j) == (self.agent, self.item) {
                    picked = sel;
                }
            }
        }
        picked
    }

    fn tosses(&self) -> u64 {
        self.tosses
    }

    fn bias(&self) -> Option<f64> {
        self.scheme.pstar(self.agent, self.item, self.report)
    }
}

struct BorrowedCoin<'a, 'b>(&'a mut PstarCoin<'b>);

impl Coin for BorrowedCoin<'_, '_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        self.0.flip(rng)
    }
    fn tosses(&self) -> u64 {
        self.0.tosses()
    }
    fn bias(&self) -> Option<f64> {
        self.0.bias()
    }
}

/// A keep-coin over a `p*`-coin: bias `(c - eps) / p*` under the configured
/// mode. In the exact mode every flip runs the division factory afresh.
pub struct KeepCoin<'a, 'b> {
    pstar: &'a mut PstarCoin<'b>,
    c: f64,
    eps: f64,
    mode: KeepCoinMode,
    flips: u64,
}

/// Build a keep-coin; exact mode requires `eps > 0` (the division margin).
pub fn keep_coin<'a, 'b>(
    pstar: &'a mut PstarCoin<'b>,
    c: f64,
    eps: f64,
    mode: KeepCoinMode,
) -> Result<KeepCoin<'a, 'b>, MechError> {
    if c - eps <= 0.0 {
        return Err(MechError::BadConfig(format!("c - eps = {}", c - eps)));
    }
    if eps <= 0.0 && mode == KeepCoinMode::ExactBernoulli {
        return Err(MechError::BadConfig("exact keep mode needs eps > 0".into()));
    }
    Ok(KeepCoin { pstar, c, eps, mode, flips: 0 })
}

impl Coin for KeepCoin<'_, '_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        self.flips += 1;
        keep_flip(self.pstar, self.c, self.eps, self.mode, rng)
            .map(|(kept, _)| kept)
            .unwrap_or(false)
    }
    fn tosses(&self) -> u64 {
        self.pstar.tosses()
    }
    fn bias(&self) -> Option<f64> {
        self.pstar.bias().map(|p| (self.c - self.eps) / p)
    }
}

/// One keep decision with bias `(c - eps) / p*` under the given mode.
/// Returns (kept, number of `p*`-coin simulations consumed).
pub fn keep_flip(
    pstar: &mut PstarCoin<'_>,
    c: f64,
    eps: f64,
    mode: KeepCoinMode,
    rng: &mut ChaCha8Rng,
) -> Result<(bool, u64), MechError> {
    let target = c - eps;
    let before = pstar.tosses();
    match mode {
        KeepCoinMode::KnownProbability => {
            let p = pstar.bias().ok_or(MechError::MissingPstar)?;
            if p < c - 1e-9 {
                return Err(MechError::KeepCoinPrecondition(format!(
                    "p* = {p} below c = {c}"
                )));
            }
            Ok((rng.gen::<f64>() < target / p, 0))
        }
        KeepCoinMode::ExactBernoulli => {
            let numerator = constant_coin(target)?;
            let mut coin =
                divide(Box::new(numerator), Box::new(BorrowedCoin(pstar)), eps)?;
            let kept = coin.flip(rng);
            drop(coin);
            Ok((kept, pstar.tosses() - before))
        }
        KeepCoinMode::Estimated { samples } => {
            let mut hits = 0u64;
            for _ in 0..samples {
                hits += pstar.flip(rng) as u64;
            }
            let est = hits.max(1) as f64 / samples as f64;
            Ok((
                rng.gen::<f64>() < (target / est).min(1.0),
                pstar.tosses() - before,
            ))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_keep(
    instance: &AuctionInstance,
    rule: &InterimRule,
    config: &MechanismConfig,
    sim: &mut Option<&mut dyn TwoLevelScheme>,
    live: &dyn TwoLevelScheme,
    agent: usize,
    item: usize,
    report: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(bool, u64), MechError> {
    match config.keep_mode {
        KeepCoinMode::KnownProbability => {
            // p* comes from the live scheme's closed form; no simulations.
            let p = live
                .pstar(agent, item, report)
                .ok_or(MechError::MissingPstar)?;
            if p < config.c - 1e-9 {
                return Err(MechError::KeepCoinPrecondition(format!(
                    "p* = {p} below c = {}",
                    config.c
                )));
            }
            Ok((rng.gen::<f64>() < (config.c - config.eps) / p, 0))
        }
        _ => {
            let sim_scheme = sim.as_deref_mut().ok_or_else(|| {
                MechError::BadConfig("this keep mode needs a simulation scheme".into())
            })?;
            let mut coin =
                pstar_coin(instance, rule, sim_scheme, config.b, agent, item, report);
            keep_flip(&mut coin, config.c, config.eps, config.keep_mode, rng)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_mechanism_impl(
    instance: &AuctionInstance,
    rule: &InterimRule,
    config: &MechanismConfig,
    live: &mut dyn TwoLevelScheme,
    mut sim: Option<&mut dyn TwoLevelScheme>,
    reports: &[usize],
    sequential: bool,
    rng: &mut ChaCha8Rng,
) -> Result<MechanismOutcome, MechError> {
    config.validate()?;
    if reports.len() != instance.n {
        return Err(MechError::BadConfig(format!(
            "{} reports for {} agents",
            reports.len(),
            instance.n
        )));
    }
    let (b, c, eps) = (config.b, config.c, config.eps);
    let mut trace = RunTrace::default();
    let mut payments = vec![0.0; instance.n];
    let mut allocation = Vec::new();
    let mut pstar_total = 0u64;

    if !sequential {
        for (i, &r) in reports.iter().enumerate() {
            trace.events.push(TraceEvent::Report { agent: i, type_index: r });
            payments[i] = b * (c - eps) * rule.q[i][r];
            trace.events.push(TraceEvent::Payment { agent: i, amount: payments[i] });
        }
    }

    live.reset(rng);
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for (i, &r) in reports.iter().enumerate() {
        if sequential {
            trace.events.push(TraceEvent::Report { agent: i, type_index: r });
            payments[i] = b * (c - eps) * rule.q[i][r];
            trace.events.push(TraceEvent::Payment { agent: i, amount: payments[i] });
        }
        live.begin_row(i, r);
        for j in 0..instance.m {
            let active = rng.gen::<f64>() < b * rule.pi[i][r][j];
            trace.events.push(TraceEvent::Activation { agent: i, item: j, active });
            let selected = live.offer(i, j, active, rng);
            trace.events.push(TraceEvent::SchemeDecision { agent: i, item: j, selected });
            if selected {
                pending.push((i, j));
            }
        }
        if sequential {
            // agent i's outcome is final before the next report is read
            for &(ai, aj) in pending.iter() {
                let (kept, tosses) =
                    run_keep(instance, rule, config, &mut sim, live, ai, aj, r, rng)?;
                pstar_total += tosses;
                trace.events.push(TraceEvent::KeepFlip {
                    agent: ai,
                    item: aj,
                    kept,
                    pstar_tosses: tosses,
                });
                if kept {
                    allocation.push((ai, aj));
                    trace.events.push(TraceEvent::Allocation { agent: ai, item: aj });
                }
            }
            pending.clear();
        }
    }
    if !sequential {
        for &(ai, aj) in &pending {
            let (kept, tosses) = run_keep(
                instance,
                rule,
                config,
                &mut sim,
                live,
                ai,
                aj,
                reports[ai],
                rng,
            )?;
            pstar_total += tosses;
            trace.events.push(TraceEvent::KeepFlip {
                agent: ai,
                item: aj,
                kept,
                pstar_tosses: tosses,
            });
            if kept {
                allocation.push((ai, aj));
                trace.events.push(TraceEvent::Allocation { agent: ai, item: aj });
            }
        }
    }
    Ok(MechanismOutcome { allocation, payments, trace, pstar_tosses: pstar_total })
}

/// Non-sequential framework: elicit all reports, charge `b (c - eps) q`,
/// query the scheme once on a batched active set, then keep-flip each
/// selected element.
pub fn run_tcrs_mechanism(
    instance: &AuctionInstance,
    rule: &InterimRule,
    config: &MechanismConfig,
    live: &mut dyn TwoLevelScheme,
    sim: Option<&mut dyn TwoLevelScheme>,
    reports: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<MechanismOutcome, MechError> {
    run_mechanism_impl(instance, rule, config, live, sim, reports, false, rng)
}

/// Sequential framework: agents arrive in index order; agent `i`'s payment
/// and allocation are finalized before the next report is read.
pub fn run_tocrs_mechanism(
    instance: &AuctionInstance,
    rule: &InterimRule,
    config: &MechanismConfig,
    live: &mut dyn TwoLevelScheme,
    sim: Option<&mut dyn TwoLevelScheme>,
    reports: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<MechanismOutcome, MechError> {
    run_mechanism_impl(instance, rule, config, live, sim, reports, true, rng)
}

/// Outcome of one procurement run.
#[derive(Debug, Clone, Serialize)]
pub struct ProcurementOutcome {
    pub payments: Vec<f64>,
    pub services: Vec<(usize, usize)>,
    pub buyer_value: f64,
    pub trace: RunTrace,
}

/// Build the stochastic-knapsack input induced by a procurement rule: seller
/// `i`'s weight is the interim payment of their reported cost type, the
/// capacity is the budget; admissibility is the budget row of the rule.
pub fn procurement_ocrs_instance(
    instance: &ProcurementInstance,
    rule: &ProcurementInterimRule,
) -> Result<crate::schemes::StochasticKnapsackInstance, SchemeError> {
    let supports = (0..instance.n)
        .map(|i| {
            instance.sellers[i]
                .probs
                .iter()
                .zip(&rule.q[i])
                .map(|(p, q)| (*q, *p))
                .collect()
        })
        .collect();
    crate::schemes::StochasticKnapsackInstance::new(supports, instance.budget)
}

/// Sequential procurement auction: seller `i` reports, the scheme is queried
/// with weight `q_i(r_i)`; on selection the seller is paid that amount with
/// probability `(c - eps)/p*` (expected payment `(c - eps) q_i(r_i)`), and
/// each service is independently procured with probability
/// `(c - eps) pi_{i,j}(r_i)`. Realized payments never exceed the budget.
pub fn run_procurement(
    instance: &ProcurementInstance,
    rule: &ProcurementInterimRule,
    scheme: &mut StochasticKnapsackScheme,
    eps: f64,
    reports: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<ProcurementOutcome, MechError> {
    if reports.len() != instance.n {
        return Err(MechError::BadConfig(format!(
            "{} reports for {} sellers",
            reports.len(),
            instance.n
        )));
    }
    let c = scheme.declared_c();
    if c - eps <= 0.0 {
        return Err(MechError::BadConfig(format!("c - eps = {}", c - eps)));
    }
    let mut trace = RunTrace::default();
    let mut payments = vec![0.0; instance.n];
    let mut services = Vec::new();
    let mut buyer_value = 0.0;
    scheme.reset(rng);
    for (i, &r) in reports.iter().enumerate() {
        trace.events.push(TraceEvent::Report { agent: i, type_index: r });
        let selected = scheme.offer(i, r, rng);
        trace.events.push(TraceEvent::SchemeDecision { agent: i, item: r, selected });
        if selected {
            let p = scheme.pstar(i, r).ok_or(MechError::MissingPstar)?;
            if p < c - 1e-9 {
                return Err(MechError::KeepCoinPrecondition(format!(
                    "p* = {p} below c = {c}"
                )));
            }
            if rng.gen::<f64>() < (c - eps) / p {
                payments[i] = rule.q[i][r];
                trace.events.push(TraceEvent::ProcurementPayment {
                    seller: i,
                    amount: payments[i],
                });
            }
        }
        for j in 0..instance.m {
            if rng.gen::<f64>() < (c - eps) * rule.pi[i][r][j] {
                services.push((i, j));
                buyer_value += instance.values[i][j];
                trace.events.push(TraceEvent::Service { seller: i, service: j });
            }
        }
    }
    Ok(ProcurementOutcome { payments, services, buyer_value, trace })
}
