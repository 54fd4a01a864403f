//! Statistical verification suites: per-element selectability, end-to-end
//! revenue identities, and the BIC audit. Trials fan out across workers with
//! per-trial seeds derived from (master seed, trial index); aggregation is
//! order-independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::{binomial_sigma, RateAccumulator};
use crate::instance::{
    is_feasible_set, sample_active_set, sample_index, AuctionInstance, FeasibilityConstraint,
    TwoLevelProcess,
};
use crate::lp::{brute_force_optimal_revenue, InterimRule, LpError};
use crate::mechanism::{run_tocrs_mechanism, MechError, MechanismConfig};
use crate::schemes::{run_scheme, TwoLevelScheme};

/// Per-trial randomness stream: one master seed, one stream per trial.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Serialize)]
pub struct ElementStat {
    pub agent: usize,
    pub item: usize,
    pub active: u64,
    pub selected: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectabilityReport {
    pub declared_c: f64,
    pub per_element: Vec<ElementStat>,
    pub min_rate: f64,
    /// Minimum number of active samples before an element is judged.
    pub min_samples: u64,
    pub feasibility_violations: u64,
    pub clamp_count: u64,
    pub trials: u64,
    pub pass: bool,
}

/// Measure conditional selection rates of a scheme over seeded trials and
/// judge them against the declared guarantee at 4 binomial sigmas.
pub fn verify_selectability<F>(
    builder: F,
    process: &TwoLevelProcess,
    constraint: &FeasibilityConstraint,
    trials: u64,
    master_seed: u64,
) -> SelectabilityReport
where
    F: Fn() -> Box<dyn TwoLevelScheme + Send> + Sync,
{
    let n = process.rows();
    let m = process.items();
    let workers = rayon::current_num_threads().max(1) as u64;
    let chunk = trials.div_ceil(workers);
    struct Partial {
        acc: Vec<RateAccumulator>,
        violations: u64,
        clamps: u64,
        c: f64,
    }
    let partials: Vec<Partial> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let mut scheme = builder();
            let (b, c) = scheme.guarantee();
            let mut acc = vec![RateAccumulator::default(); n * m];
            let mut violations = 0u64;
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(trials);
            for t in lo..hi {
                let mut rng = trial_rng(master_seed, t);
                let active = sample_active_set(process, b, &mut rng);
                let picked = run_scheme(scheme.as_mut(), &active, &mut rng);
                for (i, j) in active.cells() {
                    acc[i * m + j].push(false);
                }
                for &(i, j) in &picked {
                    // flip the earlier miss into a hit
                    acc[i * m + j].hits += 1;
                }
                if !is_feasible_set(constraint, n, m, &picked).unwrap_or(false) {
                    violations += 1;
                }
            }
            Partial { acc, violations, clamps: scheme.clamp_count(), c }
        })
        .collect();

    let mut acc = vec![RateAccumulator::default(); n * m];
    let mut violations = 0;
    let mut clamps = 0;
    let mut declared_c = 0.0;
    for p in &partials {
        for (a, b2) in acc.iter_mut().zip(&p.acc) {
            a.merge(b2);
        }
        violations += p.violations;
        clamps += p.clamps;
        declared_c = p.c;
    }
    let min_samples = 2000;
    let mut per_element = Vec::new();
    let mut min_rate = f64::INFINITY;
    let mut pass = violations == 0;
    for i in 0..n {
        for j in 0..m {
            let a = &acc[i * m + j];
            let rate = a.rate();
            if a.total >= min_samples {
                min_rate = min_rate.min(rate);
                let margin = 4.0 * binomial_sigma(declared_c, a.total);
                if rate < declared_c - margin {
                    pass = false;
                }
            }
            per_element.push(ElementStat {
                agent: i,
                item: j,
                active: a.total,
                selected: a.hits,
                rate,
            });
        }
    }
    SelectabilityReport {
        declared_c,
        per_element,
        min_rate,
        min_samples,
        feasibility_violations: violations,
        clamp_count: clamps,
        trials,
        pass,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EndToEndReport {
    pub lp_objective: f64,
    pub oracle_opt: Option<f64>,
    pub oracle_error: Option<String>,
    pub mean_revenue: f64,
    pub revenue_std_error: f64,
    /// The analytic target `b (c - eps) * lp_objective`.
    pub expected_revenue: f64,
    /// `mean_revenue / oracle_opt` when the oracle is available.
    pub achieved_ratio: Option<f64>,
    /// `b (c - eps)` — the guaranteed fraction of the LP objective.
    pub guarantee_ratio: f64,
    pub feasibility_violations: u64,
    pub trials: u64,
    /// Identity check: empirical mean within 4 standard errors of target.
    pub identity_pass: bool,
    /// Guarantee check against the oracle (when available).
    pub guarantee_pass: bool,
}

/// Run the sequential pipeline end to end and verify the revenue identity
/// and, on tiny instances, the approximation guarantee against the exact
/// oracle.
pub fn verify_end_to_end<F>(
    instance: &AuctionInstance,
    rule: &InterimRule,
    config: &MechanismConfig,
    builder: F,
    trials: u64,
    master_seed: u64,
) -> Result<EndToEndReport, MechError>
where
    F: Fn() -> (Box<dyn TwoLevelScheme + Send>, Option<Box<dyn TwoLevelScheme + Send>>) + Sync,
{
    let workers = rayon::current_num_threads().max(1) as u64;
    let chunk = trials.div_ceil(workers);
    let partials: Vec<Result<(f64, f64, u64), MechError>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let (mut live, mut sim) = builder();
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut violations = 0u64;
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(trials);
            for t in lo..hi {
                let mut rng = trial_rng(master_seed, t);
                let reports: Vec<usize> = (0..instance.n)
                    .map(|i| sample_index(&instance.agents[i].probs, &mut rng))
                    .collect();
                let out = run_tocrs_mechanism(
                    instance,
                    rule,
                    config,
                    live.as_mut(),
                    sim.as_mut().map(|s| s.as_mut() as &mut dyn TwoLevelScheme),
                    &reports,
                    &mut rng,
                )?;
                let rev = out.revenue();
                sum += rev;
                sum_sq += rev * rev;
                if !is_feasible_set(&instance.constraint, instance.n, instance.m, &out.allocation)
                    .unwrap_or(false)
                {
                    violations += 1;
                }
            }
            Ok((sum, sum_sq, violations))
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut violations = 0;
    for p in partials {
        let (s, ss, v) = p?;
        sum += s;
        sum_sq += ss;
        violations += v;
    }
    let tf = trials as f64;
    let mean = sum / tf;
    let var = (sum_sq / tf - mean * mean).max(0.0);
    let std_error = (var / tf).sqrt();
    let expected = config.b * (config.c - config.eps) * rule.objective;
    let identity_pass = (mean - expected).abs() <= 4.0 * std_error + 1e-9;

    let (oracle_opt, oracle_error) = match brute_force_optimal_revenue(instance) {
        Ok(v) => (Some(v), None),
        Err(LpError::TooLarge(msg)) => (None, Some(msg)),
        Err(e) => (None, Some(e.to_string())),
    };
    let achieved_ratio = oracle_opt.map(|opt| mean / opt);
    let guarantee_ratio = config.b * (config.c - config.eps);
    let guarantee_pass = match oracle_opt {
        Some(opt) => mean >= guarantee_ratio * opt - 4.0 * std_error - 1e-9,
        None => true,
    };
    Ok(EndToEndReport {
        lp_objective: rule.objective,
        oracle_opt,
        oracle_error,
        mean_revenue: mean,
        revenue_std_error: std_error,
        expected_revenue: expected,
        achieved_ratio,
        guarantee_ratio,
        feasibility_violations: violations,
        trials,
        identity_pass,
        guarantee_pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BicCell {
    pub agent: usize,
    pub true_type: usize,
    pub report: usize,
    pub mean_utility: f64,
    pub std_error: f64,
    pub analytic_utility: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BicReport {
    pub cells: Vec<BicCell>,
    /// (agent, true type, misreport) triples where truth lost by more than
    /// the 4-sigma margin.
    pub bic_violations: u64,
    /// Cells whose empirical utility strayed from the analytic identity.
    pub identity_violations: u64,
    pub pass: bool,
}

/// Empirical BIC audit: for every (agent, report) pair, estimate expected
/// utilities for every true type at once, then compare truth against every
/// misreport and against the analytic identity
/// `b (c - eps) (sum_j v_j pi_j(r) - q(r))`.
pub fn audit_bic<F>(
    instance: &AuctionInstance,
    rule: &InterimRule,
    config: &MechanismConfig,
    builder: F,
    trials_per_report: u64,
    master_seed: u64,
) -> Result<BicReport, MechError>
where
    F: Fn() -> (Box<dyn TwoLevelScheme + Send>, Option<Box<dyn TwoLevelScheme + Send>>) + Sync,
{
    let scale = config.b * (config.c - config.eps);
    // mean/variance of utility per (agent, true type, report)
    let mut cells = Vec::new();
    let mut bic_violations = 0u64;
    let mut identity_violations = 0u64;

    for i in 0..instance.n {
        let types = instance.support_size(i);
        // estimates[t][r] = (mean, var)
        let per_report: Vec<Vec<(f64, f64)>> = (0..types)
            .into_par_iter()
            .map(|r| {
                let (mut live, mut sim) = builder();
                let mut sums = vec![0.0; types];
                let mut sums_sq = vec![0.0; types];
                for t in 0..trials_per_report {
                    let mut rng = trial_rng(master_seed ^ ((i as u64) << 32), (r as u64) * trials_per_report + t);
                    let reports: Vec<usize> = (0..instance.n)
                        .map(|i2| {
                            if i2 == i {
                                r
                            } else {
                                sample_index(&instance.agents[i2].probs, &mut rng)
                            }
                        })
                        .collect();
                    let out = run_tocrs_mechanism(
                        instance,
                        rule,
                        config,
                        live.as_mut(),
                        sim.as_mut().map(|s| s.as_mut() as &mut dyn TwoLevelScheme),
                        &reports,
                        &mut rng,
                    )?;
                    let items: Vec<usize> = out
                        .allocation
                        .iter()
                        .filter(|(ai, _)| *ai == i)
                        .map(|&(_, j)| j)
                        .collect();
                    for tt in 0..types {
                        let value: f64 = items
                            .iter()
                            .map(|&j| instance.agents[i].support[tt][j])
                            .sum();
                        let u = value - out.payments[i];
                        sums[tt] += u;
                        sums_sq[tt] += u * u;
                    }
                }
                let tf = trials_per_report as f64;
                Ok((0..types)
                    .map(|tt| {
                        let mean = sums[tt] / tf;
                        let var = (sums_sq[tt] / tf - mean * mean).max(0.0);
                        (mean, var)
                    })
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>, MechError>>()?;

        let tf = trials_per_report as f64;
        for tt in 0..types {
            for r in 0..types {
                let (mean, var) = per_report[r][tt];
                let se = (var / tf).sqrt();
                let analytic = scale
                    * ((0..instance.m)
                        .map(|j| instance.agents[i].support[tt][j] * rule.pi[i][r][j])
                        .sum::<f64>()
                        - rule.q[i][r]);
                if (mean - analytic).abs() > 4.0 * se + 1e-9 {
                    identity_violations += 1;
                }
                cells.push(BicCell {
                    agent: i,
                    true_type: tt,
                    report: r,
                    mean_utility: mean,
                    std_error: se,
                    analytic_utility: analytic,
                });
            }
            // truthful report dominates every misreport within noise
            let (truth_mean, truth_var) = per_report[tt][tt];
            for r in 0..types {
                if r == tt {
                    continue;
                }
                let (mis_mean, mis_var) = per_report[r][tt];
                let se_diff = ((truth_var + mis_var) / tf).sqrt();
                if truth_mean < mis_mean - 4.0 * se_diff - 1e-9 {
                    bic_violations += 1;
                }
            }
        }
    }
    let pass = bic_violations == 0 && identity_violations == 0;
    Ok(BicReport { cells, bic_violations, identity_violations, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate::{generate_feasible_process, ConstraintKind, GeneratorParams};
    use crate::instance::AgentTypeSpace;
    use crate::lp::{build_lp1, interim_from_lp1, solve_lp};
    use crate::mechanism::KeepCoinMode;
    use crate::schemes::{
        k_uniform_row_ocrs, knapsack_tocrs, single_copy_column_ocrs, vh_compose, ProbMode,
    };

    #[test]
    fn always_select_scheme_reports_rate_one() {
        let process = TwoLevelProcess::new(
            vec![vec![1.0]],
            vec![vec![vec![0.7, 0.7]]],
        )
        .unwrap();
        let constraint = FeasibilityConstraint::Vh { row_limits: vec![2], col_limits: vec![1, 1] };
        let p2 = process.clone();
        let report = verify_selectability(
            move || {
                let rows = vec![k_uniform_row_ocrs(1.0, 2, &p2.activation[0]).unwrap()];
                let cols = (0..2)
                    .map(|j| single_copy_column_ocrs(1.0, &[p2.marginal(0, j)]).unwrap())
                    .collect();
                Box::new(vh_compose(1.0, rows, cols).unwrap()) as Box<dyn TwoLevelScheme + Send>
            },
            &process,
            &constraint,
            20_000,
            7,
        );
        assert!(report.pass);
        assert!((report.min_rate - 1.0).abs() < 1e-12);
        assert_eq!(report.feasibility_violations, 0);
    }

    #[test]
    fn knapsack_selectability_on_random_feasible_process() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let params = GeneratorParams {
            n: 3,
            m: 3,
            kind: ConstraintKind::Knapsack,
            ..Default::default()
        };
        let weights = vec![
            vec![1.0, 0.5, 1.5],
            vec![0.75, 2.0, 0.25],
            vec![1.25, 0.5, 1.0],
        ];
        let capacity = params.capacity;
        let constraint =
            FeasibilityConstraint::Knapsack { weights: weights.clone(), capacity };
        let process = generate_feasible_process(&constraint, 3, 3, 2, &mut rng);
        let p2 = process.clone();
        let w2 = weights.clone();
        let report = verify_selectability(
            move || {
                Box::new(
                    knapsack_tocrs(1.0, &w2, capacity, &p2, ProbMode::Oracle).unwrap(),
                ) as Box<dyn TwoLevelScheme + Send>
            },
            &process,
            &constraint,
            60_000,
            8,
        );
        assert!(report.pass, "report {:#?}", report.min_rate);
        assert!(report.min_rate >= 0.1 - 0.02);
        assert_eq!(report.clamp_count, 0);
    }

    #[test]
    fn end_to_end_identity_on_tiny_single_copy() {
        let instance = AuctionInstance::new(
            vec![
                AgentTypeSpace::new(vec![vec![1.0], vec![2.0]], vec![0.5, 0.5]).unwrap(),
                AgentTypeSpace::new(vec![vec![1.5]], vec![1.0]).unwrap(),
            ],
            1,
            FeasibilityConstraint::SingleCopyPerItem,
        )
        .unwrap();
        let sol = solve_lp(&build_lp1(&instance).unwrap()).unwrap();
        let rule = interim_from_lp1(&instance, &sol).unwrap();
        let process = rule.induced_process(&instance);
        let b = 1.0;
        let build = || {
            let rows: Vec<_> = (0..2)
                .map(|i| k_uniform_row_ocrs(b, 1, &process.activation[i]).unwrap())
                .collect();
            let cols = vec![single_copy_column_ocrs(
                b,
                &[process.marginal(0, 0), process.marginal(1, 0)],
            )
            .unwrap()];
            let s = vh_compose(b, rows, cols).unwrap();
            (
                Box::new(s) as Box<dyn TwoLevelScheme + Send>,
                None::<Box<dyn TwoLevelScheme + Send>>,
            )
        };
        let c = build().0.guarantee().1;
        let config = MechanismConfig { b, c, eps: 0.0, keep_mode: KeepCoinMode::KnownProbability };
        let report =
            verify_end_to_end(&instance, &rule, &config, build, 60_000, 11).unwrap();
        assert!(report.identity_pass, "mean {} vs {}", report.mean_revenue, report.expected_revenue);
        assert!(report.guarantee_pass);
        assert_eq!(report.feasibility_violations, 0);
        assert!(report.oracle_opt.is_some());
    }

    #[test]
    fn bic_audit_clean_on_posted_price_rule() {
        let instance = AuctionInstance::new(
            vec![AgentTypeSpace::new(vec![vec![1.0], vec![2.0]], vec![0.5, 0.5]).unwrap()],
            1,
            FeasibilityConstraint::SingleCopyPerItem,
        )
        .unwrap();
        let sol = solve_lp(&build_lp1(&instance).unwrap()).unwrap();
        let rule = interim_from_lp1(&instance, &sol).unwrap();
        let process = rule.induced_process(&instance);
        let b = 1.0;
        let build = || {
            let rows = vec![k_uniform_row_ocrs(b, 1, &process.activation[0]).unwrap()];
            let cols = vec![single_copy_column_ocrs(b, &[process.marginal(0, 0)]).unwrap()];
            (
                Box::new(vh_compose(b, rows, cols).unwrap()) as Box<dyn TwoLevelScheme + Send>,
                None::<Box<dyn TwoLevelScheme + Send>>,
            )
        };
        let c = build().0.guarantee().1;
        let config = MechanismConfig { b, c, eps: 0.0, keep_mode: KeepCoinMode::KnownProbability };
        let report = audit_bic(&instance, &rule, &config, build, 40_000, 13).unwrap();
        assert!(report.pass, "{report:#?}");
    }
}
