//! Python bindings: the main pipeline operations over JSON-encoded
//! instances, mirroring the CLI surface.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crsmech::bernoulli::{constant_coin, divide, Coin};
use crsmech::harness::{
    audit_bic, build_named_scheme, generate_instance as gen_instance,
    generate_procurement as gen_procurement, trial_rng, verify_end_to_end, verify_selectability,
    ConstraintKind, GeneratorParams,
};
use crsmech::instance::{sample_index, AuctionInstance};
use crsmech::lp::{
    brute_force_optimal_revenue, build_lp1, build_lp2, interim_from_lp1, interim_from_lp2,
    solve_lp as lp_solve, ProcurementInstance,
};
use crsmech::mechanism::{
    procurement_ocrs_instance, run_procurement as run_proc, KeepCoinMode, MechanismConfig,
};
use crsmech::schemes::{stochastic_knapsack_ocrs, ProbMode};

fn value_err(msg: impl ToString) -> PyErr {
    PyValueError::new_err(msg.to_string())
}

fn runtime_err(msg: impl ToString) -> PyErr {
    PyRuntimeError::new_err(msg.to_string())
}

fn parse_kind(kind: &str) -> PyResult<ConstraintKind> {
    match kind {
        "single-copy" => Ok(ConstraintKind::SingleCopy),
        "k-uniform" => Ok(ConstraintKind::KUniform),
        "knapsack" => Ok(ConstraintKind::Knapsack),
        "multi-choice" => Ok(ConstraintKind::MultiChoice),
        "vh" => Ok(ConstraintKind::Vh),
        other => Err(value_err(format!("unknown constraint kind {other:?}"))),
    }
}

/// Generate a random auction instance as JSON.
#[pyfunction]
#[pyo3(signature = (kind, n, m, types, seed, capacity=2.0))]
fn generate_instance(
    kind: &str,
    n: usize,
    m: usize,
    types: usize,
    seed: u64,
    capacity: f64,
) -> PyResult<String> {
    let params = GeneratorParams {
        n,
        m,
        types_per_agent: types,
        kind: parse_kind(kind)?,
        capacity,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(gen_instance(&params, &mut rng).map_err(value_err)?.to_json())
}

/// Generate a random procurement instance as JSON.
#[pyfunction]
#[pyo3(signature = (n, m, types, budget, seed))]
fn generate_procurement(
    n: usize,
    m: usize,
    types: usize,
    budget: f64,
    seed: u64,
) -> PyResult<String> {
    let params = GeneratorParams {
        n,
        m,
        types_per_agent: types,
        kind: ConstraintKind::SingleCopy,
        capacity: budget,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(gen_procurement(&params, &mut rng).map_err(value_err)?.to_json())
}

/// Solve the interim relaxation of an auction or procurement instance;
/// returns `{kind, objective, pi, q}` as JSON.
#[pyfunction]
fn solve_interim_lp(instance_json: &str) -> PyResult<String> {
    let value: serde_json::Value =
        serde_json::from_str(instance_json).map_err(value_err)?;
    if value.get("budget").is_some() {
        let instance = ProcurementInstance::from_json(instance_json).map_err(value_err)?;
        let sol = lp_solve(&build_lp2(&instance).map_err(runtime_err)?).map_err(runtime_err)?;
        let rule = interim_from_lp2(&instance, &sol).map_err(runtime_err)?;
        Ok(serde_json::json!({
            "kind": "procurement",
            "objective": rule.objective,
            "pi": rule.pi,
            "q": rule.q,
        })
        .to_string())
    } else {
        let instance = AuctionInstance::from_json(instance_json).map_err(value_err)?;
        let sol = lp_solve(&build_lp1(&instance).map_err(runtime_err)?).map_err(runtime_err)?;
        let rule = interim_from_lp1(&instance, &sol).map_err(runtime_err)?;
        Ok(serde_json::json!({
            "kind": "auction",
            "objective": rule.objective,
            "pi": rule.pi,
            "q": rule.q,
        })
        .to_string())
    }
}

/// Exact optimal BIC-IR revenue of a tiny auction instance.
#[pyfunction]
fn optimal_revenue(instance_json: &str) -> PyResult<f64> {
    let instance = AuctionInstance::from_json(instance_json).map_err(value_err)?;
    brute_force_optimal_revenue(&instance).map_err(runtime_err)
}

/// Run a scheme's selectability verification; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (instance_json, scheme, b, trials, seed))]
fn run_scheme(
    instance_json: &str,
    scheme: &str,
    b: f64,
    trials: u64,
    seed: u64,
) -> PyResult<String> {
    let instance = AuctionInstance::from_json(instance_json).map_err(value_err)?;
    let sol = lp_solve(&build_lp1(&instance).map_err(runtime_err)?).map_err(runtime_err)?;
    let rule = interim_from_lp1(&instance, &sol).map_err(runtime_err)?;
    let process = rule.induced_process(&instance);
    let report = verify_selectability(
        || {
            build_named_scheme(scheme, &instance, &process, b, ProbMode::Oracle)
                .expect("scheme builds")
        },
        &process,
        &instance.constraint,
        trials,
        seed,
    );
    serde_json::to_string(&report).map_err(runtime_err)
}

/// Run the sequential mechanism pipeline; returns the summary as JSON.
#[pyfunction]
#[pyo3(signature = (instance_json, scheme, b, eps, trials, seed))]
fn run_mechanism(
    instance_json: &str,
    scheme: &str,
    b: f64,
    eps: f64,
    trials: u64,
    seed: u64,
) -> PyResult<String> {
    let instance = AuctionInstance::from_json(instance_json).map_err(value_err)?;
    let sol = lp_solve(&build_lp1(&instance).map_err(runtime_err)?).map_err(runtime_err)?;
    let rule = interim_from_lp1(&instance, &sol).map_err(runtime_err)?;
    let process = rule.induced_process(&instance);
    let builder = || {
        (
            build_named_scheme(scheme, &instance, &process, b, ProbMode::Oracle)
                .expect("scheme builds"),
            None,
        )
    };
    let c = builder().0.guarantee().1;
    let config = MechanismConfig { b, c, eps, keep_mode: KeepCoinMode::KnownProbability };
    let report = verify_end_to_end(&instance, &rule, &config, builder, trials, seed)
        .map_err(runtime_err)?;
    let bic = audit_bic(
        &instance,
        &rule,
        &config,
        builder,
        (trials / 10).clamp(2_000, 50_000),
        seed ^ 0x5eed,
    )
    .map_err(runtime_err)?;
    Ok(serde_json::json!({
        "mean_revenue": report.mean_revenue,
        "lp_objective": report.lp_objective,
        "expected_revenue": report.expected_revenue,
        "oracle_opt": report.oracle_opt,
        "ratio": report.achieved_ratio,
        "guarantee_ratio": report.guarantee_ratio,
        "bic_violations": bic.bic_violations,
        "feasibility_violations": report.feasibility_violations,
        "identity_pass": report.identity_pass,
        "trials": report.trials,
    })
    .to_string())
}

/// Run the sequential procurement pipeline; returns the summary as JSON.
#[pyfunction]
#[pyo3(signature = (instance_json, eps, trials, seed))]
fn run_procurement(instance_json: &str, eps: f64, trials: u64, seed: u64) -> PyResult<String> {
    let instance = ProcurementInstance::from_json(instance_json).map_err(value_err)?;
    let sol = lp_solve(&build_lp2(&instance).map_err(runtime_err)?).map_err(runtime_err)?;
    let rule = interim_from_lp2(&instance, &sol).map_err(runtime_err)?;
    let ocrs = procurement_ocrs_instance(&instance, &rule).map_err(runtime_err)?;
    let mut scheme = stochastic_knapsack_ocrs(ocrs, ProbMode::Oracle).map_err(runtime_err)?;
    let c = scheme.declared_c();
    let mut total_value = 0.0;
    let mut over_budget = 0u64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let reports: Vec<usize> = (0..instance.n)
            .map(|i| sample_index(&instance.sellers[i].probs, &mut rng))
            .collect();
        let out = run_proc(&instance, &rule, &mut scheme, eps, &reports, &mut rng)
            .map_err(runtime_err)?;
        let paid: f64 = out.payments.iter().sum();
        if paid > instance.budget + 1e-9 {
            over_budget += 1;
        }
        total_value += out.buyer_value;
    }
    let mean_value = total_value / trials as f64;
    Ok(serde_json::json!({
        "mean_value": mean_value,
        "lp_objective": rule.objective,
        "ratio": mean_value / rule.objective,
        "declared_c": c,
        "feasibility_violations": over_budget,
        "trials": trials,
    })
    .to_string())
}

/// Sample the division factory: returns (empirical bias, mean tosses).
#[pyfunction]
#[pyo3(signature = (p0, p1, samples, seed))]
fn divide_coin_stats(p0: f64, p1: f64, samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let delta = p1 - p0;
    let mut coin = divide(
        Box::new(constant_coin(p0).map_err(value_err)?),
        Box::new(constant_coin(p1).map_err(value_err)?),
        delta,
    )
    .map_err(value_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        hits += coin.flip(&mut rng) as u64;
    }
    Ok((
        hits as f64 / samples as f64,
        coin.tosses() as f64 / samples as f64,
    ))
}

#[pymodule]
fn crsmech_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(generate_procurement, m)?)?;
    m.add_function(wrap_pyfunction!(solve_interim_lp, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(run_scheme, m)?)?;
    m.add_function(wrap_pyfunction!(run_mechanism, m)?)?;
    m.add_function(wrap_pyfunction!(run_procurement, m)?)?;
    m.add_function(wrap_pyfunction!(divide_coin_stats, m)?)?;
    Ok(())
}
