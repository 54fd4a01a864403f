//! Shared pipeline plumbing: experiment descriptions and named-scheme
//! construction over an instance's induced process, used by the CLI and the
//! language bindings.

use serde::{Deserialize, Serialize};

use super::generate::{generate_instance, GeneratorParams};
use super::report::SuiteResult;
use super::verify::{verify_end_to_end, verify_selectability};
use crate::instance::{AuctionInstance, FeasibilityConstraint, TwoLevelProcess};
use crate::lp::{build_lp1, interim_from_lp1, solve_lp};
use crate::mechanism::{KeepCoinMode, MechanismConfig};
use crate::schemes::{
    k_uniform_row_ocrs, knapsack_tocrs, multichoice_knapsack_tocrs, single_copy_column_ocrs,
    vh_compose, ProbMode, TwoLevelScheme,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Build the named scheme ("vh" | "knapsack" | "multi-choice") over the
/// process induced by an interim rule for this instance.
pub fn build_named_scheme(
    name: &str,
    instance: &AuctionInstance,
    process: &TwoLevelProcess,
    b: f64,
    mode: ProbMode,
) -> Result<Box<dyn TwoLevelScheme + Send>, String> {
    match name {
        "vh" => {
            let row_limits: Vec<usize> = match &instance.constraint {
                FeasibilityConstraint::SingleCopyPerItem => vec![instance.m; instance.n],
                FeasibilityConstraint::KUniformPerAgent { limits } => limits.clone(),
                FeasibilityConstraint::Vh { row_limits, col_limits } => {
                    if col_limits.iter().any(|c| *c != 1) {
                        return Err(
                            "vh scheme ships single-copy columns only (col limits 1)".into()
                        );
                    }
                    row_limits.clone()
                }
                _ => return Err("vh scheme needs single-copy/k-uniform/vh constraints".into()),
            };
            let rows = (0..instance.n)
                .map(|i| k_uniform_row_ocrs(b, row_limits[i], &process.activation[i]))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let cols = (0..instance.m)
                .map(|j| {
                    let w: Vec<f64> =
                        (0..instance.n).map(|i| process.marginal(i, j)).collect();
                    single_copy_column_ocrs(b, &w)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            Ok(Box::new(vh_compose(b, rows, cols).map_err(|e| e.to_string())?))
        }
        "knapsack" => match &instance.constraint {
            FeasibilityConstraint::Knapsack { weights, capacity } => Ok(Box::new(
                knapsack_tocrs(b, weights, *capacity, process, mode)
                    .map_err(|e| e.to_string())?,
            )),
            _ => Err("knapsack scheme needs a knapsack constraint".into()),
        },
        "multi-choice" => match &instance.constraint {
            FeasibilityConstraint::MultiChoiceKnapsack { weights, capacity } => Ok(Box::new(
                multichoice_knapsack_tocrs(b, weights, *capacity, process, mode)
                    .map_err(|e| e.to_string())?,
            )),
            _ => Err("multi-choice scheme needs a multi-choice knapsack constraint".into()),
        },
        other => Err(format!("unknown scheme {other:?}")),
    }
}

/// Which analysis an experiment performs after building its instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// LP, scheme, per-element selectability statistics.
    Selectability,
    /// LP, scheme, sequential mechanism, revenue identity.
    Mechanism,
}

/// A self-contained experiment description: the seed and parameters fully
/// determine every random draw, so the same spec always reproduces the same
/// statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: String,
    pub generator: GeneratorParams,
    pub scheme: String,
    pub pipeline: Pipeline,
    pub b: f64,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn run(&self) -> Result<SuiteResult, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let instance = generate_instance(&self.generator, &mut rng).map_err(|e| e.to_string())?;
        let sol = solve_lp(&build_lp1(&instance).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let rule = interim_from_lp1(&instance, &sol).map_err(|e| e.to_string())?;
        let process = rule.induced_process(&instance);
        match self.pipeline {
            Pipeline::Selectability => {
                let report = verify_selectability(
                    || {
                        build_named_scheme(&self.scheme, &instance, &process, self.b, ProbMode::Oracle)
                            .expect("scheme builds")
                    },
                    &process,
                    &instance.constraint,
                    self.trials,
                    self.seed,
                );
                Ok(SuiteResult::new(
                    self.id.clone(),
                    report.pass,
                    format!("min rate {:.4} vs declared {:.4}", report.min_rate, report.declared_c),
                    &report,
                ))
            }
            Pipeline::Mechanism => {
                let builder = || {
                    (
                        build_named_scheme(
                            &self.scheme,
                            &instance,
                            &process,
                            self.b,
                            ProbMode::Oracle,
                        )
                        .expect("scheme builds"),
                        None,
                    )
                };
                let c = builder().0.guarantee().1;
                let config = MechanismConfig {
                    b: self.b,
                    c,
                    eps: self.eps,
                    keep_mode: KeepCoinMode::KnownProbability,
                };
                let report =
                    verify_end_to_end(&instance, &rule, &config, builder, self.trials, self.seed)
                        .map_err(|e| e.to_string())?;
                Ok(SuiteResult::new(
                    self.id.clone(),
                    report.identity_pass
                        && report.guarantee_pass
                        && report.feasibility_violations == 0,
                    format!(
                        "mean revenue {:.4} vs target {:.4}",
                        report.mean_revenue, report.expected_revenue
                    ),
                    &report,
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate::ConstraintKind;

    #[test]
    fn experiment_specs_reproduce_identical_results() {
        let spec = ExperimentSpec {
            id: "knapsack-small".into(),
            generator: GeneratorParams {
                n: 2,
                m: 2,
                types_per_agent: 2,
                kind: ConstraintKind::Knapsack,
                ..Default::default()
            },
            scheme: "knapsack".into(),
            pipeline: Pipeline::Selectability,
            b: 1.0,
            eps: 0.0,
            trials: 10_000,
            seed: 42,
        };
        let a = spec.run().unwrap();
        let b = spec.run().unwrap();
        assert!(a.pass);
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.details, b.details);

        let mech = ExperimentSpec {
            id: "mech-small".into(),
            scheme: "knapsack".into(),
            pipeline: Pipeline::Mechanism,
            ..spec
        };
        let m = mech.run().unwrap();
        assert!(m.pass, "{}", m.summary);
    }
}
