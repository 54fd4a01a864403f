//! Interim relaxation LPs, a self-contained dense simplex, and the exact
//! brute-force benchmark for tiny instances.

pub mod build;
pub mod model;
pub mod oracle;
pub mod simplex;

pub use build::{
    build_lp1, build_lp2, interim_from_lp1, interim_from_lp2, InterimRule, ProcurementInstance,
    ProcurementInterimRule,
};
pub use model::{LpError, LpModel, Relation, Row};
pub use oracle::{brute_force_optimal_revenue, enumerate_feasible_sets};
pub use simplex::{solve_lp, LpSolution};
