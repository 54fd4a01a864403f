//! Rounding feasible-in-expectation interim rules into ex-post feasible,
//! approximately revenue-optimal sequential mechanisms, via two-level
//! (online) contention resolution schemes.
//!
//! Modules:
//! - [`instance`]: domain types, feasibility constraints, two-level
//!   stochastic processes, samplers and checkers.
//! - [`lp`]: the interim relaxation LPs, a dense simplex, and the exact
//!   brute-force revenue oracle.
//! - [`bernoulli`]: Bernoulli-factory combinators up to exact division.
//! - [`schemes`]: all contention resolution schemes and the probability
//!   estimation machinery.
//! - [`mechanism`]: the end-to-end frameworks (non-sequential, sequential,
//!   procurement).
//! - [`harness`]: instance generators, statistical verification, reports.

pub mod bernoulli;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod mechanism;
pub mod schemes;

pub use instance::{
    check_process_feasibility, is_feasible_set, sample_active_set, ActiveSet, AgentTypeSpace,
    AuctionInstance, FeasibilityConstraint, InstanceError, TwoLevelProcess,
};
