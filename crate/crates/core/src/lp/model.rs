//! Dense LP model container shared by the builders and the solver.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One constraint row: `coeffs . x  (rel)  rhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
}

/// A dense linear program, always a maximization.
///
/// Variable lower bounds are either 0 or unbounded; finite upper bounds are
/// lowered into explicit rows by the solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpModel {
    pub names: Vec<String>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub row_names: Vec<String>,
    /// (lo, hi) per variable; lo in {0, -inf}, hi in (lo, +inf].
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("model malformed: {0}")]
    Malformed(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("instance too large for the exact oracle: {0}")]
    TooLarge(String),
    #[error("solution validation failed: {0}")]
    ValidationFailed(String),
    #[error("unsupported constraint: {0}")]
    UnsupportedConstraint(String),
}

impl LpModel {
    pub fn new(num_vars: usize) -> Self {
        Self {
            names: (0..num_vars).map(|v| format!("x{v}")).collect(),
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            row_names: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) {
        let name = format!("r{}", self.rows.len());
        self.add_named_row(name, coeffs, rel, rhs);
    }

    pub fn add_named_row(&mut self, name: String, coeffs: Vec<f64>, rel: Relation, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars());
        self.rows.push(Row { coeffs, rel, rhs });
        self.row_names.push(name);
    }

    /// A sparse-friendly helper: `pairs` are (var, coeff) entries.
    pub fn add_sparse_row(
        &mut self,
        name: String,
        pairs: &[(usize, f64)],
        rel: Relation,
        rhs: f64,
    ) {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(v, c) in pairs {
            coeffs[v] += c;
        }
        self.add_named_row(name, coeffs, rel, rhs);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let nv = self.num_vars();
        if self.names.len() != nv || self.bounds.len() != nv {
            return Err(LpError::Malformed("names/bounds length mismatch".into()));
        }
        if self.row_names.len() != self.rows.len() {
            return Err(LpError::Malformed("row_names length mismatch".into()));
        }
        for row in &self.rows {
            if row.coeffs.len() != nv {
                return Err(LpError::Malformed("row width mismatch".into()));
            }
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed("rhs must be finite".into()));
            }
            if row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::Malformed("row coefficient not finite".into()));
            }
        }
        for &(lo, hi) in &self.bounds {
            let lo_ok = lo == 0.0 || lo == f64::NEG_INFINITY;
            if !lo_ok || hi <= lo {
                return Err(LpError::Malformed(format!("bad bounds ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}
