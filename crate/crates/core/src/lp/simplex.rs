//! Self-contained dense two-phase simplex.
//!
//! Deterministic by construction: Dantzig pricing with lowest-index
//! tie-breaking, switching permanently to Bland's rule after 50 consecutive
//! degenerate pivots. Built for desk-scale models, not sparsity.

use super::model::{LpError, LpModel, Relation};

const PIVOT_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-9;
const DEGENERATE_PIVOT_LIMIT: usize = 50;
const MAX_ITERATIONS: usize = 500_000;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    /// rows x (cols + 1); last column is the rhs.
    a: Vec<Vec<f64>>,
    /// Phase-2 objective row (reduced costs), length cols + 1.
    obj: Vec<f64>,
    /// Phase-1 objective row, present during phase 1.
    pobj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    first_artificial: usize,
    degenerate_run: usize,
    bland: bool,
    iterations: usize,
}

/// Maximize `model.objective . x` subject to `model.rows` and bounds.
pub fn solve_lp(model: &LpModel) -> Result<LpSolution, LpError> {
    model.validate()?;
    let nv = model.num_vars();

    // Column mapping: nonnegative vars get one column, free vars a +/- pair.
    // Finite upper bounds become explicit rows.
    let mut col_of_var = Vec::with_capacity(nv);
    let mut neg_col_of_var = vec![None; nv];
    let mut cols = 0usize;
    for v in 0..nv {
        col_of_var.push(cols);
        cols += 1;
        if model.bounds[v].0 == f64::NEG_INFINITY {
            neg_col_of_var[v] = Some(cols);
            cols += 1;
        }
    }

    struct NormRow {
        coeffs: Vec<f64>,
        rel: Relation,
        rhs: f64,
    }
    let mut rows: Vec<NormRow> = Vec::with_capacity(model.rows.len() + nv);
    for row in &model.rows {
        let mut coeffs = vec![0.0; cols];
        for v in 0..nv {
            coeffs[col_of_var[v]] += row.coeffs[v];
            if let Some(nc) = neg_col_of_var[v] {
                coeffs[nc] -= row.coeffs[v];
            }
        }
        rows.push(NormRow { coeffs, rel: row.rel, rhs: row.rhs });
    }
    for v in 0..nv {
        let hi = model.bounds[v].1;
        if hi.is_finite() {
            let mut coeffs = vec![0.0; cols];
            coeffs[col_of_var[v]] = 1.0;
            if let Some(nc) = neg_col_of_var[v] {
                coeffs[nc] = -1.0;
            }
            rows.push(NormRow { coeffs, rel: Relation::Le, rhs: hi });
        }
    }

    // Normalize to rhs >= 0.
    for r in rows.iter_mut() {
        if r.rhs < 0.0 {
            r.rhs = -r.rhs;
            for c in r.coeffs.iter_mut() {
                *c = -*c;
            }
            r.rel = match r.rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    // Count slack/artificial columns.
    let structural = cols;
    let mut num_slack = 0usize;
    let mut num_artificial = 0usize;
    for r in &rows {
        match r.rel {
            Relation::Le => num_slack += 1,
            Relation::Ge => {
                num_slack += 1;
                num_artificial += 1;
            }
            Relation::Eq => num_artificial += 1,
        }
    }
    let total = structural + num_slack + num_artificial;
    let first_artificial = structural + num_slack;

    let m = rows.len();
    let mut a = vec![vec![0.0; total + 1]; m];
    let mut basis = vec![0usize; m];
    let mut slack_at = structural;
    let mut art_at = first_artificial;
    for (i, r) in rows.iter().enumerate() {
        a[i][..cols].copy_from_slice(&r.coeffs);
        a[i][total] = r.rhs;
        match r.rel {
            Relation::Le => {
                a[i][slack_at] = 1.0;
                basis[i] = slack_at;
                slack_at += 1;
            }
            Relation::Ge => {
                a[i][slack_at] = -1.0;
                slack_at += 1;
                a[i][art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
            }
            Relation::Eq => {
                a[i][art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
            }
        }
    }

    // Phase-2 objective row: reduced costs c_j, objective value in last slot.
    let mut obj = vec![0.0; total + 1];
    for v in 0..nv {
        obj[col_of_var[v]] = model.objective[v];
        if let Some(nc) = neg_col_of_var[v] {
            obj[nc] = -model.objective[v];
        }
    }

    // Phase-1 objective: maximize -(sum of artificials); price out the
    // basic artificials so the row is consistent with the starting basis.
    let mut pobj = vec![0.0; total + 1];
    for c in first_artificial..total {
        pobj[c] = -1.0;
    }
    for (i, &b) in basis.iter().enumerate() {
        if b >= first_artificial {
            for c in 0..=total {
                pobj[c] += a[i][c];
            }
        }
    }

    let mut t = Tableau {
        a,
        obj,
        pobj,
        basis,
        cols: total,
        first_artificial,
        degenerate_run: 0,
        bland: false,
        iterations: 0,
    };

    if num_artificial > 0 {
        t.run_phase(true)?;
        // The rhs slot of the phase-1 row carries the remaining artificial sum.
        if t.pobj[t.cols] > 1e-7 {
            return Err(LpError::Infeasible);
        }
        t.drive_out_artificials();
    }
    t.degenerate_run = 0;
    t.bland = false;
    t.run_phase(false)?;

    // Extract.
    let mut xcols = vec![0.0; total];
    for (i, &b) in t.basis.iter().enumerate() {
        xcols[b] = t.a[i][total];
    }
    let mut x = vec![0.0; nv];
    for v in 0..nv {
        x[v] = xcols[col_of_var[v]];
        if let Some(nc) = neg_col_of_var[v] {
            x[v] -= xcols[nc];
        }
    }
    let objective: f64 = (0..nv).map(|v| model.objective[v] * x[v]).sum();

    // Belt and braces: primal residual check.
    for (ri, row) in model.rows.iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().zip(&x).map(|(c, xv)| c * xv).sum();
        let resid = match row.rel {
            Relation::Le => lhs - row.rhs,
            Relation::Ge => row.rhs - lhs,
            Relation::Eq => (lhs - row.rhs).abs(),
        };
        let scale = 1.0 + row.rhs.abs() + lhs.abs();
        if resid > RESIDUAL_TOL * scale.max(1.0) * 10.0 {
            return Err(LpError::ValidationFailed(format!(
                "row {ri} residual {resid:.3e}"
            )));
        }
    }

    Ok(LpSolution { x, objective, iterations: t.iterations })
}

impl Tableau {
    fn run_phase(&mut self, phase1: bool) -> Result<(), LpError> {
        loop {
            self.iterations += 1;
            if self.iterations > MAX_ITERATIONS {
                return Err(LpError::IterationLimit);
            }
            let Some(entering) = self.pick_entering(phase1) else {
                return Ok(());
            };
            let Some(leaving) = self.pick_leaving(entering) else {
                // No positive pivot in the column.
                return if phase1 {
                    // Phase-1 objective is bounded by 0, so this cannot happen
                    // on well-formed input; treat as infeasible.
                    Err(LpError::Infeasible)
                } else {
                    Err(LpError::Unbounded)
                };
            };
            self.pivot(entering, leaving);
        }
    }

    fn price_row(&self, phase1: bool) -> &[f64] {
        if phase1 {
            &self.pobj
        } else {
            &self.obj
        }
    }

    fn pick_entering(&self, phase1: bool) -> Option<usize> {
        let price = self.price_row(phase1);
        // Artificial columns never re-enter after phase 1.
        let limit = if phase1 { self.cols } else { self.first_artificial };
        if self.bland {
            (0..limit).find(|&c| price[c] > PIVOT_TOL)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for c in 0..limit {
                if price[c] > PIVOT_TOL {
                    // Strict > keeps the lowest index among exact ties.
                    if best.map_or(true, |(_, v)| price[c] > v) {
                        best = Some((c, price[c]));
                    }
                }
            }
            best.map(|(c, _)| c)
        }
    }

    fn pick_leaving(&self, entering: usize) -> Option<usize> {
        let rhs_col = self.cols;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.a.len() {
            let coef = self.a[i][entering];
            if coef > PIVOT_TOL {
                let ratio = self.a[i][rhs_col] / coef;
                let better = match best {
                    None => true,
                    Some((bi, bv)) => {
                        ratio < bv - PIVOT_TOL
                            || (ratio < bv + PIVOT_TOL && self.basis[i] < self.basis[bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, entering: usize, leaving_row: usize) {
        let rhs_col = self.cols;
        let before = self.a[leaving_row][rhs_col];
        if before.abs() <= PIVOT_TOL {
            self.degenerate_run += 1;
            if self.degenerate_run >= DEGENERATE_PIVOT_LIMIT {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }

        let piv = self.a[leaving_row][entering];
        let inv = 1.0 / piv;
        for c in 0..=self.cols {
            self.a[leaving_row][c] *= inv;
        }
        self.a[leaving_row][entering] = 1.0;
        for i in 0..self.a.len() {
            if i == leaving_row {
                continue;
            }
            let f = self.a[i][entering];
            if f != 0.0 {
                for c in 0..=self.cols {
                    self.a[i][c] -= f * self.a[leaving_row][c];
                }
                self.a[i][entering] = 0.0;
            }
        }
        for row in [&mut self.obj, &mut self.pobj] {
            let f = row[entering];
            if f != 0.0 {
                for c in 0..=self.cols {
                    row[c] -= f * self.a[leaving_row][c];
                }
                row[entering] = 0.0;
            }
        }
        self.basis[leaving_row] = entering;
    }

    /// After phase 1, pivot any artificial still in the basis onto a
    /// structural column, or leave it at zero if its row is redundant.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.a.len() {
            if self.basis[i] < self.first_artificial {
                continue;
            }
            let mut target = None;
            for c in 0..self.first_artificial {
                if self.a[i][c].abs() > PIVOT_TOL {
                    target = Some(c);
                    break;
                }
            }
            if let Some(c) = target {
                self.pivot(c, i);
            }
        }
    }
}
