//! Vertical-horizontal composition: an element is selected iff its row
//! scheme selects it on the row slice of arrivals and its column scheme
//! selects it on the column slice. The composed guarantee is the product of
//! the two sides' guarantees.

use rand_chacha::ChaCha8Rng;

use super::{
    KUniformRowScheme, SchemeError, SingleCopyColumnScheme, TwoLevelScheme,
};

pub struct VhScheme {
    b: f64,
    rows: Vec<KUniformRowScheme>,
    cols: Vec<SingleCopyColumnScheme>,
    row_rate_min: f64,
    col_rate_min: f64,
    selected: Vec<(usize, usize)>,
    row_types: Vec<usize>,
}

/// Compose per-agent row schemes with per-item column schemes; all sides
/// must share the same `b`.
pub fn vh_compose(
    b: f64,
    rows: Vec<KUniformRowScheme>,
    cols: Vec<SingleCopyColumnScheme>,
) -> Result<VhScheme, SchemeError> {
    for r in &rows {
        if (r.b() - b).abs() > 1e-12 {
            return Err(SchemeError::BMismatch(b, r.b()));
        }
    }
    for c in &cols {
        if (c.b() - b).abs() > 1e-12 {
            return Err(SchemeError::BMismatch(b, c.b()));
        }
    }
    let row_rate_min = rows.iter().map(|r| r.conditional_rate()).fold(1.0, f64::min);
    let col_rate_min = cols.iter().map(|c| c.conditional_rate()).fold(1.0, f64::min);
    let n = rows.len();
    Ok(VhScheme {
        b,
        rows,
        cols,
        row_rate_min,
        col_rate_min,
        selected: Vec::new(),
        row_types: vec![0; n],
    })
}

impl VhScheme {
    /// Exact per-row conditional rate of the row side.
    pub fn row_rate(&self, i: usize) -> f64 {
        self.rows[i].conditional_rate()
    }

    /// Exact per-column conditional rate of the column side.
    pub fn col_rate(&self, j: usize) -> f64 {
        self.cols[j].conditional_rate()
    }
}

impl TwoLevelScheme for VhScheme {
    fn reset(&mut self, _rng: &mut ChaCha8Rng) {
        self.selected.clear();
        for r in &mut self.rows {
            r.reset();
        }
        for c in &mut self.cols {
            c.reset();
        }
    }

    fn begin_row(&mut self, i: usize, row_type: usize) {
        self.row_types[i] = row_type;
        self.rows[i].set_row_type(row_type);
    }

    fn offer(&mut self, i: usize, j: usize, active: bool, rng: &mut ChaCha8Rng) -> bool {
        // Both sides consume the arrival and update their own virtual state.
        let row_pick = self.rows[i].offer(j, active, rng);
        let col_pick = self.cols[j].offer(i, active, rng);
        let take = row_pick && col_pick;
        if take {
            self.selected.push((i, j));
        }
        take
    }

    fn selected(&self) -> &[(usize, usize)] {
        &self.selected
    }

    fn guarantee(&self) -> (f64, f64) {
        (self.b, self.row_rate_min * self.col_rate_min)
    }

    fn pstar(&self, i: usize, j: usize, _row_type: usize) -> Option<f64> {
        Some(self.rows[i].conditional_rate() * self.cols[j].conditional_rate())
    }

    fn clamp_count(&self) -> u64 {
        self.rows.iter().map(|r| r.clamp_count()).sum::<u64>()
            + self.cols.iter().map(|c| c.clamp_count()).sum::<u64>()
    }

    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn items(&self) -> usize {
        self.cols.len()
    }
}
