use crate::data::{ColumnKind, Dataset};

/// Split domain of one column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnSplits {
    /// Midpoints between adjacent distinct observed values, ascending.
    Cutoffs(Vec<f64>),
    /// Number of declared levels of a categorical column.
    Levels(usize),
}

/// Finite split space of a training set: `u - 1` cutoffs for a numeric or
/// ordered column with `u` distinct values, level subsets for categorical
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpace {
    columns: Vec<ColumnSplits>,
}

pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

impl SplitSpace {
    pub fn new(data: &Dataset) -> Self {
        let columns = data
            .schema()
            .iter()
            .enumerate()
            .map(|(c, col)| match col.kind {
                ColumnKind::Categorical => ColumnSplits::Levels(col.levels.len()),
                ColumnKind::Numeric | ColumnKind::Ordered => {
                    let mut values: Vec<f64> = data.column(c).iter().copied().filter(|v| !v.is_nan()).collect();
                    values.sort_by(f64::total_cmp);
                    values.dedup();
                    ColumnSplits::Cutoffs(values.windows(2).map(|w| midpoint(w[0], w[1])).collect())
                }
            })
            .collect();
        SplitSpace { columns }
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, c: usize) -> &ColumnSplits {
        &self.columns[c]
    }

    /// Cutoffs lying strictly between `lo` and `hi`, i.e. those that send at
    /// least one of the values `lo` and `hi` each way.
    pub fn cutoffs_between(&self, c: usize, lo: f64, hi: f64) -> &[f64] {
        match &self.columns[c] {
            ColumnSplits::Cutoffs(cuts) => {
                let start = cuts.partition_point(|&m| m <= lo);
                let end = cuts.partition_point(|&m| m < hi);
                if start < end {
                    &cuts[start..end]
                } else {
                    &[]
                }
            }
            ColumnSplits::Levels(_) => &[],
        }
    }

    /// The neighbouring cutoff one step down (`up == false`) or up from
    /// `cutoff`. `None` when there is no such position.
    pub fn step_cutoff(&self, c: usize, cutoff: f64, up: bool) -> Option<f64> {
        let ColumnSplits::Cutoffs(cuts) = &self.columns[c] else {
            return None;
        };
        if up {
            let i = cuts.partition_point(|&m| m <= cutoff);
            cuts.get(i).copied()
        } else {
            let i = cuts.partition_point(|&m| m < cutoff);
            i.checked_sub(1).map(|j| cuts[j])
        }
    }
}
