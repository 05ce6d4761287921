//! Tabular churn data: schema, in-memory table, ingestion, folds and
//! synthetic generators.

mod folds;
mod io;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use folds::{stratified_split, FoldPlan};
pub use io::{load_csv, load_csv_with_schema, write_csv, IngestReport, SchemaOverride};
pub use synth::{synth_churn, SynthData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Ordered,
    Categorical,
}

impl ColumnKind {
    /// Numeric and ordered columns split on a cutoff; categorical ones on a
    /// level subset.
    pub fn is_cutoff(self) -> bool {
        !matches!(self, ColumnKind::Categorical)
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Ordered => "ordered",
            ColumnKind::Categorical => "categorical",
        })
    }
}

impl std::str::FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "numeric" => Ok(ColumnKind::Numeric),
            "ordered" => Ok(ColumnKind::Ordered),
            "categorical" => Ok(ColumnKind::Categorical),
            other => Err(Error::Schema(format!("unknown column kind `{other}`"))),
        }
    }
}

/// Name, kind and (for categorical and ordered columns) the level list of
/// one feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Numeric,
            levels: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Categorical,
            levels,
        }
    }

    pub fn ordered(name: impl Into<String>, levels: Vec<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Ordered,
            levels,
        }
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            ColumnKind::Numeric if !self.levels.is_empty() => Err(Error::Schema(format!(
                "numeric column `{}` must not declare levels",
                self.name
            ))),
            ColumnKind::Categorical | ColumnKind::Ordered if self.levels.is_empty() => {
                Err(Error::Schema(format!("column `{}` has no levels", self.name)))
            }
            _ => {
                let mut seen = std::collections::HashSet::new();
                for level in &self.levels {
                    if !seen.insert(level) {
                        return Err(Error::Schema(format!(
                            "column `{}` declares level `{level}` twice",
                            self.name
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Immutable columnar table of feature vectors with a binary churn label.
///
/// Numeric values are stored as-is. Categorical values are stored as the
/// index of their level, ordered values as their rank in the level list.
/// `NaN` marks a level that was not part of a fixed schema; it only occurs
/// in data loaded against an existing tree's schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    columns: Vec<Vec<f64>>,
    labels: Vec<u8>,
    label_name: String,
    row_ids: Vec<usize>,
}

impl Dataset {
    pub fn new(
        schema: Vec<ColumnSchema>,
        columns: Vec<Vec<f64>>,
        labels: Vec<u8>,
        label_name: impl Into<String>,
    ) -> Result<Self> {
        let row_ids = (0..labels.len()).collect();
        Self::with_row_ids(schema, columns, labels, label_name, row_ids)
    }

    pub(crate) fn with_row_ids(
        schema: Vec<ColumnSchema>,
        columns: Vec<Vec<f64>>,
        labels: Vec<u8>,
        label_name: impl Into<String>,
        row_ids: Vec<usize>,
    ) -> Result<Self> {
        let label_name = label_name.into();
        if schema.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} schema entries for {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let mut names = std::collections::HashSet::new();
        for col in &schema {
            col.validate()?;
            if !names.insert(col.name.as_str()) || col.name == label_name {
                return Err(Error::Schema(format!("duplicate column name `{}`", col.name)));
            }
        }
        let n = labels.len();
        if row_ids.len() != n {
            return Err(Error::Schema("row id count differs from row count".into()));
        }
        for (col, values) in schema.iter().zip(&columns) {
            if values.len() != n {
                return Err(Error::Schema(format!(
                    "column `{}` has {} values, expected {n}",
                    col.name,
                    values.len()
                )));
            }
            let k = col.levels.len() as f64;
            for &v in values {
                let ok = match col.kind {
                    ColumnKind::Numeric => v.is_finite(),
                    _ => v.is_nan() || (v >= 0.0 && v < k && v.fract() == 0.0),
                };
                if !ok {
                    return Err(Error::Schema(format!("invalid value {v} in column `{}`", col.name)));
                }
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::BadLabel { value: bad.to_string() });
        }
        Ok(Dataset {
            schema,
            columns,
            labels,
            label_name,
            row_ids,
        })
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.columns[col]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    /// Feature vector of one row.
    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// Position of each row in the source file (0-based, header excluded).
    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn churners(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn churn_rate(&self) -> f64 {
        self.churners() as f64 / self.n_rows() as f64
    }

    /// Rows `indices` in the given order, keeping schema and source row ids.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_name: self.label_name.clone(),
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Human-readable cell value (level name for categorical/ordered columns).
    pub fn display_value(&self, row: usize, col: usize) -> String {
        let v = self.columns[col][row];
        let schema = &self.schema[col];
        match schema.kind {
            ColumnKind::Numeric => format!("{v}"),
            _ if v.is_nan() => String::new(),
            _ => schema.levels[v as usize].clone(),
        }
    }
}
