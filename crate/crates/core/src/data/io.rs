//! CSV ingestion and export.
//!
//! Rows with an empty cell in any used column are dropped. Column kinds are
//! inferred (numeric iff every non-empty cell parses as a finite decimal
//! number, categorical otherwise with levels in first-appearance order)
//! unless a schema override says otherwise.
//!
//! Schema override files are line oriented:
//!
//! ```text
//! # comments and blank lines are ignored
//! active_months = numeric
//! region = categorical
//! autopay = categorical: no, yes
//! contract_period = ordered: short, medium, long
//! ```
//!
//! Ordered columns always need their level list; categorical columns may
//! list their levels to fix the level order.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use super::{ColumnKind, ColumnSchema, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SchemaOverride {
    entries: Vec<(String, ColumnKind, Option<Vec<String>>)>,
}

impl SchemaOverride {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, ColumnKind, Option<Vec<String>>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, rhs) = line
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("line {}: expected `column = kind`", lineno + 1)))?;
            let name = name.trim().to_string();
            let (kind, levels) = match rhs.split_once(':') {
                Some((kind, levels)) => {
                    let levels: Vec<String> = levels
                        .split(',')
                        .map(|l| l.trim().to_string())
                        .filter(|l| !l.is_empty())
                        .collect();
                    (kind.parse::<ColumnKind>()?, Some(levels))
                }
                None => (rhs.parse::<ColumnKind>()?, None),
            };
            match (kind, &levels) {
                (ColumnKind::Numeric, Some(_)) => {
                    return Err(Error::Schema(format!(
                        "line {}: numeric column `{name}` cannot list levels",
                        lineno + 1
                    )))
                }
                (ColumnKind::Ordered, None) => {
                    return Err(Error::Schema(format!(
                        "line {}: ordered column `{name}` needs its level list",
                        lineno + 1
                    )))
                }
                (_, Some(l)) if l.is_empty() => {
                    return Err(Error::Schema(format!(
                        "line {}: empty level list for `{name}`",
                        lineno + 1
                    )))
                }
                _ => {}
            }
            if entries.iter().any(|(n, _, _)| *n == name) {
                return Err(Error::Schema(format!("column `{name}` listed twice")));
            }
            entries.push((name, kind, levels));
        }
        Ok(SchemaOverride { entries })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }

    /// Override text that pins every column of `schema`, levels included.
    pub fn render(schema: &[ColumnSchema]) -> String {
        let mut out = String::new();
        for col in schema {
            match col.kind {
                ColumnKind::Numeric => out.push_str(&format!("{} = numeric\n", col.name)),
                kind => out.push_str(&format!("{} = {kind}: {}\n", col.name, col.levels.join(", "))),
            }
        }
        out
    }

    fn get(&self, name: &str) -> Option<(ColumnKind, Option<&[String]>)> {
        self.entries
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, k, l)| (*k, l.as_deref()))
    }
}

/// Summary of one ingestion, printed line by line.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub kinds: Vec<(String, ColumnKind)>,
    /// Categorical/ordered cells whose level is not in a fixed schema.
    pub unseen_levels: usize,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows read: {}", self.rows_read)?;
        writeln!(f, "rows dropped (missing values): {}", self.rows_dropped)?;
        for (name, kind) in &self.kinds {
            writeln!(f, "column {name}: {kind}")?;
        }
        if self.unseen_levels > 0 {
            writeln!(f, "cells with unseen levels: {}", self.unseen_levels)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LabelEncoding {
    ZeroOne,
    NoYes,
    FalseTrue,
}

fn parse_label(raw: &str) -> Option<(LabelEncoding, u8)> {
    match raw.to_ascii_lowercase().as_str() {
        "0" => Some((LabelEncoding::ZeroOne, 0)),
        "1" => Some((LabelEncoding::ZeroOne, 1)),
        "no" => Some((LabelEncoding::NoYes, 0)),
        "yes" => Some((LabelEncoding::NoYes, 1)),
        "false" => Some((LabelEncoding::FalseTrue, 0)),
        "true" => Some((LabelEncoding::FalseTrue, 1)),
        _ => None,
    }
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    rows_read: usize,
}

fn read_raw(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let rows_read = rows.len();
    Ok(RawTable {
        header,
        rows,
        rows_read,
    })
}

fn column_index(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

/// Keeps rows whose `used` cells are all non-empty; returns kept rows with
/// their source positions.
fn drop_missing(raw: RawTable, used: &[usize]) -> (Vec<(usize, Vec<String>)>, usize) {
    let total = raw.rows.len();
    let kept: Vec<(usize, Vec<String>)> = raw
        .rows
        .into_iter()
        .enumerate()
        .filter(|(_, row)| used.iter().all(|&c| !row[c].is_empty()))
        .collect();
    let dropped = total - kept.len();
    (kept, dropped)
}

fn encode_labels(rows: &[(usize, Vec<String>)], label_col: usize) -> Result<Vec<u8>> {
    let mut encoding = None;
    rows.iter()
        .map(|(_, row)| {
            let raw = &row[label_col];
            let (enc, y) = parse_label(raw).ok_or_else(|| Error::BadLabel { value: raw.clone() })?;
            match encoding {
                None => encoding = Some(enc),
                Some(e) if e != enc => return Err(Error::BadLabel { value: raw.clone() }),
                _ => {}
            }
            Ok(y)
        })
        .collect()
}

fn encode_levels(
    name: &str,
    cells: impl Iterator<Item = String>,
    levels: &[String],
    unseen: Option<&mut usize>,
) -> Result<Vec<f64>> {
    let index: HashMap<&str, usize> = levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut unseen_count = 0usize;
    let mut out = Vec::new();
    for cell in cells {
        match index.get(cell.as_str()) {
            Some(&i) => out.push(i as f64),
            None if unseen.is_some() => {
                unseen_count += 1;
                out.push(f64::NAN);
            }
            None => {
                return Err(Error::Schema(format!(
                    "value `{cell}` of column `{name}` is not a declared level"
                )))
            }
        }
    }
    if let Some(counter) = unseen {
        *counter += unseen_count;
    }
    Ok(out)
}

fn encode_numeric(name: &str, cells: impl Iterator<Item = String>) -> Result<Vec<f64>> {
    cells
        .map(|c| {
            parse_number(&c)
                .ok_or_else(|| Error::Schema(format!("value `{c}` of numeric column `{name}` is not a number")))
        })
        .collect()
}

/// Loads a churn dataset from CSV. Every column other than `label_name` is a
/// feature.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_name: &str,
    schema_override: Option<&SchemaOverride>,
) -> Result<(Dataset, IngestReport)> {
    let raw = read_raw(path.as_ref())?;
    let label_col = column_index(&raw.header, label_name).ok_or_else(|| Error::MissingLabel(label_name.into()))?;
    let feature_cols: Vec<usize> = (0..raw.header.len()).filter(|&c| c != label_col).collect();
    if let Some(ov) = schema_override {
        for (name, _, _) in &ov.entries {
            if name == label_name {
                return Err(Error::Schema(format!("label column `{name}` cannot be overridden")));
            }
            if column_index(&raw.header, name).is_none() {
                return Err(Error::Schema(format!("override names unknown column `{name}`")));
            }
        }
    }
    let header = raw.header.clone();
    let rows_read = raw.rows_read;
    let all_cols: Vec<usize> = (0..header.len()).collect();
    let (rows, rows_dropped) = drop_missing(raw, &all_cols);
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = encode_labels(&rows, label_col)?;

    let mut schema = Vec::with_capacity(feature_cols.len());
    let mut columns = Vec::with_capacity(feature_cols.len());
    for &c in &feature_cols {
        let name = header[c].clone();
        let cells = || rows.iter().map(move |(_, r)| r[c].clone());
        let declared = schema_override.and_then(|ov| ov.get(&name));
        let (col_schema, values) = match declared {
            Some((ColumnKind::Numeric, _)) => (ColumnSchema::numeric(&name), encode_numeric(&name, cells())?),
            Some((kind, Some(levels))) => {
                let levels = levels.to_vec();
                let values = encode_levels(&name, cells(), &levels, None)?;
                let schema = ColumnSchema {
                    name: name.clone(),
                    kind,
                    levels,
                };
                (schema, values)
            }
            Some((_, None)) => {
                let levels = first_appearance_levels(cells());
                let values = encode_levels(&name, cells(), &levels, None)?;
                (ColumnSchema::categorical(&name, levels), values)
            }
            None => {
                if rows.iter().all(|(_, r)| parse_number(&r[c]).is_some()) {
                    (ColumnSchema::numeric(&name), encode_numeric(&name, cells())?)
                } else {
                    let levels = first_appearance_levels(cells());
                    let values = encode_levels(&name, cells(), &levels, None)?;
                    (ColumnSchema::categorical(&name, levels), values)
                }
            }
        };
        schema.push(col_schema);
        columns.push(values);
    }
    let row_ids = rows.iter().map(|(i, _)| *i).collect();
    let kinds = schema.iter().map(|c| (c.name.clone(), c.kind)).collect();
    let data = Dataset::with_row_ids(schema, columns, labels, label_name, row_ids)?;
    Ok((
        data,
        IngestReport {
            rows_read,
            rows_dropped,
            kinds,
            unseen_levels: 0,
        },
    ))
}

fn first_appearance_levels(cells: impl Iterator<Item = String>) -> Vec<String> {
    let mut levels: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for cell in cells {
        if seen.insert(cell.clone()) {
            levels.push(cell);
        }
    }
    levels
}

/// Loads a CSV against a fixed feature schema (typically the one stored
/// with a trained tree). Columns are matched by name; extra columns are
/// ignored. Levels missing from the schema are kept as `NaN` and counted in
/// the report.
pub fn load_csv_with_schema(
    path: impl AsRef<Path>,
    label_name: &str,
    schema: &[ColumnSchema],
) -> Result<(Dataset, IngestReport)> {
    let raw = read_raw(path.as_ref())?;
    let label_col = column_index(&raw.header, label_name).ok_or_else(|| Error::MissingLabel(label_name.into()))?;
    let mut source_cols = Vec::with_capacity(schema.len());
    for col in schema {
        let c = column_index(&raw.header, &col.name)
            .ok_or_else(|| Error::SchemaMismatch(format!("column `{}` missing from data", col.name)))?;
        source_cols.push(c);
    }
    let mut used = source_cols.clone();
    used.push(label_col);
    let rows_read = raw.rows_read;
    let (rows, rows_dropped) = drop_missing(raw, &used);
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = encode_labels(&rows, label_col)?;
    let mut unseen = 0usize;
    let mut columns = Vec::with_capacity(schema.len());
    for (col, &c) in schema.iter().zip(&source_cols) {
        let cells = rows.iter().map(|(_, r)| r[c].clone());
        let values = match col.kind {
            ColumnKind::Numeric => {
                encode_numeric(&col.name, cells).map_err(|e| Error::SchemaMismatch(e.to_string()))?
            }
            _ => encode_levels(&col.name, cells, &col.levels, Some(&mut unseen))?,
        };
        columns.push(values);
    }
    let row_ids = rows.iter().map(|(i, _)| *i).collect();
    let kinds = schema.iter().map(|c| (c.name.clone(), c.kind)).collect();
    let data = Dataset::with_row_ids(schema.to_vec(), columns, labels, label_name, row_ids)?;
    Ok((
        data,
        IngestReport {
            rows_read,
            rows_dropped,
            kinds,
            unseen_levels: unseen,
        },
    ))
}

/// Writes features followed by the label (as 0/1).
pub fn write_csv<W: std::io::Write>(data: &Dataset, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = data.schema().iter().map(|c| c.name.as_str()).collect();
    header.push(data.label_name());
    writer.write_record(&header)?;
    for row in 0..data.n_rows() {
        let mut record: Vec<String> = (0..data.n_features()).map(|c| data.display_value(row, c)).collect();
        record.push(data.labels()[row].to_string());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
