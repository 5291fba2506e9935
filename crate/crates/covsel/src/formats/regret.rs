//! Regret matrix files.
//!
//! The matrix is a CSV whose first row and first column list source ids
//! (training sources down, evaluated sources across) and whose cells are
//! regrets as decimal fractions. A JSON sidecar next to it (same stem,
//! `.json`) carries intrinsic difficulties and provenance.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use covsel_core::{RegretMatrix, SourceId};
use serde::{Deserialize, Serialize};

use super::{csv_error, read_json, write_json, write_string};
use crate::error::{Error, Result};

const CORNER: &str = "train\\eval";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    pub ridge: Option<f64>,
    /// Test-split size of every source, in matrix order.
    pub test_samples: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub source_ids: Vec<SourceId>,
    pub intrinsic: Option<Vec<f64>>,
    pub provenance: Provenance,
}

pub fn sidecar_path(matrix_path: &Path) -> PathBuf {
    matrix_path.with_extension("json")
}

pub fn matrix_to_csv(matrix: &RegretMatrix) -> String {
    let mut out = String::from(CORNER);
    for id in matrix.source_ids() {
        write!(out, ",{id}").unwrap();
    }
    out.push('\n');
    for (s, id) in matrix.source_ids().iter().enumerate() {
        write!(out, "{id}").unwrap();
        for r in matrix.row(s) {
            write!(out, ",{r}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Writes the matrix CSV and its sidecar.
pub fn write_matrix(path: &Path, matrix: &RegretMatrix, provenance: Provenance) -> Result<()> {
    write_string(path, &matrix_to_csv(matrix))?;
    let sidecar = MatrixSidecar {
        source_ids: matrix.source_ids().to_vec(),
        intrinsic: matrix.intrinsic().map(<[f64]>::to_vec),
        provenance,
    };
    write_json(&sidecar_path(path), &sidecar)
}

fn parse_id(path: &Path, line: u64, field: &str) -> Result<SourceId> {
    field.trim().parse().map_err(|_| Error::parse(path, line, format!("`{field}` is not a source id")))
}

/// Reads a matrix CSV; intrinsic difficulties are taken from the sidecar
/// when one exists.
pub fn read_matrix(path: &Path) -> Result<(RegretMatrix, Option<MatrixSidecar>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_error(path, e))?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(path, e))?,
        None => return Err(Error::parse(path, 1, "empty matrix file")),
    };
    let ids = header.iter().skip(1).map(|f| parse_id(path, 1, f)).collect::<Result<Vec<_>>>()?;
    let n = ids.len();
    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0usize;
    for record in records {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if rows == n {
            return Err(Error::parse(path, line, "more rows than columns"));
        }
        let row_id = parse_id(path, line, &record[0])?;
        if row_id != ids[rows] {
            return Err(Error::parse(
                path,
                line,
                format!("row source {row_id} does not match column order (expected {})", ids[rows]),
            ));
        }
        for (j, field) in record.iter().skip(1).enumerate() {
            match field.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::parse(
                        path,
                        line,
                        format!("column {}: `{field}` is not a finite number", ids[j]),
                    ))
                }
            }
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(path, rows as u64 + 1, format!("expected {n} rows, found {rows}")));
    }
    let sidecar_file = sidecar_path(path);
    let sidecar: Option<MatrixSidecar> = if sidecar_file.exists() { Some(read_json(&sidecar_file)?) } else { None };
    if let Some(sc) = &sidecar {
        if sc.source_ids != ids {
            return Err(Error::Config(format!(
                "{}: source ids disagree with {}",
                sidecar_file.display(),
                path.display()
            )));
        }
    }
    let intrinsic = sidecar.as_ref().and_then(|s| s.intrinsic.clone());
    let matrix =
        RegretMatrix::from_regrets(ids, values, intrinsic).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok((matrix, sidecar))
}

/// Renders a row-major `n x n` table in percent, training sources down and
/// evaluated sources across.
pub fn render_percent_table(source_ids: &[SourceId], values: &[f64], title: &str) -> String {
    let width = source_ids.iter().map(|id| id.to_string().len()).max().unwrap_or(1).max(6);
    let mut out = format!("{title}\n");
    write!(out, "{:>w$}", "train/eval", w = width.max(10)).unwrap();
    for id in source_ids {
        write!(out, " {id:>width$}").unwrap();
    }
    out.push('\n');
    let n = source_ids.len();
    for (s, id) in source_ids.iter().enumerate() {
        write!(out, "{id:>w$}", w = width.max(10)).unwrap();
        for v in &values[s * n..(s + 1) * n] {
            write!(out, " {:>width$.1}", v * 100.0).unwrap();
        }
        out.push('\n');
    }
    out
}
