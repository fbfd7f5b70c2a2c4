//! CSV ingestion: column selection, missing-value imputation, z-scores.

use std::path::{Path, PathBuf};

use eac_core::{Dataset, DenseMatrix, Partitioning};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// How to read one dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    /// CSV file; relative paths are resolved against the spec file's directory.
    pub path: PathBuf,
    /// Class column, used for k0 and ground truth. Never a feature.
    #[serde(default)]
    pub label_column: Option<String>,
    /// Columns dropped before normalization (identifiers, discrete variables).
    #[serde(default)]
    pub discard: Vec<String>,
    /// Overrides the class count as the lower bound of base-clustering k.
    #[serde(default)]
    pub k0: Option<usize>,
    /// Cell values treated as missing; they are replaced by the column mean.
    #[serde(default)]
    pub missing: Vec<String>,
}

impl DatasetSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut spec: DatasetSpec = toml::from_str(&text).map_err(|source| BenchError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        if spec.path.is_relative() {
            if let Some(dir) = path.parent() {
                spec.path = dir.join(&spec.path);
            }
        }
        Ok(spec)
    }

    pub fn load(&self) -> Result<Dataset> {
        load_dataset(&self.path, self)
    }
}

/// Population z-scores in place. Returns false (leaving values untouched)
/// for a constant column.
pub fn zscore(values: &mut [f64]) -> bool {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return false;
    }
    for v in values.iter_mut() {
        *v = (*v - mean) / sd;
    }
    true
}

pub fn load_dataset(path: &Path, spec: &DatasetSpec) -> Result<Dataset> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BenchError::Config(format!("{}: no column named `{name}`", path.display())))
    };
    let label_idx = spec.label_column.as_deref().map(find).transpose()?;
    let mut dropped = spec.discard.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    dropped.extend(label_idx);
    let kept: Vec<usize> = (0..headers.len()).filter(|i| !dropped.contains(i)).collect();

    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); kept.len()];
    let mut raw_labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // header is line 1
        let row = r + 2;
        for (slot, &c) in kept.iter().enumerate() {
            let cell = record.get(c).unwrap_or("");
            let value = if spec.missing.iter().any(|m| m == cell) {
                None
            } else {
                Some(
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| BenchError::Cell {
                            path: path.to_path_buf(),
                            row,
                            column: headers[c].to_string(),
                            value: cell.to_string(),
                        })?,
                )
            };
            columns[slot].push(value);
        }
        if let Some(l) = label_idx {
            raw_labels.push(record.get(l).unwrap_or("").to_string());
        }
    }
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(eac_core::Error::Validation(format!("{}: fewer than 2 rows", path.display())).into());
    }

    let mut features: Vec<Vec<f64>> = Vec::with_capacity(kept.len());
    for (slot, col) in columns.into_iter().enumerate() {
        let present: Vec<f64> = col.iter().flatten().copied().collect();
        let name = &headers[kept[slot]];
        if present.is_empty() {
            warn!("{}: column `{name}` has no values, dropped", spec.name);
            continue;
        }
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        let mut values: Vec<f64> = col.into_iter().map(|v| v.unwrap_or(mean)).collect();
        if zscore(&mut values) {
            features.push(values);
        } else {
            warn!("{}: column `{name}` is constant, dropped", spec.name);
        }
    }
    if features.is_empty() {
        return Err(eac_core::Error::Validation(format!("{}: no usable feature columns", spec.name)).into());
    }
    let f = features.len();
    let mut values = vec![0.0; n * f];
    for (j, col) in features.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            values[i * f + j] = v;
        }
    }
    let matrix = DenseMatrix::new(n, f, values)?;
    let truth = match label_idx {
        Some(_) => Some(Partitioning::from_labels(
            &raw_labels.iter().map(String::as_str).collect::<Vec<_>>(),
        )?),
        None => None,
    };
    let k0 = spec.k0.or_else(|| truth.as_ref().map(Partitioning::k)).unwrap_or(2);
    Ok(Dataset::new(spec.name.clone(), matrix, truth, k0)?)
}
