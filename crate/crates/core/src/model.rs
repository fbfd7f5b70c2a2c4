//! Partitionings, ensembles and the binary item-by-cluster incidence encoding.
//!
//! Every other module consumes these types, so all structural validation lives
//! here: once a [`Partitioning`] or [`ClusterEnsemble`] exists it is known to
//! be well formed.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard assignment of `n` items to `k` non-empty, disjoint clusters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partitioning {
    labels: Vec<usize>,
    k: usize,
}

impl Partitioning {
    /// Builds a partitioning from labels already in `0..k`.
    ///
    /// Fails if a label is out of range or if some cluster in `0..k` is empty.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::validation("partitioning has no items"));
        }
        let mut seen = vec![false; k];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::validation(format!("item {i} has label {l}, outside [0, {k})")));
            }
            seen[l] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!("cluster {empty} is empty")));
        }
        Ok(Self { labels, k })
    }

    /// Compacts arbitrary labels to `0..k` in first-occurrence order.
    pub fn from_labels<T: Copy + Eq + Hash>(raw: &[T]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::validation("label vector is empty"));
        }
        let mut map: HashMap<T, usize> = HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Ok(Self { labels, k: map.len() })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
            k: n,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn label(&self, item: usize) -> usize {
        self.labels[item]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Member lists per cluster, each sorted ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Same partition up to a renaming of the clusters.
    pub fn equivalent(&self, other: &Partitioning) -> bool {
        self.k == other.k
            && Partitioning::from_labels(&self.labels).ok() == Partitioning::from_labels(&other.labels).ok()
    }
}

/// `p` partitionings of the same `n` items.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterEnsemble {
    partitionings: Vec<Partitioning>,
    n: usize,
    d: usize,
}

impl ClusterEnsemble {
    pub fn new(partitionings: Vec<Partitioning>) -> Result<Self> {
        let first = partitionings
            .first()
            .ok_or_else(|| Error::validation("ensemble needs at least one partitioning"))?;
        let n = first.n();
        for (idx, pi) in partitionings.iter().enumerate() {
            if pi.n() != n {
                return Err(Error::validation(format!(
                    "partitioning {idx} covers {} items, expected {n}",
                    pi.n()
                )));
            }
        }
        let d = partitionings.iter().map(Partitioning::k).sum();
        Ok(Self { partitionings, n, d })
    }

    pub fn partitionings(&self) -> &[Partitioning] {
        &self.partitionings
    }

    pub fn p(&self) -> usize {
        self.partitionings.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// First incidence column of each partitioning's block.
    pub fn column_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.partitionings
            .iter()
            .map(|pi| {
                let o = acc;
                acc += pi.k();
                o
            })
            .collect()
    }
}

/// Sparse `n x d` binary matrix `H`: one column per ensemble cluster, ordered by
/// partitioning then cluster index.
///
/// Each row holds exactly `p` ones, so rows are stored as fixed-width lists of
/// column indices and columns as sorted item lists.
#[derive(Clone, Debug)]
pub struct IncidenceMatrix {
    n: usize,
    p: usize,
    row_cols: Vec<usize>,
    columns: Vec<Vec<usize>>,
    column_owner: Vec<usize>,
    block_starts: Vec<usize>,
}

impl IncidenceMatrix {
    pub fn from_ensemble(ensemble: &ClusterEnsemble) -> Self {
        let n = ensemble.n();
        let p = ensemble.p();
        let offsets = ensemble.column_offsets();
        let mut row_cols = vec![0; n * p];
        let mut columns = vec![Vec::new(); ensemble.d()];
        let mut column_owner = Vec::with_capacity(ensemble.d());
        for (t, pi) in ensemble.partitionings().iter().enumerate() {
            column_owner.extend(std::iter::repeat(t).take(pi.k()));
            for (i, &l) in pi.labels().iter().enumerate() {
                let col = offsets[t] + l;
                row_cols[i * p + t] = col;
                columns[col].push(i);
            }
        }
        Self {
            n,
            p,
            row_cols,
            columns,
            column_owner,
            block_starts: offsets,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    /// Columns holding a one in row `item`, one per partitioning, in partitioning order.
    pub fn row(&self, item: usize) -> &[usize] {
        &self.row_cols[item * self.p..(item + 1) * self.p]
    }

    /// Sorted members of the cluster behind column `f`.
    pub fn column(&self, f: usize) -> &[usize] {
        &self.columns[f]
    }

    pub fn column_owner(&self) -> &[usize] {
        &self.column_owner
    }

    /// Column ranges, one per partitioning.
    pub fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        let d = self.d();
        self.block_starts
            .iter()
            .enumerate()
            .map(|(t, &s)| s..self.block_starts.get(t + 1).copied().unwrap_or(d))
            .collect()
    }

    pub fn column_sums(&self) -> Vec<usize> {
        self.columns.iter().map(Vec::len).collect()
    }

    pub fn get(&self, item: usize, f: usize) -> bool {
        self.row(item).contains(&f)
    }

    /// Dense 0/1 rows, for small fixtures and display.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| {
                let mut r = vec![0u8; self.d()];
                for &f in self.row(i) {
                    r[f] = 1;
                }
                r
            })
            .collect()
    }

    /// Recovers partitioning `t` from its block of columns.
    pub fn block_partitioning(&self, t: usize) -> Partitioning {
        let labels: Vec<usize> = (0..self.n).map(|i| self.row(i)[t]).collect();
        Partitioning::from_labels(&labels).expect("non-empty incidence matrix")
    }
}

/// Row-major dense matrix of reals.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::validation(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::validation("ragged rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Feature data for base-clustering generation.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub features: DenseMatrix,
    pub ground_truth: Option<Partitioning>,
    /// Number of classes, or 2 when unsupervised.
    pub k0: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: DenseMatrix,
        ground_truth: Option<Partitioning>,
        k0: usize,
    ) -> Result<Self> {
        if features.rows() < 2 {
            return Err(Error::validation("a dataset needs at least 2 items"));
        }
        if features.cols() < 1 {
            return Err(Error::validation("a dataset needs at least 1 feature"));
        }
        if features.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("dataset contains missing or non-finite values"));
        }
        if let Some(gt) = &ground_truth {
            if gt.n() != features.rows() {
                return Err(Error::validation("ground truth length differs from item count"));
            }
        }
        Ok(Self {
            name: name.into(),
            features,
            ground_truth,
            k0,
        })
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn f(&self) -> usize {
        self.features.cols()
    }
}
