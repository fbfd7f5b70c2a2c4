//! Cluster weights, densities and the weighted density score `S(π)`.
//!
//! Two routes compute the same quantities:
//!
//! * the reference route materialises the `n x n` co-association matrix and
//!   sums pairs, costing `O(|C|^2)` per cluster;
//! * the fast route only counts, for each incidence column `f`, how many
//!   members of `C` carry a one there (`alpha_f`). Because `H` is binary,
//!   `sum_{i,j in C} h_if h_jf = alpha_f^2`, so
//!   `W(C) = (sum_f alpha_f^2 - p |C|) / p`, which is `O(p |C|)`.
//!
//! The reference route refuses inputs above an item cap so that a quadratic
//! blowup is always an explicit decision.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ClusterEnsemble, IncidenceMatrix, Partitioning};
use crate::numeric::CompensatedSum;

pub const DEFAULT_ORACLE_CAP: usize = 5000;

/// Dense symmetric co-association matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CoAssocMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CoAssocMatrix {
    /// Wraps a dense row-major matrix, checking shape, symmetry and range.
    pub fn from_dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::validation("co-association values are not n x n"));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::validation(format!("A[{i},{j}] = {v} outside [0,1]")));
                }
                if v != values[j * n + i] {
                    return Err(Error::validation(format!("A is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Header-free, row-major CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                write!(s, "{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Sum of all off-diagonal entries (the total weight of the matrix).
    pub fn total_weight(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    acc.add(self.get(i, j));
                }
            }
        }
        acc.value()
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::OracleCap { n, cap })
    } else {
        Ok(())
    }
}

/// `A[i,j] = h_i . h_j / p`, the fraction of partitionings that co-cluster `i` and `j`.
pub fn coassociation(h: &IncidenceMatrix, cap: usize) -> Result<CoAssocMatrix> {
    let n = h.n();
    check_cap(n, cap)?;
    let p = h.p() as f64;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        let ri = h.row(i);
        for j in (i + 1)..n {
            let shared = ri.iter().zip(h.row(j)).filter(|(a, b)| a == b).count();
            let v = shared as f64 / p;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(CoAssocMatrix { n, values })
}

fn check_members(members: &[usize], n: usize) -> Result<()> {
    if members.is_empty() {
        return Err(Error::validation("cluster is empty"));
    }
    if let Some(&bad) = members.iter().find(|&&i| i >= n) {
        return Err(Error::validation(format!("member {bad} outside [0, {n})")));
    }
    Ok(())
}

/// `W(C)`: sum of `A[i,j]` over ordered pairs of distinct members.
pub fn cluster_weight_oracle(a: &CoAssocMatrix, members: &[usize]) -> Result<f64> {
    check_members(members, a.n())?;
    let mut acc = CompensatedSum::new();
    for &i in members {
        for &j in members {
            if i != j {
                acc.add(a.get(i, j));
            }
        }
    }
    Ok(acc.value())
}

/// `W(C0, C1)`: sum of `A[i,j]` over `i in C0`, `j in C1`.
pub fn inter_weight_oracle(a: &CoAssocMatrix, c0: &[usize], c1: &[usize]) -> Result<f64> {
    check_members(c0, a.n())?;
    check_members(c1, a.n())?;
    if c0.iter().any(|i| c1.contains(i)) {
        return Err(Error::validation("clusters overlap"));
    }
    let mut acc = CompensatedSum::new();
    for &i in c0 {
        for &j in c1 {
            acc.add(a.get(i, j));
        }
    }
    Ok(acc.value())
}

pub fn inter_density_oracle(a: &CoAssocMatrix, c0: &[usize], c1: &[usize]) -> Result<f64> {
    let w = inter_weight_oracle(a, c0, c1)?;
    Ok(w / (c0.len() * c1.len()) as f64)
}

/// Per-cluster column counts `alpha_f` (number of members with a one in column `f`).
///
/// Only non-zero counts are stored, sorted by column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaCounts {
    entries: Vec<(usize, u32)>,
    size: usize,
}

impl AlphaCounts {
    pub fn of(h: &IncidenceMatrix, members: &[usize]) -> Result<Self> {
        check_members(members, h.n())?;
        Ok(AlphaAccumulator::new(h.d()).counts(h, members))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn get(&self, f: usize) -> u32 {
        self.entries
            .binary_search_by_key(&f, |e| e.0)
            .map_or(0, |idx| self.entries[idx].1)
    }

    pub fn to_dense(&self, d: usize) -> Vec<u32> {
        let mut v = vec![0; d];
        for &(f, c) in &self.entries {
            v[f] = c;
        }
        v
    }

    pub fn sum_squares(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| u64::from(c) * u64::from(c)).sum()
    }

    /// `sum_f alpha_f^A alpha_f^B`, the pair count behind the inter weight.
    pub fn dot(&self, other: &AlphaCounts) -> u64 {
        let (mut i, mut j, mut acc) = (0, 0, 0u64);
        while i < self.entries.len() && j < other.entries.len() {
            let (fa, ca) = self.entries[i];
            let (fb, cb) = other.entries[j];
            match fa.cmp(&fb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += u64::from(ca) * u64::from(cb);
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Intra weight from counts: `(sum alpha^2 - p |C|) / p`.
    pub fn weight(&self, p: usize) -> f64 {
        let pairs = self.sum_squares() - (p * self.size) as u64;
        pairs as f64 / p as f64
    }
}

/// Reusable dense scratch buffer for building [`AlphaCounts`] in `O(p |C|)`.
pub struct AlphaAccumulator {
    counts: Vec<u32>,
    touched: Vec<usize>,
}

impl AlphaAccumulator {
    pub fn new(d: usize) -> Self {
        Self {
            counts: vec![0; d],
            touched: Vec::new(),
        }
    }

    pub fn counts(&mut self, h: &IncidenceMatrix, members: &[usize]) -> AlphaCounts {
        for &i in members {
            for &f in h.row(i) {
                if self.counts[f] == 0 {
                    self.touched.push(f);
                }
                self.counts[f] += 1;
            }
        }
        self.touched.sort_unstable();
        let entries = self
            .touched
            .drain(..)
            .map(|f| (f, std::mem::take(&mut self.counts[f])))
            .collect();
        AlphaCounts {
            entries,
            size: members.len(),
        }
    }

    /// `sum_f alpha_f^2` without materialising the counts.
    ///
    /// Each increment `c -> c + 1` adds `2c + 1` to the running sum, so the
    /// loop is branch-free and never visits untouched columns.
    pub fn sum_squares(&mut self, h: &IncidenceMatrix, members: &[usize]) -> u64 {
        let mut acc = 0u64;
        for &i in members {
            for &f in h.row(i) {
                let c = &mut self.counts[f];
                acc += 2 * u64::from(*c) + 1;
                *c += 1;
            }
        }
        for &i in members {
            for &f in h.row(i) {
                self.counts[f] = 0;
            }
        }
        acc
    }
}

/// `W(C)` through column counts, in `O(p |C|)`.
pub fn cluster_weight_fast(h: &IncidenceMatrix, members: &[usize]) -> Result<f64> {
    Ok(AlphaCounts::of(h, members)?.weight(h.p()))
}

/// `W(C0, C1) = sum_f alpha_f^C0 alpha_f^C1 / p`.
pub fn inter_weight_fast(h: &IncidenceMatrix, c0: &[usize], c1: &[usize]) -> Result<f64> {
    let a0 = AlphaCounts::of(h, c0)?;
    let a1 = AlphaCounts::of(h, c1)?;
    Ok(a0.dot(&a1) as f64 / h.p() as f64)
}

/// `D(C) = W(C) / (|C| (|C| - 1))`, zero for singletons.
pub fn cluster_density(weight: f64, size: usize) -> f64 {
    if size <= 1 {
        0.0
    } else {
        weight / (size * (size - 1)) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterDensity {
    pub cluster: usize,
    pub size: usize,
    pub weight: f64,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    pub per_cluster: Vec<ClusterDensity>,
    pub score: f64,
}

impl DensityReport {
    /// `cluster,size,weight,density` rows followed by a `score,<S>` line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cluster,size,weight,density\n");
        for c in &self.per_cluster {
            writeln!(s, "{},{},{},{}", c.cluster, c.size, c.weight, c.density).unwrap();
        }
        writeln!(s, "score,{}", self.score).unwrap();
        s
    }
}

/// Weighted density `S(π) = (1/n) sum_C |C| D(C)` via the fast route.
pub fn partition_score(h: &IncidenceMatrix, pi: &Partitioning) -> Result<DensityReport> {
    if pi.n() != h.n() {
        return Err(Error::validation(format!(
            "partitioning covers {} items, incidence matrix has {}",
            pi.n(),
            h.n()
        )));
    }
    let p = h.p();
    let mut acc = AlphaAccumulator::new(h.d());
    let mut per_cluster = Vec::with_capacity(pi.k());
    let mut total = 0.0;
    for (cluster, members) in pi.clusters().iter().enumerate() {
        let size = members.len();
        let pairs = acc.sum_squares(h, members) - (p * size) as u64;
        let weight = pairs as f64 / p as f64;
        let density = cluster_density(weight, size);
        total += size as f64 * density;
        per_cluster.push(ClusterDensity {
            cluster,
            size,
            weight,
            density,
        });
    }
    Ok(DensityReport {
        per_cluster,
        score: total / h.n() as f64,
    })
}

/// Convenience wrapper returning only `S(π)`.
pub fn density_score(h: &IncidenceMatrix, pi: &Partitioning) -> Result<f64> {
    partition_score(h, pi).map(|r| r.score)
}

fn fast_density(acc: &mut AlphaAccumulator, h: &IncidenceMatrix, members: &[usize]) -> f64 {
    let size = members.len();
    let pairs = acc.sum_squares(h, members) - (h.p() * size) as u64;
    cluster_density(pairs as f64 / h.p() as f64, size)
}

/// Change in `S` when `parent` is split into `part_a` and `part_b`.
///
/// Only the three clusters involved are visited:
/// `dS = (|P| / n) (beta D(A) + (1 - beta) D(B) - D(P))` with `beta = |A| / |P|`.
pub fn split_delta(h: &IncidenceMatrix, parent: &[usize], part_a: &[usize], part_b: &[usize]) -> Result<f64> {
    check_members(parent, h.n())?;
    check_members(part_a, h.n())?;
    check_members(part_b, h.n())?;
    let mut union: Vec<usize> = part_a.iter().chain(part_b).copied().collect();
    union.sort_unstable();
    let mut sorted_parent = parent.to_vec();
    sorted_parent.sort_unstable();
    if union.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::validation("split parts overlap"));
    }
    if union != sorted_parent {
        return Err(Error::validation("split parts do not cover the parent exactly"));
    }
    let mut acc = AlphaAccumulator::new(h.d());
    let beta = part_a.len() as f64 / parent.len() as f64;
    let da = fast_density(&mut acc, h, part_a);
    let db = fast_density(&mut acc, h, part_b);
    let dp = fast_density(&mut acc, h, parent);
    Ok(parent.len() as f64 / h.n() as f64 * (beta * da + (1.0 - beta) * db - dp))
}

/// Similarity between two clusters of the same partitioning, measured through
/// the rest of the ensemble.
///
/// Each cluster is profiled by `gamma_f = alpha_f / |C|` over the columns of the
/// *other* partitionings (the fraction of its members landing in each foreign
/// cluster). The similarity is the weighted Jaccard index of the two profiles,
/// `sum min / sum max`; it is 0 when `p = 1`.
pub fn cluster_similarity_matrix(h: &IncidenceMatrix) -> Vec<Vec<Vec<f64>>> {
    let blocks = h.blocks();
    let p = h.p();
    let mut acc = AlphaAccumulator::new(h.d());
    let profiles: Vec<AlphaCounts> = (0..h.d()).map(|f| acc.counts(h, h.column(f))).collect();
    blocks
        .iter()
        .map(|block| {
            let k = block.len();
            let mut sims = vec![vec![0.0; k]; k];
            for a in 0..k {
                sims[a][a] = 1.0;
                for b in (a + 1)..k {
                    let s = if p > 1 {
                        let pa = &profiles[block.start + a];
                        let pb = &profiles[block.start + b];
                        let (sa, sb) = (pa.size() as f64, pb.size() as f64);
                        let (mut i, mut j) = (0, 0);
                        let mut mins = CompensatedSum::new();
                        while i < pa.entries.len() && j < pb.entries.len() {
                            let (fa, ca) = pa.entries[i];
                            let (fb, cb) = pb.entries[j];
                            match fa.cmp(&fb) {
                                std::cmp::Ordering::Less => i += 1,
                                std::cmp::Ordering::Greater => j += 1,
                                std::cmp::Ordering::Equal => {
                                    if !block.contains(&fa) {
                                        mins.add((ca as f64 / sa).min(cb as f64 / sb));
                                    }
                                    i += 1;
                                    j += 1;
                                }
                            }
                        }
                        // Both profiles sum to p - 1, so sum max = 2 (p - 1) - sum min.
                        let m = mins.value();
                        m / (2.0 * (p - 1) as f64 - m)
                    } else {
                        0.0
                    };
                    sims[a][b] = s;
                    sims[b][a] = s;
                }
            }
            sims
        })
        .collect()
}

/// Co-association where every "not co-clustered" vote `0` of a partitioning is
/// replaced by the similarity of the two clusters involved, then averaged over `p`.
pub fn enhance_coassociation(a: &CoAssocMatrix, ensemble: &ClusterEnsemble, cap: usize) -> Result<CoAssocMatrix> {
    let n = a.n();
    check_cap(n, cap)?;
    if ensemble.n() != n {
        return Err(Error::validation("ensemble and co-association sizes differ"));
    }
    let h = IncidenceMatrix::from_ensemble(ensemble);
    let sims = cluster_similarity_matrix(&h);
    let p = ensemble.p() as f64;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for (t, pi) in ensemble.partitionings().iter().enumerate() {
                let (ci, cj) = (pi.label(i), pi.label(j));
                acc += if ci == cj { 1.0 } else { sims[t][ci][cj] };
            }
            let v = (acc / p).min(1.0);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(CoAssocMatrix { n, values })
}
