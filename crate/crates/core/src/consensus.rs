//! Consensus clustering algorithms behind one request type.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{coassociation, enhance_coassociation, CoAssocMatrix, DEFAULT_ORACLE_CAP};
use crate::error::{Error, Result};
use crate::graph::{partition_graph, WeightedGraph, DEFAULT_BALANCE_FACTOR};
use crate::kmeans::{
    bisecting_fit, kmeans_fit, kmeans_loss, Divergence, FitResult, KMeansConfig, Points, DEFAULT_KL_EPS,
};
use crate::model::{ClusterEnsemble, IncidenceMatrix, Partitioning};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Linkage {
    #[serde(rename = "SL")]
    Single,
    #[serde(rename = "AL")]
    Average,
    #[serde(rename = "ML")]
    Complete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Raw,
    Enhanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    EacKm,
    HKm,
    Sec,
    Ecc,
    Mcla,
    Cspa,
    Hier { linkage: Linkage, matrix: MatrixKind },
}

impl Algorithm {
    pub fn is_hierarchical(&self) -> bool {
        matches!(self, Algorithm::Hier { .. })
    }

    /// Every algorithm, hierarchical variants last.
    pub fn all() -> Vec<Algorithm> {
        let mut v = vec![
            Algorithm::EacKm,
            Algorithm::HKm,
            Algorithm::Sec,
            Algorithm::Ecc,
            Algorithm::Mcla,
            Algorithm::Cspa,
        ];
        for matrix in [MatrixKind::Raw, MatrixKind::Enhanced] {
            for linkage in [Linkage::Single, Linkage::Average, Linkage::Complete] {
                v.push(Algorithm::Hier { linkage, matrix });
            }
        }
        v
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::EacKm => f.write_str("eac_km"),
            Algorithm::HKm => f.write_str("h_km"),
            Algorithm::Sec => f.write_str("sec"),
            Algorithm::Ecc => f.write_str("ecc"),
            Algorithm::Mcla => f.write_str("mcla"),
            Algorithm::Cspa => f.write_str("cspa"),
            Algorithm::Hier { linkage, matrix } => {
                let l = match linkage {
                    Linkage::Single => "sl",
                    Linkage::Average => "al",
                    Linkage::Complete => "ml",
                };
                let m = match matrix {
                    MatrixKind::Raw => "raw",
                    MatrixKind::Enhanced => "enhanced",
                };
                write!(f, "hier_{l}_{m}")
            }
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// Accepts the `Display` names, e.g. `eac_km` or `hier_al_enhanced`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let simple = match s.as_str() {
            "eac_km" => Some(Algorithm::EacKm),
            "h_km" => Some(Algorithm::HKm),
            "sec" => Some(Algorithm::Sec),
            "ecc" => Some(Algorithm::Ecc),
            "mcla" => Some(Algorithm::Mcla),
            "cspa" => Some(Algorithm::Cspa),
            _ => None,
        };
        if let Some(a) = simple {
            return Ok(a);
        }
        let parts: Vec<&str> = s.split('_').collect();
        if let ["hier", l, m] = parts.as_slice() {
            let linkage = match *l {
                "sl" => Linkage::Single,
                "al" => Linkage::Average,
                "ml" => Linkage::Complete,
                _ => return Err(Error::Config(format!("unknown linkage `{l}`"))),
            };
            let matrix = match *m {
                "raw" => MatrixKind::Raw,
                "enhanced" => MatrixKind::Enhanced,
                _ => return Err(Error::Config(format!("unknown matrix kind `{m}`"))),
            };
            return Ok(Algorithm::Hier { linkage, matrix });
        }
        Err(Error::Config(format!("unknown algorithm `{s}`")))
    }
}

impl Serialize for Algorithm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-algorithm parameters. Missing keys take the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusOptions {
    /// Restarts of the k-means based methods (eac_km, sec, ecc).
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Smoothing mass for ecc.
    pub kl_eps: f64,
    /// Balance factor handed to the graph partitioner (mcla, cspa).
    pub balance_factor: f64,
    /// Largest n for which an n x n co-association matrix is built.
    pub oracle_cap: usize,
}

impl Default for ConsensusOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iters: 100,
            tol: 1e-6,
            kl_eps: DEFAULT_KL_EPS,
            balance_factor: DEFAULT_BALANCE_FACTOR,
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

impl ConsensusOptions {
    fn kmeans_config(&self, k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            max_iters: self.max_iters,
            tol: self.tol,
            seed,
            restarts: self.restarts,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConsensusRequest<'a> {
    pub ensemble: &'a ClusterEnsemble,
    pub k_out: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub options: ConsensusOptions,
}

impl<'a> ConsensusRequest<'a> {
    pub fn new(ensemble: &'a ClusterEnsemble, k_out: usize, algorithm: Algorithm, seed: u64) -> Self {
        Self {
            ensemble,
            k_out,
            algorithm,
            seed,
            options: ConsensusOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_out < 2 {
            return Err(Error::Config("k_out must be at least 2".into()));
        }
        if self.k_out > self.ensemble.n() {
            return Err(Error::validation(format!(
                "cannot form {} clusters from {} items",
                self.k_out,
                self.ensemble.n()
            )));
        }
        Ok(())
    }
}

/// Runs the requested algorithm.
///
/// `loss` of the result is always the k-means loss on `H`, so outputs of
/// different algorithms are comparable; `loss_history` keeps whatever the
/// algorithm itself tracked.
pub fn run_consensus(req: &ConsensusRequest<'_>) -> Result<FitResult> {
    req.validate()?;
    let h = IncidenceMatrix::from_ensemble(req.ensemble);
    let opts = &req.options;
    let cfg = opts.kmeans_config(req.k_out, req.seed);
    let mut fit = match req.algorithm {
        Algorithm::EacKm => kmeans_fit(&Points::from_incidence(&h), &cfg, &Divergence::Euclidean)?,
        Algorithm::HKm => bisecting_fit(&h, req.k_out, &cfg)?.fit,
        Algorithm::Sec => {
            let (pts, w) = sec_transform(&h)?;
            kmeans_fit(&pts, &cfg, &Divergence::Weighted(w))?
        }
        Algorithm::Ecc => kmeans_fit(
            &Points::from_incidence(&h),
            &cfg,
            &Divergence::KullbackLeibler { eps: opts.kl_eps },
        )?,
        Algorithm::Mcla => mcla_with(req.ensemble, req.k_out, req.seed, opts.balance_factor)?,
        Algorithm::Cspa => cspa_with(req.ensemble, req.k_out, req.seed, opts.balance_factor, opts.oracle_cap)?,
        Algorithm::Hier { linkage, matrix } => {
            let a = coassociation(&h, opts.oracle_cap)?;
            let a = match matrix {
                MatrixKind::Raw => a,
                MatrixKind::Enhanced => enhance_coassociation(&a, req.ensemble, opts.oracle_cap)?,
            };
            hierarchical(&a, linkage, req.k_out)?
        }
    };
    fit.loss = kmeans_loss(&h, &fit.partitioning)?;
    Ok(fit)
}

fn graph_fit(h: &IncidenceMatrix, partitioning: Partitioning) -> Result<FitResult> {
    let loss = kmeans_loss(h, &partitioning)?;
    Ok(FitResult {
        partitioning,
        loss,
        iterations: 1,
        converged: true,
        loss_history: vec![loss],
    })
}

/// Rows `h_i / w_i` with `w_i = h_i . sum_j h_j`, for weighted k-means.
pub fn sec_transform(h: &IncidenceMatrix) -> Result<(Points, Vec<f64>)> {
    let colsum = h.column_sums();
    let mut rows = Vec::with_capacity(h.n());
    let mut weights = Vec::with_capacity(h.n());
    for i in 0..h.n() {
        let w: usize = h.row(i).iter().map(|&f| colsum[f]).sum();
        assert!(w >= h.p(), "row {i} has association below its own votes");
        let w = w as f64;
        rows.push(h.row(i).iter().map(|&f| (f, 1.0 / w)).collect());
        weights.push(w);
    }
    Ok((Points::sparse(h.d(), rows, h.blocks())?, weights))
}

/// Jaccard index of every overlapping pair of clusters from different
/// partitionings, as `(a, b, jaccard)` with `a < b`.
pub fn cluster_jaccard_edges(h: &IncidenceMatrix) -> Vec<(usize, usize, f64)> {
    let d = h.d();
    let owner = h.column_owner();
    let mut edges = Vec::new();
    let mut inter = vec![0usize; d];
    let mut touched = Vec::new();
    for a in 0..d {
        for &i in h.column(a) {
            for &b in h.row(i) {
                if b > a && owner[b] != owner[a] {
                    if inter[b] == 0 {
                        touched.push(b);
                    }
                    inter[b] += 1;
                }
            }
        }
        touched.sort_unstable();
        for &b in &touched {
            let union = h.column(a).len() + h.column(b).len() - inter[b];
            edges.push((a, b, inter[b] as f64 / union as f64));
            inter[b] = 0;
        }
        touched.clear();
    }
    edges
}

/// Relabels used labels to `0..k'` keeping their order.
fn compact(labels: &[usize], k: usize) -> Result<Partitioning> {
    let mut map = vec![usize::MAX; k];
    let mut used = 0;
    for &l in labels {
        map[l] = 0;
    }
    for m in map.iter_mut() {
        if *m == 0 {
            *m = used;
            used += 1;
        }
    }
    Partitioning::new(labels.iter().map(|&l| map[l]).collect(), used)
}

pub fn mcla(ensemble: &ClusterEnsemble, k_out: usize, seed: u64) -> Result<FitResult> {
    mcla_with(ensemble, k_out, seed, DEFAULT_BALANCE_FACTOR)
}

fn mcla_with(ensemble: &ClusterEnsemble, k_out: usize, seed: u64, balance_factor: f64) -> Result<FitResult> {
    let h = IncidenceMatrix::from_ensemble(ensemble);
    if h.d() < k_out {
        return Err(Error::validation(format!(
            "{} clusters cannot form {k_out} meta-clusters",
            h.d()
        )));
    }
    let g = WeightedGraph::new(h.d(), cluster_jaccard_edges(&h))?;
    let meta = partition_graph(&g, k_out, balance_factor, seed)?.labels;
    let mut meta_size = vec![0usize; k_out];
    for &m in &meta {
        meta_size[m] += 1;
    }
    let mut labels = Vec::with_capacity(h.n());
    let mut hits = vec![0usize; k_out];
    for i in 0..h.n() {
        hits.iter_mut().for_each(|x| *x = 0);
        for &f in h.row(i) {
            hits[meta[f]] += 1;
        }
        // association = hits / size; compare by cross-multiplication to stay exact
        let mut best = 0;
        for m in 1..k_out {
            if hits[m] * meta_size[best] > hits[best] * meta_size[m] {
                best = m;
            }
        }
        labels.push(best);
    }
    graph_fit(&h, compact(&labels, k_out)?)
}

pub fn cspa(ensemble: &ClusterEnsemble, k_out: usize, seed: u64) -> Result<FitResult> {
    cspa_with(ensemble, k_out, seed, DEFAULT_BALANCE_FACTOR, DEFAULT_ORACLE_CAP)
}

fn cspa_with(
    ensemble: &ClusterEnsemble,
    k_out: usize,
    seed: u64,
    balance_factor: f64,
    cap: usize,
) -> Result<FitResult> {
    if k_out < 2 {
        return Err(Error::Config("k_out must be at least 2".into()));
    }
    let h = IncidenceMatrix::from_ensemble(ensemble);
    let a = coassociation(&h, cap)?;
    let n = a.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for (j, &v) in a.row(i).iter().enumerate().skip(i + 1) {
            if v > 0.0 {
                edges.push((i, j, v));
            }
        }
    }
    let g = WeightedGraph::new(n, edges)?;
    let labels = partition_graph(&g, k_out, balance_factor, seed)?.labels;
    graph_fit(&h, Partitioning::new(labels, k_out)?)
}

#[derive(PartialEq)]
struct Pair {
    sim: f64,
    i: u32,
    j: u32,
    vi: u32,
    vj: u32,
}

impl Eq for Pair {}

impl PartialOrd for Pair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pair {
    // max-heap: highest similarity first, then the smallest (i, j)
    fn cmp(&self, other: &Self) -> Ordering {
        self.sim
            .total_cmp(&other.sim)
            .then_with(|| Reverse((self.i, self.j)).cmp(&Reverse((other.i, other.j))))
    }
}

/// Agglomerative clustering on a similarity matrix, stopped at `k_out` clusters.
///
/// Linkage similarity between clusters: `Single` takes the largest pairwise
/// similarity, `Complete` the smallest and `Average` the mean. The merged
/// cluster keeps the smaller id. The returned loss is NaN since no incidence
/// matrix is available here; `run_consensus` fills it in.
pub fn hierarchical(a: &CoAssocMatrix, linkage: Linkage, k_out: usize) -> Result<FitResult> {
    let n = a.n();
    if k_out < 1 || k_out > n {
        return Err(Error::validation(format!(
            "cannot form {k_out} clusters from {n} items"
        )));
    }
    let mut sim = a.values().to_vec();
    let mut size = vec![1usize; n];
    let mut version = vec![0u32; n];
    let mut active = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();
    let mut heap = BinaryHeap::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            heap.push(Pair {
                sim: sim[i * n + j],
                i: i as u32,
                j: j as u32,
                vi: 0,
                vj: 0,
            });
        }
    }
    let mut clusters = n;
    let mut merges = 0;
    while clusters > k_out {
        let Pair { i, j, vi, vj, .. } = heap.pop().expect("an active pair remains");
        let (i, j) = (i as usize, j as usize);
        if !active[i] || !active[j] || version[i] != vi || version[j] != vj {
            continue;
        }
        let (si, sj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let (a_ik, a_jk) = (sim[i * n + k], sim[j * n + k]);
            let v = match linkage {
                Linkage::Single => a_ik.max(a_jk),
                Linkage::Complete => a_ik.min(a_jk),
                Linkage::Average => (si * a_ik + sj * a_jk) / (si + sj),
            };
            sim[i * n + k] = v;
            sim[k * n + i] = v;
        }
        active[j] = false;
        parent[j] = i;
        size[i] += size[j];
        version[i] += 1;
        clusters -= 1;
        merges += 1;
        for k in 0..n {
            if active[k] && k != i {
                let (lo, hi) = (i.min(k), i.max(k));
                heap.push(Pair {
                    sim: sim[i * n + k],
                    i: lo as u32,
                    j: hi as u32,
                    vi: version[lo],
                    vj: version[hi],
                });
            }
        }
    }
    // find roots by following merge links
    let root = |mut x: usize| {
        while parent[x] != x {
            x = parent[x];
        }
        x
    };
    let roots: Vec<usize> = (0..n).map(root).collect();
    let mut labels_of_root = vec![usize::MAX; n];
    let mut next = 0;
    for r in 0..n {
        if active[r] {
            labels_of_root[r] = next;
            next += 1;
        }
    }
    let labels = roots.iter().map(|&r| labels_of_root[r]).collect();
    Ok(FitResult {
        partitioning: Partitioning::new(labels, k_out)?,
        loss: f64::NAN,
        iterations: merges,
        converged: true,
        loss_history: Vec::new(),
    })
}
