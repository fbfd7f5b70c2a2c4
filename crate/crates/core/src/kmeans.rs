//! Lloyd-style k-means with pluggable divergences, the bisecting divisive
//! wrapper, and base-clustering generation.
//!
//! Points are either dense rows or sparse rows (the incidence matrix has only
//! `p` non-zeros per row), and every distance evaluation touches only the
//! non-zeros plus a per-centroid cache, so one assignment pass on `H` costs
//! `O(n k p)` rather than `O(n k d)`.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{split_delta, AlphaAccumulator};
use crate::error::{Error, Result};
use crate::model::{ClusterEnsemble, Dataset, DenseMatrix, IncidenceMatrix, Partitioning};
use crate::numeric::mix_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once the relative loss improvement of an iteration drops below this.
    pub tol: f64,
    pub seed: u64,
    /// Independent runs; the lowest loss wins, ties to the earliest run.
    pub restarts: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iters: 100,
            tol: 1e-6,
            seed,
            restarts: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("tol must be non-negative".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Divergence {
    Euclidean,
    /// Squared Euclidean with per-point weights (one positive weight per row).
    Weighted(Vec<f64>),
    /// Kullback-Leibler `KL(x || mu)` per row block, after mixing `eps` uniform
    /// mass into each block.
    KullbackLeibler {
        eps: f64,
    },
}

pub const DEFAULT_KL_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub partitioning: Partitioning,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Loss after each update step of the winning run.
    pub loss_history: Vec<f64>,
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(Vec<f64>),
    Sparse {
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

/// Row data for k-means: dense, or sparse with sorted column indices.
///
/// `blocks` partitions the columns; KL smoothing treats each block as one
/// distribution. Dense data built from a plain matrix is a single block.
#[derive(Clone, Debug)]
pub struct Points {
    n: usize,
    dim: usize,
    storage: Storage,
    blocks: Vec<Range<usize>>,
}

enum RowView<'a> {
    Dense(&'a [f64]),
    Sparse(&'a [usize], &'a [f64]),
}

impl Points {
    pub fn dense(m: &DenseMatrix) -> Self {
        Self {
            n: m.rows(),
            dim: m.cols(),
            storage: Storage::Dense(m.values().to_vec()),
            blocks: vec![0..m.cols()],
        }
    }

    /// All rows of `H`, one block per partitioning.
    pub fn from_incidence(h: &IncidenceMatrix) -> Self {
        let rows: Vec<usize> = (0..h.n()).collect();
        Self::from_incidence_rows(h, &rows)
    }

    /// Selected rows of `H`, keeping all `d` columns.
    pub fn from_incidence_rows(h: &IncidenceMatrix, rows: &[usize]) -> Self {
        let p = h.p();
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::with_capacity(rows.len() * p);
        indptr.push(0);
        for &i in rows {
            // columns of a row are increasing because blocks are laid out in order
            indices.extend_from_slice(h.row(i));
            indptr.push(indices.len());
        }
        let values = vec![1.0; indices.len()];
        Self {
            n: rows.len(),
            dim: h.d(),
            storage: Storage::Sparse {
                indptr,
                indices,
                values,
            },
            blocks: h.blocks(),
        }
    }

    /// Sparse rows given as `(column, value)` lists.
    pub fn sparse(dim: usize, rows: Vec<Vec<(usize, f64)>>, blocks: Vec<Range<usize>>) -> Result<Self> {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for mut r in rows.iter().cloned() {
            r.sort_by_key(|e| e.0);
            if r.windows(2).any(|w| w[0].0 == w[1].0) || r.iter().any(|e| e.0 >= dim) {
                return Err(Error::validation("sparse row has duplicate or out-of-range columns"));
            }
            for (c, v) in r {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n: rows.len(),
            dim,
            storage: Storage::Sparse {
                indptr,
                indices,
                values,
            },
            blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, i: usize) -> RowView<'_> {
        match &self.storage {
            Storage::Dense(v) => RowView::Dense(&v[i * self.dim..(i + 1) * self.dim]),
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let r = indptr[i]..indptr[i + 1];
                RowView::Sparse(&indices[r.clone()], &values[r])
            }
        }
    }

    fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for (t, b) in self.blocks.iter().enumerate() {
            for f in b.clone() {
                out[f] = t;
            }
        }
        out
    }

    /// Rescales every block of every row to sum to one.
    fn normalized_blocks(&self) -> Result<Points> {
        let block_of = self.block_of();
        let mut out = self.clone();
        let nb = self.blocks.len();
        let fix = |idx: &mut dyn Iterator<Item = (usize, &mut f64)>| -> Result<()> {
            let items: Vec<(usize, &mut f64)> = idx.collect();
            let mut sums = vec![0.0; nb];
            for (f, v) in &items {
                if **v < 0.0 || !v.is_finite() {
                    return Err(Error::validation("KL divergence needs non-negative finite rows"));
                }
                sums[block_of[*f]] += **v;
            }
            if sums.iter().any(|&s| s <= 0.0) {
                return Err(Error::validation(
                    "KL divergence needs a positive mass in every row block",
                ));
            }
            for (f, v) in items {
                *v /= sums[block_of[f]];
            }
            Ok(())
        };
        match &mut out.storage {
            Storage::Dense(values) => {
                for row in values.chunks_mut(self.dim) {
                    fix(&mut row.iter_mut().enumerate())?;
                }
            }
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                for i in 0..self.n {
                    let r = indptr[i]..indptr[i + 1];
                    let idx = &indices[r.clone()];
                    fix(&mut idx.iter().copied().zip(values[r].iter_mut()))?;
                }
            }
        }
        Ok(out)
    }
}

enum Kind {
    Euclidean,
    Kl {
        eps: f64,
        /// `sum_f x_f ln x_f` of each smoothed row.
        row_entropy: Vec<f64>,
    },
}

/// Per-centroid quantities that make a distance evaluation sparse.
enum CentroidCache {
    SqNorm(f64),
    Log { logs: Vec<f64>, block_sums: Vec<f64> },
}

struct Engine {
    pts: Points,
    weights: Vec<f64>,
    kind: Kind,
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

impl Engine {
    fn new(x: &Points, divergence: &Divergence) -> Result<Self> {
        match divergence {
            Divergence::Euclidean => Ok(Self {
                pts: x.clone(),
                weights: vec![1.0; x.n],
                kind: Kind::Euclidean,
            }),
            Divergence::Weighted(w) => {
                if w.len() != x.n {
                    return Err(Error::validation(format!("{} weights for {} points", w.len(), x.n)));
                }
                if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(Error::validation("weights must be positive"));
                }
                Ok(Self {
                    pts: x.clone(),
                    weights: w.clone(),
                    kind: Kind::Euclidean,
                })
            }
            Divergence::KullbackLeibler { eps } => {
                if !(*eps > 0.0 && *eps < 1.0) {
                    return Err(Error::Config("KL smoothing eps must lie in (0, 1)".into()));
                }
                let pts = x.normalized_blocks()?;
                let block_of = pts.block_of();
                let row_entropy = (0..pts.n)
                    .map(|i| {
                        let lo: Vec<f64> = pts.blocks.iter().map(|b| eps / b.len() as f64).collect();
                        match pts.row(i) {
                            RowView::Dense(r) => r
                                .iter()
                                .enumerate()
                                .map(|(f, &u)| xlogx((1.0 - eps) * u + lo[block_of[f]]))
                                .sum(),
                            RowView::Sparse(idx, vals) => {
                                let mut nz = vec![0usize; pts.blocks.len()];
                                let mut acc = 0.0;
                                for (&f, &u) in idx.iter().zip(vals) {
                                    nz[block_of[f]] += 1;
                                    acc += xlogx((1.0 - eps) * u + lo[block_of[f]]);
                                }
                                for (t, b) in pts.blocks.iter().enumerate() {
                                    acc += (b.len() - nz[t]) as f64 * xlogx(lo[t]);
                                }
                                acc
                            }
                        }
                    })
                    .collect();
                Ok(Self {
                    weights: vec![1.0; pts.n],
                    pts,
                    kind: Kind::Kl { eps: *eps, row_entropy },
                })
            }
        }
    }

    fn cache(&self, centroid: &[f64]) -> CentroidCache {
        match self.kind {
            Kind::Euclidean => CentroidCache::SqNorm(centroid.iter().map(|v| v * v).sum()),
            Kind::Kl { .. } => {
                let logs: Vec<f64> = centroid.iter().map(|v| v.ln()).collect();
                let block_sums = self.pts.blocks.iter().map(|b| logs[b.clone()].iter().sum()).collect();
                CentroidCache::Log { logs, block_sums }
            }
        }
    }

    fn divergence(&self, i: usize, centroid: &[f64], cache: &CentroidCache) -> f64 {
        match (&self.kind, cache) {
            (Kind::Euclidean, CentroidCache::SqNorm(norm)) => match self.pts.row(i) {
                RowView::Dense(r) => r.iter().zip(centroid).map(|(a, b)| (a - b) * (a - b)).sum(),
                RowView::Sparse(idx, vals) => {
                    let mut acc = *norm;
                    for (&f, &x) in idx.iter().zip(vals) {
                        let m = centroid[f];
                        acc += (x - m) * (x - m) - m * m;
                    }
                    acc.max(0.0)
                }
            },
            (Kind::Kl { eps, row_entropy }, CentroidCache::Log { logs, block_sums }) => {
                let mut cross: f64 = self
                    .pts
                    .blocks
                    .iter()
                    .zip(block_sums)
                    .map(|(b, s)| eps / b.len() as f64 * s)
                    .sum();
                match self.pts.row(i) {
                    RowView::Dense(r) => {
                        cross += (1.0 - eps) * r.iter().zip(logs).map(|(u, l)| u * l).sum::<f64>();
                    }
                    RowView::Sparse(idx, vals) => {
                        cross += (1.0 - eps) * idx.iter().zip(vals).map(|(&f, u)| u * logs[f]).sum::<f64>();
                    }
                }
                (row_entropy[i] - cross).max(0.0)
            }
            _ => unreachable!("cache built for a different divergence"),
        }
    }

    /// The centroid a single point would have.
    fn point_centroid(&self, i: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.pts.dim];
        self.accumulate(i, 1.0, &mut c);
        self.finish(c, 1.0)
    }

    fn accumulate(&self, i: usize, w: f64, into: &mut [f64]) {
        match self.pts.row(i) {
            RowView::Dense(r) => {
                for (a, x) in into.iter_mut().zip(r) {
                    *a += w * x;
                }
            }
            RowView::Sparse(idx, vals) => {
                for (&f, x) in idx.iter().zip(vals) {
                    into[f] += w * x;
                }
            }
        }
    }

    fn finish(&self, mut sum: Vec<f64>, total_weight: f64) -> Vec<f64> {
        for v in sum.iter_mut() {
            *v /= total_weight;
        }
        if let Kind::Kl { eps, .. } = self.kind {
            for b in &self.pts.blocks {
                let lo = eps / b.len() as f64;
                for v in &mut sum[b.clone()] {
                    *v = (1.0 - eps) * *v + lo;
                }
            }
        }
        sum
    }

    fn update(&self, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
        let mut sums = vec![vec![0.0; self.pts.dim]; k];
        let mut totals = vec![0.0; k];
        for (i, &l) in labels.iter().enumerate() {
            self.accumulate(i, self.weights[i], &mut sums[l]);
            totals[l] += self.weights[i];
        }
        sums.into_iter().zip(totals).map(|(s, t)| self.finish(s, t)).collect()
    }

    /// Nearest centroid per point, ties to the lowest index.
    fn assign(&self, centroids: &[Vec<f64>], caches: &[CentroidCache]) -> (Vec<usize>, Vec<f64>) {
        let mut labels = vec![0; self.pts.n];
        let mut dists = vec![0.0; self.pts.n];
        for i in 0..self.pts.n {
            let mut best = (f64::INFINITY, 0);
            for (c, (mu, cache)) in centroids.iter().zip(caches).enumerate() {
                let d = self.divergence(i, mu, cache);
                if d < best.0 {
                    best = (d, c);
                }
            }
            labels[i] = best.1;
            dists[i] = best.0;
        }
        (labels, dists)
    }

    fn loss(&self, labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
        let caches: Vec<_> = centroids.iter().map(|c| self.cache(c)).collect();
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| self.weights[i] * self.divergence(i, &centroids[l], &caches[l]))
            .sum()
    }

    /// Distance-weighted probabilistic seeding.
    /// Greedy k-means++ seeding: each step draws `2 + ln k` candidates by
    /// weighted distance and keeps the one leaving the smallest potential.
    fn init(&self, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let n = self.pts.n;
        let trials = 2 + (k as f64).ln().floor() as usize;
        let mut chosen = vec![false; n];
        let mut centroids = Vec::with_capacity(k);
        let first = pick_weighted(&self.weights, rng).unwrap_or(0);
        chosen[first] = true;
        centroids.push(self.point_centroid(first));
        let cache = self.cache(&centroids[0]);
        let mut nearest: Vec<f64> = (0..n).map(|i| self.divergence(i, &centroids[0], &cache)).collect();
        while centroids.len() < k {
            let scores: Vec<f64> = (0..n)
                .map(|i| if chosen[i] { 0.0 } else { self.weights[i] * nearest[i] })
                .collect();
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            for _ in 0..trials {
                let cand = pick_weighted(&scores, rng).unwrap_or_else(|| {
                    // every remaining point coincides with a centre
                    let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
                    free[rng.gen_range(0..free.len())]
                });
                let centre = self.point_centroid(cand);
                let cache = self.cache(&centre);
                let updated: Vec<f64> = (0..n)
                    .map(|i| nearest[i].min(self.divergence(i, &centre, &cache)))
                    .collect();
                let potential: f64 = updated.iter().zip(&self.weights).map(|(d, w)| d * w).sum();
                if best.as_ref().map_or(true, |b| potential < b.0) {
                    best = Some((potential, cand, updated));
                }
            }
            let (_, next, updated) = best.unwrap();
            chosen[next] = true;
            nearest = updated;
            centroids.push(self.point_centroid(next));
        }
        centroids
    }

    fn run(&self, k: usize, cfg: &KMeansConfig, seed: u64) -> FitResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centroids = self.init(k, &mut rng);
        let mut history: Vec<f64> = Vec::new();
        let mut prev_labels: Option<Vec<usize>> = None;
        let mut converged = false;
        let mut iterations = 0;
        let mut labels = Vec::new();
        while iterations < cfg.max_iters {
            iterations += 1;
            let caches: Vec<_> = centroids.iter().map(|c| self.cache(c)).collect();
            let (mut l, dists) = self.assign(&centroids, &caches);
            repair_empty(&mut l, &dists, k);
            centroids = self.update(&l, k);
            let loss = self.loss(&l, &centroids);
            let stable = prev_labels.as_ref() == Some(&l);
            let small_gain = history
                .last()
                .map_or(false, |&prev| prev - loss <= cfg.tol * prev.abs());
            history.push(loss);
            labels = l.clone();
            prev_labels = Some(l);
            if stable || small_gain || loss == 0.0 {
                converged = true;
                break;
            }
        }
        FitResult {
            partitioning: Partitioning::new(labels, k).expect("repair leaves no empty cluster"),
            loss: *history.last().unwrap(),
            iterations,
            converged,
            loss_history: history,
        }
    }
}

fn pick_weighted(weights: &[f64], rng: &mut ChaCha8Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if acc > target {
                return Some(i);
            }
        }
    }
    last_positive
}

/// Fills each empty cluster with the point farthest from its centroid, taken
/// from a cluster that keeps at least one member. Ties go to the lowest index.
fn repair_empty(labels: &mut [usize], dists: &[f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut seized = vec![false; labels.len()];
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if seized[i] || sizes[l] < 2 {
                continue;
            }
            if best.map_or(true, |(d, _)| dists[i] > d) {
                best = Some((dists[i], i));
            }
        }
        let (_, i) = best.expect("n >= k leaves a donor cluster");
        sizes[labels[i]] -= 1;
        labels[i] = c;
        sizes[c] = 1;
        seized[i] = true;
    }
}

/// Best-of-restarts k-means under `divergence`.
pub fn kmeans_fit(x: &Points, cfg: &KMeansConfig, divergence: &Divergence) -> Result<FitResult> {
    cfg.validate()?;
    if x.n() < cfg.k {
        return Err(Error::validation(format!(
            "cannot form {} clusters from {} points",
            cfg.k,
            x.n()
        )));
    }
    let engine = Engine::new(x, divergence)?;
    let mut best: Option<FitResult> = None;
    for r in 0..cfg.restarts {
        let fit = engine.run(cfg.k, cfg, mix_seed(cfg.seed, r as u64));
        if best.as_ref().map_or(true, |b| fit.loss < b.loss) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// k-means loss on `H` via column counts: `p n - sum_C sum_f alpha_f^2 / |C|`.
pub fn kmeans_loss(h: &IncidenceMatrix, pi: &Partitioning) -> Result<f64> {
    if pi.n() != h.n() {
        return Err(Error::validation("partitioning and incidence matrix sizes differ"));
    }
    let mut acc = AlphaAccumulator::new(h.d());
    let gain: f64 = pi
        .clusters()
        .iter()
        .map(|members| acc.sum_squares(h, members) as f64 / members.len() as f64)
        .sum();
    Ok((h.p() * h.n()) as f64 - gain)
}

/// One applied split of the divisive tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    /// Cluster index that was split; it keeps the first part.
    pub cluster: usize,
    /// Index given to the second part.
    pub new_cluster: usize,
    pub sizes: (usize, usize),
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectingResult {
    pub fit: FitResult,
    pub splits: Vec<SplitRecord>,
}

struct Candidate {
    part_a: Vec<usize>,
    part_b: Vec<usize>,
    delta: f64,
}

/// Restarts used by each inner 2-way split.
pub const BISECT_RESTARTS: usize = 3;

fn best_split(h: &IncidenceMatrix, members: &[usize], cfg: &KMeansConfig, seed: u64) -> Result<Option<Candidate>> {
    if members.len() < 2 {
        return Ok(None);
    }
    let pts = Points::from_incidence_rows(h, members);
    let inner = KMeansConfig {
        k: 2,
        restarts: BISECT_RESTARTS,
        seed,
        ..cfg.clone()
    };
    let fit = kmeans_fit(&pts, &inner, &Divergence::Euclidean)?;
    let (mut part_a, mut part_b) = (Vec::new(), Vec::new());
    for (pos, &item) in members.iter().enumerate() {
        if fit.partitioning.label(pos) == 0 {
            part_a.push(item);
        } else {
            part_b.push(item);
        }
    }
    let delta = split_delta(h, members, &part_a, &part_b)?;
    Ok(Some(Candidate { part_a, part_b, delta }))
}

/// Divisive clustering that stops after `k_target - 1` splits.
///
/// Every cluster gets a candidate 2-means split when it is created; each step
/// applies the candidate with the largest density gain (ties to the lowest
/// cluster index). Candidates of untouched clusters stay valid because a split
/// only changes the density terms of the cluster being split.
pub fn bisecting_fit(h: &IncidenceMatrix, k_target: usize, cfg: &KMeansConfig) -> Result<BisectingResult> {
    cfg.validate()?;
    if k_target < 2 {
        return Err(Error::Config("bisecting needs k_target >= 2".into()));
    }
    if k_target > h.n() {
        return Err(Error::validation(format!(
            "cannot form {k_target} clusters from {} items",
            h.n()
        )));
    }
    let mut clusters: Vec<Vec<usize>> = vec![(0..h.n()).collect()];
    let mut created = 0u64;
    let mut candidates = vec![best_split(h, &clusters[0], cfg, mix_seed(cfg.seed, created))?];
    let mut splits = Vec::with_capacity(k_target - 1);
    while clusters.len() < k_target {
        let mut pick: Option<(usize, f64)> = None;
        for (c, cand) in candidates.iter().enumerate() {
            if let Some(cand) = cand {
                if pick.map_or(true, |(_, d)| cand.delta > d) {
                    pick = Some((c, cand.delta));
                }
            }
        }
        let (c, delta) =
            pick.ok_or_else(|| Error::validation("every cluster is a singleton before reaching k_target"))?;
        let cand = candidates[c].take().unwrap();
        let new_cluster = clusters.len();
        splits.push(SplitRecord {
            cluster: c,
            new_cluster,
            sizes: (cand.part_a.len(), cand.part_b.len()),
            delta,
        });
        clusters[c] = cand.part_a;
        clusters.push(cand.part_b);
        if clusters.len() < k_target {
            created += 1;
            candidates[c] = best_split(h, &clusters[c], cfg, mix_seed(cfg.seed, created))?;
            created += 1;
            candidates.push(best_split(h, &clusters[new_cluster], cfg, mix_seed(cfg.seed, created))?);
        } else {
            candidates.push(None);
        }
    }
    let mut labels = vec![0; h.n()];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = c;
        }
    }
    let partitioning = Partitioning::new(labels, k_target)?;
    let loss = kmeans_loss(h, &partitioning)?;
    Ok(BisectingResult {
        fit: FitResult {
            partitioning,
            loss,
            iterations: splits.len(),
            converged: true,
            loss_history: vec![loss],
        },
        splits,
    })
}

/// Inclusive range the base-clustering cluster count is drawn from.
pub fn base_k_range(n: usize, k0: usize) -> Result<(usize, usize)> {
    let root = (n as f64).sqrt().floor() as usize;
    let hi = root.min(100);
    if k0 > hi {
        return Err(Error::Config(format!(
            "k0 = {k0} exceeds min(floor(sqrt({n})), 100) = {hi}"
        )));
    }
    Ok((k0.max(1), hi))
}

/// Settings of each base k-means run; `k` and `seed` are overwritten per run.
pub fn base_clustering_config() -> KMeansConfig {
    KMeansConfig::new(2, 0)
}

/// `p` feature-space k-means runs, each with `k` drawn uniformly from
/// `[k0, min(floor(sqrt n), 100)]`.
pub fn generate_base_clusterings(data: &Dataset, p: usize, seed: u64) -> Result<ClusterEnsemble> {
    generate_base_clusterings_with(data, p, seed, &base_clustering_config())
}

pub fn generate_base_clusterings_with(
    data: &Dataset,
    p: usize,
    seed: u64,
    template: &KMeansConfig,
) -> Result<ClusterEnsemble> {
    if p < 1 {
        return Err(Error::Config("ensemble size must be at least 1".into()));
    }
    let (lo, hi) = base_k_range(data.n(), data.k0)?;
    let pts = Points::dense(&data.features);
    let parts = (0..p)
        .map(|t| {
            let run_seed = mix_seed(seed, t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            let cfg = KMeansConfig {
                k: rng.gen_range(lo..=hi),
                seed: mix_seed(run_seed, 1),
                ..template.clone()
            };
            kmeans_fit(&pts, &cfg, &Divergence::Euclidean).map(|f| f.partitioning)
        })
        .collect::<Result<Vec<_>>>()?;
    ClusterEnsemble::new(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::density_score;

    fn h_of(parts: &[&[usize]]) -> IncidenceMatrix {
        IncidenceMatrix::from_ensemble(
            &ClusterEnsemble::new(parts.iter().map(|l| Partitioning::from_labels(l).unwrap()).collect()).unwrap(),
        )
    }

    fn e0() -> IncidenceMatrix {
        h_of(&[&[0, 0, 1, 1], &[0, 0, 1, 1]])
    }

    #[test]
    fn fit_on_e0() {
        let h = e0();
        let pts = Points::from_incidence(&h);
        let fit = kmeans_fit(&pts, &KMeansConfig::new(2, 1), &Divergence::Euclidean).unwrap();
        assert!(fit
            .partitioning
            .equivalent(&Partitioning::from_labels(&[0, 0, 1, 1]).unwrap()));
        assert_eq!(fit.loss, 0.0);
        let fit = kmeans_fit(&pts, &KMeansConfig::new(1, 1), &Divergence::Euclidean).unwrap();
        assert!((fit.loss - 4.0).abs() < 1e-12);
        let fit = kmeans_fit(&pts, &KMeansConfig::new(4, 1), &Divergence::Euclidean).unwrap();
        assert_eq!(fit.partitioning.k(), 4);
        assert_eq!(fit.loss, 0.0);
    }

    #[test]
    fn fit_errors() {
        let pts = Points::from_incidence(&e0());
        assert!(kmeans_fit(&pts, &KMeansConfig::new(5, 1), &Divergence::Euclidean).is_err());
        let w = Divergence::Weighted(vec![1.0, 0.0, 1.0, 1.0]);
        assert!(kmeans_fit(&pts, &KMeansConfig::new(2, 1), &w).is_err());
        let w = Divergence::Weighted(vec![1.0; 3]);
        assert!(kmeans_fit(&pts, &KMeansConfig::new(2, 1), &w).is_err());
        let bad = KMeansConfig {
            restarts: 0,
            ..KMeansConfig::new(2, 1)
        };
        assert!(kmeans_fit(&pts, &bad, &Divergence::Euclidean).is_err());
    }

    #[test]
    fn loss_examples() {
        let h = e0();
        let two = Partitioning::from_labels(&[0, 0, 1, 1]).unwrap();
        assert_eq!(kmeans_loss(&h, &two).unwrap(), 0.0);
        let one = Partitioning::from_labels(&[0, 0, 0, 0]).unwrap();
        assert_eq!(kmeans_loss(&h, &one).unwrap(), 4.0);
        assert_eq!(kmeans_loss(&h, &Partitioning::singletons(4)).unwrap(), 0.0);
    }

    #[test]
    fn kl_and_weighted_recover_separable_groups() {
        let h = h_of(&[&[0, 0, 0, 1, 1, 1], &[0, 0, 0, 1, 1, 1], &[2, 2, 2, 0, 0, 1]]);
        let pts = Points::from_incidence(&h);
        let target = Partitioning::from_labels(&[0, 0, 0, 1, 1, 1]).unwrap();
        let kl = Divergence::KullbackLeibler { eps: DEFAULT_KL_EPS };
        let fit = kmeans_fit(&pts, &KMeansConfig::new(2, 3), &kl).unwrap();
        assert!(fit.partitioning.equivalent(&target));
        let w = Divergence::Weighted(vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        let fit = kmeans_fit(&pts, &KMeansConfig::new(2, 3), &w).unwrap();
        assert!(fit.partitioning.equivalent(&target));
    }

    #[test]
    fn kl_rejects_empty_blocks() {
        let m = DenseMatrix::new(2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let kl = Divergence::KullbackLeibler { eps: 1e-6 };
        assert!(kmeans_fit(&Points::dense(&m), &KMeansConfig::new(1, 0), &kl).is_err());
    }

    #[test]
    fn kl_divergence_matches_direct_formula() {
        let h = h_of(&[&[0, 0, 1, 2], &[0, 1, 1, 1]]);
        let pts = Points::from_incidence(&h);
        let eps = 0.01;
        let engine = Engine::new(&pts, &Divergence::KullbackLeibler { eps }).unwrap();
        let mu = engine.update(&[0, 0, 1, 1], 2);
        let dense = h.to_dense();
        let blocks = h.blocks();
        for i in 0..4 {
            for c in 0..2 {
                let mut direct = 0.0;
                for b in &blocks {
                    for f in b.clone() {
                        let x = (1.0 - eps) * dense[i][f] as f64 + eps / b.len() as f64;
                        direct += x * (x / mu[c][f]).ln();
                    }
                }
                let fast = engine.divergence(i, &mu[c], &engine.cache(&mu[c]));
                assert!((fast - direct).abs() < 1e-12, "{fast} vs {direct}");
            }
        }
    }

    #[test]
    fn repair_takes_farthest_point() {
        let mut labels = vec![0, 0, 0, 1];
        repair_empty(&mut labels, &[0.1, 0.9, 0.9, 0.0], 3);
        assert_eq!(labels, vec![0, 2, 0, 1]);
    }

    #[test]
    fn bisecting_examples() {
        let h = e0();
        let cfg = KMeansConfig::new(2, 7);
        let r = bisecting_fit(&h, 2, &cfg).unwrap();
        assert!(r
            .fit
            .partitioning
            .equivalent(&Partitioning::from_labels(&[0, 0, 1, 1]).unwrap()));
        assert_eq!(r.splits.len(), 1);
        assert!((r.splits[0].delta - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(density_score(&h, &r.fit.partitioning).unwrap(), 1.0);

        let r = bisecting_fit(&h, 4, &cfg).unwrap();
        assert_eq!(r.fit.partitioning.k(), 4);
        assert_eq!(density_score(&h, &r.fit.partitioning).unwrap(), 0.0);
        assert!(bisecting_fit(&h, 5, &cfg).is_err());
        assert!(bisecting_fit(&h, 1, &cfg).is_err());
    }

    #[test]
    fn base_range_bounds() {
        assert_eq!(base_k_range(10_000, 2).unwrap(), (2, 100));
        assert_eq!(base_k_range(100, 2).unwrap(), (2, 10));
        assert_eq!(base_k_range(214, 6).unwrap(), (6, 14));
        assert!(base_k_range(100, 11).is_err());
    }
}
