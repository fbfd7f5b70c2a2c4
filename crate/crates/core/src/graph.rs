//! Balanced k-way graph partitioning (multilevel: heavy-edge matching,
//! greedy region growing, boundary refinement).
//!
//! Part sizes are counted in original vertices. With `ideal = ceil(V / k)`
//! every part holds at most `floor(balance_factor * ideal)` vertices.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_BALANCE_FACTOR: f64 = 1.1;

const INITIAL_TRIALS: usize = 8;
const MAX_REFINE_PASSES: usize = 10;
const FM_STALL_LIMIT: usize = 50;
const SWAP_CANDIDATES: usize = 16;
const MAX_SWAPS: usize = 64;

/// Undirected graph with positive edge weights and no self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(Error::validation(format!("edge ({u},{v}) outside {n} vertices")));
            }
            if u == v {
                return Err(Error::validation(format!("self-loop on vertex {u}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::validation(format!("edge ({u},{v}) has weight {w}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::validation(format!("duplicate edge ({u},{v})")));
            }
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for a in adj.iter_mut() {
            a.sort_by_key(|e| e.0);
        }
        Ok(Self { n, edges, adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn edge_cut(&self, labels: &[usize]) -> f64 {
        self.edges
            .iter()
            .filter(|&&(u, v, _)| labels[u] != labels[v])
            .map(|e| e.2)
            .sum()
    }

    /// Parses `"V E"` followed by `E` lines of `"u v w"`.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let bad = |line: usize, msg: &str| Error::validation(format!("edge list line {}: {msg}", line + 1));
        let (hl, header) = lines.next().ok_or_else(|| bad(0, "missing header"))?;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(hl, "bad vertex count"))?;
        let e: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(hl, "bad edge count"))?;
        let mut edges = Vec::with_capacity(e);
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad(ln, "expected `u v w`"));
            }
            let u = f[0].parse().map_err(|_| bad(ln, "bad vertex"))?;
            let v = f[1].parse().map_err(|_| bad(ln, "bad vertex"))?;
            let w = f[2].parse().map_err(|_| bad(ln, "bad weight"))?;
            edges.push((u, v, w));
        }
        if edges.len() != e {
            return Err(bad(hl, &format!("header announces {e} edges, found {}", edges.len())));
        }
        Self::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for (u, v, w) in &self.edges {
            writeln!(s, "{u} {v} {w}").unwrap();
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionResult {
    pub labels: Vec<usize>,
    pub edge_cut: f64,
    /// Largest part size over `ceil(V / k)`.
    pub balance: f64,
}

/// Largest allowed part size.
pub fn max_part_size(n: usize, k: usize, balance_factor: f64) -> usize {
    let ideal = n.div_ceil(k);
    ((balance_factor * ideal as f64).floor() as usize).max(ideal)
}

/// Working graph of one level: CSR adjacency plus vertex weights.
#[derive(Clone, Debug)]
struct Level {
    xadj: Vec<usize>,
    adjncy: Vec<usize>,
    adjwgt: Vec<f64>,
    vwgt: Vec<usize>,
}

impl Level {
    fn n(&self) -> usize {
        self.vwgt.len()
    }

    fn nbrs(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.xadj[v]..self.xadj[v + 1];
        self.adjncy[r.clone()]
            .iter()
            .copied()
            .zip(self.adjwgt[r].iter().copied())
    }

    fn from_subgraph(g: &WeightedGraph, vertices: &[usize]) -> Self {
        let mut local = vec![usize::MAX; g.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut xadj = vec![0];
        let mut adjncy = Vec::new();
        let mut adjwgt = Vec::new();
        for &v in vertices {
            for &(u, w) in g.neighbors(v) {
                if local[u] != usize::MAX {
                    adjncy.push(local[u]);
                    adjwgt.push(w);
                }
            }
            xadj.push(adjncy.len());
        }
        Self {
            xadj,
            adjncy,
            adjwgt,
            vwgt: vec![1; vertices.len()],
        }
    }

    fn cut(&self, labels: &[usize]) -> f64 {
        let mut c = 0.0;
        for v in 0..self.n() {
            for (u, w) in self.nbrs(v) {
                if u > v && labels[u] != labels[v] {
                    c += w;
                }
            }
        }
        c
    }

    /// Heavy-edge matching; returns the coarse level and the fine-to-coarse map.
    fn coarsen(&self, max_vwgt: usize, rng: &mut ChaCha8Rng) -> (Level, Vec<usize>) {
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut mate = vec![usize::MAX; n];
        for &v in &order {
            if mate[v] != usize::MAX {
                continue;
            }
            let mut best: Option<(f64, usize)> = None;
            for (u, w) in self.nbrs(v) {
                if mate[u] != usize::MAX || self.vwgt[u] + self.vwgt[v] > max_vwgt {
                    continue;
                }
                if best.map_or(true, |(bw, bu)| w > bw || (w == bw && u < bu)) {
                    best = Some((w, u));
                }
            }
            match best {
                Some((_, u)) => {
                    mate[v] = u;
                    mate[u] = v;
                }
                None => mate[v] = v,
            }
        }
        let mut map = vec![usize::MAX; n];
        let mut cn = 0;
        for v in 0..n {
            if map[v] == usize::MAX {
                map[v] = cn;
                map[mate[v]] = cn;
                cn += 1;
            }
        }
        let mut vwgt = vec![0; cn];
        for v in 0..n {
            vwgt[map[v]] += self.vwgt[v];
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); cn];
        for v in 0..n {
            members[map[v]].push(v);
        }
        let mut xadj = vec![0];
        let mut adjncy = Vec::new();
        let mut adjwgt = Vec::new();
        let mut slot = vec![usize::MAX; cn];
        for (c, ms) in members.iter().enumerate() {
            let start = adjncy.len();
            for &v in ms {
                for (u, w) in self.nbrs(v) {
                    let cu = map[u];
                    if cu == c {
                        continue;
                    }
                    if slot[cu] == usize::MAX || slot[cu] < start {
                        slot[cu] = adjncy.len();
                        adjncy.push(cu);
                        adjwgt.push(w);
                    } else {
                        adjwgt[slot[cu]] += w;
                    }
                }
            }
            xadj.push(adjncy.len());
        }
        (
            Level {
                xadj,
                adjncy,
                adjwgt,
                vwgt,
            },
            map,
        )
    }
}

/// Mutable partition state of one level.
struct State<'a> {
    g: &'a Level,
    k: usize,
    max_part: usize,
    labels: Vec<usize>,
    weight: Vec<usize>,
    count: Vec<usize>,
    /// Parts allowed to end up empty (they are refilled with isolated vertices).
    empty_budget: usize,
    empty: usize,
}

impl<'a> State<'a> {
    fn new(g: &'a Level, k: usize, max_part: usize, empty_budget: usize, labels: Vec<usize>) -> Self {
        let mut weight = vec![0; k];
        let mut count = vec![0; k];
        for (v, &l) in labels.iter().enumerate() {
            weight[l] += g.vwgt[v];
            count[l] += 1;
        }
        Self {
            g,
            k,
            max_part,
            labels,
            empty: count.iter().filter(|&&c| c == 0).count(),
            weight,
            count,
            empty_budget,
        }
    }

    fn connectivity(&self, v: usize) -> Vec<f64> {
        let mut conn = vec![0.0; self.k];
        for (u, w) in self.g.nbrs(v) {
            conn[self.labels[u]] += w;
        }
        conn
    }

    fn can_move(&self, v: usize, to: usize) -> bool {
        let from = self.labels[v];
        to != from
            && (self.count[from] > 1 || self.empty < self.empty_budget)
            && self.weight[to] + self.g.vwgt[v] <= self.max_part
    }

    fn apply(&mut self, v: usize, to: usize) {
        let from = self.labels[v];
        self.weight[from] -= self.g.vwgt[v];
        self.count[from] -= 1;
        if self.count[from] == 0 {
            self.empty += 1;
        }
        if self.count[to] == 0 {
            self.empty -= 1;
        }
        self.weight[to] += self.g.vwgt[v];
        self.count[to] += 1;
        self.labels[v] = to;
    }

    /// Best feasible move of `v` to a part it is connected to.
    fn best_move(&self, v: usize) -> Option<(f64, usize)> {
        let conn = self.connectivity(v);
        let own = conn[self.labels[v]];
        let mut best: Option<(f64, usize)> = None;
        for to in 0..self.k {
            if conn[to] <= 0.0 || !self.can_move(v, to) {
                continue;
            }
            let gain = conn[to] - own;
            if best.map_or(true, |(g, _)| gain > g) {
                best = Some((gain, to));
            }
        }
        best
    }

    /// Moves vertices out of overweight parts, cheapest cut increase first.
    fn rebalance(&mut self) {
        while let Some(over) = (0..self.k).find(|&p| self.weight[p] > self.max_part) {
            let mut best: Option<(f64, usize, usize)> = None;
            for v in 0..self.g.n() {
                if self.labels[v] != over {
                    continue;
                }
                let conn = self.connectivity(v);
                for to in 0..self.k {
                    if !self.can_move(v, to) {
                        continue;
                    }
                    let gain = conn[to] - conn[over];
                    if best.map_or(true, |(g, _, _)| gain > g) {
                        best = Some((gain, v, to));
                    }
                }
            }
            match best {
                Some((_, v, to)) => self.apply(v, to),
                None => break,
            }
        }
    }

    /// One Fiduccia-Mattheyses style pass with rollback to the best prefix.
    fn fm_pass(&mut self) -> bool {
        #[derive(PartialEq)]
        struct Entry(f64, usize, usize);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, o: &Self) -> Ordering {
                self.0
                    .total_cmp(&o.0)
                    .then_with(|| o.1.cmp(&self.1))
                    .then_with(|| o.2.cmp(&self.2))
            }
        }
        let n = self.g.n();
        let mut heap = BinaryHeap::new();
        for v in 0..n {
            if let Some((g, to)) = self.best_move(v) {
                heap.push(Entry(g, v, to));
            }
        }
        let mut moved = vec![false; n];
        let mut history: Vec<(usize, usize)> = Vec::new();
        let (mut delta, mut best_delta, mut best_len) = (0.0, 0.0, 0);
        let mut stall = 0;
        while let Some(Entry(gain, v, to)) = heap.pop() {
            if moved[v] {
                continue;
            }
            match self.best_move(v) {
                Some((g, t)) if g == gain && t == to => {}
                Some((g, t)) => {
                    heap.push(Entry(g, v, t));
                    continue;
                }
                None => continue,
            }
            let from = self.labels[v];
            self.apply(v, to);
            moved[v] = true;
            history.push((v, from));
            delta -= gain;
            if delta < best_delta - 1e-12 {
                best_delta = delta;
                best_len = history.len();
                stall = 0;
            } else {
                stall += 1;
                if stall > FM_STALL_LIMIT {
                    break;
                }
            }
            for (u, _) in self.g.nbrs(v) {
                if !moved[u] {
                    if let Some((g, t)) = self.best_move(u) {
                        heap.push(Entry(g, u, t));
                    }
                }
            }
        }
        for &(v, from) in history[best_len..].iter().rev() {
            self.apply(v, from);
        }
        best_len > 0
    }

    /// Best-gain pairwise swaps between parts; useful when balance is tight.
    fn swap_pass(&mut self) -> bool {
        let n = self.g.n();
        let mut improved = false;
        for _ in 0..MAX_SWAPS {
            // per (from, to): best few single-move gains
            let mut cands: Vec<Vec<(f64, usize)>> = vec![Vec::new(); self.k * self.k];
            for v in 0..n {
                let conn = self.connectivity(v);
                let from = self.labels[v];
                for to in 0..self.k {
                    if to != from && conn[to] > 0.0 {
                        cands[from * self.k + to].push((conn[to] - conn[from], v));
                    }
                }
            }
            for c in cands.iter_mut() {
                c.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                c.truncate(SWAP_CANDIDATES);
            }
            let mut best: Option<(f64, usize, usize)> = None;
            for a in 0..self.k {
                for b in (a + 1)..self.k {
                    for &(gu, u) in &cands[a * self.k + b] {
                        for &(gv, v) in &cands[b * self.k + a] {
                            let (wu, wv) = (self.g.vwgt[u], self.g.vwgt[v]);
                            if self.weight[a] - wu + wv > self.max_part || self.weight[b] - wv + wu > self.max_part {
                                continue;
                            }
                            let shared: f64 = self.g.nbrs(u).filter(|e| e.0 == v).map(|e| e.1).sum();
                            let gain = gu + gv - 2.0 * shared;
                            if gain > 1e-12 && best.map_or(true, |(g, _, _)| gain > g) {
                                best = Some((gain, u, v));
                            }
                        }
                    }
                }
            }
            match best {
                Some((_, u, v)) => {
                    let (a, b) = (self.labels[u], self.labels[v]);
                    self.labels[u] = b;
                    self.labels[v] = a;
                    self.weight[a] = self.weight[a] - self.g.vwgt[u] + self.g.vwgt[v];
                    self.weight[b] = self.weight[b] - self.g.vwgt[v] + self.g.vwgt[u];
                    improved = true;
                }
                None => break,
            }
        }
        improved
    }

    fn refine(&mut self) {
        self.rebalance();
        for _ in 0..MAX_REFINE_PASSES {
            let moved = self.fm_pass();
            let swapped = self.swap_pass();
            if !moved && !swapped {
                break;
            }
        }
    }
}

/// Greedy graph growing: each part grows from a random seed by absorbing the
/// most strongly connected unassigned vertex until it reaches its share.
fn grow(g: &Level, k: usize, max_part: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.n();
    let mut labels = vec![usize::MAX; n];
    let mut remaining_weight: usize = g.vwgt.iter().sum();
    let mut unassigned = n;
    for part in 0..k - 1 {
        let parts_left = k - part;
        let target = remaining_weight.div_ceil(parts_left).min(max_part);
        let free: Vec<usize> = (0..n).filter(|&v| labels[v] == usize::MAX).collect();
        let mut conn = vec![0.0; n];
        let mut weight = 0;
        let mut next = Some(free[rng.gen_range(0..free.len())]);
        while let Some(v) = next {
            labels[v] = part;
            weight += g.vwgt[v];
            unassigned -= 1;
            for (u, w) in g.nbrs(v) {
                conn[u] += w;
            }
            if weight >= target || unassigned <= parts_left - 1 {
                break;
            }
            let mut best: Option<(f64, usize)> = None;
            for u in 0..n {
                if labels[u] != usize::MAX || weight + g.vwgt[u] > max_part {
                    continue;
                }
                if best.map_or(true, |(c, _)| conn[u] > c) {
                    best = Some((conn[u], u));
                }
            }
            next = best.map(|b| b.1);
        }
        remaining_weight -= weight;
    }
    for l in labels.iter_mut() {
        if *l == usize::MAX {
            *l = k - 1;
        }
    }
    labels
}

fn partition_level(g0: Level, k: usize, max_part: usize, empty_budget: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let threshold = (4 * k).max(64);
    let max_vwgt = (max_part / 2).max(1);
    let mut levels = vec![g0];
    let mut maps: Vec<Vec<usize>> = Vec::new();
    while levels.last().unwrap().n() > threshold {
        let fine = levels.last().unwrap();
        let (coarse, map) = fine.coarsen(max_vwgt, rng);
        if coarse.n() < k || coarse.n() as f64 > 0.95 * fine.n() as f64 {
            break;
        }
        levels.push(coarse);
        maps.push(map);
    }
    let coarsest = levels.last().unwrap();
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for _ in 0..INITIAL_TRIALS {
        let mut st = State::new(coarsest, k, max_part, empty_budget, grow(coarsest, k, max_part, rng));
        st.refine();
        let over = st.weight.iter().map(|&w| w.saturating_sub(max_part)).sum::<usize>();
        let cut = coarsest.cut(&st.labels);
        if best
            .as_ref()
            .map_or(true, |(c, o, _)| over < *o || (over == *o && cut < *c))
        {
            best = Some((cut, over, st.labels));
        }
    }
    let mut labels = best.unwrap().2;
    for lvl in (0..maps.len()).rev() {
        let fine = &levels[lvl];
        let projected: Vec<usize> = maps[lvl].iter().map(|&c| labels[c]).collect();
        let mut st = State::new(fine, k, max_part, empty_budget, projected);
        st.refine();
        labels = st.labels;
    }
    labels
}

/// Balanced k-way partition minimising the total weight of cut edges.
pub fn partition_graph(g: &WeightedGraph, k: usize, balance_factor: f64, seed: u64) -> Result<PartitionResult> {
    let n = g.vertex_count();
    if k < 2 {
        return Err(Error::Config("k must be at least 2".into()));
    }
    if n < k {
        return Err(Error::validation(format!("cannot split {n} vertices into {k} parts")));
    }
    if !(balance_factor >= 1.0) {
        return Err(Error::Config("balance factor must be >= 1".into()));
    }
    let max_part = max_part_size(n, k, balance_factor);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let connected: Vec<usize> = (0..n).filter(|&v| !g.neighbors(v).is_empty()).collect();
    let isolated: Vec<usize> = (0..n).filter(|&v| g.neighbors(v).is_empty()).collect();
    let mut labels = vec![0; n];
    if !isolated.is_empty() && connected.len() >= k {
        let level = Level::from_subgraph(g, &connected);
        let sub = partition_level(level, k, max_part, isolated.len(), &mut rng);
        let mut sizes = vec![0; k];
        for (i, &v) in connected.iter().enumerate() {
            labels[v] = sub[i];
            sizes[sub[i]] += 1;
        }
        for &v in &isolated {
            let smallest = (0..k).min_by_key(|&p| (sizes[p], p)).unwrap();
            labels[v] = smallest;
            sizes[smallest] += 1;
        }
    } else {
        let all: Vec<usize> = (0..n).collect();
        labels = partition_level(Level::from_subgraph(g, &all), k, max_part, 0, &mut rng);
    }
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let ideal = n.div_ceil(k);
    Ok(PartitionResult {
        edge_cut: g.edge_cut(&labels),
        balance: *sizes.iter().max().unwrap() as f64 / ideal as f64,
        labels,
    })
}
