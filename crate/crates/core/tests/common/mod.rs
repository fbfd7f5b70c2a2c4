#![allow(dead_code)]

use eac_core::{ClusterEnsemble, Partitioning};
use proptest::prelude::*;

/// Label vectors with up to `max_k` distinct values.
pub fn labels(n: usize, max_k: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max_k.min(n)).prop_flat_map(move |k| prop::collection::vec(0..k, n))
}

pub fn partitioning(n: usize, max_k: usize) -> impl Strategy<Value = Partitioning> {
    labels(n, max_k).prop_map(|l| Partitioning::from_labels(&l).unwrap())
}

pub fn ensemble(max_n: usize, max_p: usize, max_k: usize) -> impl Strategy<Value = ClusterEnsemble> {
    (2..=max_n, 1..=max_p).prop_flat_map(move |(n, p)| {
        prop::collection::vec(partitioning(n, max_k), p).prop_map(|ps| ClusterEnsemble::new(ps).unwrap())
    })
}

/// Co-association computed straight from the label vectors.
pub fn brute_coassociation(e: &ClusterEnsemble) -> Vec<Vec<f64>> {
    let n = e.n();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let same = e.partitionings().iter().filter(|pi| pi.label(i) == pi.label(j)).count();
            a[i][j] = same as f64 / e.p() as f64;
        }
    }
    a
}

pub fn brute_weight(a: &[Vec<f64>], c: &[usize]) -> f64 {
    let mut w = 0.0;
    for &i in c {
        for &j in c {
            if i != j {
                w += a[i][j];
            }
        }
    }
    w
}

pub fn brute_score(a: &[Vec<f64>], pi: &Partitioning) -> f64 {
    let n = pi.n() as f64;
    pi.clusters()
        .iter()
        .map(|c| {
            let s = c.len() as f64;
            if c.len() < 2 {
                0.0
            } else {
                s * brute_weight(a, c) / (s * (s - 1.0))
            }
        })
        .sum::<f64>()
        / n
}
