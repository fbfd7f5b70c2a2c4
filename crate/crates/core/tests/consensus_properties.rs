mod common;

use common::ensemble;
use eac_core::consensus::{hierarchical, run_consensus, sec_transform, Algorithm, ConsensusRequest, Linkage};
use eac_core::density::{
    cluster_weight_oracle, coassociation, density_score, inter_weight_oracle, CoAssocMatrix, DEFAULT_ORACLE_CAP,
};
use eac_core::{ClusterEnsemble, IncidenceMatrix, Partitioning};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_similarity(n: usize, rng: &mut ChaCha8Rng) -> CoAssocMatrix {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let x: f64 = rng.gen();
            v[i * n + j] = x;
            v[j * n + i] = x;
        }
    }
    CoAssocMatrix::from_dense(n, v).unwrap()
}

/// Agglomeration that recomputes every linkage value from the matrix.
fn naive_linkage(a: &CoAssocMatrix, linkage: Linkage, k: usize) -> Partitioning {
    let n = a.n();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() > k {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for x in 0..clusters.len() {
            for y in (x + 1)..clusters.len() {
                let sims: Vec<f64> = clusters[x]
                    .iter()
                    .flat_map(|&i| clusters[y].iter().map(move |&j| a.get(i, j)))
                    .collect();
                let s = match linkage {
                    Linkage::Single => sims.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    Linkage::Complete => sims.iter().copied().fold(f64::INFINITY, f64::min),
                    Linkage::Average => sims.iter().sum::<f64>() / sims.len() as f64,
                };
                if s > best.0 {
                    best = (s, x, y);
                }
            }
        }
        let merged = clusters.remove(best.2);
        clusters[best.1].extend(merged);
    }
    let mut labels = vec![0; n];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = c;
        }
    }
    Partitioning::new(labels, k).unwrap()
}

proptest! {
    #[test]
    fn linkages_match_naive_recomputation(seed in any::<u64>(), n in 3usize..16, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_similarity(n, &mut rng);
        for l in [Linkage::Single, Linkage::Average, Linkage::Complete] {
            let fast = hierarchical(&a, l, k.min(n)).unwrap().partitioning;
            prop_assert!(fast.equivalent(&naive_linkage(&a, l, k.min(n))), "{:?}", l);
        }
    }

    #[test]
    fn average_merge_combines_blocks(
        e in ensemble(30, 6, 5).prop_filter("n >= 4", |e| e.n() >= 4),
        cut in 1usize..29,
    ) {
        let h = IncidenceMatrix::from_ensemble(&e);
        let a = coassociation(&h, DEFAULT_ORACLE_CAP).unwrap();
        let n = e.n();
        let cut = 1 + cut % (n - 1);
        let x: Vec<usize> = (0..cut).collect();
        let y: Vec<usize> = (cut..n).collect();
        let all: Vec<usize> = (0..n).collect();
        let (sx, sy) = (x.len() as f64, y.len() as f64);
        let combined = (cluster_weight_oracle(&a, &x).unwrap()
            + cluster_weight_oracle(&a, &y).unwrap()
            + 2.0 * inter_weight_oracle(&a, &x, &y).unwrap())
            / ((sx + sy) * (sx + sy - 1.0));
        let mut direct = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    direct += a.get(i, j);
                }
            }
        }
        direct /= (n * (n - 1)) as f64;
        prop_assert!((combined - direct).abs() <= 1e-9);
        prop_assert!((cluster_weight_oracle(&a, &all).unwrap() / (n * (n - 1)) as f64 - direct).abs() <= 1e-9);
    }

    #[test]
    fn sec_weights_have_self_floor(e in ensemble(40, 8, 6)) {
        let h = IncidenceMatrix::from_ensemble(&e);
        let (_, w) = sec_transform(&h).unwrap();
        prop_assert!(w.iter().all(|&x| x >= h.p() as f64));
    }

    #[test]
    fn outputs_are_valid_and_reproducible(
        e in ensemble(24, 5, 5).prop_filter("n >= 4", |e| e.n() >= 4),
        seed in any::<u64>(),
    ) {
        for alg in Algorithm::all() {
            let req = ConsensusRequest::new(&e, 3, alg, seed);
            let fit = match run_consensus(&req) {
                Ok(f) => f,
                // mcla needs at least k_out clusters in the ensemble
                Err(_) if alg == Algorithm::Mcla && IncidenceMatrix::from_ensemble(&e).d() < 3 => continue,
                Err(err) => return Err(TestCaseError::fail(format!("{alg}: {err}"))),
            };
            prop_assert_eq!(fit.partitioning.n(), e.n());
            prop_assert!(fit.partitioning.k() <= 3);
            if alg != Algorithm::Mcla {
                prop_assert_eq!(fit.partitioning.k(), 3, "{}", alg);
            }
            prop_assert_eq!(run_consensus(&req).unwrap(), fit);
        }
    }
}

fn planted(n: usize, k: usize, p: usize, noise: f64, rng: &mut ChaCha8Rng) -> ClusterEnsemble {
    let parts = (0..p)
        .map(|_| {
            let kk = k + rng.gen_range(0..4);
            let l: Vec<usize> = (0..n)
                .map(|i| {
                    if rng.gen_bool(noise) {
                        rng.gen_range(0..kk)
                    } else {
                        i % k
                    }
                })
                .collect();
            Partitioning::from_labels(&l).unwrap()
        })
        .collect();
    ClusterEnsemble::new(parts).unwrap()
}

#[test]
fn kmeans_density_beats_the_others_in_most_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let trials = 12;
    let mut wins = 0;
    for t in 0..trials {
        let e = planted(80, 5, 10, 0.35, &mut rng);
        let h = IncidenceMatrix::from_ensemble(&e);
        let score = |alg| {
            let fit = run_consensus(&ConsensusRequest::new(&e, 5, alg, t)).unwrap();
            density_score(&h, &fit.partitioning).unwrap()
        };
        let km = score(Algorithm::EacKm);
        let others = Algorithm::all()
            .into_iter()
            .filter(|&a| a != Algorithm::EacKm)
            .map(score)
            .fold(f64::NEG_INFINITY, f64::max);
        if km >= others - 1e-12 {
            wins += 1;
        }
    }
    assert!(wins * 2 > trials, "k-means won {wins} of {trials}");
}
