use eac_core::graph::{max_part_size, partition_graph, WeightedGraph};
use proptest::prelude::*;

fn graph(max_v: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_v)
        .prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            let m = pairs.len();
            (
                Just(n),
                Just(pairs),
                prop::collection::vec(prop::option::weighted(0.35, 1u8..6), m),
            )
        })
        .prop_map(|(n, pairs, ws)| {
            let edges = pairs
                .into_iter()
                .zip(ws)
                .filter_map(|((i, j), w)| w.map(|w| (i, j, w as f64)))
                .collect();
            WeightedGraph::new(n, edges).unwrap()
        })
}

proptest! {
    #[test]
    fn balance_and_nonempty_parts(g in graph(60), k in 2usize..6, bf in 1.0f64..1.5, seed in any::<u64>()) {
        prop_assume!(g.vertex_count() >= k);
        let r = partition_graph(&g, k, bf, seed).unwrap();
        let mut sizes = vec![0; k];
        r.labels.iter().for_each(|&l| sizes[l] += 1);
        prop_assert!(sizes.iter().all(|&s| s > 0));
        prop_assert!(*sizes.iter().max().unwrap() <= max_part_size(g.vertex_count(), k, bf));
        prop_assert!(r.balance <= bf);
        prop_assert!(r.edge_cut <= g.total_weight() + 1e-9);
        prop_assert!((r.edge_cut - g.edge_cut(&r.labels)).abs() < 1e-9);
        prop_assert_eq!(partition_graph(&g, k, bf, seed).unwrap(), r);
    }

    #[test]
    fn separable_components_are_not_cut(sizes in prop::collection::vec(2usize..6, 2..5), seed in any::<u64>()) {
        // equal-size cliques, one per part
        let s = sizes[0];
        let k = sizes.len();
        let mut edges = Vec::new();
        for c in 0..k {
            for i in 0..s {
                for j in (i + 1)..s {
                    edges.push((c * s + i, c * s + j, 1.0));
                }
            }
        }
        let g = WeightedGraph::new(k * s, edges).unwrap();
        let r = partition_graph(&g, k, 1.0, seed).unwrap();
        prop_assert_eq!(r.edge_cut, 0.0);
    }
}
