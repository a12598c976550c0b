use liabnet::netstats::{edge_density, global_clustering, UndirectedGraph};
use liabnet::{build_network, NodeRecord};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_graph() -> impl Strategy<Value = UndirectedGraph> {
    (2usize..25).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..80)
            .prop_map(move |e| UndirectedGraph::from_edges(n, e))
    })
}

proptest! {
    #[test]
    fn coefficients_are_in_unit_interval(g in arb_graph()) {
        let c = g.local_clustering();
        prop_assert!(c.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert!((0.0..=1.0).contains(&g.mean_local_clustering()));
        prop_assert!((0.0..=1.0).contains(&g.transitivity()));
        for (u, n) in c.iter().zip(0..g.node_count()) {
            if g.neighbours(n).len() < 2 {
                prop_assert_eq!(*u, 0.0);
            }
        }
    }

    #[test]
    fn isolated_nodes_never_raise_clustering(g in arb_graph(), extra in 1usize..10) {
        let h = g.with_isolated_nodes(extra);
        prop_assert!(h.mean_local_clustering() <= g.mean_local_clustering() + 1e-15);
        prop_assert_eq!(h.transitivity(), g.transitivity());
        prop_assert_eq!(h.edge_count(), g.edge_count());
    }

    #[test]
    fn collapsing_is_idempotent(g in arb_graph()) {
        let again = UndirectedGraph::from_edges(g.node_count(), g.edges());
        prop_assert_eq!(again.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        prop_assert!(g.edges().all(|(u, v)| u < v));
    }

    #[test]
    fn trees_have_no_triangles(parents in prop::collection::vec(any::<prop::sample::Index>(), 1..40)) {
        let n = parents.len() + 1;
        let edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(k, p)| (k + 1, p.index(k + 1))).collect();
        let g = UndirectedGraph::from_edges(n, edges);
        prop_assert_eq!(g.mean_local_clustering(), 0.0);
        prop_assert_eq!(g.transitivity(), 0.0);
    }

    #[test]
    fn complete_graphs_are_fully_clustered(n in 3usize..20) {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        let g = UndirectedGraph::from_edges(n, edges);
        prop_assert!((g.mean_local_clustering() - 1.0).abs() < 1e-15);
        prop_assert!((g.transitivity() - 1.0).abs() < 1e-15);
        prop_assert!((g.density() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn reciprocal_links_collapse_to_one_edge() {
    let recs = (0..3)
        .map(|k| NodeRecord::bank(format!("b{k}"), 1.0, 1.0))
        .collect::<Vec<_>>();
    let net = build_network(recs, [(0, 1, 2.0), (1, 0, 3.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
    let r = global_clustering(&net);
    assert_eq!(r.undirected_edge_count, 3);
    assert_eq!(r.directed_edge_count, 4);
    assert_eq!(r.mean_local_clustering, 1.0);
    assert_eq!(r.random_baseline, 1.0);
    assert!((r.random_baseline_directed - 4.0 / 6.0).abs() < 1e-15);
}

#[test]
fn gnm_has_requested_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = UndirectedGraph::gnm(200, 1500, &mut rng);
    assert_eq!(g.edge_count(), 1500);
    assert!((g.density() - edge_density(200, 1500)).abs() < 1e-15);
}
