mod common;

use overlay_core::graph::{is_benign, make_benign, undirected_view, BenignParams};
use overlay_core::{KnowledgeGraph, MultiGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn random_digraph(n: usize, m: usize, seed: u64) -> KnowledgeGraph {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<_> = (0..m).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
    KnowledgeGraph::from_edges(n, &edges).unwrap()
}

fn slot_symmetric(g: &MultiGraph) -> bool {
    (0..g.n()).all(|u| {
        g.neighbors(u)
            .all(|(v, m)| u == v || g.multiplicity(v, u) == m)
    })
}

#[test]
fn undirected_view_components_match_union_find() {
    for seed in 0..10 {
        let g = random_digraph(50, 40, seed);
        let view = undirected_view(&g);
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(common::multigraph_labels(&view), common::uf_labels(50, &edges), "seed {seed}");
    }
}

#[test]
fn benign_min_cut_reaches_lambda() {
    for seed in 0..10 {
        let n = 40;
        let g = common::connected_graph(n, 10, seed);
        let d = undirected_view(&g).max_nonloop_degree();
        let params = BenignParams::desk(n, d);
        let b = make_benign(&g, &params).unwrap();
        let cut = overlay_core::metrics::min_cut(&b).unwrap().value;
        assert!(cut >= params.lambda, "seed {seed}: cut {cut} < {}", params.lambda);
    }
}

#[test]
fn stoer_wagner_matches_enumeration_on_benign_graphs() {
    for seed in 0..10 {
        let n = 12;
        let g = random_digraph(n, 14, seed);
        let d = undirected_view(&g).max_nonloop_degree();
        let params = BenignParams::desk(n, d);
        let b = make_benign(&g, &params).unwrap();
        let sw = overlay_core::metrics::min_cut(&b).map(|c| c.value).unwrap_or(0);
        assert_eq!(sw, common::brute_min_cut(&b), "seed {seed}");
    }
}

#[test]
fn hundred_connected_inputs_are_benign() {
    for seed in 0..100u64 {
        let n = 8 + (seed as usize * 37) % 249;
        let g = common::connected_graph(n, n / 4, seed);
        let d = undirected_view(&g).max_nonloop_degree();
        let params = BenignParams::desk(n, d);
        let b = make_benign(&g, &params).unwrap();
        let report = is_benign(&b, params.delta, params.lambda);
        assert!(report.all(), "seed {seed}, n {n}: {report:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn make_benign_structure(n in 1usize..40, m in 0usize..80, seed in any::<u64>()) {
        let g = random_digraph(n, m, seed);
        let d = undirected_view(&g).max_nonloop_degree();
        let params = BenignParams::desk(n, d);
        let b = make_benign(&g, &params).unwrap();
        prop_assert!(b.is_regular(params.delta));
        prop_assert!(b.is_lazy(params.delta));
        prop_assert!(slot_symmetric(&b));
        prop_assert_eq!(b.total_slots(), n * params.delta);
        // Components survive the copy-then-pad step.
        let edges: Vec<_> = g.edges().collect();
        prop_assert_eq!(common::multigraph_labels(&b), common::uf_labels(n, &edges));
    }

    #[test]
    fn undirected_view_counts_each_direction(n in 1usize..30, m in 0usize..60, seed in any::<u64>()) {
        let g = random_digraph(n, m, seed);
        let view = undirected_view(&g);
        prop_assert!(slot_symmetric(&view));
        for u in 0..n {
            for v in u + 1..n {
                let directed = g.edges().filter(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u)).count();
                prop_assert_eq!(view.multiplicity(u, v), directed);
            }
        }
    }

    #[test]
    fn multigraph_text_round_trip(n in 1usize..20, m in 0usize..40, seed in any::<u64>()) {
        let g = random_digraph(n, m, seed);
        let b = make_benign(&g, &BenignParams::desk(n, undirected_view(&g).max_nonloop_degree())).unwrap();
        prop_assert_eq!(MultiGraph::from_text(&b.to_text()).unwrap(), b);
        prop_assert_eq!(KnowledgeGraph::from_text(&g.to_text()).unwrap(), g);
    }
}
