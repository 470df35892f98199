mod common;

use overlay_core::graph::undirected_view;
use overlay_core::tree::{
    bfs_flood, bfs_lowest_id, euler_tour, list_rank_and_prefix, subtree_aggregates, well_formed_tree, AggOp,
    RootedForest,
};
use overlay_core::{KnowledgeGraph, NodeId};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Random recursive tree with shuffled ids, rooted at `perm[0]`.
fn random_tree(n: usize, seed: u64) -> (RootedForest, NodeId) {
    let mut r = rng(seed);
    let mut perm: Vec<NodeId> = (0..n).collect();
    perm.shuffle(&mut r);
    let mut parent = vec![None; n];
    for i in 1..n {
        parent[perm[i]] = Some(perm[r.random_range(0..i)]);
    }
    (RootedForest::from_parents(parent).unwrap(), perm[0])
}

fn check_well_formed(input: &RootedForest, out: &RootedForest, wf_c: f64) -> Result<(), TestCaseError> {
    let n = input.n();
    prop_assert_eq!(out.n(), n);
    prop_assert!(out.max_children() <= 2);
    prop_assert!(out.max_depth() as f64 <= (wf_c * (n.max(2) as f64).log2()).max(1.0));
    // Same node set per tree.
    prop_assert_eq!(common::canonical(&out.root_of()), common::canonical(&input.root_of()));
    Ok(())
}

#[test]
fn bfs_depths_equal_oracle_distances() {
    for seed in 0..20 {
        let n = 30 + seed as usize * 7;
        let g = common::connected_graph(n, n / 2, seed);
        let m = undirected_view(&g);
        let t = bfs_lowest_id(&m).unwrap();
        assert_eq!(t.root(), 0);
        let dist = common::bfs_dist(&common::graph_adjacency(&g), 0);
        for v in 0..n {
            assert_eq!(Some(t.depth(v)), dist[v], "seed {seed}, node {v}");
            if let Some(p) = t.parent(v) {
                assert!(m.multiplicity(v, p) > 0);
                assert_eq!(t.depth(p) + 1, t.depth(v));
            }
        }
    }
}

#[test]
fn bfs_forest_roots_are_component_minima() {
    let g = common::mixed_disconnected(120, 4);
    let out = bfs_flood(&undirected_view(&g), 8).unwrap();
    let edges: Vec<_> = g.edges().collect();
    assert_eq!(out.forest.root_of(), common::uf_labels(120, &edges));
}

#[test]
fn well_formed_path_of_64() {
    let g = overlay_core::topology::generate(&overlay_core::topology::Topology::Path, 64, 0).unwrap();
    let t = bfs_lowest_id(&undirected_view(&g)).unwrap().into_forest();
    let wf = well_formed_tree(&t);
    let c = overlay_core::profile::Profile::desk().wf_c;
    assert!(wf.max_children() <= 2);
    assert!(wf.max_depth() as f64 <= c * 6.0, "depth {}", wf.max_depth());
}

#[test]
fn euler_labels_match_dfs_oracle_on_random_trees() {
    for seed in 0..10 {
        let (t, root) = random_tree(100, seed);
        let ring = euler_tour(&t, root);
        let (label, nd) = common::dfs_labels(&common::children_of(t.parents()), root);
        assert_eq!(ring.label, label, "seed {seed}");
        assert_eq!(ring.nd, nd, "seed {seed}");
    }
}

#[test]
fn list_ranking_long_max_scan() {
    let mut r = rng(5);
    let n = 1000;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let values: Vec<i64> = (0..n).map(|_| r.random_range(-1000..1000)).collect();
    let mut succ = vec![None; n];
    for w in order.windows(2) {
        succ[w[0]] = Some(w[1]);
    }
    let lr = list_rank_and_prefix(&succ, &values, AggOp::Max);
    let mut acc = i64::MIN;
    for (i, &v) in order.iter().enumerate() {
        acc = acc.max(values[v]);
        assert_eq!((lr.rank[v], lr.prefix[v]), (i + 1, acc));
    }
}

/// Sequential low/high: extremes of labels over the subtree and the
/// non-tree neighbors of the subtree.
fn low_high_oracle(g: &KnowledgeGraph, parent: &[Option<NodeId>], label: &[usize]) -> (Vec<i64>, Vec<i64>) {
    fn go(v: NodeId, c: &[Vec<NodeId>], own: &[(i64, i64)], out: &mut [(i64, i64)]) -> (i64, i64) {
        let mut acc = own[v];
        for &w in &c[v] {
            let s = go(w, c, own, out);
            acc = (acc.0.min(s.0), acc.1.max(s.1));
        }
        out[v] = acc;
        acc
    }
    let n = g.n();
    let adj = common::graph_adjacency(g);
    let own: Vec<(i64, i64)> = (0..n)
        .map(|v| {
            let mut lo = label[v] as i64;
            let mut hi = lo;
            for &w in &adj[v] {
                if parent[v] != Some(w) && parent[w] != Some(v) {
                    lo = lo.min(label[w] as i64);
                    hi = hi.max(label[w] as i64);
                }
            }
            (lo, hi)
        })
        .collect();
    let children = common::children_of(parent);
    let root = (0..n).find(|&v| parent[v].is_none()).unwrap();
    let mut out = vec![(0, 0); n];
    go(root, &children, &own, &mut out);
    (out.iter().map(|x| x.0).collect(), out.iter().map(|x| x.1).collect())
}

#[test]
fn subtree_low_high_match_dfs_oracle() {
    for seed in 0..10 {
        let n = 80;
        let g = common::connected_graph(n, 60, seed);
        let t = bfs_lowest_id(&undirected_view(&g)).unwrap().into_forest();
        let parent = t.parents().to_vec();
        let ring = euler_tour(&t, 0);
        let (lo_o, hi_o) = low_high_oracle(&g, &parent, &ring.label);
        let adj = common::graph_adjacency(&g);
        let own = |pick: fn(i64, i64) -> i64| -> Vec<i64> {
            (0..n)
                .map(|v| {
                    adj[v]
                        .iter()
                        .filter(|&&w| parent[v] != Some(w) && parent[w] != Some(v))
                        .fold(ring.label[v] as i64, |a, &w| pick(a, ring.label[w] as i64))
                })
                .collect()
        };
        let low = subtree_aggregates(&t, 0, &own(i64::min), AggOp::Min);
        let high = subtree_aggregates(&t, 0, &own(i64::max), AggOp::Max);
        assert_eq!(low.subtree, lo_o, "seed {seed}");
        assert_eq!(high.subtree, hi_o, "seed {seed}");
        assert_eq!(low.nd, ring.nd);
        // A leaf without non-tree edges has low = high = its label.
        for v in 0..n {
            if t.children(v).is_empty() && adj[v].len() == 1 {
                assert_eq!((low.subtree[v], high.subtree[v]), (ring.label[v] as i64, ring.label[v] as i64));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn list_ranking_equals_scan(
        lists in proptest::collection::vec(proptest::collection::vec(-50i64..50, 1..30), 1..5),
        seed in any::<u64>(),
        op in prop_oneof![Just(AggOp::Sum), Just(AggOp::Min), Just(AggOp::Max)],
    ) {
        let n: usize = lists.iter().map(Vec::len).sum();
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng(seed));
        let mut succ = vec![None; n];
        let mut values = vec![0; n];
        let mut expect = vec![(0usize, 0i64); n];
        let mut next = 0;
        for list in &lists {
            let slots = &ids[next..next + list.len()];
            next += list.len();
            let mut acc = None;
            for (i, (&id, &x)) in slots.iter().zip(list).enumerate() {
                values[id] = x;
                if i + 1 < slots.len() {
                    succ[id] = Some(slots[i + 1]);
                }
                let a = acc.map_or(x, |a| op.apply(a, x));
                acc = Some(a);
                expect[id] = (i + 1, a);
            }
        }
        let lr = list_rank_and_prefix(&succ, &values, op);
        for id in 0..n {
            prop_assert_eq!((lr.rank[id], lr.prefix[id]), expect[id]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_tour_uses_each_edge_twice(n in 1usize..80, seed in any::<u64>()) {
        let (t, root) = random_tree(n, seed);
        let ring = euler_tour(&t, root);
        prop_assert_eq!(ring.stubs.len(), 2 * (n - 1));
        let mut count = std::collections::HashMap::new();
        for &(a, b) in &ring.stubs {
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
        prop_assert_eq!(count.len(), n - 1);
        prop_assert!(count.values().all(|&c| c == 2));
        for (v, p) in t.parents().iter().enumerate() {
            if let Some(p) = p {
                prop_assert_eq!(count.get(&(v.min(*p), v.max(*p))), Some(&2));
            }
        }
        // Descendants occupy the label segment of their ancestor.
        for v in 0..n {
            let mut u = Some(v);
            while let Some(a) = u {
                prop_assert!(ring.label[a] <= ring.label[v] && ring.label[v] < ring.label[a] + ring.nd[a]);
                u = t.parent(a);
            }
        }
    }

    #[test]
    fn well_formed_tree_invariants(n in 1usize..200, seed in any::<u64>(), star in any::<bool>()) {
        let t = if star {
            RootedForest::from_parents((0..n).map(|v| (v > 0).then_some(0)).collect()).unwrap()
        } else {
            random_tree(n, seed).0
        };
        let c = overlay_core::profile::Profile::desk().wf_c;
        check_well_formed(&t, &well_formed_tree(&t), c)?;
    }

    #[test]
    fn well_formed_forest_keeps_trees_apart(n in 2usize..150, seed in any::<u64>()) {
        let g = common::mixed_disconnected(n, seed);
        let f = bfs_flood(&undirected_view(&g), seed).unwrap().forest;
        let c = overlay_core::profile::Profile::desk().wf_c;
        check_well_formed(&f, &well_formed_tree(&f), c)?;
    }
}
