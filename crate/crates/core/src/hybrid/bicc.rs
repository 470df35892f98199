//! Biconnected components from a spanning tree, DFS labels and subtree
//! aggregates: tree edges are the vertices of an auxiliary graph whose
//! connected components are the blocks.

use crate::error::PipelineError;
use crate::graph::{KnowledgeGraph, NodeId};
use crate::hybrid::components::connected_components;
use crate::hybrid::spanning::spanning_tree;
use crate::hybrid::HybridConfig;
use crate::rng::derive;
use crate::tree::{subtree_aggregates, AggOp};

#[derive(Debug, Clone)]
pub struct BiccOutcome {
    /// Undirected edges `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(NodeId, NodeId)>,
    /// Block of each edge, numbered by first appearance in `edges`.
    pub edge_component: Vec<usize>,
    pub count: usize,
    pub cut_vertices: Vec<NodeId>,
    pub bridges: Vec<(NodeId, NodeId)>,
    pub is_biconnected: bool,
    /// Spanning tree edges used for the labels.
    pub tree_edges: Vec<(NodeId, NodeId)>,
    /// First-visit labels (1-based) and descendant counts on that tree.
    pub label: Vec<usize>,
    pub nd: Vec<usize>,
    pub rounds: usize,
}

/// Edges `{x, y}` of the auxiliary graph whose vertex `v` stands for the
/// tree edge from `v` to its parent; the root is isolated.
pub fn auxiliary_edges(
    n: usize,
    edges: &[(NodeId, NodeId)],
    parent: &[Option<NodeId>],
    label: &[usize],
    nd: &[usize],
    low: &[i64],
    high: &[i64],
) -> Vec<(NodeId, NodeId)> {
    let is_tree = |a: NodeId, b: NodeId| parent[a] == Some(b) || parent[b] == Some(a);
    let mut aux = Vec::new();
    for &(a, b) in edges {
        if is_tree(a, b) {
            continue;
        }
        let (v, u) = if label[a] < label[b] { (a, b) } else { (b, a) };
        // Rule 1: `u` lies outside the subtree of `v`.
        if label[v] + nd[v] <= label[u] {
            aux.push((u, v));
        }
    }
    for w in 0..n {
        let Some(v) = parent[w] else { continue };
        if parent[v].is_none() {
            continue;
        }
        // Rule 2: some edge leaves the subtree of `w` past the subtree of `v`.
        let (lv, ndv) = (label[v] as i64, nd[v] as i64);
        if low[w] < lv || high[w] >= lv + ndv {
            aux.push((w, v));
        }
    }
    aux
}

/// Blocks, cut vertices and bridges of a connected graph.
pub fn biconnected_components(g: &KnowledgeGraph, cfg: &HybridConfig, seed: u64) -> Result<BiccOutcome, PipelineError> {
    let n = g.n();
    let st = spanning_tree(g, cfg, derive(seed, 1))?;
    let tree = &st.tree;
    let root = st.root;
    let parent: Vec<Option<NodeId>> = tree.parents().to_vec();
    let edges = g.simple_edges();
    let adj = g.simple_adjacency();

    // Labels come with the aggregates; the own label seeds both extremes.
    let probe = subtree_aggregates(tree, root, &vec![0; n], AggOp::Sum);
    let label = probe.label;
    let nd = probe.nd;
    let mut low0 = vec![0i64; n];
    let mut high0 = vec![0i64; n];
    for v in 0..n {
        let nontree = adj[v]
            .iter()
            .filter(|&&u| parent[v] != Some(u) && parent[u] != Some(v))
            .map(|&u| label[u] as i64);
        let own = label[v] as i64;
        low0[v] = nontree.clone().fold(own, i64::min);
        high0[v] = nontree.fold(own, i64::max);
    }
    let low = subtree_aggregates(tree, root, &low0, AggOp::Min);
    let high = subtree_aggregates(tree, root, &high0, AggOp::Max);

    let aux = auxiliary_edges(n, &edges, &parent, &label, &nd, &low.subtree, &high.subtree);
    let aux_graph = KnowledgeGraph::from_edges(n, &aux)?;
    let cc = connected_components(&aux_graph, cfg, derive(seed, 2))?;

    // Rule 3: a non-tree edge joins the block of its later endpoint.
    let raw: Vec<NodeId> = edges
        .iter()
        .map(|&(a, b)| {
            let owner = if parent[a] == Some(b) {
                a
            } else if parent[b] == Some(a) {
                b
            } else if label[a] > label[b] {
                a
            } else {
                b
            };
            cc.component[owner]
        })
        .collect();
    let mut renumber = std::collections::HashMap::new();
    let edge_component: Vec<usize> = raw
        .iter()
        .map(|&c| {
            let next = renumber.len();
            *renumber.entry(c).or_insert(next)
        })
        .collect();
    let count = renumber.len();

    let mut sizes = vec![0usize; count];
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (&(a, b), &c) in edges.iter().zip(&edge_component) {
        sizes[c] += 1;
        touching[a].push(c);
        touching[b].push(c);
    }
    let cut_vertices = (0..n)
        .filter(|&v| {
            let t = &mut touching[v];
            t.sort_unstable();
            t.dedup();
            t.len() >= 2
        })
        .collect::<Vec<_>>();
    let bridges = edges
        .iter()
        .zip(&edge_component)
        .filter(|&(_, &c)| sizes[c] == 1)
        .map(|(&e, _)| e)
        .collect();
    let rounds = st.rounds + probe.rounds + low.rounds.max(high.rounds) + cc.rounds + 1;
    Ok(BiccOutcome {
        tree_edges: st.edges.clone(),
        edges,
        edge_component,
        is_biconnected: count <= 1,
        count,
        cut_vertices,
        bridges,
        label,
        nd,
        rounds,
    })
}
