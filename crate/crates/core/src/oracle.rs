//! Sequential reference computations used by `--verify`.

use crate::graph::{KnowledgeGraph, NodeId};

/// Component label per node (lowest id in the component) by union-find.
pub fn components(g: &KnowledgeGraph) -> Vec<NodeId> {
    let n = g.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (u, v) in g.edges() {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            // The smaller id becomes the representative.
            parent[a.max(b)] = a.min(b);
        }
    }
    (0..n).map(|v| find(&mut parent, v)).collect()
}

/// Blocks of a graph by the sequential low-link algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocks {
    /// Simple edges `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(NodeId, NodeId)>,
    /// Block per edge, numbered by first appearance in `edges`.
    pub edge_block: Vec<usize>,
    pub cut_vertices: Vec<NodeId>,
    pub bridges: Vec<(NodeId, NodeId)>,
}

pub fn blocks(g: &KnowledgeGraph) -> Blocks {
    let n = g.n();
    let adj = g.simple_adjacency();
    let edges = g.simple_edges();
    let edge_id = |a: NodeId, b: NodeId| edges.binary_search(&(a.min(b), a.max(b))).expect("edge exists");
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut raw = vec![usize::MAX; edges.len()];
    let mut is_cut = vec![false; n];
    let mut time = 0;
    let mut blocks = 0;
    let mut stack: Vec<usize> = Vec::new();
    for s in 0..n {
        if disc[s] != usize::MAX {
            continue;
        }
        disc[s] = time;
        low[s] = time;
        time += 1;
        let mut root_children = 0;
        // Frames: (node, parent, next neighbor index).
        let mut frames = vec![(s, usize::MAX, 0usize)];
        while let Some(&(v, p, i)) = frames.last() {
            if i < adj[v].len() {
                let w = adj[v][i];
                frames.last_mut().expect("frame exists").2 += 1;
                if w == p {
                    continue;
                }
                if disc[w] == usize::MAX {
                    stack.push(edge_id(v, w));
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    if v == s {
                        root_children += 1;
                    }
                    frames.push((w, v, 0));
                } else if disc[w] < disc[v] {
                    stack.push(edge_id(v, w));
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                frames.pop();
                if p == usize::MAX {
                    continue;
                }
                low[p] = low[p].min(low[v]);
                if low[v] >= disc[p] {
                    if p != s {
                        is_cut[p] = true;
                    }
                    let stop = edge_id(p, v);
                    while let Some(e) = stack.pop() {
                        raw[e] = blocks;
                        if e == stop {
                            break;
                        }
                    }
                    blocks += 1;
                }
            }
        }
        if root_children >= 2 {
            is_cut[s] = true;
        }
    }
    let mut renumber = std::collections::HashMap::new();
    let edge_block: Vec<usize> = raw
        .iter()
        .map(|&b| {
            let next = renumber.len();
            *renumber.entry(b).or_insert(next)
        })
        .collect();
    let mut sizes = vec![0usize; renumber.len()];
    for &b in &edge_block {
        sizes[b] += 1;
    }
    let bridges = edges
        .iter()
        .zip(&edge_block)
        .filter(|&(_, &b)| sizes[b] == 1)
        .map(|(&e, _)| e)
        .collect();
    Blocks {
        edges,
        edge_block,
        cut_vertices: (0..n).filter(|&v| is_cut[v]).collect(),
        bridges,
    }
}

/// `None` if `in_set` is an independent, maximal set of `g`; otherwise a
/// description of the first violation.
pub fn mis_violation(g: &KnowledgeGraph, in_set: &[bool]) -> Option<String> {
    let adj = g.simple_adjacency();
    for (v, nbrs) in adj.iter().enumerate() {
        if in_set[v] {
            if let Some(&w) = nbrs.iter().find(|&&w| in_set[w]) {
                return Some(format!("adjacent nodes {v} and {w} are both in the set"));
            }
        } else if !nbrs.iter().any(|&w| in_set[w]) {
            return Some(format!("node {v} is out but has no neighbor in the set"));
        }
    }
    None
}

/// `None` if `edges` form a spanning tree of the undirected `g`.
pub fn spanning_tree_violation(g: &KnowledgeGraph, edges: &[(NodeId, NodeId)]) -> Option<String> {
    let n = g.n();
    if edges.len() + 1 != n {
        return Some(format!("{} edges for {n} nodes", edges.len()));
    }
    let adj = g.simple_adjacency();
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| adj[a].binary_search(&b).is_err()) {
        return Some(format!("edge {{{a}, {b}}} is not in the input"));
    }
    let tree = KnowledgeGraph::from_edges(n, edges).ok()?;
    if components(&tree).iter().any(|&c| c != 0) {
        return Some("edges do not connect all nodes".into());
    }
    None
}

/// Two labelings describe the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ab = std::collections::HashMap::new();
    let mut ba = std::collections::HashMap::new();
    a.iter()
        .zip(b)
        .all(|(&x, &y)| *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
}
