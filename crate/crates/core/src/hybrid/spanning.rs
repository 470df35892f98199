//! Spanning trees: the Euler path of the final BFS tree is expanded level
//! by level into a walk in the delegated graph, and every node keeps the
//! edge of its first visit.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::error::PipelineError;
use crate::expander::TracedEdge;
use crate::graph::{KnowledgeGraph, NodeId};
use crate::hybrid::components::{connected_components_with, ComponentsOutcome};
use crate::hybrid::HybridConfig;
use crate::tree::{euler_tour, list_rank_and_prefix, AggOp, RootedForest};

#[derive(Debug, Clone)]
pub struct SpanningOutcome {
    /// Tree edges `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(NodeId, NodeId)>,
    /// The tree rooted at the start of the walk.
    pub tree: RootedForest,
    pub root: NodeId,
    /// Length of the expanded walk after pruning covered segments.
    pub walk_len: usize,
    /// Largest number of occurrences of one node in the pruned walk.
    pub max_multiplicity: usize,
    pub components: ComponentsOutcome,
    pub rounds: usize,
}

/// Edge lookup and node covers of every traced level.
struct Levels<'a> {
    g_adj: Vec<Vec<NodeId>>,
    components: &'a ComponentsOutcome,
    /// `index[k - 1]`: edge `{a, b}` of `G_k` to its first traced walk.
    index: Vec<HashMap<(NodeId, NodeId), usize>>,
    /// `cover[k - 1][e]`: nodes of the full expansion of traced edge `e`.
    cover: Vec<Vec<FixedBitSet>>,
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

impl<'a> Levels<'a> {
    fn new(g: &KnowledgeGraph, components: &'a ComponentsOutcome) -> Self {
        let n = g.n();
        let mut levels = Levels {
            g_adj: g.simple_adjacency(),
            components,
            index: Vec::new(),
            cover: Vec::new(),
        };
        for traced in &components.provenance {
            let mut idx = HashMap::new();
            for (i, t) in traced.iter().enumerate() {
                idx.entry(key(t.origin, t.endpoint)).or_insert(i);
            }
            let cover: Vec<FixedBitSet> = traced
                .iter()
                .map(|t| {
                    let mut c = FixedBitSet::with_capacity(n);
                    for w in t.walk.windows(2) {
                        levels.hop_cover(levels.cover.len(), w[0], w[1], &mut c);
                    }
                    c
                })
                .collect();
            levels.index.push(idx);
            levels.cover.push(cover);
        }
        levels
    }

    fn top(&self) -> usize {
        self.index.len()
    }

    fn in_g(&self, a: NodeId, b: NodeId) -> bool {
        self.g_adj[a].binary_search(&b).is_ok()
    }

    /// Path in `g` replacing an edge of the delegated graph.
    fn base_path(&self, a: NodeId, b: NodeId) -> Option<NodeId> {
        if self.in_g(a, b) {
            None
        } else {
            Some(
                self.components
                    .delegation
                    .center(a, b)
                    .expect("a delegated edge outside g has a center"),
            )
        }
    }

    fn traced(&self, level: usize, a: NodeId, b: NodeId) -> (usize, &TracedEdge) {
        let i = *self.index[level - 1]
            .get(&key(a, b))
            .expect("every non-loop edge of an evolved graph is traced");
        (i, &self.components.provenance[level - 1][i])
    }

    fn hop_cover(&self, level: usize, a: NodeId, b: NodeId, into: &mut FixedBitSet) {
        if a == b {
            return;
        }
        if level == 0 {
            into.insert(a);
            into.insert(b);
            if let Some(c) = self.base_path(a, b) {
                into.insert(c);
            }
        } else {
            let (i, _) = self.traced(level, a, b);
            into.union_with(&self.cover[level - 1][i]);
        }
    }

    /// Appends the nodes after `a` up to `b` of the expansion of hop
    /// `(a, b)` of `G_level`, skipping segments whose nodes were all seen.
    fn expand(&self, level: usize, a: NodeId, b: NodeId, walk: &mut Vec<NodeId>, seen: &mut FixedBitSet) {
        if a == b {
            return;
        }
        if level == 0 {
            if let Some(c) = self.base_path(a, b) {
                walk.push(c);
                seen.insert(c);
            }
            walk.push(b);
            seen.insert(b);
            return;
        }
        let (i, t) = self.traced(level, a, b);
        if self.cover[level - 1][i].is_subset(seen) {
            walk.push(b);
            return;
        }
        let forward = t.origin == a;
        let hops: Vec<(NodeId, NodeId)> = if forward {
            t.walk.windows(2).map(|w| (w[0], w[1])).collect()
        } else {
            t.walk.windows(2).rev().map(|w| (w[1], w[0])).collect()
        };
        for (x, y) in hops {
            self.expand(level - 1, x, y, walk, seen);
        }
    }

    /// Occurrences of each node in the unpruned expansion of hop `(a, b)`,
    /// excluding `a`.
    fn literal_counts(&self, memo: &mut HashMap<(usize, usize), Vec<u64>>, level: usize, a: NodeId, b: NodeId) -> Vec<u64> {
        let n = self.g_adj.len();
        let mut out = vec![0u64; n];
        if a == b {
            return out;
        }
        if level == 0 {
            if let Some(c) = self.base_path(a, b) {
                out[c] += 1;
            }
            out[b] += 1;
            return out;
        }
        let (i, t) = self.traced(level, a, b);
        let counts = if let Some(c) = memo.get(&(level, i)) {
            c.clone()
        } else {
            let mut acc = vec![0u64; n];
            for w in t.walk.windows(2) {
                let sub = self.literal_counts(memo, level - 1, w[0], w[1]);
                for (x, s) in acc.iter_mut().zip(sub) {
                    *x = x.saturating_add(s);
                }
            }
            memo.insert((level, i), acc.clone());
            acc
        };
        // Reversal keeps the multiset except that the first and last node
        // trade places.
        if t.origin == a {
            counts
        } else {
            let mut c = counts;
            c[t.endpoint] -= 1;
            c[t.origin] += 1;
            c
        }
    }
}

/// Euler path of the final BFS tree as a node sequence.
fn top_path(components: &ComponentsOutcome, root: NodeId) -> Vec<NodeId> {
    let ring = euler_tour(&components.bfs, root);
    std::iter::once(root).chain(ring.stubs.iter().map(|s| s.1)).collect()
}

/// Spanning tree of the undirected version of `g`.
pub fn spanning_tree(g: &KnowledgeGraph, cfg: &HybridConfig, seed: u64) -> Result<SpanningOutcome, PipelineError> {
    let n = g.n();
    if n == 0 {
        return Err(PipelineError::BadSpec("empty graph".into()));
    }
    let components = connected_components_with(g, n, cfg, seed, true)?;
    if components.count != 1 {
        return Err(PipelineError::Disconnected);
    }
    let levels = Levels::new(g, &components);
    let root = components.bfs.roots()[0];
    let path = top_path(&components, root);

    let mut walk = vec![root];
    let mut seen = FixedBitSet::with_capacity(n);
    seen.insert(root);
    for w in path.windows(2) {
        levels.expand(levels.top(), w[0], w[1], &mut walk, &mut seen);
    }

    // First visits by list ranking over the walk positions.
    let len = walk.len();
    let succ: Vec<Option<usize>> = (0..len).map(|i| (i + 1 < len).then_some(i + 1)).collect();
    let ranking = list_rank_and_prefix(&succ, &vec![1; len], AggOp::Sum);
    let mut first = vec![usize::MAX; n];
    let mut count = vec![0usize; n];
    for (i, &v) in walk.iter().enumerate() {
        first[v] = first[v].min(ranking.rank[i]);
        count[v] += 1;
    }
    let mut parent = vec![None; n];
    for v in 0..n {
        if v != root {
            let r = first[v];
            if r == usize::MAX {
                return Err(PipelineError::Invariant(format!("node {v} missing from the expanded walk")));
            }
            // Rank is 1-based, so the predecessor sits at index `r - 2`.
            parent[v] = Some(walk[r - 2]);
        }
    }
    let tree = RootedForest::from_parents(parent)
        .map_err(|e| PipelineError::Invariant(format!("first visits do not form a tree: {e}")))?;
    let mut edges: Vec<_> = tree.edges().into_iter().map(|(c, p)| key(c, p)).collect();
    edges.sort_unstable();
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| !levels.in_g(a, b)) {
        return Err(PipelineError::Invariant(format!("tree edge {{{a}, {b}}} is not in the input")));
    }
    let rounds = components.rounds + levels.top() + ranking.rounds;
    Ok(SpanningOutcome {
        edges,
        tree,
        root,
        walk_len: len,
        max_multiplicity: count.into_iter().max().unwrap_or(0),
        components,
        rounds,
    })
}

/// Largest number of occurrences of one node in the fully expanded walk
/// without pruning, saturating at `u64::MAX`.
pub fn literal_multiplicity(g: &KnowledgeGraph, outcome: &SpanningOutcome) -> u64 {
    let levels = Levels::new(g, &outcome.components);
    let path = top_path(&outcome.components, outcome.root);
    let mut memo = HashMap::new();
    let mut total = vec![0u64; g.n()];
    total[outcome.root] = 1;
    for w in path.windows(2) {
        let sub = levels.literal_counts(&mut memo, levels.top(), w[0], w[1]);
        for (x, s) in total.iter_mut().zip(sub) {
            *x = x.saturating_add(s);
        }
    }
    total.into_iter().max().unwrap_or(0)
}
