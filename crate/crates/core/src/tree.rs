//! Rooted trees: lowest-id BFS flooding, Euler tours, pointer jumping with
//! prefix aggregates, subtree aggregates and well-formed trees.

use std::ops::Deref;

use crate::error::{GraphError, SimError};
use crate::graph::{MultiGraph, NodeId};
use crate::sim::{CapacityPolicy, DropLog, Envelope, Message, Protocol, Simulation, StepCtx};

/// Forest given by parent links, children kept in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedForest {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    depth: Vec<usize>,
    roots: Vec<NodeId>,
}

impl RootedForest {
    /// Validates that the links are acyclic and computes depths.
    pub fn from_parents(parent: Vec<Option<NodeId>>) -> Result<Self, GraphError> {
        let n = parent.len();
        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (v, p) in parent.iter().enumerate() {
            match *p {
                Some(p) if p >= n => return Err(GraphError::NodeOutOfRange { node: p, n }),
                Some(p) if p == v => {
                    return Err(GraphError::InvalidParams(format!("node {v} is its own parent")))
                }
                Some(p) => children[p].push(v),
                None => roots.push(v),
            }
        }
        let mut depth = vec![usize::MAX; n];
        let mut stack: Vec<NodeId> = roots.clone();
        for &r in &roots {
            depth[r] = 0;
        }
        let mut seen = roots.len();
        while let Some(v) = stack.pop() {
            for &c in &children[v] {
                depth[c] = depth[v] + 1;
                seen += 1;
                stack.push(c);
            }
        }
        if seen != n {
            return Err(GraphError::InvalidParams("parent links contain a cycle".into()));
        }
        Ok(RootedForest {
            parent,
            children,
            depth,
            roots,
        })
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<NodeId>] {
        &self.parent
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v]
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn max_children(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Tree edges `(child, parent)`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (v, p)))
            .collect()
    }

    /// Root of the tree containing each node.
    pub fn root_of(&self) -> Vec<NodeId> {
        let mut root = vec![0; self.n()];
        for &r in &self.roots {
            let mut stack = vec![r];
            while let Some(v) = stack.pop() {
                root[v] = r;
                stack.extend(&self.children[v]);
            }
        }
        root
    }
}

/// A forest with exactly one root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    forest: RootedForest,
    root: NodeId,
}

impl RootedTree {
    pub fn from_parents(parent: Vec<Option<NodeId>>) -> Result<Self, GraphError> {
        RootedTree::try_from(RootedForest::from_parents(parent)?)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn into_forest(self) -> RootedForest {
        self.forest
    }
}

impl TryFrom<RootedForest> for RootedTree {
    type Error = GraphError;

    fn try_from(forest: RootedForest) -> Result<Self, GraphError> {
        match forest.roots[..] {
            [root] => Ok(RootedTree { forest, root }),
            _ => Err(GraphError::Disconnected),
        }
    }
}

impl Deref for RootedTree {
    type Target = RootedForest;

    fn deref(&self) -> &RootedForest {
        &self.forest
    }
}

#[derive(Debug, Clone, Copy)]
struct Flood {
    root: NodeId,
    dist: usize,
}

impl Message for Flood {
    fn tag(&self) -> &'static str {
        "flood"
    }
}

#[derive(Debug, Clone)]
struct FloodNode {
    neighbors: Vec<NodeId>,
    root: NodeId,
    dist: usize,
    parent: Option<NodeId>,
}

struct FloodProtocol;

impl Protocol for FloodProtocol {
    type State = FloodNode;
    type Msg = Flood;

    fn step(&self, ctx: &mut StepCtx<Flood>, s: &mut FloodNode, inbox: &[Envelope<Flood>]) {
        let mut changed = ctx.round == 0;
        let best = inbox
            .iter()
            .map(|e| (e.payload.root, e.payload.dist + 1, e.sender))
            .min();
        if let Some((root, dist, sender)) = best {
            if (root, dist) < (s.root, s.dist) {
                s.root = root;
                s.dist = dist;
                s.parent = Some(sender);
                changed = true;
            }
        }
        if changed {
            for &w in &s.neighbors {
                ctx.send(
                    w,
                    Flood {
                        root: s.root,
                        dist: s.dist,
                    },
                );
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfsOutcome {
    /// One tree per connected component, rooted at its lowest id.
    pub forest: RootedForest,
    pub rounds: usize,
    pub log: DropLog,
}

/// Every node floods the lowest id it has seen together with its distance;
/// the parent is the lowest-id sender of the best offer. Runs until no
/// node changes.
pub fn bfs_flood(g: &MultiGraph, seed: u64) -> Result<BfsOutcome, SimError> {
    let n = g.n();
    let cap = (0..n).map(|v| g.distinct_neighbor_count(v)).max().unwrap_or(0).max(1);
    let states = (0..n)
        .map(|v| FloodNode {
            neighbors: g.neighbors(v).map(|(w, _)| w).collect(),
            root: v,
            dist: 0,
            parent: None,
        })
        .collect();
    let mut sim = Simulation::new(&FloodProtocol, states, CapacityPolicy::ncc0(cap), seed);
    let rounds = sim.run_until_quiet(2 * n + 2)?;
    let out = sim.finish();
    let parent = out.states.iter().map(|s| s.parent).collect();
    let forest = RootedForest::from_parents(parent).expect("flooding yields a forest");
    Ok(BfsOutcome {
        forest,
        rounds,
        log: out.log,
    })
}

/// BFS tree rooted at the minimum id; `Disconnected` if more than one
/// component remains.
pub fn bfs_lowest_id(g: &MultiGraph) -> Result<RootedTree, GraphError> {
    let out = bfs_flood(g, 0).map_err(|e| GraphError::InvalidParams(e.to_string()))?;
    RootedTree::try_from(out.forest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggOp {
    Sum,
    Min,
    Max,
}

impl AggOp {
    pub fn apply(self, a: i64, b: i64) -> i64 {
        match self {
            AggOp::Sum => a + b,
            AggOp::Min => a.min(b),
            AggOp::Max => a.max(b),
        }
    }
}

/// Result of pointer jumping over a set of linked lists.
#[derive(Debug, Clone)]
pub struct ListRanking {
    /// 1-based position from the head of the element's list.
    pub rank: Vec<usize>,
    /// Aggregate over the list from its head up to and including the element.
    pub prefix: Vec<i64>,
    /// `jump[k][i]`: the element `2^k` positions after `i`.
    pub jump: Vec<Vec<Option<usize>>>,
    /// `segment[k][i]`: aggregate of the `2^k` elements starting at `i`,
    /// if the list is long enough.
    pub segment: Vec<Vec<Option<i64>>>,
    pub rounds: usize,
    op: AggOp,
}

impl ListRanking {
    /// Aggregate of the `len` elements starting at `start`, by greedy
    /// power-of-two shortcut hops. `None` if the list ends first or `len == 0`.
    pub fn segment_aggregate(&self, start: usize, len: usize) -> Option<i64> {
        if len >> self.segment.len() != 0 {
            return None;
        }
        let mut acc: Option<i64> = None;
        let mut cur = Some(start);
        for k in (0..self.segment.len()).rev() {
            if len >> k & 1 == 1 {
                let i = cur?;
                let s = self.segment[k][i]?;
                acc = Some(match acc {
                    Some(a) => self.op.apply(a, s),
                    None => s,
                });
                cur = self.jump[k][i];
            }
        }
        acc
    }
}

/// Pointer jumping on lists given by successor links. After
/// `⌈log₂ len⌉` synchronous rounds every element knows its rank and its
/// prefix aggregate; the forward shortcuts carry segment aggregates.
pub fn list_rank_and_prefix(succ: &[Option<usize>], values: &[i64], op: AggOp) -> ListRanking {
    let n = succ.len();
    assert_eq!(values.len(), n);
    let mut pred: Vec<Option<usize>> = vec![None; n];
    for (i, s) in succ.iter().enumerate() {
        if let Some(j) = *s {
            assert!(pred[j].is_none(), "element {j} has two predecessors");
            pred[j] = Some(i);
        }
    }
    let mut prefix = values.to_vec();
    let mut rank = vec![1usize; n];
    let mut rounds = 0;
    while pred.iter().any(Option::is_some) {
        let (old_prefix, old_rank, old_pred) = (prefix.clone(), rank.clone(), pred.clone());
        for i in 0..n {
            if let Some(p) = old_pred[i] {
                prefix[i] = op.apply(old_prefix[p], old_prefix[i]);
                rank[i] = old_rank[p] + old_rank[i];
                pred[i] = old_pred[p];
            }
        }
        rounds += 1;
    }

    let mut jump = vec![succ.to_vec()];
    let mut segment = vec![values.iter().map(|&v| Some(v)).collect::<Vec<_>>()];
    loop {
        let (j, s) = (jump.last().unwrap(), segment.last().unwrap());
        let next_seg: Vec<Option<i64>> = (0..n)
            .map(|i| match (s[i], j[i]) {
                (Some(a), Some(m)) => s[m].map(|b| op.apply(a, b)),
                _ => None,
            })
            .collect();
        let next_jump: Vec<Option<usize>> = (0..n).map(|i| j[i].and_then(|m| j[m])).collect();
        if next_seg.iter().all(Option::is_none) {
            break;
        }
        jump.push(next_jump);
        segment.push(next_seg);
    }
    ListRanking {
        rank,
        prefix,
        jump,
        segment,
        rounds,
        op,
    }
}

/// Depth-first tour of one tree as a ring of directed edge traversals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerRing {
    pub root: NodeId,
    /// Directed traversals `(from, to)` in tour order; `2(k − 1)` entries.
    pub stubs: Vec<(NodeId, NodeId)>,
    /// Successor index of each stub (the last wraps to the first).
    pub successor: Vec<usize>,
    /// 1-based first-visit labels; `0` for nodes outside this tree.
    pub label: Vec<usize>,
    /// Number of descendants including the node itself; `0` outside.
    pub nd: Vec<usize>,
    /// Nodes of the tree in label order.
    pub order: Vec<NodeId>,
    pub rounds: usize,
}

/// Euler tour of the tree of `forest` rooted at `root`. At node `v`, the
/// traversal arriving from `u` continues to the neighbor after `u` in the
/// cyclic order (children ascending, then parent).
pub fn euler_tour(forest: &RootedForest, root: NodeId) -> EulerRing {
    let n = forest.n();
    // Stub ids: the down stub into child c is 2c, the up stub out of c is 2c + 1.
    let down = |c: NodeId| 2 * c;
    let up = |c: NodeId| 2 * c + 1;
    let mut members = Vec::new();
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        members.push(v);
        stack.extend(forest.children(v));
    }
    let mut succ: Vec<Option<usize>> = vec![None; 2 * n];
    let mut is_down = vec![0i64; 2 * n];
    // Neighbor after `u` around `v`, as the stub leaving `v`.
    let leave = |v: NodeId, idx: usize| -> Option<usize> {
        let ch = forest.children(v);
        if idx < ch.len() {
            Some(down(ch[idx]))
        } else {
            forest.parent(v).map(|_| up(v))
        }
    };
    for &v in &members {
        let ch = forest.children(v);
        for (i, &c) in ch.iter().enumerate() {
            is_down[down(c)] = 1;
            // Arriving at v from child c (stub up(c)) continues to the next child or parent.
            succ[up(c)] = leave(v, i + 1);
            // Arriving at c from v (stub down(c)) continues to c's first child or back up.
            succ[down(c)] = leave(c, 0);
        }
    }
    // The stub returning to the root last has no successor, which opens the
    // ring into a list for ranking.
    let ranking = list_rank_and_prefix(&succ, &is_down, AggOp::Sum);

    let k = members.len();
    let mut stubs = vec![(0, 0); 2 * (k - 1)];
    let mut label = vec![0usize; n];
    let mut nd = vec![0usize; n];
    label[root] = 1;
    nd[root] = k;
    if k > 1 {
        for &c in &members {
            if c == root {
                continue;
            }
            let p = forest.parent(c).unwrap();
            let (rd, ru) = (ranking.rank[down(c)], ranking.rank[up(c)]);
            stubs[rd - 1] = (p, c);
            stubs[ru - 1] = (c, p);
            label[c] = 1 + ranking.prefix[down(c)] as usize;
            nd[c] = (ru - rd + 1) / 2;
        }
    }
    let m = stubs.len();
    let successor = (0..m).map(|i| (i + 1) % m.max(1)).collect();
    let mut order = vec![0; k];
    for &v in &members {
        order[label[v] - 1] = v;
    }
    EulerRing {
        root,
        stubs,
        successor,
        label,
        nd,
        order,
        rounds: ranking.rounds,
    }
}

/// Aggregates of one tree: over each subtree `D(v)` and over its
/// complement within the tree.
#[derive(Debug, Clone)]
pub struct SubtreeAggregates {
    pub label: Vec<usize>,
    pub nd: Vec<usize>,
    /// Aggregate over `D(v)`.
    pub subtree: Vec<i64>,
    /// Aggregate over the tree minus `D(v)`; `None` at the root.
    pub outside: Vec<Option<i64>>,
    pub rounds: usize,
}

/// Subtree aggregates of `values` on the tree rooted at `root`. Descendants
/// of `v` occupy the label segment `[l(v), l(v) + nd(v) − 1]`, so each
/// aggregate is one shortcut segment query over the label-ordered list.
pub fn subtree_aggregates(forest: &RootedForest, root: NodeId, values: &[i64], op: AggOp) -> SubtreeAggregates {
    let ring = euler_tour(forest, root);
    let n = forest.n();
    let k = ring.order.len();
    let mut succ = vec![None; n];
    for w in ring.order.windows(2) {
        succ[w[0]] = Some(w[1]);
    }
    let ranking = list_rank_and_prefix(&succ, values, op);
    let mut subtree = vec![0i64; n];
    let mut outside = vec![None; n];
    for &v in &ring.order {
        let (l, d) = (ring.label[v], ring.nd[v]);
        subtree[v] = ranking
            .segment_aggregate(v, d)
            .expect("subtree segment lies inside the list");
        let before = (l > 1).then(|| ranking.prefix[ring.order[l - 2]]);
        let after_start = l + d; // 1-based label of the first node after D(v)
        let after = (after_start <= k).then(|| {
            ranking
                .segment_aggregate(ring.order[after_start - 1], k - after_start + 1)
                .expect("suffix segment lies inside the list")
        });
        outside[v] = match (before, after) {
            (Some(a), Some(b)) => Some(op.apply(a, b)),
            (a, b) => a.or(b),
        };
    }
    SubtreeAggregates {
        label: ring.label,
        nd: ring.nd,
        subtree,
        outside,
        rounds: ring.rounds + ranking.rounds,
    }
}

/// Child-sibling transform: each node keeps an edge to its smallest child,
/// and every other child hangs below its next-smaller sibling.
pub fn child_sibling(forest: &RootedForest) -> RootedForest {
    let mut parent = vec![None; forest.n()];
    for v in 0..forest.n() {
        let ch = forest.children(v);
        if let Some(&first) = ch.first() {
            parent[first] = Some(v);
        }
        for w in ch.windows(2) {
            parent[w[1]] = Some(w[0]);
        }
    }
    RootedForest::from_parents(parent).expect("child-sibling links are acyclic")
}

/// Balanced binary tree over the Euler order of the child-sibling tree.
/// Every tree of the output has at most two children per node and depth at
/// most `⌊log₂ k⌋` for `k` nodes.
pub fn well_formed_tree(forest: &RootedForest) -> RootedForest {
    well_formed_tree_with_rounds(forest).0
}

/// As [`well_formed_tree`], also returning the rounds of the slowest tree.
pub fn well_formed_tree_with_rounds(forest: &RootedForest) -> (RootedForest, usize) {
    let cs = child_sibling(forest);
    let mut parent = vec![None; forest.n()];
    let mut rounds = 0;
    for &r in cs.roots() {
        let ring = euler_tour(&cs, r);
        rounds = rounds.max(ring.rounds);
        attach_balanced(&ring.order, None, &mut parent);
    }
    let forest = RootedForest::from_parents(parent).expect("balanced links are acyclic");
    (forest, rounds + 1)
}

fn attach_balanced(order: &[NodeId], above: Option<NodeId>, parent: &mut [Option<NodeId>]) {
    if order.is_empty() {
        return;
    }
    let mid = (order.len() - 1) / 2;
    let v = order[mid];
    parent[v] = above;
    attach_balanced(&order[..mid], Some(v), parent);
    attach_balanced(&order[mid + 1..], Some(v), parent);
}
