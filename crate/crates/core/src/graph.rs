//! Graph representations, the benign-graph checks and the benign
//! preprocessing transform.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::GraphError;
use crate::metrics;

/// Node identifier. Identifiers double as dense indices `0..n`.
pub type NodeId = usize;

/// Directed knowledge graph: `u -> v` means `u` knows the id of `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    out: Vec<Vec<NodeId>>,
}

impl KnowledgeGraph {
    pub fn new(n: usize) -> Self {
        KnowledgeGraph {
            out: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut g = KnowledgeGraph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        let n = self.n();
        for node in [u, v] {
            if node >= n {
                return Err(GraphError::NodeOutOfRange { node, n });
            }
        }
        self.out[u].push(v);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    pub fn out_neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.out[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Undirected neighbor sets with duplicates and self-edges removed.
    pub fn simple_adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.n()];
        for (u, v) in self.edges() {
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Sorted list of distinct undirected non-loop edges `(u, v)` with `u < v`.
    pub fn simple_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut edges: Vec<_> = self
            .edges()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Degree as in-degree plus out-degree, self-edges excluded.
    pub fn max_degree(&self) -> usize {
        undirected_view(self).max_nonloop_degree()
    }

    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let (n, edges) = parse_edge_list(text)?;
        KnowledgeGraph::from_edges(n, &edges)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n(), self.edge_count());
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }
}

/// Undirected multigraph with explicit self-loop slot counts.
///
/// Every node owns a list of edge slots: `loops(v)` self-loop slots plus
/// `multiplicity(v, w)` slots per neighbor `w`. Non-loop slots are always
/// paired, i.e. `multiplicity(v, w) == multiplicity(w, v)`. A self-loop
/// occupies exactly one slot, so the walk matrix entry is `e(v,w)/Δ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiGraph {
    loops: Vec<usize>,
    adj: Vec<BTreeMap<NodeId, usize>>,
}

impl MultiGraph {
    pub fn new(n: usize) -> Self {
        MultiGraph {
            loops: vec![0; n],
            adj: vec![BTreeMap::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.loops.len()
    }

    /// Adds `mult` parallel copies of `{u, v}`; `u == v` adds loop slots.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, mult: usize) {
        if mult == 0 {
            return;
        }
        if u == v {
            self.loops[u] += mult;
        } else {
            *self.adj[u].entry(v).or_insert(0) += mult;
            *self.adj[v].entry(u).or_insert(0) += mult;
        }
    }

    pub fn add_loops(&mut self, v: NodeId, count: usize) {
        self.loops[v] += count;
    }

    pub fn loops(&self, v: NodeId) -> usize {
        self.loops[v]
    }

    pub fn multiplicity(&self, u: NodeId, v: NodeId) -> usize {
        if u == v {
            self.loops[u]
        } else {
            self.adj[u].get(&v).copied().unwrap_or(0)
        }
    }

    /// Distinct non-loop neighbors with multiplicities, ascending by id.
    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.adj[v].iter().map(|(&w, &c)| (w, c))
    }

    pub fn distinct_neighbor_count(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn nonloop_degree(&self, v: NodeId) -> usize {
        self.adj[v].values().sum()
    }

    /// Total slot count of `v` (loops plus non-loop slots).
    pub fn degree(&self, v: NodeId) -> usize {
        self.loops[v] + self.nonloop_degree(v)
    }

    pub fn max_nonloop_degree(&self) -> usize {
        (0..self.n()).map(|v| self.nonloop_degree(v)).max().unwrap_or(0)
    }

    pub fn total_slots(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).sum()
    }

    /// Returns `Some(Δ)` when every node has the same slot count.
    pub fn regular_degree(&self) -> Option<usize> {
        let first = self.degree(0.min(self.n().saturating_sub(1)));
        if self.n() == 0 {
            return Some(0);
        }
        (0..self.n())
            .all(|v| self.degree(v) == first)
            .then_some(first)
    }

    pub fn is_regular(&self, delta: usize) -> bool {
        (0..self.n()).all(|v| self.degree(v) == delta)
    }

    /// At least `Δ/2` self-loop slots at every node.
    pub fn is_lazy(&self, delta: usize) -> bool {
        (0..self.n()).all(|v| 2 * self.loops[v] >= delta)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|u| {
            self.adj[u]
                .iter()
                .all(|(&v, &c)| self.adj[v].get(&u).copied() == Some(c))
        })
    }

    /// Distinct non-loop edges `(u, v, multiplicity)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, m)| {
            m.range(u + 1..).map(move |(&v, &c)| (u, v, c))
        })
    }

    /// Expanded slot list of `v`: loop slots first (as `v`), then neighbor
    /// slots in ascending id order.
    pub fn slots(&self, v: NodeId) -> Vec<NodeId> {
        let mut s = Vec::with_capacity(self.degree(v));
        s.extend(std::iter::repeat_n(v, self.loops[v]));
        for (&w, &c) in &self.adj[v] {
            s.extend(std::iter::repeat_n(w, c));
        }
        s
    }

    /// Slot lists of all nodes.
    pub fn slot_table(&self) -> Vec<Vec<NodeId>> {
        (0..self.n()).map(|v| self.slots(v)).collect()
    }

    /// Pads every node with self-loops up to `delta` slots.
    pub fn pad_loops(&mut self, delta: usize) {
        for v in 0..self.n() {
            let d = self.degree(v);
            if d < delta {
                self.loops[v] += delta - d;
            }
        }
    }

    /// Copy of the graph with all loop slots removed.
    pub fn without_loops(&self) -> MultiGraph {
        MultiGraph {
            loops: vec![0; self.n()],
            adj: self.adj.clone(),
        }
    }

    /// Graph text format: one line per slot pair, loops written `u u`.
    pub fn to_text(&self) -> String {
        let m: usize = self.edges().map(|(_, _, c)| c).sum::<usize>() + self.loops.iter().sum::<usize>();
        let mut s = format!("{} {}\n", self.n(), m);
        for v in 0..self.n() {
            for _ in 0..self.loops[v] {
                let _ = writeln!(s, "{v} {v}");
            }
        }
        for (u, v, c) in self.edges() {
            for _ in 0..c {
                let _ = writeln!(s, "{u} {v}");
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let (n, edges) = parse_edge_list(text)?;
        let mut g = MultiGraph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v, 1);
        }
        Ok(g)
    }
}

/// Parses the graph text format: `n m` followed by `m` lines `u v`.
pub fn parse_edge_list(text: &str) -> Result<(usize, Vec<(NodeId, NodeId)>), GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_pair = |line: usize, l: &str| -> Result<(usize, usize), GraphError> {
        let mut it = l.split_whitespace();
        let mut next = || -> Result<usize, GraphError> {
            it.next()
                .ok_or_else(|| GraphError::Parse {
                    line,
                    msg: "expected two integers".into(),
                })?
                .parse()
                .map_err(|e| GraphError::Parse {
                    line,
                    msg: format!("{e}"),
                })
        };
        let a = next()?;
        let b = next()?;
        Ok((a, b))
    };
    let (line, header) = lines.next().ok_or(GraphError::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let (n, m) = parse_pair(line, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        let (u, v) = parse_pair(line, l)?;
        for node in [u, v] {
            if node >= n {
                return Err(GraphError::NodeOutOfRange { node, n });
            }
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(GraphError::Parse {
            line: 1,
            msg: format!("header announces {m} edges, found {}", edges.len()),
        });
    }
    Ok((n, edges))
}

/// Parameters `(ℓ, Δ, Λ, L)` of an evolution sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenignParams {
    /// Random walk length in rounds.
    pub ell: usize,
    /// Target degree.
    pub delta: usize,
    /// Minimum cut target.
    pub lambda: usize,
    /// Number of evolutions.
    pub evolutions: usize,
}

pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

pub fn round_up_to(x: usize, k: usize) -> usize {
    x.div_ceil(k) * k
}

impl BenignParams {
    /// Desk-scale profile: `ℓ=16`, `Λ=⌈log₂ n⌉`, `L=4⌈log₂ n⌉`, and
    /// `Δ = max(8⌈log₂ n⌉, 2dΛ)` rounded up to a multiple of 8.
    pub fn desk(n: usize, max_degree: usize) -> Self {
        let lg = ceil_log2(n).max(1);
        let lambda = lg;
        BenignParams {
            ell: 16,
            delta: round_up_to((8 * lg).max(2 * max_degree * lambda), 8),
            lambda,
            evolutions: 4 * lg,
        }
    }

    /// The literal asymptotic constants: `ℓ = 2·640² + 1`, `Λ = 640⌈log₂ n⌉`.
    /// Only usable for tiny sanity runs.
    pub fn paper(n: usize, max_degree: usize) -> Self {
        let lg = ceil_log2(n).max(1);
        let lambda = 640 * lg;
        BenignParams {
            ell: 2 * 640 * 640 + 1,
            delta: round_up_to((2 * max_degree * lambda).max(8), 8),
            lambda,
            evolutions: lg,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.ell == 0 || self.delta == 0 || self.lambda == 0 {
            return Err(GraphError::InvalidParams(format!(
                "ell, delta and lambda must be positive: {self:?}"
            )));
        }
        if self.delta % 8 != 0 {
            return Err(GraphError::InvalidParams(format!(
                "delta must be a multiple of 8, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn tokens_per_node(&self) -> usize {
        self.delta / 8
    }

    pub fn acceptance_limit(&self) -> usize {
        3 * self.delta / 8
    }
}

/// Undirected view: each directed edge `(u, v)` yields one undirected edge
/// `{u, v}`; duplicates add multiplicity. No regularity is imposed.
pub fn undirected_view(g: &KnowledgeGraph) -> MultiGraph {
    let mut m = MultiGraph::new(g.n());
    for (u, v) in g.edges() {
        m.add_edge(u, v, 1);
    }
    m
}

/// Copies every undirected edge `Λ` times, then pads each node with loops
/// to exactly `Δ` slots. Self-edges of the input are dropped first; the
/// padding supplies all loops.
pub fn make_benign(g: &KnowledgeGraph, params: &BenignParams) -> Result<MultiGraph, GraphError> {
    let view = undirected_view(g);
    let d = view.max_nonloop_degree();
    let needed = 2 * d * params.lambda;
    if needed > params.delta {
        return Err(GraphError::DegreeTooHigh {
            degree: d,
            lambda: params.lambda,
            delta: params.delta,
            needed,
        });
    }
    let mut out = MultiGraph::new(g.n());
    for (u, v, c) in view.edges() {
        out.add_edge(u, v, c * params.lambda);
    }
    out.pad_loops(params.delta);
    Ok(out)
}

/// Largest graph for which the min-cut is measured exactly.
pub const MIN_CUT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenignReport {
    pub regular: bool,
    pub lazy: bool,
    /// `None` when the graph is too large to measure.
    pub min_cut_ok: Option<bool>,
    /// Measured min-cut; `Some(0)` for disconnected graphs.
    pub min_cut: Option<usize>,
}

impl BenignReport {
    pub fn structural(&self) -> bool {
        self.regular && self.lazy
    }

    pub fn all(&self) -> bool {
        self.structural() && self.min_cut_ok == Some(true)
    }
}

pub fn is_benign(g: &MultiGraph, delta: usize, lambda: usize) -> BenignReport {
    let regular = g.is_regular(delta);
    let lazy = g.is_lazy(delta);
    if g.n() < 2 {
        // No proper cut exists.
        return BenignReport {
            regular,
            lazy,
            min_cut_ok: Some(true),
            min_cut: None,
        };
    }
    let min_cut = if g.n() <= MIN_CUT_LIMIT {
        Some(match metrics::min_cut(g) {
            Ok(cut) => cut.value,
            Err(_) => 0,
        })
    } else {
        None
    };
    BenignReport {
        regular,
        lazy,
        min_cut_ok: min_cut.map(|c| c >= lambda),
        min_cut,
    }
}

/// Structural part of the benign check only (regular and lazy).
pub fn is_benign_structure(g: &MultiGraph, delta: usize) -> bool {
    g.is_regular(delta) && g.is_lazy(delta) && g.is_symmetric()
}
