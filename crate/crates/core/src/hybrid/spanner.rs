//! Sparse spanner from exponentially shifted broadcasts, and degree
//! delegation that turns it into a bounded-degree graph.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::SimError;
use crate::graph::{ceil_log2, KnowledgeGraph, MultiGraph, NodeId};
use crate::rng::{purpose, stream};
use crate::sim::{CapacityPolicy, DropLog, Envelope, Message, Protocol, Simulation, StepCtx};

/// Exponential draw with rate `1/2` by inversion.
pub fn exp_draw(seed: u64, v: NodeId) -> f64 {
    let mut rng = stream(seed, v as u64, 0, purpose::SPANNER_DRAW);
    let u: f64 = rng.random();
    -2.0 * (1.0 - u).ln()
}

#[derive(Debug, Clone, Copy)]
struct Shift {
    source: NodeId,
    r: f64,
    dist: usize,
}

impl Message for Shift {
    fn tag(&self) -> &'static str {
        "shift"
    }
}

#[derive(Debug, Clone)]
struct SpannerNode {
    neighbors: Vec<NodeId>,
    /// Best offer per source: `(m_u(v), predecessor)`.
    received: BTreeMap<NodeId, (f64, Option<NodeId>)>,
    best: Option<Shift>,
    changed: bool,
}

impl SpannerNode {
    fn best_value(&self) -> f64 {
        self.best.map_or(f64::NEG_INFINITY, |b| b.r - b.dist as f64)
    }
}

struct SpannerProtocol;

impl Protocol for SpannerProtocol {
    type State = SpannerNode;
    type Msg = Shift;

    fn step(&self, ctx: &mut StepCtx<Shift>, s: &mut SpannerNode, inbox: &[Envelope<Shift>]) {
        // Offers of one round, first receipt per source; ties go to the
        // lowest sender, which the sender-ordered inbox yields first.
        let mut fresh: BTreeMap<NodeId, (f64, NodeId, Shift)> = BTreeMap::new();
        for e in inbox {
            let offer = Shift {
                source: e.payload.source,
                r: e.payload.r,
                dist: e.payload.dist + 1,
            };
            let value = offer.r - offer.dist as f64;
            fresh.entry(offer.source).or_insert((value, e.sender, offer));
        }
        for (source, (value, sender, offer)) in fresh {
            if s.received.contains_key(&source) {
                continue;
            }
            s.received.insert(source, (value, Some(sender)));
            if value > s.best_value() {
                s.best = Some(offer);
                s.changed = true;
            }
        }
        if s.changed {
            if let Some(b) = s.best {
                for &w in &s.neighbors {
                    ctx.send_local(w, b);
                }
            }
            s.changed = false;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpannerOutcome {
    /// Directed spanner edges `(v, p)`, sorted and deduplicated.
    pub edges: Vec<(NodeId, NodeId)>,
    pub rounds: usize,
    pub log: DropLog,
}

impl SpannerOutcome {
    pub fn max_out_degree(&self, n: usize) -> usize {
        let mut deg = vec![0usize; n];
        for &(v, _) in &self.edges {
            deg[v] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

/// Builds the spanner `{(v, p_w(v)) | m_w(v) ≥ m(v) − 1}` from broadcasts
/// lasting `⌈2 log₂ m⌉ + 1` rounds, plus all edges of nodes with degree
/// below `c · log₂ n`. A node that receives no value at all also keeps all
/// its edges.
pub fn build_spanner(g: &KnowledgeGraph, m: usize, c: f64, seed: u64) -> Result<SpannerOutcome, SimError> {
    let n = g.n();
    let adj = g.simple_adjacency();
    let cutoff = 2.0 * (m.max(2) as f64).log2();
    let states = (0..n)
        .map(|v| {
            let r = exp_draw(seed, v);
            let mut s = SpannerNode {
                neighbors: adj[v].clone(),
                received: BTreeMap::new(),
                best: None,
                changed: false,
            };
            if r < cutoff {
                s.received.insert(v, (r, None));
                s.best = Some(Shift {
                    source: v,
                    r,
                    dist: 0,
                });
                s.changed = true;
            }
            s
        })
        .collect();
    let rounds = cutoff.ceil() as usize + 2;
    let policy = CapacityPolicy::hybrid(adj.clone(), Some(1));
    let mut sim = Simulation::new(&SpannerProtocol, states, policy, seed);
    sim.run(rounds)?;
    let out = sim.finish();

    let low_degree = c * (ceil_log2(n).max(1) as f64);
    let mut edges = Vec::new();
    for (v, s) in out.states.iter().enumerate() {
        let keep_all = (adj[v].len() as f64) < low_degree || s.received.is_empty();
        if keep_all {
            edges.extend(adj[v].iter().map(|&w| (v, w)));
            continue;
        }
        let top = s
            .received
            .values()
            .map(|&(x, _)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        for &(value, pred) in s.received.values() {
            if let Some(p) = pred {
                if value >= top - 1.0 {
                    edges.push((v, p));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(SpannerOutcome {
        edges,
        rounds,
        log: out.log,
    })
}

/// The delegated graph `H` and the pairs it introduced that are not edges
/// of the spanner.
#[derive(Debug, Clone)]
pub struct Delegation {
    pub h: MultiGraph,
    /// For each delegated pair `(a, b)` with `a < b`, the node both were
    /// attached to.
    pub centers: BTreeMap<(NodeId, NodeId), NodeId>,
}

impl Delegation {
    /// Center of `{a, b}` if the pair was delegated.
    pub fn center(&self, a: NodeId, b: NodeId) -> Option<NodeId> {
        self.centers.get(&(a.min(b), a.max(b))).copied()
    }
}

/// For every `v`, the nodes `w₁ < w₂ < …` pointing to `v` are chained:
/// `v` keeps `{v, w₁}` and every `w_i` is linked to `w_{i−1}`.
pub fn delegate_degrees(n: usize, spanner: &[(NodeId, NodeId)]) -> Delegation {
    let mut incoming: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for &(w, v) in spanner {
        if w != v {
            incoming[v].push(w);
        }
    }
    let mut h = MultiGraph::new(n);
    let mut seen = std::collections::BTreeSet::new();
    let mut centers = BTreeMap::new();
    let mut add = |h: &mut MultiGraph, a: NodeId, b: NodeId| {
        if seen.insert((a.min(b), a.max(b))) {
            h.add_edge(a, b, 1);
        }
    };
    for (v, ws) in incoming.iter_mut().enumerate() {
        ws.sort_unstable();
        ws.dedup();
        if let Some(&first) = ws.first() {
            add(&mut h, v, first);
        }
        for pair in ws.windows(2) {
            let key = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            centers.entry(key).or_insert(v);
            add(&mut h, pair[1], pair[0]);
        }
    }
    // A delegated pair that is also a spanner edge needs no repair.
    for &(a, b) in spanner {
        centers.remove(&(a.min(b), a.max(b)));
    }
    Delegation { h, centers }
}
