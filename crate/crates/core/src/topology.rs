//! Input topologies for experiments.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::PipelineError;
use crate::graph::{KnowledgeGraph, NodeId};
use crate::rng::{purpose, stream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Topology {
    Path,
    Cycle,
    /// Row-major grid of width `⌈√n⌉`, last row possibly partial.
    Grid,
    /// Complete binary tree in heap order.
    Tree,
    RandomRegular(usize),
    /// Two `k`-cliques joined by one edge; always `2k` nodes.
    Dumbbell(usize),
    File(PathBuf),
}

fn bad(msg: impl Into<String>) -> PipelineError {
    PipelineError::BadSpec(msg.into())
}

impl FromStr for Topology {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(bad(format!("unbalanced parentheses in topology {s:?}"))),
            None => (s, None),
        };
        let number = |arg: Option<&str>| -> Result<usize, PipelineError> {
            arg.ok_or_else(|| bad(format!("topology {name} needs an argument")))?
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad argument in topology {s:?}")))
        };
        match (name, arg) {
            ("path", None) => Ok(Topology::Path),
            ("cycle", None) => Ok(Topology::Cycle),
            ("grid", None) => Ok(Topology::Grid),
            ("tree", None) => Ok(Topology::Tree),
            ("random-regular", a) => Ok(Topology::RandomRegular(number(a)?)),
            ("dumbbell", a) => Ok(Topology::Dumbbell(number(a)?)),
            ("file", Some(p)) if !p.trim().is_empty() => Ok(Topology::File(PathBuf::from(p.trim()))),
            _ => Err(bad(format!("unknown topology {s:?}"))),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Path => write!(f, "path"),
            Topology::Cycle => write!(f, "cycle"),
            Topology::Grid => write!(f, "grid"),
            Topology::Tree => write!(f, "tree"),
            Topology::RandomRegular(d) => write!(f, "random-regular({d})"),
            Topology::Dumbbell(k) => write!(f, "dumbbell({k})"),
            Topology::File(p) => write!(f, "file({})", p.display()),
        }
    }
}

/// Attempts of the pairing model before a random-regular spec is rejected.
const PAIRING_ATTEMPTS: usize = 1000;

/// Builds the topology on `n` nodes (ignored for dumbbells and files).
/// Deterministic in `seed`.
pub fn generate(topology: &Topology, n: usize, seed: u64) -> Result<KnowledgeGraph, PipelineError> {
    let needs_nodes = !matches!(topology, Topology::Dumbbell(_) | Topology::File(_));
    if needs_nodes && n == 0 {
        return Err(bad("n must be at least 1"));
    }
    let edges: Vec<(NodeId, NodeId)> = match topology {
        Topology::Path => (1..n).map(|v| (v - 1, v)).collect(),
        Topology::Cycle => {
            if n < 3 {
                return Err(bad("a cycle needs at least 3 nodes"));
            }
            (0..n).map(|v| (v, (v + 1) % n)).collect()
        }
        Topology::Grid => {
            let w = (n as f64).sqrt().ceil() as usize;
            let mut e = Vec::new();
            for v in 0..n {
                if (v + 1) % w != 0 && v + 1 < n {
                    e.push((v, v + 1));
                }
                if v + w < n {
                    e.push((v, v + w));
                }
            }
            e
        }
        Topology::Tree => (1..n).map(|v| ((v - 1) / 2, v)).collect(),
        Topology::RandomRegular(d) => return random_regular(n, *d, seed),
        Topology::Dumbbell(k) => return dumbbell(*k),
        Topology::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
            return Ok(KnowledgeGraph::from_text(&text)?);
        }
    };
    Ok(KnowledgeGraph::from_edges(n, &edges)?)
}

fn dumbbell(k: usize) -> Result<KnowledgeGraph, PipelineError> {
    if k == 0 {
        return Err(bad("dumbbell needs k ≥ 1"));
    }
    let mut e = Vec::new();
    for side in [0, k] {
        for a in 0..k {
            for b in a + 1..k {
                e.push((side + a, side + b));
            }
        }
    }
    e.push((k - 1, k));
    Ok(KnowledgeGraph::from_edges(2 * k, &e)?)
}

/// Simple `d`-regular graph from the pairing model, retrying on loops and
/// parallel edges.
fn random_regular(n: usize, d: usize, seed: u64) -> Result<KnowledgeGraph, PipelineError> {
    if d >= n || (n * d) % 2 == 1 {
        return Err(bad(format!("no simple {d}-regular graph on {n} nodes")));
    }
    let mut rng = stream(seed, 0, 0, purpose::TOPOLOGY);
    let mut points: Vec<NodeId> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..PAIRING_ATTEMPTS {
        points.shuffle(&mut rng);
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(points.len() / 2);
        for pair in points.chunks(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'attempt;
            }
            edges.push((a, b));
        }
        return Ok(KnowledgeGraph::from_edges(n, &edges)?);
    }
    Err(bad(format!(
        "pairing model found no simple {d}-regular graph on {n} nodes in {PAIRING_ATTEMPTS} attempts"
    )))
}

/// Random tree on `n` nodes (each node attaches to a uniform earlier node)
/// plus `extra` uniform extra edges; always connected.
pub fn random_connected(n: usize, extra: usize, seed: u64) -> KnowledgeGraph {
    let mut rng = stream(seed, 1, 0, purpose::TOPOLOGY);
    let mut edges: Vec<(NodeId, NodeId)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    if n >= 2 {
        for _ in 0..extra {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                edges.push((a, b));
            }
        }
    }
    KnowledgeGraph::from_edges(n, &edges).expect("ids in range")
}

/// Erdős–Rényi graph `G(n, p)`.
pub fn random_gnp(n: usize, p: f64, seed: u64) -> KnowledgeGraph {
    let mut rng = stream(seed, 2, 0, purpose::TOPOLOGY);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    KnowledgeGraph::from_edges(n, &edges).expect("ids in range")
}

/// Disjoint union of `parts` random connected graphs on `size` nodes each,
/// with the node ids shuffled.
pub fn random_islands(parts: usize, size: usize, extra: usize, seed: u64) -> KnowledgeGraph {
    let n = parts * size;
    let mut ids: Vec<NodeId> = (0..n).collect();
    ids.shuffle(&mut stream(seed, 3, 0, purpose::TOPOLOGY));
    let mut edges = Vec::new();
    for p in 0..parts {
        let part = random_connected(size, extra, seed ^ (p as u64).wrapping_mul(0x9e37_79b9));
        edges.extend(part.edges().map(|(a, b)| (ids[p * size + a], ids[p * size + b])));
    }
    KnowledgeGraph::from_edges(n, &edges).expect("ids in range")
}

/// Random connected graph on `n` nodes where node 0 is adjacent to nodes
/// `1..=hub_degree`.
pub fn hub_graph(n: usize, hub_degree: usize, seed: u64) -> KnowledgeGraph {
    let base = random_connected(n, n, seed);
    let mut edges: Vec<(NodeId, NodeId)> = base.edges().filter(|&(a, b)| a != 0 && b != 0).collect();
    edges.extend((1..=hub_degree.min(n.saturating_sub(1))).map(|w| (0, w)));
    // Keep the rest connected to the hub side.
    edges.extend((hub_degree + 1..n).map(|v| (v - 1, v)));
    KnowledgeGraph::from_edges(n, &edges).expect("ids in range")
}
