//! Sequential oracles for the integration tests, written independently of
//! the library's own checkers.
#![allow(dead_code)]

use std::collections::BTreeSet;

use overlay_core::{KnowledgeGraph, MultiGraph, NodeId};

/// Sorted simple adjacency without loops.
pub fn adjacency(n: usize, edges: &[(NodeId, NodeId)]) -> Vec<Vec<NodeId>> {
    let mut sets = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        if a != b {
            sets[a].insert(b);
            sets[b].insert(a);
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

pub fn graph_adjacency(g: &KnowledgeGraph) -> Vec<Vec<NodeId>> {
    adjacency(g.n(), &g.edges().collect::<Vec<_>>())
}

/// Sorted simple edges `(u, v)` with `u < v`.
pub fn simple_edges(g: &KnowledgeGraph) -> Vec<(NodeId, NodeId)> {
    let set: BTreeSet<_> = g.edges().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))).collect();
    set.into_iter().collect()
}

/// Lowest node id of each node's component, by union-find.
pub fn uf_labels(n: usize, edges: &[(NodeId, NodeId)]) -> Vec<NodeId> {
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut p: Vec<usize> = (0..n).collect();
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut p, a), find(&mut p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    }
    let roots: Vec<usize> = (0..n).map(|v| find(&mut p, v)).collect();
    let mut low = vec![usize::MAX; n];
    for v in 0..n {
        low[roots[v]] = low[roots[v]].min(v);
    }
    roots.into_iter().map(|r| low[r]).collect()
}

/// Union-find labels of the non-loop edges of a multigraph.
pub fn multigraph_labels(g: &MultiGraph) -> Vec<NodeId> {
    let edges: Vec<_> = g.edges().filter(|&(a, b, _)| a != b).map(|(a, b, _)| (a, b)).collect();
    uf_labels(g.n(), &edges)
}

/// Relabels a partition by order of first appearance.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

pub fn bfs_dist(adj: &[Vec<NodeId>], src: NodeId) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[src] = Some(0);
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn multigraph_adjacency(g: &MultiGraph) -> Vec<Vec<NodeId>> {
    let edges: Vec<_> = g.edges().map(|(a, b, _)| (a, b)).collect();
    adjacency(g.n(), &edges)
}

/// Eccentricity maximum over all nodes; `None` if disconnected.
pub fn diameter(adj: &[Vec<NodeId>]) -> Option<usize> {
    let mut best = 0;
    for s in 0..adj.len() {
        for d in bfs_dist(adj, s) {
            best = best.max(d?);
        }
    }
    Some(best)
}

/// Preorder labels (1-based) and subtree sizes of the tree given by child
/// lists, children visited in ascending id.
pub fn dfs_labels(children: &[Vec<NodeId>], root: NodeId) -> (Vec<usize>, Vec<usize>) {
    fn go(c: &[Vec<NodeId>], v: NodeId, next: &mut usize, label: &mut [usize], nd: &mut [usize]) -> usize {
        *next += 1;
        label[v] = *next;
        let mut size = 1;
        let mut kids = c[v].clone();
        kids.sort_unstable();
        for w in kids {
            size += go(c, w, next, label, nd);
        }
        nd[v] = size;
        size
    }
    let n = children.len();
    let (mut label, mut nd) = (vec![0; n], vec![0; n]);
    go(children, root, &mut 0, &mut label, &mut nd);
    (label, nd)
}

/// Child lists of a parent array.
pub fn children_of(parent: &[Option<NodeId>]) -> Vec<Vec<NodeId>> {
    let mut c = vec![Vec::new(); parent.len()];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            c[*p].push(v);
        }
    }
    c
}

/// Non-loop slot pairs crossing `(S, V∖S)`.
fn cut_value(g: &MultiGraph, side: &[bool]) -> usize {
    g.edges()
        .filter(|&(a, b, _)| a != b && side[a] != side[b])
        .map(|(_, _, m)| m)
        .sum()
}

/// Minimum cut by enumerating every proper subset containing node 0.
pub fn brute_min_cut(g: &MultiGraph) -> usize {
    let n = g.n();
    assert!((2..=16).contains(&n));
    let mut best = usize::MAX;
    for mask in 0u32..(1 << (n - 1)) {
        let side: Vec<bool> = (0..n).map(|v| v == 0 || mask >> (v - 1) & 1 == 1).collect();
        if side.iter().all(|&x| x) {
            continue;
        }
        best = best.min(cut_value(g, &side));
    }
    best
}

/// Minimum of `out(S) / (Δ|S|)` over `1 ≤ |S| ≤ δn/2` by enumeration.
pub fn brute_conductance(g: &MultiGraph, delta: f64) -> f64 {
    let n = g.n();
    assert!(n <= 16);
    let deg = g.degree(0) as f64;
    let limit = (delta * n as f64 / 2.0).floor() as usize;
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size > limit {
            continue;
        }
        let side: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
        best = best.min(cut_value(g, &side) as f64 / (deg * size as f64));
    }
    best
}

/// `A^ℓ` by repeated dense multiplication, `A(v, w) = e(v, w) / deg(v)`.
pub fn walk_power(g: &MultiGraph, ell: usize) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut a = vec![vec![0.0; n]; n];
    for v in 0..n {
        let slots = g.slots(v);
        for &w in &slots {
            a[v][w] += 1.0 / slots.len() as f64;
        }
    }
    let mut p: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..ell {
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                if p[i][k] != 0.0 {
                    for j in 0..n {
                        q[i][j] += p[i][k] * a[k][j];
                    }
                }
            }
        }
        p = q;
    }
    p
}

pub fn tv(hist: &[usize], p: &[f64]) -> f64 {
    let total: usize = hist.iter().sum();
    hist.iter()
        .zip(p)
        .map(|(&h, &q)| (h as f64 / total as f64 - q).abs())
        .sum::<f64>()
        / 2.0
}

/// Blocks by recursive low-link search with an edge stack.
pub struct BlockOracle {
    /// Canonical block partition over `simple_edges` order.
    pub edge_block: Vec<usize>,
    pub cut_vertices: Vec<NodeId>,
    pub bridges: Vec<(NodeId, NodeId)>,
}

pub fn block_oracle(g: &KnowledgeGraph) -> BlockOracle {
    struct St<'a> {
        adj: &'a [Vec<NodeId>],
        disc: Vec<usize>,
        low: Vec<usize>,
        time: usize,
        stack: Vec<(NodeId, NodeId)>,
        blocks: Vec<Vec<(NodeId, NodeId)>>,
        cut: BTreeSet<NodeId>,
    }
    fn dfs(s: &mut St, v: NodeId, parent: Option<NodeId>) {
        s.time += 1;
        s.disc[v] = s.time;
        s.low[v] = s.time;
        let mut kids = 0;
        let adj = s.adj;
        for &w in &adj[v] {
            if Some(w) == parent {
                continue;
            }
            if s.disc[w] == 0 {
                kids += 1;
                s.stack.push((v, w));
                dfs(s, w, Some(v));
                s.low[v] = s.low[v].min(s.low[w]);
                if s.low[w] >= s.disc[v] {
                    if parent.is_some() || kids > 1 {
                        s.cut.insert(v);
                    }
                    let mut block = Vec::new();
                    while let Some(e) = s.stack.pop() {
                        block.push(e);
                        if e == (v, w) {
                            break;
                        }
                    }
                    s.blocks.push(block);
                }
            } else if s.disc[w] < s.disc[v] {
                s.stack.push((v, w));
                s.low[v] = s.low[v].min(s.disc[w]);
            }
        }
        if parent.is_none() && kids > 1 {
            s.cut.insert(v);
        } else if parent.is_none() {
            s.cut.remove(&v);
        }
    }
    let adj = graph_adjacency(g);
    let n = g.n();
    let mut s = St {
        adj: &adj,
        disc: vec![0; n],
        low: vec![0; n],
        time: 0,
        stack: Vec::new(),
        blocks: Vec::new(),
        cut: BTreeSet::new(),
    };
    for v in 0..n {
        if s.disc[v] == 0 {
            dfs(&mut s, v, None);
        }
    }
    let edges = simple_edges(g);
    let mut raw = vec![usize::MAX; edges.len()];
    let mut bridges = Vec::new();
    for (b, block) in s.blocks.iter().enumerate() {
        for &(x, y) in block {
            let e = edges.binary_search(&(x.min(y), x.max(y))).unwrap();
            raw[e] = b;
        }
        if block.len() == 1 {
            let (x, y) = block[0];
            bridges.push((x.min(y), x.max(y)));
        }
    }
    bridges.sort_unstable();
    BlockOracle {
        edge_block: canonical(&raw),
        cut_vertices: s.cut.into_iter().collect(),
        bridges,
    }
}

/// Independence and maximality.
pub fn is_mis(adj: &[Vec<NodeId>], in_set: &[bool]) -> bool {
    (0..adj.len()).all(|v| {
        if in_set[v] {
            adj[v].iter().all(|&w| !in_set[w])
        } else {
            adj[v].iter().any(|&w| in_set[w])
        }
    })
}

/// `n − 1` distinct edges of `g` that connect all nodes.
pub fn is_spanning_tree(g: &KnowledgeGraph, tree: &[(NodeId, NodeId)]) -> bool {
    let n = g.n();
    let edges: BTreeSet<_> = simple_edges(g).into_iter().collect();
    let distinct: BTreeSet<_> = tree.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    distinct.len() == n - 1
        && tree.len() == n - 1
        && distinct.iter().all(|e| edges.contains(e))
        && uf_labels(n, tree).iter().all(|&l| l == 0)
}

/// Connected random graph: a random tree plus about `extra` random edges.
pub fn connected_graph(n: usize, extra: usize, seed: u64) -> KnowledgeGraph {
    overlay_core::topology::random_connected(n, extra, seed)
}

/// Unions of complete graphs, paths and isolated nodes in shuffled order.
pub fn mixed_disconnected(n: usize, seed: u64) -> KnowledgeGraph {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<NodeId> = (0..n).collect();
    ids.shuffle(&mut rng);
    let mut edges = Vec::new();
    let mut i = 0;
    while i < n {
        let size = rng.random_range(1..=(n - i).min(24));
        let part = &ids[i..i + size];
        match rng.random_range(0..3) {
            0 => {
                for a in 0..size {
                    for b in a + 1..size {
                        if rng.random_bool(0.5) || b == a + 1 {
                            edges.push((part[a], part[b]));
                        }
                    }
                }
            }
            1 => edges.extend(part.windows(2).map(|w| (w[0], w[1]))),
            _ => {
                for b in 1..size {
                    edges.push((part[rng.random_range(0..b)], part[b]));
                }
            }
        }
        i += size;
    }
    KnowledgeGraph::from_edges(n, &edges).unwrap()
}
