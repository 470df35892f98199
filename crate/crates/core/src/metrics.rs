//! Measurements on multigraphs: conductance, spectral bounds, walk
//! distributions, diameter and minimum cut.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::MetricsError;
use crate::graph::{MultiGraph, NodeId};
use crate::rng::{purpose, stream};
use crate::sampling;

/// Largest `n` for exhaustive conductance.
pub const EXACT_PHI_LIMIT: usize = 20;
/// Largest `n` for dense matrix work.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceReport {
    pub phi: f64,
    pub delta: f64,
    /// A set attaining the minimum.
    pub witness: Vec<NodeId>,
}

/// Minimum of `out(S) / (Δ|S|)` over non-empty `S` with `|S| ≤ δn/2`.
/// Loop slots never count as outgoing.
pub fn conductance_exact(g: &MultiGraph, delta: f64) -> Result<ConductanceReport, MetricsError> {
    let n = g.n();
    if n > EXACT_PHI_LIMIT {
        return Err(MetricsError::TooLarge {
            n,
            limit: EXACT_PHI_LIMIT,
        });
    }
    let deg = g.regular_degree().ok_or(MetricsError::NotRegular)?;
    let max_size = ((delta * n as f64) / 2.0).floor() as usize;
    let mut best = ConductanceReport {
        phi: f64::INFINITY,
        delta,
        witness: Vec::new(),
    };
    if max_size == 0 || deg == 0 {
        return Ok(best);
    }
    let weights: Vec<Vec<(usize, i64)>> = (0..n)
        .map(|v| g.neighbors(v).map(|(w, c)| (w, c as i64)).collect())
        .collect();
    // Gray-code walk over all subsets; one node flips per step.
    let mut member = vec![false; n];
    let mut out: i64 = 0;
    let mut size = 0usize;
    let mut best_mask = 0u64;
    let mut mask = 0u64;
    for i in 1u64..(1u64 << n) {
        let v = i.trailing_zeros() as usize;
        let inside: i64 = weights[v]
            .iter()
            .filter(|(w, _)| member[*w])
            .map(|&(_, c)| c)
            .sum();
        let total: i64 = weights[v].iter().map(|&(_, c)| c).sum();
        if member[v] {
            out -= total - 2 * inside;
            size -= 1;
        } else {
            out += total - 2 * inside;
            size += 1;
        }
        member[v] = !member[v];
        mask ^= 1 << v;
        if size >= 1 && size <= max_size {
            let phi = out as f64 / (deg * size) as f64;
            if phi < best.phi {
                best.phi = phi;
                best_mask = mask;
            }
        }
    }
    best.witness = (0..n).filter(|&v| best_mask >> v & 1 == 1).collect();
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSummary {
    pub lambda2: f64,
    /// `(1 - λ₂) / 2`
    pub lower: f64,
    /// `sqrt(2 (1 - λ₂))`
    pub upper: f64,
}

/// Walk matrix `A(v, w) = e(v, w) / deg(v)`, loops on the diagonal.
pub fn walk_matrix(g: &MultiGraph) -> DMatrix<f64> {
    let n = g.n();
    let mut a = DMatrix::zeros(n, n);
    for v in 0..n {
        let d = g.degree(v);
        if d == 0 {
            a[(v, v)] = 1.0;
            continue;
        }
        let d = d as f64;
        a[(v, v)] = g.loops(v) as f64 / d;
        for (w, c) in g.neighbors(v) {
            a[(v, w)] = c as f64 / d;
        }
    }
    a
}

pub fn spectral_bounds(g: &MultiGraph) -> Result<SpectrumSummary, MetricsError> {
    let n = g.n();
    if n > DENSE_LIMIT {
        return Err(MetricsError::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    g.regular_degree().ok_or(MetricsError::NotRegular)?;
    let lambda2 = if n < 2 {
        0.0
    } else {
        let mut ev: Vec<f64> = walk_matrix(g).symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev[1].min(1.0)
    };
    let gap = (1.0 - lambda2).max(0.0);
    Ok(SpectrumSummary {
        lambda2,
        lower: gap / 2.0,
        upper: (2.0 * gap).sqrt(),
    })
}

/// Dense `A^ℓ` by repeated squaring.
pub fn walk_matrix_power(g: &MultiGraph, ell: usize) -> Result<DMatrix<f64>, MetricsError> {
    let n = g.n();
    if n > DENSE_LIMIT {
        return Err(MetricsError::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let mut result = DMatrix::identity(n, n);
    let mut base = walk_matrix(g);
    let mut e = ell;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    Ok(result)
}

/// BFS distances from `src` over non-loop edges; `usize::MAX` if unreachable.
pub fn bfs_distances(g: &MultiGraph, src: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(v) = queue.pop_front() {
        for (w, _) in g.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Largest BFS eccentricity, `None` when the graph is disconnected.
pub fn diameter(g: &MultiGraph) -> Option<usize> {
    let mut diam = 0;
    for v in 0..g.n() {
        let ecc = *bfs_distances(g, v).iter().max().unwrap_or(&0);
        if ecc == usize::MAX {
            return None;
        }
        diam = diam.max(ecc);
    }
    Some(diam)
}

pub fn is_connected(g: &MultiGraph) -> bool {
    g.n() == 0 || bfs_distances(g, 0).iter().all(|&d| d != usize::MAX)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinCut {
    pub value: usize,
    /// One side of a minimum cut. Empty when `n < 2` (no proper cut exists).
    pub side: Vec<NodeId>,
}

/// Stoer-Wagner over non-loop multiplicities.
pub fn min_cut(g: &MultiGraph) -> Result<MinCut, MetricsError> {
    let n = g.n();
    if n < 2 {
        return Ok(MinCut {
            value: 0,
            side: Vec::new(),
        });
    }
    if !is_connected(g) {
        return Err(MetricsError::Disconnected);
    }
    let mut adj: Vec<BTreeMap<usize, u64>> = (0..n)
        .map(|v| g.neighbors(v).map(|(w, c)| (w, c as u64)).collect())
        .collect();
    let mut groups: Vec<Vec<NodeId>> = (0..n).map(|v| vec![v]).collect();
    let mut alive = vec![true; n];
    let mut best = u64::MAX;
    let mut best_side = Vec::new();
    let mut weight = vec![0u64; n];
    let mut added = vec![false; n];
    for phase in 0..n - 1 {
        let remaining = n - phase;
        let start = alive.iter().position(|&a| a).expect("a live node remains");
        weight.iter_mut().for_each(|w| *w = 0);
        added.iter_mut().for_each(|a| *a = false);
        let mut heap = BinaryHeap::new();
        heap.push((0u64, Reverse(start)));
        let mut prev = usize::MAX;
        let mut last = usize::MAX;
        let mut count = 0;
        while count < remaining {
            let (w, Reverse(v)) = match heap.pop() {
                Some(x) => x,
                None => break,
            };
            if added[v] || !alive[v] || w != weight[v] {
                continue;
            }
            added[v] = true;
            count += 1;
            prev = last;
            last = v;
            for (&x, &c) in &adj[v] {
                if !added[x] {
                    weight[x] += c;
                    heap.push((weight[x], Reverse(x)));
                }
            }
        }
        let cut = weight[last];
        if cut < best {
            best = cut;
            best_side = groups[last].clone();
        }
        // Merge `last` into `prev`.
        let (s, t) = (prev, last);
        let t_adj = std::mem::take(&mut adj[t]);
        for (x, c) in t_adj {
            adj[x].remove(&t);
            if x != s {
                *adj[s].entry(x).or_insert(0) += c;
                *adj[x].entry(s).or_insert(0) += c;
            }
        }
        adj[s].remove(&t);
        alive[t] = false;
        let moved = std::mem::take(&mut groups[t]);
        groups[s].extend(moved);
    }
    best_side.sort_unstable();
    Ok(MinCut {
        value: best as usize,
        side: best_side,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Independent walks, one slot choice per step.
    Plain,
    /// Red/blue stitching with every node launching tokens.
    Stitched,
}

/// Empirical `ℓ`-step endpoint histogram from `start`.
pub fn endpoint_histogram(
    g: &MultiGraph,
    ell: usize,
    start: NodeId,
    samples: usize,
    sampler: Sampler,
    seed: u64,
) -> Vec<usize> {
    let n = g.n();
    let mut hist = vec![0usize; n];
    match sampler {
        Sampler::Plain => {
            let slots = g.slot_table();
            let mut rng = stream(seed, start as u64, 0, purpose::DIRECT_WALK);
            for _ in 0..samples {
                let mut v = start;
                for _ in 0..ell {
                    let s = &slots[v];
                    v = s[rng.random_range(0..s.len())];
                }
                hist[v] += 1;
            }
        }
        Sampler::Stitched => {
            let ell_eff = ell.max(1).next_power_of_two();
            // Expected survivors per origin are about 2 m0 / ell.
            let per_batch = (samples / 4).max(256);
            let m0 = (per_batch * ell_eff).div_ceil(2);
            let mut got = 0;
            let mut batch = 0u64;
            while got < samples {
                let starts = vec![m0; n];
                let res = sampling::sample_walks(
                    g,
                    &starts,
                    ell,
                    crate::rng::derive(seed, batch),
                    false,
                );
                for w in &res.per_origin[start] {
                    if got == samples {
                        break;
                    }
                    hist[w.endpoint] += 1;
                    got += 1;
                }
                batch += 1;
            }
        }
    }
    hist
}

/// Total-variation distance between the empirical endpoint distribution
/// and row `start` of `A^ℓ`.
pub fn walk_distribution_distance(
    g: &MultiGraph,
    ell: usize,
    start: NodeId,
    samples: usize,
    sampler: Sampler,
    seed: u64,
) -> Result<f64, MetricsError> {
    let exact = walk_matrix_power(g, ell)?;
    let hist = endpoint_histogram(g, ell, start, samples, sampler, seed);
    Ok(tv_distance(&hist, exact.row(start).iter().copied()))
}

/// TV distance between a histogram and a probability vector.
pub fn tv_distance(hist: &[usize], p: impl Iterator<Item = f64>) -> f64 {
    let total: usize = hist.iter().sum();
    if total == 0 {
        return 1.0;
    }
    0.5 * hist
        .iter()
        .zip(p)
        .map(|(&h, q)| (h as f64 / total as f64 - q).abs())
        .sum::<f64>()
}
