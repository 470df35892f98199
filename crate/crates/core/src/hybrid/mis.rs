//! Maximal independent set: a weak-MIS shattering phase, well-formed trees
//! on the undecided components, then parallel bitwise Métivier executions
//! of which each component adopts its first finisher.

use rand::Rng;

use crate::error::PipelineError;
use crate::graph::{ceil_log2, KnowledgeGraph, NodeId};
use crate::hybrid::components::connected_components;
use crate::hybrid::HybridConfig;
use crate::rng::derive;
use crate::sim::{CapacityPolicy, DropLog, Envelope, Message, Protocol, Simulation, StepCtx};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MisStatus {
    Undecided,
    In,
    Out,
}

#[derive(Debug, Clone)]
enum WeakMsg {
    /// Desire level `2^-k` and whether the sender marked itself.
    Desire { k: u32, marked: bool },
    Joined,
}

impl Message for WeakMsg {
    fn tag(&self) -> &'static str {
        match self {
            WeakMsg::Desire { .. } => "desire",
            WeakMsg::Joined => "joined",
        }
    }
}

#[derive(Debug, Clone)]
struct WeakNode {
    neighbors: Vec<NodeId>,
    status: MisStatus,
    k: u32,
    marked: bool,
}

struct WeakMis {
    iterations: usize,
}

impl Protocol for WeakMis {
    type State = WeakNode;
    type Msg = WeakMsg;

    fn step(&self, ctx: &mut StepCtx<WeakMsg>, s: &mut WeakNode, inbox: &[Envelope<WeakMsg>]) {
        let r = ctx.round as usize;
        if r % 2 == 0 {
            if s.status == MisStatus::Undecided && inbox.iter().any(|e| matches!(e.payload, WeakMsg::Joined)) {
                s.status = MisStatus::Out;
            }
            if s.status != MisStatus::Undecided || r / 2 >= self.iterations {
                return;
            }
            s.marked = ctx.rng.random::<f64>() < 0.5f64.powi(s.k as i32);
            for &w in &s.neighbors {
                ctx.send_local(
                    w,
                    WeakMsg::Desire {
                        k: s.k,
                        marked: s.marked,
                    },
                );
            }
        } else {
            if s.status != MisStatus::Undecided {
                return;
            }
            let mut effective = 0.0;
            let mut neighbor_marked = false;
            for e in inbox {
                if let WeakMsg::Desire { k, marked } = e.payload {
                    effective += 0.5f64.powi(k as i32);
                    neighbor_marked |= marked;
                }
            }
            if s.marked && !neighbor_marked {
                s.status = MisStatus::In;
                for &w in &s.neighbors {
                    ctx.send_local(w, WeakMsg::Joined);
                }
            }
            s.k = if effective >= 2.0 { s.k + 1 } else { (s.k.max(2)) - 1 };
        }
    }
}

#[derive(Debug, Clone)]
enum BitMsg {
    /// Bit `j` of every execution's value and the executions the sender is
    /// still active in.
    Bits { bits: u64, active: u64 },
    /// Executions in which the sender joined.
    Joined { mask: u64 },
}

impl Message for BitMsg {
    fn tag(&self) -> &'static str {
        match self {
            BitMsg::Bits { .. } => "bits",
            BitMsg::Joined { .. } => "joined",
        }
    }
}

#[derive(Debug, Clone)]
struct BitNode {
    /// Undecided neighbors, ascending.
    neighbors: Vec<NodeId>,
    active: u64,
    in_mask: u64,
    /// Bit `j` of the current values, one mask per bit position.
    bits: Vec<u64>,
    lost: u64,
    /// Executions in which the values so far equal each neighbor's.
    tied: Vec<u64>,
}

struct Metivier {
    block: usize,
    executions: usize,
}

impl Metivier {
    fn all(&self) -> u64 {
        if self.executions >= 64 {
            u64::MAX
        } else {
            (1u64 << self.executions) - 1
        }
    }
}

impl Protocol for Metivier {
    type State = BitNode;
    type Msg = BitMsg;

    fn step(&self, ctx: &mut StepCtx<BitMsg>, s: &mut BitNode, inbox: &[Envelope<BitMsg>]) {
        let j = ctx.round as usize % (self.block + 1);
        if j == 0 {
            for e in inbox {
                if let BitMsg::Joined { mask } = e.payload {
                    s.active &= !mask;
                }
            }
            if s.active == 0 {
                return;
            }
            let all = self.all();
            s.bits = (0..self.block).map(|_| ctx.rng.random::<u64>() & all).collect();
            s.lost = 0;
            s.tied = vec![0; s.neighbors.len()];
        } else {
            if s.active == 0 {
                return;
            }
            let mine = s.bits[j - 1];
            for e in inbox {
                let BitMsg::Bits { bits, active } = e.payload else { continue };
                let Ok(i) = s.neighbors.binary_search(&e.sender) else { continue };
                if j == 1 {
                    s.tied[i] = active & s.active;
                }
                let t = s.tied[i] & active;
                s.lost |= t & !bits & mine;
                s.tied[i] = t & !(bits ^ mine);
            }
            if j == self.block {
                let blocked = s.tied.iter().fold(s.lost, |acc, &t| acc | t);
                let winners = s.active & !blocked;
                s.in_mask |= winners;
                s.active &= !winners;
                if winners != 0 {
                    for &w in &s.neighbors {
                        ctx.send_local(w, BitMsg::Joined { mask: winners });
                    }
                }
                return;
            }
        }
        let msg = BitMsg::Bits {
            bits: s.bits[j],
            active: s.active,
        };
        for &w in &s.neighbors {
            ctx.send_local(w, msg.clone());
        }
    }
}

#[derive(Debug, Clone)]
pub struct MisOutcome {
    pub in_set: Vec<bool>,
    /// Nodes left undecided by the shattering phase.
    pub undecided: usize,
    pub max_undecided_component: usize,
    pub undecided_components: usize,
    pub executions: usize,
    /// Phase after which the slowest component had a finished execution.
    pub finish_phase: usize,
    pub weak_rounds: usize,
    pub rounds: usize,
    pub log: DropLog,
}

/// Maximal independent set of `g` with maximum degree at most `d`.
pub fn mis(g: &KnowledgeGraph, d: usize, cfg: &HybridConfig, seed: u64) -> Result<MisOutcome, PipelineError> {
    let n = g.n();
    let adj = g.simple_adjacency();
    let iterations = (cfg.mis_c1 * ceil_log2(d + 1)).max(1);
    let states = (0..n)
        .map(|v| WeakNode {
            neighbors: adj[v].clone(),
            status: MisStatus::Undecided,
            k: 1,
            marked: false,
        })
        .collect();
    let policy = CapacityPolicy::hybrid(adj.clone(), Some(1));
    let weak_rounds = 2 * iterations + 1;
    let weak_protocol = WeakMis { iterations };
    let mut sim = Simulation::new(&weak_protocol, states, policy, derive(seed, 1));
    sim.run(weak_rounds)?;
    let weak = sim.finish();
    let mut log = weak.log;
    let status: Vec<MisStatus> = weak.states.iter().map(|s| s.status).collect();

    let undecided_nodes: Vec<NodeId> = (0..n).filter(|&v| status[v] == MisStatus::Undecided).collect();
    let mut in_set: Vec<bool> = status.iter().map(|&s| s == MisStatus::In).collect();
    if undecided_nodes.is_empty() {
        return Ok(MisOutcome {
            in_set,
            undecided: 0,
            max_undecided_component: 0,
            undecided_components: 0,
            executions: 0,
            finish_phase: 0,
            weak_rounds,
            rounds: weak_rounds,
            log,
        });
    }

    // Well-formed trees on the undecided components, over compact ids.
    let mut compact = vec![usize::MAX; n];
    for (i, &v) in undecided_nodes.iter().enumerate() {
        compact[v] = i;
    }
    let sub_adj: Vec<Vec<NodeId>> = undecided_nodes
        .iter()
        .map(|&v| adj[v].iter().filter(|&&w| compact[w] != usize::MAX).map(|&w| compact[w]).collect())
        .collect();
    let sub_edges: Vec<(NodeId, NodeId)> = undecided_nodes
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| {
            let compact = &compact;
            adj[v]
                .iter()
                .filter(move |&&w| w > v && compact[w] != usize::MAX)
                .map(move |&w| (i, compact[w]))
        })
        .collect();
    let sub = KnowledgeGraph::from_edges(undecided_nodes.len(), &sub_edges)?;
    let cc = connected_components(&sub, cfg, derive(seed, 2))?;
    log.extend(cc.log.clone());
    let groups = cc.groups();
    let depth = cc.tree.max_depth();

    let executions = (2 * ceil_log2(n)).clamp(8, 64);
    let protocol = Metivier {
        block: cfg.mis_block.max(1),
        executions,
    };
    let all = protocol.all();
    let states = undecided_nodes
        .iter()
        .map(|&v| BitNode {
            neighbors: sub_adj[compact[v]].clone(),
            active: all,
            in_mask: 0,
            bits: Vec::new(),
            lost: 0,
            tied: Vec::new(),
        })
        .collect();
    let local: Vec<Vec<NodeId>> = sub_adj.clone();
    let mut sim = Simulation::new(&protocol, states, CapacityPolicy::hybrid(local, Some(1)), derive(seed, 3));

    // Each component adopts the lowest-indexed execution among the first to
    // finish on it.
    let phase_len = protocol.block + 1;
    let max_phases = 16 * (ceil_log2(n) + 2);
    let mut chosen: Vec<Option<(usize, u64)>> = vec![None; groups.len()];
    let mut phase = 0;
    while chosen.iter().any(Option::is_none) {
        if phase >= max_phases {
            return Err(PipelineError::Invariant(format!(
                "no execution finished within {max_phases} phases"
            )));
        }
        sim.run(phase_len)?;
        phase += 1;
        // An execution has finished on a component once every node joined
        // or has a neighbor that joined.
        let snapshot = &sim.states;
        for (gi, group) in groups.iter().enumerate() {
            if chosen[gi].is_some() {
                continue;
            }
            let finished = group.iter().fold(all, |acc, &i| {
                let s = &snapshot[i];
                let covered = s
                    .neighbors
                    .iter()
                    .fold(s.in_mask, |m, &u| m | snapshot[u].in_mask);
                acc & covered
            });
            if finished != 0 {
                chosen[gi] = Some((phase, finished));
            }
        }
    }
    let out = sim.finish();
    log.extend(out.log);
    let mut finish_phase = 0;
    for (gi, group) in groups.iter().enumerate() {
        let (p, finished) = chosen[gi].expect("every component finished");
        finish_phase = finish_phase.max(p);
        let exec = finished.trailing_zeros();
        for &i in group {
            if out.states[i].in_mask >> exec & 1 == 1 {
                in_set[undecided_nodes[i]] = true;
            }
        }
    }
    let max_undecided_component = groups.iter().map(Vec::len).max().unwrap_or(0);
    let rounds = weak_rounds + cc.rounds + finish_phase * phase_len + 2 * depth;
    Ok(MisOutcome {
        in_set,
        undecided: undecided_nodes.len(),
        max_undecided_component,
        undecided_components: groups.len(),
        executions,
        finish_phase,
        weak_rounds,
        rounds,
        log,
    })
}
