//! Walk-length doubling by red/blue token stitching.
//!
//! Tokens first take two plain steps. In every stitch round each node
//! shuffles the tokens it holds, drops one if the count is odd and pairs
//! the first half (red) with the second half (blue). A red token jumps to
//! the origin of its blue partner, which is consumed; the red walk is
//! extended by the blue walk traversed backwards. After `log₂ℓ − 1` stitch
//! rounds every survivor represents an `ℓ`-step walk and is reported back
//! to its origin.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{MultiGraph, NodeId};
use crate::rng::{purpose, stream, StreamRng};
use crate::sim::{CapacityPolicy, DropLog, Envelope, Message, Protocol, Simulation, StepCtx};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Unset,
    Red,
    Blue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StitchToken {
    pub origin: NodeId,
    /// Walk steps represented so far.
    pub covered: usize,
    pub color: Color,
    /// Nodes after each step, so `trace.len() == covered` and the walk is
    /// `origin, trace[0], .., trace[covered - 1]`.
    pub trace: Option<Vec<NodeId>>,
}

impl StitchToken {
    pub fn new(origin: NodeId, tracing: bool) -> Self {
        StitchToken {
            origin,
            covered: 0,
            color: Color::Unset,
            trace: tracing.then(Vec::new),
        }
    }

    /// Full walk including the origin.
    pub fn walk(&self) -> Option<Vec<NodeId>> {
        self.trace.as_ref().map(|t| {
            let mut w = Vec::with_capacity(t.len() + 1);
            w.push(self.origin);
            w.extend_from_slice(t);
            w
        })
    }
}

/// One uniform slot step. Returns the new position.
pub fn step_token(slots: &[NodeId], covered: &mut usize, trace: &mut Option<Vec<NodeId>>, rng: &mut StreamRng) -> NodeId {
    let to = slots[rng.random_range(0..slots.len())];
    *covered += 1;
    if let Some(t) = trace {
        t.push(to);
    }
    to
}

/// Stitches the tokens held at `node`. Returns `(destination, token)` for
/// every red token; blue tokens and an odd leftover are consumed.
pub fn stitch_at(
    node: NodeId,
    mut tokens: Vec<StitchToken>,
    rng: &mut StreamRng,
) -> Vec<(NodeId, StitchToken)> {
    tokens.shuffle(rng);
    if tokens.len() % 2 == 1 {
        tokens.pop();
    }
    let half = tokens.len() / 2;
    let blues = tokens.split_off(half);
    tokens
        .into_iter()
        .zip(blues)
        .map(|(mut red, blue)| {
            debug_assert_eq!(red.trace.as_ref().and_then(|t| t.last().copied()).unwrap_or(node), node);
            red.color = Color::Red;
            red.covered += blue.covered;
            if let (Some(rt), Some(bt)) = (&mut red.trace, &blue.trace) {
                // Walk back along the blue path to its origin.
                let c = bt.len();
                rt.extend(bt[..c.saturating_sub(1)].iter().rev());
                rt.push(blue.origin);
            }
            (blue.origin, red)
        })
        .collect()
}

/// One stitch round over per-node token buffers, each node drawing from
/// its `(seed, node, round)` stream. Returns the buffers after the jumps.
pub fn stitch_round(tokens: Vec<Vec<StitchToken>>, seed: u64, round: u64) -> Vec<Vec<StitchToken>> {
    let n = tokens.len();
    let mut out: Vec<Vec<StitchToken>> = vec![Vec::new(); n];
    for (v, held) in tokens.into_iter().enumerate() {
        let mut rng = stream(seed, v as u64, round, purpose::STEP);
        for (dest, t) in stitch_at(v, held, &mut rng) {
            out[dest].push(t);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledWalk {
    pub endpoint: NodeId,
    /// Full walk from the origin to `endpoint` when tracing.
    pub walk: Option<Vec<NodeId>>,
}

#[derive(Debug, Clone)]
pub enum SampleMsg {
    Token(StitchToken),
    Report(SampledWalk),
}

impl Message for SampleMsg {
    fn tag(&self) -> &'static str {
        match self {
            SampleMsg::Token(_) => "token",
            SampleMsg::Report(_) => "report",
        }
    }

    fn id_count(&self) -> usize {
        match self {
            SampleMsg::Token(t) => 1 + t.trace.as_ref().map_or(0, Vec::len),
            SampleMsg::Report(w) => 1 + w.walk.as_ref().map_or(0, Vec::len),
        }
    }
}

pub struct SampleNode {
    slots: Vec<NodeId>,
    starts: usize,
    held: Vec<StitchToken>,
    pub results: Vec<SampledWalk>,
}

/// Round schedule of a sampling run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    /// Walk length actually simulated (a power of two).
    pub ell: usize,
    pub warmup: usize,
    pub stitches: usize,
}

impl Schedule {
    pub fn new(ell: usize) -> Self {
        let ell = ell.max(1).next_power_of_two();
        let warmup = ell.min(2);
        let stitches = if ell >= 2 { ell.trailing_zeros() as usize - 1 } else { 0 };
        Schedule {
            ell,
            warmup,
            stitches,
        }
    }

    pub fn report_round(&self) -> u64 {
        (self.warmup + self.stitches) as u64
    }

    /// Rounds until all reports are in.
    pub fn rounds(&self) -> usize {
        self.warmup + self.stitches + 2
    }
}

pub struct SamplingProtocol {
    pub schedule: Schedule,
    pub tracing: bool,
}

impl Protocol for SamplingProtocol {
    type State = SampleNode;
    type Msg = SampleMsg;

    fn step(&self, ctx: &mut StepCtx<SampleMsg>, state: &mut SampleNode, inbox: &[Envelope<SampleMsg>]) {
        let v = ctx.node;
        let r = ctx.round;
        let mut tokens = std::mem::take(&mut state.held);
        for e in inbox {
            match &e.payload {
                SampleMsg::Token(t) => tokens.push(t.clone()),
                SampleMsg::Report(w) => state.results.push(w.clone()),
            }
        }
        if r == 0 {
            tokens.extend((0..state.starts).map(|_| StitchToken::new(v, self.tracing)));
        }
        let s = &self.schedule;
        if r < s.warmup as u64 {
            for mut t in tokens {
                let to = step_token(&state.slots, &mut t.covered, &mut t.trace, &mut ctx.rng);
                if to == v {
                    state.held.push(t);
                } else {
                    ctx.send(to, SampleMsg::Token(t));
                }
            }
        } else if r < s.report_round() {
            for (to, t) in stitch_at(v, tokens, &mut ctx.rng) {
                if to == v {
                    state.held.push(t);
                } else {
                    ctx.send(to, SampleMsg::Token(t));
                }
            }
        } else if r == s.report_round() {
            for t in tokens {
                debug_assert_eq!(t.covered, s.ell);
                let walk = SampledWalk {
                    endpoint: v,
                    walk: t.walk(),
                };
                if t.origin == v {
                    state.results.push(walk);
                } else {
                    ctx.send(t.origin, SampleMsg::Report(walk));
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleResult {
    /// Surviving walks per origin.
    pub per_origin: Vec<Vec<SampledWalk>>,
    pub log: DropLog,
    pub schedule: Schedule,
    pub rounds: usize,
}

impl SampleResult {
    pub fn survivors(&self) -> usize {
        self.per_origin.iter().map(Vec::len).sum()
    }
}

/// Samples `ℓ`-step walks by stitching, `starts[v]` tokens launched at `v`.
/// Global messages are uncapped; the log records the per-node maxima.
pub fn sample_walks(g: &MultiGraph, starts: &[usize], ell: usize, seed: u64, tracing: bool) -> SampleResult {
    let policy = CapacityPolicy::hybrid(vec![Vec::new(); g.n()], None);
    sample_walks_with(g, starts, ell, seed, tracing, policy, 0)
        .expect("uncapped global sampling cannot fail")
}

pub fn sample_walks_with(
    g: &MultiGraph,
    starts: &[usize],
    ell: usize,
    seed: u64,
    tracing: bool,
    policy: CapacityPolicy,
    first_round: u64,
) -> Result<SampleResult, crate::error::SimError> {
    let schedule = Schedule::new(ell);
    let protocol = SamplingProtocol { schedule, tracing };
    let states = (0..g.n())
        .map(|v| SampleNode {
            slots: g.slots(v),
            starts: starts[v],
            held: Vec::new(),
            results: Vec::new(),
        })
        .collect();
    let mut sim = Simulation::new(&protocol, states, policy, seed).starting_at(first_round);
    sim.run(schedule.rounds())?;
    let out = sim.finish();
    Ok(SampleResult {
        per_origin: out.states.into_iter().map(|s| s.results).collect(),
        log: out.log,
        schedule,
        rounds: schedule.rounds(),
    })
}
