//! Synchronous-round message passing with per-node capacity limits.
//!
//! A message sent in round `r` sits in the receiver's inbox when the
//! receiver steps in round `r + 1`. Capacity overflow drops a uniform random
//! subset: first at the sender, then at the receiver.

use std::fmt::Write as _;

use rand::seq::index;
use rayon::prelude::*;

use crate::error::SimError;
use crate::graph::NodeId;
use crate::rng::{purpose, stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Local,
    Global,
}

impl Channel {
    fn index(self) -> usize {
        match self {
            Channel::Local => 0,
            Channel::Global => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Local => "local",
            Channel::Global => "global",
        }
    }
}

/// A protocol payload. `id_count` is the number of node ids carried, which
/// the payload limit of a [`CapacityPolicy`] bounds.
pub trait Message: Clone + Send + Sync {
    fn tag(&self) -> &'static str;

    fn id_count(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<M> {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub channel: Channel,
    pub payload: M,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    /// Every node sends and receives at most `cap` messages per round.
    Ncc0 { cap: usize },
    /// One message per local edge and direction per round; at most
    /// `global_cap` global messages sent and received per node and round.
    /// `None` lifts the global cap (the round statistics still record maxima).
    Hybrid {
        local: Vec<Vec<NodeId>>,
        global_cap: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityPolicy {
    pub model: Model,
    /// Maximum number of ids per payload, if enforced.
    pub payload_limit: Option<usize>,
}

impl CapacityPolicy {
    pub fn ncc0(cap: usize) -> Self {
        assert!(cap > 0, "capacity must be positive");
        CapacityPolicy {
            model: Model::Ncc0 { cap },
            payload_limit: None,
        }
    }

    /// Hybrid policy over the given local adjacency (lists are sorted and
    /// deduplicated here).
    pub fn hybrid(mut local: Vec<Vec<NodeId>>, global_cap: Option<usize>) -> Self {
        if let Some(c) = global_cap {
            assert!(c > 0, "capacity must be positive");
        }
        for list in &mut local {
            list.sort_unstable();
            list.dedup();
        }
        CapacityPolicy {
            model: Model::Hybrid { local, global_cap },
            payload_limit: None,
        }
    }

    pub fn with_payload_limit(mut self, ids: usize) -> Self {
        self.payload_limit = Some(ids);
        self
    }

    fn global_cap(&self) -> Option<usize> {
        match &self.model {
            Model::Ncc0 { cap } => Some(*cap),
            Model::Hybrid { global_cap, .. } => *global_cap,
        }
    }

    fn is_local_edge(&self, u: NodeId, v: NodeId) -> bool {
        match &self.model {
            Model::Ncc0 { .. } => false,
            Model::Hybrid { local, .. } => {
                local.get(u).is_some_and(|l| l.binary_search(&v).is_ok())
            }
        }
    }
}

/// Message counts of one round, indexed by channel (`[local, global]`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundStats {
    pub round: u64,
    pub sent: [usize; 2],
    pub delivered: [usize; 2],
    pub send_dropped: [usize; 2],
    pub recv_dropped: [usize; 2],
    /// Largest number of global messages a single node tried to send.
    pub max_sent_global: usize,
    /// Largest number of global messages addressed to a single node.
    pub max_recv_global: usize,
}

impl RoundStats {
    pub fn dropped(&self) -> usize {
        self.send_dropped.iter().sum::<usize>() + self.recv_dropped.iter().sum::<usize>()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DropLog {
    pub rounds: Vec<RoundStats>,
}

impl DropLog {
    pub fn total_dropped(&self) -> usize {
        self.rounds.iter().map(RoundStats::dropped).sum()
    }

    pub fn total_sent(&self) -> usize {
        self.rounds.iter().map(|r| r.sent[0] + r.sent[1]).sum()
    }

    /// Running total of drops after each round.
    pub fn cumulative_dropped(&self) -> Vec<usize> {
        self.rounds
            .iter()
            .scan(0, |acc, r| {
                *acc += r.dropped();
                Some(*acc)
            })
            .collect()
    }

    pub fn max_sent_global(&self) -> usize {
        self.rounds.iter().map(|r| r.max_sent_global).max().unwrap_or(0)
    }

    pub fn max_recv_global(&self) -> usize {
        self.rounds.iter().map(|r| r.max_recv_global).max().unwrap_or(0)
    }

    pub fn extend(&mut self, other: DropLog) {
        self.rounds.extend(other.rounds);
    }
}

/// Keeps a uniform random subset of `cap` items, preserving their order.
fn keep_uniform<T>(items: Vec<T>, cap: usize, rng: &mut StreamRng) -> (Vec<T>, usize) {
    let len = items.len();
    if len <= cap {
        return (items, 0);
    }
    let mut keep = vec![false; len];
    for i in index::sample(rng, len, cap) {
        keep[i] = true;
    }
    let kept = items
        .into_iter()
        .zip(keep)
        .filter_map(|(x, k)| k.then_some(x))
        .collect();
    (kept, len - cap)
}

/// Delivers one round of envelopes. `outboxes[v]` holds the envelopes sent
/// by `v`; the result holds each node's inbox, ordered by sender id and then
/// by outbox position.
pub fn run_round<M: Message>(
    outboxes: Vec<Vec<Envelope<M>>>,
    policy: &CapacityPolicy,
    seed: u64,
    round: u64,
) -> Result<(Vec<Vec<Envelope<M>>>, RoundStats), SimError> {
    let n = outboxes.len();
    for (slot, outbox) in outboxes.iter().enumerate() {
        for e in outbox {
            if e.sender != slot {
                return Err(SimError::SenderMismatch {
                    round,
                    slot,
                    sender: e.sender,
                });
            }
            if e.receiver >= n {
                return Err(SimError::UnknownReceiver {
                    round,
                    sender: e.sender,
                    receiver: e.receiver,
                });
            }
            if e.channel == Channel::Local && !policy.is_local_edge(e.sender, e.receiver) {
                return Err(SimError::IllegalLocalEdge {
                    round,
                    sender: e.sender,
                    receiver: e.receiver,
                });
            }
            if let Some(limit) = policy.payload_limit {
                let ids = e.payload.id_count();
                if ids > limit {
                    return Err(SimError::PayloadTooLarge { round, ids, limit });
                }
            }
        }
    }

    let global_cap = policy.global_cap();
    let mut stats = RoundStats {
        round,
        ..Default::default()
    };

    // Sender side.
    let filtered: Vec<(Vec<Envelope<M>>, [usize; 2], [usize; 2])> = outboxes
        .into_par_iter()
        .enumerate()
        .map(|(v, outbox)| {
            let mut sent = [0; 2];
            let mut dropped = [0; 2];
            if outbox.is_empty() {
                return (outbox, sent, dropped);
            }
            let mut rng = stream(seed, v as u64, round, purpose::SEND_DROP);
            let (mut local, global): (Vec<_>, Vec<_>) =
                outbox.into_iter().partition(|e| e.channel == Channel::Local);
            sent[0] = local.len();
            sent[1] = global.len();
            let (mut kept, d) = match global_cap {
                Some(cap) => keep_uniform(global, cap, &mut rng),
                None => (global, 0),
            };
            dropped[1] = d;
            if !local.is_empty() {
                // At most one message per local edge and direction.
                local.sort_by_key(|e| e.receiver);
                let mut start = 0;
                while start < local.len() {
                    let r = local[start].receiver;
                    let end = start + local[start..].partition_point(|e| e.receiver == r);
                    let pick = if end - start > 1 {
                        dropped[0] += end - start - 1;
                        start + rand::Rng::random_range(&mut rng, 0..end - start)
                    } else {
                        start
                    };
                    kept.push(local[pick].clone());
                    start = end;
                }
            }
            (kept, sent, dropped)
        })
        .collect();

    let mut arrivals: Vec<Vec<Envelope<M>>> = (0..n).map(|_| Vec::new()).collect();
    for (kept, sent, dropped) in filtered {
        stats.max_sent_global = stats.max_sent_global.max(sent[1]);
        for c in 0..2 {
            stats.sent[c] += sent[c];
            stats.send_dropped[c] += dropped[c];
        }
        for e in kept {
            arrivals[e.receiver].push(e);
        }
    }

    // Receiver side.
    let received: Vec<(Vec<Envelope<M>>, usize, usize)> = arrivals
        .into_par_iter()
        .enumerate()
        .map(|(v, mut inbox)| {
            inbox.sort_by_key(|e| e.sender);
            let global_count = inbox.iter().filter(|e| e.channel == Channel::Global).count();
            match global_cap {
                Some(cap) if global_count > cap => {
                    let mut rng = stream(seed, v as u64, round, purpose::RECV_DROP);
                    let (local, global): (Vec<_>, Vec<_>) =
                        inbox.into_iter().partition(|e| e.channel == Channel::Local);
                    let (kept, d) = keep_uniform(global, cap, &mut rng);
                    let mut merged: Vec<_> = local.into_iter().chain(kept).collect();
                    merged.sort_by_key(|e| e.sender);
                    (merged, global_count, d)
                }
                _ => (inbox, global_count, 0),
            }
        })
        .collect();

    let mut inboxes = Vec::with_capacity(n);
    for (inbox, global_count, dropped) in received {
        stats.max_recv_global = stats.max_recv_global.max(global_count);
        stats.recv_dropped[1] += dropped;
        for e in &inbox {
            stats.delivered[e.channel.index()] += 1;
        }
        if let Some(cap) = global_cap {
            let g = inbox.iter().filter(|e| e.channel == Channel::Global).count();
            assert!(g <= cap, "receiver capacity exceeded");
        }
        inboxes.push(inbox);
    }
    for c in 0..2 {
        debug_assert_eq!(
            stats.delivered[c] + stats.send_dropped[c] + stats.recv_dropped[c],
            stats.sent[c]
        );
    }
    Ok((inboxes, stats))
}

/// Per-node view handed to a protocol step.
pub struct StepCtx<M> {
    pub node: NodeId,
    pub round: u64,
    /// Stream keyed by `(seed, node, round)`.
    pub rng: StreamRng,
    outbox: Vec<Envelope<M>>,
}

impl<M> StepCtx<M> {
    pub fn new(node: NodeId, round: u64, seed: u64) -> Self {
        StepCtx {
            node,
            round,
            rng: stream(seed, node as u64, round, purpose::STEP),
            outbox: Vec::new(),
        }
    }

    pub fn send(&mut self, to: NodeId, payload: M) {
        self.push(to, Channel::Global, payload);
    }

    pub fn send_local(&mut self, to: NodeId, payload: M) {
        self.push(to, Channel::Local, payload);
    }

    fn push(&mut self, receiver: NodeId, channel: Channel, payload: M) {
        self.outbox.push(Envelope {
            sender: self.node,
            receiver,
            channel,
            payload,
        });
    }

    pub fn into_outbox(self) -> Vec<Envelope<M>> {
        self.outbox
    }
}

/// A per-node state machine.
pub trait Protocol: Sync {
    type State: Send + Sync;
    type Msg: Message;

    fn step(&self, ctx: &mut StepCtx<Self::Msg>, state: &mut Self::State, inbox: &[Envelope<Self::Msg>]);
}

/// A running simulation: node states, pending inboxes and the drop log.
pub struct Simulation<'p, P: Protocol> {
    protocol: &'p P,
    pub states: Vec<P::State>,
    inboxes: Vec<Vec<Envelope<P::Msg>>>,
    policy: CapacityPolicy,
    seed: u64,
    round: u64,
    parallel: bool,
    pub log: DropLog,
    trace: Option<String>,
}

impl<'p, P: Protocol> Simulation<'p, P> {
    pub fn new(protocol: &'p P, states: Vec<P::State>, policy: CapacityPolicy, seed: u64) -> Self {
        let n = states.len();
        Simulation {
            protocol,
            states,
            inboxes: (0..n).map(|_| Vec::new()).collect(),
            policy,
            seed,
            round: 0,
            parallel: true,
            log: DropLog::default(),
            trace: None,
        }
    }

    /// Evaluate node steps one after another instead of on the thread pool.
    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(String::new());
        self
    }

    /// Starts round numbering at `round` (used when chaining phases).
    pub fn starting_at(mut self, round: u64) -> Self {
        self.round = round;
        self
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn policy(&self) -> &CapacityPolicy {
        &self.policy
    }

    pub fn pending(&self) -> usize {
        self.inboxes.iter().map(Vec::len).sum()
    }

    /// Runs one round: every node steps on its inbox, then the outboxes are
    /// delivered. Returns the number of messages sent.
    pub fn step_round(&mut self) -> Result<usize, SimError> {
        let round = self.round;
        let seed = self.seed;
        let protocol = self.protocol;
        let inboxes = std::mem::take(&mut self.inboxes);
        let step = |(v, (state, inbox)): (usize, (&mut P::State, Vec<Envelope<P::Msg>>))| {
            let mut ctx = StepCtx::new(v, round, seed);
            protocol.step(&mut ctx, state, &inbox);
            ctx.into_outbox()
        };
        let outboxes: Vec<_> = if self.parallel {
            self.states
                .par_iter_mut()
                .zip(inboxes.into_par_iter())
                .enumerate()
                .map(step)
                .collect()
        } else {
            self.states
                .iter_mut()
                .zip(inboxes)
                .enumerate()
                .map(step)
                .collect()
        };
        let (inboxes, stats) = run_round(outboxes, &self.policy, seed, round)?;
        if let Some(trace) = &mut self.trace {
            for inbox in &inboxes {
                for e in inbox {
                    let _ = writeln!(
                        trace,
                        "{} {} {} {} {}",
                        round,
                        e.sender,
                        e.receiver,
                        e.channel.as_str(),
                        e.payload.tag()
                    );
                }
            }
        }
        let sent = stats.sent[0] + stats.sent[1];
        self.log.rounds.push(stats);
        self.inboxes = inboxes;
        self.round += 1;
        Ok(sent)
    }

    pub fn run(&mut self, rounds: usize) -> Result<(), SimError> {
        for _ in 0..rounds {
            self.step_round()?;
        }
        Ok(())
    }

    /// Steps until a round sends nothing, at most `max_rounds` rounds.
    /// Returns the number of rounds executed.
    pub fn run_until_quiet(&mut self, max_rounds: usize) -> Result<usize, SimError> {
        for r in 0..max_rounds {
            if self.step_round()? == 0 {
                return Ok(r + 1);
            }
        }
        Ok(max_rounds)
    }

    pub fn finish(self) -> SimOutcome<P::State> {
        SimOutcome {
            states: self.states,
            log: self.log,
            trace: self.trace,
            rounds: self.round,
        }
    }
}

#[derive(Debug)]
pub struct SimOutcome<S> {
    pub states: Vec<S>,
    pub log: DropLog,
    pub trace: Option<String>,
    /// Round counter after the last executed round.
    pub rounds: u64,
}

/// Runs `protocol` for exactly `rounds` rounds.
pub fn run_protocol<P: Protocol>(
    protocol: &P,
    states: Vec<P::State>,
    policy: CapacityPolicy,
    rounds: usize,
    seed: u64,
) -> Result<SimOutcome<P::State>, SimError> {
    let mut sim = Simulation::new(protocol, states, policy, seed);
    sim.run(rounds)?;
    Ok(sim.finish())
}
