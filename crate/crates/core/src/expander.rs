//! Graph evolutions: every node launches walk tokens, each endpoint accepts
//! a bounded number of arrivals, and accepted tokens become the edges of
//! the next graph.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;

use crate::error::{PipelineError, SimError};
use crate::graph::{is_benign_structure, make_benign, BenignParams, KnowledgeGraph, MultiGraph, NodeId};
use crate::metrics;
use crate::rng::{derive, purpose, stream};
use crate::sampling::{self, step_token};
use crate::sim::{CapacityPolicy, DropLog, Envelope, Message, Protocol, Simulation, StepCtx};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkToken {
    pub origin: NodeId,
    pub age: usize,
    /// Node reached after each step; `trace.len() == age`.
    pub trace: Option<Vec<NodeId>>,
}

impl WalkToken {
    pub fn new(origin: NodeId, tracing: bool) -> Self {
        WalkToken {
            origin,
            age: 0,
            trace: tracing.then(Vec::new),
        }
    }

    fn walk(&self) -> Option<Vec<NodeId>> {
        self.trace.as_ref().map(|t| {
            let mut w = vec![self.origin];
            w.extend_from_slice(t);
            w
        })
    }
}

/// Moves every token one uniform slot step. `tokens[v]` are the tokens held
/// by `v`; randomness comes from the `(seed, v, round)` streams.
pub fn walk_step(g: &MultiGraph, tokens: Vec<Vec<WalkToken>>, seed: u64, round: u64) -> Vec<Vec<WalkToken>> {
    let mut out: Vec<Vec<WalkToken>> = vec![Vec::new(); g.n()];
    for (v, held) in tokens.into_iter().enumerate() {
        let slots = g.slots(v);
        let mut rng = stream(seed, v as u64, round, purpose::STEP);
        for mut t in held {
            let to = step_token(&slots, &mut t.age, &mut t.trace, &mut rng);
            out[to].push(t);
        }
    }
    out
}

/// An evolved non-loop edge together with the walk that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracedEdge {
    pub origin: NodeId,
    pub endpoint: NodeId,
    /// Walk in the previous graph from `origin` to `endpoint`.
    pub walk: Vec<NodeId>,
}

/// Which metrics an evolution computes for its report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricsConfig {
    pub spectral: bool,
    pub exact_phi: bool,
    pub diameter: bool,
    pub min_cut: bool,
}

impl MetricsConfig {
    pub const ALL: MetricsConfig = MetricsConfig {
        spectral: true,
        exact_phi: true,
        diameter: true,
        min_cut: true,
    };
    pub const NONE: MetricsConfig = MetricsConfig {
        spectral: false,
        exact_phi: false,
        diameter: false,
        min_cut: false,
    };
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig::ALL
    }
}

/// Per-iteration record. `spectral_lb` is the lower Cheeger bound and
/// serves as the conductance proxy.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionReport {
    pub iter: usize,
    pub n: usize,
    pub delta: usize,
    pub spectral_lb: Option<f64>,
    pub exact_phi: Option<f64>,
    /// `Some(None)` marks a measured disconnected graph.
    pub diameter: Option<Option<usize>>,
    pub max_nonloop_degree: usize,
    pub min_cut: Option<usize>,
    pub dropped_msgs: usize,
    /// Node-rounds observed while tokens were walking.
    pub node_rounds: usize,
    /// Node-rounds holding more than `3Δ/8` tokens.
    pub congested_node_rounds: usize,
    pub max_in_flight: usize,
    /// Nodes that formed fewer edges than requested (hybrid evolutions).
    pub short_nodes: usize,
    pub rounds: usize,
}

pub const CSV_HEADER: &str =
    "iter,n,delta,spectral_lb,exact_phi_or_blank,diameter,max_nonloop_degree,min_cut_or_blank,dropped_msgs";

fn opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl EvolutionReport {
    fn blank(iter: usize, g: &MultiGraph, delta: usize) -> Self {
        EvolutionReport {
            iter,
            n: g.n(),
            delta,
            spectral_lb: None,
            exact_phi: None,
            diameter: None,
            max_nonloop_degree: g.max_nonloop_degree(),
            min_cut: None,
            dropped_msgs: 0,
            node_rounds: 0,
            congested_node_rounds: 0,
            max_in_flight: 0,
            short_nodes: 0,
            rounds: 0,
        }
    }

    /// Report for `g` as the state after iteration `iter`, with metrics.
    pub fn measure(iter: usize, g: &MultiGraph, delta: usize, cfg: MetricsConfig) -> Self {
        let mut r = EvolutionReport::blank(iter, g, delta);
        if cfg.spectral && g.n() <= metrics::DENSE_LIMIT {
            r.spectral_lb = metrics::spectral_bounds(g).ok().map(|s| s.lower);
        }
        if cfg.exact_phi && g.n() <= metrics::EXACT_PHI_LIMIT {
            r.exact_phi = metrics::conductance_exact(g, 1.0).ok().map(|c| c.phi);
        }
        if cfg.diameter {
            r.diameter = Some(metrics::diameter(g));
        }
        if cfg.min_cut && g.n() <= crate::graph::MIN_CUT_LIMIT {
            r.min_cut = Some(metrics::min_cut(g).map(|c| c.value).unwrap_or(0));
        }
        r
    }

    pub fn csv_row(&self) -> String {
        let diameter = match self.diameter {
            Some(Some(d)) => d.to_string(),
            Some(None) => "inf".to_string(),
            None => String::new(),
        };
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            self.iter,
            self.n,
            self.delta,
            self.spectral_lb.map(|x| format!("{x:.6}")).unwrap_or_default(),
            self.exact_phi.map(|x| format!("{x:.6}")).unwrap_or_default(),
            diameter,
            self.max_nonloop_degree,
            opt(self.min_cut),
            self.dropped_msgs
        );
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvolveOptions {
    pub tracing: bool,
    /// Per-node send/receive cap; `None` means `Δ`.
    pub cap: Option<usize>,
    pub metrics: MetricsConfig,
    /// Record one line per delivered envelope.
    pub engine_trace: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            tracing: false,
            cap: None,
            metrics: MetricsConfig::ALL,
            engine_trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub graph: MultiGraph,
    pub report: EvolutionReport,
    /// Non-loop edges with their walks, when tracing.
    pub provenance: Option<Vec<TracedEdge>>,
    pub log: DropLog,
    /// Envelope trace `round sender receiver channel tag`, when requested.
    pub trace: Option<String>,
}

#[derive(Debug, Clone)]
enum EvoMsg {
    Walk(WalkToken),
    Accept { walk: Option<Vec<NodeId>> },
}

impl Message for EvoMsg {
    fn tag(&self) -> &'static str {
        match self {
            EvoMsg::Walk(_) => "walk",
            EvoMsg::Accept { .. } => "accept",
        }
    }

    fn id_count(&self) -> usize {
        match self {
            EvoMsg::Walk(t) => 1 + t.trace.as_ref().map_or(0, Vec::len),
            EvoMsg::Accept { walk } => 1 + walk.as_ref().map_or(0, Vec::len),
        }
    }
}

struct EvoNode {
    slots: Vec<NodeId>,
    held: Vec<WalkToken>,
    /// Accepted own tokens (loops) and delivered accepts (edges).
    edges: Vec<(NodeId, Option<Vec<NodeId>>)>,
    node_rounds: usize,
    congested: usize,
    max_in_flight: usize,
}

struct EvolveProtocol {
    ell: usize,
    launch: usize,
    accept: usize,
    tracing: bool,
}

impl Protocol for EvolveProtocol {
    type State = EvoNode;
    type Msg = EvoMsg;

    fn step(&self, ctx: &mut StepCtx<EvoMsg>, state: &mut EvoNode, inbox: &[Envelope<EvoMsg>]) {
        let v = ctx.node;
        let r = ctx.round as usize;
        let mut tokens = std::mem::take(&mut state.held);
        for e in inbox {
            match &e.payload {
                EvoMsg::Walk(t) => tokens.push(t.clone()),
                EvoMsg::Accept { walk } => state.edges.push((e.sender, walk.clone())),
            }
        }
        if r == 0 {
            tokens.extend((0..self.launch).map(|_| WalkToken::new(v, self.tracing)));
        } else if r <= self.ell {
            state.node_rounds += 1;
            state.max_in_flight = state.max_in_flight.max(tokens.len());
            if tokens.len() > self.accept {
                state.congested += 1;
            }
        }
        if r < self.ell {
            for mut t in tokens {
                let to = step_token(&state.slots, &mut t.age, &mut t.trace, &mut ctx.rng);
                if to == v {
                    state.held.push(t);
                } else {
                    ctx.send(to, EvoMsg::Walk(t));
                }
            }
        } else if r == self.ell {
            let k = tokens.len().min(self.accept);
            let mut picks = index::sample(&mut ctx.rng, tokens.len(), k).into_vec();
            picks.sort_unstable();
            for i in picks {
                let t = &tokens[i];
                if t.origin == v {
                    state.edges.push((v, t.walk()));
                } else {
                    ctx.send(t.origin, EvoMsg::Accept { walk: t.walk() });
                }
            }
        }
    }
}

/// Assembles the next graph from the delivered accepts: each origin adds
/// one edge per accept, loops for its own returned tokens, then pads.
fn assemble(
    n: usize,
    delta: usize,
    per_node: Vec<Vec<(NodeId, Option<Vec<NodeId>>)>>,
    tracing: bool,
) -> (MultiGraph, Option<Vec<TracedEdge>>) {
    let mut g = MultiGraph::new(n);
    let mut provenance = tracing.then(Vec::new);
    for (origin, edges) in per_node.into_iter().enumerate() {
        for (endpoint, walk) in edges {
            g.add_edge(origin, endpoint, 1);
            if origin != endpoint {
                if let (Some(p), Some(walk)) = (&mut provenance, walk) {
                    p.push(TracedEdge {
                        origin,
                        endpoint,
                        walk,
                    });
                }
            }
        }
    }
    g.pad_loops(delta);
    (g, provenance)
}

/// One evolution with default options and the given tracing flag.
pub fn evolve_once(g: &MultiGraph, params: &BenignParams, seed: u64, tracing: bool) -> Result<Evolution, PipelineError> {
    evolve_once_with(
        g,
        params,
        seed,
        &EvolveOptions {
            tracing,
            ..Default::default()
        },
    )
}

pub fn evolve_once_with(
    g: &MultiGraph,
    params: &BenignParams,
    seed: u64,
    opts: &EvolveOptions,
) -> Result<Evolution, PipelineError> {
    let delta = params.delta;
    if !g.is_regular(delta) || !g.is_lazy(delta) {
        return Err(PipelineError::Invariant(
            "evolution input must be regular and lazy".into(),
        ));
    }
    let protocol = EvolveProtocol {
        ell: params.ell,
        launch: params.tokens_per_node(),
        accept: params.acceptance_limit(),
        tracing: opts.tracing,
    };
    let states = (0..g.n())
        .map(|v| EvoNode {
            slots: g.slots(v),
            held: Vec::new(),
            edges: Vec::new(),
            node_rounds: 0,
            congested: 0,
            max_in_flight: 0,
        })
        .collect();
    let policy = CapacityPolicy::ncc0(opts.cap.unwrap_or(delta));
    let mut sim = Simulation::new(&protocol, states, policy, seed);
    if opts.engine_trace {
        sim = sim.with_trace();
    }
    sim.run(params.ell + 2)?;
    let out = sim.finish();
    let mut node_rounds = 0;
    let mut congested = 0;
    let mut max_in_flight = 0;
    let per_node: Vec<_> = out
        .states
        .into_iter()
        .map(|s| {
            node_rounds += s.node_rounds;
            congested += s.congested;
            max_in_flight = max_in_flight.max(s.max_in_flight);
            s.edges
        })
        .collect();
    let (next, provenance) = assemble(g.n(), delta, per_node, opts.tracing);
    check_structure(&next, delta)?;
    let mut report = EvolutionReport::measure(0, &next, delta, opts.metrics);
    report.dropped_msgs = out.log.total_dropped();
    report.node_rounds = node_rounds;
    report.congested_node_rounds = congested;
    report.max_in_flight = max_in_flight;
    report.rounds = out.rounds as usize;
    Ok(Evolution {
        graph: next,
        report,
        provenance,
        log: out.log,
        trace: out.trace,
    })
}

fn check_structure(g: &MultiGraph, delta: usize) -> Result<(), PipelineError> {
    if !is_benign_structure(g, delta) || g.max_nonloop_degree() > delta / 2 {
        return Err(PipelineError::Invariant(format!(
            "evolved graph lost regularity or laziness (max non-loop degree {})",
            g.max_nonloop_degree()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ExpanderRun {
    /// The final graph `G_L`.
    pub graph: MultiGraph,
    /// Report for `G_0` (iteration 0) followed by one per evolution.
    pub reports: Vec<EvolutionReport>,
    pub log: DropLog,
    /// Envelope traces of all evolutions, each headed by `# evolution i`.
    pub trace: Option<String>,
}

/// Runs the benign transform followed by `L` evolutions.
pub fn create_expander(
    g0: &KnowledgeGraph,
    params: &BenignParams,
    seed: u64,
    opts: &EvolveOptions,
) -> Result<ExpanderRun, PipelineError> {
    params.validate()?;
    let mut g = make_benign(g0, params)?;
    let mut reports = vec![EvolutionReport::measure(0, &g, params.delta, opts.metrics)];
    let mut log = DropLog::default();
    let mut trace = opts.engine_trace.then(String::new);
    for i in 1..=params.evolutions {
        let evo = evolve_once_with(&g, params, derive(seed, i as u64), opts)?;
        let mut report = evo.report;
        report.iter = i;
        reports.push(report);
        log.extend(evo.log);
        if let (Some(all), Some(t)) = (&mut trace, evo.trace) {
            let _ = writeln!(all, "# evolution {i}");
            all.push_str(&t);
        }
        g = evo.graph;
    }
    Ok(ExpanderRun {
        graph: g,
        reports,
        log,
        trace,
    })
}

/// Knobs of a hybrid evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridOptions {
    /// Tokens launched per node are `c_launch · Δ · ℓ`.
    pub c_launch: f64,
    /// Global per-node cap; `None` lifts it.
    pub global_cap: Option<usize>,
    pub tracing: bool,
    pub metrics: MetricsConfig,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions {
            c_launch: 0.125,
            global_cap: None,
            tracing: false,
            metrics: MetricsConfig::NONE,
        }
    }
}

impl HybridOptions {
    pub fn launch(&self, params: &BenignParams) -> usize {
        ((self.c_launch * (params.delta * Self::ell(params)) as f64).ceil() as usize).max(1)
    }

    fn ell(params: &BenignParams) -> usize {
        params.ell.max(1).next_power_of_two()
    }
}

#[derive(Debug, Clone)]
enum HandshakeMsg {
    Request,
    Ack,
}

impl Message for HandshakeMsg {
    fn tag(&self) -> &'static str {
        match self {
            HandshakeMsg::Request => "request",
            HandshakeMsg::Ack => "ack",
        }
    }

}

struct HandshakeNode {
    survivors: Vec<sampling::SampledWalk>,
    /// Walks of requests this node sent, by endpoint, in send order.
    pending: Vec<(NodeId, Option<Vec<NodeId>>)>,
    edges: Vec<(NodeId, Option<Vec<NodeId>>)>,
    short: bool,
}

struct Handshake {
    pick: usize,
    accept: usize,
}

impl Protocol for Handshake {
    type State = HandshakeNode;
    type Msg = HandshakeMsg;

    fn step(&self, ctx: &mut StepCtx<HandshakeMsg>, state: &mut HandshakeNode, inbox: &[Envelope<HandshakeMsg>]) {
        let v = ctx.node;
        match ctx.round {
            0 => {
                let survivors = std::mem::take(&mut state.survivors);
                state.short = survivors.len() < self.pick;
                let k = survivors.len().min(self.pick);
                let mut picks = index::sample(&mut ctx.rng, survivors.len(), k).into_vec();
                picks.sort_unstable();
                for i in picks {
                    let w = &survivors[i];
                    if w.endpoint == v {
                        state.edges.push((v, w.walk.clone()));
                    } else {
                        state.pending.push((w.endpoint, w.walk.clone()));
                        ctx.send(w.endpoint, HandshakeMsg::Request);
                    }
                }
            }
            1 => {
                let k = inbox.len().min(self.accept);
                let mut picks = index::sample(&mut ctx.rng, inbox.len(), k).into_vec();
                picks.sort_unstable();
                for i in picks {
                    ctx.send(inbox[i].sender, HandshakeMsg::Ack);
                }
            }
            _ => {
                // Match acks to pending requests by endpoint, in order.
                for e in inbox {
                    if let Some(pos) = state.pending.iter().position(|(w, _)| *w == e.sender) {
                        let (w, walk) = state.pending.swap_remove(pos);
                        state.edges.push((w, walk));
                    }
                }
            }
        }
    }
}

/// One hybrid evolution: stitched `ℓ`-step walks, survivors reported to
/// their origins, each origin requests edges to `Δ/8` survivor endpoints
/// and each endpoint acknowledges at most `3Δ/8` requests.
pub fn evolve_once_hybrid(
    g: &MultiGraph,
    params: &BenignParams,
    seed: u64,
    opts: &HybridOptions,
) -> Result<Evolution, PipelineError> {
    if params.ell <= 1 {
        return evolve_once_with(
            g,
            params,
            seed,
            &EvolveOptions {
                tracing: opts.tracing,
                cap: opts.global_cap,
                metrics: opts.metrics,
                engine_trace: false,
            },
        );
    }
    let delta = params.delta;
    if !g.is_regular(delta) || !g.is_lazy(delta) {
        return Err(PipelineError::Invariant(
            "evolution input must be regular and lazy".into(),
        ));
    }
    let n = g.n();
    let launch = opts.launch(params);
    let policy = CapacityPolicy::hybrid(vec![Vec::new(); n], opts.global_cap);
    let sample = sampling::sample_walks_with(g, &vec![launch; n], params.ell, seed, opts.tracing, policy.clone(), 0)?;
    let sample_rounds = sample.rounds;
    let mut log = sample.log;

    let protocol = Handshake {
        pick: params.tokens_per_node(),
        accept: params.acceptance_limit(),
    };
    let states = sample
        .per_origin
        .into_iter()
        .map(|survivors| HandshakeNode {
            survivors,
            pending: Vec::new(),
            edges: Vec::new(),
            short: false,
        })
        .collect();
    let mut sim = Simulation::new(&protocol, states, policy, derive(seed, 0x4a4a))
        .starting_at(0);
    sim.run(3).map_err(|e: SimError| PipelineError::Sim(e))?;
    let out = sim.finish();
    log.extend(out.log);
    let short_nodes = out.states.iter().filter(|s| s.short).count();
    let per_node = out.states.into_iter().map(|s| s.edges).collect();
    let (next, provenance) = assemble(n, delta, per_node, opts.tracing);
    check_structure(&next, delta)?;
    let mut report = EvolutionReport::measure(0, &next, delta, opts.metrics);
    report.dropped_msgs = log.total_dropped();
    report.short_nodes = short_nodes;
    report.rounds = sample_rounds + 3;
    Ok(Evolution {
        graph: next,
        report,
        provenance,
        log,
        trace: None,
    })
}

/// Draws `ℓ`-step walk endpoints directly (no engine), for oracles.
pub fn direct_walk_endpoint(slots: &[Vec<NodeId>], start: NodeId, ell: usize, rng: &mut impl Rng) -> NodeId {
    let mut v = start;
    for _ in 0..ell {
        let s = &slots[v];
        v = s[rng.random_range(0..s.len())];
    }
    v
}
