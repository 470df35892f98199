//! Connected components: spanner, degree delegation, hybrid evolutions,
//! BFS flooding on the final graph and well-formed trees.

use crate::error::PipelineError;
use crate::expander::{evolve_once_hybrid, EvolutionReport, HybridOptions, MetricsConfig, TracedEdge};
use crate::graph::{BenignParams, KnowledgeGraph, MultiGraph, NodeId};
use crate::hybrid::spanner::{build_spanner, delegate_degrees, Delegation, SpannerOutcome};
use crate::hybrid::HybridConfig;
use crate::rng::derive;
use crate::sim::DropLog;
use crate::tree::{bfs_flood, well_formed_tree_with_rounds, RootedForest};

#[derive(Debug, Clone)]
pub struct ComponentsOutcome {
    /// Component label of each node: the lowest id in its component.
    pub component: Vec<NodeId>,
    pub count: usize,
    /// BFS forest of the final evolved graph, rooted at the lowest ids.
    pub bfs: RootedForest,
    /// Well-formed tree per component.
    pub tree: RootedForest,
    pub spanner: SpannerOutcome,
    pub delegation: Delegation,
    pub params: BenignParams,
    /// `G_0` (the padded delegated graph) through `G_L`, when tracing;
    /// otherwise only `G_L`.
    pub levels: Vec<MultiGraph>,
    /// Traced edges of each evolution, when tracing.
    pub provenance: Vec<Vec<TracedEdge>>,
    pub reports: Vec<EvolutionReport>,
    pub bfs_rounds: usize,
    pub rounds: usize,
    pub log: DropLog,
}

impl ComponentsOutcome {
    pub fn final_graph(&self) -> &MultiGraph {
        self.levels.last().expect("at least one level")
    }

    /// Components as sorted node lists, ordered by lowest id.
    pub fn groups(&self) -> Vec<Vec<NodeId>> {
        group_by_label(&self.component)
    }
}

/// Sorted node lists per label, ordered by their smallest member.
pub fn group_by_label(label: &[usize]) -> Vec<Vec<NodeId>> {
    let mut map = std::collections::BTreeMap::<usize, Vec<NodeId>>::new();
    for (v, &l) in label.iter().enumerate() {
        map.entry(l).or_default().push(v);
    }
    let mut groups: Vec<_> = map.into_values().collect();
    groups.sort_by_key(|g| g[0]);
    groups
}

/// Connected components of `g` without tracing, with the trivial bound
/// `m = n` on component sizes.
pub fn connected_components(g: &KnowledgeGraph, cfg: &HybridConfig, seed: u64) -> Result<ComponentsOutcome, PipelineError> {
    connected_components_with(g, g.n(), cfg, seed, false)
}

/// Connected components of `g` whose components have at most `m` nodes;
/// with `tracing` every evolved edge keeps the walk it came from.
pub fn connected_components_with(
    g: &KnowledgeGraph,
    m: usize,
    cfg: &HybridConfig,
    seed: u64,
    tracing: bool,
) -> Result<ComponentsOutcome, PipelineError> {
    let n = g.n();
    let m = m.clamp(1, n.max(1));
    let spanner = build_spanner(g, m, cfg.spanner_c, derive(seed, 1))?;
    let delegation = delegate_degrees(n, &spanner.edges);
    let d_h = delegation.h.max_nonloop_degree();
    let params = cfg.params(n, d_h, m);
    params.validate()?;

    let mut current = delegation.h.clone();
    current.pad_loops(params.delta);
    let mut levels = vec![current.clone()];
    let mut provenance = Vec::new();
    let mut reports = Vec::new();
    let mut log = spanner.log.clone();
    let mut rounds = spanner.rounds;
    let probe = HybridOptions {
        c_launch: cfg.c_launch,
        ..HybridOptions::default()
    };
    let opts = HybridOptions {
        c_launch: cfg.c_launch,
        global_cap: cfg.global_cap(probe.launch(&params)),
        tracing,
        metrics: MetricsConfig::NONE,
    };
    for i in 1..=params.evolutions {
        let evo = evolve_once_hybrid(&current, &params, derive(seed, 100 + i as u64), &opts)?;
        let mut report = evo.report;
        report.iter = i;
        rounds += report.rounds;
        reports.push(report);
        log.extend(evo.log);
        if let Some(p) = evo.provenance {
            provenance.push(p);
        }
        current = evo.graph;
        if tracing {
            levels.push(current.clone());
        }
    }
    if !tracing {
        levels = vec![current.clone()];
    }

    let bfs = bfs_flood(&current, derive(seed, 2))?;
    let (tree, wf_rounds) = well_formed_tree_with_rounds(&bfs.forest);
    log.extend(bfs.log);
    rounds += bfs.rounds + wf_rounds;
    let component = bfs.forest.root_of();
    let count = bfs.forest.roots().len();
    Ok(ComponentsOutcome {
        component,
        count,
        bfs_rounds: bfs.rounds,
        bfs: bfs.forest,
        tree,
        spanner,
        delegation,
        params,
        levels,
        provenance,
        reports,
        rounds,
        log,
    })
}
