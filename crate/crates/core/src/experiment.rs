//! Batch experiments: configuration, pipeline execution, CSV artifacts,
//! verification against the sequential oracles, and calibration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::PipelineError;
use crate::expander::{create_expander, EvolveOptions, MetricsConfig, CSV_HEADER};
use crate::graph::{make_benign, undirected_view, KnowledgeGraph};
use crate::hybrid::{self, HybridConfig};
use crate::metrics;
use crate::oracle;
use crate::profile::{Profile, ProfileKind};
use crate::rng::derive;
use crate::sampling::sample_walks_with;
use crate::sim::CapacityPolicy;
use crate::topology::{self, Topology};
use crate::tree::{bfs_lowest_id, well_formed_tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Expander,
    Components,
    SpanningTree,
    Bicc,
    Mis,
    Metrics,
}

impl FromStr for Pipeline {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "expander" => Ok(Pipeline::Expander),
            "components" => Ok(Pipeline::Components),
            "spanning-tree" => Ok(Pipeline::SpanningTree),
            "bicc" => Ok(Pipeline::Bicc),
            "mis" => Ok(Pipeline::Mis),
            "metrics" => Ok(Pipeline::Metrics),
            other => Err(PipelineError::BadSpec(format!("unknown pipeline {other:?}"))),
        }
    }
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pipeline::Expander => "expander",
            Pipeline::Components => "components",
            Pipeline::SpanningTree => "spanning-tree",
            Pipeline::Bicc => "bicc",
            Pipeline::Mis => "mis",
            Pipeline::Metrics => "metrics",
        })
    }
}

/// Parses `all`, `none` or a comma list of `spectral`, `exact_phi`,
/// `diameter`, `min_cut`.
pub fn parse_metrics(s: &str) -> Result<MetricsConfig, PipelineError> {
    match s.trim() {
        "all" => return Ok(MetricsConfig::ALL),
        "none" => return Ok(MetricsConfig::NONE),
        _ => {}
    }
    let mut m = MetricsConfig::NONE;
    for part in s.split(',') {
        match part.trim() {
            "spectral" => m.spectral = true,
            "exact_phi" => m.exact_phi = true,
            "diameter" => m.diameter = true,
            "min_cut" => m.min_cut = true,
            other => return Err(PipelineError::BadSpec(format!("unknown metric {other:?}"))),
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub n: usize,
    pub profile: Profile,
    pub seed: u64,
    pub seeds: usize,
    pub pipeline: Pipeline,
    pub out: Option<PathBuf>,
    pub verify: bool,
    /// Expander runs dump an envelope trace.
    pub trace: bool,
    pub metrics: MetricsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: Topology::Path,
            n: 64,
            profile: Profile::desk(),
            seed: 0,
            seeds: 1,
            pipeline: Pipeline::Expander,
            out: None,
            verify: false,
            trace: false,
            metrics: MetricsConfig::ALL,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, PipelineError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(PipelineError::BadSpec(format!("bad boolean {v:?} for {key}"))),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, PipelineError> {
    v.parse()
        .map_err(|_| PipelineError::BadSpec(format!("bad value {v:?} for {key}")))
}

impl ExperimentConfig {
    /// Parses a `key=value` configuration. `profile` selects the base
    /// profile wherever it appears; the custom keys `delta_multiplier`,
    /// `lambda_multiplier`, `l_multiplier` and `c`, as well as every profile
    /// file key, override it.
    pub fn from_kv(text: &str) -> Result<Self, PipelineError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::BadSpec(format!("line {}: expected key=value", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = ExperimentConfig::default();
        if let Some((_, v)) = pairs.iter().rev().find(|(k, _)| k == "profile") {
            cfg.profile = Profile::of_kind(v.parse()?);
        }
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key other than `profile`.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), PipelineError> {
        match key {
            "profile" => {}
            "topology" => self.topology = v.parse()?,
            "n" => self.n = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "seeds" => self.seeds = parse_num(key, v)?,
            "pipeline" => self.pipeline = v.parse()?,
            "out" => self.out = Some(PathBuf::from(v)),
            "verify" => self.verify = parse_bool(key, v)?,
            "trace" => self.trace = parse_bool(key, v)?,
            "metrics" => self.metrics = parse_metrics(v)?,
            "delta_multiplier" => self.customize("delta_factor", v)?,
            "lambda_multiplier" => self.customize("lambda_factor", v)?,
            "l_multiplier" => self.customize("evolutions_factor", v)?,
            "c" => self.customize("spanner_c", v)?,
            other => self.customize(other, v)?,
        }
        Ok(())
    }

    fn customize(&mut self, key: &str, v: &str) -> Result<(), PipelineError> {
        self.profile.set(key, v)?;
        if self.profile.kind != ProfileKind::Paper {
            self.profile.kind = ProfileKind::Custom;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let sized = !matches!(self.topology, Topology::Dumbbell(_) | Topology::File(_));
        if sized && self.n == 0 {
            return Err(PipelineError::BadSpec("n must be at least 1".into()));
        }
        if self.seeds == 0 {
            return Err(PipelineError::BadSpec("seeds must be at least 1".into()));
        }
        Ok(())
    }

    fn seed_list(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.seeds as u64).map(|i| self.seed + i)
    }
}

/// Named text artifacts and the invariant failures of one experiment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperimentOutput {
    pub files: Vec<(String, String)>,
    pub failures: Vec<String>,
}

impl ExperimentOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            std::fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

fn max_degree(g: &KnowledgeGraph) -> usize {
    undirected_view(g).max_nonloop_degree()
}

fn log2n(n: usize) -> f64 {
    (n.max(2) as f64).log2()
}

/// Runs the configured pipeline for every seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, PipelineError> {
    cfg.validate()?;
    let mut out = ExperimentOutput::default();
    let mut summary = format!(
        "pipeline: {}\ntopology: {}\nn: {}\nprofile: {}\nseed: {}\nseeds: {}\n",
        cfg.pipeline, cfg.topology, cfg.n, cfg.profile.kind, cfg.seed, cfg.seeds
    );
    match cfg.pipeline {
        Pipeline::Expander => run_expander(cfg, &mut out, &mut summary)?,
        Pipeline::Components => run_components(cfg, &mut out, &mut summary)?,
        Pipeline::SpanningTree => run_spanning(cfg, &mut out, &mut summary)?,
        Pipeline::Bicc => run_bicc(cfg, &mut out, &mut summary)?,
        Pipeline::Mis => run_mis(cfg, &mut out, &mut summary)?,
        Pipeline::Metrics => run_metrics(cfg, &mut out, &mut summary)?,
    }
    let _ = writeln!(summary, "failures: {}", out.failures.len());
    for f in &out.failures {
        let _ = writeln!(summary, "failure: {f}");
    }
    out.files.push(("summary.txt".into(), summary));
    Ok(out)
}

fn run_expander(cfg: &ExperimentConfig, out: &mut ExperimentOutput, summary: &mut String) -> Result<(), PipelineError> {
    let mut csv = format!("{CSV_HEADER}\n");
    let mut trace = String::new();
    let mut diameters = Vec::new();
    let (mut within, mut wf_ok) = (0, 0);
    let (mut node_rounds, mut congested, mut drop_free) = (0, 0, 0);
    for s in cfg.seed_list() {
        let g = topology::generate(&cfg.topology, cfg.n, s)?;
        let n = g.n();
        let params = cfg.profile.params(n, max_degree(&g));
        let opts = EvolveOptions {
            metrics: cfg.metrics,
            engine_trace: cfg.trace,
            ..EvolveOptions::default()
        };
        let run = create_expander(&g, &params, derive(s, 11), &opts)?;
        for r in &run.reports[1..] {
            let _ = writeln!(csv, "{}", r.csv_row());
            node_rounds += r.node_rounds;
            congested += r.congested_node_rounds;
        }
        if run.log.total_dropped() == 0 {
            drop_free += 1;
        }
        if let Some(t) = run.trace {
            let _ = writeln!(trace, "# seed {s}");
            trace.push_str(&t);
        }
        let diameter = match run.reports.last().and_then(|r| r.diameter) {
            Some(d) => d,
            None => metrics::diameter(&run.graph),
        };
        let Some(d) = diameter else {
            out.failures.push(format!("seed {s}: G_L is disconnected"));
            diameters.push(f64::INFINITY);
            continue;
        };
        diameters.push(d as f64);
        if d as f64 <= cfg.profile.diameter_c * log2n(n) {
            within += 1;
        }
        let bfs = bfs_lowest_id(&run.graph)?;
        let wf = well_formed_tree(&bfs);
        let wf_good = wf.max_children() <= 2 && wf.max_depth() as f64 <= cfg.profile.wf_c * log2n(n);
        if wf_good {
            wf_ok += 1;
        } else {
            out.failures.push(format!(
                "seed {s}: well-formed tree has {} children and depth {}",
                wf.max_children(),
                wf.max_depth()
            ));
        }
        if cfg.verify {
            let dist = metrics::bfs_distances(&run.graph, bfs.root());
            if (0..n).any(|v| bfs.depth(v) != dist[v]) {
                out.failures.push(format!("seed {s}: BFS tree depths differ from BFS distances"));
            }
        }
    }
    diameters.sort_by(f64::total_cmp);
    let _ = writeln!(
        summary,
        "diameter_min: {}\ndiameter_median: {}\ndiameter_p90: {}\ndiameter_max: {}",
        quantile(&diameters, 0.0),
        quantile(&diameters, 0.5),
        quantile(&diameters, 0.9),
        quantile(&diameters, 1.0)
    );
    let _ = writeln!(
        summary,
        "diameter_within_bound: {within}/{}\nwell_formed_ok: {wf_ok}/{}",
        cfg.seeds, cfg.seeds
    );
    let frac = if node_rounds == 0 {
        0.0
    } else {
        congested as f64 / node_rounds as f64
    };
    let _ = writeln!(summary, "congested_fraction: {frac:.6}\ndrop_free_seeds: {drop_free}/{}", cfg.seeds);
    out.files.push(("evolution.csv".into(), csv));
    if cfg.trace {
        out.files.push(("trace.txt".into(), trace));
    }
    Ok(())
}

fn run_components(cfg: &ExperimentConfig, out: &mut ExperimentOutput, summary: &mut String) -> Result<(), PipelineError> {
    let hy = cfg.profile.hybrid();
    let mut csv = String::from("seed,node,component\n");
    for s in cfg.seed_list() {
        let g = topology::generate(&cfg.topology, cfg.n, s)?;
        let cc = hybrid::connected_components(&g, &hy, derive(s, 12))?;
        for (v, c) in cc.component.iter().enumerate() {
            let _ = writeln!(csv, "{s},{v},{c}");
        }
        let _ = writeln!(summary, "seed {s}: components {} rounds {}", cc.count, cc.rounds);
        if cfg.verify && cc.component != oracle::components(&g) {
            out.failures.push(format!("seed {s}: component ids differ from union-find"));
        }
    }
    out.files.push(("components.csv".into(), csv));
    Ok(())
}

fn run_spanning(cfg: &ExperimentConfig, out: &mut ExperimentOutput, summary: &mut String) -> Result<(), PipelineError> {
    let hy = cfg.profile.hybrid();
    for s in cfg.seed_list() {
        let g = topology::generate(&cfg.topology, cfg.n, s)?;
        let st = hybrid::spanning_tree(&g, &hy, derive(s, 13))?;
        let tree = KnowledgeGraph::from_edges(g.n(), &st.edges)?;
        out.files.push((format!("spanning_tree_seed{s}.txt"), tree.to_text()));
        let _ = writeln!(
            summary,
            "seed {s}: edges {} walk {} max_multiplicity {} rounds {}",
            st.edges.len(),
            st.walk_len,
            st.max_multiplicity,
            st.rounds
        );
        if let Some(v) = oracle::spanning_tree_violation(&g, &st.edges) {
            out.failures.push(format!("seed {s}: {v}"));
        }
    }
    Ok(())
}

fn run_bicc(cfg: &ExperimentConfig, out: &mut ExperimentOutput, summary: &mut String) -> Result<(), PipelineError> {
    let hy = cfg.profile.hybrid();
    let mut csv = String::from("seed,u,v,component\n");
    for s in cfg.seed_list() {
        let g = topology::generate(&cfg.topology, cfg.n, s)?;
        let b = hybrid::biconnected_components(&g, &hy, derive(s, 14))?;
        for (&(u, v), c) in b.edges.iter().zip(&b.edge_component) {
            let _ = writeln!(csv, "{s},{u},{v},{c}");
        }
        let _ = writeln!(
            summary,
            "seed {s}: blocks {} cut_vertices {:?} bridges {:?} biconnected {} rounds {}",
            b.count, b.cut_vertices, b.bridges, b.is_biconnected, b.rounds
        );
        if cfg.verify {
            let o = oracle::blocks(&g);
            if !oracle::same_partition(&b.edge_component, &o.edge_block) {
                out.failures.push(format!("seed {s}: edge blocks differ from the low-link oracle"));
            }
            if b.cut_vertices != o.cut_vertices {
                out.failures.push(format!("seed {s}: cut vertices differ from the low-link oracle"));
            }
            if b.bridges != o.bridges {
                out.failures.push(format!("seed {s}: bridges differ from the low-link oracle"));
            }
        }
    }
    out.files.push(("bicc.csv".into(), csv));
    Ok(())
}

fn run_mis(cfg: &ExperimentConfig, out: &mut ExperimentOutput, summary: &mut String) -> Result<(), PipelineError> {
    let hy = cfg.profile.hybrid();
    let mut csv = String::from("seed,node,in\n");
    for s in cfg.seed_list() {
        let g = topology::generate(&cfg.topology, cfg.n, s)?;
        let m = hybrid::mis(&g, max_degree(&g), &hy, derive(s, 15))?;
        for (v, &x) in m.in_set.iter().enumerate() {
            let _ = writeln!(csv, "{s},{v},{}", u8::from(x));
        }
        let _ = writeln!(
            summary,
            "seed {s}: in {} undecided {} max_undecided_component {} rounds {}",
            m.in_set.iter().filter(|&&x| x).count(),
            m.undecided,
            m.max_undecided_component,
            m.rounds
        );
        if let Some(v) = oracle::mis_violation(&g, &m.in_set) {
            out.failures.push(format!("seed {s}: {v}"));
        }
    }
    out.files.push(("mis.csv".into(), csv));
    Ok(())
}

/// Header of the static metrics row.
pub const METRICS_HEADER: &str = "seed,n,m,max_degree,delta,spectral_lb,exact_phi_or_blank,diameter,min_cut_or_blank";

fn run_metrics(cfg: &ExperimentConfig, out: &mut ExperimentOutput, _summary: &mut String) -> Result<(), PipelineError> {
    let mut csv = format!("{METRICS_HEADER}\n");
    for s in cfg.seed_list() {
        let g = topology::generate(&cfg.topology, cfg.n, s)?;
        let d = max_degree(&g);
        let params = cfg.profile.params(g.n(), d);
        let b = make_benign(&g, &params)?;
        let r = crate::expander::EvolutionReport::measure(0, &b, params.delta, cfg.metrics);
        let diameter = match r.diameter {
            Some(Some(x)) => x.to_string(),
            Some(None) => "inf".into(),
            None => String::new(),
        };
        let _ = writeln!(
            csv,
            "{s},{},{},{d},{},{},{},{diameter},{}",
            g.n(),
            g.edge_count(),
            params.delta,
            r.spectral_lb.map(|x| format!("{x:.6}")).unwrap_or_default(),
            r.exact_phi.map(|x| format!("{x:.6}")).unwrap_or_default(),
            r.min_cut.map(|x| x.to_string()).unwrap_or_default()
        );
    }
    out.files.push(("metrics.csv".into(), csv));
    Ok(())
}

/// Margin applied to measured maxima before they are pinned.
pub const CALIBRATION_HEADROOM: f64 = 1.25;

/// `x · CALIBRATION_HEADROOM` rounded up to a multiple of `step`.
fn pin(x: f64, step: f64) -> f64 {
    let steps = (x * CALIBRATION_HEADROOM / step).ceil();
    // Round to two decimals to keep the profile file readable.
    (steps * step * 100.0).round() / 100.0
}

/// Measures the calibrated thresholds on seeds disjoint from the acceptance
/// seeds and returns the updated profile with a report.
pub fn calibrate(base: &Profile, first_seed: u64, seeds: usize) -> Result<(Profile, String), PipelineError> {
    let mut p = base.clone();
    let mut report = String::new();
    let seed_list: Vec<u64> = (0..seeds as u64).map(|i| first_seed + i).collect();

    // Diameter and well-formed depth on paths.
    let (mut diam_ratio, mut wf_ratio) = (0.0f64, 0.0f64);
    for n in [128, 256, 512] {
        let g = topology::generate(&Topology::Path, n, 0)?;
        let params = p.params(n, 2);
        for &s in &seed_list {
            let opts = EvolveOptions {
                metrics: MetricsConfig::NONE,
                ..EvolveOptions::default()
            };
            let run = create_expander(&g, &params, derive(s, 11), &opts)?;
            let d = metrics::diameter(&run.graph).ok_or(PipelineError::Disconnected)?;
            let wf = well_formed_tree(&bfs_lowest_id(&run.graph)?.into_forest());
            diam_ratio = diam_ratio.max(d as f64 / log2n(n));
            wf_ratio = wf_ratio.max(wf.max_depth() as f64 / log2n(n));
        }
    }
    p.diameter_c = pin(diam_ratio, 0.05);
    p.wf_c = pin(wf_ratio, 0.05).max(0.05);
    let _ = writeln!(report, "diameter ratio max {diam_ratio:.4} -> diameter_c {}", p.diameter_c);
    let _ = writeln!(report, "well-formed depth ratio max {wf_ratio:.4} -> wf_c {}", p.wf_c);

    // Survivors of hybrid sampling relative to c_launch · Δ.
    let hy = p.hybrid();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &s in &seed_list {
        let n = 128;
        let params = hy.params(n, 2, n);
        let g = make_benign(&topology::generate(&Topology::Path, n, 0)?, &crate::graph::BenignParams { lambda: 1, ..params })?;
        let launch = crate::expander::HybridOptions {
            c_launch: hy.c_launch,
            ..Default::default()
        }
        .launch(&params);
        let policy = CapacityPolicy::hybrid(vec![Vec::new(); n], None);
        let r = sample_walks_with(&g, &vec![launch; n], params.ell, derive(s, 21), false, policy, 0)?;
        let ratio = r.survivors() as f64 / n as f64 / (hy.c_launch * params.delta as f64);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    p.survivor_low = ((lo / CALIBRATION_HEADROOM / 0.05).floor() * 5.0).round() / 100.0;
    p.survivor_high = pin(hi, 0.05);
    let _ = writeln!(report, "survivor ratio in [{lo:.4}, {hi:.4}] -> [{}, {}]", p.survivor_low, p.survivor_high);

    // Spanner out-degree on the hub benchmark.
    let mut t = 0;
    for &s in &seed_list {
        let g = topology::hub_graph(512, 128, s);
        let sp = hybrid::build_spanner(&g, 512, hy.spanner_c, derive(s, 22))?;
        t = t.max(sp.max_out_degree(512));
    }
    p.spanner_t = pin(t as f64, 1.0) as usize;
    let _ = writeln!(report, "spanner max out-degree {t} -> spanner_t {}", p.spanner_t);

    // Component rounds with small components in a large graph.
    let mut round_ratio = 0.0f64;
    for &s in seed_list.iter().take(2) {
        let g = topology::random_islands(256, 16, 16, s);
        let cc = hybrid::connected_components_with(&g, 16, &hy, derive(s, 23), false)?;
        let scale = 16f64.log2() + log2n(4096).log2();
        round_ratio = round_ratio.max(cc.rounds as f64 / scale);
    }
    p.cc_round_c = pin(round_ratio, 0.5);
    let _ = writeln!(report, "component rounds ratio {round_ratio:.4} -> cc_round_c {}", p.cc_round_c);

    // Walk multiplicity of the spanning-tree expansion.
    let mut mult = 0.0f64;
    for &s in &seed_list {
        for n in [64, 128, 256] {
            let g = topology::random_connected(n, n, s);
            let st = hybrid::spanning_tree(&g, &hy, derive(s, 24))?;
            mult = mult.max(st.max_multiplicity as f64 / log2n(n).powi(4));
        }
    }
    p.multiplicity_c = pin(mult, 0.005);
    let _ = writeln!(report, "multiplicity ratio {mult:.5} -> multiplicity_c {}", p.multiplicity_c);

    // Undecided components after shattering.
    let mut sizes = Vec::new();
    for &s in &seed_list {
        for n in [128, 256, 512] {
            let g = topology::random_gnp(n, 8.0 / n as f64, s);
            let m = hybrid::mis(&g, max_degree(&g), &hy, derive(s, 25))?;
            sizes.push(m.max_undecided_component);
            let g = topology::generate(&Topology::RandomRegular(3), n, s)?;
            let m = hybrid::mis(&g, max_degree(&g), &hy, derive(s, 25))?;
            sizes.push(m.max_undecided_component);
        }
    }
    sizes.sort_unstable();
    let bound = (pin(*sizes.last().unwrap_or(&0) as f64, 1.0) as usize).max(1);
    p.mis_component_bound = bound;
    let _ = writeln!(report, "undecided component sizes {sizes:?} -> mis_component_bound {bound}");
    Ok((p, report))
}

/// Hybrid configuration of a profile with an explicit walk length.
pub fn hybrid_with_ell(profile: &Profile, ell: usize) -> HybridConfig {
    HybridConfig {
        ell: Some(ell),
        ..profile.hybrid()
    }
}
