//! Hybrid-model applications: sparse spanners with degree delegation,
//! connected components, spanning trees, biconnected components and
//! maximal independent sets.

pub mod bicc;
pub mod components;
pub mod mis;
pub mod spanner;
pub mod spanning;

pub use bicc::{biconnected_components, BiccOutcome};
pub use components::{connected_components, connected_components_with, ComponentsOutcome};
pub use mis::{mis, MisOutcome};
pub use spanner::{build_spanner, delegate_degrees, Delegation, SpannerOutcome};
pub use spanning::{literal_multiplicity, spanning_tree, SpanningOutcome};

use crate::graph::{ceil_log2, round_up_to, BenignParams};

/// Constants of the hybrid pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridConfig {
    /// Nodes of degree below `spanner_c · log₂ n` keep all their edges.
    pub spanner_c: f64,
    /// Walk length; `None` derives `max(128, ⌈log₂ n⌉²)` rounded up to a
    /// power of two.
    pub ell: Option<usize>,
    /// Lower bound on the evolution degree.
    pub min_delta: usize,
    /// Number of evolutions; `None` derives it from `Δ`, `m` and `ℓ`.
    pub evolutions: Option<usize>,
    /// Tokens launched per node are `c_launch · Δ · ℓ`.
    pub c_launch: f64,
    /// Global cap as a multiple of the per-node launch count; `None` lifts
    /// the cap and only records the maxima.
    pub global_cap_factor: Option<f64>,
    /// Weak-MIS iterations are `mis_c1 · ⌈log₂(d + 1)⌉`.
    pub mis_c1: usize,
    /// Bits per comparison phase of the parallel MIS executions.
    pub mis_block: usize,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            spanner_c: 2.0,
            ell: None,
            min_delta: 64,
            evolutions: None,
            c_launch: 0.125,
            global_cap_factor: Some(4.0),
            mis_c1: 4,
            mis_block: 8,
        }
    }
}

impl HybridConfig {
    /// The constant required by the spanner analysis (`c > 16e`).
    pub const STRICT_SPANNER_C: f64 = 44.0;

    /// Evolution parameters for a delegated graph on `n` nodes with maximum
    /// degree `d_h` and component-size bound `m`.
    pub fn params(&self, n: usize, d_h: usize, m: usize) -> BenignParams {
        let lg = ceil_log2(n).max(1);
        let ell = self
            .ell
            .unwrap_or_else(|| (lg * lg).max(128))
            .max(1)
            .next_power_of_two();
        let delta = round_up_to((2 * d_h + 2).max(self.min_delta), 8);
        let evolutions = self.evolutions.unwrap_or_else(|| {
            let target = ((delta * m.max(2)) as f64).log2();
            let per_step = (ell as f64).sqrt().log2().max(1.0);
            (target / per_step).ceil() as usize + 1
        });
        BenignParams {
            ell,
            delta,
            lambda: 1,
            evolutions: evolutions.max(2),
        }
    }

    pub fn global_cap(&self, launch: usize) -> Option<usize> {
        self.global_cap_factor
            .map(|f| ((f * launch as f64).ceil() as usize).max(1))
    }
}
