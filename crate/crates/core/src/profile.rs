//! Parameter profiles: the literal asymptotic constants, the calibrated
//! desk profile, and custom overrides, stored as `key=value` lines.

use std::fmt::Write as _;

use crate::error::PipelineError;
use crate::graph::{ceil_log2, round_up_to, BenignParams};
use crate::hybrid::HybridConfig;

/// The committed desk profile.
pub const DESK_PROFILE: &str = include_str!("../profiles/desk.profile");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Paper,
    Desk,
    Custom,
}

impl std::str::FromStr for ProfileKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "paper" => Ok(ProfileKind::Paper),
            "desk" => Ok(ProfileKind::Desk),
            "custom" => Ok(ProfileKind::Custom),
            other => Err(PipelineError::BadSpec(format!("unknown profile {other:?}"))),
        }
    }
}

impl std::fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProfileKind::Paper => "paper",
            ProfileKind::Desk => "desk",
            ProfileKind::Custom => "custom",
        })
    }
}

/// Walk and degree constants plus the thresholds pinned by calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub kind: ProfileKind,
    pub ell: usize,
    /// `Δ ≥ delta_factor · ⌈log₂ n⌉`.
    pub delta_factor: usize,
    /// `Λ = lambda_factor · ⌈log₂ n⌉`.
    pub lambda_factor: usize,
    /// `L = evolutions_factor · ⌈log₂ n⌉`.
    pub evolutions_factor: usize,
    pub spanner_c: f64,
    pub c_launch: f64,
    pub min_delta: usize,
    pub global_cap_factor: Option<f64>,
    /// `diameter(G_L) ≤ diameter_c · log₂ n`.
    pub diameter_c: f64,
    /// Well-formed tree depth `≤ wf_c · log₂ n`.
    pub wf_c: f64,
    /// Mean hybrid survivors per node lie in `[low, high] · c_launch · Δ`.
    pub survivor_low: f64,
    pub survivor_high: f64,
    /// Spanner out-degree bound on the hub benchmark.
    pub spanner_t: usize,
    /// Component rounds `≤ cc_round_c · (log₂ m + log₂ log₂ n)`.
    pub cc_round_c: f64,
    /// Walk multiplicity `≤ multiplicity_c · log₂⁴ n`.
    pub multiplicity_c: f64,
    /// Weak-MIS iterations are `mis_c1 · ⌈log₂(d + 1)⌉`.
    pub mis_c1: usize,
    /// Largest undecided component after shattering.
    pub mis_component_bound: usize,
}

impl Profile {
    /// Uncalibrated defaults that a profile file overrides.
    pub fn base() -> Self {
        Profile {
            kind: ProfileKind::Custom,
            ell: 16,
            delta_factor: 8,
            lambda_factor: 1,
            evolutions_factor: 4,
            spanner_c: 2.0,
            c_launch: 0.125,
            min_delta: 64,
            global_cap_factor: Some(4.0),
            diameter_c: 1.0,
            wf_c: 1.0,
            survivor_low: 0.5,
            survivor_high: 4.0,
            spanner_t: 32,
            cc_round_c: 32.0,
            multiplicity_c: 0.05,
            mis_c1: 4,
            mis_component_bound: 32,
        }
    }

    pub fn desk() -> Self {
        let mut p = Profile::parse_onto(Profile::base(), DESK_PROFILE).expect("committed desk profile parses");
        p.kind = ProfileKind::Desk;
        p
    }

    /// The desk thresholds with the literal constants of the analysis.
    pub fn paper() -> Self {
        Profile {
            kind: ProfileKind::Paper,
            spanner_c: HybridConfig::STRICT_SPANNER_C,
            ..Profile::desk()
        }
    }

    pub fn of_kind(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::Paper => Profile::paper(),
            ProfileKind::Desk => Profile::desk(),
            ProfileKind::Custom => Profile::base(),
        }
    }

    /// Applies `key=value` lines to `base`. Blank lines and `#` comments
    /// are skipped; unknown keys are errors.
    pub fn parse_onto(mut base: Profile, text: &str) -> Result<Profile, PipelineError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::BadSpec(format!("line {}: expected key=value", i + 1)))?;
            base.set(k.trim(), v.trim())?;
        }
        Ok(base)
    }

    /// Sets one field by its file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, PipelineError> {
            v.parse()
                .map_err(|_| PipelineError::BadSpec(format!("bad value {v:?} for {key}")))
        }
        match key {
            "ell" => self.ell = num(key, value)?,
            "delta_factor" => self.delta_factor = num(key, value)?,
            "lambda_factor" => self.lambda_factor = num(key, value)?,
            "evolutions_factor" => self.evolutions_factor = num(key, value)?,
            "spanner_c" => self.spanner_c = num(key, value)?,
            "c_launch" => self.c_launch = num(key, value)?,
            "min_delta" => self.min_delta = num(key, value)?,
            "global_cap_factor" => {
                self.global_cap_factor = match value {
                    "none" => None,
                    v => Some(num(key, v)?),
                }
            }
            "diameter_c" => self.diameter_c = num(key, value)?,
            "wf_c" => self.wf_c = num(key, value)?,
            "survivor_low" => self.survivor_low = num(key, value)?,
            "survivor_high" => self.survivor_high = num(key, value)?,
            "spanner_t" => self.spanner_t = num(key, value)?,
            "cc_round_c" => self.cc_round_c = num(key, value)?,
            "multiplicity_c" => self.multiplicity_c = num(key, value)?,
            "mis_c1" => self.mis_c1 = num(key, value)?,
            "mis_component_bound" => self.mis_component_bound = num(key, value)?,
            _ => return Err(PipelineError::BadSpec(format!("unknown profile key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# Desk-scale profile. Written by `overlay calibrate`; acceptance tests read it.\n");
        let cap = self
            .global_cap_factor
            .map_or_else(|| "none".to_string(), |f| f.to_string());
        let _ = write!(
            s,
            "ell={}\ndelta_factor={}\nlambda_factor={}\nevolutions_factor={}\nspanner_c={}\nc_launch={}\n\
             min_delta={}\nglobal_cap_factor={}\ndiameter_c={}\nwf_c={}\nsurvivor_low={}\nsurvivor_high={}\n\
             spanner_t={}\ncc_round_c={}\nmultiplicity_c={}\nmis_c1={}\nmis_component_bound={}\n",
            self.ell,
            self.delta_factor,
            self.lambda_factor,
            self.evolutions_factor,
            self.spanner_c,
            self.c_launch,
            self.min_delta,
            cap,
            self.diameter_c,
            self.wf_c,
            self.survivor_low,
            self.survivor_high,
            self.spanner_t,
            self.cc_round_c,
            self.multiplicity_c,
            self.mis_c1,
            self.mis_component_bound
        );
        s
    }

    /// Evolution parameters for `n` nodes of maximum degree `d`.
    pub fn params(&self, n: usize, d: usize) -> BenignParams {
        if self.kind == ProfileKind::Paper {
            return BenignParams::paper(n, d);
        }
        let lg = ceil_log2(n).max(1);
        let lambda = self.lambda_factor.max(1) * lg;
        BenignParams {
            ell: self.ell.max(1),
            delta: round_up_to((self.delta_factor * lg).max(2 * d * lambda).max(8), 8),
            lambda,
            evolutions: (self.evolutions_factor * lg).max(1),
        }
    }

    pub fn hybrid(&self) -> HybridConfig {
        HybridConfig {
            spanner_c: self.spanner_c,
            c_launch: self.c_launch,
            min_delta: self.min_delta,
            global_cap_factor: self.global_cap_factor,
            mis_c1: self.mis_c1,
            ..HybridConfig::default()
        }
    }
}
