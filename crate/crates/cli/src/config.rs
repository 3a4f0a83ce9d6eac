//! Experiment configs for `genharnack run`: a tagged union mirroring the
//! scriptable subcommands. Unknown fields are rejected and every config
//! round-trips through serialization unchanged.

use std::path::PathBuf;

use genharnack::drift::DriftSpec;
use genharnack::levelsets::CoveringConsts;
use serde::{Deserialize, Serialize};

fn default_extremal_nodes() -> usize {
    801
}

fn default_radius() -> f64 {
    1.0
}

fn default_dim() -> usize {
    2
}

fn default_one() -> f64 {
    1.0
}

fn default_barrier_nodes() -> usize {
    64
}

fn default_level_ratio() -> f64 {
    6.0
}

fn default_k_max() -> usize {
    64
}

fn default_l_max() -> usize {
    40
}

/// Covering-radii block inside a level-set experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringSection {
    /// Scale entering the leading radius.
    pub a_k1: f64,
    #[serde(default)]
    pub consts: CoveringConsts,
    #[serde(default = "default_l_max")]
    pub l_max: usize,
}

/// One experiment description. The `experiment` tag selects the kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    /// Build the extremal profile and report the endpoint integral.
    Sharpness {
        drift: DriftSpec,
        k: f64,
        #[serde(default = "default_extremal_nodes")]
        nodes: usize,
        #[serde(default)]
        output: Option<PathBuf>,
    },
    /// Evaluate the damped oscillation functional between two log-levels.
    Harnack {
        drift: DriftSpec,
        log_m: f64,
        log_sup: f64,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default)]
        phi_only: bool,
        #[serde(default)]
        output: Option<PathBuf>,
    },
    /// Search the barrier scale and verify it on the annulus.
    Barrier {
        drift: DriftSpec,
        #[serde(default = "default_dim")]
        n: usize,
        #[serde(default = "default_one")]
        lambda_min: f64,
        #[serde(default = "default_one")]
        lambda_max: f64,
        #[serde(default = "default_barrier_nodes")]
        nodes: usize,
        #[serde(default)]
        output: Option<PathBuf>,
    },
    /// Scale sequence plus optional covering radii.
    Levelsets {
        drift: DriftSpec,
        log_m: f64,
        #[serde(default = "default_level_ratio")]
        l: f64,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_k_max")]
        k_max: usize,
        #[serde(default)]
        covering: Option<CoveringSection>,
        #[serde(default)]
        output: Option<PathBuf>,
    },
    /// The full acceptance matrix.
    Suite {
        #[serde(default)]
        output: Option<PathBuf>,
    },
}
