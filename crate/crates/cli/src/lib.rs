//! Run-configuration types shared by the `swapfv` binary and its tests.
//!
//! A [`RunConfig`] is the JSON document a user hands to `swapfv run`: the
//! problem block (parsed by the core crate), an engine choice, and the
//! sampling/estimation knobs. The summary JSON echoes the struct verbatim
//! under its `config` key, so any finished run can be reproduced
//! byte-for-byte from its own summary.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use swapfv::{Direction, ProblemConfig, RebirthRule};

/// Which engine a run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineChoice {
    /// Infinite-swapping pair ensemble.
    Ins,
    /// Standard Fleming–Viot in a single direction.
    StandardFv,
    /// Forward/backward pairs coupled by finite-rate location swaps.
    FiniteSwap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    #[default]
    Forward,
    Backward,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Backward => Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RebirthChoice {
    #[default]
    Complementary,
    RoleWeighted,
}

impl From<RebirthChoice> for RebirthRule {
    fn from(r: RebirthChoice) -> Self {
        match r {
            RebirthChoice::Complementary => RebirthRule::Complementary,
            RebirthChoice::RoleWeighted => RebirthRule::RoleWeighted,
        }
    }
}

/// A complete run description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub engine: EngineChoice,
    pub n_pairs: usize,
    pub t_final: f64,
    pub seed: u64,
    /// Consulted by `standard-fv` only; `ins` and `finite-swap` always carry
    /// both roles.
    #[serde(default)]
    pub direction: DirectionArg,
    /// Swap intensity K; required by `finite-swap`, rejected elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap_intensity: Option<f64>,
    /// Keep every `record_stride`-th observation.
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Fraction of the horizon discarded before estimating.
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Bins per axis for the marginal histograms.
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub rebirth: RebirthChoice,
    /// Optional artifact-name prefix, e.g. `cosine` → `cosine_trajectory.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_stem: Option<String>,
}

fn default_stride() -> usize {
    1
}

fn default_burn_in() -> f64 {
    0.1
}

fn default_bins() -> usize {
    50
}

impl RunConfig {
    // The negated comparison rejects NaN intensities.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        match (self.engine, self.swap_intensity) {
            (EngineChoice::FiniteSwap, None) => {
                bail!("engine finite-swap needs a swap_intensity")
            }
            (EngineChoice::FiniteSwap, Some(k)) if !(k > 0.0) || !k.is_finite() => {
                bail!("swap_intensity must be positive and finite (got {k})")
            }
            (engine, Some(_)) if engine != EngineChoice::FiniteSwap => {
                bail!("swap_intensity only applies to the finite-swap engine")
            }
            _ => Ok(()),
        }
    }
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing run configuration {}", path.display()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Accept either a full run configuration or a bare problem block, so one
/// config file can drive a run and its oracle cross-checks.
pub fn load_problem_config(path: &Path) -> Result<ProblemConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(run) = serde_json::from_str::<RunConfig>(&text) {
        return Ok(run.problem);
    }
    serde_json::from_str(&text)
        .with_context(|| format!("parsing problem configuration {}", path.display()))
}
