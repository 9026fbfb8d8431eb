//! Declarative Monte Carlo experiments.
//!
//! An [`ExperimentSpec`] names one statistical check of the model and how to
//! run it. [`run_experiment`] draws the replicates in parallel, aggregates
//! them in replicate order and records every statistic and verdict in an
//! [`ExperimentSummary`]. Results depend on the root seed only, never on the
//! thread count.

mod json;
mod kinds;
pub mod stats;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};
use crate::model::{BridgeParams, TimeGrid};
use crate::path_stats::WindowSpec;
use crate::samplers::{SamplerKind, SeedSpec};

pub use json::to_canonical_string;

/// Verdict thresholds. Monte Carlo comparisons against closed forms use
/// standard-error multiples; the rest are fixed bands.
pub mod thresholds {
    pub const MAX_Z: f64 = 4.0;
    pub const CONSISTENCY_FINAL_MEDIAN_ERROR: f64 = 0.15;
    pub const CLASSIFICATION_MIN_ACCURACY: f64 = 0.95;
    pub const QV_REL_TOL: f64 = 0.03;
    /// Nonincreasing steps required among consecutive dyadic levels: all
    /// comparisons but this many.
    pub const QV_ALLOWED_INCREASES: usize = 1;
    pub const BRIDGE_TERMINAL_P99: f64 = 0.06;
    pub const DIVERGENCE_THRESHOLD: f64 = 10.0;
    pub const DIVERGENCE_MAX_SMALL: f64 = 0.01;
    pub const DIVERGENCE_PLUS_BAND: (f64, f64) = (0.44, 0.56);
    pub const LIL_SUP_BAND: (f64, f64) = (0.5, 1.3);
    pub const RESCALED_MAX_KS: f64 = 0.03;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CovarianceCheck,
    ConsistencySweep,
    Classification,
    QvDichotomy,
    TerminalBehavior,
    LilDiagnostic,
    RescaledLimit,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::CovarianceCheck => "covariance-check",
            ExperimentKind::ConsistencySweep => "consistency-sweep",
            ExperimentKind::Classification => "classification",
            ExperimentKind::QvDichotomy => "qv-dichotomy",
            ExperimentKind::TerminalBehavior => "terminal-behavior",
            ExperimentKind::LilDiagnostic => "lil-diagnostic",
            ExperimentKind::RescaledLimit => "rescaled-limit",
        }
    }
}

/// One parameter triple or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsSpec {
    One(BridgeParams),
    Many(Vec<BridgeParams>),
}

impl ParamsSpec {
    pub fn as_slice(&self) -> &[BridgeParams] {
        match self {
            ParamsSpec::One(p) => std::slice::from_ref(p),
            ParamsSpec::Many(v) => v,
        }
    }
}

/// How observation grids are built up to a horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridPolicy {
    /// Equal steps of (about) `step`, ending exactly at the horizon.
    Uniform { step: f64 },
    /// Points `T - T * ratio^k` below the horizon, then the horizon.
    Geometric { ratio: f64 },
    /// `2^max_level` equal steps; coarser levels down to `min_level` are
    /// nested subsamples.
    Dyadic { min_level: u32, max_level: u32 },
}

impl GridPolicy {
    pub fn build(&self, horizon_t: f64, t_end: f64) -> Result<TimeGrid> {
        match *self {
            GridPolicy::Uniform { step } => {
                let raw = t_end / step;
                let steps = if (raw - raw.round()).abs() < 1e-9 {
                    raw.round()
                } else {
                    raw.ceil()
                };
                TimeGrid::uniform(t_end, steps.max(1.0) as usize)
            }
            GridPolicy::Geometric { ratio } => TimeGrid::geometric(horizon_t, ratio, t_end),
            GridPolicy::Dyadic { max_level, .. } => TimeGrid::dyadic(t_end, max_level),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub params: ParamsSpec,
    pub grid: GridPolicy,
    pub replicates: usize,
    #[serde(default)]
    pub horizons: Vec<f64>,
    #[serde(default)]
    pub candidates: Vec<f64>,
    pub root_seed: u64,
    #[serde(default)]
    pub sampler: SamplerKind,
    /// Divergence threshold for terminal-behavior with alpha < 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Observation window for lil-diagnostic and terminal-behavior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| BridgeError::Argument(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BridgeError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn params(&self) -> &[BridgeParams] {
        self.params.as_slice()
    }

    /// Checks every field; errors name the offending field path.
    pub fn validate(&self) -> Result<()> {
        let arg = |field: String, msg: String| Err(BridgeError::Argument(format!("{field}: {msg}")));
        if self.replicates < 1 {
            return arg("replicates".into(), "must be >= 1".into());
        }
        let params = self.params();
        if params.is_empty() {
            return arg("params".into(), "at least one parameter triple required".into());
        }
        for (i, p) in params.iter().enumerate() {
            if let Err(e) = p.validate() {
                return arg(format!("params[{i}]"), e.to_string());
            }
        }
        let horizon_min = params.iter().map(|p| p.horizon).fold(f64::INFINITY, f64::min);
        for (i, h) in self.horizons.iter().enumerate() {
            if !(*h > 0.0 && *h < horizon_min) {
                return arg(
                    format!("horizons[{i}]"),
                    format!("{h} must lie in (0, T) with T = {horizon_min}"),
                );
            }
        }
        match self.grid {
            GridPolicy::Uniform { step } if !(step > 0.0 && step.is_finite()) => {
                return arg("grid.step".into(), format!("{step} must be > 0"));
            }
            GridPolicy::Geometric { ratio } if !(ratio > 0.0 && ratio < 1.0) => {
                return arg("grid.ratio".into(), format!("{ratio} must be in (0, 1)"));
            }
            GridPolicy::Dyadic { min_level, max_level } if min_level > max_level || max_level > 24 => {
                return arg(
                    "grid".into(),
                    format!("dyadic levels {min_level}..{max_level} invalid (need min <= max <= 24)"),
                );
            }
            _ => {}
        }
        if let Some(w) = &self.window {
            if let Err(e) = w.check_within(horizon_min) {
                return arg("window".into(), e.to_string());
            }
        }
        if let Some(th) = self.threshold {
            if !(th > 0.0) {
                return arg("threshold".into(), format!("{th} must be > 0"));
            }
        }
        let need_horizons = |n: Option<usize>| -> Result<()> {
            match n {
                Some(n) if self.horizons.len() != n => arg(
                    "horizons".into(),
                    format!("{} expects exactly {n} horizon(s)", self.kind.name()),
                ),
                None if self.horizons.is_empty() => arg("horizons".into(), "at least one horizon required".into()),
                _ => Ok(()),
            }
        };
        match self.kind {
            ExperimentKind::CovarianceCheck => need_horizons(Some(1))?,
            ExperimentKind::ConsistencySweep => {
                need_horizons(None)?;
                if self.horizons.windows(2).any(|w| w[1] <= w[0]) {
                    return arg("horizons".into(), "must be strictly increasing".into());
                }
            }
            ExperimentKind::Classification => {
                need_horizons(Some(1))?;
                if self.candidates.is_empty() {
                    return arg("candidates".into(), "classification needs candidates".into());
                }
            }
            ExperimentKind::QvDichotomy => {
                need_horizons(Some(1))?;
                if !matches!(self.grid, GridPolicy::Dyadic { .. }) {
                    return arg("grid.policy".into(), "qv-dichotomy needs a dyadic grid".into());
                }
            }
            ExperimentKind::TerminalBehavior => {
                need_horizons(Some(1))?;
                if let Some((i, _)) = params.iter().enumerate().find(|(_, p)| p.alpha == 0.0) {
                    return arg(
                        format!("params[{i}].alpha"),
                        "terminal-behavior needs alpha != 0".into(),
                    );
                }
            }
            ExperimentKind::LilDiagnostic => {
                if self.window.is_none() {
                    return arg("window".into(), "lil-diagnostic needs a window".into());
                }
                if let Some((i, _)) = params.iter().enumerate().find(|(_, p)| p.alpha < 0.5) {
                    return arg(format!("params[{i}].alpha"), "lil-diagnostic needs alpha >= 1/2".into());
                }
            }
            ExperimentKind::RescaledLimit => {
                need_horizons(Some(1))?;
                if let Some((i, _)) = params.iter().enumerate().find(|(_, p)| p.alpha >= 0.5) {
                    return arg(format!("params[{i}].alpha"), "rescaled-limit needs alpha < 1/2".into());
                }
            }
        }
        Ok(())
    }
}

/// One pass/fail verdict derived from a recorded statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub cell: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn within(name: &str, cell: &str, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = value.is_finite() && lower.is_none_or(|lo| value >= lo) && upper.is_none_or(|hi| value <= hi);
        Check {
            name: name.into(),
            cell: cell.into(),
            value,
            lower,
            upper,
            passed,
        }
    }

    /// A boolean property; `value` is 1 when it holds.
    pub fn holds(name: &str, cell: &str, ok: bool) -> Self {
        Check {
            name: name.into(),
            cell: cell.into(),
            value: if ok { 1.0 } else { 0.0 },
            lower: Some(1.0),
            upper: None,
            passed: ok,
        }
    }
}

/// Statistics for one parameter triple of an experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub params: Option<BridgeParams>,
    pub failures: u64,
    pub stats: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub counts: BTreeMap<String, Vec<u64>>,
}

impl Cell {
    fn new(index: usize, params: &BridgeParams) -> Self {
        Cell {
            label: format!(
                "cell{index}:alpha={},sigma={},T={}",
                params.alpha, params.sigma, params.horizon
            ),
            params: Some(*params),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub kind: ExperimentKind,
    pub root_seed: u64,
    pub replicates: usize,
    pub failures: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub cells: Vec<Cell>,
    /// Not persisted; persisted summaries depend only on the spec.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl PartialEq for ExperimentSummary {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.root_seed == other.root_seed
            && self.replicates == other.replicates
            && self.failures == other.failures
            && self.passed == other.passed
            && self.checks == other.checks
            && self.cells == other.cells
    }
}

impl ExperimentSummary {
    pub fn check<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name == name)
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        let value =
            serde_json::to_value(self).map_err(|e| BridgeError::Numerical(format!("summary serialization: {e}")))?;
        Ok(to_canonical_string(&value))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BridgeError::Argument(format!("experiment summary: {e}")))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write each replicate's path as `cell{c}_rep{i}.csv` here.
    pub dump_dir: Option<PathBuf>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentSummary> {
    run_experiment_with(spec, &RunOptions::default())
}

pub fn run_experiment_with(spec: &ExperimentSpec, options: &RunOptions) -> Result<ExperimentSummary> {
    spec.validate()?;
    if let Some(dir) = &options.dump_dir {
        std::fs::create_dir_all(dir).map_err(|e| BridgeError::io(dir, e))?;
    }
    let start = Instant::now();
    let ctx = kinds::Context { spec, options };
    let (cells, checks) = match spec.kind {
        ExperimentKind::CovarianceCheck => kinds::covariance_check(&ctx)?,
        ExperimentKind::ConsistencySweep => kinds::consistency_sweep(&ctx)?,
        ExperimentKind::Classification => kinds::classification(&ctx)?,
        ExperimentKind::QvDichotomy => kinds::qv_dichotomy(&ctx)?,
        ExperimentKind::TerminalBehavior => kinds::terminal_behavior(&ctx)?,
        ExperimentKind::LilDiagnostic => kinds::lil_diagnostic(&ctx)?,
        ExperimentKind::RescaledLimit => kinds::rescaled_limit(&ctx)?,
    };
    let failures = cells.iter().map(|c| c.failures).sum();
    let passed = checks.iter().all(|c| c.passed);
    Ok(ExperimentSummary {
        kind: spec.kind,
        root_seed: spec.root_seed,
        replicates: spec.replicates,
        failures,
        passed,
        checks,
        cells,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs `f` for every replicate of one cell, in parallel, returning results
/// in replicate order.
pub(crate) fn replicate<T, F>(spec: &ExperimentSpec, cell: usize, f: F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(SeedSpec) -> Result<T> + Sync,
{
    (0..spec.replicates)
        .into_par_iter()
        .map(|i| f(SeedSpec::new(spec.root_seed, ((cell as u64) << 32) | i as u64)))
        .collect()
}

/// Writes the summary as canonical JSON.
pub fn persist_summary(summary: &ExperimentSummary, out_path: &Path) -> Result<()> {
    let text = summary.to_canonical_json()?;
    std::fs::write(out_path, text).map_err(|e| BridgeError::io(out_path, e))
}

pub fn load_summary(path: &Path) -> Result<ExperimentSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| BridgeError::io(path, e))?;
    ExperimentSummary::from_json(&text)
}
