// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration: flat TOML with one section per command.
//!
//! ```toml
//! n_steps = 10000
//! seed = 7
//!
//! [simulate]
//! n_spins = 100
//! half_duration = 17.8
//! family = "power"
//! r = 3.0
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use critquench::optimize::OptimizerConfig;
use critquench::pulse::DEFAULT_STEPS;
use critquench::OptimizerConfig64;

/// Starting exponents for the multi-start power-law search.
pub const DEFAULT_INITIAL_R: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
/// Iteration cap per start.
pub const DEFAULT_START_ITERS: usize = 200;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub n_steps: Option<usize>,
    pub seed: Option<u64>,
    pub optimizer: Option<OptimizerSection>,
    pub simulate: Option<SimulateConfig>,
    pub sweep: Option<SweepConfig>,
    pub landscape: Option<LandscapeConfig>,
    pub qsl: Option<QslConfig>,
    pub robustness: Option<RobustnessConfig>,
    pub optimize_free: Option<FreeConfig>,
}

impl Config {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).context("invalid config")
    }

    /// Reads a TOML config, or the `config` field of a JSON run manifest.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let cfg = manifest
                .get("config")
                .ok_or_else(|| anyhow!("{} has no `config` field", path.display()))?;
            return serde_json::from_value(cfg.clone()).context("invalid config in manifest");
        }
        Self::from_toml(&text)
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps.unwrap_or(DEFAULT_STEPS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn optimizer(&self) -> OptimizerSection {
        self.optimizer.clone().unwrap_or_default()
    }

    pub fn section<'a, S>(&'a self, s: &'a Option<S>, name: &str) -> anyhow::Result<&'a S> {
        s.as_ref()
            .ok_or_else(|| anyhow!("config has no [{name}] section"))
    }
}

/// T from either `half_duration` or τ = T/N.
pub fn resolve_half_duration(
    half_duration: Option<f64>,
    tau: Option<f64>,
    n_spins: usize,
) -> anyhow::Result<f64> {
    let t = match (half_duration, tau) {
        (Some(t), None) => t,
        (None, Some(tau)) => tau * n_spins as f64,
        _ => bail!("give exactly one of `half_duration` and `tau`"),
    };
    if !(t > 0.0 && t.is_finite()) {
        bail!("half duration must be positive, got {t}");
    }
    Ok(t)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub initial_r: Option<Vec<f64>>,
    pub max_iters: Option<usize>,
    pub step_size: Option<f64>,
    pub grad_tol: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
}

impl OptimizerSection {
    pub fn starts(&self) -> Vec<f64> {
        self.initial_r
            .clone()
            .unwrap_or_else(|| DEFAULT_INITIAL_R.to_vec())
    }

    /// Per-start settings for a chain of `n_spins`.
    pub fn build(&self, n_spins: usize, n_steps: usize, initial_r: f64) -> OptimizerConfig64 {
        let base = OptimizerConfig::for_chain(n_spins);
        OptimizerConfig {
            initial_r,
            step_size: self.step_size.unwrap_or(base.step_size),
            max_iters: self.max_iters.unwrap_or(DEFAULT_START_ITERS),
            grad_tol: self.grad_tol.unwrap_or(base.grad_tol),
            r_bounds: (
                self.r_min.unwrap_or(base.r_bounds.0),
                self.r_max.unwrap_or(base.r_bounds.1),
            ),
            n_steps,
            smoothness: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseFamily {
    Power,
    /// Power law at the best exponent found by the multi-start search.
    OptimalPower,
    Linear,
    LocalAdiabatic,
    /// Tabulated text file.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_spins: usize,
    pub half_duration: Option<f64>,
    pub tau: Option<f64>,
    pub family: PulseFamily,
    pub r: Option<f64>,
    pub pulse_file: Option<PathBuf>,
}

impl SimulateConfig {
    pub fn half_duration(&self) -> anyhow::Result<f64> {
        resolve_half_duration(self.half_duration, self.tau, self.n_spins)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionRule {
    /// Largest upward jump of r* between adjacent τ.
    #[default]
    RJump,
    /// Largest adjacent drop of the optimized density, if it reaches `drop_factor`.
    DropFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_spins: Vec<usize>,
    pub tau: Vec<f64>,
    #[serde(default)]
    pub rule: TransitionRule,
    #[serde(default = "default_drop_factor")]
    pub drop_factor: f64,
    #[serde(default = "default_min_r_jump")]
    pub min_r_jump: f64,
}

fn default_drop_factor() -> f64 {
    10.0
}

fn default_min_r_jump() -> f64 {
    1.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    pub n_spins: usize,
    pub half_duration: Option<f64>,
    pub tau: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl LandscapeConfig {
    pub fn half_duration(&self) -> anyhow::Result<f64> {
        resolve_half_duration(self.half_duration, self.tau, self.n_spins)
    }

    pub fn grid(&self) -> anyhow::Result<Vec<f64>> {
        let (a, b, n) = (self.r_min, self.r_max, self.n_points);
        if !(a > 0.0 && b > a && n >= 3) {
            bail!("landscape grid needs 0 < r_min < r_max and n_points >= 3");
        }
        let step = |i: usize| i as f64 / (n - 1) as f64;
        Ok(match self.spacing {
            Spacing::Linear => (0..n).map(|i| a + (b - a) * step(i)).collect(),
            Spacing::Log => (0..n).map(|i| a * (b / a).powf(step(i))).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QslConfig {
    pub n_spins: Vec<usize>,
    #[serde(default = "default_g_initial")]
    pub g_initial: f64,
    #[serde(default)]
    pub g_final: f64,
}

fn default_g_initial() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessConfig {
    pub n_spins: usize,
    pub half_duration: Option<f64>,
    pub tau: Option<f64>,
    /// Exponent of the base pulse; searched for when absent.
    pub r: Option<f64>,
    pub deltas: Vec<f64>,
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    #[serde(default)]
    pub keep_samples: bool,
    #[serde(default = "yes")]
    pub initial_state: bool,
    #[serde(default = "yes")]
    pub spin_count: bool,
}

impl RobustnessConfig {
    pub fn half_duration(&self) -> anyhow::Result<f64> {
        resolve_half_duration(self.half_duration, self.tau, self.n_spins)
    }
}

fn default_realizations() -> usize {
    500
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeStart {
    Linear,
    Power,
    LocalAdiabatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeConfig {
    pub n_spins: usize,
    pub half_duration: Option<f64>,
    pub tau: Option<f64>,
    pub initial: FreeStart,
    pub r: Option<f64>,
    pub max_iters: Option<usize>,
    pub step_size: Option<f64>,
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub smoothness: f64,
}

impl FreeConfig {
    pub fn half_duration(&self) -> anyhow::Result<f64> {
        resolve_half_duration(self.half_duration, self.tau, self.n_spins)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = Config::from_toml(
            r#"
n_steps = 2000
seed = 5

[simulate]
n_spins = 24
tau = 0.2
family = "power"
r = 3.0

[sweep]
n_spins = [24, 50]
tau = [0.1, 0.2]
rule = "drop_factor"
"#,
        )
        .unwrap();
        assert_eq!(cfg.n_steps(), 2000);
        let sim = cfg.simulate.as_ref().unwrap();
        assert_eq!(sim.half_duration().unwrap(), 0.2 * 24.0);
        let sweep = cfg.sweep.as_ref().unwrap();
        assert_eq!(sweep.rule, TransitionRule::DropFactor);
        assert_eq!(sweep.drop_factor, 10.0);
    }

    #[test]
    fn rejects_unknown_keys_and_double_duration() {
        assert!(Config::from_toml("[qsl]\nn_spins = [24]\nbogus = 1\n").is_err());
        assert!(resolve_half_duration(Some(1.0), Some(0.1), 10).is_err());
        assert!(resolve_half_duration(None, None, 10).is_err());
        assert_eq!(resolve_half_duration(None, Some(0.1), 10).unwrap(), 1.0);
    }

    #[test]
    fn log_grid_ends() {
        let l = LandscapeConfig {
            n_spins: 8,
            half_duration: None,
            tau: None,
            r_min: 0.1,
            r_max: 100.0,
            n_points: 4,
            spacing: Spacing::Log,
        };
        let g = l.grid().unwrap();
        assert_eq!(g[0], 0.1);
        assert!((g[3] - 100.0).abs() < 1e-12);
        assert!((g[1] - 1.0).abs() < 1e-12);
    }
}
