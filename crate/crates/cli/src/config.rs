use std::path::Path;

use aerialnav_core::elg::ElgConfig;
use aerialnav_core::llm::LlmSettings;
use aerialnav_core::metrics::SUCCESS_THRESHOLD;
use aerialnav_core::sim::{ObserveParams, RunConfig};
use aerialnav_core::slkb::{DEFAULT_MERGE_THRESHOLD, DEFAULT_PRUNE_RADIUS};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Rule,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub sigma_pos: f64,
    pub p_drop: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Self {
            sigma_pos: 0.0,
            p_drop: 0.0,
        }
    }
}

/// Every tunable, loadable from a TOML file and overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub n_ahead: usize,
    pub n_next: usize,
    pub n_subseq: usize,
    pub prune_radius: f64,
    pub merge_threshold: f64,
    pub max_steps: usize,
    pub success_threshold: f64,
    pub seed: u64,
    pub planner: PlannerKind,
    pub noise: Noise,
    pub llm: Option<LlmSettings>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            n_ahead: 2,
            n_next: 6,
            n_subseq: 2,
            prune_radius: DEFAULT_PRUNE_RADIUS,
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            max_steps: 150,
            success_threshold: SUCCESS_THRESHOLD,
            seed: 0,
            planner: PlannerKind::Rule,
            noise: Noise::default(),
            llm: None,
        }
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        for (name, v) in [
            ("n_ahead", self.n_ahead),
            ("n_next", self.n_next),
            ("n_subseq", self.n_subseq),
            ("max_steps", self.max_steps),
        ] {
            if v == 0 {
                return usage(format!("{name} must be at least 1"));
            }
        }
        if !(self.prune_radius.is_finite() && self.prune_radius > 0.0) {
            return usage(format!(
                "prune_radius must be positive (got {})",
                self.prune_radius
            ));
        }
        if !(self.merge_threshold > 0.0 && self.merge_threshold <= 1.0) {
            return usage(format!(
                "merge_threshold must lie in (0, 1] (got {})",
                self.merge_threshold
            ));
        }
        if !(self.success_threshold.is_finite() && self.success_threshold >= 0.0) {
            return usage(format!(
                "success_threshold must be non-negative (got {})",
                self.success_threshold
            ));
        }
        if !(self.noise.sigma_pos.is_finite() && self.noise.sigma_pos >= 0.0) {
            return usage("noise.sigma_pos must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.noise.p_drop) {
            return usage("noise.p_drop must lie in [0, 1]".into());
        }
        Ok(())
    }

    pub fn elg(&self) -> ElgConfig {
        ElgConfig {
            n_ahead: self.n_ahead,
            n_next: self.n_next,
            n_subseq: self.n_subseq,
        }
    }

    pub fn observe(&self) -> ObserveParams {
        ObserveParams {
            sigma_pos: self.noise.sigma_pos,
            p_drop: self.noise.p_drop,
            ..ObserveParams::default()
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            elg: self.elg(),
            max_steps: self.max_steps,
            observe: self.observe(),
            merge_threshold: self.merge_threshold,
            prune_radius: self.prune_radius,
            seed: self.seed,
            ..RunConfig::default()
        }
    }

    /// Endpoint settings from the config file, else from the environment.
    pub fn llm_settings(&self) -> Option<LlmSettings> {
        self.llm.clone().or_else(LlmSettings::from_env)
    }
}
