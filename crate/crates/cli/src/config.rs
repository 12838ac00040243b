//! The run configuration file.

use std::path::{Path, PathBuf};

use bayesmr::fit::{FitConfig, InitMethod};
use bayesmr::simgen::ScenarioConfig;
use bayesmr::study::WmeConfig;
use bayesmr::{HmcConfig, ModelConfig};
use serde::Deserialize;

use crate::CliError;

/// Sampler-independent settings of a Bayesian fit.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub init: InitMethod,
    pub jitter_scale: f64,
    pub rhat_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        let d = FitConfig::default();
        Self { init: d.init, jitter_scale: d.jitter_scale, rhat_threshold: d.rhat_threshold }
    }
}

/// Everything one invocation needs. Every section is optional; unknown keys
/// are rejected. Relative paths are resolved against the directory of the
/// configuration file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Input dataset for `fit` and `wme`.
    pub data: Option<PathBuf>,
    /// Output directory (`fit`, `simulate`) or file (`wme`).
    pub out: Option<PathBuf>,
    /// Master seed; overrides `hmc.seed` and the scenario seeds.
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub hmc: HmcConfig,
    pub fit: FitOptions,
    pub wme: WmeConfig,
    pub scenario: Vec<ScenarioConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.data, &mut config.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            model: self.model.clone(),
            hmc: self.hmc.clone(),
            init: self.fit.init,
            jitter_scale: self.fit.jitter_scale,
            rhat_threshold: self.fit.rhat_threshold,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate().map_err(|e| CliError::Input(e.to_string()))?;
        self.hmc.validate().map_err(|e| CliError::Input(e.to_string()))?;
        if !(self.fit.jitter_scale >= 0.0 && self.fit.jitter_scale.is_finite()) {
            return Err(CliError::Input("fit.jitter_scale must be finite and non-negative".into()));
        }
        if !(self.fit.rhat_threshold > 1.0) {
            return Err(CliError::Input("fit.rhat_threshold must exceed 1".into()));
        }
        if !(self.wme.mass > 0.0 && self.wme.mass < 1.0) || self.wme.bootstrap_reps == 0 {
            return Err(CliError::Input("wme.mass must lie in (0, 1) and wme.bootstrap_reps be positive".into()));
        }
        for s in &self.scenario {
            s.validate().map_err(|e| CliError::Input(format!("scenario {}: {e}", s.scenario_id)))?;
        }
        Ok(())
    }
}
