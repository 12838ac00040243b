//! End-to-end posterior fit: initialization, sampling and summary.

use serde::{Deserialize, Serialize};

use crate::data::MRDataset;
use crate::error::Result;
use crate::init::{curvature_scales, jittered_inits_with_scales, map_from_moments, mean_field_vi, ViOptions};
use crate::metrics::IntervalEstimate;
use crate::model::{ModelConfig, MrModel};
use crate::rng::child_seed;
use crate::sampler::{run_model_chains, DrawStore, HmcConfig, Summary};
use crate::target::LogDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    #[default]
    Map,
    Variational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub model: ModelConfig,
    pub hmc: HmcConfig,
    pub init: InitMethod,
    /// Per-chain jitter around the initial point, in units of the local
    /// posterior scale of each coordinate (capped at one unconstrained unit).
    pub jitter_scale: f64,
    /// Largest acceptable split R̂ for the parameters of interest.
    pub rhat_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            hmc: HmcConfig::default(),
            init: InitMethod::Map,
            jitter_scale: 0.1,
            rhat_threshold: 1.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub draws: DrawStore,
    pub summary: Summary,
    /// Reasons the fit is not trusted; empty when it is.
    pub issues: Vec<String>,
}

impl FitResult {
    pub fn reliable(&self) -> bool {
        self.issues.is_empty()
    }

    /// Posterior mean and 95% interval of a named quantity.
    pub fn interval(&self, name: &str) -> Option<IntervalEstimate> {
        self.summary.get(name).map(|p| IntervalEstimate::new(p.mean, p.lower, p.upper))
    }
}

/// Names whose convergence decides whether a fit is reliable. Nuisance
/// coordinates such as the confounder loadings are excluded: their posterior
/// is symmetric under a joint sign flip, so R̂ on them measures mode
/// hopping rather than failure.
pub fn gated_parameters(interaction: bool) -> &'static [&'static str] {
    if interaction {
        &["theta", "psi_yxw", "theta_prime"]
    } else {
        &["theta"]
    }
}

pub fn fit(data: &MRDataset, config: &FitConfig) -> Result<FitResult> {
    config.hmc.validate()?;
    let model = MrModel::new(data, &config.model)?;
    let center = match config.init {
        InitMethod::Map => {
            let map = map_from_moments(&model, data)?;
            if !map.converged {
                log::debug!("MAP search stopped at gradient norm {:.3e}", map.gradient_norm);
            }
            map.state
        }
        InitMethod::Variational => {
            let map = map_from_moments(&model, data)?;
            let vi = ViOptions { seed: child_seed(config.hmc.seed, 1), ..Default::default() };
            let fitted = mean_field_vi(&model, &map.state.values, &vi)?;
            if fitted.improved && model.log_density(&fitted.mean.values).is_finite() {
                fitted.mean
            } else {
                log::info!("variational fit did not improve; using the MAP estimate");
                map.state
            }
        }
    };
    let scales: Vec<f64> =
        curvature_scales(&model, &center.values).iter().map(|s| config.jitter_scale * s).collect();
    let inits =
        jittered_inits_with_scales(&model, &center, config.hmc.chain_count, &scales, child_seed(config.hmc.seed, 2))?;
    let draws = run_model_chains(&model, &inits, &config.hmc)?;
    let summary = draws.summary();

    let mut issues = Vec::new();
    for c in &summary.unreliable_chains {
        issues.push(format!(
            "chain {c}: {:.1}% divergent transitions",
            100.0 * draws.chains[*c].divergent_fraction()
        ));
    }
    for name in gated_parameters(config.model.interaction_enabled) {
        if let Some(r) = summary.get(name).and_then(|p| p.rhat) {
            if r >= config.rhat_threshold {
                issues.push(format!("{name}: split R-hat {r:.3}"));
            }
        }
    }
    Ok(FitResult { draws, summary, issues })
}
