//! Synthetic datasets for simulation studies.
//!
//! Each replicate draws minor-allele frequencies and Hardy–Weinberg allele
//! doses, then the structural parameters, then a standard-normal confounder
//! per individual, and finally exposure and outcome from the structural
//! equations. Replicate `r` of a scenario uses RNG substream `r` of the
//! scenario seed, so it does not depend on how many replicates exist.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::MRDataset;
use crate::error::{Error, Result};
use crate::model::Interaction;
use crate::rng::{self, StreamRng};

/// Mean direction of the pleiotropic effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pleiotropy {
    Balanced,
    Negative,
    Positive,
}

impl Pleiotropy {
    /// `ξ ∈ {0, −1, +1}`.
    pub fn xi(self) -> f64 {
        match self {
            Self::Balanced => 0.0,
            Self::Negative => -1.0,
            Self::Positive => 1.0,
        }
    }
}

/// Covariate effects for data generated under the interaction model. The
/// covariate is drawn as Bernoulli(`covariate_probability`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionTruth {
    pub psi_xw: f64,
    pub psi_yw: f64,
    pub psi_yxw: f64,
    #[serde(default = "half")]
    pub covariate_probability: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub pleiotropy: Pleiotropy,
    pub sample_size: usize,
    pub theta_true: f64,
    #[serde(default = "default_instruments")]
    pub instrument_count: usize,
    #[serde(default = "default_pleiotropic")]
    pub pleiotropic_count: usize,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub interaction: Option<InteractionTruth>,
}

fn default_instruments() -> usize {
    20
}

fn default_pleiotropic() -> usize {
    10
}

impl ScenarioConfig {
    pub fn new(scenario_id: impl Into<String>, pleiotropy: Pleiotropy, sample_size: usize, theta_true: f64) -> Self {
        Self {
            scenario_id: scenario_id.into(),
            pleiotropy,
            sample_size,
            theta_true,
            instrument_count: default_instruments(),
            pleiotropic_count: default_pleiotropic(),
            replicates: 100,
            seed: 0,
            interaction: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instrument_count == 0 || self.sample_size < 2 {
            return Err(Error::InvalidConfig("need at least one instrument and two individuals".into()));
        }
        if self.pleiotropic_count > self.instrument_count {
            return Err(Error::InvalidConfig(format!(
                "pleiotropic_count {} exceeds instrument_count {}",
                self.pleiotropic_count, self.instrument_count
            )));
        }
        if let Some(i) = &self.interaction {
            if !(i.covariate_probability > 0.0 && i.covariate_probability < 1.0) {
                return Err(Error::InvalidConfig("covariate_probability must lie in (0, 1)".into()));
            }
        }
        if !self.theta_true.is_finite() {
            return Err(Error::InvalidConfig("theta_true must be finite".into()));
        }
        Ok(())
    }
}

/// Generating values of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub omega_x: f64,
    pub omega_y: f64,
    pub theta: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta_x: f64,
    pub delta_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub interaction: Option<Interaction>,
    pub minor_allele_frequency: Vec<f64>,
    /// 0-based indices of the instruments with a direct effect.
    pub pleiotropic: Vec<usize>,
}

impl GroundTruth {
    pub fn theta_prime(&self) -> Option<f64> {
        self.interaction.map(|i| self.theta + i.psi_yxw)
    }
}

/// Row-major `n × maf.len()` doses, each `Binomial(2, p_j)`.
pub fn generate_genotypes_with_maf<R: Rng + ?Sized>(n: usize, maf: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let laws = maf
        .iter()
        .map(|&p| Binomial::new(2, p).map_err(|e| Error::InvalidConfig(format!("allele frequency {p}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(n * maf.len());
    for _ in 0..n {
        out.extend(laws.iter().map(|b| b.sample(rng) as f64));
    }
    Ok(out)
}

fn draw_maf<R: Rng + ?Sized>(j: usize, rng: &mut R) -> Vec<f64> {
    (0..j).map(|_| rng.random_range(0.1..0.5)).collect()
}

/// Row-major `n × j` doses with minor-allele frequencies drawn from
/// Uniform(0.1, 0.5), one per instrument.
pub fn generate_genotypes(n: usize, j: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, 0);
    let maf = draw_maf(j, &mut rng);
    generate_genotypes_with_maf(n, &maf, &mut rng).expect("frequencies lie in (0.1, 0.5)")
}

fn normal(mean: f64, variance: f64) -> Normal<f64> {
    Normal::new(mean, variance.sqrt()).expect("finite positive variance")
}

/// Dataset and generating values of replicate `replicate`.
pub fn generate_replicate(config: &ScenarioConfig, replicate: u64) -> Result<(MRDataset, GroundTruth)> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, replicate);
    Ok(draw_replicate(config, &mut rng))
}

fn draw_replicate(config: &ScenarioConfig, rng: &mut StreamRng) -> (MRDataset, GroundTruth) {
    let (n, j) = (config.sample_size, config.instrument_count);
    let maf = draw_maf(j, rng);
    let genotypes = generate_genotypes_with_maf(n, &maf, rng).expect("frequencies lie in (0.1, 0.5)");

    let delta_x = normal(-0.05, 0.0025).sample(rng);
    let delta_y = normal(-0.1, 0.0025).sample(rng);
    let omega_y = normal(-3.7, 0.04).sample(rng);
    let (omega_x, sigma_x, sigma_y) = (3.3, 0.1, 0.1);
    let alpha_law = normal(0.034, 0.0031);
    let alpha: Vec<f64> = (0..j).map(|_| alpha_law.sample(rng)).collect();
    let beta_law = normal(0.012 * config.pleiotropy.xi(), 0.0025);
    let beta: Vec<f64> = (0..j).map(|k| if k < config.pleiotropic_count { beta_law.sample(rng) } else { 0.0 }).collect();
    let theta = config.theta_true;
    let interaction = config.interaction.map(|i| Interaction { psi_xw: i.psi_xw, psi_yw: i.psi_yw, psi_yxw: i.psi_yxw });

    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut w = config.interaction.map(|_| Vec::with_capacity(n));
    for i in 0..n {
        let z = &genotypes[i * j..(i + 1) * j];
        let wi = match (&config.interaction, w.as_mut()) {
            (Some(t), Some(col)) => {
                let v = if rng.random_bool(t.covariate_probability) { 1.0 } else { 0.0 };
                col.push(v);
                v
            }
            _ => 0.0,
        };
        let psi = interaction.unwrap_or_default();
        let u: f64 = rng.sample(StandardNormal);
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        let az: f64 = alpha.iter().zip(z).map(|(a, g)| a * g).sum();
        let bz: f64 = beta.iter().zip(z).map(|(b, g)| b * g).sum();
        let xi = omega_x + az + psi.psi_xw * wi + delta_x * u + sigma_x * ex;
        let yi = omega_y + (theta + psi.psi_yxw * wi) * xi + bz + psi.psi_yw * wi + delta_y * u + sigma_y * ey;
        x.push(xi);
        y.push(yi);
    }
    let data = MRDataset::new(j, genotypes, x, y, w).expect("simulated data satisfy the dataset invariants");
    let truth = GroundTruth {
        omega_x,
        omega_y,
        theta,
        alpha,
        beta,
        delta_x,
        delta_y,
        sigma_x,
        sigma_y,
        interaction,
        minor_allele_frequency: maf,
        pleiotropic: (0..config.pleiotropic_count).collect(),
    };
    (data, truth)
}

/// Outcome of fitting one replicate; failures are kept as messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome<R> {
    pub replicate: u64,
    pub truth: GroundTruth,
    pub result: std::result::Result<R, String>,
}

/// Generate every replicate of `config` and apply `fit` to it. Errors and
/// panics inside `fit` are recorded for that replicate and do not affect the
/// others. Results come back in replicate order.
pub fn run_scenario<R, F>(config: &ScenarioConfig, fit: F) -> Result<Vec<ReplicateOutcome<R>>>
where
    R: Send,
    F: Fn(&MRDataset, &GroundTruth, u64) -> Result<R> + Sync,
{
    config.validate()?;
    Ok((0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let (data, truth) = generate_replicate(config, r).expect("config validated");
            let result = match catch_unwind(AssertUnwindSafe(|| fit(&data, &truth, r))) {
                Ok(Ok(v)) => Ok(v),
                Ok(Err(e)) => Err(e.to_string()),
                Err(panic) => Err(panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "fit panicked".into())),
            };
            if let Err(msg) = &result {
                log::warn!("scenario {} replicate {r} failed: {msg}", config.scenario_id);
            }
            ReplicateOutcome { replicate: r, truth, result }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_mapping() {
        assert_eq!(Pleiotropy::Balanced.xi(), 0.0);
        assert_eq!(Pleiotropy::Negative.xi(), -1.0);
        assert_eq!(Pleiotropy::Positive.xi(), 1.0);
    }

    #[test]
    fn zero_frequency_gives_zero_doses() {
        let mut rng = rng::stream(0, 0);
        let g = generate_genotypes_with_maf(50, &[0.0, 0.0], &mut rng).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut c = ScenarioConfig::new("s", Pleiotropy::Balanced, 100, 0.0);
        assert!(c.validate().is_ok());
        c.pleiotropic_count = 21;
        assert!(c.validate().is_err());
    }

    #[test]
    fn non_pleiotropic_beta_is_exactly_zero() {
        let c = ScenarioConfig::new("s", Pleiotropy::Positive, 50, 0.35);
        for r in 0..20 {
            let (_, t) = generate_replicate(&c, r).unwrap();
            assert!(t.beta[10..].iter().all(|b| *b == 0.0));
            assert!(t.beta[..10].iter().all(|b| *b != 0.0));
        }
    }
}
