//! Post-warmup draws in natural units, with derived quantities and
//! per-parameter summaries.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::diagnostics::{effective_sample_size, split_rhat};
use super::ChainOutput;
use crate::error::Result;
use crate::model::{derived_theta_prime, shrinkage_weights, MrModel, ParameterSet};
use crate::stats::{mean, quantile_sorted, sorted, variance};

/// Draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub params: Vec<ParameterSet>,
    pub log_posterior: Vec<f64>,
    pub accept_stat: Vec<f64>,
    pub divergent: Vec<bool>,
    /// `θ + ψ_YXW` per draw, when the interaction model is fitted.
    pub theta_prime: Option<Vec<f64>>,
    /// Shrinkage weights per draw.
    pub kappa: Vec<Vec<f64>>,
    pub step_size: f64,
    pub inv_mass: Vec<f64>,
    pub unreliable: bool,
}

impl ChainDraws {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn divergent_fraction(&self) -> f64 {
        if self.divergent.is_empty() {
            return 0.0;
        }
        self.divergent.iter().filter(|d| **d).count() as f64 / self.divergent.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore {
    j: usize,
    interaction: bool,
    pub chains: Vec<ChainDraws>,
}

/// Column names of a flattened [`ParameterSet`], in CSV order.
pub fn parameter_names(j: usize, interaction: bool) -> Vec<String> {
    let mut names: Vec<String> = ["omega_x", "omega_y", "theta", "delta_x", "delta_y", "sigma_x", "sigma_y"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend(["mu_alpha", "sigma_alpha", "gamma"].iter().map(|s| s.to_string()));
    for block in ["alpha", "beta", "phi"] {
        names.extend((1..=j).map(|k| format!("{block}.{k}")));
    }
    if interaction {
        names.extend(["psi_xw", "psi_yw", "psi_yxw", "theta_prime"].iter().map(|s| s.to_string()));
    }
    names
}

/// Flatten a parameter set in the order of [`parameter_names`].
pub fn parameter_values(p: &ParameterSet) -> Vec<f64> {
    let mut v = vec![
        p.omega_x,
        p.omega_y,
        p.theta,
        p.delta_x,
        p.delta_y,
        p.sigma_x,
        p.sigma_y,
        p.mu_alpha,
        p.sigma_alpha,
        p.gamma,
    ];
    v.extend(&p.alpha);
    v.extend(&p.beta);
    v.extend(&p.phi);
    if let Some(i) = p.interaction {
        v.extend([i.psi_xw, i.psi_yw, i.psi_yxw, p.theta + i.psi_yxw]);
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// 2.5% and 97.5% posterior quantiles.
    pub lower: f64,
    pub upper: f64,
    /// `None` when undefined (one chain, or zero variance).
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub chains: usize,
    pub draws_per_chain: usize,
    pub divergent_fraction: f64,
    pub unreliable_chains: Vec<usize>,
    pub parameters: Vec<ParamSummary>,
}

impl Summary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl DrawStore {
    pub fn from_outputs(model: &MrModel, outputs: &[ChainOutput]) -> Self {
        let layout = model.layout();
        let chains = outputs
            .iter()
            .map(|o| {
                let params: Vec<ParameterSet> = o.draws.iter().map(|d| model.constrain(d)).collect();
                let theta_prime = layout
                    .interaction
                    .then(|| params.iter().map(|p| derived_theta_prime(p).expect("interaction present")).collect());
                let kappa = params.iter().map(shrinkage_weights).collect();
                ChainDraws {
                    log_posterior: o.log_density.clone(),
                    accept_stat: o.accept_stat.clone(),
                    divergent: o.divergent.clone(),
                    theta_prime,
                    kappa,
                    step_size: o.step_size,
                    inv_mass: o.inv_mass.clone(),
                    unreliable: o.unreliable(),
                    params,
                }
            })
            .collect();
        Self { j: layout.j, interaction: layout.interaction, chains }
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn interaction(&self) -> bool {
        self.interaction
    }

    pub fn names(&self) -> Vec<String> {
        parameter_names(self.j, self.interaction)
    }

    /// Draws of the named column, one `Vec` per chain.
    pub fn column(&self, name: &str) -> Option<Vec<Vec<f64>>> {
        let idx = self.names().iter().position(|n| n == name)?;
        Some(
            self.chains
                .iter()
                .map(|c| c.params.iter().map(|p| parameter_values(p)[idx]).collect())
                .collect(),
        )
    }

    /// Draws of the named column pooled over chains.
    pub fn pooled(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name).map(|c| c.concat())
    }

    /// Posterior mean of each `κ_j`, pooled over chains.
    pub fn kappa_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.j];
        let mut count = 0usize;
        for c in &self.chains {
            for k in &c.kappa {
                sums.iter_mut().zip(k).for_each(|(s, v)| *s += v);
                count += 1;
            }
        }
        sums.iter().map(|s| s / count as f64).collect()
    }

    pub fn divergent_fraction(&self) -> f64 {
        let total: usize = self.chains.iter().map(|c| c.divergent.len()).sum();
        let bad: usize = self.chains.iter().map(|c| c.divergent.iter().filter(|d| **d).count()).sum();
        if total == 0 {
            0.0
        } else {
            bad as f64 / total as f64
        }
    }

    pub fn summary(&self) -> Summary {
        let names = self.names();
        let flat: Vec<Vec<Vec<f64>>> =
            self.chains.iter().map(|c| c.params.iter().map(parameter_values).collect()).collect();
        let parameters = names
            .iter()
            .enumerate()
            .map(|(idx, name)| {
                let per_chain: Vec<Vec<f64>> =
                    flat.iter().map(|rows| rows.iter().map(|r| r[idx]).collect()).collect();
                summarize(name, &per_chain)
            })
            .collect();
        Summary {
            chains: self.chains.len(),
            draws_per_chain: self.chains.first().map_or(0, |c| c.len()),
            divergent_fraction: self.divergent_fraction(),
            unreliable_chains: self.chains.iter().enumerate().filter(|(_, c)| c.unreliable).map(|(i, _)| i).collect(),
            parameters,
        }
    }

    /// One row per draw: `chain, draw, <parameters>, lp, divergent`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["chain".to_string(), "draw".to_string()];
        header.extend(self.names());
        header.extend(["lp".to_string(), "divergent".to_string()]);
        w.write_record(&header)?;
        for (c, chain) in self.chains.iter().enumerate() {
            for (d, p) in chain.params.iter().enumerate() {
                let mut row = vec![c.to_string(), d.to_string()];
                row.extend(parameter_values(p).iter().map(|v| v.to_string()));
                row.push(chain.log_posterior[d].to_string());
                row.push(u8::from(chain.divergent[d]).to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn summarize(name: &str, per_chain: &[Vec<f64>]) -> ParamSummary {
    let pooled: Vec<f64> = per_chain.concat();
    let s = sorted(&pooled);
    let refs: Vec<&[f64]> = per_chain.iter().map(|c| c.as_slice()).collect();
    ParamSummary {
        name: name.to_string(),
        mean: mean(&pooled),
        sd: if pooled.len() > 1 { variance(&pooled).sqrt() } else { 0.0 },
        lower: quantile_sorted(&s, 0.025),
        upper: quantile_sorted(&s, 0.975),
        rhat: split_rhat(&refs).ok().and_then(finite),
        ess: effective_sample_size(&refs).ok().and_then(finite),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Interaction, ModelConfig};

    #[test]
    fn names_match_values() {
        for inter in [false, true] {
            let mut p = ParameterSet::neutral(4, inter);
            if inter {
                p.interaction = Some(Interaction { psi_xw: 0.1, psi_yw: 0.2, psi_yxw: -0.3 });
            }
            assert_eq!(parameter_names(4, inter).len(), parameter_values(&p).len());
        }
        let names = parameter_names(2, true);
        assert_eq!(names.last().unwrap(), "theta_prime");
        assert!(names.contains(&"phi.2".to_string()));
        let _ = ModelConfig::default();
    }

    #[test]
    fn summary_of_fixed_draws() {
        let scrambled: Vec<f64> = (0..100).map(|k| f64::from((k * 37) % 100 + 1)).collect();
        let per_chain = vec![scrambled.clone(), scrambled];
        let s = summarize("x", &per_chain);
        assert_eq!(s.mean, 50.5);
        assert!((s.rhat.unwrap() - 1.0).abs() < 0.05);
        let constant = vec![vec![2.0; 50], vec![2.0; 50]];
        let s = summarize("c", &constant);
        assert_eq!((s.lower, s.upper), (2.0, 2.0));
        assert!(s.rhat.is_none() && s.ess.is_none());
    }
}
