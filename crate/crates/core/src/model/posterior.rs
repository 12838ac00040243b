//! Log-posterior on unconstrained coordinates with its exact gradient.

use super::likelihood::SufficientStats;
use super::prior::{log_prior_impl, ParamGradient};
use super::transform::{
    constrain, Layout, UnconstrainedState, DELTA_X, DELTA_Y, MU_ALPHA, OMEGA_X, OMEGA_Y, SIGMA_ALPHA, SIGMA_X,
    SIGMA_Y, THETA,
};
use super::{ModelConfig, ParameterSet};
use crate::data::MRDataset;
use crate::error::{Error, Result};
use crate::target::LogDensity;

/// The posterior of one dataset, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct MrModel {
    layout: Layout,
    config: ModelConfig,
    stats: SufficientStats,
}

impl MrModel {
    pub fn new(data: &MRDataset, config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        if config.interaction_enabled != data.covariate().is_some() {
            return Err(Error::CovariateMismatch("covariate must be present iff interaction is enabled"));
        }
        Ok(Self { layout: Layout::new(data.j(), config), config: config.clone(), stats: SufficientStats::new(data) })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Constrained parameters of an unconstrained point.
    pub fn constrain(&self, values: &[f64]) -> ParameterSet {
        constrain(values, &self.layout, &self.config).params
    }

    /// Log-posterior (including the log-Jacobian) and its gradient. Outside
    /// the prior support the value is `-∞` and the gradient is zero.
    pub fn log_posterior_and_gradient(&self, state: &UnconstrainedState) -> Result<(f64, Vec<f64>)> {
        if state.dim() != self.layout.dim() {
            return Err(Error::DimensionMismatch { expected: self.layout.dim(), actual: state.dim() });
        }
        let mut grad = vec![0.0; state.dim()];
        let lp = self.eval(&state.values, &mut grad);
        Ok((lp, grad))
    }

    fn eval(&self, values: &[f64], grad: &mut [f64]) -> f64 {
        let layout = &self.layout;
        let c = constrain(values, layout, &self.config);
        let p = &c.params;
        let mut g = ParamGradient::zeros(layout.j);
        let prior = log_prior_impl(p, &self.config, Some(&mut g));
        let ll = if prior.is_finite() { self.stats.evaluate(p, Some(&mut g)) } else { f64::NEG_INFINITY };
        let total = ll + prior + c.log_jac;
        if !total.is_finite() || values.iter().any(|v| !v.is_finite()) {
            grad.iter_mut().for_each(|v| *v = 0.0);
            return f64::NEG_INFINITY;
        }

        let scalar_grads = [
            (OMEGA_X, g.omega_x),
            (OMEGA_Y, g.omega_y),
            (THETA, g.theta),
            (DELTA_X, g.delta_x),
            (DELTA_Y, g.delta_y),
            (SIGMA_X, g.sigma_x),
            (SIGMA_Y, g.sigma_y),
            (MU_ALPHA, g.mu_alpha),
            (SIGMA_ALPHA, g.sigma_alpha),
        ];
        for (idx, gx) in scalar_grads {
            grad[idx] = gx * c.dx_du[idx] + c.dlogjac_du[idx];
        }
        if let Some(ps) = layout.psi() {
            for k in 0..3 {
                grad[ps + k] = g.psi[k] * c.dx_du[ps + k] + c.dlogjac_du[ps + k];
            }
        }
        if let Some(i) = layout.log_gamma() {
            grad[i] = g.gamma * p.gamma + c.dlogjac_du[i];
        }
        for k in 0..layout.j {
            grad[layout.alpha() + k] = g.alpha[k];
            grad[layout.raw_beta() + k] = g.beta[k] * p.phi[k];
            let lp_idx = layout.log_phi() + k;
            grad[lp_idx] = g.phi[k] * p.phi[k] + g.beta[k] * p.beta[k] + c.dlogjac_du[lp_idx];
        }
        total
    }
}

impl LogDensity for MrModel {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn log_density_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(x, grad)
    }
}

/// One-shot evaluation of the log-posterior and its gradient at `state`.
pub fn log_posterior_and_gradient(
    state: &UnconstrainedState,
    data: &MRDataset,
    config: &ModelConfig,
) -> Result<(f64, Vec<f64>)> {
    MrModel::new(data, config)?.log_posterior_and_gradient(state)
}
