//! The structural model, its priors and the unconstrained posterior.
//!
//! With a standard-normal confounder `U`,
//!
//! ```text
//! X = ω_X + α·Z + δ_X U + ε_X,        ε_X ~ N(0, σ_X²)
//! Y = ω_Y + θ X + β·Z + δ_Y U + ε_Y,  ε_Y ~ N(0, σ_Y²)
//! ```
//!
//! Integrating out `U` leaves a bivariate normal for the residuals
//! `A = X − ω_X − α·Z` and `B = Y − ω_Y − θX − β·Z` with variances
//! `τ_X² = δ_X² + σ_X²`, `τ_Y² = δ_Y² + σ_Y²` and covariance `λ = δ_X δ_Y`.
//! The pleiotropic effects `β` carry a horseshoe prior.

mod likelihood;
mod params;
mod posterior;
mod prior;
mod transform;

pub use likelihood::{log_likelihood, SufficientStats};
pub use params::{derived_theta_prime, shrinkage_weights, Interaction, ParameterSet};
pub use posterior::{log_posterior_and_gradient, MrModel};
pub use prior::{log_half_cauchy, log_normal, log_prior};
pub use transform::{to_constrained, to_unconstrained, Layout, UnconstrainedState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open interval `(lower, upper)` carrying a flat prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

/// Bounds of every flat-prior parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorBounds {
    pub omega_x: Bounds,
    pub omega_y: Bounds,
    pub theta: Bounds,
    pub delta_x: Bounds,
    pub delta_y: Bounds,
    pub sigma_x: Bounds,
    pub sigma_y: Bounds,
    pub mu_alpha: Bounds,
    pub sigma_alpha: Bounds,
    pub psi_xw: Bounds,
    pub psi_yw: Bounds,
    pub psi_yxw: Bounds,
}

impl Default for PriorBounds {
    fn default() -> Self {
        let loc = Bounds::new(-50.0, 50.0);
        let scale = Bounds::new(1e-6, 50.0);
        Self {
            omega_x: loc,
            omega_y: loc,
            theta: loc,
            delta_x: loc,
            delta_y: loc,
            sigma_x: scale,
            sigma_y: scale,
            mu_alpha: loc,
            sigma_alpha: scale,
            psi_xw: loc,
            psi_yw: loc,
            psi_yxw: loc,
        }
    }
}

impl PriorBounds {
    fn named(&self) -> [(&'static str, Bounds, bool); 12] {
        [
            ("omega_x", self.omega_x, false),
            ("omega_y", self.omega_y, false),
            ("theta", self.theta, false),
            ("delta_x", self.delta_x, false),
            ("delta_y", self.delta_y, false),
            ("sigma_x", self.sigma_x, true),
            ("sigma_y", self.sigma_y, true),
            ("mu_alpha", self.mu_alpha, false),
            ("sigma_alpha", self.sigma_alpha, true),
            ("psi_xw", self.psi_xw, false),
            ("psi_yw", self.psi_yw, false),
            ("psi_yxw", self.psi_yxw, false),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Add the covariate main effects and the exposure × covariate interaction.
    pub interaction_enabled: bool,
    pub prior_bounds: PriorBounds,
    /// Fix the global shrinkage scale instead of giving it a half-Cauchy prior.
    pub global_scale_fixed: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { interaction_enabled: false, prior_bounds: PriorBounds::default(), global_scale_fixed: None }
    }
}

impl ModelConfig {
    pub fn with_interaction() -> Self {
        Self { interaction_enabled: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b, is_scale) in self.prior_bounds.named() {
            if !(b.lower.is_finite() && b.upper.is_finite()) || b.lower >= b.upper {
                return Err(Error::InvalidConfig(format!(
                    "bounds for {name} must satisfy lower < upper, got ({}, {})",
                    b.lower, b.upper
                )));
            }
            if is_scale && b.lower < 0.0 {
                return Err(Error::InvalidConfig(format!("lower bound for scale {name} must be >= 0")));
            }
        }
        if let Some(g) = self.global_scale_fixed {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidConfig(format!("fixed global scale must be positive, got {g}")));
            }
        }
        Ok(())
    }
}
