use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Covariate main effects and the exposure × covariate interaction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Interaction {
    /// Covariate effect on the exposure.
    pub psi_xw: f64,
    /// Covariate effect on the outcome.
    pub psi_yw: f64,
    /// Shift of the causal effect in the `w = 1` stratum.
    pub psi_yxw: f64,
}

/// Full parameter state of the structural model in natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub omega_x: f64,
    pub omega_y: f64,
    /// Causal effect of the exposure on the outcome.
    pub theta: f64,
    /// Instrument–exposure associations.
    pub alpha: Vec<f64>,
    /// Pleiotropic (direct) instrument–outcome effects.
    pub beta: Vec<f64>,
    pub delta_x: f64,
    pub delta_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// Local shrinkage scales.
    pub phi: Vec<f64>,
    /// Global shrinkage scale.
    pub gamma: f64,
    pub mu_alpha: f64,
    pub sigma_alpha: f64,
    pub interaction: Option<Interaction>,
}

impl ParameterSet {
    pub fn j(&self) -> usize {
        self.alpha.len()
    }

    /// A neutral point: unit scales, zero effects.
    pub fn neutral(j: usize, interaction: bool) -> Self {
        Self {
            omega_x: 0.0,
            omega_y: 0.0,
            theta: 0.0,
            alpha: vec![0.0; j],
            beta: vec![0.0; j],
            delta_x: 0.0,
            delta_y: 0.0,
            sigma_x: 1.0,
            sigma_y: 1.0,
            phi: vec![1.0; j],
            gamma: 1.0,
            mu_alpha: 0.0,
            sigma_alpha: 1.0,
            interaction: interaction.then(Interaction::default),
        }
    }

    pub fn tau_x_sq(&self) -> f64 {
        self.delta_x * self.delta_x + self.sigma_x * self.sigma_x
    }

    pub fn tau_y_sq(&self) -> f64 {
        self.delta_y * self.delta_y + self.sigma_y * self.sigma_y
    }

    /// Residual covariance induced by the shared confounder.
    pub fn lambda(&self) -> f64 {
        self.delta_x * self.delta_y
    }

    pub fn check(&self) -> Result<()> {
        let j = self.alpha.len();
        if j == 0 {
            return Err(Error::Precondition("parameter set has no instruments".into()));
        }
        for len in [self.beta.len(), self.phi.len()] {
            if len != j {
                return Err(Error::DimensionMismatch { expected: j, actual: len });
            }
        }
        let positive = [self.sigma_x, self.sigma_y, self.sigma_alpha, self.gamma];
        if positive.iter().chain(self.phi.iter()).any(|v| !(*v > 0.0)) {
            return Err(Error::Precondition("scale parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Shrinkage weights `κ_j = 1 / (1 + φ_j²)`: near 1 means the pleiotropic
/// effect is shrunk to zero, near 0 means it is left alone.
pub fn shrinkage_weights(params: &ParameterSet) -> Vec<f64> {
    params.phi.iter().map(|p| 1.0 / (1.0 + p * p)).collect()
}

/// Causal effect in the `w = 1` stratum, `θ + ψ_YXW`.
pub fn derived_theta_prime(params: &ParameterSet) -> Result<f64> {
    params.interaction.map(|i| params.theta + i.psi_yxw).ok_or(Error::InteractionDisabled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        let mut p = ParameterSet::neutral(3, false);
        p.phi = vec![1.0, 1e-9, 3.0];
        let k = shrinkage_weights(&p);
        assert_eq!(k[0], 0.5);
        assert!((k[1] - 1.0).abs() < 1e-15);
        assert!((k[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn kappa_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let mut p = ParameterSet::neutral(1, false);
            p.phi = vec![i as f64 * 0.05];
            let k = shrinkage_weights(&p)[0];
            assert!(k < prev && k > 0.0 && k < 1.0);
            prev = k;
        }
    }

    #[test]
    fn theta_prime() {
        let mut p = ParameterSet::neutral(1, true);
        p.theta = 0.34;
        p.interaction = Some(Interaction { psi_yxw: -0.14, ..Default::default() });
        assert!((derived_theta_prime(&p).unwrap() - 0.20).abs() < 1e-12);
        p.interaction = Some(Interaction::default());
        assert_eq!(derived_theta_prime(&p).unwrap(), 0.34);
        p.theta = 0.0;
        p.interaction = Some(Interaction { psi_yxw: 0.7, ..Default::default() });
        assert_eq!(derived_theta_prime(&p).unwrap(), 0.7);
        let q = ParameterSet::neutral(1, false);
        assert!(matches!(derived_theta_prime(&q), Err(Error::InteractionDisabled)));
    }

    #[test]
    fn covariance_is_positive_definite() {
        let mut p = ParameterSet::neutral(1, false);
        p.delta_x = -3.0;
        p.delta_y = 2.0;
        p.sigma_x = 0.01;
        p.sigma_y = 0.02;
        let det = p.tau_x_sq() * p.tau_y_sq() - p.lambda().powi(2);
        assert!(det > 0.0);
    }
}
