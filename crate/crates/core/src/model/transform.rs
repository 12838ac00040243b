//! Bijection between [`ParameterSet`] and an unconstrained real vector.
//!
//! Flat-prior parameters live on open intervals and go through a scaled
//! logit; the horseshoe scales `φ_j`, `γ` go through the natural log; `α` is
//! unconstrained. The pleiotropic effects are non-centered: the free
//! coordinate is `raw_j = β_j / φ_j`.

use serde::{Deserialize, Serialize};

use super::params::{Interaction, ParameterSet};
use super::{Bounds, ModelConfig};
use crate::error::{Error, Result};

/// A point in unconstrained coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconstrainedState {
    pub values: Vec<f64>,
}

impl UnconstrainedState {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

pub(crate) const OMEGA_X: usize = 0;
pub(crate) const OMEGA_Y: usize = 1;
pub(crate) const THETA: usize = 2;
pub(crate) const DELTA_X: usize = 3;
pub(crate) const DELTA_Y: usize = 4;
pub(crate) const SIGMA_X: usize = 5;
pub(crate) const SIGMA_Y: usize = 6;
pub(crate) const MU_ALPHA: usize = 7;
pub(crate) const SIGMA_ALPHA: usize = 8;
const N_FIXED_SCALARS: usize = 9;

/// Coordinate layout of the unconstrained vector for a given model shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub j: usize,
    pub interaction: bool,
    pub gamma_fixed: Option<f64>,
}

impl Layout {
    pub fn new(j: usize, config: &ModelConfig) -> Self {
        Self { j, interaction: config.interaction_enabled, gamma_fixed: config.global_scale_fixed }
    }

    /// Infer the instrument count from a vector dimension.
    pub fn from_dim(dim: usize, config: &ModelConfig) -> Result<Self> {
        let base = N_FIXED_SCALARS
            + usize::from(config.global_scale_fixed.is_none())
            + if config.interaction_enabled { 3 } else { 0 };
        if dim <= base || (dim - base) % 3 != 0 {
            return Err(Error::Precondition(format!("dimension {dim} does not match any instrument count")));
        }
        Ok(Self::new((dim - base) / 3, config))
    }

    pub fn log_gamma(&self) -> Option<usize> {
        self.gamma_fixed.is_none().then_some(N_FIXED_SCALARS)
    }

    pub fn alpha(&self) -> usize {
        N_FIXED_SCALARS + usize::from(self.gamma_fixed.is_none())
    }

    pub fn raw_beta(&self) -> usize {
        self.alpha() + self.j
    }

    pub fn log_phi(&self) -> usize {
        self.raw_beta() + self.j
    }

    /// Index of `psi_xw`; `psi_yw` and `psi_yxw` follow.
    pub fn psi(&self) -> Option<usize> {
        self.interaction.then_some(self.log_phi() + self.j)
    }

    pub fn dim(&self) -> usize {
        self.log_phi() + self.j + if self.interaction { 3 } else { 0 }
    }

    /// Names of the unconstrained coordinates.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = [
            "omega_x", "omega_y", "theta", "delta_x", "delta_y", "sigma_x", "sigma_y", "mu_alpha", "sigma_alpha",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        if self.gamma_fixed.is_none() {
            names.push("log_gamma".into());
        }
        names.extend((1..=self.j).map(|k| format!("alpha.{k}")));
        names.extend((1..=self.j).map(|k| format!("raw_beta.{k}")));
        names.extend((1..=self.j).map(|k| format!("log_phi.{k}")));
        if self.interaction {
            names.extend(["psi_xw", "psi_yw", "psi_yxw"].iter().map(|s| s.to_string()));
        }
        names
    }

    /// Bounds of the scalar flat-prior coordinates, in layout order.
    pub(crate) fn bounded(&self, config: &ModelConfig) -> Vec<(usize, Bounds)> {
        let b = &config.prior_bounds;
        let mut v = vec![
            (OMEGA_X, b.omega_x),
            (OMEGA_Y, b.omega_y),
            (THETA, b.theta),
            (DELTA_X, b.delta_x),
            (DELTA_Y, b.delta_y),
            (SIGMA_X, b.sigma_x),
            (SIGMA_Y, b.sigma_y),
            (MU_ALPHA, b.mu_alpha),
            (SIGMA_ALPHA, b.sigma_alpha),
        ];
        if let Some(p) = self.psi() {
            v.extend([(p, b.psi_xw), (p + 1, b.psi_yw), (p + 2, b.psi_yxw)]);
        }
        v
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Rate of the logit. Intervals reaching below zero hold location
/// parameters and get unit slope at the midpoint, so one unconstrained unit
/// is one natural unit near the centre. Non-negative intervals hold scales
/// and use the plain logit, which acts as a log map near the lower bound.
fn logit_rate(b: Bounds) -> f64 {
    if b.lower < 0.0 {
        4.0 / b.width()
    } else {
        1.0
    }
}

/// Scaled-logit map onto `(lower, upper)`: value, log-Jacobian,
/// `dx/du` and `d(log-Jacobian)/du`.
///
/// Near the midpoint the value is formed as `mid + half·tanh(v/2)` so that
/// values close to zero on symmetric bounds keep full relative precision.
pub(crate) fn bounded_forward(u: f64, b: Bounds) -> (f64, f64, f64, f64) {
    let w = b.width();
    let k = logit_rate(b);
    let v = k * u;
    let s = sigmoid(v);
    let x = if v.abs() < MID_BAND {
        let half = 0.5 * w;
        (b.lower + half) + half * (0.5 * v).tanh()
    } else if v < 0.0 {
        b.lower + w * s
    } else {
        b.upper - w * sigmoid(-v)
    };
    let log_jac = w.ln() + k.ln() - softplus(-v) - softplus(v);
    let dx_du = k * w * s * sigmoid(-v);
    (x, log_jac, dx_du, k * (1.0 - 2.0 * s))
}

// |tanh(v/2)| < 1/2
const MID_BAND: f64 = 1.098_612_288_668_109_7;

pub(crate) fn bounded_inverse(x: f64, b: Bounds) -> f64 {
    let half = 0.5 * b.width();
    let mid = b.lower + half;
    let v = if (x - mid).abs() < 0.5 * half {
        2.0 * ((x - mid) / half).atanh()
    } else {
        (x - b.lower).ln() - (b.upper - x).ln()
    };
    v / logit_rate(b)
}

/// Derivatives of the constraining map needed by the chain rule.
#[derive(Debug, Clone)]
pub(crate) struct Constrained {
    pub params: ParameterSet,
    pub log_jac: f64,
    /// `dx/du` for every bounded scalar, indexed by layout position.
    pub dx_du: Vec<f64>,
    /// `d(log-Jacobian)/du` for every coordinate.
    pub dlogjac_du: Vec<f64>,
}

pub(crate) fn constrain(values: &[f64], layout: &Layout, config: &ModelConfig) -> Constrained {
    let dim = layout.dim();
    debug_assert_eq!(values.len(), dim);
    let mut scalars = [0.0; N_FIXED_SCALARS];
    let mut psi = [0.0; 3];
    let mut dx_du = vec![0.0; dim];
    let mut dlogjac_du = vec![0.0; dim];
    let mut log_jac = 0.0;

    for (idx, b) in layout.bounded(config) {
        let (x, lj, d, dlj) = bounded_forward(values[idx], b);
        if idx < N_FIXED_SCALARS {
            scalars[idx] = x;
        } else {
            psi[idx - layout.psi().unwrap()] = x;
        }
        log_jac += lj;
        dx_du[idx] = d;
        dlogjac_du[idx] = dlj;
    }

    let gamma = match layout.log_gamma() {
        Some(i) => {
            log_jac += values[i];
            dlogjac_du[i] = 1.0;
            values[i].exp()
        }
        None => layout.gamma_fixed.unwrap(),
    };

    let j = layout.j;
    let alpha = values[layout.alpha()..layout.alpha() + j].to_vec();
    let raw = &values[layout.raw_beta()..layout.raw_beta() + j];
    let log_phi = &values[layout.log_phi()..layout.log_phi() + j];
    let phi: Vec<f64> = log_phi.iter().map(|v| v.exp()).collect();
    let beta: Vec<f64> = raw.iter().zip(&phi).map(|(r, p)| r * p).collect();
    for k in 0..j {
        // log map of φ_j plus the β_j = raw_j·φ_j scaling
        log_jac += 2.0 * log_phi[k];
        dlogjac_du[layout.log_phi() + k] = 2.0;
    }

    let params = ParameterSet {
        omega_x: scalars[OMEGA_X],
        omega_y: scalars[OMEGA_Y],
        theta: scalars[THETA],
        alpha,
        beta,
        delta_x: scalars[DELTA_X],
        delta_y: scalars[DELTA_Y],
        sigma_x: scalars[SIGMA_X],
        sigma_y: scalars[SIGMA_Y],
        phi,
        gamma,
        mu_alpha: scalars[MU_ALPHA],
        sigma_alpha: scalars[SIGMA_ALPHA],
        interaction: layout
            .interaction
            .then_some(Interaction { psi_xw: psi[0], psi_yw: psi[1], psi_yxw: psi[2] }),
    };
    Constrained { params, log_jac, dx_du, dlogjac_du }
}

/// Map unconstrained coordinates to parameters, returning the log absolute
/// determinant of the Jacobian of the map.
pub fn to_constrained(state: &UnconstrainedState, config: &ModelConfig) -> Result<(ParameterSet, f64)> {
    let layout = Layout::from_dim(state.dim(), config)?;
    let c = constrain(&state.values, &layout, config);
    Ok((c.params, c.log_jac))
}

pub fn to_unconstrained(params: &ParameterSet, config: &ModelConfig) -> Result<UnconstrainedState> {
    params.check()?;
    if params.interaction.is_some() != config.interaction_enabled {
        return Err(Error::CovariateMismatch("interaction terms present iff interaction is enabled"));
    }
    let layout = Layout::new(params.j(), config);
    let mut v = vec![0.0; layout.dim()];
    let scalars = [
        params.omega_x,
        params.omega_y,
        params.theta,
        params.delta_x,
        params.delta_y,
        params.sigma_x,
        params.sigma_y,
        params.mu_alpha,
        params.sigma_alpha,
    ];
    let psi = params.interaction.map(|i| [i.psi_xw, i.psi_yw, i.psi_yxw]);
    for (idx, b) in layout.bounded(config) {
        let x = if idx < N_FIXED_SCALARS { scalars[idx] } else { psi.unwrap()[idx - layout.psi().unwrap()] };
        if !b.contains(x) {
            return Err(Error::Precondition(format!(
                "{} = {x} lies outside its prior bounds ({}, {})",
                layout.names()[idx],
                b.lower,
                b.upper
            )));
        }
        v[idx] = bounded_inverse(x, b);
    }
    if let Some(i) = layout.log_gamma() {
        v[i] = params.gamma.ln();
    }
    for k in 0..layout.j {
        v[layout.alpha() + k] = params.alpha[k];
        v[layout.raw_beta() + k] = params.beta[k] / params.phi[k];
        v[layout.log_phi() + k] = params.phi[k].ln();
    }
    Ok(UnconstrainedState::new(v))
}
