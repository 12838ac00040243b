//! Leapfrog integration and the jittered-length HMC transition.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::target::LogDensity;

/// Energy error beyond which a trajectory is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// One leapfrog step under a diagonal metric with inverse mass `inv_mass`.
///
/// `grad` must hold the gradient at `position` on entry and holds the
/// gradient at the new position on return. Returns the new log-density.
pub fn leapfrog<T: LogDensity + ?Sized>(
    target: &T,
    position: &mut [f64],
    momentum: &mut [f64],
    grad: &mut [f64],
    step_size: f64,
    inv_mass: &[f64],
) -> f64 {
    let half = 0.5 * step_size;
    for (p, g) in momentum.iter_mut().zip(grad.iter()) {
        *p += half * g;
    }
    for ((q, p), m) in position.iter_mut().zip(momentum.iter()).zip(inv_mass) {
        *q += step_size * m * p;
    }
    let lp = target.log_density_and_gradient(position, grad);
    for (p, g) in momentum.iter_mut().zip(grad.iter()) {
        *p += half * g;
    }
    lp
}

pub fn kinetic_energy(momentum: &[f64], inv_mass: &[f64]) -> f64 {
    0.5 * momentum.iter().zip(inv_mass).map(|(p, m)| p * p * m).sum::<f64>()
}

/// Current point of a chain together with its cached density and gradient.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub log_density: f64,
    pub grad: Vec<f64>,
}

impl ChainState {
    pub fn new<T: LogDensity + ?Sized>(target: &T, position: Vec<f64>) -> Self {
        let mut grad = vec![0.0; position.len()];
        let log_density = target.log_density_and_gradient(&position, &mut grad);
        Self { position, log_density, grad }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TransitionInfo {
    /// `min(1, exp(−ΔH))`, zero for divergent trajectories.
    pub accept_stat: f64,
    pub accepted: bool,
    pub divergent: bool,
    pub leapfrog_steps: usize,
}

/// One HMC transition with `steps` leapfrog steps.
pub fn transition<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    state: &mut ChainState,
    step_size: f64,
    steps: usize,
    inv_mass: &[f64],
    rng: &mut R,
) -> TransitionInfo {
    let mut momentum: Vec<f64> = inv_mass
        .iter()
        .map(|m| {
            let z: f64 = rng.sample(StandardNormal);
            z / m.sqrt()
        })
        .collect();
    let h0 = -state.log_density + kinetic_energy(&momentum, inv_mass);
    let mut position = state.position.clone();
    let mut grad = state.grad.clone();
    let mut lp = state.log_density;
    let mut divergent = false;
    let mut taken = 0;
    for _ in 0..steps {
        lp = leapfrog(target, &mut position, &mut momentum, &mut grad, step_size, inv_mass);
        taken += 1;
        let h = -lp + kinetic_energy(&momentum, inv_mass);
        if !h.is_finite() || h - h0 > DIVERGENCE_THRESHOLD {
            divergent = true;
            break;
        }
    }
    if divergent {
        return TransitionInfo { accept_stat: 0.0, accepted: false, divergent, leapfrog_steps: taken };
    }
    let h1 = -lp + kinetic_energy(&momentum, inv_mass);
    let accept_stat = (h0 - h1).exp().min(1.0);
    let u: f64 = rng.random();
    let accepted = u < accept_stat;
    if accepted {
        state.position = position;
        state.log_density = lp;
        state.grad = grad;
    }
    TransitionInfo { accept_stat, accepted, divergent, leapfrog_steps: taken }
}
