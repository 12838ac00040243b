//! Hamiltonian Monte Carlo with a jittered trajectory length.
//!
//! Warm-up tunes the step size by dual averaging and a diagonal inverse
//! metric over doubling windows. Chains run in parallel, each with its own
//! RNG substream, so results do not depend on scheduling.

mod adapt;
mod diagnostics;
mod draws;
mod hmc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adapt::{DualAveraging, RunningVariance, WarmupSchedule};
pub use diagnostics::{effective_sample_size, split_rhat};
pub use draws::{ChainDraws, DrawStore, ParamSummary, Summary};
pub use hmc::{kinetic_energy, leapfrog, transition, ChainState, TransitionInfo, DIVERGENCE_THRESHOLD};

use crate::error::{Error, Result};
use crate::model::{MrModel, UnconstrainedState};
use crate::rng;
use crate::target::LogDensity;

/// Fraction of divergent post-warmup transitions above which a chain is
/// flagged unreliable.
pub const MAX_DIVERGENT_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmcConfig {
    pub chain_count: usize,
    pub warmup_draws: usize,
    pub sampling_draws: usize,
    pub target_accept: f64,
    pub max_leapfrog_steps: usize,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            chain_count: 4,
            warmup_draws: 1000,
            sampling_draws: 1000,
            target_accept: 0.8,
            max_leapfrog_steps: 1024,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chain_count == 0 || self.warmup_draws == 0 || self.sampling_draws == 0 || self.max_leapfrog_steps == 0
        {
            return Err(Error::InvalidConfig("chain, draw and leapfrog counts must be at least 1".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig(format!("target_accept must lie in (0, 1), got {}", self.target_accept)));
        }
        Ok(())
    }
}

/// Raw output of one chain on unconstrained coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// Post-warmup positions, one `Vec` per draw.
    pub draws: Vec<Vec<f64>>,
    pub log_density: Vec<f64>,
    pub accept_stat: Vec<f64>,
    pub divergent: Vec<bool>,
    pub leapfrog_steps: Vec<usize>,
    pub step_size: f64,
    pub inv_mass: Vec<f64>,
}

impl ChainOutput {
    pub fn divergent_fraction(&self) -> f64 {
        if self.divergent.is_empty() {
            return 0.0;
        }
        self.divergent.iter().filter(|d| **d).count() as f64 / self.divergent.len() as f64
    }

    pub fn unreliable(&self) -> bool {
        self.divergent_fraction() > MAX_DIVERGENT_FRACTION
    }
}

fn trajectory_steps<R: Rng + ?Sized>(step_size: f64, max_steps: usize, rng: &mut R) -> usize {
    let l_max = (2.0 * std::f64::consts::PI / step_size).ceil();
    let l_max = if l_max.is_finite() { (l_max as usize).clamp(1, max_steps) } else { max_steps };
    rng.random_range(1..=l_max)
}

/// Pick a starting step size by doubling or halving until the one-step
/// acceptance probability crosses 0.5.
fn initial_step_size<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    state: &ChainState,
    inv_mass: &[f64],
    rng: &mut R,
) -> f64 {
    let momentum: Vec<f64> = inv_mass
        .iter()
        .map(|m| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            z / m.sqrt()
        })
        .collect();
    let h0 = -state.log_density + kinetic_energy(&momentum, inv_mass);
    let delta_h = |eps: f64| {
        let mut q = state.position.clone();
        let mut p = momentum.clone();
        let mut g = state.grad.clone();
        let lp = leapfrog(target, &mut q, &mut p, &mut g, eps, inv_mass);
        let h = -lp + kinetic_energy(&p, inv_mass);
        if h.is_finite() {
            h0 - h
        } else {
            f64::NEG_INFINITY
        }
    };
    let log_half = 0.5f64.ln();
    let mut eps = 1.0;
    let up = delta_h(eps) > log_half;
    for _ in 0..60 {
        let next = if up { eps * 2.0 } else { eps * 0.5 };
        let crossed = if up { delta_h(next) <= log_half } else { delta_h(next) > log_half };
        eps = next;
        if crossed {
            break;
        }
    }
    eps
}

/// Run one chain from `init` using the substream `chain` of `hmc.seed`.
pub fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    init: &[f64],
    hmc: &HmcConfig,
    chain: u64,
) -> Result<ChainOutput> {
    let dim = target.dim();
    if init.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: init.len() });
    }
    let mut state = ChainState::new(target, init.to_vec());
    if !state.log_density.is_finite() || state.grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Precondition(format!("chain {chain}: initial state has non-finite log-density")));
    }
    let mut rng = rng::stream(hmc.seed, chain);
    let mut inv_mass = vec![1.0; dim];
    let schedule = WarmupSchedule::new(hmc.warmup_draws);
    let mut da = DualAveraging::new(initial_step_size(target, &state, &inv_mass, &mut rng), hmc.target_accept);
    let mut window = RunningVariance::new(dim);

    for iter in 0..hmc.warmup_draws {
        let eps = da.current();
        let steps = trajectory_steps(eps, hmc.max_leapfrog_steps, &mut rng);
        let info = transition(target, &mut state, eps, steps, &inv_mass, &mut rng);
        da.update(info.accept_stat);
        if let Some(w) = schedule.in_window(iter) {
            window.push(&state.position);
            if iter + 1 == schedule.window_ends[w] {
                if window.count() >= 3 {
                    inv_mass = window.regularized();
                }
                window = RunningVariance::new(dim);
                let eps0 = initial_step_size(target, &state, &inv_mass, &mut rng);
                da = DualAveraging::new(eps0, hmc.target_accept);
            }
        }
    }
    let step_size = da.final_step();

    let n = hmc.sampling_draws;
    let mut out = ChainOutput {
        draws: Vec::with_capacity(n),
        log_density: Vec::with_capacity(n),
        accept_stat: Vec::with_capacity(n),
        divergent: Vec::with_capacity(n),
        leapfrog_steps: Vec::with_capacity(n),
        step_size,
        inv_mass: inv_mass.clone(),
    };
    for _ in 0..n {
        let steps = trajectory_steps(step_size, hmc.max_leapfrog_steps, &mut rng);
        let info = transition(target, &mut state, step_size, steps, &inv_mass, &mut rng);
        out.draws.push(state.position.clone());
        out.log_density.push(state.log_density);
        out.accept_stat.push(info.accept_stat);
        out.divergent.push(info.divergent);
        out.leapfrog_steps.push(info.leapfrog_steps);
    }
    if out.unreliable() {
        log::warn!(
            "chain {chain}: {:.1}% of post-warmup transitions diverged",
            100.0 * out.divergent_fraction()
        );
    }
    Ok(out)
}

/// Run `inits.len()` chains in parallel on any differentiable target. The
/// chain count in `hmc` is ignored in favour of the number of initial points.
pub fn run_chains<T: LogDensity + ?Sized>(
    target: &T,
    inits: &[Vec<f64>],
    hmc: &HmcConfig,
) -> Result<Vec<ChainOutput>> {
    hmc.validate()?;
    if inits.is_empty() {
        return Err(Error::Precondition("at least one initial state is required".into()));
    }
    inits.par_iter().enumerate().map(|(c, init)| run_chain(target, init, hmc, c as u64)).collect()
}

/// Sample the MR posterior and collect the draws in natural units.
pub fn run_model_chains(model: &MrModel, inits: &[UnconstrainedState], hmc: &HmcConfig) -> Result<DrawStore> {
    let raw: Vec<Vec<f64>> = inits.iter().map(|s| s.values.clone()).collect();
    let outputs = run_chains(model, &raw, hmc)?;
    Ok(DrawStore::from_outputs(model, &outputs))
}
