//! Starting points for the chains: a MAP estimate by gradient ascent, an
//! optional mean-field variational fit, and per-chain jitter.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::{per_snp_regressions, wme_estimate};
use crate::data::MRDataset;
use crate::error::{Error, Result};
use crate::model::{to_unconstrained, Interaction, ModelConfig, MrModel, ParameterSet, UnconstrainedState};
use crate::rng;
use crate::target::LogDensity;

#[derive(Debug, Clone, PartialEq)]
pub struct MapOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Coordinates held at their starting value. Empty means none.
    pub frozen: Vec<bool>,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self { max_iterations: 500, gradient_tolerance: 1e-4, frozen: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub state: UnconstrainedState,
    pub log_posterior: f64,
    /// Euclidean norm of the (unfrozen) gradient at `state`.
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// MAP estimate of the MR posterior from the origin of unconstrained space.
pub fn map_estimate(model: &MrModel) -> Result<MapResult> {
    map_estimate_from(model, &vec![0.0; model.layout().dim()], &MapOptions::default())
}

/// Gradient ascent with Barzilai–Borwein step lengths and Armijo
/// backtracking. Steps must increase the objective, up to roundoff.
pub fn map_estimate_from<T: LogDensity + ?Sized>(
    target: &T,
    start: &[f64],
    options: &MapOptions,
) -> Result<MapResult> {
    let dim = target.dim();
    if start.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: start.len() });
    }
    if !options.frozen.is_empty() && options.frozen.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: options.frozen.len() });
    }
    let mask = |g: &mut [f64]| {
        for (gi, f) in g.iter_mut().zip(&options.frozen) {
            if *f {
                *gi = 0.0;
            }
        }
    };

    let mut x = start.to_vec();
    let mut g = vec![0.0; dim];
    let mut f = target.log_density_and_gradient(&x, &mut g);
    mask(&mut g);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDensity);
    }
    let mut step = 1e-3 / norm(&g).max(1.0);
    let mut iterations = 0;
    let mut converged = norm(&g) < options.gradient_tolerance;

    let mut trial = vec![0.0; dim];
    let mut g_trial = vec![0.0; dim];
    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let gg = dot(&g, &g);
        let mut accepted = false;
        for _ in 0..60 {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&g) {
                *t = xi + step * gi;
            }
            let f_trial = target.log_density_and_gradient(&trial, &mut g_trial);
            let finite = f_trial.is_finite() && g_trial.iter().all(|v| v.is_finite());
            // near the optimum f stops resolving progress; a tie within
            // roundoff is accepted while the slope along g stays positive
            let tie = finite && f_trial >= f - 1e-13 * f.abs().max(1.0) && {
                mask(&mut g_trial);
                dot(&g_trial, &g) > 0.0
            };
            if finite && (f_trial >= f + 1e-4 * step * gg || tie) {
                mask(&mut g_trial);
                let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_trial.iter().zip(&g).map(|(a, b)| a - b).collect();
                std::mem::swap(&mut x, &mut trial);
                std::mem::swap(&mut g, &mut g_trial);
                f = f_trial;
                // ascent on f is descent on −f, whose gradient difference is −y
                let sy = -dot(&s, &y);
                step = if sy > 0.0 { dot(&s, &s) / sy } else { step * 2.0 };
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        converged = norm(&g) < options.gradient_tolerance;
    }
    Ok(MapResult {
        gradient_norm: norm(&g),
        state: UnconstrainedState::new(x),
        log_posterior: f,
        converged,
        iterations,
    })
}

/// Least-squares coefficients and residual variance of `y` on the columns
/// of `design` (row-major, `p` columns).
fn least_squares(design: &[f64], p: usize, y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    let a = DMatrix::from_row_slice(n, p, design);
    let b = DVector::from_column_slice(y);
    let coef = (a.transpose() * &a)
        .cholesky()
        .ok_or_else(|| Error::InvalidData("design matrix is rank deficient".into()))?
        .solve(&(a.transpose() * &b));
    let resid = b - a * &coef;
    let dof = n.saturating_sub(p).max(1) as f64;
    Ok((coef.iter().copied().collect(), resid.norm_squared() / dof))
}

/// A data-driven starting point in natural units.
///
/// The exposure and outcome regressions identify everything except how the
/// outcome coefficient on the exposure splits between the causal effect and
/// confounding. That split is taken from the weighted median estimate (zero
/// if it is unavailable); the confounder loadings are then chosen to
/// reproduce the residual covariance, and the pleiotropic effects follow.
pub fn moment_start(data: &MRDataset, config: &ModelConfig) -> Result<ParameterSet> {
    let (n, j) = (data.n(), data.j());
    let w = if config.interaction_enabled { data.covariate() } else { None };
    let extra = usize::from(w.is_some());
    let (x, y) = (data.exposure(), data.outcome());

    // exposure on [1, z, w]
    let px = 1 + j + extra;
    let mut dx = Vec::with_capacity(n * px);
    for i in 0..n {
        dx.push(1.0);
        dx.extend_from_slice(data.genotype_row(i));
        if let Some(w) = w {
            dx.push(w[i]);
        }
    }
    let (bx, tau_x_sq) = least_squares(&dx, px, x)?;

    // outcome on [1, x, z, w, x·w]
    let py = 2 + j + 2 * extra;
    let mut dy = Vec::with_capacity(n * py);
    for i in 0..n {
        dy.push(1.0);
        dy.push(x[i]);
        dy.extend_from_slice(data.genotype_row(i));
        if let Some(w) = w {
            dy.extend([w[i], x[i] * w[i]]);
        }
    }
    let (by, v) = least_squares(&dy, py, y)?;

    let theta = wme_estimate(&per_snp_regressions(data), 1, 0.5, 0).map(|r| r.estimate).unwrap_or(0.0);
    let theta = theta.clamp(-5.0, 5.0);
    let c = by[1] - theta;

    let mut p = ParameterSet::neutral(j, w.is_some());
    p.theta = theta;
    p.omega_x = bx[0];
    p.alpha = bx[1..=j].to_vec();
    p.omega_y = by[0] + c * p.omega_x;
    p.beta = by[2..2 + j].iter().zip(&p.alpha).map(|(b, a)| b + c * a).collect();
    if let Some(i) = p.interaction.as_mut() {
        let psi_xw = bx[1 + j];
        *i = Interaction { psi_xw, psi_yw: by[2 + j] + c * psi_xw, psi_yxw: by[3 + j] };
    }

    // λ = c·τx² split so that σy² stays at least half the residual variance
    let lam_sq = c * c * tau_x_sq;
    let f = (lam_sq / (lam_sq + 0.5 * v)).clamp(0.5, 0.99);
    p.delta_x = -(f * tau_x_sq).sqrt();
    p.sigma_x = ((1.0 - f) * tau_x_sq).sqrt();
    p.delta_y = c * tau_x_sq / p.delta_x;
    p.sigma_y = (v + lam_sq - p.delta_y * p.delta_y).max(0.25 * v).sqrt();

    let m = p.alpha.iter().sum::<f64>() / j as f64;
    let sd = (p.alpha.iter().map(|a| (a - m).powi(2)).sum::<f64>() / j as f64).sqrt();
    p.mu_alpha = m;
    p.sigma_alpha = sd.max(1e-3);
    let scale = (p.beta.iter().map(|b| b * b).sum::<f64>() / j as f64).sqrt().max(1e-3);
    p.gamma = config.global_scale_fixed.unwrap_or(scale);
    p.phi = p.beta.iter().map(|b| b.abs().max(0.1 * scale)).collect();

    clamp_into_bounds(&mut p, config);
    Ok(p)
}

fn clamp_into_bounds(p: &mut ParameterSet, config: &ModelConfig) {
    let b = &config.prior_bounds;
    let inside = |x: f64, lo: f64, hi: f64| {
        let margin = 1e-6 * (hi - lo);
        x.clamp(lo + margin, hi - margin)
    };
    p.omega_x = inside(p.omega_x, b.omega_x.lower, b.omega_x.upper);
    p.omega_y = inside(p.omega_y, b.omega_y.lower, b.omega_y.upper);
    p.theta = inside(p.theta, b.theta.lower, b.theta.upper);
    p.delta_x = inside(p.delta_x, b.delta_x.lower, b.delta_x.upper);
    p.delta_y = inside(p.delta_y, b.delta_y.lower, b.delta_y.upper);
    p.sigma_x = inside(p.sigma_x, b.sigma_x.lower, b.sigma_x.upper);
    p.sigma_y = inside(p.sigma_y, b.sigma_y.lower, b.sigma_y.upper);
    p.mu_alpha = inside(p.mu_alpha, b.mu_alpha.lower, b.mu_alpha.upper);
    p.sigma_alpha = inside(p.sigma_alpha, b.sigma_alpha.lower, b.sigma_alpha.upper);
    if let Some(i) = p.interaction.as_mut() {
        i.psi_xw = inside(i.psi_xw, b.psi_xw.lower, b.psi_xw.upper);
        i.psi_yw = inside(i.psi_yw, b.psi_yw.lower, b.psi_yw.upper);
        i.psi_yxw = inside(i.psi_yxw, b.psi_yxw.lower, b.psi_yxw.upper);
    }
}

/// MAP estimate started from [`moment_start`].
pub fn map_from_moments(model: &MrModel, data: &MRDataset) -> Result<MapResult> {
    let start = to_unconstrained(&moment_start(data, model.config())?, model.config())?;
    map_estimate_from(model, &start.values, &MapOptions::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViOptions {
    pub iterations: usize,
    pub mc_samples: usize,
    pub learning_rate: f64,
    /// The fit counts as failed when the ELBO estimate does not improve on
    /// its starting value within this many steps.
    pub patience: usize,
    pub seed: u64,
}

impl Default for ViOptions {
    fn default() -> Self {
        Self { iterations: 2000, mc_samples: 8, learning_rate: 0.05, patience: 100, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViResult {
    pub mean: UnconstrainedState,
    pub scale: Vec<f64>,
    /// Running best of the ELBO estimate, one entry per step.
    pub best_elbo: Vec<f64>,
    /// Whether the ELBO estimate improved on its first value within
    /// `patience` steps.
    pub improved: bool,
}

/// Mean-field Gaussian approximation on unconstrained coordinates, fitted
/// with reparameterized gradients and Adam. The returned mean is the
/// average of the iterates over the final quarter of the steps taken.
pub fn mean_field_vi<T: LogDensity + ?Sized>(target: &T, init: &[f64], options: &ViOptions) -> Result<ViResult> {
    let dim = target.dim();
    if init.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: init.len() });
    }
    if options.mc_samples == 0 || options.iterations == 0 {
        return Err(Error::InvalidConfig("iterations and mc_samples must be positive".into()));
    }
    let mut rng = rng::stream(options.seed, 0);
    let mut mu = init.to_vec();
    let mut log_s = vec![(0.1f64).ln(); dim];
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; 2 * dim];
    let mut v = vec![0.0; 2 * dim];
    let mut z = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut grad = vec![0.0; 2 * dim];

    let mut best = f64::NEG_INFINITY;
    let mut first = None;
    let mut improved = false;
    let mut trace = Vec::new();
    let mut history: Vec<Vec<f64>> = Vec::new();

    for t in 1..=options.iterations {
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut elbo = 0.0;
        for _ in 0..options.mc_samples {
            for (zi, (xi, (mi, si))) in z.iter_mut().zip(x.iter_mut().zip(mu.iter().zip(&log_s))) {
                *zi = rng.sample(StandardNormal);
                *xi = mi + si.exp() * *zi;
            }
            let lp = target.log_density_and_gradient(&x, &mut g);
            elbo += lp;
            for k in 0..dim {
                grad[k] += g[k];
                grad[dim + k] += g[k] * z[k] * log_s[k].exp();
            }
        }
        let s = options.mc_samples as f64;
        elbo = elbo / s + log_s.iter().sum::<f64>();
        grad.iter_mut().for_each(|v| *v /= s);
        grad[dim..].iter_mut().for_each(|v| *v += 1.0);

        if !elbo.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            log::warn!("variational fit hit a non-finite ELBO at step {t}");
            break;
        }
        let f0 = *first.get_or_insert(elbo);
        best = best.max(elbo);
        if elbo > f0 && t <= options.patience {
            improved = true;
        }
        trace.push(best);

        for k in 0..2 * dim {
            m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
            v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
            let mh = m[k] / (1.0 - b1.powi(t as i32));
            let vh = v[k] / (1.0 - b2.powi(t as i32));
            let delta = options.learning_rate * mh / (vh.sqrt() + eps);
            if k < dim {
                mu[k] += delta;
            } else {
                log_s[k - dim] += delta;
            }
        }
        history.push(mu.clone());
    }
    let tail = &history[history.len() - (history.len() / 4).max(1).min(history.len())..];
    let mean = if tail.is_empty() {
        mu
    } else {
        (0..dim).map(|k| tail.iter().map(|h| h[k]).sum::<f64>() / tail.len() as f64).collect()
    };
    Ok(ViResult { mean: UnconstrainedState::new(mean), scale: log_s.iter().map(|l| l.exp()).collect(), best_elbo: trace, improved })
}

/// Variational initialization for the MR posterior, falling back to the MAP
/// estimate when the ELBO never improves or the fitted mean is unusable.
pub fn variational_initialization(model: &MrModel, options: &ViOptions) -> Result<UnconstrainedState> {
    let map = map_estimate(model)?;
    let vi = mean_field_vi(model, &map.state.values, options)?;
    if vi.improved && model.log_density(&vi.mean.values).is_finite() {
        Ok(vi.mean)
    } else {
        log::info!("variational fit did not improve; using the MAP estimate");
        Ok(map.state)
    }
}

/// `chain_count` perturbations of `center` by independent `N(0, scale²)`
/// noise, each redrawn up to 20 times until its log-density and gradient are
/// finite. Chain `c` uses RNG substream `c` of `seed`.
pub fn jittered_inits<T: LogDensity + ?Sized>(
    target: &T,
    center: &UnconstrainedState,
    chain_count: usize,
    scale: f64,
    seed: u64,
) -> Result<Vec<UnconstrainedState>> {
    jittered_inits_with_scales(target, center, chain_count, &vec![scale; center.dim()], seed)
}

/// As [`jittered_inits`] with a separate noise scale per coordinate.
pub fn jittered_inits_with_scales<T: LogDensity + ?Sized>(
    target: &T,
    center: &UnconstrainedState,
    chain_count: usize,
    scales: &[f64],
    seed: u64,
) -> Result<Vec<UnconstrainedState>> {
    let dim = target.dim();
    if center.dim() != dim || scales.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: center.dim().min(scales.len()) });
    }
    let mut g = vec![0.0; dim];
    (0..chain_count)
        .map(|c| {
            let mut rng = rng::stream(seed, c as u64);
            for _ in 0..=20 {
                let x: Vec<f64> = center
                    .values
                    .iter()
                    .zip(scales)
                    .map(|(v, s)| {
                        let e: f64 = rng.sample(StandardNormal);
                        v + s * e
                    })
                    .collect();
                let lp = target.log_density_and_gradient(&x, &mut g);
                if lp.is_finite() && g.iter().all(|v| v.is_finite()) {
                    return Ok(UnconstrainedState::new(x));
                }
            }
            Err(Error::Precondition(format!("chain {c}: no finite starting point after 20 redraws")))
        })
        .collect()
}

/// Rough per-coordinate posterior standard deviations at `center` from the
/// diagonal of the Hessian, capped at 1. Coordinates where the density is
/// not locally concave get 1.
pub fn curvature_scales<T: LogDensity + ?Sized>(target: &T, center: &[f64]) -> Vec<f64> {
    let dim = target.dim();
    let h = 1e-5;
    let mut x = center.to_vec();
    let (mut gp, mut gm) = (vec![0.0; dim], vec![0.0; dim]);
    (0..dim)
        .map(|k| {
            x[k] = center[k] + h;
            let fp = target.log_density_and_gradient(&x, &mut gp);
            x[k] = center[k] - h;
            let fm = target.log_density_and_gradient(&x, &mut gm);
            x[k] = center[k];
            let curv = -(gp[k] - gm[k]) / (2.0 * h);
            if fp.is_finite() && fm.is_finite() && curv > 1.0 {
                1.0 / curv.sqrt()
            } else {
                1.0
            }
        })
        .collect()
}
