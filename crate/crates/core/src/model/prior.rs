//! Prior densities: horseshoe on `β`, normal population prior on `α`, and
//! flat priors on bounded intervals for everything else.

use std::f64::consts::PI;

use super::params::ParameterSet;
use super::ModelConfig;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `log N(x; mean, sd²)`.
pub fn log_normal(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -LN_SQRT_2PI - sd.ln() - 0.5 * z * z
}

/// Log-density of the half-Cauchy with the given scale, on `x > 0`.
pub fn log_half_cauchy(x: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = x / scale;
    (2.0 / PI).ln() - scale.ln() - r.mul_add(r, 1.0).ln()
}

/// Gradient of `log_prior` (and of the likelihood) with respect to the
/// natural parameters.
#[derive(Debug, Clone, Default)]
pub(crate) struct ParamGradient {
    pub omega_x: f64,
    pub omega_y: f64,
    pub theta: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta_x: f64,
    pub delta_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub phi: Vec<f64>,
    pub gamma: f64,
    pub mu_alpha: f64,
    pub sigma_alpha: f64,
    pub psi: [f64; 3],
}

impl ParamGradient {
    pub fn zeros(j: usize) -> Self {
        Self { alpha: vec![0.0; j], beta: vec![0.0; j], phi: vec![0.0; j], ..Default::default() }
    }
}

fn in_support(params: &ParameterSet, config: &ModelConfig) -> bool {
    let b = &config.prior_bounds;
    let mut ok = b.omega_x.contains(params.omega_x)
        && b.omega_y.contains(params.omega_y)
        && b.theta.contains(params.theta)
        && b.delta_x.contains(params.delta_x)
        && b.delta_y.contains(params.delta_y)
        && b.sigma_x.contains(params.sigma_x)
        && b.sigma_y.contains(params.sigma_y)
        && b.mu_alpha.contains(params.mu_alpha)
        && b.sigma_alpha.contains(params.sigma_alpha);
    if let Some(i) = params.interaction {
        ok &= b.psi_xw.contains(i.psi_xw) && b.psi_yw.contains(i.psi_yw) && b.psi_yxw.contains(i.psi_yxw);
    }
    let gamma_ok = match config.global_scale_fixed {
        Some(g) => params.gamma == g,
        None => params.gamma > 0.0 && params.gamma.is_finite(),
    };
    ok && gamma_ok && params.phi.iter().all(|p| *p > 0.0 && p.is_finite())
}

/// Log prior density (flat terms contribute zero inside their bounds).
pub fn log_prior(params: &ParameterSet, config: &ModelConfig) -> f64 {
    log_prior_impl(params, config, None)
}

pub(crate) fn log_prior_impl(params: &ParameterSet, config: &ModelConfig, grad: Option<&mut ParamGradient>) -> f64 {
    if !in_support(params, config) {
        return f64::NEG_INFINITY;
    }
    let gamma = params.gamma;
    let mut lp = 0.0;
    for k in 0..params.j() {
        lp += log_normal(params.beta[k], 0.0, params.phi[k]) + log_half_cauchy(params.phi[k], gamma);
        lp += log_normal(params.alpha[k], params.mu_alpha, params.sigma_alpha);
    }
    if config.global_scale_fixed.is_none() {
        lp += log_half_cauchy(gamma, 1.0);
    }

    if let Some(g) = grad {
        let sa2 = params.sigma_alpha * params.sigma_alpha;
        for k in 0..params.j() {
            let (b, p) = (params.beta[k], params.phi[k]);
            let p2 = p * p;
            g.beta[k] += -b / p2;
            // normal in β plus half-Cauchy in φ with scale γ
            g.phi[k] += -1.0 / p + b * b / (p2 * p) - 2.0 * p / (gamma * gamma + p2);
            g.gamma += -1.0 / gamma + 2.0 * p2 / (gamma * (gamma * gamma + p2));

            let d = params.alpha[k] - params.mu_alpha;
            g.alpha[k] += -d / sa2;
            g.mu_alpha += d / sa2;
            g.sigma_alpha += -1.0 / params.sigma_alpha + d * d / (sa2 * params.sigma_alpha);
        }
        if config.global_scale_fixed.is_none() {
            g.gamma += -2.0 * gamma / (1.0 + gamma * gamma);
        }
    }
    lp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Bounds;

    fn mid_params() -> ParameterSet {
        let mut p = ParameterSet::neutral(1, false);
        p.beta = vec![0.0];
        p.phi = vec![1.0];
        p.gamma = 1.0;
        p.alpha = vec![0.3];
        p.mu_alpha = 0.3;
        p.sigma_alpha = 1.0;
        p
    }

    #[test]
    fn direct_evaluation_at_listed_point() {
        let p = mid_params();
        let lp = log_prior(&p, &ModelConfig::default());
        // N(0;0,1) + C+(1;1) + C+(1;1) + N(μ;μ,1)
        let expected = -0.5 * (2.0 * PI).ln() + (2.0 / (PI * 2.0)).ln() + (2.0 / (PI * 2.0)).ln()
            - 0.5 * (2.0 * PI).ln();
        assert!((lp - expected).abs() < 1e-14, "{lp} vs {expected}");
    }

    #[test]
    fn degenerate_local_scale_sends_prior_to_minus_infinity() {
        let mut p = mid_params();
        p.beta = vec![0.5];
        let mut last = f64::INFINITY;
        for e in 1..30 {
            p.phi = vec![10f64.powi(-e)];
            let lp = log_prior(&p, &ModelConfig::default());
            assert!(lp < last);
            last = lp;
        }
        assert!(last < -1e50);
    }

    #[test]
    fn out_of_bounds_is_minus_infinity() {
        let mut config = ModelConfig::default();
        config.prior_bounds.theta = Bounds::new(-1.0, 1.0);
        let mut p = mid_params();
        for (t, finite) in [(1.0 + 1e-9, false), (-1.0 - 1e-9, false), (1.0, false), (1.0 - 1e-9, true)] {
            p.theta = t;
            assert_eq!(log_prior(&p, &config).is_finite(), finite, "theta = {t}");
        }
        let mut p = mid_params();
        p.sigma_x = 50.0 + 1e-9;
        assert_eq!(log_prior(&p, &ModelConfig::default()), f64::NEG_INFINITY);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let config = ModelConfig::default();
        let mut p = ParameterSet::neutral(2, false);
        p.alpha = vec![0.2, -0.4];
        p.beta = vec![0.3, -0.1];
        p.phi = vec![0.7, 1.9];
        p.gamma = 0.4;
        p.mu_alpha = 0.1;
        p.sigma_alpha = 0.8;
        let mut g = ParamGradient::zeros(2);
        log_prior_impl(&p, &config, Some(&mut g));
        let h = 1e-6;
        let fd = |f: &dyn Fn(&mut ParameterSet, f64)| {
            let mut a = p.clone();
            f(&mut a, h);
            let mut b = p.clone();
            f(&mut b, -h);
            (log_prior(&a, &config) - log_prior(&b, &config)) / (2.0 * h)
        };
        let close = |a: f64, b: f64| assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
        close(g.gamma, fd(&|q, d| q.gamma += d));
        close(g.mu_alpha, fd(&|q, d| q.mu_alpha += d));
        close(g.sigma_alpha, fd(&|q, d| q.sigma_alpha += d));
        for k in 0..2 {
            close(g.beta[k], fd(&|q, d| q.beta[k] += d));
            close(g.phi[k], fd(&|q, d| q.phi[k] += d));
            close(g.alpha[k], fd(&|q, d| q.alpha[k] += d));
        }
    }
}
