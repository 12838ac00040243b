//! Marginal likelihood of `(X, Y)` given the instruments, with the latent
//! confounder integrated out.

use std::f64::consts::PI;

use super::params::ParameterSet;
use super::prior::{log_normal, ParamGradient};
use super::ModelConfig;
use crate::data::MRDataset;
use crate::error::{Error, Result};

pub(crate) fn check_shapes(params: &ParameterSet, data: &MRDataset, config: &ModelConfig) -> Result<()> {
    params.check()?;
    if params.j() != data.j() {
        return Err(Error::DimensionMismatch { expected: data.j(), actual: params.j() });
    }
    if config.interaction_enabled != data.covariate().is_some() {
        return Err(Error::CovariateMismatch("covariate must be present iff interaction is enabled"));
    }
    if config.interaction_enabled != params.interaction.is_some() {
        return Err(Error::CovariateMismatch("interaction terms present iff interaction is enabled"));
    }
    Ok(())
}

/// Sum over individuals of `log N(X; E[X|Z], τ_X²) + log N(Y; E[Y|X,Z], var(Y|X,Z))`.
///
/// A non-finite total is reported as `-∞`.
pub fn log_likelihood(params: &ParameterSet, data: &MRDataset, config: &ModelConfig) -> Result<f64> {
    check_shapes(params, data, config)?;
    let tx2 = params.tau_x_sq();
    let lambda = params.lambda();
    let slope = lambda / tx2;
    // τ_Y² − λ²/τ_X², written without cancellation
    let var_y = (params.sigma_x.powi(2) * params.sigma_y.powi(2)
        + params.delta_x.powi(2) * params.sigma_y.powi(2)
        + params.delta_y.powi(2) * params.sigma_x.powi(2))
        / tx2;
    let (sd_x, sd_y) = (tx2.sqrt(), var_y.sqrt());
    let inter = params.interaction.unwrap_or_default();

    let mut total = 0.0;
    for i in 0..data.n() {
        let z = data.genotype_row(i);
        let x = data.exposure()[i];
        let y = data.outcome()[i];
        let w = data.covariate().map_or(0.0, |c| c[i]);
        let az: f64 = params.alpha.iter().zip(z).map(|(a, z)| a * z).sum();
        let bz: f64 = params.beta.iter().zip(z).map(|(b, z)| b * z).sum();
        let mean_x = params.omega_x + az + inter.psi_xw * w;
        let resid_x = x - mean_x;
        let mean_y = params.omega_y
            + params.theta * x
            + inter.psi_yxw * x * w
            + bz
            + inter.psi_yw * w
            + slope * resid_x;
        total += log_normal(x, mean_x, sd_x) + log_normal(y, mean_y, sd_y);
    }
    Ok(if total.is_finite() { total } else { f64::NEG_INFINITY })
}

/// Centered sufficient statistics of the columns `[X, Y, X·W, W, Z_1, …, Z_J]`.
///
/// The likelihood is a Gaussian quadratic form in linear residuals, so these
/// reduce each evaluation from `O(nJ)` to `O(J²)`.
#[derive(Debug, Clone)]
pub struct SufficientStats {
    n: f64,
    k: usize,
    means: Vec<f64>,
    /// Row-major `k × k` centered cross-product matrix.
    scatter: Vec<f64>,
}

const COL_X: usize = 0;
const COL_Y: usize = 1;
const COL_XW: usize = 2;
const COL_W: usize = 3;
const COL_Z: usize = 4;

impl SufficientStats {
    pub fn new(data: &MRDataset) -> Self {
        let n = data.n();
        let k = data.j() + COL_Z;
        let row = |i: usize, out: &mut [f64]| {
            let x = data.exposure()[i];
            let w = data.covariate().map_or(0.0, |c| c[i]);
            out[COL_X] = x;
            out[COL_Y] = data.outcome()[i];
            out[COL_XW] = x * w;
            out[COL_W] = w;
            out[COL_Z..].copy_from_slice(data.genotype_row(i));
        };
        let mut buf = vec![0.0; k];
        let mut means = vec![0.0; k];
        for i in 0..n {
            row(i, &mut buf);
            for (m, v) in means.iter_mut().zip(&buf) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut scatter = vec![0.0; k * k];
        for i in 0..n {
            row(i, &mut buf);
            for (v, m) in buf.iter_mut().zip(&means) {
                *v -= m;
            }
            for r in 0..k {
                let br = buf[r];
                if br == 0.0 {
                    continue;
                }
                for c in r..k {
                    scatter[r * k + c] += br * buf[c];
                }
            }
        }
        for r in 0..k {
            for c in 0..r {
                scatter[r * k + c] = scatter[c * k + r];
            }
        }
        Self { n: n as f64, k, means, scatter }
    }

    fn mat_vec(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.scatter[r * self.k..(r + 1) * self.k];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// Log-likelihood; when `grad` is given its natural-parameter gradient is
    /// accumulated into it.
    pub(crate) fn evaluate(&self, params: &ParameterSet, grad: Option<&mut ParamGradient>) -> f64 {
        let k = self.k;
        let n = self.n;
        let inter = params.interaction.unwrap_or_default();
        let mut a = vec![0.0; k];
        let mut b = vec![0.0; k];
        a[COL_X] = 1.0;
        a[COL_W] = -inter.psi_xw;
        b[COL_X] = -params.theta;
        b[COL_Y] = 1.0;
        b[COL_XW] = -inter.psi_yxw;
        b[COL_W] = -inter.psi_yw;
        for (idx, (al, be)) in params.alpha.iter().zip(&params.beta).enumerate() {
            a[COL_Z + idx] = -al;
            b[COL_Z + idx] = -be;
        }
        let dot = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).map(|(p, q)| p * q).sum() };
        let a_bar = -params.omega_x + dot(&a, &self.means);
        let b_bar = -params.omega_y + dot(&b, &self.means);
        let mut sa = vec![0.0; k];
        let mut sb = vec![0.0; k];
        self.mat_vec(&a, &mut sa);
        self.mat_vec(&b, &mut sb);
        let saa = n * a_bar * a_bar + dot(&a, &sa);
        let sab = n * a_bar * b_bar + dot(&a, &sb);
        let sbb = n * b_bar * b_bar + dot(&b, &sb);

        let (dx, dy, sx, sy) = (params.delta_x, params.delta_y, params.sigma_x, params.sigma_y);
        let tx2 = dx * dx + sx * sx;
        let ty2 = dy * dy + sy * sy;
        let lambda = dx * dy;
        let det = sx * sx * sy * sy + dx * dx * sy * sy + dy * dy * sx * sx;
        let q = ty2 * saa - 2.0 * lambda * sab + tx2 * sbb;
        let ll = -n * (2.0 * PI).ln() - 0.5 * n * det.ln() - q / (2.0 * det);
        if !ll.is_finite() {
            return f64::NEG_INFINITY;
        }

        if let Some(g) = grad {
            let inv = 1.0 / det;
            // d ll / d (coefficient of column k) for each residual
            let ga = |col: usize| -inv * (ty2 * (n * a_bar * self.means[col] + sa[col]) - lambda * (n * b_bar * self.means[col] + sb[col]));
            let gb = |col: usize| -inv * (tx2 * (n * b_bar * self.means[col] + sb[col]) - lambda * (n * a_bar * self.means[col] + sa[col]));
            let ga0 = -inv * (ty2 * n * a_bar - lambda * n * b_bar);
            let gb0 = -inv * (tx2 * n * b_bar - lambda * n * a_bar);

            g.omega_x += -ga0;
            g.omega_y += -gb0;
            g.theta += -gb(COL_X);
            for idx in 0..params.j() {
                g.alpha[idx] += -ga(COL_Z + idx);
                g.beta[idx] += -gb(COL_Z + idx);
            }
            if params.interaction.is_some() {
                g.psi[0] += -ga(COL_W);
                g.psi[1] += -gb(COL_W);
                g.psi[2] += -gb(COL_XW);
            }

            let g_tx2 = -0.5 * n * ty2 * inv - 0.5 * sbb * inv + 0.5 * q * ty2 * inv * inv;
            let g_ty2 = -0.5 * n * tx2 * inv - 0.5 * saa * inv + 0.5 * q * tx2 * inv * inv;
            let g_l = n * lambda * inv + sab * inv - q * lambda * inv * inv;
            g.delta_x += 2.0 * dx * g_tx2 + dy * g_l;
            g.delta_y += 2.0 * dy * g_ty2 + dx * g_l;
            g.sigma_x += 2.0 * sx * g_tx2;
            g.sigma_y += 2.0 * sy * g_ty2;
        }
        ll
    }

    /// Log-likelihood from sufficient statistics.
    pub fn log_likelihood(&self, params: &ParameterSet) -> f64 {
        self.evaluate(params, None)
    }
}
