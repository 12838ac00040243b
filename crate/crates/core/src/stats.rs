//! Small descriptive-statistics helpers shared across modules.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Quantile of already-sorted data with the midpoint ("Hazen") rule: the
/// `k`-th order statistic sits at probability `(k − ½)/n`, with linear
/// interpolation in between and clamping outside.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = n as f64 * p + 0.5;
    if h <= 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let lo = h.floor();
    let frac = h - lo;
    let i = lo as usize - 1;
    if frac == 0.0 {
        sorted[i]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Equal-tailed interval holding `mass` of the draws.
pub fn credible_interval(draws: &[f64], mass: f64) -> Result<(f64, f64)> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::Precondition(format!("interval mass must lie in (0, 1), got {mass}")));
    }
    if draws.len() < 100 {
        return Err(Error::Precondition(format!("at least 100 draws are required, got {}", draws.len())));
    }
    let s = sorted(draws);
    let tail = 0.5 * (1.0 - mass);
    Ok((quantile_sorted(&s, tail), quantile_sorted(&s, 1.0 - tail)))
}
