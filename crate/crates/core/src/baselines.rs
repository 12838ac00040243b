//! Per-instrument regressions and the weighted median estimator.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::MRDataset;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{quantile_sorted, sorted};

/// Simple least-squares fit of one instrument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnpRegression {
    pub b_x: f64,
    pub se_x: f64,
    pub b_y: f64,
    pub se_y: f64,
}

/// Per-instrument regressions of the exposure and the outcome on each
/// instrument. `None` marks an instrument with no variation in the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSNPStats {
    pub instruments: Vec<Option<SnpRegression>>,
}

/// Slope of `v` on `z` and its classical standard error.
fn slope(z: &[f64], v: &[f64]) -> Option<(f64, f64)> {
    let n = z.len() as f64;
    let zm = z.iter().sum::<f64>() / n;
    let vm = v.iter().sum::<f64>() / n;
    let szz: f64 = z.iter().map(|a| (a - zm) * (a - zm)).sum();
    if szz <= 0.0 {
        return None;
    }
    let szv: f64 = z.iter().zip(v).map(|(a, b)| (a - zm) * (b - vm)).sum();
    let b = szv / szz;
    let rss: f64 = z.iter().zip(v).map(|(a, c)| (c - vm - b * (a - zm)).powi(2)).sum();
    let se = if n > 2.0 { (rss / (n - 2.0) / szz).sqrt() } else { f64::NAN };
    Some((b, se))
}

pub fn per_snp_regressions(data: &MRDataset) -> PerSNPStats {
    let instruments = (0..data.j())
        .map(|k| {
            let z = data.instrument(k);
            let (b_x, se_x) = slope(&z, data.exposure())?;
            let (b_y, se_y) = slope(&z, data.outcome())?;
            Some(SnpRegression { b_x, se_x, b_y, se_y })
        })
        .collect();
    PerSNPStats { instruments }
}

impl PerSNPStats {
    /// CSV with columns `instrument, b_x, se_x, b_y, se_y`; instruments without
    /// variation have empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["instrument", "b_x", "se_x", "b_y", "se_y"])?;
        for (k, r) in self.instruments.iter().enumerate() {
            let id = format!("z{}", k + 1);
            match r {
                Some(r) => w.write_record([
                    id,
                    r.b_x.to_string(),
                    r.se_x.to_string(),
                    r.b_y.to_string(),
                    r.se_y.to_string(),
                ])?,
                None => w.write_record([id.as_str(), "", "", "", ""])?,
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Weighted median by interpolation: with values sorted ascending and
/// weights normalized, the `k`-th value sits at cumulative weight
/// `Σ_{i<k} w_i + w_k / 2`, and the median is read off by linear
/// interpolation at 0.5.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::Precondition("values and weights must have equal, nonzero length".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("weights must be finite and non-negative, values finite".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Precondition("weights must have a positive sum".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut cum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &i in &order {
        let w = weights[i] / total;
        let p = cum + 0.5 * w;
        cum += w;
        if p >= 0.5 {
            return Ok(match prev {
                Some((p0, v0)) if p > p0 => v0 + (values[i] - v0) * (0.5 - p0) / (p - p0),
                _ => values[i],
            });
        }
        prev = Some((p, values[i]));
    }
    Ok(values[*order.last().expect("nonempty")])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WmeResult {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Instruments that entered the estimate (0-based).
    pub used_instruments: Vec<usize>,
}

/// Inverse-variance ratio weights `b_x² / se_y²` of the usable instruments.
pub fn ratio_weights(stats: &PerSNPStats) -> Vec<Option<f64>> {
    stats
        .instruments
        .iter()
        .map(|r| {
            let r = r.as_ref()?;
            (r.b_x.abs() >= 1e-12 && r.se_y > 0.0 && r.se_y.is_finite()).then(|| r.b_x * r.b_x / (r.se_y * r.se_y))
        })
        .collect()
}

/// Weighted median estimate with a parametric-bootstrap percentile interval.
pub fn wme_estimate(stats: &PerSNPStats, bootstrap_reps: usize, mass: f64, seed: u64) -> Result<WmeResult> {
    wme_estimate_with_weights(stats, &ratio_weights(stats), bootstrap_reps, mass, seed)
}

/// As [`wme_estimate`] but with caller-supplied weights. Instruments whose
/// weight is `None` are left out. The weights stay fixed across bootstrap
/// replicates.
pub fn wme_estimate_with_weights(
    stats: &PerSNPStats,
    weights: &[Option<f64>],
    bootstrap_reps: usize,
    mass: f64,
    seed: u64,
) -> Result<WmeResult> {
    if weights.len() != stats.instruments.len() {
        return Err(Error::DimensionMismatch { expected: stats.instruments.len(), actual: weights.len() });
    }
    if !(mass > 0.0 && mass < 1.0) || bootstrap_reps == 0 {
        return Err(Error::Precondition("need mass in (0, 1) and at least one bootstrap replicate".into()));
    }
    let mut used = Vec::new();
    let mut rows = Vec::new();
    let mut w = Vec::new();
    for (k, (r, wk)) in stats.instruments.iter().zip(weights).enumerate() {
        match (r, wk) {
            (Some(r), Some(wk)) if r.b_x.abs() >= 1e-12 => {
                used.push(k);
                rows.push(*r);
                w.push(*wk);
            }
            _ => log::warn!("instrument z{} excluded from the weighted median", k + 1),
        }
    }
    if used.len() < 3 {
        return Err(Error::Precondition(format!("at least 3 usable instruments are required, got {}", used.len())));
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.b_y / r.b_x).collect();
    let estimate = weighted_median(&ratios, &w)?;

    let boot: Vec<f64> = (0..bootstrap_reps)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, b as u64);
            let r: Vec<f64> = rows
                .iter()
                .map(|r| {
                    let ex: f64 = rng.sample(StandardNormal);
                    let ey: f64 = rng.sample(StandardNormal);
                    (r.b_y + r.se_y * ey) / (r.b_x + r.se_x * ex)
                })
                .collect();
            weighted_median(&r, &w)
        })
        .collect::<Result<_>>()?;
    let s = sorted(&boot);
    let tail = 0.5 * (1.0 - mass);
    Ok(WmeResult {
        estimate,
        lower: quantile_sorted(&s, tail),
        upper: quantile_sorted(&s, 1.0 - tail),
        used_instruments: used,
    })
}
