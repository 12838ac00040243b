//! Frequentist operating characteristics of interval estimates across
//! simulation replicates, and shrinkage-weight summaries.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::simgen::Pleiotropy;

/// Point estimate and interval for one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IntervalEstimate {
    pub fn new(estimate: f64, lower: f64, upper: f64) -> Self {
        Self { estimate, lower, upper }
    }

    /// Closed-interval containment.
    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

fn fraction(results: &[IntervalEstimate], pred: impl Fn(&IntervalEstimate) -> bool) -> f64 {
    if results.is_empty() {
        return f64::NAN;
    }
    results.iter().filter(|r| pred(r)).count() as f64 / results.len() as f64
}

/// Fraction of intervals containing `truth`, endpoints included.
pub fn coverage(results: &[IntervalEstimate], truth: f64) -> f64 {
    fraction(results, |r| r.covers(truth))
}

/// Fraction of intervals lying strictly above `truth`.
pub fn fraction_above(results: &[IntervalEstimate], truth: f64) -> f64 {
    fraction(results, |r| r.lower > truth)
}

/// Fraction of intervals lying strictly below `truth`.
pub fn fraction_below(results: &[IntervalEstimate], truth: f64) -> f64 {
    fraction(results, |r| r.upper < truth)
}

/// Fraction of intervals with a strictly positive lower bound.
pub fn power(results: &[IntervalEstimate]) -> f64 {
    fraction_above(results, 0.0)
}

/// Mean signed error of the point estimates.
pub fn bias(results: &[IntervalEstimate], truth: f64) -> f64 {
    if results.is_empty() {
        return f64::NAN;
    }
    results.iter().map(|r| r.estimate - truth).sum::<f64>() / results.len() as f64
}

/// Mean posterior `κ` over the pleiotropic and the remaining instruments.
pub fn shrinkage_separation(kappa_means: &[f64], pleiotropic: &[usize]) -> (f64, f64) {
    let (mut sp, mut np, mut so, mut no) = (0.0, 0usize, 0.0, 0usize);
    for (k, v) in kappa_means.iter().enumerate() {
        if pleiotropic.contains(&k) {
            sp += v;
            np += 1;
        } else {
            so += v;
            no += 1;
        }
    }
    (sp / np as f64, so / no as f64)
}

/// The five metrics of one method in one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub coverage_null: f64,
    pub coverage_alternative: f64,
    pub power: f64,
    pub bias_null: f64,
    pub bias_alternative: f64,
}

impl MethodMetrics {
    pub fn compute(null: &[IntervalEstimate], alternative: &[IntervalEstimate], theta_alternative: f64) -> Self {
        Self {
            coverage_null: coverage(null, 0.0),
            coverage_alternative: coverage(alternative, theta_alternative),
            power: power(alternative),
            bias_null: bias(null, 0.0),
            bias_alternative: bias(alternative, theta_alternative),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub scenario_id: String,
    pub pleiotropy: Pleiotropy,
    pub sample_size: usize,
    pub bayes: MethodMetrics,
    pub wme: MethodMetrics,
    /// Replicates whose fit failed, per method.
    pub bayes_failures: usize,
    pub wme_failures: usize,
    /// Bayesian fits kept in the metrics although they failed the
    /// convergence or divergence checks.
    pub bayes_unreliable: usize,
}

fn sign(p: Pleiotropy) -> &'static str {
    match p {
        Pleiotropy::Balanced => "0",
        Pleiotropy::Negative => "-",
        Pleiotropy::Positive => "+",
    }
}

pub fn write_table1_csv<W: Write>(rows: &[Table1Row], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let metrics = ["coverage_null", "coverage_alternative", "power", "bias_null", "bias_alternative"];
    let mut header = vec!["scenario".to_string(), "pleiotropy".to_string(), "sample_size".to_string()];
    for method in ["bayes", "wme"] {
        header.extend(metrics.iter().map(|m| format!("{method}_{m}")));
    }
    header.extend(["bayes_failures".to_string(), "wme_failures".to_string(), "bayes_unreliable".to_string()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.scenario_id.clone(), sign(r.pleiotropy).to_string(), r.sample_size.to_string()];
        for m in [&r.bayes, &r.wme] {
            rec.extend(
                [m.coverage_null, m.coverage_alternative, m.power, m.bias_null, m.bias_alternative]
                    .iter()
                    .map(|v| v.to_string()),
            );
        }
        rec.extend([r.bayes_failures.to_string(), r.wme_failures.to_string(), r.bayes_unreliable.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Posterior-mean `κ` of every instrument in one fitted replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRecord {
    pub scenario_id: String,
    pub replicate: u64,
    pub kappa_means: Vec<f64>,
    pub pleiotropic: Vec<usize>,
}

/// Long-format CSV: `scenario, replicate, instrument, pleiotropic, kappa`.
pub fn write_kappa_csv<W: Write>(records: &[KappaRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["scenario", "replicate", "instrument", "pleiotropic", "kappa"])?;
    for r in records {
        for (k, v) in r.kappa_means.iter().enumerate() {
            w.write_record([
                r.scenario_id.clone(),
                r.replicate.to_string(),
                format!("z{}", k + 1),
                u8::from(r.pleiotropic.contains(&k)).to_string(),
                v.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
