//! Simulation studies: every replicate of a scenario under the null and the
//! alternative, analysed by both the Bayesian model and the weighted median.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baselines::{per_snp_regressions, wme_estimate};
use crate::data::MRDataset;
use crate::error::Result;
use crate::fit::{fit, FitConfig};
use crate::metrics::{IntervalEstimate, KappaRecord, MethodMetrics, Table1Row};
use crate::rng::child_seed;
use crate::simgen::{run_scenario, GroundTruth, ReplicateOutcome, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WmeConfig {
    pub bootstrap_reps: usize,
    /// Probability mass of the bootstrap interval.
    pub mass: f64,
}

impl Default for WmeConfig {
    fn default() -> Self {
        Self { bootstrap_reps: 1000, mass: 0.95 }
    }
}

/// Bayesian result of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesReplicate {
    pub theta: IntervalEstimate,
    pub theta_prime: Option<IntervalEstimate>,
    pub kappa_means: Vec<f64>,
    /// Reasons the fit failed the reliability checks; empty when it passed.
    pub issues: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateAnalysis {
    pub bayes: std::result::Result<BayesReplicate, String>,
    pub wme: std::result::Result<IntervalEstimate, String>,
}

/// Fit one dataset with both methods. `seed` drives the sampler and the
/// bootstrap; the two never share a stream.
pub fn analyze(data: &MRDataset, fit_config: &FitConfig, wme: &WmeConfig, seed: u64) -> ReplicateAnalysis {
    let mut config = fit_config.clone();
    config.hmc.seed = child_seed(seed, 0);
    let bayes = fit(data, &config)
        .map(|f| BayesReplicate {
            theta: f.interval("theta").expect("theta is always summarized"),
            theta_prime: f.interval("theta_prime"),
            kappa_means: f.draws.kappa_means(),
            issues: f.issues,
        })
        .map_err(|e| e.to_string());
    let wme = wme_estimate(&per_snp_regressions(data), wme.bootstrap_reps, wme.mass, child_seed(seed, 1))
        .map(|r| IntervalEstimate::new(r.estimate, r.lower, r.upper))
        .map_err(|e| e.to_string());
    ReplicateAnalysis { bayes, wme }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Null,
    Alternative,
}

impl Hypothesis {
    pub fn as_str(self) -> &'static str {
        match self {
            Hypothesis::Null => "null",
            Hypothesis::Alternative => "alternative",
        }
    }
}

/// The data-generating configuration of one arm. The null arm sets `θ = 0`;
/// the alternative keeps the scenario's `theta_true` and draws its
/// replicates from a different seed.
pub fn arm(scenario: &ScenarioConfig, hypothesis: Hypothesis) -> ScenarioConfig {
    let mut c = scenario.clone();
    match hypothesis {
        Hypothesis::Null => c.theta_true = 0.0,
        Hypothesis::Alternative => c.seed = child_seed(scenario.seed, 1),
    }
    c
}

/// Analyse every replicate of one arm.
pub fn run_arm(
    scenario: &ScenarioConfig,
    hypothesis: Hypothesis,
    fit_config: &FitConfig,
    wme: &WmeConfig,
) -> Result<Vec<ReplicateOutcome<ReplicateAnalysis>>> {
    let config = arm(scenario, hypothesis);
    let base = child_seed(config.seed, 2);
    run_scenario(&config, |data: &MRDataset, _: &GroundTruth, r| Ok(analyze(data, fit_config, wme, child_seed(base, r))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStudy {
    pub scenario: ScenarioConfig,
    pub null: Vec<ReplicateOutcome<ReplicateAnalysis>>,
    pub alternative: Vec<ReplicateOutcome<ReplicateAnalysis>>,
}

pub fn run_study(scenario: &ScenarioConfig, fit_config: &FitConfig, wme: &WmeConfig) -> Result<ScenarioStudy> {
    Ok(ScenarioStudy {
        scenario: scenario.clone(),
        null: run_arm(scenario, Hypothesis::Null, fit_config, wme)?,
        alternative: run_arm(scenario, Hypothesis::Alternative, fit_config, wme)?,
    })
}

/// Successful Bayesian intervals for `θ` of an arm.
pub fn bayes_intervals(arm: &[ReplicateOutcome<ReplicateAnalysis>]) -> Vec<IntervalEstimate> {
    arm.iter().filter_map(|o| o.result.as_ref().ok()?.bayes.as_ref().ok().map(|b| b.theta)).collect()
}

/// Successful weighted-median intervals of an arm.
pub fn wme_intervals(arm: &[ReplicateOutcome<ReplicateAnalysis>]) -> Vec<IntervalEstimate> {
    arm.iter().filter_map(|o| o.result.as_ref().ok()?.wme.as_ref().ok().copied()).collect()
}

impl ScenarioStudy {
    fn arms(&self) -> impl Iterator<Item = (Hypothesis, &ReplicateOutcome<ReplicateAnalysis>)> {
        self.null
            .iter()
            .map(|o| (Hypothesis::Null, o))
            .chain(self.alternative.iter().map(|o| (Hypothesis::Alternative, o)))
    }

    /// Metrics of both methods. Fits that failed the reliability checks are
    /// kept; fits that errored are left out and counted.
    pub fn table_row(&self) -> Table1Row {
        let theta = self.scenario.theta_true;
        let failed = |f: &dyn Fn(&ReplicateAnalysis) -> bool| {
            self.arms().filter(|(_, o)| o.result.as_ref().map_or(true, |a| f(a))).count()
        };
        Table1Row {
            scenario_id: self.scenario.scenario_id.clone(),
            pleiotropy: self.scenario.pleiotropy,
            sample_size: self.scenario.sample_size,
            bayes: MethodMetrics::compute(&bayes_intervals(&self.null), &bayes_intervals(&self.alternative), theta),
            wme: MethodMetrics::compute(&wme_intervals(&self.null), &wme_intervals(&self.alternative), theta),
            bayes_failures: failed(&|a| a.bayes.is_err()),
            wme_failures: failed(&|a| a.wme.is_err()),
            bayes_unreliable: self
                .arms()
                .filter(|(_, o)| matches!(&o.result, Ok(ReplicateAnalysis { bayes: Ok(b), .. }) if !b.issues.is_empty()))
                .count(),
        }
    }

    /// Posterior-mean `κ` of every successful Bayesian fit, null arm first.
    pub fn kappa_records(&self) -> Vec<KappaRecord> {
        self.arms()
            .filter_map(|(h, o)| {
                let b = o.result.as_ref().ok()?.bayes.as_ref().ok()?;
                Some(KappaRecord {
                    scenario_id: format!("{}-{}", self.scenario.scenario_id, h.as_str()),
                    replicate: o.replicate,
                    kappa_means: b.kappa_means.clone(),
                    pleiotropic: o.truth.pleiotropic.clone(),
                })
            })
            .collect()
    }
}

/// One row per replicate and method:
/// `scenario, hypothesis, replicate, theta_true, method, estimate, lower, upper, status`.
/// `status` is `ok`, `unreliable`, or the error message of a failed fit.
pub fn write_replicates_csv<W: Write>(studies: &[ScenarioStudy], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["scenario", "hypothesis", "replicate", "theta_true", "method", "estimate", "lower", "upper", "status"])?;
    for s in studies {
        for (h, o) in s.arms() {
            let rows: [(&str, std::result::Result<(IntervalEstimate, &str), String>); 2] = match &o.result {
                Ok(a) => [
                    (
                        "bayes",
                        a.bayes
                            .as_ref()
                            .map(|b| (b.theta, if b.issues.is_empty() { "ok" } else { "unreliable" }))
                            .map_err(Clone::clone),
                    ),
                    ("wme", a.wme.as_ref().map(|i| (*i, "ok")).map_err(Clone::clone)),
                ],
                Err(e) => [("bayes", Err(e.clone())), ("wme", Err(e.clone()))],
            };
            for (method, r) in rows {
                let mut rec =
                    vec![s.scenario.scenario_id.clone(), h.as_str().into(), o.replicate.to_string(), o.truth.theta.to_string(), method.into()];
                match r {
                    Ok((i, status)) => {
                        rec.extend([i.estimate.to_string(), i.lower.to_string(), i.upper.to_string(), status.into()])
                    }
                    Err(e) => rec.extend([String::new(), String::new(), String::new(), e]),
                }
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
