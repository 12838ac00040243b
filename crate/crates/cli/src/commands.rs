//! The `fit`, `simulate` and `wme` subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bayesmr::baselines::{per_snp_regressions, ratio_weights, wme_estimate};
use bayesmr::fit::{fit, FitResult};
use bayesmr::metrics::{write_kappa_csv, write_table1_csv};
use bayesmr::rng::child_seed;
use bayesmr::sampler::ParamSummary;
use bayesmr::stats::{mean, quantile_sorted, sorted, variance};
use bayesmr::study::{run_study, write_replicates_csv};
use bayesmr::MRDataset;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

fn output_dir(path: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = path.ok_or_else(|| CliError::Input("no output location: pass --out or set `out` in the config".into()))?;
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Input(format!("cannot create output directory {}: {e}", dir.display())))?;
    Ok(dir)
}

fn load_data(path: Option<PathBuf>) -> Result<MRDataset, CliError> {
    let path = path.ok_or_else(|| CliError::Input("no dataset: pass --data or set `data` in the config".into()))?;
    if !path.is_file() {
        return Err(CliError::Input(format!("dataset {} does not exist", path.display())));
    }
    MRDataset::from_csv_path(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(bayesmr::Error::from)?;
    writeln!(w).map_err(bayesmr::Error::from)?;
    w.flush().map_err(bayesmr::Error::from)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitSummary<'a> {
    reliable: bool,
    issues: &'a [String],
    chains: usize,
    draws_per_chain: usize,
    divergent_fraction: f64,
    unreliable_chains: &'a [usize],
    /// The quantities of interest: `theta`, plus `psi_yxw` and `theta_prime`
    /// when the interaction model is fitted.
    estimates: Vec<&'a ParamSummary>,
    parameters: &'a [ParamSummary],
}

/// Posterior mean, standard deviation and 95% interval of each `κ_j`.
fn write_kappa_summary(result: &FitResult, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["instrument", "mean", "sd", "lower", "upper"]).map_err(bayesmr::Error::from)?;
    for k in 0..result.draws.j() {
        let draws: Vec<f64> = result.draws.chains.iter().flat_map(|c| c.kappa.iter().map(|v| v[k])).collect();
        let s = sorted(&draws);
        let sd = if draws.len() > 1 { variance(&draws).sqrt() } else { 0.0 };
        w.write_record([
            format!("z{}", k + 1),
            mean(&draws).to_string(),
            sd.to_string(),
            quantile_sorted(&s, 0.025).to_string(),
            quantile_sorted(&s, 0.975).to_string(),
        ])
        .map_err(bayesmr::Error::from)?;
    }
    w.flush().map_err(bayesmr::Error::from)?;
    Ok(())
}

/// Returns whether the fit passed the reliability checks.
pub fn cmd_fit(mut config: RunConfig) -> Result<bool, CliError> {
    config.validate()?;
    let mut data = load_data(config.data.clone())?;
    let out = output_dir(config.out.clone())?;
    if let Some(seed) = config.seed {
        config.hmc.seed = seed;
    }
    if data.covariate().is_some() && !config.model.interaction_enabled {
        log::warn!("dataset has a `w` column but the interaction model is disabled; the covariate is ignored");
        data = data.without_covariate();
    }
    if data.covariate().is_none() && config.model.interaction_enabled {
        return Err(CliError::Input("the interaction model needs a `w` column in the dataset".into()));
    }

    let result = fit(&data, &config.fit_config()).map_err(|e| CliError::Input(e.to_string()))?;
    result.draws.write_csv(create(&out.join("draws.csv"))?)?;
    write_kappa_summary(&result, &out.join("kappa.csv"))?;
    per_snp_regressions(&data).write_csv(create(&out.join("per_snp.csv"))?)?;
    let names: &[&str] =
        if config.model.interaction_enabled { &["theta", "psi_yxw", "theta_prime"] } else { &["theta"] };
    let s = &result.summary;
    let summary = FitSummary {
        reliable: result.reliable(),
        issues: &result.issues,
        chains: s.chains,
        draws_per_chain: s.draws_per_chain,
        divergent_fraction: s.divergent_fraction,
        unreliable_chains: &s.unreliable_chains,
        estimates: names.iter().filter_map(|n| s.get(n)).collect(),
        parameters: &s.parameters,
    };
    write_json(&out.join("summary.json"), &summary)?;
    for issue in &result.issues {
        log::warn!("{issue}");
    }
    Ok(result.reliable())
}

pub fn cmd_simulate(mut config: RunConfig) -> Result<(), CliError> {
    config.validate()?;
    if config.scenario.is_empty() {
        return Err(CliError::Input("no [[scenario]] entries in the config".into()));
    }
    let out = output_dir(config.out.clone())?;
    if let Some(seed) = config.seed {
        config.hmc.seed = seed;
        for (k, s) in config.scenario.iter_mut().enumerate() {
            s.seed = child_seed(seed, k as u64);
        }
    }
    let mut studies = Vec::with_capacity(config.scenario.len());
    for scenario in &config.scenario {
        let mut fit_config = config.fit_config();
        fit_config.model.interaction_enabled = scenario.interaction.is_some();
        log::info!("scenario {}: {} replicates per arm", scenario.scenario_id, scenario.replicates);
        studies.push(run_study(scenario, &fit_config, &config.wme)?);
    }
    let rows: Vec<_> = studies.iter().map(|s| s.table_row()).collect();
    write_table1_csv(&rows, create(&out.join("table1.csv"))?)?;
    let kappa: Vec<_> = studies.iter().flat_map(|s| s.kappa_records()).collect();
    write_kappa_csv(&kappa, create(&out.join("kappa.csv"))?)?;
    write_replicates_csv(&studies, create(&out.join("replicates.csv"))?)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct InstrumentRow {
    instrument: String,
    b_x: Option<f64>,
    se_x: Option<f64>,
    b_y: Option<f64>,
    se_y: Option<f64>,
    ratio: Option<f64>,
    weight: Option<f64>,
    used: bool,
}

#[derive(Debug, Serialize)]
struct WmeReport {
    estimate: f64,
    lower: f64,
    upper: f64,
    mass: f64,
    bootstrap_reps: usize,
    seed: u64,
    instruments: Vec<InstrumentRow>,
}

pub fn cmd_wme(config: RunConfig) -> Result<(), CliError> {
    config.validate()?;
    let data = load_data(config.data.clone())?;
    let out = config.out.clone().ok_or_else(|| CliError::Input("no output file: pass --out".into()))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create output directory {}: {e}", dir.display())))?;
    }
    let seed = config.seed.unwrap_or(0);
    let stats = per_snp_regressions(&data);
    let result = wme_estimate(&stats, config.wme.bootstrap_reps, config.wme.mass, seed)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let weights = ratio_weights(&stats);
    let instruments = stats
        .instruments
        .iter()
        .zip(&weights)
        .enumerate()
        .map(|(k, (r, w))| InstrumentRow {
            instrument: format!("z{}", k + 1),
            b_x: r.map(|r| r.b_x),
            se_x: r.map(|r| r.se_x),
            b_y: r.map(|r| r.b_y),
            se_y: r.map(|r| r.se_y),
            ratio: r.filter(|r| r.b_x.abs() >= 1e-12).map(|r| r.b_y / r.b_x),
            weight: *w,
            used: result.used_instruments.contains(&k),
        })
        .collect();
    let report = WmeReport {
        estimate: result.estimate,
        lower: result.lower,
        upper: result.upper,
        mass: config.wme.mass,
        bootstrap_reps: config.wme.bootstrap_reps,
        seed,
        instruments,
    };
    write_json(&out, &report)
}
