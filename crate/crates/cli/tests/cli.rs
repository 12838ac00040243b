use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bayesmr::sampler::{effective_sample_size, split_rhat};
use bayesmr::simgen::{generate_replicate, InteractionTruth, Pleiotropy, ScenarioConfig};
use bayesmr::stats::{mean, quantile_sorted, sorted, variance};
use bayesmr::MRDataset;
use serde_json::Value;

fn bayesmr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayesmr")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const FAST: &str = "[hmc]\nchain_count = 2\nwarmup_draws = 200\nsampling_draws = 200\n";

fn write_dataset(dir: &Path, name: &str, interaction: bool) -> PathBuf {
    let mut config = ScenarioConfig::new("t", Pleiotropy::Balanced, 300, 0.3);
    config.seed = 11;
    if interaction {
        config.interaction = Some(InteractionTruth { psi_xw: 0.1, psi_yw: 0.05, psi_yxw: -0.14, covariate_probability: 0.5 });
    }
    let (data, _) = generate_replicate(&config, 0).unwrap();
    let p = dir.join(name);
    data.write_csv(fs::File::create(&p).unwrap()).unwrap();
    p
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn read_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let mut cols = vec![Vec::new(); headers.len()];
    for rec in r.records() {
        for (c, v) in cols.iter_mut().zip(rec.unwrap().iter()) {
            c.push(v.parse().unwrap_or(f64::NAN));
        }
    }
    (headers, cols)
}

fn per_chain(chain: &[f64], values: &[f64]) -> Vec<Vec<f64>> {
    let n = chain.iter().fold(0.0f64, |a, &b| a.max(b)) as usize + 1;
    let mut out = vec![Vec::new(); n];
    for (c, v) in chain.iter().zip(values) {
        out[*c as usize].push(*v);
    }
    out
}

fn opt(v: &Value) -> Option<f64> {
    v.as_f64()
}

#[test]
fn fit_writes_artifacts_that_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path(), "data.csv", false);
    let config = write_config(dir.path(), "run.toml", FAST);
    let out = dir.path().join("fit");
    let o = bayesmr(&["fit", "--data", path(&data), "--config", path(&config), "--out", path(&out), "--seed", "3"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["draws.csv", "summary.json", "kappa.csv", "per_snp.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }

    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["reliable"].as_bool().unwrap(), o.status.code() == Some(0));
    assert_eq!(summary["estimates"].as_array().unwrap().len(), 1);
    assert_eq!(summary["estimates"][0]["name"], "theta");

    let (headers, cols) = read_columns(&out.join("draws.csv"));
    let col = |name: &str| &cols[headers.iter().position(|h| h == name).unwrap()];
    let chain = col("chain").clone();
    let params = summary["parameters"].as_array().unwrap();
    assert_eq!(params.len(), headers.len() - 4);
    for p in params {
        let name = p["name"].as_str().unwrap();
        let draws = col(name);
        let s = sorted(draws);
        assert_eq!(p["mean"].as_f64().unwrap(), mean(draws), "{name}");
        assert_eq!(p["sd"].as_f64().unwrap(), variance(draws).sqrt(), "{name}");
        assert_eq!(p["lower"].as_f64().unwrap(), quantile_sorted(&s, 0.025), "{name}");
        assert_eq!(p["upper"].as_f64().unwrap(), quantile_sorted(&s, 0.975), "{name}");
        let chains = per_chain(&chain, draws);
        let refs: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
        assert_eq!(opt(&p["rhat"]), split_rhat(&refs).ok().filter(|x| x.is_finite()), "{name}");
        assert_eq!(opt(&p["ess"]), effective_sample_size(&refs).ok().filter(|x| x.is_finite()), "{name}");
    }
    let divergent = col("divergent");
    assert_eq!(summary["divergent_fraction"].as_f64().unwrap(), mean(divergent));

    // Shrinkage weights are a function of the stored local scales.
    let (kh, kc) = read_columns(&out.join("kappa.csv"));
    assert_eq!(kh, ["instrument", "mean", "sd", "lower", "upper"]);
    for k in 0..kc[1].len() {
        let kappa: Vec<f64> = col(&format!("phi.{}", k + 1)).iter().map(|p| 1.0 / (1.0 + p * p)).collect();
        assert!((kc[1][k] - mean(&kappa)).abs() < 1e-12);
        let s = sorted(&kappa);
        assert!((kc[3][k] - quantile_sorted(&s, 0.025)).abs() < 1e-12);
        assert!((kc[4][k] - quantile_sorted(&s, 0.975)).abs() < 1e-12);
    }

    let (ph, pc) = read_columns(&out.join("per_snp.csv"));
    assert_eq!(ph, ["instrument", "b_x", "se_x", "b_y", "se_y"]);
    assert_eq!(pc[1].len(), 20);
}

#[test]
fn interaction_fit_reports_the_derived_effect() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path(), "data.csv", true);
    let config = write_config(dir.path(), "run.toml", &format!("[model]\ninteraction_enabled = true\n{FAST}"));
    let out = dir.path().join("fit");
    let o = bayesmr(&["fit", "--data", path(&data), "--config", path(&config), "--out", path(&out), "--seed", "2"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let names: Vec<&str> = summary["estimates"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["theta", "psi_yxw", "theta_prime"]);

    let (headers, cols) = read_columns(&out.join("draws.csv"));
    let col = |name: &str| &cols[headers.iter().position(|h| h == name).unwrap()];
    for ((t, p), tp) in col("theta").iter().zip(col("psi_yxw")).zip(col("theta_prime")) {
        assert_eq!(t + p, *tp);
    }
}

#[test]
fn covariate_is_ignored_without_the_interaction_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path(), "data.csv", true);
    let config = write_config(dir.path(), "run.toml", FAST);
    let out = dir.path().join("fit");
    let o = bayesmr(&["fit", "--data", path(&data), "--config", path(&config), "--out", path(&out)]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    assert!(String::from_utf8_lossy(&o.stderr).contains("covariate is ignored"));
    let (headers, _) = read_columns(&out.join("draws.csv"));
    assert!(!headers.iter().any(|h| h.starts_with("psi")));
}

#[test]
fn invalid_genotype_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "x,y,z1,z2\n0.1,0.2,0,1\n0.3,0.1,2,7\n0.2,0.4,1,1\n").unwrap();
    let o = bayesmr(&["fit", "--data", path(&p), "--out", path(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 2") && err.contains("z2"), "{err}");
}

#[test]
fn configuration_problems_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path(), "data.csv", false);
    let out = dir.path().join("o");
    let unknown = write_config(dir.path(), "a.toml", "[hmc]\nchains = 2\n");
    let o = bayesmr(&["fit", "--data", path(&data), "--config", path(&unknown), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("chains"));

    let bad = write_config(dir.path(), "b.toml", "[hmc]\ntarget_accept = 1.5\n");
    let o = bayesmr(&["fit", "--data", path(&data), "--config", path(&bad), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let o = bayesmr(&["fit", "--data", path(&dir.path().join("missing.csv")), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let no_cov = write_config(dir.path(), "c.toml", "[model]\ninteraction_enabled = true\n");
    let o = bayesmr(&["fit", "--data", path(&data), "--config", path(&no_cov), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let o = bayesmr(&["simulate", "--config", path(&write_config(dir.path(), "d.toml", FAST)), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let o = bayesmr(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_paths_are_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "data.csv", false);
    let config = write_config(dir.path(), "run.toml", "data = \"data.csv\"\nout = \"est.json\"\nseed = 4\n");
    let o = bayesmr(&["wme", "--config", path(&config)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("est.json").is_file());
}

#[test]
fn wme_reports_estimate_and_instruments() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path(), "data.csv", false);
    let out = dir.path().join("wme.json");
    let o = bayesmr(&["wme", "--data", path(&data), "--out", path(&out), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let (est, lo, hi) = (v["estimate"].as_f64().unwrap(), v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
    assert!(lo <= est && est <= hi);
    let rows = v["instruments"].as_array().unwrap();
    assert_eq!(rows.len(), 20);
    for r in rows {
        let ratio = r["ratio"].as_f64().unwrap();
        assert!((ratio - r["b_y"].as_f64().unwrap() / r["b_x"].as_f64().unwrap()).abs() < 1e-12);
        let w = r["weight"].as_f64().unwrap();
        let expected = (r["b_x"].as_f64().unwrap() / r["se_y"].as_f64().unwrap()).powi(2);
        assert!((w - expected).abs() <= 1e-9 * expected);
    }

    // The point estimate is the weighted median of the reported ratios.
    let (ratios, weights): (Vec<f64>, Vec<f64>) =
        rows.iter().map(|r| (r["ratio"].as_f64().unwrap(), r["weight"].as_f64().unwrap())).unzip();
    assert_eq!(est, bayesmr::baselines::weighted_median(&ratios, &weights).unwrap());
}

#[test]
fn wme_needs_three_usable_instruments() {
    let dir = tempfile::tempdir().unwrap();
    let data = MRDataset::new(
        2,
        vec![0.0, 1.0, 2.0, 1.0, 0.0, 2.0, 1.0, 1.0, 0.0, 2.0, 2.0, 0.0],
        vec![0.1, 0.9, 2.2, 1.1, 0.2, 1.8],
        vec![0.0, 0.5, 1.1, 0.4, 0.1, 0.9],
        None,
    )
    .unwrap();
    let p = dir.path().join("two.csv");
    data.write_csv(fs::File::create(&p).unwrap()).unwrap();
    let o = bayesmr(&["wme", "--data", path(&p), "--out", path(&dir.path().join("w.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_smoke_has_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sim.toml",
        &format!(
            "{FAST}[wme]\nbootstrap_reps = 100\n[[scenario]]\nscenario_id = \"s\"\npleiotropy = \"positive\"\n\
             sample_size = 300\ntheta_true = 0.35\nreplicates = 2\n"
        ),
    );
    let out = dir.path().join("sim");
    let o = bayesmr(&["simulate", "--config", path(&config), "--out", path(&out), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, c) = read_columns(&out.join("table1.csv"));
    assert_eq!(c[0].len(), 1);
    assert!(h.iter().any(|x| x == "bayes_coverage_null") && h.iter().any(|x| x == "wme_coverage_null"));

    // Table metrics recompute from the per-replicate rows.
    let mut r = csv::Reader::from_path(out.join("replicates.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    let cov = |hyp: &str, method: &str| {
        let sel: Vec<_> = rows.iter().filter(|x| &x[1] == hyp && &x[4] == method).collect();
        let truth: f64 = sel[0][3].parse().unwrap();
        let hit = sel
            .iter()
            .filter(|x| x[6].parse::<f64>().unwrap() <= truth && truth <= x[7].parse::<f64>().unwrap())
            .count();
        hit as f64 / sel.len() as f64
    };
    let get = |name: &str| c[h.iter().position(|x| x == name).unwrap()][0];
    assert_eq!(get("bayes_coverage_null"), cov("null", "bayes"));
    assert_eq!(get("wme_coverage_alternative"), cov("alternative", "wme"));

    let (kh, kc) = read_columns(&out.join("kappa.csv"));
    assert_eq!(kh, ["scenario", "replicate", "instrument", "pleiotropic", "kappa"]);
    assert_eq!(kc[4].len(), 4 * 20);
}

#[test]
fn table_one_configs_are_complete() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut rows = Vec::new();
    for k in 1..=6 {
        let text = fs::read_to_string(root.join(format!("scenario{k}.toml"))).unwrap();
        let v: toml::Value = toml::from_str(&text).unwrap();
        let s = &v["scenario"][0];
        rows.push((
            s["pleiotropy"].as_str().unwrap().to_string(),
            s["sample_size"].as_integer().unwrap(),
            s["replicates"].as_integer().unwrap(),
        ));
    }
    let expected = ["balanced", "negative", "positive", "balanced", "negative", "positive"];
    for (k, (p, n, r)) in rows.iter().enumerate() {
        assert_eq!(p, expected[k]);
        assert_eq!(*n, if k < 3 { 520 } else { 100 });
        assert_eq!(*r, 100);
    }
    let text = fs::read_to_string(root.join("interaction.toml")).unwrap();
    let v: toml::Value = toml::from_str(&text).unwrap();
    assert_eq!(v["model"]["interaction_enabled"].as_bool(), Some(true));
}

#[test]
fn six_scenarios_give_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("[hmc]\nchain_count = 1\nwarmup_draws = 50\nsampling_draws = 50\n[wme]\nbootstrap_reps = 20\n");
    for (k, (p, n)) in
        [("balanced", 520), ("negative", 520), ("positive", 520), ("balanced", 100), ("negative", 100), ("positive", 100)]
            .iter()
            .enumerate()
    {
        text += &format!(
            "[[scenario]]\nscenario_id = \"{}\"\npleiotropy = \"{p}\"\nsample_size = {n}\ntheta_true = 0.35\nreplicates = 1\n",
            k + 1
        );
    }
    let config = write_config(dir.path(), "six.toml", &text);
    let out = dir.path().join("six");
    let o = bayesmr(&["simulate", "--config", path(&config), "--out", path(&out), "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, c) = read_columns(&out.join("table1.csv"));
    assert_eq!(c[0], [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
}
