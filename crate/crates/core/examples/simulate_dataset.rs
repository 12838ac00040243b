//! Write one simulated replicate as a dataset CSV and its generating values as
//! JSON.
//!
//! cargo run --example simulate_dataset -- data.csv [truth.json] [seed] [--interaction]

use std::fs::File;
use std::io::BufWriter;

use bayesmr::simgen::{generate_replicate, InteractionTruth, Pleiotropy, ScenarioConfig};

fn main() -> bayesmr::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let interaction = args.iter().any(|a| a == "--interaction");
    let positional: Vec<&String> = args.iter().filter(|a| !a.starts_with("--")).collect();
    let data_path = positional.first().map_or("data.csv", |s| s.as_str());
    let seed = positional.get(2).map_or(Ok(1), |s| s.parse()).expect("seed must be an integer");

    let mut config = ScenarioConfig::new("example", Pleiotropy::Balanced, 520, 0.35);
    config.seed = seed;
    if interaction {
        config.theta_true = 0.34;
        config.interaction =
            Some(InteractionTruth { psi_xw: 0.1, psi_yw: 0.05, psi_yxw: -0.14, covariate_probability: 0.5 });
    }
    let (data, truth) = generate_replicate(&config, 0)?;
    data.write_csv(BufWriter::new(File::create(data_path)?))?;
    if let Some(path) = positional.get(1) {
        serde_json::to_writer_pretty(BufWriter::new(File::create(path.as_str())?), &truth)?;
    }
    Ok(())
}
