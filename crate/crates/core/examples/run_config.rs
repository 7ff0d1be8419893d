//! Builds an experiment config in code, writes it next to its outputs and
//! runs it, as `polymer-lab run config.json` would.
//!
//! cargo run --release --example run_config -- [output_dir]

use std::path::PathBuf;

use polymer_lab::experiment::{run, shortcut_config, ExperimentKind};
use polymer_lab::DistributionModel;

fn main() -> polymer_lab::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/rate".into()));
    let mut config = shortcut_config(ExperimentKind::RateFunction, DistributionModel::rademacher(), out.clone());
    config.n_list = vec![32, 64];
    config.samples = 50;

    let summary = run(&config)?;
    std::fs::write(out.join("config.json"), serde_json::to_string_pretty(&config)?)?;
    println!("wrote {:?} to {}", summary.files, out.display());
    println!("{} checks, all pass: {}", summary.checks.len(), summary.pass);
    Ok(())
}
