//! Load an experiment file, resolve its defaults and run it the way the
//! command-line tool does.
//!
//! Usage: `cargo run --release --example cli_config [config.toml]`

use normflow::cli::{run, ExperimentConfig, Mode};

fn main() -> normflow::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).map_err(|e| normflow::Error::Io(format!("{path}: {e}")))?,
        None => include_str!("configs/one_neuron.toml").to_string(),
    };
    let file = ExperimentConfig::from_toml(&text)?;
    let mut cfg = file.resolve(file.mode.unwrap_or(Mode::Flow))?;
    cfg.output_dir = std::env::temp_dir().join("normflow-example").join(&cfg.output_dir);
    println!("resolved: {}", serde_json::to_string(&cfg).unwrap());
    for line in run(&cfg)?.lines {
        println!("{line}");
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}
