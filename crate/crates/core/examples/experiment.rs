//! Run an experiment file the same way `hyperspherical optimize` does.

use hyperspherical::experiment::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"{
    "objective": {"objective": "mhs", "kernel": {"metric": "geodesic"}},
    "optimizer": {"lr_schedule": [[0, 0.02], [1500, 0.002]], "max_iters": 3000, "seed": 5},
    "n": 12, "d": 3, "restarts": 8,
    "outputs": {"trajectory_csv": "trajectory.csv", "final_json": "final.json", "report_json": "report.json"}
}"#;

fn main() -> hyperspherical::Result<()> {
    let dir = std::env::temp_dir().join("hyperspherical-experiment");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("mhs.json");
    std::fs::write(&path, CONFIG)?;
    let config = ExperimentConfig::load(&path)?;
    let outcome = run_experiment(&config)?;
    println!("best restart {} of {}", outcome.runs.best, outcome.runs.restarts.len());
    println!("{}", serde_json::to_string_pretty(&outcome.report["diagnostics"])?);
    println!("outputs in {}", dir.display());
    Ok(())
}
