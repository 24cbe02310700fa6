//! Minimize the half-space energy of 30 points on S^2 and print the trajectory.

use hyperspherical::objectives::{ObjectiveKind, ObjectiveSpec};
use hyperspherical::optimizer::{run, OptimizerConfig};
use hyperspherical::sphere::sample_uniform;
use hyperspherical::Metric;

fn main() -> hyperspherical::Result<()> {
    let init = sample_uniform(30, 3, 11)?;
    let spec = ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal).with_weight(1e-3);
    let opt = OptimizerConfig {
        lr_schedule: vec![(0, 0.01), (1500, 0.001)],
        max_iters: 2000,
        record_every: 250,
        ..OptimizerConfig::default()
    };
    let trajectory = run(&init, &spec, &opt)?;
    trajectory.write_csv(std::io::stdout())?;
    Ok(())
}
