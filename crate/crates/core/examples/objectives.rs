//! Evaluate every objective on the same random configuration.

use hyperspherical::objectives::{evaluate, KernelSpec, ObjectiveKind, ObjectiveSpec};
use hyperspherical::sphere::sample_uniform;
use hyperspherical::Metric;

fn main() -> hyperspherical::Result<()> {
    let config = sample_uniform(12, 3, 1)?;
    let specs = [
        ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal).with_kernel(KernelSpec::riesz(1.0, Metric::Chordal)),
        ObjectiveSpec::new(ObjectiveKind::Mhs, Metric::Geodesic),
        ObjectiveSpec::new(ObjectiveKind::Mhp, Metric::Chordal),
        ObjectiveSpec::new(ObjectiveKind::Rmhp, Metric::Chordal),
        ObjectiveSpec::new(ObjectiveKind::Mhc, Metric::Geodesic),
        ObjectiveSpec::new(ObjectiveKind::MhcRelaxed, Metric::Geodesic),
        ObjectiveSpec::new(ObjectiveKind::Mgd, Metric::Chordal),
    ];
    for spec in &specs {
        let v = evaluate(&config, spec, 0)?;
        let grad_norm = v.gradient.map_or(0.0, |g| g.iter().map(|x| x * x).sum::<f64>().sqrt());
        println!(
            "{:<12} augment={:<5} {:?} {:>12.6}  |grad| {grad_norm:.4}",
            spec.kind.name(),
            spec.augment,
            v.sense,
            v.value
        );
    }
    Ok(())
}
