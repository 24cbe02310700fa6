//! Compare the unrolled inner solvers with the sampling oracles.

use hyperspherical::objectives::{mhc_covering, mhp_value, InnerLoopConfig, KernelSpec};
use hyperspherical::reference::{covering_sample_oracle, polarization_grid_oracle};
use hyperspherical::sphere::sample_uniform;
use hyperspherical::Metric;

fn main() -> hyperspherical::Result<()> {
    let config = sample_uniform(6, 3, 3)?;
    let kernel = KernelSpec::riesz(1.0, Metric::Chordal);
    let inner = InnerLoopConfig {
        steps: 300,
        lr: 0.05,
        restarts: 16,
        ..InnerLoopConfig::default()
    };
    let p = mhp_value(&config, &kernel, &inner)?.value;
    let po = polarization_grid_oracle(&config, &kernel, 10_000, 0)?;
    println!("polarization: unrolled {p:.6}, oracle {:.6} ({:?})", po.estimate, po.method);

    let c = mhc_covering(&config, Metric::Geodesic, &InnerLoopConfig { lr: 0.1, ..inner })?.value;
    let co = covering_sample_oracle(&config, Metric::Geodesic, 10_000, 0)?;
    println!("covering:     ascent   {c:.6}, oracle {:.6}", co.estimate);
    Ok(())
}
