//! Quality measures of a random and an optimized configuration.

use hyperspherical::diagnostics::{diagnose, spectral_check_thm8};
use hyperspherical::reference::cross_polytope;
use hyperspherical::sphere::sample_uniform;

fn main() -> hyperspherical::Result<()> {
    for (name, config) in [("uniform", sample_uniform(6, 3, 0)?), ("cross-polytope", cross_polytope(3)?)] {
        let r = diagnose(&config, 10_000, 0)?;
        println!(
            "{name:<15} E_2 {:.4}  separation {:.4}  covering {:.4}  |mass center| {:.2e}  sigma [{:.3}, {:.3}]",
            r.energy_s2, r.separation_geodesic, r.covering_estimate, r.masscenter_norm, r.sigma_min, r.sigma_max
        );
    }
    let s = spectral_check_thm8(200, 2000, 3, 1)?;
    println!("random n = 200, d = 2000: {} bound violations in {} trials", s.violations, s.trials.len());
    Ok(())
}
