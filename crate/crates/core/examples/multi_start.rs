//! Recover the regular simplex and the cross-polytope from random starts.

use hyperspherical::reference::optimum_recovery;

fn main() -> hyperspherical::Result<()> {
    for n in [4, 6] {
        let r = optimum_recovery(n, 3, 50, 5000, 0)?;
        println!(
            "n = {n}: best energy {:.7} vs optimum {:.7} (relative error {:.1e}, max dot deviation {:.1e})",
            r.best_energy, r.target_energy, r.relative_error, r.max_dot_deviation
        );
    }
    Ok(())
}
