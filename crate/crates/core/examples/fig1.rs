//! The four-objective comparison on 200 points of S^2. Writes one trajectory
//! CSV per objective into the directory given as the first argument.

use std::path::PathBuf;

use hyperspherical::optimizer::reproduce_fig1;

fn main() -> hyperspherical::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fig1".into()));
    std::fs::create_dir_all(&dir)?;
    for (name, trajectory) in reproduce_fig1(0)? {
        let last = trajectory.last();
        println!(
            "{name}: E_2 {:.2}  separation {:.4}",
            last.energy_s2, last.separation_geodesic
        );
        trajectory.write_csv(std::fs::File::create(dir.join(format!("{name}.csv")))?)?;
    }
    Ok(())
}
