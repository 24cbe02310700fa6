//! Fraction of a random orthonormal basis inside spherical caps.

use hyperspherical::uniformity::theorem1_demo;

fn main() -> hyperspherical::Result<()> {
    for d in [8, 64, 256] {
        let r = theorem1_demo(d, 100, 4, 0)?;
        println!("d = {d}");
        for cap in &r.caps {
            println!(
                "  angle {:.4}  measure {:.4}  mean fraction {:.4}  mean |dev| {:.4}",
                cap.angle, cap.measure, cap.mean_fraction, cap.mean_abs_deviation
            );
        }
    }
    Ok(())
}
