//! Limit tables of the energy and polarization products, and the polarization/energy inequality chain.

use hyperspherical::reference::{inequality_check_prop2, limit_check_prop1, limit_check_prop4};

fn main() -> hyperspherical::Result<()> {
    println!("tetrahedron, (E_s)^(1/s) * separation:");
    for row in limit_check_prop1(4, 3, &[2.0, 8.0, 64.0, 256.0])? {
        println!("  s = {:>5}  {:.9}", row.s, row.value);
    }
    for n in [2, 4] {
        println!("{n} equally spaced points on the circle, (P_s)^(1/s) * covering radius:");
        for row in limit_check_prop4(n, &[4.0, 16.0, 64.0])? {
            println!("  s = {:>5}  {:.6}", row.s, row.value);
        }
    }
    let r = inequality_check_prop2(3, 2, 2.0)?;
    println!("n = 3, d = 2, s = 2: chain holds = {}, margins {:?}", r.holds, r.margins);
    Ok(())
}
