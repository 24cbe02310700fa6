//! Run the named checks given on the command line (all quick ones by default).

use hyperspherical::checks::{run_check, Check};

fn main() -> hyperspherical::Result<()> {
    let names: Vec<String> = std::env::args().skip(1).collect();
    let checks: Vec<Check> = if names.is_empty() {
        vec![Check::Prop1, Check::Prop4, Check::Thm5, Check::Thm8]
    } else {
        names.iter().map(|n| n.parse().expect("known check")).collect()
    };
    for check in checks {
        let o = run_check(check, 0)?;
        println!("{} {check}: {}", if o.passed { "pass" } else { "FAIL" }, o.summary);
    }
    Ok(())
}
