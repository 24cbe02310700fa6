mod common;

use common::{gradient_suite, FD_REL_TOL};

#[test]
fn analytic_gradients_match_central_differences() {
    let cases = gradient_suite();
    for c in &cases {
        println!("{:<36} {:.3e}", c.label, c.worst);
    }
    let bad: Vec<_> = cases.iter().filter(|c| !(c.worst < FD_REL_TOL)).map(|c| &c.label).collect();
    assert!(bad.is_empty(), "gradient mismatch: {bad:?}");
}
