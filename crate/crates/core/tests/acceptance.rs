//! Acceptance suite: one PASS/FAIL line per criterion, failing reports listed.

use std::io::Write;

use flipqh::verify::{run_all, VerifyConfig};

#[test]
fn acceptance_criteria() {
    let criteria = run_all(&VerifyConfig::default());
    assert_eq!(criteria.len(), 10);
    // write past the test harness capture so the lines always show
    let mut err = std::io::stderr().lock();
    writeln!(err).unwrap();
    for c in &criteria {
        writeln!(err, "{}", c.line()).unwrap();
        for r in c.reports.iter().filter(|r| !r.passed()) {
            writeln!(err, "    {}  {}", r.line(), r.detail).unwrap();
        }
    }
    let failed: Vec<u8> = criteria.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
