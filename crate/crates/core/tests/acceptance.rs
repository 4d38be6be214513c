use triplane::selftest::{run_criterion, run_selftest};
use triplane::Conventions;

#[test]
fn acceptance_criteria() {
    let report = run_selftest();
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let failed: Vec<u8> = report.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn wrong_kappa_is_caught() {
    let conv = Conventions { kappa: 2.0, ..Conventions::default() };
    let failed: Vec<u8> = [3, 5, 6].into_iter().filter(|&id| !run_criterion(id, &conv).passed).collect();
    println!("wrong kappa fails criteria {failed:?}");
    assert!(!failed.is_empty());
}

#[test]
fn wrong_schouten_denominator_is_caught() {
    let conv = Conventions { schouten_trace_denominator: 12.0, ..Conventions::default() };
    let c = run_criterion(9, &conv);
    println!("{}", c.line());
    assert!(!c.passed);
}
