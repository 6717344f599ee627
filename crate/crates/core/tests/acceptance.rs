//! Acceptance battery: one test per criterion, printing one verdict line
//! each. Criteria carry their own runtime budgets, so they are serialized
//! behind a mutex to keep the timings honest under parallel test runners.

use std::sync::Mutex;

use voltorus_core::suite;

static GATE: Mutex<()> = Mutex::new(());

fn check(rep: suite::CriterionReport) {
    println!("{}", rep.line());
    assert!(rep.passed, "criterion {} failed: {}", rep.id, rep.details);
}

#[test]
fn criterion_01_resolvent_accuracy() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_1());
}

#[test]
fn criterion_02_admissibility_constant_texp() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_2());
}

#[test]
fn criterion_03_admissibility_constant_exp() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_3());
}

#[test]
fn criterion_04_regularity_dichotomy() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_4());
}

#[test]
fn criterion_05_moment_identity() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_5());
}

#[test]
fn criterion_06_sampler_law_equivalence() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_6());
}

#[test]
fn criterion_07_increment_slope() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_7());
}

#[test]
fn criterion_08_growth_bound_scan() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_8());
}

#[test]
fn criterion_09_uniqueness_condition() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_9());
}

#[test]
fn criterion_10_green_function_asymptotics() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    check(suite::criterion_10());
}
