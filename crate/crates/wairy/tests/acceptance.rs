//! Acceptance suite: one criterion per test, each printing a PASS/FAIL
//! line with its check counts. Everything is exact; there are no
//! tolerances to tune.

use wairy::verify::{self, SuiteReport};

fn run(criterion: usize, name: &str, report: SuiteReport) {
    let status = if report.clean() { "PASS" } else { "FAIL" };
    println!(
        "criterion {criterion} ({name}): {status} [{}/{} checks]",
        report.passed(),
        report.checks.len()
    );
    for c in report.checks.iter().filter(|c| !c.pass) {
        println!("  failed: {}", c.label);
    }
    assert!(report.clean(), "criterion {criterion} ({name}) failed");
}

#[test]
fn criterion_1_gl4_example_reproduction() {
    run(1, "gl4 example reproduction", verify::suite_example_gl4());
}

#[test]
fn criterion_2_leading_order_oracle() {
    run(2, "leading-order oracle", verify::suite_leading_oracle());
}

#[test]
fn criterion_3_roots_of_unity_identities() {
    run(3, "roots-of-unity identities", verify::suite_vieta());
}

#[test]
fn criterion_4_classification_table() {
    run(4, "classification table", verify::suite_classification_table());
}

#[test]
fn criterion_5_lambda_goodness() {
    run(5, "lambda-goodness", verify::suite_lambda_goodness());
}

#[test]
fn criterion_6_appending() {
    run(6, "appending", verify::suite_appending());
}

#[test]
fn criterion_7_solver_soundness() {
    run(7, "solver soundness", verify::suite_residuals());
}

#[test]
fn criterion_8_curve_dictionary() {
    run(8, "curve dictionary", verify::suite_curves());
}
