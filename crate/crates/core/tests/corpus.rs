//! Golden reports for the built-in examples. Run with `BLESS=1` to rewrite
//! the stored goldens from the current engine.

use std::path::PathBuf;

use jetforms::corpus::{self, run_example, CORPUS_SEED, EXAMPLES};
use jetforms::problem::parse_problem;
use jetforms::report::{run, FLAG_FURTHER_CONSTRAINTS};
use jetforms::symexpr::parse_with_order;

fn assert_same(got: &[String], want: &[&str], problem: &str) {
    let cat = parse_problem(problem).unwrap().catalog;
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        let g = parse_with_order(g, &cat, 8).unwrap();
        let w = parse_with_order(w, &cat, 8).unwrap();
        assert!(g.equivalent(&w).holds(), "{g} vs {w}");
    }
}

#[test]
fn corpus_matches_goldens() {
    let bless = std::env::var_os("BLESS").is_some();
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let mut failed = Vec::new();
    for ex in &EXAMPLES {
        let outcome = run_example(ex).unwrap();
        assert!(outcome.report.consistency_failures.is_empty(), "{}: {:?}", ex.name, outcome.report.consistency_failures);
        if bless {
            std::fs::write(dir.join(format!("{}.golden.json", ex.name)), outcome.report.to_json_string()).unwrap();
        } else if !outcome.diff.is_empty() {
            failed.push(format!("{}:\n  {}", ex.name, outcome.diff.join("\n  ")));
        }
    }
    assert!(failed.is_empty(), "golden mismatches:\n{}", failed.join("\n"));
}

#[test]
fn reports_are_deterministic() {
    for name in ["plate", "camassa-holm"] {
        let problem = parse_problem(corpus::example(name).unwrap().problem).unwrap();
        let a = run(&problem, 7).unwrap().to_json_string();
        let b = run(&problem, 7).unwrap().to_json_string();
        assert_eq!(a, b);
    }
}

fn report(name: &str) -> jetforms::report::Report {
    run_example(corpus::example(name).unwrap()).unwrap().report
}

#[test]
fn plate_report() {
    let r = report("plate");
    assert_same(&r.euler_lagrange, &["u[4,0] + 2*u[2,2] + u[0,4] - q"], corpus::example("plate").unwrap().problem);
    assert_eq!(r.classification.verdict.to_string(), "exactly-determined");
    assert!(r.flags.iter().any(|f| f.contains("exactly-determined")));
    assert!(!r.flags.iter().any(|f| f == FLAG_FURTHER_CONSTRAINTS));
    assert!(r.regular_at_samples.unwrap().points.iter().all(|p| p.regular));
    assert_eq!(r.omega2_kernel_dims.unwrap(), vec![0; 5]);
    assert!(r.column_selection.unwrap().verified);
    assert_eq!(r.oracle.len(), 3);
    assert_eq!(r.catalog.len(), 15);
}

#[test]
fn camassa_holm_report() {
    let r = report("camassa-holm");
    assert_eq!(r.hessian.entries, [["0", "0", "0"], ["0", "1/u[1,0]", "0"], ["0", "0", "0"]]);
    let samples = r.regular_at_samples.unwrap();
    assert!(samples.points.iter().all(|p| !p.regular && p.point["u[1,0]"] == "1.0000000000e0"));
    assert!(r.omega2_kernel_dims.unwrap().iter().all(|&d| d >= 1));
}

#[test]
fn first_and_mechanics_carry_the_flag() {
    for name in ["first-order", "mechanics"] {
        let r = report(name);
        assert!(r.flags.iter().any(|f| f == FLAG_FURTHER_CONSTRAINTS), "{name}");
        assert_eq!(r.classification.verdict.to_string(), "overdetermined");
    }
    let mechanics = corpus::example("mechanics").unwrap().problem;
    assert_same(&report("mechanics").euler_lagrange, &["-u[2] - 2*u[0]"], mechanics);
}

#[test]
fn first_as_second_replay_agrees() {
    let r = report("first-as-second");
    let replay = r.first_as_second.unwrap();
    assert!(replay.agrees);
    assert_same(&replay.first_order_el, &["-u[2,0]"], corpus::example("first-as-second").unwrap().problem);
}

#[test]
fn zero_lagrangian() {
    let problem = parse_problem("m = 2\nn = 1\nk = 2\nlagrangian = 0\n").unwrap();
    let r = run(&problem, CORPUS_SEED).unwrap();
    assert_eq!(r.euler_lagrange, ["0"]);
    assert!(r.hessian.entries.iter().flatten().all(|e| e == "0"));
    assert!(r.regular_at_samples.unwrap().points.iter().all(|p| !p.regular));
    assert!(r.consistency_failures.is_empty());
}
