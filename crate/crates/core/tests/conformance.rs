//! Interpreter conformance: every golden program parses cleanly, passes the
//! static checker, survives a print/parse round trip, and produces its
//! hand-computed outputs.

mod common;

use colcast::lang::{self, Diagnostic, EvalLimits, ProgramOrigin, BUILTINS};
use colcast::table::CellValue;
use common::GOLDENS;

fn run(source: &str, input: &str) -> String {
    let program = lang::parse(source, ProgramOrigin::StringGen)
        .unwrap_or_else(|e| panic!("parse failed: {e}\n{source}"));
    lang::evaluate(&program, &CellValue::new(input), &EvalLimits::default())
        .unwrap_or_else(|e| panic!("eval failed on {input:?}: {e}\n{source}"))
        .raw()
        .to_string()
}

#[test]
fn goldens_produce_expected_outputs() {
    for golden in GOLDENS {
        for (input, expected) in golden.cases {
            let actual = run(golden.source, input);
            assert_eq!(
                &actual, expected,
                "golden {} on input {input:?}", golden.name
            );
        }
    }
}

#[test]
fn goldens_pass_static_checks() {
    for golden in GOLDENS {
        let program = lang::parse(golden.source, ProgramOrigin::StringGen).unwrap();
        let errors: Vec<Diagnostic> =
            lang::check(&program).into_iter().filter(Diagnostic::is_error).collect();
        assert!(errors.is_empty(), "golden {}: {errors:?}", golden.name);
    }
}

#[test]
fn goldens_round_trip_through_printer() {
    for golden in GOLDENS {
        let program = lang::parse(golden.source, ProgramOrigin::StringGen).unwrap();
        let printed = program.printed();
        let reparsed = lang::parse(&printed, ProgramOrigin::StringGen)
            .unwrap_or_else(|e| panic!("golden {} failed reparse: {e}\n{printed}", golden.name));
        assert_eq!(printed, reparsed.printed(), "golden {}", golden.name);

        // The canonical rendering must behave identically.
        for (input, expected) in golden.cases {
            let out = lang::evaluate(&reparsed, &CellValue::new(*input), &EvalLimits::default())
                .unwrap();
            assert_eq!(out.raw(), *expected, "golden {} printed form on {input:?}", golden.name);
        }
    }
}

#[test]
fn golden_corpus_covers_every_builtin() {
    assert!(GOLDENS.len() >= 30, "conformance corpus has shrunk to {}", GOLDENS.len());
    let corpus: String = GOLDENS.iter().map(|g| g.source).collect::<Vec<_>>().join("\n");
    let missing: Vec<&str> = BUILTINS
        .iter()
        .map(|b| b.name)
        .filter(|name| !corpus.contains(*name))
        .collect();
    assert!(missing.is_empty(), "builtins not exercised by any golden: {missing:?}");
}

#[test]
fn unbounded_loop_terminates_quickly() {
    let program =
        lang::parse("transform(x) { while true { } return x }", ProgramOrigin::StringGen).unwrap();
    let started = std::time::Instant::now();
    let err = lang::evaluate(&program, &CellValue::new("v"), &EvalLimits::default()).unwrap_err();
    let elapsed = started.elapsed();
    assert!(matches!(err, lang::EvalError::StepBudgetExceeded { .. }), "got {err:?}");
    assert!(elapsed.as_millis() < 100, "took {elapsed:?}");
}
