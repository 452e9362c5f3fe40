//! End-to-end CLI tests: fixtures are materialized through the testkit in
//! record mode, then the binary runs offline against them.

use std::path::Path;
use std::process::{Command, Output};

use colcast::pipeline::RunConfig;
use colcast::prompts::PromptCatalog;
use colcast::testkit::{minibench_rules, scripted_record_gateway, write_minibench};

fn colcast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colcast"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) {
    std::fs::write(dir.join(name), contents).unwrap();
}

#[test]
fn classify_uses_the_numeric_precheck_offline() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ex.csv", "2,0.9\n51.5,23.4\n");
    let output = colcast(dir.path(), &["classify", "--examples", "ex.csv"]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("class: Numbers"), "{text}");
    assert!(text.contains("numeric pre-check"), "{text}");
    assert!(dir.path().join("out/classify.json").exists());
}

#[test]
fn fit_selects_and_emits_a_program() {
    let dir = tempfile::tempdir().unwrap();
    // Six exact points on y = 0.5x + 0.3 keep the quadratic from
    // interpolating its way to the front.
    write(dir.path(), "ex.csv", "1,0.8\n3,1.8\n7,3.8\n9,4.8\n12,6.3\n20,10.3\n");
    let output = colcast(dir.path(), &["fit", "--examples", "ex.csv"]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("selected: Linear"), "{text}");
    assert!(text.contains("format_num"), "{text}");
    assert!(dir.path().join("out/fit.json").exists());
}

#[test]
fn transform_runs_the_numeric_path_without_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "src.csv", "1\n3\n7\n9\n12\n20\n40\n");
    write(dir.path(), "ex.csv", "1,0.8\n3,1.8\n7,3.8\n9,4.8\n12,6.3\n20,10.3\n");
    let output =
        colcast(dir.path(), &["transform", "--source", "src.csv", "--examples", "ex.csv"]);
    assert!(output.status.success(), "{}", stderr(&output));
    let predictions = std::fs::read_to_string(dir.path().join("out/predictions.csv")).unwrap();
    // 0.5 * 40 + 0.3 = 20.3: the fitted line generalizes past the examples.
    assert_eq!(predictions, "0.8\n1.8\n3.8\n4.8\n6.3\n10.3\n20.3\n");
    assert!(dir.path().join("out/program.txt").exists());
}

#[test]
fn bench_replays_the_minibench_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("dataset");
    let fixtures = dir.path().join("fixtures");
    write_minibench(&dataset);
    // Materialize fixtures in-process; CLI defaults must match RunConfig
    // defaults for the digests to line up.
    let recorder = scripted_record_gateway(minibench_rules(), &fixtures);
    colcast::pipeline::run_benchmark(
        &dataset,
        &RunConfig::default(),
        &recorder,
        PromptCatalog::bundled(),
    )
    .unwrap();

    let args = [
        "--backend",
        "replay",
        "--fixtures",
        "fixtures",
        "bench",
        "--dataset",
        "dataset",
    ];
    let output = colcast(dir.path(), &args);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("macro (8 tables, 0 failed)"), "{text}");
    assert!(text.contains("F1 1.0000"), "{text}");

    let summary_a = std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap();
    let output = colcast(dir.path(), &args);
    assert!(output.status.success());
    let summary_b = std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap();
    assert_eq!(summary_a, summary_b, "replay runs must be byte-identical");
}

#[test]
fn bench_partial_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("dataset");
    let fixtures = dir.path().join("fixtures");
    write_minibench(&dataset);
    let recorder = scripted_record_gateway(minibench_rules(), &fixtures);
    colcast::pipeline::run_benchmark(
        &dataset,
        &RunConfig::default(),
        &recorder,
        PromptCatalog::bundled(),
    )
    .unwrap();

    // Break one table by removing its generation fixture.
    let mut removed = false;
    for entry in std::fs::read_dir(&fixtures).unwrap() {
        let path = entry.unwrap().path();
        let body = std::fs::read_to_string(&path).unwrap();
        if body.contains("AlgoGen") && body.contains("U+0041") {
            std::fs::remove_file(&path).unwrap();
            removed = true;
        }
    }
    assert!(removed);

    let output = colcast(
        dir.path(),
        &["--backend", "replay", "--fixtures", "fixtures", "bench", "--dataset", "dataset"],
    );
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("FAILED"), "{text}");
    assert!(text.contains("macro (8 tables, 1 failed)"), "{text}");
}

#[test]
fn bench_empty_dataset_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("dataset")).unwrap();
    let output = colcast(dir.path(), &["bench", "--dataset", "dataset"]);
    assert_eq!(output.status.code(), Some(3), "{}", stderr(&output));
}

#[test]
fn unknown_backend_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ex.csv", "a,b\n");
    let output =
        colcast(dir.path(), &["--backend", "carrier-pigeon", "classify", "--examples", "ex.csv"]);
    assert_eq!(output.status.code(), Some(3), "{}", stderr(&output));
}

#[test]
fn config_file_applies_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "colcast.conf", "backend=carrier-pigeon\n");
    write(dir.path(), "ex.csv", "2,0.9\n51.5,23.4\n");

    // File alone: invalid backend from the file wins over the default.
    let output =
        colcast(dir.path(), &["--config", "colcast.conf", "classify", "--examples", "ex.csv"]);
    assert_eq!(output.status.code(), Some(3));

    // Flag overrides the file's bad value.
    let output = colcast(
        dir.path(),
        &["--config", "colcast.conf", "--backend", "replay", "classify", "--examples", "ex.csv"],
    );
    assert!(output.status.success(), "{}", stderr(&output));

    // Unknown keys are refused.
    write(dir.path(), "colcast.conf", "frobnicate=1\n");
    let output =
        colcast(dir.path(), &["--config", "colcast.conf", "classify", "--examples", "ex.csv"]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn join_reports_metrics_for_the_weights_table() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "src.csv", "2\n51.5\n73\n");
    write(dir.path(), "tgt.csv", "0.9\n23.4\n33.1\n");
    write(dir.path(), "ex.csv", "2,0.9\n51.5,23.4\n73,33.1\n");
    let output = colcast(
        dir.path(),
        &[
            "join",
            "--source",
            "src.csv",
            "--target",
            "tgt.csv",
            "--examples",
            "ex.csv",
            "--match",
            "numeric",
        ],
    );
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("f1 1.0000"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/join.json")).unwrap())
            .unwrap();
    assert_eq!(report["f1"], 1.0);
    assert_eq!(report["class"], "Numbers");
}

#[test]
fn synth_emits_a_numeric_program_for_numbers_class() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ex.csv", "1,0.8\n3,1.8\n7,3.8\n9,4.8\n12,6.3\n20,10.3\n");
    let output = colcast(dir.path(), &["synth", "--examples", "ex.csv", "--class", "numbers"]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("transform(x)"));
    assert!(dir.path().join("out/program.txt").exists());
}
