//! End-to-end orchestration: classify, dispatch to the class-specific
//! synthesizer, apply the transformation to every source row, join against
//! the target, and aggregate benchmark sweeps.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{self, ClassDecision, ClassifyError};
use crate::csv::{load_column_file, load_example_file, ColumnFileOptions, CsvError};
use crate::fit::{self, FitError, ModelFamily};
use crate::gateway::{BackendConfig, Gateway, GatewayError};
use crate::general::{self, GeneralError, GeneralOptions};
use crate::join::{self, GoldAlignment, JoinError, JoinReport, MatchMode};
use crate::lang::{self, EvalLimits, TransformProgram};
use crate::prompts::PromptCatalog;
use crate::synth::{self, SynthError, SynthesisOutcome};
use crate::table::{CellValue, ExamplePair, ExampleSet, TableError, TransformClass};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    General(#[from] GeneralError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Join(#[from] JoinError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("program covers only {passed}/{total} examples and strict mode is on")]
    StrictExamples { passed: usize, total: usize },
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

/// Everything one run needs beyond the inputs themselves.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendConfig,
    /// Guiding pairs drawn per benchmark table.
    pub n_examples: usize,
    pub seed: u64,
    pub match_mode: MatchMode,
    pub class_override: Option<TransformClass>,
    pub limits: EvalLimits,
    pub output_dir: PathBuf,
    /// Lookup-call budget for General-class tables.
    pub lookup_budget: u64,
    /// Worker bound for lookups and benchmark tables.
    pub concurrency: usize,
    /// When set, drop resolved general-class values whose normalized edit
    /// distance to every target exceeds this.
    pub guardrail_max_aned: Option<f64>,
    /// Require synthesized programs to pass every example.
    pub strict_examples: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: BackendConfig::default(),
            n_examples: 5,
            seed: 0,
            match_mode: MatchMode::EditDistance { max_distance: None },
            class_override: None,
            limits: EvalLimits::default(),
            output_dir: PathBuf::from("out"),
            lookup_budget: 10_000,
            concurrency: 8,
            guardrail_max_aned: None,
            strict_examples: false,
        }
    }
}

/// The interpretable artifact a table run produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TableArtifact {
    /// A synthesized program, with the relationship tag when one was
    /// produced on the way.
    Program { text: String, tag: Option<String> },
    /// A fitted numeric formula and the program emitted from it.
    Fit {
        family: ModelFamily,
        params: [f64; 3],
        mse: f64,
        formula: String,
        program_text: String,
    },
    /// The resolved lookup table of a general-class run.
    Lookup { tag: String, entries: Vec<(String, String)> },
}

impl TableArtifact {
    pub fn program_text(&self) -> Option<String> {
        match self {
            TableArtifact::Program { text, .. } => Some(text.clone()),
            TableArtifact::Fit { program_text, .. } => Some(program_text.clone()),
            TableArtifact::Lookup { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisStats {
    pub attempts: u32,
    pub example_pass_count: usize,
    pub example_total: usize,
}

/// Output of one table transformation.
#[derive(Debug)]
pub struct TableRun {
    pub predictions: Vec<Option<CellValue>>,
    pub artifact: TableArtifact,
    pub decision: ClassDecision,
    pub warnings: Vec<String>,
    pub synthesis: Option<SynthesisStats>,
}

/// Applies a program to every source row; evaluator faults leave the row
/// unmapped and are summarized as warnings.
fn evaluate_rows(
    program: &TransformProgram,
    rows: &[CellValue],
    limits: &EvalLimits,
) -> (Vec<Option<CellValue>>, Vec<String>) {
    let mut warnings = Vec::new();
    let predictions = rows
        .iter()
        .map(|cell| match lang::evaluate(program, cell, limits) {
            Ok(out) => Some(out),
            Err(err) => {
                if warnings.len() < 5 {
                    warnings.push(format!("row {:?}: {err}", cell.raw()));
                }
                None
            }
        })
        .collect();
    (predictions, warnings)
}

fn check_strict(cfg: &RunConfig, outcome: &SynthesisOutcome) -> Result<(), PipelineError> {
    if cfg.strict_examples && outcome.example_pass_count < outcome.example_total {
        return Err(PipelineError::StrictExamples {
            passed: outcome.example_pass_count,
            total: outcome.example_total,
        });
    }
    Ok(())
}

/// Runs the class-dispatched transformation pipeline over one table.
pub fn transform_table(
    set: &ExampleSet,
    cfg: &RunConfig,
    gateway: &Gateway,
    catalog: &PromptCatalog,
) -> Result<TableRun, PipelineError> {
    set.validate()?;
    let decision = match cfg.class_override {
        Some(class) => ClassDecision::overridden(class),
        None => classify::classify(set, gateway, catalog)?,
    };
    let mut warnings = Vec::new();

    match decision.class {
        TransformClass::Numbers => {
            let (points, dropped) = fit::numeric_points(&set.examples);
            warnings.extend(dropped);
            let fits: Vec<_> = fit::fit_all(&points)
                .into_iter()
                .filter_map(|result| match result {
                    Ok(fit) => Some(fit),
                    Err(err) => {
                        warnings.push(format!("fit: {err}"));
                        None
                    }
                })
                .collect();
            let best = fit::select_best(&fits)?;
            let numeric_examples: Vec<ExamplePair> = set
                .examples
                .iter()
                .filter(|p| p.source.is_numeric() && p.target.is_numeric())
                .cloned()
                .collect();
            let decimals = fit::infer_target_precision(&numeric_examples)?;
            let program = fit::emit_numeric_program(&best, decimals);
            let (predictions, eval_warnings) =
                evaluate_rows(&program, &set.source_column, &cfg.limits);
            warnings.extend(eval_warnings);
            Ok(TableRun {
                predictions,
                artifact: TableArtifact::Fit {
                    family: best.family,
                    params: best.params,
                    mse: best.mse,
                    formula: best.formula(),
                    program_text: program.source_text.clone(),
                },
                decision,
                warnings,
                synthesis: None,
            })
        }
        TransformClass::String => {
            let outcome =
                synth::generate_string_transform(&set.examples, gateway, catalog, &cfg.limits)?;
            check_strict(cfg, &outcome)?;
            let (predictions, eval_warnings) =
                evaluate_rows(&outcome.program, &set.source_column, &cfg.limits);
            warnings.extend(eval_warnings);
            Ok(TableRun {
                predictions,
                artifact: TableArtifact::Program {
                    text: outcome.program.source_text.clone(),
                    tag: None,
                },
                decision,
                warnings,
                synthesis: Some(SynthesisStats {
                    attempts: outcome.attempts,
                    example_pass_count: outcome.example_pass_count,
                    example_total: outcome.example_total,
                }),
            })
        }
        TransformClass::Algorithmic => {
            let tag = synth::tag_relationship(&set.examples, gateway, catalog)?;
            let outcome = synth::generate_algorithmic_transform(
                &set.examples,
                &tag,
                gateway,
                catalog,
                &cfg.limits,
            )?;
            check_strict(cfg, &outcome)?;
            let (predictions, eval_warnings) =
                evaluate_rows(&outcome.program, &set.source_column, &cfg.limits);
            warnings.extend(eval_warnings);
            Ok(TableRun {
                predictions,
                artifact: TableArtifact::Program {
                    text: outcome.program.source_text.clone(),
                    tag: Some(tag.rendered()),
                },
                decision,
                warnings,
                synthesis: Some(SynthesisStats {
                    attempts: outcome.attempts,
                    example_pass_count: outcome.example_pass_count,
                    example_total: outcome.example_total,
                }),
            })
        }
        TransformClass::General => {
            let opts =
                GeneralOptions { budget: cfg.lookup_budget, concurrency: cfg.concurrency };
            let outcome = general::transform_general(set, gateway, catalog, &opts)?;
            warnings.extend(outcome.warnings);
            let predictions = match (cfg.guardrail_max_aned, set.target_column.as_deref()) {
                (Some(max_aned), Some(targets)) => {
                    let (filtered, flagged) =
                        general::guardrail_verify(&outcome.predictions, targets, max_aned);
                    for index in &flagged {
                        warnings.push(format!(
                            "guardrail dropped row {index} as a suspected hallucination"
                        ));
                    }
                    filtered
                }
                _ => outcome.predictions,
            };
            Ok(TableRun {
                predictions,
                artifact: TableArtifact::Lookup {
                    tag: outcome.tag.rendered(),
                    entries: outcome.lookup_table,
                },
                decision,
                warnings,
                synthesis: None,
            })
        }
    }
}

/// Draws the guiding examples for a benchmark table: seeded shuffle, first
/// `n` pairs, in shuffled order.
pub fn draw_examples(pairs: &[ExamplePair], n: usize, seed: u64) -> Vec<ExamplePair> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    order.into_iter().take(n).map(|i| pairs[i].clone()).collect()
}

/// One benchmark table on disk: `source.csv` and `target.csv`, single
/// column each, plus an optional `gold.csv` of (source, target) pairs when
/// the two files are not row-aligned.
#[derive(Debug)]
pub struct BenchTable {
    pub name: String,
    pub set: ExampleSet,
    pub gold: GoldAlignment,
}

pub fn load_bench_table(dir: &Path, cfg: &RunConfig) -> Result<BenchTable, PipelineError> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let source_column = load_column_file(&dir.join("source.csv"), ColumnFileOptions::default())?;
    let target_column = load_column_file(&dir.join("target.csv"), ColumnFileOptions::default())?;

    let gold_path = dir.join("gold.csv");
    let (gold_pairs, gold) = if gold_path.exists() {
        let pairs = load_example_file(&gold_path)?;
        (pairs.clone(), GoldAlignment::Pairs(pairs))
    } else {
        if source_column.len() != target_column.len() {
            return Err(PipelineError::Config(format!(
                "{name}: source/target row counts differ ({} vs {}) and no gold.csv is present",
                source_column.len(),
                target_column.len()
            )));
        }
        let pairs = source_column
            .iter()
            .zip(&target_column)
            .map(|(s, t)| ExamplePair { source: s.clone(), target: t.clone() })
            .collect();
        (pairs, GoldAlignment::Positional)
    };

    let examples = draw_examples(&gold_pairs, cfg.n_examples.min(gold_pairs.len()), cfg.seed);
    let set = ExampleSet::new(examples, source_column, Some(target_column))?;
    Ok(BenchTable { name, set, gold })
}

/// Per-table benchmark entry: scores, artifact, and any failure.
#[derive(Debug, Serialize, Deserialize)]
pub struct TableReport {
    pub name: String,
    pub failed: bool,
    pub error: Option<String>,
    pub report: JoinReport,
    pub artifact: Option<TableArtifact>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub tables: Vec<TableReport>,
    pub failed_tables: usize,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub macro_aed: f64,
    pub macro_aned: f64,
    pub seed: u64,
    pub n_examples: usize,
    pub match_mode: String,
}

impl BenchmarkSummary {
    fn from_tables(tables: Vec<TableReport>, cfg: &RunConfig) -> Self {
        let n = tables.len().max(1) as f64;
        let sum = |f: fn(&JoinReport) -> f64| tables.iter().map(|t| f(&t.report)).sum::<f64>();
        BenchmarkSummary {
            failed_tables: tables.iter().filter(|t| t.failed).count(),
            macro_precision: sum(|r| r.precision) / n,
            macro_recall: sum(|r| r.recall) / n,
            macro_f1: sum(|r| r.f1) / n,
            macro_aed: sum(|r| r.aed) / n,
            macro_aned: sum(|r| r.aned) / n,
            seed: cfg.seed,
            n_examples: cfg.n_examples,
            match_mode: cfg.match_mode.name().to_string(),
            tables,
        }
    }
}

/// Scores one loaded table end to end. Never fails: any pipeline error
/// zero-scores the table and is recorded on the report.
pub fn run_table(
    table: &BenchTable,
    cfg: &RunConfig,
    gateway: &Gateway,
    catalog: &PromptCatalog,
) -> TableReport {
    match transform_table(&table.set, cfg, gateway, catalog).and_then(|run| {
        let report = join::join(
            &table.set,
            &run.predictions,
            &cfg.match_mode,
            &table.gold,
            run.decision.class,
            run.artifact.program_text(),
        )?;
        Ok((run, report))
    }) {
        Ok((run, report)) => TableReport {
            name: table.name.clone(),
            failed: false,
            error: None,
            report,
            artifact: Some(run.artifact),
            warnings: run.warnings,
        },
        Err(err) => zero_scored(&table.name, &table.set, err.to_string()),
    }
}

/// A table whose pipeline failed scores zero across all metrics.
fn zero_scored(name: &str, set: &ExampleSet, error: String) -> TableReport {
    let none: Vec<Option<CellValue>> = vec![None; set.source_column.len()];
    let report = join::join(
        set,
        &none,
        &MatchMode::Exact,
        &GoldAlignment::Positional,
        TransformClass::String,
        None,
    )
    .unwrap_or(JoinReport {
        rows: Vec::new(),
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        aed: 0.0,
        aned: 0.0,
        class: TransformClass::String,
        program_text: None,
    });
    TableReport { name: name.to_string(), failed: true, error: Some(error), report, artifact: None, warnings: Vec::new() }
}

/// Runs every table under `dataset_dir` (one subdirectory per table) and
/// macro-averages the metrics. Individual table failures never abort the
/// sweep.
pub fn run_benchmark(
    dataset_dir: &Path,
    cfg: &RunConfig,
    gateway: &Gateway,
    catalog: &PromptCatalog,
) -> Result<BenchmarkSummary, PipelineError> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(dataset_dir)
        .map_err(|source| PipelineError::Io {
            path: dataset_dir.display().to_string(),
            source,
        })?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|path| path.is_dir())
        .collect();
    dirs.sort();

    let slots: Vec<Mutex<Option<TableReport>>> = dirs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = cfg.concurrency.clamp(1, dirs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some(dir) = dirs.get(index) else { break };
                let report = match load_bench_table(dir, cfg) {
                    Ok(table) => run_table(&table, cfg, gateway, catalog),
                    Err(err) => {
                        let name = dir
                            .file_name()
                            .map(|n| n.to_string_lossy().into_owned())
                            .unwrap_or_default();
                        let empty = ExampleSet {
                            examples: Vec::new(),
                            source_column: Vec::new(),
                            target_column: None,
                        };
                        zero_scored(&name, &empty, err.to_string())
                    }
                };
                *slots[index].lock().expect("table slot") = Some(report);
            });
        }
    });

    let tables: Vec<TableReport> = slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("table slot").expect("table processed"))
        .collect();
    Ok(BenchmarkSummary::from_tables(tables, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_drawing_is_seeded_and_bounded() {
        let pairs: Vec<ExamplePair> = (0..10)
            .map(|i| ExamplePair::new(format!("s{i}"), format!("t{i}")))
            .collect();
        let a = draw_examples(&pairs, 5, 42);
        let b = draw_examples(&pairs, 5, 42);
        assert_eq!(a.len(), 5);
        assert_eq!(
            a.iter().map(|p| p.source.raw()).collect::<Vec<_>>(),
            b.iter().map(|p| p.source.raw()).collect::<Vec<_>>()
        );
        let c = draw_examples(&pairs, 5, 43);
        assert_ne!(
            a.iter().map(|p| p.source.raw()).collect::<Vec<_>>(),
            c.iter().map(|p| p.source.raw()).collect::<Vec<_>>(),
            "different seeds draw different examples"
        );
        assert_eq!(draw_examples(&pairs, 99, 0).len(), 10);
    }

    #[test]
    fn macro_averages_are_arithmetic_means() {
        let report = |p: f64, r: f64| JoinReport {
            rows: Vec::new(),
            precision: p,
            recall: r,
            f1: if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) },
            aed: 1.0,
            aned: 0.5,
            class: TransformClass::String,
            program_text: None,
        };
        let tables = vec![
            TableReport {
                name: "a".into(),
                failed: false,
                error: None,
                report: report(1.0, 1.0),
                artifact: None,
                warnings: Vec::new(),
            },
            TableReport {
                name: "b".into(),
                failed: true,
                error: Some("x".into()),
                report: report(0.0, 0.0),
                artifact: None,
                warnings: Vec::new(),
            },
        ];
        let summary = BenchmarkSummary::from_tables(tables, &RunConfig::default());
        assert_eq!(summary.macro_precision, 0.5);
        assert_eq!(summary.macro_recall, 0.5);
        assert_eq!(summary.macro_f1, 0.5);
        assert_eq!(summary.macro_aed, 1.0);
        assert_eq!(summary.failed_tables, 1);
    }
}
