//! colcast: example-driven transformation of table columns.
//!
//! Settings resolve in three layers: built-in defaults, then the
//! `key=value` config file (`--config`), then command-line flags. The API
//! key is only ever read from the environment variable named by
//! `api_key_env`.

mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use colcast::classify;
use colcast::csv::{format_csv, load_column_file, load_example_file, ColumnFileOptions};
use colcast::fit;
use colcast::gateway::Gateway;
use colcast::join::{self, GoldAlignment, JoinReport};
use colcast::pipeline::{self, RunConfig, TableArtifact};
use colcast::prompts::PromptCatalog;
use colcast::synth;
use colcast::table::{CellValue, ExampleSet, TransformClass};

use settings::{ConfigError, Settings};

#[derive(Parser)]
#[command(name = "colcast", version, about = "Example-driven table column transformations")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// key=value config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Backend mode: http, replay, or record.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Fixture directory for replay/record modes.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// Model name sent to the backend.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Chat-completions endpoint URL.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    /// Environment variable holding the API key (empty for keyless
    /// endpoints).
    #[arg(long, global = true)]
    api_key_env: Option<String>,
    /// Seed for example drawing.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Guiding pairs drawn per benchmark table.
    #[arg(long = "n-examples", global = true)]
    n_examples: Option<usize>,
    /// Output directory for reports and artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Prompt catalog TOML; defaults to the bundled catalog.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Request timeout in seconds.
    #[arg(long, global = true)]
    timeout_secs: Option<u64>,
    /// Retries on rate limiting.
    #[arg(long, global = true)]
    max_retries: Option<u32>,
    /// Hard cap on gateway calls for the whole run.
    #[arg(long, global = true)]
    max_calls: Option<u64>,
    /// Worker bound for lookups and benchmark tables.
    #[arg(long, global = true)]
    concurrency: Option<usize>,
    /// Lookup-call budget for General-class tables.
    #[arg(long, global = true)]
    budget: Option<u64>,
}

#[derive(Args, Debug)]
pub struct MatchArgs {
    /// Matching mode: exact, edit, or numeric.
    #[arg(long = "match", value_name = "MODE")]
    match_mode: Option<String>,
    /// Upper bound on the match distance (edit or numeric).
    #[arg(long)]
    max_distance: Option<f64>,
    /// Reserved lower bound for one-to-many joins; accepted but not yet
    /// applied.
    #[arg(long)]
    min_distance: Option<f64>,
}

#[derive(Args, Debug)]
struct ColumnArgs {
    /// Zero-based column index to read from multi-column CSVs.
    #[arg(long, default_value_t = 0)]
    column: usize,
    /// Skip the first CSV record.
    #[arg(long)]
    header: bool,
}

impl ColumnArgs {
    fn options(&self) -> ColumnFileOptions {
        ColumnFileOptions { column: self.column, has_header: self.header }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the transformation type of an example file.
    Classify {
        /// Two-column source,target CSV of example pairs.
        #[arg(long)]
        examples: PathBuf,
    },
    /// Fit the numeric model families to an example file.
    Fit {
        #[arg(long)]
        examples: PathBuf,
    },
    /// Synthesize a transformation program from examples.
    Synth {
        #[arg(long)]
        examples: PathBuf,
        /// Force a class instead of classifying.
        #[arg(long)]
        class: Option<TransformClass>,
    },
    /// Transform a source column using examples.
    Transform {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        examples: PathBuf,
        #[arg(long)]
        class: Option<TransformClass>,
        #[command(flatten)]
        columns: ColumnArgs,
        /// Target column file; enables the guardrail for general-class
        /// lookups.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Drop general-class lookups whose normalized edit distance to
        /// every target exceeds this bound (0.5 when given bare).
        #[arg(long, num_args = 0..=1, default_missing_value = "0.5")]
        guardrail: Option<f64>,
    },
    /// Transform a source column and join it against a target column.
    Join {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        examples: PathBuf,
        /// Explicit (source, gold-target) alignment CSV; default is
        /// positional.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        class: Option<TransformClass>,
        #[command(flatten)]
        matching: MatchArgs,
        #[command(flatten)]
        columns: ColumnArgs,
    },
    /// Run every table in a dataset directory and macro-average the
    /// metrics.
    Bench {
        /// Directory with one subdirectory per table (source.csv,
        /// target.csv, optional gold.csv).
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        matching: MatchArgs,
        /// Require synthesized programs to pass every example.
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let settings = Settings::resolve(&cli.global)?;
    let catalog = settings.catalog()?;
    let base_cfg = settings.run_config()?;

    match cli.command {
        Command::Classify { examples } => cmd_classify(&settings, &base_cfg, &catalog, &examples),
        Command::Fit { examples } => cmd_fit(&settings, &examples),
        Command::Synth { examples, class } => {
            cmd_synth(&settings, &base_cfg, &catalog, &examples, class)
        }
        Command::Transform { source, examples, class, columns, target, guardrail } => {
            let mut cfg = base_cfg;
            cfg.class_override = class;
            cfg.guardrail_max_aned = guardrail;
            cmd_transform(&settings, &cfg, &catalog, &source, &examples, target.as_deref(), &columns)
        }
        Command::Join { source, target, examples, gold, class, matching, columns } => {
            let mut cfg = base_cfg;
            cfg.class_override = class;
            cfg.match_mode = settings.match_mode(&matching)?;
            cmd_join(&settings, &cfg, &catalog, &source, &target, &examples, gold.as_deref(), &columns)
        }
        Command::Bench { dataset, matching, strict } => {
            let mut cfg = base_cfg;
            cfg.match_mode = settings.match_mode(&matching)?;
            cfg.strict_examples = strict;
            cmd_bench(&settings, &cfg, &catalog, &dataset)
        }
    }
}

fn cmd_classify(
    settings: &Settings,
    cfg: &RunConfig,
    catalog: &PromptCatalog,
    examples: &Path,
) -> Result<ExitCode> {
    let examples = load_example_file(examples)?;
    let gateway = Gateway::new(cfg.backend.clone())?;
    let set = ExampleSet::from_examples(examples);
    let decision = classify::classify(&set, &gateway, catalog)?;
    println!("class: {}", decision.class);
    println!("decided by: {}", source_name(decision.source));
    write_json(settings, "classify.json", &decision)?;
    Ok(ExitCode::SUCCESS)
}

fn source_name(source: classify::DecisionSource) -> &'static str {
    match source {
        classify::DecisionSource::LlmLabel => "model label",
        classify::DecisionSource::NumericPrecheck => "numeric pre-check",
        classify::DecisionSource::UserOverride => "user override",
    }
}

fn cmd_fit(settings: &Settings, examples: &Path) -> Result<ExitCode> {
    let examples = load_example_file(examples)?;
    let (points, warnings) = fit::numeric_points(&examples);
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    let results = fit::fit_all(&points);
    let mut fits = Vec::new();
    for result in results {
        match result {
            Ok(fitted) => {
                println!(
                    "{:<12} mse {:<12.6e} {}",
                    fitted.family.name(),
                    fitted.mse,
                    fitted.formula()
                );
                fits.push(fitted);
            }
            Err(err) => println!("{err}"),
        }
    }
    let best = fit::select_best(&fits)?;
    let numeric: Vec<_> = examples
        .iter()
        .filter(|p| p.source.is_numeric() && p.target.is_numeric())
        .cloned()
        .collect();
    let decimals = fit::infer_target_precision(&numeric)?;
    let program = fit::emit_numeric_program(&best, decimals);
    println!("selected: {} ({} decimals)", best.family, decimals);
    println!("{}", program.source_text.trim_end());

    write_json(
        settings,
        "fit.json",
        &serde_json::json!({
            "fits": fits,
            "selected": best,
            "decimals": decimals,
            "program_text": program.source_text,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(
    settings: &Settings,
    cfg: &RunConfig,
    catalog: &PromptCatalog,
    examples: &Path,
    class: Option<TransformClass>,
) -> Result<ExitCode> {
    let examples = load_example_file(examples)?;
    let gateway = Gateway::new(cfg.backend.clone())?;
    let set = ExampleSet::from_examples(examples.clone());
    let class = match class {
        Some(class) => class,
        None => classify::classify(&set, &gateway, catalog)?.class,
    };

    let (program_text, detail) = match class {
        TransformClass::String => {
            let outcome =
                synth::generate_string_transform(&examples, &gateway, catalog, &cfg.limits)?;
            let detail = format!(
                "attempts {}, examples passed {}/{}",
                outcome.attempts, outcome.example_pass_count, outcome.example_total
            );
            (outcome.program.source_text, detail)
        }
        TransformClass::Algorithmic => {
            let tag = synth::tag_relationship(&examples, &gateway, catalog)?;
            let outcome = synth::generate_algorithmic_transform(
                &examples, &tag, &gateway, catalog, &cfg.limits,
            )?;
            let detail = format!(
                "relationship {:?}; attempts {}, examples passed {}/{}",
                tag.rendered(),
                outcome.attempts,
                outcome.example_pass_count,
                outcome.example_total
            );
            (outcome.program.source_text, detail)
        }
        TransformClass::Numbers => {
            let (points, _) = fit::numeric_points(&examples);
            let fits: Vec<_> = fit::fit_all(&points).into_iter().filter_map(Result::ok).collect();
            let best = fit::select_best(&fits)?;
            let decimals = fit::infer_target_precision(&examples)?;
            let program = fit::emit_numeric_program(&best, decimals);
            (program.source_text, format!("fitted {}", best.formula()))
        }
        TransformClass::General => {
            return Err(ConfigError(
                "general-class inputs resolve per value rather than as a program; \
                 use `transform` or `join`"
                    .into(),
            )
            .into())
        }
    };

    println!("class: {class}");
    println!("{detail}");
    println!("{}", program_text.trim_end());
    write_text(settings, "program.txt", &program_text)?;
    Ok(ExitCode::SUCCESS)
}

fn load_set(
    source: &Path,
    examples: &Path,
    target: Option<&Path>,
    columns: &ColumnArgs,
) -> Result<ExampleSet> {
    let source_column = load_column_file(source, columns.options())?;
    let examples = load_example_file(examples)?;
    let target_column = match target {
        Some(path) => Some(load_column_file(path, columns.options())?),
        None => None,
    };
    Ok(ExampleSet { examples, source_column, target_column })
}

fn cmd_transform(
    settings: &Settings,
    cfg: &RunConfig,
    catalog: &PromptCatalog,
    source: &Path,
    examples: &Path,
    target: Option<&Path>,
    columns: &ColumnArgs,
) -> Result<ExitCode> {
    let set = load_set(source, examples, target, columns)?;
    let gateway = Gateway::new(cfg.backend.clone())?;
    let run = pipeline::transform_table(&set, cfg, &gateway, catalog)?;

    let mapped = run.predictions.iter().filter(|p| p.is_some()).count();
    println!("class: {} ({})", run.decision.class, source_name(run.decision.source));
    println!("predicted {mapped}/{} rows", run.predictions.len());
    for warning in &run.warnings {
        eprintln!("warning: {warning}");
    }
    describe_artifact(&run.artifact);

    write_predictions(settings, &run.predictions)?;
    write_artifact(settings, &run.artifact)?;
    write_json(
        settings,
        "transform.json",
        &serde_json::json!({
            "class": run.decision.class,
            "artifact": run.artifact,
            "warnings": run.warnings,
            "synthesis": run.synthesis,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn describe_artifact(artifact: &TableArtifact) {
    match artifact {
        TableArtifact::Program { text, tag } => {
            if let Some(tag) = tag {
                println!("relationship: {tag}");
            }
            println!("{}", text.trim_end());
        }
        TableArtifact::Fit { formula, mse, .. } => {
            println!("fitted {formula} (mse {mse:.3e})");
        }
        TableArtifact::Lookup { tag, entries } => {
            println!("lookup table for {tag:?}: {} entries", entries.len());
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_join(
    settings: &Settings,
    cfg: &RunConfig,
    catalog: &PromptCatalog,
    source: &Path,
    target: &Path,
    examples: &Path,
    gold: Option<&Path>,
    columns: &ColumnArgs,
) -> Result<ExitCode> {
    let set = load_set(source, examples, Some(target), columns)?;
    let gold = match gold {
        Some(path) => GoldAlignment::Pairs(load_example_file(path)?),
        None => GoldAlignment::Positional,
    };
    let gateway = Gateway::new(cfg.backend.clone())?;
    let run = pipeline::transform_table(&set, cfg, &gateway, catalog)?;
    let report = join::join(
        &set,
        &run.predictions,
        &cfg.match_mode,
        &gold,
        run.decision.class,
        run.artifact.program_text(),
    )?;

    print_report(&report);
    for warning in &run.warnings {
        eprintln!("warning: {warning}");
    }
    write_predictions(settings, &run.predictions)?;
    write_artifact(settings, &run.artifact)?;
    write_json(settings, "join.json", &report)?;
    Ok(ExitCode::SUCCESS)
}

fn print_report(report: &JoinReport) {
    let matched = report.rows.iter().filter(|r| r.matched_index.is_some()).count();
    println!("class: {}", report.class);
    println!("rows: {} ({} matched)", report.rows.len(), matched);
    println!(
        "precision {:.4}  recall {:.4}  f1 {:.4}  aed {:.4}  aned {:.4}",
        report.precision, report.recall, report.f1, report.aed, report.aned
    );
}

fn cmd_bench(
    settings: &Settings,
    cfg: &RunConfig,
    catalog: &PromptCatalog,
    dataset: &Path,
) -> Result<ExitCode> {
    let gateway = Gateway::new(cfg.backend.clone())?;
    let summary = pipeline::run_benchmark(dataset, cfg, &gateway, catalog)?;

    if summary.tables.is_empty() {
        return Err(ConfigError(format!(
            "dataset {} contains no table directories",
            dataset.display()
        ))
        .into());
    }

    for table in &summary.tables {
        let r = &table.report;
        if table.failed {
            println!(
                "{:<24} FAILED: {}",
                table.name,
                table.error.as_deref().unwrap_or("unknown")
            );
        } else {
            println!(
                "{:<24} {:<12} P {:.4}  R {:.4}  F1 {:.4}  AED {:.4}  ANED {:.4}",
                table.name,
                r.class.name(),
                r.precision,
                r.recall,
                r.f1,
                r.aed,
                r.aned
            );
        }
    }
    println!(
        "macro ({} tables, {} failed): P {:.4}  R {:.4}  F1 {:.4}  AED {:.4}  ANED {:.4}",
        summary.tables.len(),
        summary.failed_tables,
        summary.macro_precision,
        summary.macro_recall,
        summary.macro_f1,
        summary.macro_aed,
        summary.macro_aned
    );

    write_json(settings, "summary.json", &summary)?;
    if summary.failed_tables > 0 {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn ensure_out(settings: &Settings) -> Result<&Path> {
    std::fs::create_dir_all(&settings.out)
        .with_context(|| format!("cannot create output dir {}", settings.out.display()))?;
    Ok(&settings.out)
}

fn write_json<T: serde::Serialize>(settings: &Settings, name: &str, value: &T) -> Result<()> {
    let dir = ensure_out(settings)?;
    let path = dir.join(name);
    let body = serde_json::to_string_pretty(value)?;
    std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(settings: &Settings, name: &str, text: &str) -> Result<()> {
    let dir = ensure_out(settings)?;
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Predictions as a single-column CSV; unmapped rows stay empty.
fn write_predictions(settings: &Settings, predictions: &[Option<CellValue>]) -> Result<()> {
    let records = predictions
        .iter()
        .map(|p| vec![p.as_ref().map(|c| c.raw().to_string()).unwrap_or_default()]);
    write_text(settings, "predictions.csv", &format_csv(records))
}

/// The interpretable artifact in its most useful plain form.
fn write_artifact(settings: &Settings, artifact: &TableArtifact) -> Result<()> {
    match artifact {
        TableArtifact::Program { text, .. } => write_text(settings, "program.txt", text),
        TableArtifact::Fit { program_text, .. } => {
            write_text(settings, "program.txt", program_text)
        }
        TableArtifact::Lookup { entries, .. } => {
            let rows = entries.iter().map(|(s, t)| vec![s.clone(), t.clone()]);
            write_text(settings, "lookup.csv", &format_csv(rows))
        }
    }
}
