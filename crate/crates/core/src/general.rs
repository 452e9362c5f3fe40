//! Knowledge-dependent transformations: detect the column types once, then
//! resolve each distinct source value with one model lookup, cached and
//! budget-capped, with bounded concurrency across values.
//!
//! Per-row failures (fixture misses, timeouts, refusals) leave that row
//! unmapped and the run continues; only configuration-class gateway errors
//! abort. An optional guardrail drops resolved values too far from every
//! available target, the cheap defense against hallucinated lookups.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::gateway::{Gateway, GatewayError, PromptRequest, PurposeTag};
use crate::join::edit_distance;
use crate::prompts::{PromptCatalog, PROMPT_DATA_BUDGET, PROMPT_DATA_SEED};
use crate::synth::{ask_for_tag, RelationshipTag, SynthError};
use crate::table::{serialize_examples, CellValue, ExampleSet, TableError};

#[derive(Debug, Error)]
pub enum GeneralError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("lookup budget of {budget} calls exhausted")]
    BudgetExhausted { budget: u64 },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// The per-run lookup state: the detected relationship, the guiding pairs,
/// the growing source→target cache, and the call budget.
pub struct LookupPlan {
    pub tag: RelationshipTag,
    pub examples_data: String,
    cache: Mutex<HashMap<String, String>>,
    budget: u64,
    calls_used: AtomicU64,
}

impl LookupPlan {
    pub fn new(tag: RelationshipTag, examples_data: String, budget: u64) -> Self {
        LookupPlan {
            tag,
            examples_data,
            cache: Mutex::new(HashMap::new()),
            budget,
            calls_used: AtomicU64::new(0),
        }
    }

    pub fn cached(&self, source: &str) -> Option<String> {
        self.cache.lock().expect("lookup cache").get(source).cloned()
    }

    fn insert(&self, source: &str, target: &str) {
        self.cache
            .lock()
            .expect("lookup cache")
            .insert(source.to_string(), target.to_string());
    }

    fn try_acquire_call(&self) -> bool {
        self.calls_used
            .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |used| {
                (used < self.budget).then_some(used + 1)
            })
            .is_ok()
    }

    /// Cache contents as sorted (source, target) rows — the inspectable
    /// artifact of a general-class run.
    pub fn snapshot(&self) -> Vec<(String, String)> {
        let cache = self.cache.lock().expect("lookup cache");
        let mut rows: Vec<(String, String)> =
            cache.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        rows.sort();
        rows
    }
}

/// Detects the source and target column types, with demonstrations suited
/// to knowledge-backed pairs.
pub fn detect_column_types(
    examples: &[crate::table::ExamplePair],
    gateway: &Gateway,
    catalog: &PromptCatalog,
) -> Result<RelationshipTag, SynthError> {
    ask_for_tag(&catalog.type_detect, PurposeTag::TypeDetect, examples, gateway, catalog)
}

/// Model refusals that mean "no value": treated as an absent row.
fn is_unknown(text: &str) -> bool {
    matches!(text.to_lowercase().as_str(), "" | "unknown" | "n/a")
}

/// Strips one layer of symmetric quotes plus surrounding whitespace.
fn clean_completion(text: &str) -> String {
    let trimmed = text.trim();
    let trimmed = trimmed
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(trimmed);
    trimmed.trim().to_string()
}

/// Resolves one source value. Cache hits cost no gateway call; an absent
/// result means the model declined to answer.
pub fn lookup_value(
    source: &CellValue,
    plan: &LookupPlan,
    gateway: &Gateway,
    catalog: &PromptCatalog,
) -> Result<Option<CellValue>, GeneralError> {
    if let Some(hit) = plan.cached(source.raw()) {
        return Ok(Some(CellValue::new(hit)));
    }
    if !plan.try_acquire_call() {
        return Err(GeneralError::BudgetExhausted { budget: plan.budget });
    }

    let (system, user) = catalog.lookup.render(&[
        ("tag", &plan.tag.rendered()),
        ("data", &plan.examples_data),
        ("value", source.raw()),
    ]);
    let completion = gateway.complete(&PromptRequest::new(PurposeTag::Lookup, system, user))?;
    let cleaned = clean_completion(&completion.text);
    if is_unknown(&cleaned) {
        return Ok(None);
    }
    plan.insert(source.raw(), &cleaned);
    Ok(Some(CellValue::new(cleaned)))
}

#[derive(Debug, Clone)]
pub struct GeneralOptions {
    /// Maximum lookup calls for the run.
    pub budget: u64,
    /// In-flight lookup bound.
    pub concurrency: usize,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        GeneralOptions { budget: 10_000, concurrency: 8 }
    }
}

#[derive(Debug)]
pub struct GeneralOutcome {
    pub predictions: Vec<Option<CellValue>>,
    pub tag: RelationshipTag,
    /// The resolved lookup table, sorted by source.
    pub lookup_table: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

/// Runs the full general-class pipeline over the source column: one type
/// detection, then one lookup per distinct value under the concurrency
/// bound. Output order always matches the source column.
pub fn transform_general(
    set: &ExampleSet,
    gateway: &Gateway,
    catalog: &PromptCatalog,
    opts: &GeneralOptions,
) -> Result<GeneralOutcome, GeneralError> {
    set.validate()?;
    let tag = detect_column_types(&set.examples, gateway, catalog)?;
    let examples_data =
        serialize_examples(&set.examples, PROMPT_DATA_BUDGET, PROMPT_DATA_SEED)?;
    let plan = LookupPlan::new(tag.clone(), examples_data, opts.budget);

    // Distinct source values in first-appearance order.
    let mut distinct: Vec<&CellValue> = Vec::new();
    {
        let mut seen = std::collections::HashSet::new();
        for cell in &set.source_column {
            if seen.insert(cell.raw()) {
                distinct.push(cell);
            }
        }
    }

    let mut warnings = Vec::new();
    if (distinct.len() as u64) > opts.budget {
        warnings.push(format!(
            "budget {} is below the {} distinct source values; run will be partial",
            opts.budget,
            distinct.len()
        ));
    }

    // Resolve distinct values with a bounded worker pool; each result lands
    // in its slot, so output order is deterministic no matter the
    // interleaving.
    let resolved: Vec<Option<Option<CellValue>>> = {
        let slots: Vec<Mutex<Option<Option<CellValue>>>> =
            distinct.iter().map(|_| Mutex::new(None)).collect();
        let issues: Mutex<Vec<String>> = Mutex::new(Vec::new());
        let fatal: Mutex<Option<GeneralError>> = Mutex::new(None);
        let next = AtomicUsize::new(0);
        let workers = opts.concurrency.clamp(1, distinct.len().max(1));

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let index = next.fetch_add(1, Ordering::Relaxed);
                    let Some(source) = distinct.get(index) else { break };
                    if fatal.lock().expect("fatal flag").is_some() {
                        break;
                    }
                    match lookup_value(source, &plan, gateway, catalog) {
                        Ok(value) => {
                            *slots[index].lock().expect("slot") = Some(value);
                        }
                        Err(GeneralError::Gateway(err)) if err.is_fatal_config() => {
                            *fatal.lock().expect("fatal flag") =
                                Some(GeneralError::Gateway(err));
                            break;
                        }
                        Err(err) => {
                            issues
                                .lock()
                                .expect("issues")
                                .push(format!("{:?}: {err}", source.raw()));
                            *slots[index].lock().expect("slot") = Some(None);
                        }
                    }
                });
            }
        });

        if let Some(err) = fatal.into_inner().expect("fatal flag") {
            return Err(err);
        }
        let mut issues = issues.into_inner().expect("issues");
        issues.sort();
        warnings.extend(issues);
        slots.into_iter().map(|slot| slot.into_inner().expect("slot")).collect()
    };

    let by_value: HashMap<&str, &Option<CellValue>> = distinct
        .iter()
        .zip(&resolved)
        .filter_map(|(cell, slot)| slot.as_ref().map(|value| (cell.raw(), value)))
        .collect();

    let predictions: Vec<Option<CellValue>> = set
        .source_column
        .iter()
        .map(|cell| by_value.get(cell.raw()).and_then(|v| (*v).clone()))
        .collect();

    Ok(GeneralOutcome { predictions, tag, lookup_table: plan.snapshot(), warnings })
}

/// Drops any resolved value whose normalized edit distance to its nearest
/// target exceeds `max_aned`. Returns the filtered predictions and the
/// indices flagged as suspected hallucinations. Never introduces values.
pub fn guardrail_verify(
    resolved: &[Option<CellValue>],
    target_column: &[CellValue],
    max_aned: f64,
) -> (Vec<Option<CellValue>>, Vec<usize>) {
    let mut flagged = Vec::new();
    let filtered = resolved
        .iter()
        .enumerate()
        .map(|(index, value)| {
            let Some(value) = value else { return None };
            let nearest = target_column
                .iter()
                .map(|t| {
                    edit_distance(value.raw(), t.raw()) as f64
                        / t.raw().chars().count().max(1) as f64
                })
                .fold(f64::INFINITY, f64::min);
            if nearest > max_aned {
                flagged.push(index);
                None
            } else {
                Some(value.clone())
            }
        })
        .collect();
    (filtered, flagged)
}
