//! Routes an example set to one of the four transformation classes.
//!
//! A deterministic numeric pre-check fires first — models are unreliable on
//! numeric data, and an all-numeric example set needs no model call at all.
//! Everything else goes through the in-context classification prompt, with
//! one stricter re-ask when the completion contains no class keyword.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Gateway, GatewayError, PromptRequest, PurposeTag};
use crate::prompts::{PromptCatalog, PROMPT_DATA_BUDGET, PROMPT_DATA_SEED};
use crate::table::{serialize_examples, ExamplePair, ExampleSet, TableError, TransformClass};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("could not parse a class label from {got:?} (after one re-ask)")]
    UnparsableLabel { got: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionSource {
    LlmLabel,
    NumericPrecheck,
    UserOverride,
}

/// The routing decision plus where it came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassDecision {
    pub class: TransformClass,
    pub source: DecisionSource,
    pub raw_label: String,
}

impl ClassDecision {
    pub fn overridden(class: TransformClass) -> Self {
        ClassDecision {
            class,
            source: DecisionSource::UserOverride,
            raw_label: class.name().to_string(),
        }
    }
}

/// True for zero-padded integer forms like "00501" or "-0123": a leading
/// zero directly followed by another digit. These are nominal codes, not
/// quantities — plain decimals like "0.9" don't trigger this.
fn is_zero_padded(raw: &str) -> bool {
    let digits = raw.trim().trim_start_matches(['+', '-']).as_bytes();
    digits.len() > 1 && digits[0] == b'0' && digits[1].is_ascii_digit()
}

/// Returns `Numbers` when every source and target parses as a number and
/// nothing looks like a zero-padded nominal code; otherwise defers to the
/// model.
pub fn numeric_precheck(examples: &[ExamplePair]) -> Option<TransformClass> {
    if examples.is_empty() {
        return None;
    }
    let all_numeric = examples.iter().all(|p| p.source.is_numeric() && p.target.is_numeric());
    let any_padded = examples
        .iter()
        .any(|p| is_zero_padded(p.source.raw()) || is_zero_padded(p.target.raw()));
    (all_numeric && !any_padded).then_some(TransformClass::Numbers)
}

/// Builds the classification prompt: task definition, the four class names
/// with explanations, one labeled shot per class, then the serialized
/// input pairs.
pub fn build_classifier_prompt(
    catalog: &PromptCatalog,
    examples: &[ExamplePair],
) -> Result<PromptRequest, TableError> {
    let data = serialize_examples(examples, PROMPT_DATA_BUDGET, PROMPT_DATA_SEED)?;
    let (system, user) = catalog.classify.render(&[("data", &data)]);
    Ok(PromptRequest::new(PurposeTag::Classify, system, user))
}

/// Scans for the first class keyword in the completion, case-insensitively.
/// Robust to verbose output; `numerical` is accepted as an alias.
pub fn parse_class_label(text: &str) -> Option<TransformClass> {
    const KEYWORDS: [(&str, TransformClass); 5] = [
        ("string", TransformClass::String),
        ("numbers", TransformClass::Numbers),
        ("numerical", TransformClass::Numbers),
        ("algorithmic", TransformClass::Algorithmic),
        ("general", TransformClass::General),
    ];
    let haystack = text.to_lowercase();
    KEYWORDS
        .iter()
        .filter_map(|(needle, class)| haystack.find(needle).map(|at| (at, *class)))
        .min_by_key(|&(at, _)| at)
        .map(|(_, class)| class)
}

/// Classifies the example set: pre-check first, then the model, with one
/// stricter re-ask on unparsable output.
pub fn classify(
    set: &ExampleSet,
    gateway: &Gateway,
    catalog: &PromptCatalog,
) -> Result<ClassDecision, ClassifyError> {
    set.validate()?;
    if let Some(class) = numeric_precheck(&set.examples) {
        return Ok(ClassDecision {
            class,
            source: DecisionSource::NumericPrecheck,
            raw_label: class.name().to_string(),
        });
    }

    let request = build_classifier_prompt(catalog, &set.examples)?;
    let completion = gateway.complete(&request)?;
    if let Some(class) = parse_class_label(&completion.text) {
        return Ok(ClassDecision {
            class,
            source: DecisionSource::LlmLabel,
            raw_label: completion.text.trim().to_string(),
        });
    }

    let mut reask = request.clone();
    reask.user_text.push_str(&catalog.fragments.classify_reask);
    let retry = gateway.complete(&reask)?;
    match parse_class_label(&retry.text) {
        Some(class) => Ok(ClassDecision {
            class,
            source: DecisionSource::LlmLabel,
            raw_label: retry.text.trim().to_string(),
        }),
        None => Err(ClassifyError::UnparsableLabel { got: retry.text }),
    }
}
