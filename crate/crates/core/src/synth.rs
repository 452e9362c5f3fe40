//! Program synthesis through the model: direct generation for String-class
//! inputs, relationship tagging followed by generation for Algorithmic
//! ones.
//!
//! Every candidate program must survive parse + check before it is
//! accepted; rejected candidates get one more chance per attempt with the
//! checker's diagnostics appended to the prompt, up to three attempts.
//! Accepted programs are scored on the examples by the sandboxed evaluator
//! — partial coverage is allowed, the pass count is reported.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Gateway, GatewayError, PromptRequest, PurposeTag};
use crate::lang::{self, Diagnostic, EvalLimits, ProgramOrigin, TransformProgram, GRAMMAR_TEXT};
use crate::prompts::{PromptCatalog, PROMPT_DATA_BUDGET, PROMPT_DATA_SEED};
use crate::table::{format_testcases, serialize_examples, ExamplePair, TableError};

const MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("no valid program after {attempts} attempts: {}", last_diagnostics.join("; "))]
    SynthesisFailed { attempts: u32, last_diagnostics: Vec<String> },
    #[error("completion {got:?} has no \" to \" separator (after one re-ask)")]
    UnparsableTag { got: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// The `<source type> to <target type>` intermediate produced before
/// algorithmic or general transformation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipTag {
    pub source_type: String,
    pub target_type: String,
}

impl RelationshipTag {
    pub fn new(source_type: impl Into<String>, target_type: impl Into<String>) -> Self {
        RelationshipTag { source_type: source_type.into(), target_type: target_type.into() }
    }

    /// Splits a completion on its last " to " separator.
    pub fn parse(text: &str) -> Option<RelationshipTag> {
        let line = text.trim().trim_start_matches("Relationship:").trim();
        let at = line.rfind(" to ")?;
        let source_type = line[..at].trim();
        let target_type = line[at + 4..].trim();
        if source_type.is_empty() || target_type.is_empty() {
            return None;
        }
        Some(RelationshipTag::new(source_type, target_type))
    }

    pub fn rendered(&self) -> String {
        format!("{} to {}", self.source_type, self.target_type)
    }
}

/// An accepted program plus how hard it was to get and how well it covers
/// the examples.
#[derive(Debug)]
pub struct SynthesisOutcome {
    pub program: TransformProgram,
    pub attempts: u32,
    pub example_pass_count: usize,
    pub example_total: usize,
}

/// Pulls the program out of a completion: the first fenced code block if
/// any, else the whole text.
pub fn extract_code_block(text: &str) -> String {
    if let Some(open) = text.find("```") {
        let after_fence = &text[open + 3..];
        // Skip a language tag on the fence line.
        let code_start = after_fence.find('\n').map(|i| i + 1).unwrap_or(0);
        let code = &after_fence[code_start..];
        let code = match code.find("```") {
            Some(close) => &code[..close],
            None => code,
        };
        return code.trim().to_string();
    }
    text.trim().to_string()
}

/// Generates a String-class transformation from the test-case prompt.
pub fn generate_string_transform(
    examples: &[ExamplePair],
    gateway: &Gateway,
    catalog: &PromptCatalog,
    limits: &EvalLimits,
) -> Result<SynthesisOutcome, SynthError> {
    let testcases = format_testcases(examples)?;
    let (system, user) = catalog
        .string_gen
        .render(&[("grammar", GRAMMAR_TEXT), ("testcases", &testcases)]);
    let request = PromptRequest::new(PurposeTag::StringGen, system, user);
    generate_with_repair(request, ProgramOrigin::StringGen, examples, gateway, catalog, limits)
}

/// Asks for the `<source type> to <target type>` relationship behind the
/// example pairs.
pub fn tag_relationship(
    examples: &[ExamplePair],
    gateway: &Gateway,
    catalog: &PromptCatalog,
) -> Result<RelationshipTag, SynthError> {
    ask_for_tag(&catalog.rel_tag, PurposeTag::RelTag, examples, gateway, catalog)
}

pub(crate) fn ask_for_tag(
    template: &crate::prompts::PromptTemplate,
    purpose: PurposeTag,
    examples: &[ExamplePair],
    gateway: &Gateway,
    catalog: &PromptCatalog,
) -> Result<RelationshipTag, SynthError> {
    let data = serialize_examples(examples, PROMPT_DATA_BUDGET, PROMPT_DATA_SEED)?;
    let (system, user) = template.render(&[("data", &data)]);
    let request = PromptRequest::new(purpose, system, user);

    let completion = gateway.complete(&request)?;
    if let Some(tag) = RelationshipTag::parse(&completion.text) {
        return Ok(tag);
    }
    let mut reask = request.clone();
    reask.user_text.push_str(&catalog.fragments.tag_reask);
    let retry = gateway.complete(&reask)?;
    RelationshipTag::parse(&retry.text).ok_or(SynthError::UnparsableTag { got: retry.text })
}

/// Generates an Algorithmic-class transformation with the identified
/// relationship prepended — the reasoning decomposition that makes harder
/// conversions tractable.
pub fn generate_algorithmic_transform(
    examples: &[ExamplePair],
    tag: &RelationshipTag,
    gateway: &Gateway,
    catalog: &PromptCatalog,
    limits: &EvalLimits,
) -> Result<SynthesisOutcome, SynthError> {
    let testcases = format_testcases(examples)?;
    let (system, user) = catalog.algo_gen.render(&[
        ("tag", &tag.rendered()),
        ("grammar", GRAMMAR_TEXT),
        ("testcases", &testcases),
    ]);
    let request = PromptRequest::new(PurposeTag::AlgoGen, system, user);
    generate_with_repair(request, ProgramOrigin::AlgoGen, examples, gateway, catalog, limits)
}

fn generate_with_repair(
    base_request: PromptRequest,
    origin: ProgramOrigin,
    examples: &[ExamplePair],
    gateway: &Gateway,
    catalog: &PromptCatalog,
    limits: &EvalLimits,
) -> Result<SynthesisOutcome, SynthError> {
    let mut last_diagnostics: Vec<String> = Vec::new();

    for attempt in 1..=MAX_ATTEMPTS {
        let request = if attempt == 1 {
            base_request.clone()
        } else {
            let repair = catalog
                .fragments
                .repair
                .replace("{diagnostics}", &last_diagnostics.join("\n"));
            let mut retry = base_request.clone();
            retry.user_text.push_str(&repair);
            retry
        };

        let completion = gateway.complete(&request)?;
        let code = extract_code_block(&completion.text);

        let program = match lang::parse(&code, origin) {
            Ok(program) => program,
            Err(err) => {
                last_diagnostics = vec![err.to_string()];
                continue;
            }
        };
        let errors: Vec<Diagnostic> =
            lang::check(&program).into_iter().filter(Diagnostic::is_error).collect();
        if !errors.is_empty() {
            last_diagnostics = errors.iter().map(Diagnostic::to_string).collect();
            continue;
        }

        let example_pass_count = examples
            .iter()
            .filter(|pair| {
                lang::evaluate(&program, &pair.source, limits)
                    .map(|out| out.raw() == pair.target.raw())
                    .unwrap_or(false)
            })
            .count();
        return Ok(SynthesisOutcome {
            program,
            attempts: attempt,
            example_pass_count,
            example_total: examples.len(),
        });
    }

    Err(SynthError::SynthesisFailed { attempts: MAX_ATTEMPTS, last_diagnostics })
}
