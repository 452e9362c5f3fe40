//! The sandboxed transformation language: grammar, parser, static checker,
//! printer, and resource-bounded evaluator.
//!
//! Every synthesized transformation — numeric formula, string manipulation,
//! or algorithmic conversion — is expressed as a program in this closed
//! language and executed by [`evaluate`]. The language has no escape
//! hatches: no I/O, no clock, no randomness, and every run halts within the
//! configured step budget.

pub mod ast;
mod builtins;
mod check;
mod eval;
mod lexer;
mod parser;
mod printer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::CellValue;
pub use ast::{Program, Span};
pub use builtins::{Builtin, BUILTINS};
pub use eval::{format_f64, round_half_away};
pub use printer::print_program;

/// The grammar and builtin reference, embedded into code-generation prompts.
pub const GRAMMAR_TEXT: &str = include_str!("../../docs/grammar.ebnf");

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {}, col {}: {message}", span.line, span.col)]
    Syntax { message: String, span: Span },
    #[error("forbidden construct at line {}, col {}: {message}", span.line, span.col)]
    Forbidden { message: String, span: Span },
}

impl ParseError {
    pub fn message(&self) -> &str {
        match self {
            ParseError::Syntax { message, .. } | ParseError::Forbidden { message, .. } => message,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("step budget of {budget} exceeded")]
    StepBudgetExceeded { budget: u64 },
    #[error("string of {len} bytes exceeds the {max} byte limit")]
    OutputTooLong { len: usize, max: usize },
    #[error("runtime fault: {message}")]
    RuntimeFault { message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A finding from the static checker, tied to a source span.
#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag} at line {}, col {}: {}", self.span.line, self.span.col, self.message)
    }
}

/// Where a program came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProgramOrigin {
    NumericFit,
    StringGen,
    AlgoGen,
}

/// A parsed, name-resolved transformation program.
#[derive(Debug, Clone)]
pub struct TransformProgram {
    pub ast: Program,
    pub source_text: String,
    pub origin: ProgramOrigin,
}

impl TransformProgram {
    /// Canonical source rendering of the syntax tree.
    pub fn printed(&self) -> String {
        printer::print_program(&self.ast)
    }
}

/// Execution bounds for [`evaluate`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvalLimits {
    pub max_steps: u64,
    pub max_string_len: usize,
    pub max_call_depth: usize,
}

impl Default for EvalLimits {
    fn default() -> Self {
        EvalLimits { max_steps: 100_000, max_string_len: 65_536, max_call_depth: 64 }
    }
}

/// Parses source text into a program. Accepts either the full
/// `fn ...* transform(x) { ... }` form or a bare expression, which is
/// wrapped as `transform(x) { return <expr> }`.
///
/// Name resolution runs here: unknown identifiers are syntax errors and
/// I/O-suggesting identifiers are `ForbiddenConstruct`, so a successfully
/// parsed program references nothing outside the sandbox.
pub fn parse(source: &str, origin: ProgramOrigin) -> Result<TransformProgram, ParseError> {
    let ast = parser::parse_program(source)?;
    if let Some(diag) = check::resolve(&ast).into_iter().find(Diagnostic::is_error) {
        return Err(ParseError::Syntax { message: diag.message, span: diag.span });
    }
    Ok(TransformProgram { ast, source_text: source.to_string(), origin })
}

/// Static checks: unknown names, arity mismatches, literal type conflicts,
/// shadowing, unreachable code. Errors make the program unusable; warnings
/// are advisory.
pub fn check(program: &TransformProgram) -> Vec<Diagnostic> {
    check::check_program(&program.ast)
}

/// Runs the program with `x` bound to the input's raw text (and `xn` to its
/// numeric view when present). The result is coerced to text.
pub fn evaluate(
    program: &TransformProgram,
    input: &CellValue,
    limits: &EvalLimits,
) -> Result<CellValue, EvalError> {
    eval::run(&program.ast, input.raw(), limits).map(CellValue::new)
}
