//! Column and example-pair types, plus the exact text serializations fed to
//! the model by every prompt-building stage.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("example list is empty")]
    EmptyExamples,
    #[error("serialization budget of {budget} chars cannot fit a single example pair")]
    BudgetTooSmall { budget: usize },
    #[error("example source {0:?} does not appear in the source column")]
    ExampleNotInSource(String),
}

/// A single cell. `numeric_view` is present iff the raw text parses
/// completely as a rational literal (optional sign, one decimal point,
/// optional exponent) after trimming surrounding whitespace.
#[derive(Debug, Clone, PartialEq)]
pub struct CellValue {
    raw: String,
    numeric_view: Option<f64>,
}

impl CellValue {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let numeric_view = parse_rational(raw.trim());
        CellValue { raw, numeric_view }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn numeric(&self) -> Option<f64> {
        self.numeric_view
    }

    pub fn is_numeric(&self) -> bool {
        self.numeric_view.is_some()
    }
}

impl From<&str> for CellValue {
    fn from(raw: &str) -> Self {
        CellValue::new(raw)
    }
}

impl From<String> for CellValue {
    fn from(raw: String) -> Self {
        CellValue::new(raw)
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

// Cells serialize as their raw text; the numeric view is re-derived on load.
impl Serialize for CellValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for CellValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(CellValue::new(String::deserialize(deserializer)?))
    }
}

/// Strict rational-literal parse: `[+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?`.
/// Locale grouping separators, hex, `inf`, and `nan` are all rejected.
/// Shared with the language's `parse_num` builtin so both agree on what
/// counts as numeric.
pub(crate) fn parse_rational(text: &str) -> Option<f64> {
    let bytes = text.as_bytes();
    if bytes.is_empty() {
        return None;
    }
    let mut i = 0;
    if bytes[i] == b'+' || bytes[i] == b'-' {
        i += 1;
    }
    let int_digits = count_digits(bytes, &mut i);
    let mut frac_digits = 0;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        frac_digits = count_digits(bytes, &mut i);
    }
    if int_digits == 0 && frac_digits == 0 {
        return None;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        if count_digits(bytes, &mut i) == 0 {
            return None;
        }
    }
    if i != bytes.len() {
        return None;
    }
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn count_digits(bytes: &[u8], i: &mut usize) -> usize {
    let start = *i;
    while *i < bytes.len() && bytes[*i].is_ascii_digit() {
        *i += 1;
    }
    *i - start
}

/// One guiding example: a source value and its expected target value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub source: CellValue,
    pub target: CellValue,
}

impl ExamplePair {
    pub fn new(source: impl Into<CellValue>, target: impl Into<CellValue>) -> Self {
        ExamplePair { source: source.into(), target: target.into() }
    }
}

/// The guiding pairs plus the full source column and, when available, the
/// target column to join against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleSet {
    pub examples: Vec<ExamplePair>,
    pub source_column: Vec<CellValue>,
    pub target_column: Option<Vec<CellValue>>,
}

impl ExampleSet {
    pub fn new(
        examples: Vec<ExamplePair>,
        source_column: Vec<CellValue>,
        target_column: Option<Vec<CellValue>>,
    ) -> Result<Self, TableError> {
        let set = ExampleSet { examples, source_column, target_column };
        set.validate()?;
        Ok(set)
    }

    /// A set carrying only examples, for synthesis-only entry points.
    pub fn from_examples(examples: Vec<ExamplePair>) -> Self {
        ExampleSet { examples, source_column: Vec::new(), target_column: None }
    }

    /// Checks the structural invariants: examples non-empty, and every
    /// example source present in the source column when one is provided.
    pub fn validate(&self) -> Result<(), TableError> {
        if self.examples.is_empty() {
            return Err(TableError::EmptyExamples);
        }
        if !self.source_column.is_empty() {
            for pair in &self.examples {
                if !self.source_column.iter().any(|c| c.raw() == pair.source.raw()) {
                    return Err(TableError::ExampleNotInSource(pair.source.raw().to_string()));
                }
            }
        }
        Ok(())
    }
}

/// The four transformation classes an input can be routed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformClass {
    String,
    Numbers,
    Algorithmic,
    General,
}

impl TransformClass {
    pub const ALL: [TransformClass; 4] = [
        TransformClass::String,
        TransformClass::Numbers,
        TransformClass::Algorithmic,
        TransformClass::General,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformClass::String => "String",
            TransformClass::Numbers => "Numbers",
            TransformClass::Algorithmic => "Algorithmic",
            TransformClass::General => "General",
        }
    }
}

impl fmt::Display for TransformClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TransformClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "string" => Ok(TransformClass::String),
            "numbers" | "numerical" | "numeric" => Ok(TransformClass::Numbers),
            "algorithmic" => Ok(TransformClass::Algorithmic),
            "general" => Ok(TransformClass::General),
            other => Err(format!("unknown transformation class {other:?}")),
        }
    }
}

fn quote(value: &str) -> String {
    // Embedded double quotes are doubled so the pair list stays parseable.
    format!("\"{}\"", value.replace('"', "\"\""))
}

fn serialize_pair(pair: &ExamplePair) -> String {
    format!("({} -> {})", quote(pair.source.raw()), quote(pair.target.raw()))
}

/// Serializes example pairs as `("s" -> "t")` items joined by `, `, every
/// value double-quoted regardless of datatype. If the full list exceeds
/// `max_chars`, a seeded uniform subset is taken instead, filled greedily to
/// the budget and emitted in input order.
pub fn serialize_examples(
    examples: &[ExamplePair],
    max_chars: usize,
    seed: u64,
) -> Result<String, TableError> {
    if examples.is_empty() {
        return Err(TableError::EmptyExamples);
    }
    let rendered: Vec<String> = examples.iter().map(serialize_pair).collect();
    let full_len: usize =
        rendered.iter().map(String::len).sum::<usize>() + 2 * (rendered.len() - 1);
    if full_len <= max_chars {
        return Ok(rendered.join(", "));
    }

    let mut order: Vec<usize> = (0..examples.len()).collect();
    shuffle(&mut order, seed);

    let mut picked: Vec<usize> = Vec::new();
    let mut used = 0usize;
    for idx in order {
        let extra = rendered[idx].len() + if picked.is_empty() { 0 } else { 2 };
        if used + extra <= max_chars {
            used += extra;
            picked.push(idx);
        }
    }
    if picked.is_empty() {
        return Err(TableError::BudgetTooSmall { budget: max_chars });
    }
    picked.sort_unstable();
    Ok(picked.iter().map(|&i| rendered[i].as_str()).collect::<Vec<_>>().join(", "))
}

// Fisher-Yates with a fixed stream so sampled subsets are reproducible
// across platforms and releases.
fn shuffle(indices: &mut [usize], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
}

/// Formats example pairs in the test-case layout used by the code-generation
/// prompts: one `Input: s, Expected output: t` line per pair.
pub fn format_testcases(examples: &[ExamplePair]) -> Result<String, TableError> {
    if examples.is_empty() {
        return Err(TableError::EmptyExamples);
    }
    Ok(examples
        .iter()
        .map(|p| format!("Input: {}, Expected output: {}", p.source.raw(), p.target.raw()))
        .collect::<Vec<_>>()
        .join("\n"))
}
