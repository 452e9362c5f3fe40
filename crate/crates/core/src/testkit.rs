//! Test support: scripted transports and the bundled mini-benchmark.
//!
//! The mini-benchmark ships as data (tables plus canned completions). Tests
//! materialize it to disk, run the pipeline once in record mode against a
//! [`ScriptedTransport`] to produce digest-keyed fixtures, then replay those
//! fixtures with a [`PanicTransport`] to prove the offline path is complete
//! and deterministic. Enabled with the `testkit` feature.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use crate::csv::format_csv;
use crate::gateway::{
    BackendConfig, Gateway, Transport, TransportError, TransportResponse,
};
use crate::table::TransformClass;

/// Transport that panics on any use; proves a code path does no network.
pub struct PanicTransport;

impl Transport for PanicTransport {
    fn post_json(
        &self,
        _: &str,
        _: Option<&str>,
        _: &serde_json::Value,
        _: Duration,
    ) -> Result<TransportResponse, TransportError> {
        panic!("transport used where zero network activity was required");
    }
}

/// One canned completion: fires when the user text contains `marker` and,
/// if `any_of` is non-empty, at least one of its needles.
#[derive(Debug, Clone)]
pub struct Rule {
    pub marker: String,
    pub any_of: Vec<String>,
    pub reply: String,
}

impl Rule {
    pub fn new(marker: &str, any_of: &[&str], reply: &str) -> Rule {
        Rule {
            marker: marker.to_string(),
            any_of: any_of.iter().map(|s| s.to_string()).collect(),
            reply: reply.to_string(),
        }
    }
}

/// Transport that answers from an ordered rule list, mimicking a chat
/// completion endpoint. Unmatched prompts are hard errors so fixture gaps
/// surface immediately.
pub struct ScriptedTransport {
    rules: Vec<Rule>,
    calls: AtomicU64,
}

impl ScriptedTransport {
    pub fn new(rules: Vec<Rule>) -> Self {
        ScriptedTransport { rules, calls: AtomicU64::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Transport for ScriptedTransport {
    fn post_json(
        &self,
        _: &str,
        _: Option<&str>,
        body: &serde_json::Value,
        _: Duration,
    ) -> Result<TransportResponse, TransportError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let user_text = body["messages"]
            .as_array()
            .and_then(|m| m.last())
            .and_then(|m| m["content"].as_str())
            .unwrap_or_default();
        for rule in &self.rules {
            let marker_hit = user_text.contains(&rule.marker);
            let vocab_hit =
                rule.any_of.is_empty() || rule.any_of.iter().any(|n| user_text.contains(n));
            if marker_hit && vocab_hit {
                let body =
                    serde_json::json!({"choices": [{"message": {"content": rule.reply}}]});
                return Ok(TransportResponse { status: 200, body: body.to_string() });
            }
        }
        Err(TransportError::Network(format!(
            "no scripted reply for prompt starting {:?}",
            &user_text[..user_text.len().min(160)]
        )))
    }
}

/// Record-mode gateway wired to a scripted transport; fixtures land in
/// `fixture_dir`.
pub fn scripted_record_gateway(rules: Vec<Rule>, fixture_dir: &Path) -> Gateway {
    let mut config =
        BackendConfig::record("http://scripted.local/v1/chat", "scripted-model", fixture_dir);
    config.api_key_env = String::new();
    config.backoff = Duration::from_millis(1);
    Gateway::with_transport(config, Box::new(ScriptedTransport::new(rules)))
        .expect("record config is valid")
}

/// Replay-mode gateway that panics on any network use.
pub fn replay_gateway(fixture_dir: &Path) -> Gateway {
    Gateway::with_transport(BackendConfig::replay(fixture_dir), Box::new(PanicTransport))
        .expect("replay config is valid")
}

/// One bundled benchmark table: aligned (source, gold) rows, an optional
/// shuffled target column (which forces a gold.csv), canned completions,
/// and the hand-computed scores the replay run must reproduce exactly.
pub struct MiniTable {
    pub name: &'static str,
    pub class: TransformClass,
    pub rows: Vec<(&'static str, &'static str)>,
    /// When set, target.csv gets these values (a permutation of the gold
    /// targets) and gold.csv carries the alignment.
    pub shuffled_targets: Option<Vec<&'static str>>,
    pub rules: Vec<Rule>,
    /// Expected metrics under edit-distance matching.
    pub expect_aed: f64,
    pub expect_aned: f64,
    /// Expected F1 under exact matching (edit-distance F1 is 1.0 for every
    /// bundled table).
    pub expect_exact_f1: f64,
}

const USERNAME_PROGRAM: &str = r#"```
transform(x) {
    let parts = split(trim(x), " ")
    let n = length(parts)
    let acc = ""
    for p in slice(parts, 0, n - 1) {
        acc = acc + lower(char_at(p, 0)) + "."
    }
    return acc + lower(parts[n - 1])
}
```"#;

const ISO_DATE_PROGRAM: &str = r#"```
transform(x) {
    return substring(x, 8, 10) + "/" + substring(x, 5, 7) + "/" + substring(x, 0, 4)
}
```"#;

const CODEPOINT_PROGRAM: &str = r#"```
transform(x) {
    return format_int(parse_int(substring(x, 2, length(x)), 16), 10)
}
```"#;

const BIN_HEX_PROGRAM: &str = r#"```
transform(x) {
    return format_int(parse_int(x, 2), 16)
}
```"#;

fn lookup_rules(pairs: &[(&str, &str)]) -> Vec<Rule> {
    pairs
        .iter()
        .map(|(source, target)| {
            Rule::new("Target:", &[&format!("Source: \"{source}\"")], target)
        })
        .collect()
}

/// The bundled eight-table mini-benchmark: two tables per transformation
/// class, 6-8 rows each.
pub fn minibench_tables() -> Vec<MiniTable> {
    let mut tables = Vec::new();

    // String 1: full name -> username. The canned program abbreviates
    // every leading name, so the nickname row "Theodore Logan" ->
    // "ted.logan" comes out as "t.logan": edit distance 2, still nearest.
    let username_rows = vec![
        ("Karim Ortega Vance", "k.o.vance"),
        ("Mira Solano", "m.solano"),
        ("Petra Quill Sandoval", "p.q.sandoval"),
        ("Lionel Frost", "l.frost"),
        ("Ada Greer Whitfield", "a.g.whitfield"),
        ("Omar Castellanos", "o.castellanos"),
        ("Nina Park", "n.park"),
        ("Theodore Logan", "ted.logan"),
    ];
    let username_vocab: Vec<&str> = username_rows.iter().map(|&(s, _)| s).collect();
    tables.push(MiniTable {
        name: "usernames",
        class: TransformClass::String,
        rules: vec![
            Rule::new("Class:", &username_vocab, "String"),
            Rule::new("Test cases:", &username_vocab, USERNAME_PROGRAM),
        ],
        rows: username_rows,
        shuffled_targets: None,
        // One row at edit distance 2 from gold of length 9, 8 rows total.
        expect_aed: 2.0 / 8.0,
        expect_aned: (2.0 / 9.0) / 8.0,
        // Exact matching drops that row: P 1, R 7/8.
        expect_exact_f1: 14.0 / 15.0,
    });

    // String 2: ISO date -> day/month/year.
    let date_rows = vec![
        ("2024-09-05", "05/09/2024"),
        ("1999-12-31", "31/12/1999"),
        ("2001-01-15", "15/01/2001"),
        ("1986-06-27", "27/06/1986"),
        ("2010-11-02", "02/11/2010"),
        ("1975-03-21", "21/03/1975"),
    ];
    let date_vocab: Vec<&str> = date_rows.iter().map(|&(s, _)| s).collect();
    tables.push(MiniTable {
        name: "iso_dates",
        class: TransformClass::String,
        rules: vec![
            Rule::new("Class:", &date_vocab, "String"),
            Rule::new("Test cases:", &date_vocab, ISO_DATE_PROGRAM),
        ],
        rows: date_rows,
        shuffled_targets: None,
        expect_aed: 0.0,
        expect_aned: 0.0,
        expect_exact_f1: 1.0,
    });

    // Numbers 1: y = 0.5x + 0.3, one-decimal targets. The numeric
    // pre-check routes these without any model call, so no rules.
    tables.push(MiniTable {
        name: "half_plus",
        class: TransformClass::Numbers,
        rows: vec![
            ("1", "0.8"),
            ("3", "1.8"),
            ("7", "3.8"),
            ("9", "4.8"),
            ("12", "6.3"),
            ("20", "10.3"),
        ],
        shuffled_targets: None,
        rules: Vec::new(),
        expect_aed: 0.0,
        expect_aned: 0.0,
        expect_exact_f1: 1.0,
    });

    // Numbers 2: y = x^2 + 2x + 1, integer targets.
    tables.push(MiniTable {
        name: "squares",
        class: TransformClass::Numbers,
        rows: vec![
            ("1", "4"),
            ("2", "9"),
            ("3", "16"),
            ("5", "36"),
            ("8", "81"),
            ("10", "121"),
        ],
        shuffled_targets: None,
        rules: Vec::new(),
        expect_aed: 0.0,
        expect_aned: 0.0,
        expect_exact_f1: 1.0,
    });

    // Algorithmic 1: unicode code point notation -> decimal value.
    let codepoint_rows = vec![
        ("U+0041", "65"),
        ("U+0042", "66"),
        ("U+005A", "90"),
        ("U+0061", "97"),
        ("U+0030", "48"),
        ("U+007E", "126"),
    ];
    let codepoint_vocab: Vec<&str> = codepoint_rows.iter().map(|&(s, _)| s).collect();
    tables.push(MiniTable {
        name: "codepoints",
        class: TransformClass::Algorithmic,
        rules: vec![
            Rule::new("Class:", &codepoint_vocab, "Algorithmic"),
            Rule::new(
                "Gregorian",
                &codepoint_vocab,
                "Unicode code point to ASCII decimal value",
            ),
            Rule::new(
                "The relationship between input and output values is:",
                &codepoint_vocab,
                CODEPOINT_PROGRAM,
            ),
        ],
        rows: codepoint_rows,
        shuffled_targets: None,
        expect_aed: 0.0,
        expect_aned: 0.0,
        expect_exact_f1: 1.0,
    });

    // Algorithmic 2: binary -> hexadecimal.
    let bin_rows = vec![
        ("1010", "a"),
        ("11111111", "ff"),
        ("100110", "26"),
        ("111", "7"),
        ("10000", "10"),
        ("110010", "32"),
    ];
    let bin_vocab: Vec<&str> = bin_rows.iter().map(|&(s, _)| s).collect();
    tables.push(MiniTable {
        name: "bin_to_hex",
        class: TransformClass::Algorithmic,
        rules: vec![
            Rule::new("Class:", &bin_vocab, "Algorithmic"),
            Rule::new("Gregorian", &bin_vocab, "binary number to hexadecimal number"),
            Rule::new(
                "The relationship between input and output values is:",
                &bin_vocab,
                BIN_HEX_PROGRAM,
            ),
        ],
        rows: bin_rows,
        shuffled_targets: None,
        expect_aed: 0.0,
        expect_aned: 0.0,
        expect_exact_f1: 1.0,
    });

    // General 1: company -> chief executive, resolved per value.
    let ceo_rows = vec![
        ("Oracle", "Safra Catz"),
        ("Nvidia", "Jensen Huang"),
        ("Adobe", "Shantanu Narayen"),
        ("Spotify", "Daniel Ek"),
        ("Airbnb", "Brian Chesky"),
        ("Zoom", "Eric Yuan"),
    ];
    let ceo_vocab: Vec<&str> = ceo_rows.iter().map(|&(s, _)| s).collect();
    let mut ceo_rules = vec![
        Rule::new("Class:", &ceo_vocab, "General"),
        Rule::new("Airport Code", &ceo_vocab, "Company to Chief Executive Officer"),
    ];
    ceo_rules.extend(lookup_rules(&ceo_rows));
    tables.push(MiniTable {
        name: "company_ceo",
        class: TransformClass::General,
        rows: ceo_rows,
        shuffled_targets: None,
        rules: ceo_rules,
        expect_aed: 0.0,
        expect_aned: 0.0,
        expect_exact_f1: 1.0,
    });

    // General 2: country -> capital, with the target column shuffled so
    // the explicit gold.csv alignment is exercised.
    let capital_rows = vec![
        ("France", "Paris"),
        ("Japan", "Tokyo"),
        ("Canada", "Ottawa"),
        ("Egypt", "Cairo"),
        ("Brazil", "Brasília"),
        ("Norway", "Oslo"),
        ("Kenya", "Nairobi"),
    ];
    let capital_vocab: Vec<&str> = capital_rows.iter().map(|&(s, _)| s).collect();
    let mut capital_rules = vec![
        Rule::new("Class:", &capital_vocab, "General"),
        Rule::new("Airport Code", &capital_vocab, "Country to Capital City"),
    ];
    capital_rules.extend(lookup_rules(&capital_rows));
    tables.push(MiniTable {
        name: "country_capital",
        class: TransformClass::General,
        rows: capital_rows,
        shuffled_targets: Some(vec![
            "Cairo", "Paris", "Nairobi", "Tokyo", "Oslo", "Brasília", "Ottawa",
        ]),
        rules: capital_rules,
        expect_aed: 0.0,
        expect_aned: 0.0,
        expect_exact_f1: 1.0,
    });

    tables
}

/// All canned completions of the mini-benchmark as one transport script.
pub fn minibench_rules() -> Vec<Rule> {
    minibench_tables().into_iter().flat_map(|t| t.rules).collect()
}

/// Writes the mini-benchmark as a dataset directory: one subdirectory per
/// table with source.csv, target.csv, and gold.csv where required.
pub fn write_minibench(dataset_dir: &Path) {
    for table in minibench_tables() {
        let dir = dataset_dir.join(table.name);
        std::fs::create_dir_all(&dir).expect("create table dir");
        let sources = table.rows.iter().map(|&(s, _)| vec![s.to_string()]);
        std::fs::write(dir.join("source.csv"), format_csv(sources)).expect("write source");
        match &table.shuffled_targets {
            Some(shuffled) => {
                let targets = shuffled.iter().map(|t| vec![t.to_string()]);
                std::fs::write(dir.join("target.csv"), format_csv(targets))
                    .expect("write target");
                let gold =
                    table.rows.iter().map(|&(s, t)| vec![s.to_string(), t.to_string()]);
                std::fs::write(dir.join("gold.csv"), format_csv(gold)).expect("write gold");
            }
            None => {
                let targets = table.rows.iter().map(|&(_, t)| vec![t.to_string()]);
                std::fs::write(dir.join("target.csv"), format_csv(targets))
                    .expect("write target");
            }
        }
    }
}

/// A three-row table whose synthesized program faults on one row: the
/// classic failure-accounting case (recall 2/3, precision 1, F1 0.8).
pub fn faulting_table_rows() -> Vec<(&'static str, &'static str)> {
    vec![("5", "12"), ("10", "17"), ("abc", "999")]
}

pub fn faulting_table_rules() -> Vec<Rule> {
    let program = r#"```
transform(x) {
    return format_int(parse_int(x, 10) + 7, 10)
}
```"#;
    vec![
        Rule::new("Class:", &["\"abc\""], "String"),
        Rule::new("Test cases:", &["Input: abc"], program),
    ]
}

/// Writes the faulting table as a single-table dataset directory.
pub fn write_faulting_table(dataset_dir: &Path) {
    let dir = dataset_dir.join("plus_seven");
    std::fs::create_dir_all(&dir).expect("create table dir");
    let rows = faulting_table_rows();
    let sources = rows.iter().map(|&(s, _)| vec![s.to_string()]);
    let targets = rows.iter().map(|&(_, t)| vec![t.to_string()]);
    std::fs::write(dir.join("source.csv"), format_csv(sources)).expect("write source");
    std::fs::write(dir.join("target.csv"), format_csv(targets)).expect("write target");
}
