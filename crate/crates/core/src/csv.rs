//! Strict RFC-4180 CSV ingestion for column and example files.
//!
//! The reader is deliberately unforgiving: an unterminated quote, a stray
//! quote inside an unquoted field, or trailing text after a closing quote is
//! a hard `MalformedCsv` error rather than a silently mangled record.

use std::path::Path;

use thiserror::Error;

use crate::table::{CellValue, ExamplePair};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv at line {line}: {message}")]
    MalformedCsv { line: usize, message: String },
    #[error("record at line {line} has {found} fields, expected {expected}")]
    WrongArity { line: usize, expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ColumnFileOptions {
    /// Zero-based index of the column to read.
    pub column: usize,
    /// Skip the first record.
    pub has_header: bool,
}

/// Parses CSV text into records. Records are separated by `\n` or `\r\n`;
/// fields follow RFC-4180 quoting with doubled quotes for literals.
pub fn parse_csv(text: &str) -> Result<Vec<Vec<String>>, CsvError> {
    let mut records = Vec::new();
    let mut record: Vec<String> = Vec::new();
    let mut field = String::new();
    let mut line = 1usize;
    let mut chars = text.chars().peekable();
    // Quoting only applies when the quote opens the field.
    let mut field_started = false;

    while let Some(ch) = chars.next() {
        match ch {
            '"' if !field_started => {
                let quote_line = line;
                loop {
                    match chars.next() {
                        Some('"') => {
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                field.push('"');
                            } else {
                                break;
                            }
                        }
                        Some('\n') => {
                            line += 1;
                            field.push('\n');
                        }
                        Some(c) => field.push(c),
                        None => {
                            return Err(CsvError::MalformedCsv {
                                line: quote_line,
                                message: "unterminated quoted field".into(),
                            })
                        }
                    }
                }
                // Only a separator or record end may follow the closing quote.
                match chars.peek() {
                    Some(',') | Some('\n') | Some('\r') | None => field_started = true,
                    Some(c) => {
                        return Err(CsvError::MalformedCsv {
                            line,
                            message: format!("unexpected {c:?} after closing quote"),
                        })
                    }
                }
            }
            '"' => {
                return Err(CsvError::MalformedCsv {
                    line,
                    message: "quote inside unquoted field".into(),
                })
            }
            ',' => {
                record.push(std::mem::take(&mut field));
                field_started = false;
            }
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                    end_record(&mut records, &mut record, &mut field);
                    field_started = false;
                    line += 1;
                } else {
                    field.push('\r');
                    field_started = true;
                }
            }
            '\n' => {
                end_record(&mut records, &mut record, &mut field);
                field_started = false;
                line += 1;
            }
            c => {
                field.push(c);
                field_started = true;
            }
        }
    }
    if field_started || !field.is_empty() || !record.is_empty() {
        end_record(&mut records, &mut record, &mut field);
    }
    Ok(records)
}

fn end_record(records: &mut Vec<Vec<String>>, record: &mut Vec<String>, field: &mut String) {
    record.push(std::mem::take(field));
    records.push(std::mem::take(record));
}

fn read_file(path: &Path) -> Result<String, CsvError> {
    std::fs::read_to_string(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads one column of a CSV file as cell values.
pub fn load_column_file(path: &Path, opts: ColumnFileOptions) -> Result<Vec<CellValue>, CsvError> {
    let records = parse_csv(&read_file(path)?);
    let mut out = Vec::new();
    for (i, record) in records?.into_iter().enumerate() {
        if opts.has_header && i == 0 {
            continue;
        }
        let found = record.len();
        match record.into_iter().nth(opts.column) {
            Some(value) => out.push(CellValue::new(value)),
            None => {
                return Err(CsvError::WrongArity { line: i + 1, expected: opts.column + 1, found })
            }
        }
    }
    Ok(out)
}

/// Loads a two-column `source,target` CSV as example pairs, preserving file
/// order.
pub fn load_example_file(path: &Path) -> Result<Vec<ExamplePair>, CsvError> {
    let records = parse_csv(&read_file(path)?)?;
    let mut out = Vec::new();
    for (i, record) in records.into_iter().enumerate() {
        if record.len() != 2 {
            return Err(CsvError::WrongArity { line: i + 1, expected: 2, found: record.len() });
        }
        let mut it = record.into_iter();
        out.push(ExamplePair::new(it.next().unwrap(), it.next().unwrap()));
    }
    Ok(out)
}

/// Quotes a field when it contains separators, quotes, or newlines.
pub fn escape_field(field: &str) -> String {
    if field.contains(['"', ',', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Renders records as CSV text with `\n` separators and a trailing newline.
pub fn format_csv<R, F>(records: R) -> String
where
    R: IntoIterator<Item = F>,
    F: IntoIterator<Item = String>,
{
    let mut out = String::new();
    for record in records {
        let fields: Vec<String> = record.into_iter().map(|f| escape_field(&f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
