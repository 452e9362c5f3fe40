//! Tokenizer.
//!
//! Identifiers that suggest I/O, process, or environment access are reserved
//! and rejected here, before parsing, so a hostile or confused generated
//! program fails with `ForbiddenConstruct` no matter where the name appears.

use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Num(f64),
    Str(String),
    Transform,
    Fn,
    Let,
    For,
    In,
    While,
    Return,
    If,
    Else,
    True,
    False,
    And,
    Or,
    Not,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier {name:?}"),
            Tok::Int(v) => format!("integer {v}"),
            Tok::Num(v) => format!("number {v}"),
            Tok::Str(_) => "string literal".to_string(),
            other => format!("{:?}", other).to_lowercase(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Names rejected outright: anything hinting at modules, I/O, processes,
/// randomness, or clocks.
const FORBIDDEN_NAMES: &[&str] = &[
    "import", "include", "require", "use", "from", "module", "open", "read", "write", "file",
    "eval", "exec", "compile", "system", "subprocess", "shell", "os", "sys", "env", "getenv",
    "setenv", "environ", "input", "print", "println", "fetch", "http", "request", "socket",
    "random", "rand", "time", "clock", "now", "sleep", "globals", "locals",
];

pub fn is_forbidden(name: &str) -> bool {
    FORBIDDEN_NAMES.contains(&name)
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

pub fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer { src: source.as_bytes(), pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();
    while let Some(token) = lexer.next_token(source)? {
        tokens.push(token);
    }
    Ok(tokens)
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn span_from(&self, start: usize, line: u32, col: u32) -> Span {
        Span::new(start, self.pos, line, col)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b' ') | Some(b'\t') | Some(b'\r') | Some(b'\n') => {
                    self.bump();
                }
                // Both comment styles seen in generated code.
                Some(b'#') => self.skip_line(),
                Some(b'/') if self.peek2() == Some(b'/') => self.skip_line(),
                _ => break,
            }
        }
    }

    fn skip_line(&mut self) {
        while let Some(b) = self.peek() {
            if b == b'\n' {
                break;
            }
            self.bump();
        }
    }

    fn next_token(&mut self, source: &str) -> Result<Option<Token>, ParseError> {
        self.skip_trivia();
        let (start, line, col) = (self.pos, self.line, self.col);
        let Some(b) = self.peek() else { return Ok(None) };

        let tok = match b {
            b'(' => self.single(Tok::LParen),
            b')' => self.single(Tok::RParen),
            b'{' => self.single(Tok::LBrace),
            b'}' => self.single(Tok::RBrace),
            b'[' => self.single(Tok::LBracket),
            b']' => self.single(Tok::RBracket),
            b',' => self.single(Tok::Comma),
            b'+' => self.single(Tok::Plus),
            b'-' => self.single(Tok::Minus),
            b'*' => self.single(Tok::Star),
            b'/' => self.single(Tok::Slash),
            b'%' => self.single(Tok::Percent),
            b'=' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::EqEq
                } else {
                    Tok::Assign
                }
            }
            b'!' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::NotEq
                } else {
                    return Err(self.error(start, line, col, "expected `=` after `!`"));
                }
            }
            b'<' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::Le
                } else {
                    Tok::Lt
                }
            }
            b'>' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            b'"' => self.string_literal(start, line, col)?,
            b'0'..=b'9' => self.number(source, start, line, col)?,
            b'.' if matches!(self.peek2(), Some(b'0'..=b'9')) => {
                self.number(source, start, line, col)?
            }
            b if b.is_ascii_alphabetic() || b == b'_' => self.ident(source, start, line, col)?,
            _ => {
                let ch = source[start..].chars().next().unwrap_or('?');
                return Err(self.error(start, line, col, &format!("unexpected character {ch:?}")));
            }
        };
        Ok(Some(Token { tok, span: self.span_from(start, line, col) }))
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump();
        tok
    }

    fn error(&self, start: usize, line: u32, col: u32, message: &str) -> ParseError {
        ParseError::Syntax {
            message: message.to_string(),
            span: Span::new(start, self.pos.max(start + 1), line, col),
        }
    }

    fn string_literal(&mut self, start: usize, line: u32, col: u32) -> Result<Tok, ParseError> {
        self.bump(); // opening quote
        let mut value = String::new();
        loop {
            match self.bump() {
                Some(b'"') => break,
                Some(b'\\') => match self.bump() {
                    Some(b'"') => value.push('"'),
                    Some(b'\\') => value.push('\\'),
                    Some(b'n') => value.push('\n'),
                    Some(b't') => value.push('\t'),
                    Some(b'r') => value.push('\r'),
                    Some(b'u') => {
                        if self.bump() != Some(b'{') {
                            return Err(self.error(start, line, col, "expected `{` in \\u escape"));
                        }
                        let mut hex = String::new();
                        loop {
                            match self.bump() {
                                Some(b'}') => break,
                                Some(b) if b.is_ascii_hexdigit() && hex.len() < 6 => {
                                    hex.push(b as char)
                                }
                                _ => {
                                    return Err(self.error(
                                        start,
                                        line,
                                        col,
                                        "malformed \\u{...} escape",
                                    ))
                                }
                            }
                        }
                        let code = u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or_else(|| {
                                self.error(start, line, col, "invalid unicode escape")
                            })?;
                        value.push(code);
                    }
                    _ => return Err(self.error(start, line, col, "unknown escape sequence")),
                },
                Some(b) if b < 0x80 => value.push(b as char),
                Some(first) => {
                    // Re-decode the multi-byte scalar we just stepped into.
                    let char_start = self.pos - 1;
                    let width = utf8_width(first);
                    for _ in 1..width {
                        self.bump();
                    }
                    let text = std::str::from_utf8(&self.src[char_start..self.pos])
                        .map_err(|_| self.error(start, line, col, "invalid utf-8"))?;
                    value.push_str(text);
                }
                None => {
                    return Err(self.error(start, line, col, "unterminated string literal"));
                }
            }
        }
        Ok(Tok::Str(value))
    }

    fn number(
        &mut self,
        source: &str,
        start: usize,
        line: u32,
        col: u32,
    ) -> Result<Tok, ParseError> {
        let mut is_real = false;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.bump();
        }
        if self.peek() == Some(b'.') && matches!(self.peek2(), Some(b'0'..=b'9')) {
            is_real = true;
            self.bump();
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mut lookahead = self.pos + 1;
            if matches!(self.src.get(lookahead), Some(b'+') | Some(b'-')) {
                lookahead += 1;
            }
            if matches!(self.src.get(lookahead), Some(b'0'..=b'9')) {
                is_real = true;
                self.bump();
                if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                    self.bump();
                }
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.bump();
                }
            }
        }
        let text = &source[start..self.pos];
        if is_real {
            let value: f64 = text
                .parse()
                .map_err(|_| self.error(start, line, col, "malformed number literal"))?;
            if !value.is_finite() {
                return Err(self.error(start, line, col, "number literal overflows"));
            }
            Ok(Tok::Num(value))
        } else {
            let value: i64 = text
                .parse()
                .map_err(|_| self.error(start, line, col, "integer literal out of range"))?;
            Ok(Tok::Int(value))
        }
    }

    fn ident(
        &mut self,
        source: &str,
        start: usize,
        line: u32,
        col: u32,
    ) -> Result<Tok, ParseError> {
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
            self.bump();
        }
        let text = &source[start..self.pos];
        let tok = match text {
            "transform" => Tok::Transform,
            "fn" => Tok::Fn,
            "let" => Tok::Let,
            "for" => Tok::For,
            "in" => Tok::In,
            "while" => Tok::While,
            "return" => Tok::Return,
            "if" => Tok::If,
            "else" => Tok::Else,
            "true" => Tok::True,
            "false" => Tok::False,
            "and" => Tok::And,
            "or" => Tok::Or,
            "not" => Tok::Not,
            name if is_forbidden(name) => {
                return Err(ParseError::Forbidden {
                    message: format!(
                        "identifier {name:?} suggests I/O or environment access and is not allowed"
                    ),
                    span: self.span_from(start, line, col),
                })
            }
            name => Tok::Ident(name.to_string()),
        };
        Ok(tok)
    }
}

fn utf8_width(first: u8) -> usize {
    match first {
        0xC0..=0xDF => 2,
        0xE0..=0xEF => 3,
        _ => 4,
    }
}
