//! Recursive-descent parser.
//!
//! Accepts either a full program (`fn` definitions followed by a
//! `transform(x)` block) or, as a convenience for model output and quick
//! experiments, a bare expression, which is wrapped into
//! `transform(x) { return <expr> }`.

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::ParseError;

pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser { tokens, pos: 0, src_len: source.len() };

    if matches!(parser.peek(), Some(Tok::Fn) | Some(Tok::Transform)) {
        let program = parser.program()?;
        parser.expect_eof()?;
        return Ok(program);
    }

    // Bare-expression form.
    let expr = parser.expr()?;
    parser.expect_eof()?;
    let span = expr.span();
    let body = Block { stmts: vec![Stmt::Return { value: expr, span }], span };
    Ok(Program { functions: Vec::new(), body })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    src_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.tokens.get(self.pos + 1).map(|t| &t.tok)
    }

    fn here(&self) -> Span {
        self.tokens.get(self.pos).map(|t| t.span).unwrap_or(Span::new(
            self.src_len,
            self.src_len,
            0,
            0,
        ))
    }

    fn bump(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.pos).cloned();
        if token.is_some() {
            self.pos += 1;
        }
        token
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { message: message.into(), span: self.here() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Span, ParseError> {
        match self.peek() {
            Some(t) if *t == tok => Ok(self.bump().unwrap().span),
            Some(t) => Err(self.error(format!("expected {what}, found {}", t.describe()))),
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error(format!("unexpected {} after program end", t.describe()))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let token = self.bump().unwrap();
                match token.tok {
                    Tok::Ident(name) => Ok((name, token.span)),
                    _ => unreachable!(),
                }
            }
            Some(t) => Err(self.error(format!("expected {what}, found {}", t.describe()))),
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut functions = Vec::new();
        while matches!(self.peek(), Some(Tok::Fn)) {
            functions.push(self.funcdef()?);
        }
        self.expect(Tok::Transform, "`transform`")?;
        self.expect(Tok::LParen, "`(`")?;
        let (param, span) = self.ident("parameter name")?;
        if param != "x" {
            return Err(ParseError::Syntax {
                message: format!("transform takes the single parameter `x`, found {param:?}"),
                span,
            });
        }
        self.expect(Tok::RParen, "`)`")?;
        let body = self.block()?;
        Ok(Program { functions, body })
    }

    fn funcdef(&mut self) -> Result<FuncDef, ParseError> {
        let start = self.expect(Tok::Fn, "`fn`")?;
        let (name, _) = self.ident("function name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !matches!(self.peek(), Some(Tok::RParen)) {
            loop {
                let (param, span) = self.ident("parameter name")?;
                if params.contains(&param) {
                    return Err(ParseError::Syntax {
                        message: format!("duplicate parameter {param:?}"),
                        span,
                    });
                }
                params.push(param);
                if matches!(self.peek(), Some(Tok::Comma)) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let body = self.block()?;
        let span = start.merge(body.span);
        Ok(FuncDef { name, params, body, span })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        let start = self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !matches!(self.peek(), Some(Tok::RBrace)) {
            if self.peek().is_none() {
                return Err(self.error("unterminated block, expected `}`"));
            }
            stmts.push(self.stmt()?);
        }
        let end = self.expect(Tok::RBrace, "`}`")?;
        Ok(Block { stmts, span: start.merge(end) })
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        match self.peek() {
            Some(Tok::Let) => {
                let start = self.bump().unwrap().span;
                let (name, _) = self.ident("binding name")?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                let span = start.merge(value.span());
                Ok(Stmt::Let { name, value, span })
            }
            Some(Tok::Return) => {
                let start = self.bump().unwrap().span;
                let value = self.expr()?;
                let span = start.merge(value.span());
                Ok(Stmt::Return { value, span })
            }
            Some(Tok::For) => {
                let start = self.bump().unwrap().span;
                let (var, _) = self.ident("loop variable")?;
                self.expect(Tok::In, "`in`")?;
                let iterable = self.expr()?;
                let body = self.block()?;
                let span = start.merge(body.span);
                Ok(Stmt::For { var, iterable, body, span })
            }
            Some(Tok::While) => {
                let start = self.bump().unwrap().span;
                let cond = self.expr()?;
                let body = self.block()?;
                let span = start.merge(body.span);
                Ok(Stmt::While { cond, body, span })
            }
            Some(Tok::If) => self.if_stmt(),
            Some(Tok::Ident(_)) if matches!(self.peek2(), Some(Tok::Assign)) => {
                let (name, start) = self.ident("name")?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                let span = start.merge(value.span());
                Ok(Stmt::Assign { name, value, span })
            }
            Some(t) => Err(self.error(format!(
                "expected a statement (let, assignment, if, for, while, return), found {}",
                t.describe()
            ))),
            None => Err(self.error("expected a statement, found end of input")),
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.expect(Tok::If, "`if`")?;
        let cond = self.expr()?;
        let then_block = self.block()?;
        let mut span = start.merge(then_block.span);
        let else_branch = if matches!(self.peek(), Some(Tok::Else)) {
            self.bump();
            if matches!(self.peek(), Some(Tok::If)) {
                let nested = self.if_stmt()?;
                span = span.merge(nested.span());
                Some(Box::new(ElseBranch::ElseIf(nested)))
            } else {
                let block = self.block()?;
                span = span.merge(block.span);
                Some(Box::new(ElseBranch::Else(block)))
            }
        } else {
            None
        };
        Ok(Stmt::If { cond, then_block, else_branch, span })
    }

    pub(super) fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary_expr(0)
    }

    fn binary_expr(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        // `not` sits between `and` and the comparisons, like Python.
        let mut lhs = if min_prec <= 3 && matches!(self.peek(), Some(Tok::Not)) {
            let start = self.bump().unwrap().span;
            let operand = self.binary_expr(3)?;
            let span = start.merge(operand.span());
            Expr::Unary { op: UnaryOp::Not, operand: Box::new(operand), span }
        } else {
            self.unary_expr()?
        };
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            // Left-associative: the right operand needs strictly higher binding.
            let rhs = self.binary_expr(prec + 1)?;
            let span = lhs.span().merge(rhs.span());
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match self.peek()? {
            Tok::Or => BinOp::Or,
            Tok::And => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Mod,
            _ => return None,
        })
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                let start = self.bump().unwrap().span;
                let operand = self.unary_expr()?;
                let span = start.merge(operand.span());
                Ok(Expr::Unary { op: UnaryOp::Neg, operand: Box::new(operand), span })
            }
            _ => self.postfix_expr(),
        }
    }

    fn postfix_expr(&mut self) -> Result<Expr, ParseError> {
        let mut expr = self.primary_expr()?;
        while matches!(self.peek(), Some(Tok::LBracket)) {
            self.bump();
            let index = self.expr()?;
            let end = self.expect(Tok::RBracket, "`]`")?;
            let span = expr.span().merge(end);
            expr = Expr::Index { base: Box::new(expr), index: Box::new(index), span };
        }
        Ok(expr)
    }

    fn primary_expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Int(_)) => {
                let token = self.bump().unwrap();
                match token.tok {
                    Tok::Int(value) => Ok(Expr::Int { value, span: token.span }),
                    _ => unreachable!(),
                }
            }
            Some(Tok::Num(_)) => {
                let token = self.bump().unwrap();
                match token.tok {
                    Tok::Num(value) => Ok(Expr::Num { value, span: token.span }),
                    _ => unreachable!(),
                }
            }
            Some(Tok::Str(_)) => {
                let token = self.bump().unwrap();
                match token.tok {
                    Tok::Str(value) => Ok(Expr::Str { value, span: token.span }),
                    _ => unreachable!(),
                }
            }
            Some(Tok::True) => {
                let span = self.bump().unwrap().span;
                Ok(Expr::Bool { value: true, span })
            }
            Some(Tok::False) => {
                let span = self.bump().unwrap().span;
                Ok(Expr::Bool { value: false, span })
            }
            Some(Tok::LParen) => {
                self.bump();
                let expr = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(expr)
            }
            Some(Tok::LBracket) => {
                let start = self.bump().unwrap().span;
                let mut items = Vec::new();
                if !matches!(self.peek(), Some(Tok::RBracket)) {
                    loop {
                        items.push(self.expr()?);
                        if matches!(self.peek(), Some(Tok::Comma)) {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                let end = self.expect(Tok::RBracket, "`]`")?;
                Ok(Expr::List { items, span: start.merge(end) })
            }
            Some(Tok::If) => {
                let start = self.bump().unwrap().span;
                let cond = self.expr()?;
                self.expect(Tok::LBrace, "`{`")?;
                let then_expr = self.expr()?;
                self.expect(Tok::RBrace, "`}`")?;
                self.expect(Tok::Else, "`else`")?;
                let else_expr = if matches!(self.peek(), Some(Tok::If)) {
                    // `else if` chain in expression position.
                    self.primary_expr()?
                } else {
                    self.expect(Tok::LBrace, "`{`")?;
                    let expr = self.expr()?;
                    self.expect(Tok::RBrace, "`}`")?;
                    expr
                };
                let span = start.merge(else_expr.span());
                Ok(Expr::IfElse {
                    cond: Box::new(cond),
                    then_expr: Box::new(then_expr),
                    else_expr: Box::new(else_expr),
                    span,
                })
            }
            Some(Tok::Ident(_)) => {
                let (name, span) = self.ident("name")?;
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.bump();
                    let mut args = Vec::new();
                    if !matches!(self.peek(), Some(Tok::RParen)) {
                        loop {
                            args.push(self.expr()?);
                            if matches!(self.peek(), Some(Tok::Comma)) {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    let end = self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::Call { name, args, span: span.merge(end) })
                } else {
                    Ok(Expr::Name { name, span })
                }
            }
            Some(t) => Err(self.error(format!("expected an expression, found {}", t.describe()))),
            None => Err(self.error("expected an expression, found end of input")),
        }
    }
}
