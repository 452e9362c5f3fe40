//! Name resolution and static checks.
//!
//! `resolve` guarantees every name refers to a binding, builtin, or defined
//! function; it backs both `parse` (which rejects programs with resolution
//! errors) and `check` (which additionally reports arity mismatches,
//! literal type conflicts, shadowing, and unreachable code).

use std::collections::HashSet;

use super::ast::*;
use super::builtins;
use super::{Diagnostic, Severity};

pub fn resolve(program: &Program) -> Vec<Diagnostic> {
    let mut ctx = Checker::new(program);
    ctx.resolve_only = true;
    ctx.run(program);
    ctx.diagnostics
}

pub fn check_program(program: &Program) -> Vec<Diagnostic> {
    let mut ctx = Checker::new(program);
    ctx.run(program);
    ctx.diagnostics
}

struct Checker<'p> {
    functions: Vec<&'p FuncDef>,
    scopes: Vec<HashSet<String>>,
    diagnostics: Vec<Diagnostic>,
    resolve_only: bool,
}

impl<'p> Checker<'p> {
    fn new(program: &'p Program) -> Self {
        Checker {
            functions: program.functions.iter().collect(),
            scopes: Vec::new(),
            diagnostics: Vec::new(),
            resolve_only: false,
        }
    }

    fn run(&mut self, program: &'p Program) {
        let mut seen = HashSet::new();
        for func in &program.functions {
            if builtins::lookup(&func.name).is_some() {
                self.error(func.span, format!("function {:?} shadows a builtin", func.name));
            }
            if !seen.insert(func.name.clone()) {
                self.error(func.span, format!("duplicate function {:?}", func.name));
            }
        }
        for func in &program.functions {
            self.scopes = vec![func.params.iter().cloned().collect()];
            self.block(&func.body);
        }
        // The transform body sees the input bindings.
        self.scopes = vec![HashSet::from(["x".to_string(), "xn".to_string()])];
        self.block(&program.body);

        if !self.resolve_only && !contains_return(&program.body) {
            self.warn(program.body.span, "transform never returns a value".to_string());
        }
    }

    fn error(&mut self, span: Span, message: String) {
        self.diagnostics.push(Diagnostic { severity: Severity::Error, message, span });
    }

    fn warn(&mut self, span: Span, message: String) {
        if !self.resolve_only {
            self.diagnostics.push(Diagnostic { severity: Severity::Warning, message, span });
        }
    }

    fn is_bound(&self, name: &str) -> bool {
        self.scopes.iter().any(|scope| scope.contains(name))
    }

    fn declare(&mut self, name: &str, span: Span) {
        if self.is_bound(name) {
            self.warn(span, format!("binding {name:?} shadows an earlier binding"));
        }
        if let Some(scope) = self.scopes.last_mut() {
            scope.insert(name.to_string());
        }
    }

    fn block(&mut self, block: &Block) {
        self.scopes.push(HashSet::new());
        let mut returned: Option<Span> = None;
        for stmt in &block.stmts {
            if let Some(at) = returned.take() {
                self.warn(
                    stmt.span(),
                    format!("unreachable code after return at line {}", at.line),
                );
            }
            self.stmt(stmt);
            if let Stmt::Return { span, .. } = stmt {
                returned = Some(*span);
            }
        }
        self.scopes.pop();
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::Let { name, value, span } => {
                self.expr(value);
                if builtins::lookup(name).is_some()
                    || self.functions.iter().any(|f| &f.name == name)
                {
                    self.error(*span, format!("cannot bind reserved name {name:?}"));
                } else {
                    self.declare(name, *span);
                }
            }
            Stmt::Assign { name, value, span } => {
                self.expr(value);
                if !self.is_bound(name) {
                    self.error(
                        *span,
                        format!("assignment to undeclared name {name:?}; use `let` first"),
                    );
                }
            }
            Stmt::If { cond, then_block, else_branch, .. } => {
                self.expr(cond);
                self.block(then_block);
                match else_branch.as_deref() {
                    Some(ElseBranch::Else(block)) => self.block(block),
                    Some(ElseBranch::ElseIf(nested)) => self.stmt(nested),
                    None => {}
                }
            }
            Stmt::For { var, iterable, body, span } => {
                self.expr(iterable);
                self.scopes.push(HashSet::new());
                self.declare(var, *span);
                self.block(body);
                self.scopes.pop();
            }
            Stmt::While { cond, body, .. } => {
                self.expr(cond);
                self.block(body);
            }
            Stmt::Return { value, .. } => self.expr(value),
        }
    }

    fn expr(&mut self, expr: &Expr) {
        match expr {
            Expr::Str { .. } | Expr::Int { .. } | Expr::Num { .. } | Expr::Bool { .. } => {}
            Expr::Name { name, span } => {
                if !self.is_bound(name) {
                    let message = if name == "x" || name == "xn" {
                        format!("{name:?} is only available inside the transform body")
                    } else if builtins::lookup(name).is_some()
                        || self.functions.iter().any(|f| &f.name == name)
                    {
                        format!("function {name:?} used as a value")
                    } else {
                        format!("unknown name {name:?}")
                    };
                    self.error(*span, message);
                }
            }
            Expr::List { items, .. } => items.iter().for_each(|e| self.expr(e)),
            Expr::Call { name, args, span } => {
                args.iter().for_each(|e| self.expr(e));
                let expected = if let Some(builtin) = builtins::lookup(name) {
                    Some(builtin.arity)
                } else if let Some(func) = self.functions.iter().find(|f| &f.name == name) {
                    Some(func.params.len())
                } else {
                    self.error(*span, format!("unknown function {name:?}"));
                    None
                };
                if !self.resolve_only {
                    if let Some(expected) = expected {
                        if args.len() != expected {
                            self.error(
                                *span,
                                format!(
                                    "{name} expects {expected} argument{}, got {}",
                                    if expected == 1 { "" } else { "s" },
                                    args.len()
                                ),
                            );
                        }
                    }
                }
            }
            Expr::Index { base, index, .. } => {
                self.expr(base);
                self.expr(index);
            }
            Expr::Unary { op, operand, span } => {
                self.expr(operand);
                if !self.resolve_only {
                    match (op, literal_kind(operand)) {
                        (UnaryOp::Neg, Some(kind)) if kind != LitKind::Numeric => {
                            self.error(*span, format!("cannot negate a {} literal", kind.name()));
                        }
                        (UnaryOp::Not, Some(kind)) if kind != LitKind::Bool => {
                            self.error(
                                *span,
                                format!("`not` needs a boolean, got a {} literal", kind.name()),
                            );
                        }
                        _ => {}
                    }
                }
            }
            Expr::Binary { op, lhs, rhs, span } => {
                self.expr(lhs);
                self.expr(rhs);
                if !self.resolve_only {
                    self.literal_types(*op, lhs, rhs, *span);
                }
            }
            Expr::IfElse { cond, then_expr, else_expr, .. } => {
                self.expr(cond);
                self.expr(then_expr);
                self.expr(else_expr);
            }
        }
    }

    /// Flags operations whose literal operands can never be coherent, e.g.
    /// `1 - "a"`. Anything involving non-literals is left to the evaluator.
    fn literal_types(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr, span: Span) {
        let (Some(left), Some(right)) = (literal_kind(lhs), literal_kind(rhs)) else {
            return;
        };
        let ok = match op {
            BinOp::Add => {
                (left == LitKind::Numeric && right == LitKind::Numeric)
                    || (left == LitKind::Str && right == LitKind::Str)
            }
            BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                left == LitKind::Numeric && right == LitKind::Numeric
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => left == right && left != LitKind::Bool,
            BinOp::Eq | BinOp::Ne => true,
            BinOp::And | BinOp::Or => left == LitKind::Bool && right == LitKind::Bool,
        };
        if !ok {
            self.error(
                span,
                format!(
                    "operator `{}` cannot combine {} and {} literals",
                    op.symbol(),
                    left.name(),
                    right.name()
                ),
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LitKind {
    Str,
    Numeric,
    Bool,
}

impl LitKind {
    fn name(self) -> &'static str {
        match self {
            LitKind::Str => "string",
            LitKind::Numeric => "numeric",
            LitKind::Bool => "boolean",
        }
    }
}

fn literal_kind(expr: &Expr) -> Option<LitKind> {
    match expr {
        Expr::Str { .. } => Some(LitKind::Str),
        Expr::Int { .. } | Expr::Num { .. } => Some(LitKind::Numeric),
        Expr::Bool { .. } => Some(LitKind::Bool),
        _ => None,
    }
}

fn contains_return(block: &Block) -> bool {
    block.stmts.iter().any(stmt_returns)
}

fn stmt_returns(stmt: &Stmt) -> bool {
    match stmt {
        Stmt::Return { .. } => true,
        Stmt::If { then_block, else_branch, .. } => {
            contains_return(then_block)
                || match else_branch.as_deref() {
                    Some(ElseBranch::Else(block)) => contains_return(block),
                    Some(ElseBranch::ElseIf(nested)) => stmt_returns(nested),
                    None => false,
                }
        }
        Stmt::For { body, .. } | Stmt::While { body, .. } => contains_return(body),
        _ => false,
    }
}
