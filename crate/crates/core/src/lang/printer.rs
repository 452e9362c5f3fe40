//! Canonical pretty-printer. `parse(print(ast))` reproduces the tree, which
//! the round-trip property tests rely on.

use super::ast::*;

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for func in &program.functions {
        out.push_str(&format!("fn {}({}) ", func.name, func.params.join(", ")));
        print_block(&mut out, &func.body, 0);
        out.push_str("\n\n");
    }
    out.push_str("transform(x) ");
    print_block(&mut out, &program.body, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, block: &Block, level: usize) {
    out.push_str("{\n");
    for stmt in &block.stmts {
        print_stmt(out, stmt, level + 1);
    }
    indent(out, level);
    out.push('}');
}

fn print_stmt(out: &mut String, stmt: &Stmt, level: usize) {
    indent(out, level);
    match stmt {
        Stmt::Let { name, value, .. } => {
            out.push_str(&format!("let {name} = {}\n", expr_str(value)));
        }
        Stmt::Assign { name, value, .. } => {
            out.push_str(&format!("{name} = {}\n", expr_str(value)));
        }
        Stmt::Return { value, .. } => {
            out.push_str(&format!("return {}\n", expr_str(value)));
        }
        Stmt::For { var, iterable, body, .. } => {
            out.push_str(&format!("for {var} in {} ", expr_str(iterable)));
            print_block(out, body, level);
            out.push('\n');
        }
        Stmt::While { cond, body, .. } => {
            out.push_str(&format!("while {} ", expr_str(cond)));
            print_block(out, body, level);
            out.push('\n');
        }
        Stmt::If { .. } => {
            print_if(out, stmt, level);
            out.push('\n');
        }
    }
}

fn print_if(out: &mut String, stmt: &Stmt, level: usize) {
    let Stmt::If { cond, then_block, else_branch, .. } = stmt else {
        unreachable!("print_if called with a non-if statement");
    };
    out.push_str(&format!("if {} ", expr_str(cond)));
    print_block(out, then_block, level);
    if let Some(branch) = else_branch {
        out.push_str(" else ");
        match branch.as_ref() {
            ElseBranch::Else(block) => print_block(out, block, level),
            ElseBranch::ElseIf(nested) => print_if(out, nested, level),
        }
    }
}

pub fn expr_str(expr: &Expr) -> String {
    let mut out = String::new();
    print_expr(&mut out, expr, 0);
    out
}

/// Precedence level this expression provides to its surroundings. Mirrors
/// the parser's ladder: or=1, and=2, not=3, comparisons=4, additive=5,
/// multiplicative=6, unary minus=7, postfix/primary=8.
fn expr_prec(expr: &Expr) -> u8 {
    match expr {
        Expr::Binary { op, .. } => op.precedence(),
        Expr::Unary { op: UnaryOp::Not, .. } => 3,
        Expr::Unary { op: UnaryOp::Neg, .. } => 7,
        Expr::IfElse { .. } => 8,
        _ => 8,
    }
}

fn print_expr(out: &mut String, expr: &Expr, min_prec: u8) {
    let prec = expr_prec(expr);
    let wrap = prec < min_prec;
    if wrap {
        out.push('(');
    }
    match expr {
        Expr::Str { value, .. } => print_string_literal(out, value),
        Expr::Int { value, .. } => out.push_str(&value.to_string()),
        Expr::Num { value, .. } => {
            let text = format!("{value}");
            out.push_str(&text);
            // Keep reals lexically distinct from integers.
            if !text.contains(['.', 'e', 'E']) {
                out.push_str(".0");
            }
        }
        Expr::Bool { value, .. } => out.push_str(if *value { "true" } else { "false" }),
        Expr::Name { name, .. } => out.push_str(name),
        Expr::List { items, .. } => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, item, 0);
            }
            out.push(']');
        }
        Expr::Call { name, args, .. } => {
            out.push_str(name);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, arg, 0);
            }
            out.push(')');
        }
        Expr::Index { base, index, .. } => {
            print_expr(out, base, 8);
            out.push('[');
            print_expr(out, index, 0);
            out.push(']');
        }
        Expr::Unary { op: UnaryOp::Neg, operand, .. } => {
            out.push('-');
            print_expr(out, operand, 7);
        }
        Expr::Unary { op: UnaryOp::Not, operand, .. } => {
            out.push_str("not ");
            print_expr(out, operand, 3);
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            print_expr(out, lhs, prec);
            out.push_str(&format!(" {} ", op.symbol()));
            // Left-associative: parenthesize a right child at the same level.
            print_expr(out, rhs, prec + 1);
        }
        Expr::IfElse { cond, then_expr, else_expr, .. } => {
            out.push_str("if ");
            print_expr(out, cond, 0);
            out.push_str(" { ");
            print_expr(out, then_expr, 0);
            out.push_str(" } else { ");
            print_expr(out, else_expr, 0);
            out.push_str(" }");
        }
    }
    if wrap {
        out.push(')');
    }
}

fn print_string_literal(out: &mut String, value: &str) {
    out.push('"');
    for ch in value.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}
