//! Tree-walking evaluator with hard resource bounds.
//!
//! Every node execution costs at least one step, string construction is
//! charged by size and capped, and user calls are depth-limited, so any
//! program halts within the configured budget. There are no builtins for
//! files, clocks, randomness, or the environment; evaluation is a pure
//! function of (program, input).

use std::collections::HashMap;
use std::rc::Rc;

use super::ast::*;
use super::{EvalError, EvalLimits, Program};
use crate::table::parse_rational;

#[derive(Debug, Clone)]
pub enum Value {
    Str(Rc<str>),
    Int(i64),
    Num(f64),
    Bool(bool),
    List(Rc<Vec<Value>>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Int(_) => "integer",
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::List(_) => "list",
        }
    }

    fn str(s: impl Into<Rc<str>>) -> Value {
        Value::Str(s.into())
    }
}

enum Flow {
    Normal,
    Return(Value),
}

type Scopes = Vec<HashMap<String, Value>>;

pub fn run(program: &Program, input: &str, limits: &EvalLimits) -> Result<String, EvalError> {
    let mut interp = Interp { program, limits, steps: 0, depth: 0 };
    let mut scopes: Scopes = vec![HashMap::new()];
    scopes[0].insert("x".to_string(), Value::str(input));
    if let Some(numeric) = parse_rational(input.trim()) {
        scopes[0].insert("xn".to_string(), Value::Num(numeric));
    }
    match interp.block(&program.body, &mut scopes)? {
        Flow::Return(value) => interp.coerce_output(value),
        Flow::Normal => Err(fault("transform finished without returning a value")),
    }
}

fn fault(message: impl Into<String>) -> EvalError {
    EvalError::RuntimeFault { message: message.into() }
}

struct Interp<'p> {
    program: &'p Program,
    limits: &'p EvalLimits,
    steps: u64,
    depth: usize,
}

impl<'p> Interp<'p> {
    fn charge(&mut self, amount: u64) -> Result<(), EvalError> {
        self.steps = self.steps.saturating_add(amount);
        if self.steps > self.limits.max_steps {
            return Err(EvalError::StepBudgetExceeded { budget: self.limits.max_steps });
        }
        Ok(())
    }

    /// Strings are charged proportionally to the bytes they allocate.
    fn charge_str(&mut self, bytes: usize) -> Result<(), EvalError> {
        self.charge(1 + bytes as u64 / 64)
    }

    fn make_str(&mut self, s: String) -> Result<Value, EvalError> {
        if s.len() > self.limits.max_string_len {
            return Err(EvalError::OutputTooLong {
                len: s.len(),
                max: self.limits.max_string_len,
            });
        }
        self.charge_str(s.len())?;
        Ok(Value::str(s))
    }

    fn coerce_output(&mut self, value: Value) -> Result<String, EvalError> {
        match value {
            Value::Str(s) => Ok(s.to_string()),
            Value::Int(v) => Ok(v.to_string()),
            Value::Num(v) => Ok(format_f64(v)),
            Value::Bool(v) => Ok(v.to_string()),
            Value::List(_) => Err(fault("transform returned a list; return a scalar instead")),
        }
    }

    fn block(&mut self, block: &Block, scopes: &mut Scopes) -> Result<Flow, EvalError> {
        scopes.push(HashMap::new());
        let result = self.block_inner(block, scopes);
        scopes.pop();
        result
    }

    fn block_inner(&mut self, block: &Block, scopes: &mut Scopes) -> Result<Flow, EvalError> {
        for stmt in &block.stmts {
            match self.stmt(stmt, scopes)? {
                Flow::Normal => {}
                flow => return Ok(flow),
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, stmt: &Stmt, scopes: &mut Scopes) -> Result<Flow, EvalError> {
        self.charge(1)?;
        match stmt {
            Stmt::Let { name, value, .. } => {
                let value = self.expr(value, scopes)?;
                scopes.last_mut().expect("scope stack").insert(name.clone(), value);
                Ok(Flow::Normal)
            }
            Stmt::Assign { name, value, .. } => {
                let value = self.expr(value, scopes)?;
                for scope in scopes.iter_mut().rev() {
                    if let Some(slot) = scope.get_mut(name) {
                        *slot = value;
                        return Ok(Flow::Normal);
                    }
                }
                Err(fault(format!("assignment to unbound name {name:?}")))
            }
            Stmt::If { cond, then_block, else_branch, .. } => {
                if self.truth(cond, scopes)? {
                    self.block(then_block, scopes)
                } else {
                    match else_branch.as_deref() {
                        Some(ElseBranch::Else(block)) => self.block(block, scopes),
                        Some(ElseBranch::ElseIf(nested)) => self.stmt(nested, scopes),
                        None => Ok(Flow::Normal),
                    }
                }
            }
            Stmt::For { var, iterable, body, .. } => {
                let iterable = self.expr(iterable, scopes)?;
                let Value::List(items) = iterable else {
                    return Err(fault(format!(
                        "for-loop needs a list, got a {}",
                        iterable.kind()
                    )));
                };
                for item in items.iter() {
                    self.charge(1)?;
                    scopes.push(HashMap::from([(var.clone(), item.clone())]));
                    let flow = self.block_inner(body, scopes);
                    scopes.pop();
                    match flow? {
                        Flow::Normal => {}
                        flow => return Ok(flow),
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::While { cond, body, .. } => {
                loop {
                    self.charge(1)?;
                    if !self.truth(cond, scopes)? {
                        break;
                    }
                    match self.block(body, scopes)? {
                        Flow::Normal => {}
                        flow => return Ok(flow),
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::Return { value, .. } => {
                let value = self.expr(value, scopes)?;
                Ok(Flow::Return(value))
            }
        }
    }

    fn truth(&mut self, cond: &Expr, scopes: &mut Scopes) -> Result<bool, EvalError> {
        match self.expr(cond, scopes)? {
            Value::Bool(b) => Ok(b),
            other => Err(fault(format!("condition must be a boolean, got a {}", other.kind()))),
        }
    }

    fn expr(&mut self, expr: &Expr, scopes: &mut Scopes) -> Result<Value, EvalError> {
        self.charge(1)?;
        match expr {
            Expr::Str { value, .. } => Ok(Value::str(value.as_str())),
            Expr::Int { value, .. } => Ok(Value::Int(*value)),
            Expr::Num { value, .. } => Ok(Value::Num(*value)),
            Expr::Bool { value, .. } => Ok(Value::Bool(*value)),
            Expr::Name { name, .. } => {
                for scope in scopes.iter().rev() {
                    if let Some(value) = scope.get(name) {
                        return Ok(value.clone());
                    }
                }
                if name == "xn" {
                    Err(fault("xn is unavailable: the input is not numeric"))
                } else {
                    Err(fault(format!("unbound name {name:?}")))
                }
            }
            Expr::List { items, .. } => {
                let mut values = Vec::with_capacity(items.len());
                for item in items {
                    values.push(self.expr(item, scopes)?);
                }
                Ok(Value::List(Rc::new(values)))
            }
            Expr::Call { name, args, .. } => {
                let mut values = Vec::with_capacity(args.len());
                for arg in args {
                    values.push(self.expr(arg, scopes)?);
                }
                self.call(name, values)
            }
            Expr::Index { base, index, .. } => {
                let base = self.expr(base, scopes)?;
                let index = self.expr(index, scopes)?;
                self.index(base, index)
            }
            Expr::Unary { op, operand, .. } => {
                let value = self.expr(operand, scopes)?;
                match op {
                    UnaryOp::Neg => match value {
                        Value::Int(v) => {
                            v.checked_neg().map(Value::Int).ok_or_else(|| {
                                fault("integer overflow in negation")
                            })
                        }
                        Value::Num(v) => Ok(Value::Num(-v)),
                        other => Err(fault(format!("cannot negate a {}", other.kind()))),
                    },
                    UnaryOp::Not => match value {
                        Value::Bool(b) => Ok(Value::Bool(!b)),
                        other => Err(fault(format!(
                            "`not` needs a boolean, got a {}",
                            other.kind()
                        ))),
                    },
                }
            }
            Expr::Binary { op, lhs, rhs, .. } => self.binary(*op, lhs, rhs, scopes),
            Expr::IfElse { cond, then_expr, else_expr, .. } => {
                if self.truth(cond, scopes)? {
                    self.expr(then_expr, scopes)
                } else {
                    self.expr(else_expr, scopes)
                }
            }
        }
    }

    fn binary(
        &mut self,
        op: BinOp,
        lhs: &Expr,
        rhs: &Expr,
        scopes: &mut Scopes,
    ) -> Result<Value, EvalError> {
        // Short-circuit forms first.
        if matches!(op, BinOp::And | BinOp::Or) {
            let left = match self.expr(lhs, scopes)? {
                Value::Bool(b) => b,
                other => {
                    return Err(fault(format!(
                        "`{}` needs booleans, got a {}",
                        op.symbol(),
                        other.kind()
                    )))
                }
            };
            if (op == BinOp::And && !left) || (op == BinOp::Or && left) {
                return Ok(Value::Bool(left));
            }
            return match self.expr(rhs, scopes)? {
                Value::Bool(b) => Ok(Value::Bool(b)),
                other => Err(fault(format!(
                    "`{}` needs booleans, got a {}",
                    op.symbol(),
                    other.kind()
                ))),
            };
        }

        let left = self.expr(lhs, scopes)?;
        let right = self.expr(rhs, scopes)?;
        match op {
            BinOp::Add => match (&left, &right) {
                (Value::Str(a), Value::Str(b)) => {
                    let mut s = String::with_capacity(a.len() + b.len());
                    s.push_str(a);
                    s.push_str(b);
                    self.make_str(s)
                }
                (Value::Int(a), Value::Int(b)) => a
                    .checked_add(*b)
                    .map(Value::Int)
                    .ok_or_else(|| fault("integer overflow in addition")),
                _ => self.num_op(op, &left, &right, |a, b| a + b),
            },
            BinOp::Sub => match (&left, &right) {
                (Value::Int(a), Value::Int(b)) => a
                    .checked_sub(*b)
                    .map(Value::Int)
                    .ok_or_else(|| fault("integer overflow in subtraction")),
                _ => self.num_op(op, &left, &right, |a, b| a - b),
            },
            BinOp::Mul => match (&left, &right) {
                (Value::Int(a), Value::Int(b)) => a
                    .checked_mul(*b)
                    .map(Value::Int)
                    .ok_or_else(|| fault("integer overflow in multiplication")),
                _ => self.num_op(op, &left, &right, |a, b| a * b),
            },
            BinOp::Div => {
                if matches!(right, Value::Int(0)) || matches!(right, Value::Num(v) if v == 0.0) {
                    return Err(fault("division by zero"));
                }
                self.num_op(op, &left, &right, |a, b| a / b)
            }
            BinOp::Mod => match (&left, &right) {
                (Value::Int(_), Value::Int(0)) => Err(fault("modulo by zero")),
                (Value::Int(a), Value::Int(b)) => Ok(Value::Int(a.rem_euclid(*b))),
                _ => {
                    if matches!(right, Value::Num(v) if v == 0.0) {
                        return Err(fault("modulo by zero"));
                    }
                    self.num_op(op, &left, &right, f64::rem_euclid)
                }
            },
            BinOp::Eq => Ok(Value::Bool(values_equal(&left, &right))),
            BinOp::Ne => Ok(Value::Bool(!values_equal(&left, &right))),
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let ordering = match (&left, &right) {
                    (Value::Str(a), Value::Str(b)) => a.as_ref().cmp(b.as_ref()),
                    _ => {
                        let a = as_f64(&left).ok_or_else(|| cmp_fault(op, &left, &right))?;
                        let b = as_f64(&right).ok_or_else(|| cmp_fault(op, &left, &right))?;
                        a.partial_cmp(&b).ok_or_else(|| fault("cannot order these values"))?
                    }
                };
                Ok(Value::Bool(match op {
                    BinOp::Lt => ordering.is_lt(),
                    BinOp::Le => ordering.is_le(),
                    BinOp::Gt => ordering.is_gt(),
                    BinOp::Ge => ordering.is_ge(),
                    _ => unreachable!(),
                }))
            }
            BinOp::And | BinOp::Or => unreachable!("handled above"),
        }
    }

    fn num_op(
        &mut self,
        op: BinOp,
        left: &Value,
        right: &Value,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Value, EvalError> {
        let (Some(a), Some(b)) = (as_f64(left), as_f64(right)) else {
            return Err(fault(format!(
                "operator `{}` cannot combine a {} and a {}",
                op.symbol(),
                left.kind(),
                right.kind()
            )));
        };
        let result = f(a, b);
        if !result.is_finite() {
            return Err(fault("non-finite arithmetic result"));
        }
        Ok(Value::Num(result))
    }

    fn index(&mut self, base: Value, index: Value) -> Result<Value, EvalError> {
        let Value::Int(i) = index else {
            return Err(fault(format!("index must be an integer, got a {}", index.kind())));
        };
        match base {
            Value::List(items) => {
                let idx = usize::try_from(i)
                    .ok()
                    .filter(|&idx| idx < items.len())
                    .ok_or_else(|| {
                        fault(format!("index {i} out of range for list of length {}", items.len()))
                    })?;
                Ok(items[idx].clone())
            }
            Value::Str(s) => {
                let ch = usize::try_from(i).ok().and_then(|idx| s.chars().nth(idx));
                match ch {
                    Some(ch) => self.make_str(ch.to_string()),
                    None => Err(fault(format!("index {i} out of range for string"))),
                }
            }
            other => Err(fault(format!("cannot index a {}", other.kind()))),
        }
    }

    fn call(&mut self, name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
        if let Some(func) = self.program.functions.iter().find(|f| f.name == name) {
            if args.len() != func.params.len() {
                return Err(fault(format!(
                    "{name} expects {} arguments, got {}",
                    func.params.len(),
                    args.len()
                )));
            }
            if self.depth + 1 > self.limits.max_call_depth {
                return Err(fault(format!(
                    "call depth limit of {} exceeded",
                    self.limits.max_call_depth
                )));
            }
            self.depth += 1;
            let mut scopes: Scopes =
                vec![func.params.iter().cloned().zip(args).collect::<HashMap<_, _>>()];
            let result = self.block_inner(&func.body, &mut scopes);
            self.depth -= 1;
            return match result? {
                Flow::Return(value) => Ok(value),
                Flow::Normal => {
                    Err(fault(format!("function {name:?} finished without returning")))
                }
            };
        }
        self.builtin(name, args)
    }

    fn builtin(&mut self, name: &str, mut args: Vec<Value>) -> Result<Value, EvalError> {
        let argc = args.len();
        let arity = super::builtins::lookup(name)
            .ok_or_else(|| fault(format!("unknown function {name:?}")))?
            .arity;
        if argc != arity {
            return Err(fault(format!("{name} expects {arity} arguments, got {argc}")));
        }
        let mut take = |i: usize| std::mem::replace(&mut args[i], Value::Bool(false));

        match name {
            "split" => {
                let (s, sep) = (take(0), take(1));
                let s = want_str(&s, "split")?;
                let sep = want_str(&sep, "split")?;
                if sep.is_empty() {
                    return Err(fault("split separator must be non-empty; use to_chars"));
                }
                let mut parts = Vec::new();
                for part in s.split(sep) {
                    self.charge_str(part.len())?;
                    parts.push(Value::str(part));
                }
                Ok(Value::List(Rc::new(parts)))
            }
            "join" => {
                let (list, sep) = (take(0), take(1));
                let Value::List(items) = &list else {
                    return Err(fault(format!("join needs a list, got a {}", list.kind())));
                };
                let sep = want_str(&sep, "join")?;
                let mut out = String::new();
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(sep);
                    }
                    match item {
                        Value::Str(s) => out.push_str(s),
                        Value::Int(v) => out.push_str(&v.to_string()),
                        Value::Num(v) => out.push_str(&format_f64(*v)),
                        Value::Bool(v) => out.push_str(if *v { "true" } else { "false" }),
                        Value::List(_) => {
                            return Err(fault("join cannot flatten a nested list"))
                        }
                    }
                    if out.len() > self.limits.max_string_len {
                        return Err(EvalError::OutputTooLong {
                            len: out.len(),
                            max: self.limits.max_string_len,
                        });
                    }
                }
                self.make_str(out)
            }
            "substring" => {
                let (s, start, end) = (take(0), take(1), take(2));
                let s = want_str(&s, "substring")?;
                let chars: Vec<char> = s.chars().collect();
                let lo = clamp_index(want_int(&start, "substring")?, chars.len());
                let hi = clamp_index(want_int(&end, "substring")?, chars.len()).max(lo);
                self.make_str(chars[lo..hi].iter().collect())
            }
            "char_at" => {
                let (s, i) = (take(0), take(1));
                let s = want_str(&s, "char_at")?;
                let i = want_int(&i, "char_at")?;
                let ch = usize::try_from(i).ok().and_then(|idx| s.chars().nth(idx));
                match ch {
                    Some(ch) => self.make_str(ch.to_string()),
                    None => Err(fault(format!("char_at index {i} out of range"))),
                }
            }
            "index_of" => {
                let (s, needle) = (take(0), take(1));
                let s = want_str(&s, "index_of")?;
                let needle = want_str(&needle, "index_of")?;
                self.charge_str(s.len())?;
                match s.find(needle) {
                    Some(byte_pos) => Ok(Value::Int(s[..byte_pos].chars().count() as i64)),
                    None => Ok(Value::Int(-1)),
                }
            }
            "replace" => {
                let (s, from, to) = (take(0), take(1), take(2));
                let s = want_str(&s, "replace")?;
                let from = want_str(&from, "replace")?;
                let to = want_str(&to, "replace")?;
                if from.is_empty() {
                    return Err(fault("replace search pattern must be non-empty"));
                }
                self.make_str(s.replace(from, to))
            }
            "lower" => {
                let s = take(0);
                let s = want_str(&s, "lower")?;
                self.make_str(s.to_lowercase())
            }
            "upper" => {
                let s = take(0);
                let s = want_str(&s, "upper")?;
                self.make_str(s.to_uppercase())
            }
            "trim" => {
                let s = take(0);
                let s = want_str(&s, "trim")?;
                self.make_str(s.trim().to_string())
            }
            "pad_left" | "pad_right" => {
                let (s, width, fill) = (take(0), take(1), take(2));
                let s = want_str(&s, name)?;
                let width = want_int(&width, name)?;
                let fill = want_str(&fill, name)?;
                if fill.chars().count() != 1 {
                    return Err(fault(format!("{name} fill must be a single character")));
                }
                let width = usize::try_from(width)
                    .ok()
                    .filter(|&w| w <= self.limits.max_string_len)
                    .ok_or_else(|| fault(format!("{name} width out of range")))?;
                let len = s.chars().count();
                if len >= width {
                    return self.make_str(s.to_string());
                }
                let fill_ch = fill.chars().next().unwrap();
                let padding: String = std::iter::repeat_n(fill_ch, width - len).collect();
                let padded = if name == "pad_left" {
                    format!("{padding}{s}")
                } else {
                    format!("{s}{padding}")
                };
                self.make_str(padded)
            }
            "length" => {
                let v = take(0);
                match &v {
                    Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
                    Value::List(items) => Ok(Value::Int(items.len() as i64)),
                    other => Err(fault(format!("length needs a string or list, got a {}", other.kind()))),
                }
            }
            "starts_with" => {
                let (s, prefix) = (take(0), take(1));
                Ok(Value::Bool(want_str(&s, name)?.starts_with(want_str(&prefix, name)?)))
            }
            "ends_with" => {
                let (s, suffix) = (take(0), take(1));
                Ok(Value::Bool(want_str(&s, name)?.ends_with(want_str(&suffix, name)?)))
            }
            "reverse" => {
                let s = take(0);
                let s = want_str(&s, "reverse")?;
                self.make_str(s.chars().rev().collect())
            }
            "to_chars" => {
                let s = take(0);
                let s = want_str(&s, "to_chars")?;
                let mut chars = Vec::new();
                for ch in s.chars() {
                    self.charge(1)?;
                    chars.push(Value::str(ch.to_string()));
                }
                Ok(Value::List(Rc::new(chars)))
            }
            "from_codepoint" => {
                let v = take(0);
                let code = want_int(&v, "from_codepoint")?;
                let ch = u32::try_from(code).ok().and_then(char::from_u32).ok_or_else(|| {
                    fault(format!("{code} is not a valid unicode scalar value"))
                })?;
                self.make_str(ch.to_string())
            }
            "to_codepoint" => {
                let v = take(0);
                let s = want_str(&v, "to_codepoint")?;
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(ch), None) => Ok(Value::Int(ch as i64)),
                    _ => Err(fault("to_codepoint needs exactly one character")),
                }
            }
            "slice" => {
                let (list, start, end) = (take(0), take(1), take(2));
                let Value::List(items) = &list else {
                    return Err(fault(format!("slice needs a list, got a {}", list.kind())));
                };
                let lo = clamp_index(want_int(&start, "slice")?, items.len());
                let hi = clamp_index(want_int(&end, "slice")?, items.len()).max(lo);
                self.charge((hi - lo) as u64)?;
                Ok(Value::List(Rc::new(items[lo..hi].to_vec())))
            }
            "range" => {
                let (start, end) = (take(0), take(1));
                let start = want_int(&start, "range")?;
                let end = want_int(&end, "range")?;
                let mut items = Vec::new();
                let mut i = start;
                while i < end {
                    self.charge(1)?;
                    items.push(Value::Int(i));
                    i += 1;
                }
                Ok(Value::List(Rc::new(items)))
            }
            "pow" => {
                let (a, b) = (take(0), take(1));
                let base = want_num(&a, "pow")?;
                let exponent = want_num(&b, "pow")?;
                finite(base.powf(exponent), "pow result is not finite")
            }
            "exp" => {
                let v = take(0);
                let a = want_num(&v, "exp")?;
                finite(a.exp(), "exp overflows")
            }
            "ln" => {
                let v = take(0);
                let a = want_num(&v, "ln")?;
                if a <= 0.0 {
                    return Err(fault("ln needs a positive argument"));
                }
                finite(a.ln(), "ln out of range")
            }
            "floor" => int_from_f64(want_num(&take(0), "floor")?.floor(), "floor"),
            "ceil" => int_from_f64(want_num(&take(0), "ceil")?.ceil(), "ceil"),
            "abs" => {
                let v = take(0);
                match v {
                    Value::Int(i) => i
                        .checked_abs()
                        .map(Value::Int)
                        .ok_or_else(|| fault("integer overflow in abs")),
                    Value::Num(n) => Ok(Value::Num(n.abs())),
                    other => Err(fault(format!("abs needs a number, got a {}", other.kind()))),
                }
            }
            "round" => {
                let (v, d) = (take(0), take(1));
                let value = want_num(&v, "round")?;
                let decimals = want_decimals(&d)?;
                finite(round_half_away(value, decimals), "round out of range")
            }
            "parse_num" => {
                let v = take(0);
                let s = want_str(&v, "parse_num")?;
                match parse_rational(s.trim()) {
                    Some(value) => Ok(Value::Num(value)),
                    None => Err(fault(format!("parse_num cannot parse {s:?}"))),
                }
            }
            "format_num" => {
                let (v, d) = (take(0), take(1));
                let value = want_num(&v, "format_num")?;
                let decimals = want_decimals(&d)?;
                let mut rounded = round_half_away(value, decimals);
                if rounded == 0.0 {
                    rounded = 0.0; // normalize -0.0
                }
                self.make_str(format!("{:.*}", decimals as usize, rounded))
            }
            "parse_int" => {
                let (v, b) = (take(0), take(1));
                let s = want_str(&v, "parse_int")?;
                let base = want_int(&b, "parse_int")?;
                if !(2..=36).contains(&base) {
                    return Err(fault("parse_int base must be between 2 and 36"));
                }
                i64::from_str_radix(s.trim(), base as u32)
                    .map(Value::Int)
                    .map_err(|_| fault(format!("parse_int cannot parse {s:?} in base {base}")))
            }
            "format_int" => {
                let (v, b) = (take(0), take(1));
                let value = want_int(&v, "format_int")?;
                let base = want_int(&b, "format_int")?;
                if !(2..=36).contains(&base) {
                    return Err(fault("format_int base must be between 2 and 36"));
                }
                self.make_str(format_radix(value, base as u32))
            }
            other => Err(fault(format!("unknown function {other:?}"))),
        }
    }
}

fn cmp_fault(op: BinOp, left: &Value, right: &Value) -> EvalError {
    fault(format!(
        "operator `{}` cannot order a {} and a {}",
        op.symbol(),
        left.kind(),
        right.kind()
    ))
}

/// Renders an integer in the given base with lowercase digits.
fn format_radix(value: i64, base: u32) -> String {
    if value == 0 {
        return "0".to_string();
    }
    let negative = value < 0;
    let mut magnitude = (value as i128).unsigned_abs();
    let mut digits = Vec::new();
    while magnitude > 0 {
        let digit = (magnitude % base as u128) as u32;
        digits.push(char::from_digit(digit, base).expect("digit within base"));
        magnitude /= base as u128;
    }
    if negative {
        digits.push('-');
    }
    digits.iter().rev().collect()
}

fn finite(value: f64, message: &str) -> Result<Value, EvalError> {
    if value.is_finite() {
        Ok(Value::Num(value))
    } else {
        Err(fault(message))
    }
}

fn int_from_f64(value: f64, what: &str) -> Result<Value, EvalError> {
    if value.is_finite() && value >= i64::MIN as f64 && value <= i64::MAX as f64 {
        Ok(Value::Int(value as i64))
    } else {
        Err(fault(format!("{what} result does not fit an integer")))
    }
}

/// Rounds half away from zero at `decimals` fractional digits.
pub fn round_half_away(value: f64, decimals: i64) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = value.abs() * scale;
    let rounded = (scaled + 0.5).floor() / scale;
    if value < 0.0 {
        -rounded
    } else {
        rounded
    }
}

/// Shortest-form rendering; integral reals keep no fraction ("2" not "2.0").
pub fn format_f64(value: f64) -> String {
    format!("{value}")
}

fn want_str<'v>(value: &'v Value, what: &str) -> Result<&'v str, EvalError> {
    match value {
        Value::Str(s) => Ok(s),
        other => Err(fault(format!("{what} needs a string, got a {}", other.kind()))),
    }
}

fn want_int(value: &Value, what: &str) -> Result<i64, EvalError> {
    match value {
        Value::Int(i) => Ok(*i),
        other => Err(fault(format!("{what} needs an integer, got a {}", other.kind()))),
    }
}

fn want_num(value: &Value, what: &str) -> Result<f64, EvalError> {
    as_f64(value).ok_or_else(|| fault(format!("{what} needs a number, got a {}", value.kind())))
}

fn want_decimals(value: &Value) -> Result<i64, EvalError> {
    let d = want_int(value, "decimal count")?;
    if (0..=12).contains(&d) {
        Ok(d)
    } else {
        Err(fault("decimal count must be between 0 and 12"))
    }
}

fn as_f64(value: &Value) -> Option<f64> {
    match value {
        Value::Int(i) => Some(*i as f64),
        Value::Num(n) => Some(*n),
        _ => None,
    }
}

fn clamp_index(i: i64, len: usize) -> usize {
    if i < 0 {
        0
    } else {
        (i as usize).min(len)
    }
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::List(x), Value::List(y)) => {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(a, b)| values_equal(a, b))
        }
        _ => match (as_f64(a), as_f64(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}
