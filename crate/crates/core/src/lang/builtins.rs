//! Builtin function registry, shared by the static checker and evaluator.

pub struct Builtin {
    pub name: &'static str,
    pub arity: usize,
}

/// Every callable builtin. Operators (`+ - * / %`, comparisons, `and`,
/// `or`, `not`, indexing) are part of the grammar rather than this table.
pub const BUILTINS: &[Builtin] = &[
    // string
    Builtin { name: "split", arity: 2 },
    Builtin { name: "join", arity: 2 },
    Builtin { name: "substring", arity: 3 },
    Builtin { name: "char_at", arity: 2 },
    Builtin { name: "index_of", arity: 2 },
    Builtin { name: "replace", arity: 3 },
    Builtin { name: "lower", arity: 1 },
    Builtin { name: "upper", arity: 1 },
    Builtin { name: "trim", arity: 1 },
    Builtin { name: "pad_left", arity: 3 },
    Builtin { name: "pad_right", arity: 3 },
    Builtin { name: "length", arity: 1 },
    Builtin { name: "starts_with", arity: 2 },
    Builtin { name: "ends_with", arity: 2 },
    Builtin { name: "reverse", arity: 1 },
    Builtin { name: "to_chars", arity: 1 },
    Builtin { name: "from_codepoint", arity: 1 },
    Builtin { name: "to_codepoint", arity: 1 },
    // lists
    Builtin { name: "slice", arity: 3 },
    Builtin { name: "range", arity: 2 },
    // numeric
    Builtin { name: "pow", arity: 2 },
    Builtin { name: "exp", arity: 1 },
    Builtin { name: "ln", arity: 1 },
    Builtin { name: "floor", arity: 1 },
    Builtin { name: "ceil", arity: 1 },
    Builtin { name: "abs", arity: 1 },
    Builtin { name: "round", arity: 2 },
    Builtin { name: "parse_num", arity: 1 },
    Builtin { name: "format_num", arity: 2 },
    Builtin { name: "parse_int", arity: 2 },
    Builtin { name: "format_int", arity: 2 },
];

pub fn lookup(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}
