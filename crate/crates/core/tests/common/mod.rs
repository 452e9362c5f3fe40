//! Golden programs shared by the conformance and acceptance suites.
//!
//! Every expected output here was computed by hand from the language
//! semantics, never by running the implementation.

pub struct Golden {
    pub name: &'static str,
    pub source: &'static str,
    pub cases: &'static [(&'static str, &'static str)],
}

pub const GOLDENS: &[Golden] = &[
    Golden {
        name: "split_join",
        source: r#"transform(x) { return join(split(x, ","), "|") }"#,
        cases: &[("a,b,c", "a|b|c"), ("one", "one"), (",x,", "|x|")],
    },
    Golden {
        name: "substring_clamps",
        source: "transform(x) { return substring(x, 1, 4) }",
        cases: &[("abcdef", "bcd"), ("ab", "b"), ("", "")],
    },
    Golden {
        name: "first_and_last_char",
        source: "transform(x) { return char_at(x, 0) + char_at(x, length(x) - 1) }",
        cases: &[("hello", "ho"), ("x", "xx")],
    },
    Golden {
        name: "index_of_needle",
        source: r#"transform(x) { return format_int(index_of(x, "o"), 10) }"#,
        cases: &[("hello world", "4"), ("zzz", "-1"), ("o", "0")],
    },
    Golden {
        name: "replace_all_spaces",
        source: r#"transform(x) { return replace(x, " ", "_") }"#,
        cases: &[("a b c", "a_b_c"), ("nospace", "nospace")],
    },
    Golden {
        name: "title_case_one_word",
        source: "transform(x) { return upper(substring(x, 0, 1)) + lower(substring(x, 1, length(x))) }",
        cases: &[("hELLO", "Hello"), ("m", "M"), ("WORLD", "World")],
    },
    Golden {
        name: "trim_whitespace",
        source: "transform(x) { return trim(x) }",
        cases: &[("  pad  ", "pad"), ("none", "none"), ("\t tabbed \n", "tabbed")],
    },
    Golden {
        name: "zero_pad_left",
        source: r#"transform(x) { return pad_left(x, 5, "0") }"#,
        cases: &[("42", "00042"), ("123456", "123456"), ("", "00000")],
    },
    Golden {
        name: "dot_pad_right",
        source: r#"transform(x) { return pad_right(x, 4, ".") }"#,
        cases: &[("ab", "ab.."), ("abcd", "abcd")],
    },
    Golden {
        name: "strip_prefix_suffix",
        source: r#"transform(x) {
            if starts_with(x, "Mr. ") { return substring(x, 4, length(x)) }
            if ends_with(x, "!") { return substring(x, 0, length(x) - 1) }
            return x
        }"#,
        cases: &[("Mr. Smith", "Smith"), ("wow!", "wow"), ("plain", "plain")],
    },
    Golden {
        name: "reverse_scalars",
        source: "transform(x) { return reverse(x) }",
        cases: &[("abc", "cba"), ("ab\u{00e9}", "\u{00e9}ba"), ("", "")],
    },
    Golden {
        name: "explode_chars",
        source: r#"transform(x) { return join(to_chars(x), "-") }"#,
        cases: &[("abc", "a-b-c"), ("z", "z")],
    },
    Golden {
        name: "next_codepoint",
        source: "transform(x) { return from_codepoint(to_codepoint(x) + 1) }",
        cases: &[("a", "b"), ("A", "B"), ("0", "1")],
    },
    Golden {
        name: "drop_first_word",
        source: r#"transform(x) {
            let parts = split(x, " ")
            return join(slice(parts, 1, length(parts)), " ")
        }"#,
        cases: &[("drop first word", "first word"), ("single", "")],
    },
    Golden {
        name: "triangular_number",
        source: r#"transform(x) {
            let n = parse_int(x, 10)
            let total = 0
            for i in range(1, n + 1) { total = total + i }
            return format_int(total, 10)
        }"#,
        cases: &[("10", "55"), ("1", "1"), ("0", "0")],
    },
    Golden {
        name: "square_value",
        source: "transform(x) { return format_num(pow(parse_num(x), 2.0), 2) }",
        cases: &[("1.5", "2.25"), ("-2", "4.00")],
    },
    Golden {
        name: "ln_of_exp",
        source: "transform(x) { return format_num(ln(exp(parse_num(x))), 3) }",
        cases: &[("2", "2.000"), ("0.5", "0.500")],
    },
    Golden {
        name: "floor_and_ceil",
        source: r#"transform(x) {
            let v = parse_num(x)
            return format_int(floor(v), 10) + "," + format_int(ceil(v), 10)
        }"#,
        cases: &[("2.3", "2,3"), ("-2.3", "-3,-2"), ("4", "4,4")],
    },
    Golden {
        name: "absolute_value",
        source: "transform(x) { return format_num(abs(parse_num(x)), 1) }",
        cases: &[("-3.5", "3.5"), ("2", "2.0")],
    },
    Golden {
        name: "round_half_away_from_zero",
        source: "transform(x) { return format_num(round(parse_num(x), 1), 1) }",
        cases: &[("0.25", "0.3"), ("-0.25", "-0.3"), ("2.349", "2.3")],
    },
    Golden {
        name: "hex_to_decimal",
        source: r#"transform(x) { return format_int(parse_int(x, 16), 10) }"#,
        cases: &[("ff", "255"), ("0041", "65"), ("10", "16")],
    },
    Golden {
        // Base conversion: binary in, hexadecimal out.
        name: "binary_to_hex",
        source: "transform(x) { return format_int(parse_int(x, 2), 16) }",
        cases: &[("1010", "a"), ("11111111", "ff"), ("111", "7"), ("10000", "10")],
    },
    Golden {
        // Code point notation to decimal character value.
        name: "codepoint_to_decimal",
        source: "transform(x) { return format_int(parse_int(substring(x, 2, length(x)), 16), 10) }",
        cases: &[("U+0041", "65"), ("U+0042", "66"), ("U+005A", "90"), ("U+007E", "126")],
    },
    Golden {
        // Full name to dotted-initials username.
        name: "name_to_username",
        source: r#"transform(x) {
            let parts = split(trim(x), " ")
            let n = length(parts)
            let acc = ""
            for p in slice(parts, 0, n - 1) {
                acc = acc + lower(char_at(p, 0)) + "."
            }
            return acc + lower(parts[n - 1])
        }"#,
        cases: &[
            ("Nadia Ralph Allen", "n.r.allen"),
            ("Sean Morse", "s.morse"),
            ("Dena Christopher Griffith", "d.c.griffith"),
            ("Brandy Constable", "b.constable"),
        ],
    },
    Golden {
        name: "pounds_to_one_decimal",
        source: "transform(x) { return format_num(round(0.453 * parse_num(x), 1), 1) }",
        cases: &[("2", "0.9"), ("51.5", "23.3")],
    },
    Golden {
        name: "affine_arithmetic",
        source: "transform(x) { let n = parse_num(x) return format_num((n + 3.0) * 2.0 - 1.0, 1) }",
        cases: &[("2", "9.0"), ("-3", "-1.0")],
    },
    Golden {
        name: "euclidean_mod_and_division",
        source: r#"transform(x) {
            let n = parse_int(x, 10)
            return format_int(n % 7, 10) + ":" + format_num(n / 4, 2)
        }"#,
        cases: &[("10", "3:2.50"), ("-3", "4:-0.75")],
    },
    Golden {
        name: "sign_buckets",
        source: r#"transform(x) {
            let n = parse_num(x)
            if n < 0.0 { return "neg" }
            else if n == 0.0 { return "zero" }
            else if n >= 100.0 { return "big" }
            else { return "pos" }
        }"#,
        cases: &[("-1", "neg"), ("0", "zero"), ("5", "pos"), ("150", "big")],
    },
    Golden {
        name: "boolean_connectives",
        source: r#"transform(x) {
            let n = length(x)
            if n > 2 and n < 6 or x == "ok" { return "mid" } else { return "other" }
        }"#,
        cases: &[("abcd", "mid"), ("ok", "mid"), ("toolonghere", "other"), ("", "other")],
    },
    Golden {
        name: "not_empty_check",
        source: r#"transform(x) { if not (x != "") { return "empty" } else { return x } }"#,
        cases: &[("", "empty"), ("v", "v")],
    },
    Golden {
        name: "pick_second_if_present",
        source: r#"transform(x) {
            let parts = split(x, "-")
            let pick = if length(parts) > 1 { parts[1] } else { parts[0] }
            return pick
        }"#,
        cases: &[("a-b", "b"), ("solo", "solo")],
    },
    Golden {
        name: "decimal_to_binary",
        source: r#"transform(x) {
            let n = parse_int(x, 10)
            let bits = ""
            while n > 0 {
                bits = format_int(n % 2, 10) + bits
                n = floor(n / 2)
            }
            if bits == "" { return "0" }
            return bits
        }"#,
        cases: &[("6", "110"), ("0", "0"), ("1", "1"), ("13", "1101")],
    },
    Golden {
        name: "helper_function_initials",
        source: r#"fn initial(w) { return lower(char_at(w, 0)) }
transform(x) {
    let parts = split(x, " ")
    return initial(parts[0]) + initial(parts[1])
}"#,
        cases: &[("John Smith", "js"), ("Ada Lovelace", "al")],
    },
    Golden {
        name: "negate_integer",
        source: "transform(x) { return format_int(-parse_int(x, 10), 10) }",
        cases: &[("5", "-5"), ("-8", "8")],
    },
    Golden {
        name: "numeric_view_shortcut",
        source: "transform(x) { return format_num(xn * 10.0, 0) }",
        cases: &[("1.5", "15"), ("0.2", "2")],
    },
];
