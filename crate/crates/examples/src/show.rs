//! Rendering values the way Haskell's `show` does, so terminal output matches
//! the original transcripts byte for byte.

use std::fmt::Write;

use chrono::NaiveDate;

const ASCII_NAMES: [&str; 32] = [
    "NUL", "SOH", "STX", "ETX", "EOT", "ENQ", "ACK", "a", "b", "t", "n", "v", "f", "r", "SO", "SI",
    "DLE", "DC1", "DC2", "DC3", "DC4", "NAK", "SYN", "ETB", "CAN", "EM", "SUB", "ESC", "FS", "GS",
    "RS", "US",
];

/// `show` for a `String`: quoted, with Haskell escapes.
pub fn show_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        let next = chars.peek().copied();
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\x7f' => out.push_str("\\DEL"),
            c if (c as u32) < 32 => {
                out.push('\\');
                out.push_str(ASCII_NAMES[c as usize]);
                // "\SO" followed by 'H' would read back as "\SOH".
                if c == '\x0e' && next == Some('H') {
                    out.push_str("\\&");
                }
            }
            c if (c as u32) > 127 => {
                write!(out, "\\{}", c as u32).unwrap();
                if next.is_some_and(|n| n.is_ascii_digit()) {
                    out.push_str("\\&");
                }
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// `show` for a `Maybe String`.
pub fn show_maybe_string(v: &Option<String>) -> String {
    match v {
        Some(s) => format!("Just {}", show_string(s)),
        None => "Nothing".to_string(),
    }
}

/// `show` for a `Maybe Day`; days render as ISO dates without quotes.
pub fn show_maybe_date(v: &Option<NaiveDate>) -> String {
    match v {
        Some(d) => format!("Just {}", d.format("%Y-%m-%d")),
        None => "Nothing".to_string(),
    }
}
