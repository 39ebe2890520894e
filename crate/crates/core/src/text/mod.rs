//! Line-based text formats for P systems (`.psys`) and register machines
//! (`.rm`).

use std::fmt;

use thiserror::Error;

pub mod psys;
pub mod rm;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

/// A whitespace-separated token with its 1-based column.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

/// Drops a trailing comment: `#` at the start of the line or after
/// whitespace.
pub(crate) fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

pub(crate) fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token { text: &line[s..i], column: s + 1 });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &line[s..], column: s + 1 });
    }
    out
}

/// Removes surrounding single quotes from a quoted name.
pub(crate) fn unquote(s: &str) -> &str {
    if s.len() >= 2 && s.starts_with('\'') && s.ends_with('\'') {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Quotes names that would otherwise read as a comment.
pub(crate) fn quote(s: &str) -> String {
    if s.starts_with('#') || s.starts_with('\'') {
        format!("'{s}'")
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_need_leading_space() {
        assert_eq!(strip_comment("a b # c"), "a b ");
        assert_eq!(strip_comment("# all"), "");
        assert_eq!(strip_comment("x '#' (#,out)"), "x '#' (#,out)");
    }

    #[test]
    fn token_columns() {
        let t = tokens("  ab  c");
        assert_eq!((t[0].text, t[0].column), ("ab", 3));
        assert_eq!((t[1].text, t[1].column), ("c", 7));
    }
}
