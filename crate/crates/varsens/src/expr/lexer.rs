//! Tokenizer. Also the layer where JavaScript-style `Math.*` spellings are
//! rewritten to plain ones, so the parser never sees the prefix.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Token {
    pub kind: TokenKind,
    /// Byte offset of the token's first character in the source. For a
    /// rewritten `Math.sin`, the offset of the `M`.
    pub pos: usize,
}

pub(super) fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let pos = i;
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => push_simple(&mut tokens, TokenKind::Plus, pos, &mut i),
            b'-' => push_simple(&mut tokens, TokenKind::Minus, pos, &mut i),
            b'*' => push_simple(&mut tokens, TokenKind::Star, pos, &mut i),
            b'/' => push_simple(&mut tokens, TokenKind::Slash, pos, &mut i),
            b'^' => push_simple(&mut tokens, TokenKind::Caret, pos, &mut i),
            b'(' => push_simple(&mut tokens, TokenKind::LParen, pos, &mut i),
            b')' => push_simple(&mut tokens, TokenKind::RParen, pos, &mut i),
            b',' => push_simple(&mut tokens, TokenKind::Comma, pos, &mut i),
            b'0'..=b'9' => {
                let value = lex_number(bytes, &mut i, pos)?;
                tokens.push(Token { kind: TokenKind::Number(value), pos });
            }
            b'.' => {
                // A leading dot starts a number only when a digit follows.
                if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                    let value = lex_number(bytes, &mut i, pos)?;
                    tokens.push(Token { kind: TokenKind::Number(value), pos });
                } else {
                    return Err(syntax(pos, "unexpected '.'"));
                }
            }
            _ if b.is_ascii_alphabetic() || b == b'_' => {
                let name = lex_ident(bytes, &mut i);
                let name = if name == "Math" {
                    normalize_math_member(bytes, &mut i, pos)?
                } else {
                    name.to_string()
                };
                tokens.push(Token { kind: TokenKind::Ident(name), pos });
            }
            _ => {
                let ch = src[pos..].chars().next().unwrap_or('?');
                return Err(syntax(pos, format!("unexpected character '{ch}'")));
            }
        }
    }
    Ok(tokens)
}

fn push_simple(tokens: &mut Vec<Token>, kind: TokenKind, pos: usize, i: &mut usize) {
    tokens.push(Token { kind, pos });
    *i += 1;
}

fn lex_ident<'a>(bytes: &'a [u8], i: &mut usize) -> &'a str {
    let start = *i;
    while *i < bytes.len() && (bytes[*i].is_ascii_alphanumeric() || bytes[*i] == b'_') {
        *i += 1;
    }
    // Identifier bytes are ASCII by construction.
    std::str::from_utf8(&bytes[start..*i]).unwrap()
}

/// Consumes `.member` after a `Math` identifier and returns the plain
/// spelling: `Math.PI` -> `pi`, `Math.E` -> `e`, `Math.sin` -> `sin`.
/// Case is preserved for anything else so that e.g. `Math.Sin` still fails
/// later as an unknown name rather than silently changing meaning.
fn normalize_math_member(bytes: &[u8], i: &mut usize, pos: usize) -> Result<String, ParseError> {
    if bytes.get(*i) != Some(&b'.') {
        return Err(syntax(pos, "'Math' must be followed by '.' and a member name"));
    }
    *i += 1;
    if !bytes
        .get(*i)
        .is_some_and(|b| b.is_ascii_alphabetic() || *b == b'_')
    {
        return Err(syntax(pos, "expected a member name after 'Math.'"));
    }
    let member = lex_ident(bytes, i);
    Ok(match member {
        "PI" => "pi".to_string(),
        "E" => "e".to_string(),
        other => other.to_string(),
    })
}

fn lex_number(bytes: &[u8], i: &mut usize, pos: usize) -> Result<f64, ParseError> {
    let start = *i;
    while bytes.get(*i).is_some_and(u8::is_ascii_digit) {
        *i += 1;
    }
    if bytes.get(*i) == Some(&b'.') {
        *i += 1;
        while bytes.get(*i).is_some_and(u8::is_ascii_digit) {
            *i += 1;
        }
    }
    if matches!(bytes.get(*i), Some(b'e' | b'E')) {
        let mut j = *i + 1;
        if matches!(bytes.get(j), Some(b'+' | b'-')) {
            j += 1;
        }
        // Only treat the 'e' as an exponent when digits follow; otherwise it
        // belongs to the next token (e.g. `2e` is `2 * e` missing its `*`).
        if bytes.get(j).is_some_and(u8::is_ascii_digit) {
            *i = j;
            while bytes.get(*i).is_some_and(u8::is_ascii_digit) {
                *i += 1;
            }
        }
    }
    let text = std::str::from_utf8(&bytes[start..*i]).unwrap();
    let value: f64 = text
        .parse()
        .map_err(|_| syntax(pos, format!("invalid number literal '{text}'")))?;
    if !value.is_finite() {
        return Err(syntax(
            pos,
            format!("number literal '{text}' overflows double precision"),
        ));
    }
    Ok(value)
}

fn syntax(position: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        position,
        message: message.into(),
    }
}
