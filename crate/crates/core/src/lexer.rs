//! Tokenizer shared by the model and property languages.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl core::fmt::Display for Tok {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{}'", s),
            Tok::Int(i) => write!(f, "'{}'", i),
            Tok::Real(r) => write!(f, "'{}'", r),
            Tok::Str(s) => write!(f, "\"{}\"", s),
            Tok::Sym(s) => write!(f, "'{}'", s),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

// Longest symbols first so that prefix matching picks the longest one.
const SYMBOLS: &[&str] = &[
    "<<", ">>", "<=", ">=", "!=", "->", "=>", "..", "(", ")", "[", "]", "{", "}", ",", ";", ":", "'", "=", "<", ">",
    "+", "-", "*", "/", "&", "|", "!", "?",
];

const ALIASES: &[(&str, &str)] = &[
    ("⟨⟨", "<<"),
    ("⟩⟩", ">>"),
    ("≤", "<="),
    ("≥", ">="),
    ("≠", "!="),
    ("¬", "!"),
    ("∧", "&"),
    ("∨", "|"),
    ("→", "->"),
    ("⇒", "=>"),
];

fn err(line: usize, column: usize, message: String) -> ParseError {
    ParseError { line, column, message, expected: Vec::new() }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if c == '\n' {
            line += 1;
            col = 1;
            rest = &rest[1..];
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if rest.starts_with("//") {
            let end = rest.find('\n').unwrap_or(rest.len());
            rest = &rest[end..];
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let end = rest.find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(rest.len());
            out.push(Token { tok: Tok::Ident(rest[..end].to_string()), line: tl, column: tc });
            col += end;
            rest = &rest[end..];
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && rest[1..].starts_with(|ch: char| ch.is_ascii_digit())) {
            let bytes = rest.as_bytes();
            let mut end = 0;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            let mut real = false;
            if end < bytes.len() && bytes[end] == b'.' && !(end + 1 < bytes.len() && bytes[end + 1] == b'.') {
                real = true;
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    real = true;
                    end = k;
                }
            }
            let text = &rest[..end];
            let tok = if real {
                Tok::Real(text.parse().map_err(|_| err(tl, tc, format!("bad number '{}'", text)))?)
            } else {
                Tok::Int(text.parse().map_err(|_| err(tl, tc, format!("integer '{}' out of range", text)))?)
            };
            out.push(Token { tok, line: tl, column: tc });
            col += end;
            rest = &rest[end..];
            continue;
        }
        if c == '"' {
            let Some(end) = rest[1..].find(['"', '\n']) else {
                return Err(err(tl, tc, "unterminated string".into()));
            };
            if rest[1..].as_bytes()[end] != b'"' {
                return Err(err(tl, tc, "unterminated string".into()));
            }
            let s = &rest[1..1 + end];
            out.push(Token { tok: Tok::Str(s.to_string()), line: tl, column: tc });
            col += s.chars().count() + 2;
            rest = &rest[end + 2..];
            continue;
        }
        if let Some((alias, sym)) = ALIASES.iter().find(|(a, _)| rest.starts_with(a)) {
            let sym = SYMBOLS.iter().find(|s| *s == sym).copied().unwrap_or("?");
            out.push(Token { tok: Tok::Sym(sym), line: tl, column: tc });
            col += alias.chars().count();
            rest = &rest[alias.len()..];
            continue;
        }
        if let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            out.push(Token { tok: Tok::Sym(sym), line: tl, column: tc });
            col += sym.len();
            rest = &rest[sym.len()..];
            continue;
        }
        return Err(err(tl, tc, format!("unexpected character '{}'", c)));
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

/// Cursor over a token list with the helpers both parsers use.
#[derive(Debug, Clone)]
pub struct TokenStream {
    toks: Vec<Token>,
    pos: usize,
}

impl TokenStream {
    pub fn new(text: &str) -> Result<Self, ParseError> {
        Ok(TokenStream { toks: tokenize(text)?, pos: 0 })
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn reset(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn token(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let t = self.token();
        ParseError {
            line: t.line,
            column: t.column,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error(format!("unexpected {}", self.peek()), expected)
    }

    pub fn expect_sym(&mut self, s: &'static str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&[s]))
        }
    }

    pub fn expect_kw(&mut self, k: &'static str) -> Result<(), ParseError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.unexpected(&[k]))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    pub fn expect_str(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected(&["string"])),
        }
    }

    pub fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn kinds(text: &str) -> Vec<Tok> {
        tokenize(text).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn ranges_and_reals() {
        assert_eq!(
            kinds("[0..2] 0.5 1e-3"),
            vec![
                Tok::Sym("["),
                Tok::Int(0),
                Tok::Sym(".."),
                Tok::Int(2),
                Tok::Sym("]"),
                Tok::Real(0.5),
                Tok::Real(0.001),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn operators_and_strings() {
        assert_eq!(
            kinds("<<p1>>P>=0.5 [ F \"a\" ] // note"),
            vec![
                Tok::Sym("<<"),
                Tok::Ident("p1".into()),
                Tok::Sym(">>"),
                Tok::Ident("P".into()),
                Tok::Sym(">="),
                Tok::Real(0.5),
                Tok::Sym("["),
                Tok::Ident("F".into()),
                Tok::Str("a".into()),
                Tok::Sym("]"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn unicode_aliases() {
        assert_eq!(kinds("⟨⟨a⟩⟩ ¬x ∧ y ≤ 2")[..3], vec![Tok::Sym("<<"), Tok::Ident("a".into()), Tok::Sym(">>")]);
        assert!(kinds("¬x ∧ y ≤ 2").contains(&Tok::Sym("<=")));
    }

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!((toks[1].line, toks[1].column), (2, 3));
        let e = tokenize("x $").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
    }

    #[test]
    fn unterminated_string() {
        assert!(tokenize("\"abc").is_err());
    }

    #[test]
    fn keeps_int_before_range_dots() {
        assert_eq!(kinds("1..")[..2], vec![Tok::Int(1), Tok::Sym("..")]);
    }
}
