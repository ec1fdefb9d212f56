//! Bracketed-expression reader shared by the grammar, derivation, derived-tree
//! and parameter file formats.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> Self {
        SyntaxError { pos, msg: msg.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SExpr {
    List(Vec<SExpr>, Pos),
    Atom(String, Pos),
    Str(String, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::List(_, p) | SExpr::Atom(_, p) | SExpr::Str(_, p) => *p,
        }
    }
}

/// Character cursor that tracks line and column.
pub struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
    consumed: usize,
}

impl<'a> Reader<'a> {
    pub fn new(text: &'a str, first_line: usize) -> Self {
        Reader { chars: text.chars().peekable(), line: first_line, col: 1, consumed: 0 }
    }

    /// Bytes consumed so far.
    pub fn offset(&self) -> usize {
        self.consumed
    }

    pub fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.consumed += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    /// Skips whitespace and `#` comments.
    pub fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == '#' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_trivia();
        self.chars.peek().is_none()
    }

    pub fn read(&mut self) -> Result<SExpr, SyntaxError> {
        self.skip_trivia();
        let pos = self.pos();
        match self.chars.peek().copied() {
            None => Err(SyntaxError::new(pos, "unexpected end of input")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(SyntaxError::new(pos, "unclosed `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(SExpr::List(items, pos));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(SyntaxError::new(pos, "unexpected `)`")),
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => {
                            return Err(SyntaxError::new(pos, "unterminated string literal"))
                        }
                        Some('"') => return Ok(SExpr::Str(s, pos)),
                        Some('\\') => match self.bump() {
                            Some(c @ ('"' | '\\')) => s.push(c),
                            _ => return Err(SyntaxError::new(self.pos(), "bad escape in string")),
                        },
                        Some(c) => s.push(c),
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == '#' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(SExpr::Atom(s, pos))
            }
        }
    }
}

/// Reads exactly one expression from `text`; trailing content is an error.
pub fn read_one(text: &str, line: usize) -> Result<SExpr, SyntaxError> {
    let mut r = Reader::new(text, line);
    let e = r.read()?;
    if !r.at_end() {
        return Err(SyntaxError::new(r.pos(), "trailing input after expression"));
    }
    Ok(e)
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists() {
        let e = read_one("(S NP! (VP (V \"drives\") NP!))", 1).unwrap();
        let SExpr::List(items, _) = e else { panic!() };
        assert_eq!(items.len(), 3);
        assert!(matches!(&items[1], SExpr::Atom(a, _) if a == "NP!"));
    }

    #[test]
    fn reports_positions() {
        let err = read_one("(S\n  (A \"a\"", 3).unwrap_err();
        assert_eq!(err.pos, Pos { line: 4, col: 3 });
        let err = read_one("(S A) )", 1).unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 7 });
    }

    #[test]
    fn string_escapes() {
        let e = read_one(r#""a \"b\" \\""#, 1).unwrap();
        assert_eq!(e, SExpr::Str(r#"a "b" \"#.into(), Pos { line: 1, col: 1 }));
        assert_eq!(quote(r#"a "b" \"#), r#""a \"b\" \\""#);
    }
}
