//! Ground and non-ground first-order terms in ASP fact syntax.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// A first-order term: `functor` applied to zero or more arguments.
///
/// Constants are terms without arguments. A functor starting with an
/// uppercase letter or `_` is a variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Term {
    pub functor: String,
    pub args: Vec<Term>,
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Self {
        Term {
            functor: name.into(),
            args: Vec::new(),
        }
    }

    pub fn app<I, T>(functor: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Term>,
    {
        Term {
            functor: functor.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn int(value: i64) -> Self {
        Term::atom(value.to_string())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_variable(&self) -> bool {
        self.args.is_empty()
            && self
                .functor
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_uppercase() || c == '_')
    }

    pub fn is_ground(&self) -> bool {
        !self.is_variable() && self.args.iter().all(Term::is_ground)
    }

    pub fn as_int(&self) -> Option<i64> {
        if self.args.is_empty() {
            self.functor.parse().ok()
        } else {
            None
        }
    }

    /// Argument `i` as a constant name, if it is one.
    pub fn arg_name(&self, i: usize) -> Option<&str> {
        self.args
            .get(i)
            .filter(|a| a.args.is_empty())
            .map(|a| a.functor.as_str())
    }

    /// Every constant occurring anywhere in the term (including a 0-ary self).
    pub fn constants(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants<'a>(&'a self, out: &mut Vec<&'a str>) {
        if self.args.is_empty() {
            out.push(&self.functor);
        } else {
            for a in &self.args {
                a.collect_constants(out);
            }
        }
    }
}

impl From<&str> for Term {
    fn from(s: &str) -> Self {
        Term::atom(s)
    }
}

impl From<&String> for Term {
    fn from(s: &String) -> Self {
        Term::atom(s.as_str())
    }
}

impl From<&Term> for Term {
    fn from(t: &Term) -> Self {
        t.clone()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.functor)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Position of a syntax error, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Character cursor over ASP-style text that tracks line/column and skips
/// whitespace and `%` line comments.
pub(crate) struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Cursor {
            src,
            offset: 0,
            line: 1,
            column: 1,
        }
    }

    pub(crate) fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    pub(crate) fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_trivia();
        self.peek().is_none()
    }

    pub(crate) fn eat(&mut self, want: char) -> Result<(), (Pos, String)> {
        self.skip_trivia();
        let pos = self.pos();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err((pos, alloc::format!("expected '{want}', found '{c}'"))),
            None => Err((pos, alloc::format!("expected '{want}', found end of input"))),
        }
    }

    fn identifier(&mut self) -> Result<String, (Pos, String)> {
        self.skip_trivia();
        let pos = self.pos();
        let start = self.offset;
        let negative = self.peek() == Some('-');
        if negative {
            self.bump();
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.bump();
            } else {
                break;
            }
        }
        let text = &self.src[start..self.offset];
        if text.is_empty() || text == "-" {
            let found = self
                .peek()
                .map_or_else(|| "end of input".to_string(), |c| alloc::format!("'{c}'"));
            return Err((pos, alloc::format!("expected identifier, found {found}")));
        }
        if negative && !text[1..].chars().all(|c| c.is_ascii_digit()) {
            return Err((pos, "malformed negative integer".to_string()));
        }
        Ok(text.to_string())
    }

    pub(crate) fn term(&mut self) -> Result<Term, (Pos, String)> {
        let functor = self.identifier()?;
        self.skip_trivia();
        let mut args = Vec::new();
        if self.peek() == Some('(') {
            self.bump();
            loop {
                args.push(self.term()?);
                self.skip_trivia();
                let pos = self.pos();
                match self.bump() {
                    Some(',') => continue,
                    Some(')') => break,
                    Some(c) => return Err((pos, alloc::format!("expected ',' or ')', found '{c}'"))),
                    None => return Err((pos, "unterminated argument list".to_string())),
                }
            }
        }
        Ok(Term { functor, args })
    }
}

/// Parses a single term such as `pay(nicole,b)`; trailing text is an error.
pub fn parse_term(src: &str) -> Result<Term, (Pos, String)> {
    let mut cur = Cursor::new(src);
    let t = cur.term()?;
    if !cur.at_end() {
        return Err((cur.pos(), "trailing input after term".to_string()));
    }
    Ok(t)
}
