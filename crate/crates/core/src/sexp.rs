//! Tiny s-expression reader for the schema, query, and type formats.
//!
//! Grammar: atoms are runs of characters other than whitespace, parens, and
//! semicolons; `;` starts a comment that runs to the end of the line. Every
//! node carries the source position it started at, so format errors in the
//! layers above can point at the offending token.

use std::fmt;

use thiserror::Error;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SexpKind {
    Atom(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sexp {
    pub pos: Pos,
    pub kind: SexpKind,
}

impl Sexp {
    pub fn as_atom(&self) -> Result<&str, ParseError> {
        match &self.kind {
            SexpKind::Atom(s) => Ok(s),
            SexpKind::List(_) => Err(ParseError::new(self.pos, "expected an atom, found a list")),
        }
    }

    pub fn as_list(&self) -> Result<&[Sexp], ParseError> {
        match &self.kind {
            SexpKind::List(items) => Ok(items),
            SexpKind::Atom(a) => Err(ParseError::new(
                self.pos,
                format!("expected a list, found atom {a:?}"),
            )),
        }
    }

    /// The list's head as an atom plus its remaining items.
    pub fn as_tagged(&self) -> Result<(&str, &[Sexp]), ParseError> {
        let items = self.as_list()?;
        let Some(head) = items.first() else {
            return Err(ParseError::new(self.pos, "expected a tagged list, found ()"));
        };
        Ok((head.as_atom()?, &items[1..]))
    }

    pub fn as_usize(&self) -> Result<usize, ParseError> {
        let a = self.as_atom()?;
        a.parse()
            .map_err(|_| ParseError::new(self.pos, format!("expected a number, found {a:?}")))
    }

    pub fn as_u64(&self) -> Result<u64, ParseError> {
        let a = self.as_atom()?;
        a.parse()
            .map_err(|_| ParseError::new(self.pos, format!("expected a number, found {a:?}")))
    }

    pub fn as_u32(&self) -> Result<u32, ParseError> {
        let a = self.as_atom()?;
        a.parse()
            .map_err(|_| ParseError::new(self.pos, format!("expected a number, found {a:?}")))
    }
}

struct Lexer<'a> {
    src: &'a str,
    at: usize,
    line: usize,
    col: usize,
}

#[derive(Debug, PartialEq, Eq)]
enum Token {
    Open(Pos),
    Close(Pos),
    Atom(Pos, String),
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src,
            at: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self, ch: char) {
        self.at += ch.len_utf8();
        if ch == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.at..].chars().next()
    }

    fn next_token(&mut self) -> Result<Option<Token>, ParseError> {
        loop {
            match self.peek() {
                None => return Ok(None),
                Some(c) if c.is_whitespace() => self.bump(c),
                Some(';') => {
                    while let Some(c) = self.peek() {
                        self.bump(c);
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some('(') => {
                    let pos = self.pos();
                    self.bump('(');
                    return Ok(Some(Token::Open(pos)));
                }
                Some(')') => {
                    let pos = self.pos();
                    self.bump(')');
                    return Ok(Some(Token::Close(pos)));
                }
                Some(_) => {
                    let pos = self.pos();
                    let start = self.at;
                    while let Some(c) = self.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                            break;
                        }
                        self.bump(c);
                    }
                    return Ok(Some(Token::Atom(pos, self.src[start..self.at].to_string())));
                }
            }
        }
    }
}

/// Read every top-level s-expression in `input`.
pub fn parse_all(input: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut lexer = Lexer::new(input);
    // Stack of open lists; the bottom collects the completed top-level nodes.
    let mut stack: Vec<(Pos, Vec<Sexp>)> = vec![(Pos { line: 1, col: 1 }, vec![])];
    while let Some(token) = lexer.next_token()? {
        match token {
            Token::Open(pos) => stack.push((pos, vec![])),
            Token::Close(pos) => {
                if stack.len() == 1 {
                    return Err(ParseError::new(pos, "unmatched closing paren"));
                }
                let (open_pos, items) = stack.pop().unwrap();
                stack.last_mut().unwrap().1.push(Sexp {
                    pos: open_pos,
                    kind: SexpKind::List(items),
                });
            }
            Token::Atom(pos, text) => {
                stack.last_mut().unwrap().1.push(Sexp {
                    pos,
                    kind: SexpKind::Atom(text),
                });
            }
        }
    }
    if stack.len() > 1 {
        let (pos, _) = stack.pop().unwrap();
        return Err(ParseError::new(pos, "unclosed paren"));
    }
    Ok(stack.pop().unwrap().1)
}

/// Read exactly one s-expression.
pub fn parse_one(input: &str) -> Result<Sexp, ParseError> {
    let mut all = parse_all(input)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(ParseError::new(
            Pos { line: 1, col: 1 },
            "expected an expression, found nothing",
        )),
        _ => Err(ParseError::new(
            all[1].pos,
            "expected a single expression, found more",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(s: &str) -> SexpKind {
        SexpKind::Atom(s.into())
    }

    #[test]
    fn nested_lists_and_comments() {
        let parsed = parse_one("(a (b 12) ; trailing\n  ())").unwrap();
        let items = parsed.as_list().unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[0].kind, atom("a"));
        let inner = items[1].as_list().unwrap();
        assert_eq!(inner[0].kind, atom("b"));
        assert_eq!(inner[1].as_usize().unwrap(), 12);
        assert_eq!(items[2].as_list().unwrap().len(), 0);
    }

    #[test]
    fn positions_in_errors() {
        let err = parse_all("(a\n  (b )) )").unwrap_err();
        assert_eq!(err.pos, Pos { line: 2, col: 9 });
        let err = parse_all("((").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 2 });
        let sexp = parse_one("(x 5)").unwrap();
        let err = sexp.as_list().unwrap()[0].as_list().unwrap_err();
        assert!(err.to_string().contains("1:2"));
    }

    #[test]
    fn tagged_access() {
        let sexp = parse_one("(schema (E 2))").unwrap();
        let (tag, rest) = sexp.as_tagged().unwrap();
        assert_eq!(tag, "schema");
        assert_eq!(rest.len(), 1);
        let (rel, args) = rest[0].as_tagged().unwrap();
        assert_eq!(rel, "E");
        assert_eq!(args[0].as_usize().unwrap(), 2);
    }
}
