//! Concrete syntax for types and signatures.
//!
//! ```text
//! type    ::= ("all" | "ex") "[" kind "]" type
//!           | seqexp [ "->" type ]
//! seqexp  ::= prefix { ";" prefix }
//! prefix  ::= ("!" | "?") prefix | atom
//! atom    ::= "unit" | "skip" | base | numeral | Ident | "(" type ")"
//!           | "{" branches "}" | "<" branches ">" | "+{" branches "}" | "&{" branches "}"
//! ```
//!
//! A signature is one `X = type` per line; `#` starts a comment.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::types::{Kind, Label, Polarity, Quantifier, Shape, Signature, TypeExpr, TypeIdent, View};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("{line}:{column}: label `{label}` appears twice")]
    DuplicateLabel { line: usize, column: usize, label: String },
    #[error("{line}: type identifier `{ident}` defined twice")]
    DuplicateIdent { line: usize, ident: TypeIdent },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Upper(String),
    Lower(String),
    Num(usize),
    Arrow,
    Sym(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Upper(s) | Tok::Lower(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Arrow => "`->`".into(),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str, first_line: usize) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = first_line;
    let mut column = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                    s.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            column += s.chars().count();
            if c.is_ascii_uppercase() {
                Tok::Upper(s)
            } else {
                Tok::Lower(s)
            }
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            column += s.len();
            match s.parse() {
                Ok(n) => Tok::Num(n),
                Err(_) => {
                    return Err(ParseError::Syntax {
                        line: l,
                        column: col,
                        expected: "a numeral that fits in a machine word".into(),
                        found: format!("`{s}`"),
                    })
                }
            }
        } else if c == '-' {
            chars.next();
            column += 1;
            if chars.peek() == Some(&'>') {
                chars.next();
                column += 1;
                Tok::Arrow
            } else {
                return Err(ParseError::Syntax {
                    line: l,
                    column: col,
                    expected: "`->`".into(),
                    found: "`-`".into(),
                });
            }
        } else if "!?;{}<>()[]:,+&=".contains(c) {
            chars.next();
            column += 1;
            Tok::Sym(c)
        } else {
            return Err(ParseError::Syntax {
                line: l,
                column: col,
                expected: "a type".into(),
                found: format!("`{c}`"),
            });
        };
        out.push(Spanned {
            tok,
            line: l,
            column: col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.into(),
            found: t.tok.describe(),
        })
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("`{c}`"))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error("end of input")
        }
    }

    fn quantifier(&self) -> Option<Quantifier> {
        match self.peek() {
            Tok::Lower(s) if s == "all" => Some(Quantifier::Forall),
            Tok::Lower(s) if s == "ex" => Some(Quantifier::Exists),
            _ => None,
        }
    }

    fn ty(&mut self) -> Result<TypeExpr, ParseError> {
        if let Some(q) = self.quantifier() {
            self.bump();
            self.expect_sym('[')?;
            let kind = match self.peek() {
                Tok::Upper(s) if s == "S" => Kind::Session,
                Tok::Upper(s) if s == "T" => Kind::Functional,
                _ => return self.error("kind `S` or `T`"),
            };
            self.bump();
            self.expect_sym(']')?;
            let body = self.ty()?;
            return Ok(TypeExpr::quant(q, kind, body));
        }
        let left = self.seqexp()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let right = self.ty()?;
            Ok(TypeExpr::arrow(left, right))
        } else {
            Ok(left)
        }
    }

    fn seqexp(&mut self) -> Result<TypeExpr, ParseError> {
        let mut acc = self.prefix()?;
        while *self.peek() == Tok::Sym(';') {
            self.bump();
            let next = self.prefix()?;
            acc = TypeExpr::seq(acc, next);
        }
        Ok(acc)
    }

    fn prefix(&mut self) -> Result<TypeExpr, ParseError> {
        let polarity = match self.peek() {
            Tok::Sym('!') => Polarity::Out,
            Tok::Sym('?') => Polarity::In,
            _ => return self.atom(),
        };
        self.bump();
        Ok(TypeExpr::message(polarity, self.prefix()?))
    }

    fn atom(&mut self) -> Result<TypeExpr, ParseError> {
        if self.quantifier().is_some() {
            return self.ty();
        }
        match self.peek().clone() {
            Tok::Lower(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "unit" => TypeExpr::unit(),
                    "skip" => TypeExpr::skip(),
                    _ => TypeExpr::base(s),
                })
            }
            Tok::Upper(s) => {
                self.bump();
                Ok(TypeExpr::ident(s))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(TypeExpr::index(n))
            }
            Tok::Sym('(') => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(')')?;
                Ok(t)
            }
            Tok::Sym('{') => {
                self.bump();
                let bs = self.branches('}')?;
                Ok(TypeExpr::labeled(Shape::Record, bs))
            }
            Tok::Sym('<') => {
                self.bump();
                let bs = self.branches('>')?;
                Ok(TypeExpr::labeled(Shape::Variant, bs))
            }
            Tok::Sym(c @ ('+' | '&')) => {
                self.bump();
                self.expect_sym('{')?;
                let bs = self.branches('}')?;
                let view = if c == '+' { View::Internal } else { View::External };
                Ok(TypeExpr::choice(view, bs))
            }
            _ => self.error("a type"),
        }
    }

    fn branches(&mut self, close: char) -> Result<BTreeMap<Label, TypeExpr>, ParseError> {
        let mut out = BTreeMap::new();
        loop {
            let at = self.toks[self.pos].clone();
            let label = match &at.tok {
                Tok::Upper(s) | Tok::Lower(s) => s.clone(),
                _ => return self.error("a label"),
            };
            self.bump();
            self.expect_sym(':')?;
            let t = self.ty()?;
            if out.insert(Label::new(label.clone()), t).is_some() {
                return Err(ParseError::DuplicateLabel {
                    line: at.line,
                    column: at.column,
                    label,
                });
            }
            match self.peek() {
                Tok::Sym(',') => {
                    self.bump();
                }
                Tok::Sym(c) if *c == close => {
                    self.bump();
                    return Ok(out);
                }
                _ => return self.error(&format!("`,` or `{close}`")),
            }
        }
    }
}

/// Parses a single type.
pub fn parse_type(text: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser {
        toks: lex(text, 1)?,
        pos: 0,
    };
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a signature, one `X = type` equation per line.
pub fn parse_signature(text: &str) -> Result<Signature, ParseError> {
    let mut sig = Signature::new();
    for (i, line) in text.lines().enumerate() {
        let mut p = Parser {
            toks: lex(line, i + 1)?,
            pos: 0,
        };
        if *p.peek() == Tok::Eof {
            continue;
        }
        let name = match p.peek() {
            Tok::Upper(s) => s.clone(),
            _ => return p.error("a capitalized type identifier"),
        };
        p.bump();
        p.expect_sym('=')?;
        let body = p.ty()?;
        p.expect_eof()?;
        let ident = TypeIdent::new(name);
        if sig.insert(ident.clone(), body).is_err() {
            return Err(ParseError::DuplicateIdent { line: i + 1, ident });
        }
    }
    Ok(sig)
}
