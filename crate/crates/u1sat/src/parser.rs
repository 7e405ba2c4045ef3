//! Concrete syntax for formulas.
//!
//! Tokens: `NAME = [A-Za-z_][A-Za-z0-9_]*`, keywords `exists`/`forall`,
//! connectives `~ & | -> <->`, atoms `NAME(v,...,v)`, infix `v = v`,
//! `v != v` (sugar for `~(v = v)`), `v < v`, `v <1 v`, `v <2 v`.
//! Quantifiers are written `exists x y . body`; `.` binds weakest.
//! Precedence `~ > & > | > -> > <->`. Line comments start with `#`.

use std::fmt;
use thiserror::Error;

use crate::formula::{Formula, QuantKind};
use crate::vocab::{VocabError, Vocabulary};

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

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: unexpected character `{ch}`")]
    UnexpectedChar { pos: Pos, ch: char },
    #[error("{pos}: expected {expected}, found `{found}`")]
    Unexpected {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("{pos}: unexpected end of input, expected {expected}")]
    Eof { pos: Pos, expected: String },
    #[error("{pos}: {source}")]
    Arity {
        pos: Pos,
        #[source]
        source: VocabError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Exists,
    Forall,
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
    Comma,
    Dot,
    Eq,
    Neq,
    Less(String), // "<", "<1", "<2"
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(s) => write!(f, "{s}"),
            Tok::Exists => write!(f, "exists"),
            Tok::Forall => write!(f, "forall"),
            Tok::Not => write!(f, "~"),
            Tok::And => write!(f, "&"),
            Tok::Or => write!(f, "|"),
            Tok::Implies => write!(f, "->"),
            Tok::Iff => write!(f, "<->"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Comma => write!(f, ","),
            Tok::Dot => write!(f, "."),
            Tok::Eq => write!(f, "="),
            Tok::Neq => write!(f, "!="),
            Tok::Less(s) => write!(f, "{s}"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    bump(&mut chars);
                    if c == '\n' {
                        break;
                    }
                }
            }
            '~' => {
                bump(&mut chars);
                toks.push((Tok::Not, pos));
            }
            '&' => {
                bump(&mut chars);
                toks.push((Tok::And, pos));
            }
            '|' => {
                bump(&mut chars);
                toks.push((Tok::Or, pos));
            }
            '(' => {
                bump(&mut chars);
                toks.push((Tok::LParen, pos));
            }
            ')' => {
                bump(&mut chars);
                toks.push((Tok::RParen, pos));
            }
            ',' => {
                bump(&mut chars);
                toks.push((Tok::Comma, pos));
            }
            '.' => {
                bump(&mut chars);
                toks.push((Tok::Dot, pos));
            }
            '=' => {
                bump(&mut chars);
                toks.push((Tok::Eq, pos));
            }
            '!' => {
                bump(&mut chars);
                match chars.peek() {
                    Some('=') => {
                        bump(&mut chars);
                        toks.push((Tok::Neq, pos));
                    }
                    _ => return Err(ParseError::UnexpectedChar { pos, ch: '!' }),
                }
            }
            '-' => {
                bump(&mut chars);
                match chars.peek() {
                    Some('>') => {
                        bump(&mut chars);
                        toks.push((Tok::Implies, pos));
                    }
                    _ => return Err(ParseError::UnexpectedChar { pos, ch: '-' }),
                }
            }
            '<' => {
                bump(&mut chars);
                match chars.peek() {
                    Some('-') => {
                        bump(&mut chars);
                        match chars.peek() {
                            Some('>') => {
                                bump(&mut chars);
                                toks.push((Tok::Iff, pos));
                            }
                            _ => return Err(ParseError::UnexpectedChar { pos, ch: '-' }),
                        }
                    }
                    Some('1') => {
                        bump(&mut chars);
                        toks.push((Tok::Less("<1".into()), pos));
                    }
                    Some('2') => {
                        bump(&mut chars);
                        toks.push((Tok::Less("<2".into()), pos));
                    }
                    _ => toks.push((Tok::Less("<".into()), pos)),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                let tok = match name.as_str() {
                    "exists" => Tok::Exists,
                    "forall" => Tok::Forall,
                    _ => Tok::Name(name),
                };
                toks.push((tok, pos));
            }
            ch => return Err(ParseError::UnexpectedChar { pos, ch }),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(t) if &t == want => Ok(()),
            Some(t) => Err(ParseError::Unexpected {
                pos: self.toks[self.at - 1].1,
                expected: what.to_string(),
                found: t.to_string(),
            }),
            None => Err(ParseError::Eof {
                pos: self.end,
                expected: what.to_string(),
            }),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.next() {
            Some(Tok::Name(n)) => Ok(n),
            Some(t) => Err(ParseError::Unexpected {
                pos: self.toks[self.at - 1].1,
                expected: what.to_string(),
                found: t.to_string(),
            }),
            None => Err(ParseError::Eof {
                pos: self.end,
                expected: what.to_string(),
            }),
        }
    }

    // iff := implies ( '<->' iff )?     right-associative
    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.implies()?;
        if self.peek() == Some(&Tok::Iff) {
            self.next();
            let rhs = self.formula()?;
            Ok(Formula::iff(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.next();
            let rhs = self.implies()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.next();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.next();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.next();
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Exists) | Some(Tok::Forall) => self.quantifier(),
            _ => self.primary(),
        }
    }

    fn quantifier(&mut self) -> Result<Formula, ParseError> {
        let kind = match self.next() {
            Some(Tok::Exists) => QuantKind::Exists,
            Some(Tok::Forall) => QuantKind::Forall,
            _ => unreachable!(),
        };
        let mut vars = vec![self.name("variable")?];
        while let Some(Tok::Name(_)) = self.peek() {
            vars.push(self.name("variable")?);
        }
        self.expect(&Tok::Dot, "`.`")?;
        let body = self.formula()?;
        Ok(Formula::Quant {
            kind,
            vars,
            body: Box::new(body),
        })
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.next();
                let f = self.formula()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Name(_)) => {
                let name = self.name("name")?;
                match self.peek() {
                    Some(Tok::LParen) => {
                        self.next();
                        let mut args = vec![self.name("variable")?];
                        while self.peek() == Some(&Tok::Comma) {
                            self.next();
                            args.push(self.name("variable")?);
                        }
                        self.expect(&Tok::RParen, "`)`")?;
                        Ok(Formula::Atom { rel: name, args })
                    }
                    Some(Tok::Eq) => {
                        self.next();
                        let rhs = self.name("variable")?;
                        Ok(Formula::Equality(name, rhs))
                    }
                    Some(Tok::Neq) => {
                        self.next();
                        let rhs = self.name("variable")?;
                        Ok(Formula::not(Formula::Equality(name, rhs)))
                    }
                    Some(Tok::Less(op)) => {
                        let op = op.clone();
                        self.next();
                        let rhs = self.name("variable")?;
                        Ok(Formula::Atom {
                            rel: op,
                            args: vec![name, rhs],
                        })
                    }
                    other => Err(match other {
                        Some(t) => ParseError::Unexpected {
                            pos: self.pos(),
                            expected: "`(`, `=`, `!=` or an order operator after a name".into(),
                            found: t.to_string(),
                        },
                        None => ParseError::Eof {
                            pos: self.end,
                            expected: "atom".into(),
                        },
                    }),
                }
            }
            Some(t) => Err(ParseError::Unexpected {
                pos: self.pos(),
                expected: "formula".into(),
                found: t.to_string(),
            }),
            None => Err(ParseError::Eof {
                pos: self.end,
                expected: "formula".into(),
            }),
        }
    }
}

/// Parses a formula. With a vocabulary given, atom arities are checked
/// against it; otherwise a vocabulary is inferred from usage (consistent
/// arities required). Unbound variables are legal; open formulas are
/// ordinary ASTs.
pub fn parse_formula(text: &str, vocab: Option<&Vocabulary>) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let end = toks
        .last()
        .map(|(_, p)| Pos {
            line: p.line,
            col: p.col + 1,
        })
        .unwrap_or(Pos { line: 1, col: 1 });
    let mut p = Parser { toks, at: 0, end };
    let f = p.formula()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::Unexpected {
            pos: p.pos(),
            expected: "end of input".into(),
            found: t.to_string(),
        });
    }
    let origin = Pos { line: 1, col: 1 };
    match vocab {
        Some(v) => f
            .check_arities(v)
            .map_err(|source| ParseError::Arity { pos: origin, source })?,
        None => {
            f.infer_vocabulary()
                .map_err(|source| ParseError::Arity { pos: origin, source })?;
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::render_formula;

    fn roundtrip(text: &str) {
        let f = parse_formula(text, None).unwrap();
        let rendered = render_formula(&f);
        let g = parse_formula(&rendered, None).unwrap();
        assert_eq!(f, g, "render `{rendered}` of `{text}` did not reparse");
    }

    #[test]
    fn parses_quantified_conjunction() {
        let f = parse_formula(
            "exists x y z. ~R(x,y,z,x,y) & ~T(y,x,z) & P(x) & Q(y)",
            None,
        )
        .unwrap();
        match &f {
            Formula::Quant { kind, vars, body } => {
                assert_eq!(*kind, QuantKind::Exists);
                assert_eq!(vars, &["x", "y", "z"]);
                assert!(body.is_quantifier_free());
            }
            other => panic!("unexpected shape {other:?}"),
        }
        roundtrip("exists x y z. ~R(x,y,z,x,y) & ~T(y,x,z) & P(x) & Q(y)");
    }

    #[test]
    fn parses_smallest_sentence() {
        let f = parse_formula("exists x. x = x", None).unwrap();
        assert_eq!(f, Formula::exists(&["x"], Formula::eq("x", "x")));
    }

    #[test]
    fn arity_mismatch_against_vocabulary() {
        let v = Vocabulary::from_pairs([("P", 1)]).unwrap();
        let err = parse_formula("P(x, y)", Some(&v)).unwrap_err();
        assert!(matches!(err, ParseError::Arity { .. }));
    }

    #[test]
    fn infix_orders_and_precedence() {
        let f = parse_formula("forall x y z. (x <1 y & y <1 z) -> x <1 z", None).unwrap();
        roundtrip("forall x y z. (x <1 y & y <1 z) -> x <1 z");
        match f {
            Formula::Quant { body, .. } => assert!(matches!(*body, Formula::Implies(..))),
            _ => panic!(),
        }
    }

    #[test]
    fn dot_binds_weakest() {
        let f = parse_formula("P(x) & (exists y . Q(y) & R2(y,x))", None).unwrap();
        // quantifier body swallows the trailing conjunct
        match f {
            Formula::And(_, r) => match *r {
                Formula::Quant { body, .. } => assert!(matches!(*body, Formula::And(..))),
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_position() {
        let err = parse_formula("exists x .\n P(x) &", None).unwrap_err();
        match err {
            ParseError::Eof { pos, .. } => assert_eq!(pos.line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn comments_are_skipped() {
        roundtrip("# header\nexists x . P(x) # tail\n& Q(x)");
    }

    #[test]
    fn nested_quantifiers_roundtrip() {
        roundtrip("exists x . forall y z . ~S(x,y) -> exists u v . T(u,v,z)");
        roundtrip("forall x . (exists y . x < y) <-> ~(exists y . y < x | x != y)");
    }
}
