//! Text syntax for formulas.
//!
//! ```text
//! formula := "true" | pred | "not" formula | formula binop formula
//!          | unop "[" int "," (int | "inf") "]" formula
//!          | formula "U" "[" int "," (int | "inf") "]" formula
//!          | "(" formula ")"
//! pred    := ident [ "(" number { "," number } ")" ]
//! binop   := "and" | "or" | "->"        unop := "G" | "F" | "H" | "O"
//! ```
//!
//! Precedence from tightest: unary, `U`, `and`, `or`, `->`. `->` is
//! right-associative, the others associate to the left.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::{Bound, Formula, Interval, PredicateTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown predicate `{name}` at {line}:{column}")]
    UnknownPredicate { name: String, line: usize, column: usize },
    #[error("invalid interval at {line}:{column}: {message}")]
    Interval { line: usize, column: usize, message: String },
}

/// Anything that can answer "is this a known predicate name?".
pub trait PredicateNames {
    fn has_predicate(&self, name: &str) -> bool;
}

impl PredicateNames for PredicateTable {
    fn has_predicate(&self, name: &str) -> bool {
        self.get(name).is_some()
    }
}

impl PredicateNames for HashSet<String> {
    fn has_predicate(&self, name: &str) -> bool {
        self.contains(name)
    }
}

impl PredicateNames for BTreeSet<String> {
    fn has_predicate(&self, name: &str) -> bool {
        self.contains(name)
    }
}

impl PredicateNames for [&str] {
    fn has_predicate(&self, name: &str) -> bool {
        self.contains(&name)
    }
}

impl<const N: usize> PredicateNames for [&str; N] {
    fn has_predicate(&self, name: &str) -> bool {
        self.contains(&name)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Arrow,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |tok, out: &mut Vec<Token>| out.push(Token { tok, line: tl, column: tc });
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let next = chars.get(i + 1).copied();
        match c {
            '[' => push(Tok::LBracket, &mut out),
            ']' => push(Tok::RBracket, &mut out),
            '(' => push(Tok::LParen, &mut out),
            ')' => push(Tok::RParen, &mut out),
            ',' => push(Tok::Comma, &mut out),
            '-' if next == Some('>') => {
                push(Tok::Arrow, &mut out);
                i += 2;
                col += 2;
                continue;
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let start = i;
                i += 1;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '-' || chars[i] == '+')
                            && matches!(chars[i - 1], 'e' | 'E')))
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                push(Tok::Number(s), &mut out);
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                push(Tok::Ident(s), &mut out);
                continue;
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

const KEYWORDS: [&str; 10] = ["true", "not", "and", "or", "inf", "G", "F", "H", "O", "U"];

struct Parser<'a, P: ?Sized> {
    toks: Vec<Token>,
    pos: usize,
    names: &'a P,
}

impl<P: PredicateNames + ?Sized> Parser<'_, P> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, tok: &Token, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { line: tok.line, column: tok.column, message: message.into() })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == want {
            Ok(t)
        } else {
            self.syntax(&t, format!("expected {what}, found {}", describe(&t.tok)))
        }
    }

    fn is_ident(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek().tok == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.is_ident("or") {
            self.bump();
            lhs = lhs.or(self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.is_ident("and") {
            self.bump();
            lhs = lhs.and(self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.is_ident("U") {
            self.bump();
            let interval = self.interval()?;
            lhs = lhs.until(interval, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::LParen => {
                let inner = self.implication()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => Ok(Formula::truth()),
                "not" => Ok(self.unary()?.not()),
                "G" | "F" | "H" | "O" => {
                    let interval = self.interval()?;
                    let inner = self.unary()?;
                    Ok(match s.as_str() {
                        "G" => Formula::always(interval, inner),
                        "F" => Formula::eventually(interval, inner),
                        "H" => Formula::historically(interval, inner),
                        _ => Formula::once(interval, inner),
                    })
                }
                kw if KEYWORDS.contains(&kw) => self.syntax(&t, format!("unexpected keyword `{kw}`")),
                name => {
                    if !self.names.has_predicate(name) {
                        return Err(ParseError::UnknownPredicate {
                            name: name.to_string(),
                            line: t.line,
                            column: t.column,
                        });
                    }
                    let args = if self.peek().tok == Tok::LParen
                        && matches!(self.toks[self.pos + 1].tok, Tok::Number(_))
                    {
                        self.args()?
                    } else {
                        Vec::new()
                    };
                    Ok(Formula::pred_with(name, args))
                }
            },
            other => self.syntax(&t, format!("expected a formula, found {}", describe(other))),
        }
    }

    fn args(&mut self) -> Result<Vec<f64>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        loop {
            let t = self.bump();
            match &t.tok {
                Tok::Number(s) => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => args.push(v),
                    _ => return self.syntax(&t, format!("invalid number `{s}`")),
                },
                other => return self.syntax(&t, format!("expected a number, found {}", describe(other))),
            }
            let sep = self.bump();
            match sep.tok {
                Tok::Comma => continue,
                Tok::RParen => return Ok(args),
                ref other => return self.syntax(&sep, format!("expected `,` or `)`, found {}", describe(other))),
            }
        }
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let open = self.expect(Tok::LBracket, "`[`")?;
        let lo = self.bound(false)?.finite().expect("lower bound is finite");
        self.expect(Tok::Comma, "`,`")?;
        let hi = self.bound(true)?;
        self.expect(Tok::RBracket, "`]`")?;
        Interval::new(lo, hi).map_err(|e| ParseError::Interval {
            line: open.line,
            column: open.column,
            message: e.to_string(),
        })
    }

    fn bound(&mut self, allow_inf: bool) -> Result<Bound, ParseError> {
        let t = self.bump();
        let bad = |message: String| ParseError::Interval { line: t.line, column: t.column, message };
        match &t.tok {
            Tok::Ident(s) if s == "inf" && allow_inf => Ok(Bound::Unbounded),
            Tok::Ident(s) if s == "inf" => Err(bad("lower bound cannot be `inf`".into())),
            Tok::Number(s) => {
                if s.starts_with('-') {
                    return Err(bad(format!("negative bound `{s}`")));
                }
                s.parse::<usize>()
                    .map(Bound::Finite)
                    .map_err(|_| bad(format!("bound `{s}` is not a whole number of timesteps")))
            }
            other => self.syntax(&t, format!("expected an interval bound, found {}", describe(other))),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(s) => format!("number `{s}`"),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses `text`, checking every predicate name against `names`.
pub fn parse_formula<P: PredicateNames + ?Sized>(text: &str, names: &P) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0, names };
    let f = parser.implication()?;
    let t = parser.peek().clone();
    if t.tok != Tok::Eof {
        return parser.syntax(&t, format!("unexpected {} after formula", describe(&t.tok)));
    }
    Ok(f)
}
