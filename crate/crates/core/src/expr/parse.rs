//! Expression text format.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' exponent)?
//! exponent := INT | '(' '-'? INT ('/' INT)? ')'
//! primary  := INT | '(' expr ')' | call | IDENT
//! call     := 'exp' '(' expr ')'
//!           | 'sqrt' '(' expr ')'
//!           | IDENT '[' INT (',' INT)* ']' '(' args ')'
//!           | IDENT PRIME* '(' args ')'
//! args     := (expr (',' expr)*)?
//! ```
//!
//! `u'(z)` and `u''(z)` abbreviate first and second derivative jets of a
//! one-argument symbol; `u[1,0](a,b)` is the general form. A bare identifier
//! is a coordinate. The printed form of every expression re-parses to an
//! equal expression.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::One;

use crate::Rat;
use super::{Expr, ExprError};

/// Parse tree kept deliberately naive: evaluating it term-by-term gives an
/// arithmetic route independent of canonical normalization.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RawExpr {
    Num(Rat),
    Coord(String),
    Add(Box<RawExpr>, Box<RawExpr>),
    Sub(Box<RawExpr>, Box<RawExpr>),
    Mul(Box<RawExpr>, Box<RawExpr>),
    Div(Box<RawExpr>, Box<RawExpr>),
    Neg(Box<RawExpr>),
    Pow(Box<RawExpr>, Rat),
    Jet { name: String, orders: Vec<u32>, args: Vec<RawExpr> },
    Exp(Box<RawExpr>),
    Sqrt(Box<RawExpr>),
}

impl RawExpr {
    /// Canonicalizes via ordinary expression arithmetic.
    pub fn to_expr(&self) -> Result<Expr, ExprError> {
        match self {
            RawExpr::Num(c) => Ok(Expr::from_rat(c.clone())),
            RawExpr::Coord(c) => Ok(Expr::coord(c)),
            RawExpr::Add(a, b) => Ok(a.to_expr()?.add(&b.to_expr()?)),
            RawExpr::Sub(a, b) => Ok(a.to_expr()?.sub(&b.to_expr()?)),
            RawExpr::Mul(a, b) => Ok(a.to_expr()?.mul(&b.to_expr()?)),
            RawExpr::Div(a, b) => a.to_expr()?.div(&b.to_expr()?),
            RawExpr::Neg(a) => Ok(a.to_expr()?.neg()),
            RawExpr::Pow(a, e) => a.to_expr()?.pow_rat(e),
            RawExpr::Jet { name, orders, args } => {
                let xs = args.iter().map(|a| a.to_expr()).collect::<Result<Vec<_>, _>>()?;
                Ok(Expr::jet(name, orders.clone(), xs))
            }
            RawExpr::Exp(a) => Ok(Expr::exp(a.to_expr()?)),
            RawExpr::Sqrt(a) => a.to_expr()?.sqrt(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Prime,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            b'-' => {
                toks.push((i, Tok::Minus));
                i += 1;
            }
            b'*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            b'/' => {
                toks.push((i, Tok::Slash));
                i += 1;
            }
            b'^' => {
                toks.push((i, Tok::Caret));
                i += 1;
            }
            b'(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            b'[' => {
                toks.push((i, Tok::LBracket));
                i += 1;
            }
            b']' => {
                toks.push((i, Tok::RBracket));
                i += 1;
            }
            b',' => {
                toks.push((i, Tok::Comma));
                i += 1;
            }
            b'\'' => {
                toks.push((i, Tok::Prime));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                let n = text
                    .parse::<BigInt>()
                    .map_err(|_| ExprError::Unsupported(format!("bad number at byte {start}")))?;
                toks.push((start, Tok::Num(n)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(src[start..i].to_owned())));
            }
            _ => {
                return Err(ExprError::Unsupported(format!(
                    "unexpected character {:?} at byte {i}",
                    b as char
                )))
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(at, _)| *at)
            .unwrap_or_else(|| self.toks.last().map(|(at, _)| at + 1).unwrap_or(0))
    }

    fn fail<T>(&self, what: &str) -> Result<T, ExprError> {
        Err(ExprError::Unsupported(format!("{what} at byte {}", self.here())))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(what)
        }
    }

    fn expr(&mut self) -> Result<RawExpr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = RawExpr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = RawExpr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RawExpr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = RawExpr::Mul(Box::new(acc), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    acc = RawExpr::Div(Box::new(acc), Box::new(self.unary()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RawExpr, ExprError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(RawExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<RawExpr, ExprError> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let e = self.exponent()?;
            return Ok(RawExpr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Rat, ExprError> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(Rat::from_integer(n)),
            Some(Tok::LParen) => {
                let neg = if self.peek() == Some(&Tok::Minus) {
                    self.pos += 1;
                    true
                } else {
                    false
                };
                let num = match self.next() {
                    Some(Tok::Num(n)) => n,
                    _ => return self.fail("expected integer in exponent"),
                };
                let den = if self.peek() == Some(&Tok::Slash) {
                    self.pos += 1;
                    match self.next() {
                        Some(Tok::Num(n)) => n,
                        _ => return self.fail("expected denominator in exponent"),
                    }
                } else {
                    BigInt::one()
                };
                self.expect(Tok::RParen, "expected ')' after exponent")?;
                let r = Rat::new(num, den);
                Ok(if neg { -r } else { r })
            }
            _ => self.fail("expected exponent"),
        }
    }

    fn args(&mut self) -> Result<Vec<RawExpr>, ExprError> {
        self.expect(Tok::LParen, "expected '('")?;
        let mut out = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => return Ok(out),
                _ => return self.fail("expected ',' or ')' in argument list"),
            }
        }
    }

    fn primary(&mut self) -> Result<RawExpr, ExprError> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(RawExpr::Num(Rat::from_integer(n))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "expected ')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if name == "exp" && self.peek() == Some(&Tok::LParen) {
                    let mut xs = self.args()?;
                    if xs.len() != 1 {
                        return self.fail("exp takes one argument");
                    }
                    return Ok(RawExpr::Exp(Box::new(xs.remove(0))));
                }
                if name == "sqrt" && self.peek() == Some(&Tok::LParen) {
                    let mut xs = self.args()?;
                    if xs.len() != 1 {
                        return self.fail("sqrt takes one argument");
                    }
                    return Ok(RawExpr::Sqrt(Box::new(xs.remove(0))));
                }
                match self.peek() {
                    Some(Tok::LBracket) => {
                        self.pos += 1;
                        let mut orders = Vec::new();
                        loop {
                            match self.next() {
                                Some(Tok::Num(n)) => {
                                    let o = u32::try_from(n.clone()).map_err(|_| {
                                        ExprError::Unsupported("jet order too large".into())
                                    })?;
                                    orders.push(o);
                                }
                                _ => return self.fail("expected jet order"),
                            }
                            match self.next() {
                                Some(Tok::Comma) => continue,
                                Some(Tok::RBracket) => break,
                                _ => return self.fail("expected ',' or ']'"),
                            }
                        }
                        let args = self.args()?;
                        if args.len() != orders.len() {
                            return self.fail("jet orders and arguments disagree");
                        }
                        Ok(RawExpr::Jet { name, orders, args })
                    }
                    Some(Tok::Prime) => {
                        let mut order = 0u32;
                        while self.peek() == Some(&Tok::Prime) {
                            self.pos += 1;
                            order += 1;
                        }
                        let args = self.args()?;
                        if args.len() != 1 {
                            return self.fail("primed symbol takes one argument");
                        }
                        Ok(RawExpr::Jet { name, orders: alloc::vec![order], args })
                    }
                    Some(Tok::LParen) => {
                        let args = self.args()?;
                        let orders = alloc::vec![0; args.len()];
                        Ok(RawExpr::Jet { name, orders, args })
                    }
                    _ => Ok(RawExpr::Coord(name)),
                }
            }
            _ => self.fail("expected expression"),
        }
    }
}

/// Parses the textual format into the raw tree.
pub fn parse(src: &str) -> Result<RawExpr, ExprError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.fail("trailing input");
    }
    Ok(e)
}

/// Parses and canonicalizes in one step.
pub fn parse_expr(src: &str) -> Result<Expr, ExprError> {
    parse(src)?.to_expr()
}
