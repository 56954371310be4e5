//! Infix expression grammar and canonical printing.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' ['-'] INT | '^' '(' ['-'] INT ')')?
//! atom   := INT | NAME | ('sin' | 'cos' | 'exp') '(' expr ')' | '(' expr ')'
//! ```
//!
//! Coordinate names are `x<μ>`, `y<A>`, `v<A>_<μ>`, `p<A>_<μ>` and
//! `w<A>_<μ>_<ν>`, one-based. Any other name must be a declared parameter.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::expr::Expr;
use super::poly::{Atom, Monomial, Poly, Rational};
use super::symbol::{ChartSpec, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown symbol `{name}` at position {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("division by zero at position {pos}")]
    DivisionByZero { pos: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownSymbol { pos, .. }
            | ParseError::DivisionByZero { pos } => *pos,
        }
    }
}

/// Parse `text` on `chart`, with `params` as the declared parameter names.
pub fn parse(text: &str, chart: &ChartSpec, params: &BTreeSet<String>) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        chart,
        params,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Parse with no declared parameters.
pub fn parse_expr(text: &str, chart: &ChartSpec) -> Result<Expr, ParseError> {
    parse(text, chart, &BTreeSet::new())
}

/// Resolve a coordinate name against the chart.
pub fn coordinate_from_name(name: &str, chart: &ChartSpec) -> Option<Symbol> {
    let (head, rest) = name.split_at(1);
    let idx: Vec<usize> = rest
        .split('_')
        .map(|s| {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || s.starts_with('0') {
                None
            } else {
                s.parse::<usize>().ok()
            }
        })
        .collect::<Option<Vec<_>>>()?;
    let sym = match (head, idx.as_slice()) {
        ("x", [mu]) => Symbol::x(mu - 1),
        ("y", [a]) => Symbol::y(a - 1),
        ("v", [a, mu]) => Symbol::v(a - 1, mu - 1),
        ("p", [a, mu]) => Symbol::p(a - 1, mu - 1),
        ("w", [a, mu, nu]) => Symbol::w(a - 1, mu - 1, nu - 1),
        _ => return None,
    };
    chart.contains(&sym).then_some(sym)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    chart: &'a ChartSpec,
    params: &'a BTreeSet<String>,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = &acc * &self.unary()?;
            } else if self.peek() == Some(b'/') {
                let at = self.pos;
                self.pos += 1;
                let rhs = self.unary()?;
                acc = acc
                    .checked_div(&rhs)
                    .map_err(|_| ParseError::DivisionByZero { pos: at })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(-self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        let digits = self.digits();
        if digits.is_empty() {
            return Err(self.error("exponent must be an integer literal"));
        }
        let n: i32 = digits.parse().map_err(|_| ParseError::Syntax {
            pos: start,
            message: "exponent out of range".into(),
        })?;
        if paren && !self.eat(b')') {
            return Err(self.error("expected `)` after exponent"));
        }
        let n = if neg { -n } else { n };
        if n < 0 && base.is_zero() {
            return Err(ParseError::DivisionByZero { pos: start });
        }
        Ok(base.pow(n))
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let d = self.digits();
                if self.peek() == Some(b'.') {
                    return Err(self.error("decimal literals are not supported; use p/q"));
                }
                let n: BigInt = d.parse().expect("digit string");
                Ok(Expr::from_rational(Rational::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if matches!(name, "sin" | "cos" | "exp") && self.peek() == Some(b'(') {
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error("expected `)` after function argument"));
                    }
                    return Ok(match name {
                        "sin" => arg.sin(),
                        "cos" => arg.cos(),
                        _ => arg.exp(),
                    });
                }
                if let Some(sym) = coordinate_from_name(name, self.chart) {
                    return Ok(Expr::sym(sym));
                }
                if self.params.contains(name) {
                    return Ok(Expr::param(name));
                }
                Err(ParseError::UnknownSymbol {
                    name: name.to_string(),
                    pos: start,
                })
            }
            Some(c) => Err(self.error(&format!("unexpected character `{}`", c as char))),
        }
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, a: &Atom) -> fmt::Result {
    match a {
        Atom::Sym(s) => write!(f, "{s}"),
        Atom::Fun(k, arg) => write!(f, "{}({})", k.name(), arg),
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, m: &Monomial) -> fmt::Result {
    for (i, (a, e)) in m.factors().iter().enumerate() {
        if i > 0 {
            f.write_str("*")?;
        }
        write_atom(f, a)?;
        if *e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

fn write_rational(f: &mut fmt::Formatter<'_>, c: &Rational) -> fmt::Result {
    if c.denom().is_one() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

fn write_poly(f: &mut fmt::Formatter<'_>, p: &Poly) -> fmt::Result {
    if p.is_zero() {
        return f.write_str("0");
    }
    for (i, (m, c)) in p.terms().enumerate() {
        let mag = c.abs();
        if i == 0 {
            if c.is_negative() {
                f.write_str("-")?;
            }
        } else if c.is_negative() {
            f.write_str(" - ")?;
        } else {
            f.write_str(" + ")?;
        }
        if m.is_one() {
            write_rational(f, &mag)?;
        } else {
            if !mag.is_one() {
                write_rational(f, &mag)?;
                f.write_str("*")?;
            }
            write_monomial(f, m)?;
        }
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write_poly(f, self.numerator())
        } else {
            f.write_str("(")?;
            write_poly(f, self.numerator())?;
            f.write_str(")/(")?;
            write_poly(f, self.denominator())?;
            f.write_str(")")
        }
    }
}
