use num_traits::ToPrimitive;

use super::expr::{EvalError, Expr};
use super::poly::{Atom, Kernel, Poly};
use super::symbol::Symbol;

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Kernel(Kernel, Box<Compiled>),
}

#[derive(Debug, Clone)]
struct Term {
    coeff: f64,
    factors: Vec<(Node, i32)>,
}

/// An expression lowered to `f64` arithmetic over a slot vector, for
/// evaluation at many grid nodes.
#[derive(Debug, Clone)]
pub struct Compiled {
    num: Vec<Term>,
    den: Option<Vec<Term>>,
}

impl Compiled {
    /// Lower `e`, mapping each symbol to a slot index with `slot`.
    pub fn new(e: &Expr, slot: &dyn Fn(&Symbol) -> Option<usize>) -> Result<Self, EvalError> {
        let num = lower_poly(e.numerator(), slot)?;
        let den = if e.is_polynomial() {
            None
        } else {
            Some(lower_poly(e.denominator(), slot)?)
        };
        Ok(Compiled { num, den })
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        let n = eval_terms(&self.num, values);
        match &self.den {
            None => n,
            Some(d) => n / eval_terms(d, values),
        }
    }
}

fn lower_poly(p: &Poly, slot: &dyn Fn(&Symbol) -> Option<usize>) -> Result<Vec<Term>, EvalError> {
    p.terms()
        .map(|(m, c)| {
            let factors = m
                .factors()
                .iter()
                .map(|(a, e)| {
                    let node = match a {
                        Atom::Sym(s) => Node::Slot(slot(s).ok_or_else(|| EvalError::Unbound(s.clone()))?),
                        Atom::Fun(k, arg) => {
                            let inner = Compiled::new(arg, slot)?;
                            match arg.to_f64() {
                                Some(v) => Node::Const(k.apply_f64(v)),
                                None => Node::Kernel(*k, Box::new(inner)),
                            }
                        }
                    };
                    Ok((node, *e as i32))
                })
                .collect::<Result<Vec<_>, EvalError>>()?;
            Ok(Term {
                coeff: c.to_f64().unwrap_or(f64::NAN),
                factors,
            })
        })
        .collect()
}

fn eval_terms(terms: &[Term], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for t in terms {
        let mut v = t.coeff;
        for (node, e) in &t.factors {
            let base = match node {
                Node::Const(c) => *c,
                Node::Slot(i) => values[*i],
                Node::Kernel(k, inner) => k.apply_f64(inner.eval(values)),
            };
            v *= if *e == 1 { base } else { base.powi(*e) };
        }
        acc += v;
    }
    acc
}
