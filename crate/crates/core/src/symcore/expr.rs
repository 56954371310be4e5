use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::poly::{Atom, Kernel, Monomial, Poly, Rational};
use super::symbol::Symbol;

/// Symbolic scalar: a quotient of polynomials in chart symbols, parameters
/// and `sin`/`cos`/`exp` atoms, with exact rational coefficients.
///
/// The denominator is `1` for polynomials. Otherwise it is non-constant,
/// shares no monomial factor with the numerator, does not divide it, and
/// has leading coefficient `1` under graded lex. The value is zero exactly
/// when the numerator is the zero polynomial in its atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no value bound for symbol `{0}`")]
    Unbound(Symbol),
    #[error("evaluation produced a non-finite value")]
    NonFinite,
    #[error("division by zero during evaluation")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("division by the zero expression")]
pub struct DivisionByZero;

impl Expr {
    pub fn zero() -> Self {
        Expr {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Self {
        Expr::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn rational(p: i64, q: i64) -> Self {
        Expr::from_rational(super::poly::rat(p, q))
    }

    pub fn from_rational(c: Rational) -> Self {
        Expr {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn sym(s: Symbol) -> Self {
        Expr::from_poly(Poly::atom(Atom::Sym(s)))
    }

    pub fn param(name: &str) -> Self {
        Expr::sym(Symbol::param(name))
    }

    pub(crate) fn from_poly(p: Poly) -> Self {
        Expr {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_rational().is_some()
    }

    /// Reduce a numerator/denominator pair. `hints` are known factors of
    /// `den` worth trying to cancel.
    fn from_parts(mut num: Poly, mut den: Poly, hints: &[&Poly]) -> Expr {
        if num.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = den.as_constant() {
            return Expr::from_poly(num.scale(&c.recip()));
        }
        let g = num.content().gcd(&den.content());
        if !g.is_one() {
            num = num.div_monomial(&g);
            den = den.div_monomial(&g);
        }
        if let Some(q) = num.exact_div(&den) {
            return Expr::from_poly(q);
        }
        for h in hints {
            if h.as_constant().is_some() {
                continue;
            }
            while let (Some(dq), Some(nq)) = (den.exact_div(h), num.exact_div(h)) {
                num = nq;
                den = dq;
                if den.as_constant().is_some() {
                    break;
                }
            }
            if den.as_constant().is_some() {
                break;
            }
        }
        if let Some(c) = den.as_constant() {
            return Expr::from_poly(num.scale(&c.recip()));
        }
        let lc = den.leading_coefficient().recip();
        Expr {
            num: num.scale(&lc),
            den: den.scale(&lc),
        }
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr, DivisionByZero> {
        if other.is_zero() {
            return Err(DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Expr::zero());
        }
        if let Some(c) = other.as_rational() {
            return Ok(Expr {
                num: self.num.scale(&c.recip()),
                den: self.den.clone(),
            });
        }
        Ok(Expr::from_parts(
            self.num.mul(&other.den),
            self.den.mul(&other.num),
            &[&self.den, &other.num],
        ))
    }

    pub fn pow(&self, n: i32) -> Expr {
        if n < 0 {
            return &Expr::one() / &self.pow(-n);
        }
        let mut base = self.clone();
        let mut acc = Expr::one();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    fn kernel(k: Kernel, arg: &Expr) -> Expr {
        if arg.is_zero() {
            return match k {
                Kernel::Sin => Expr::zero(),
                Kernel::Cos | Kernel::Exp => Expr::one(),
            };
        }
        Expr::from_poly(Poly::atom(Atom::Fun(k, Box::new(arg.clone()))))
    }

    pub fn sin(&self) -> Expr {
        Expr::kernel(Kernel::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::kernel(Kernel::Cos, self)
    }

    pub fn exp(&self) -> Expr {
        Expr::kernel(Kernel::Exp, self)
    }

    /// Every symbol occurring anywhere, including inside kernel arguments.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        for a in self.num.atoms().chain(self.den.atoms()) {
            match a {
                Atom::Sym(s) => {
                    out.insert(s.clone());
                }
                Atom::Fun(_, e) => e.collect_symbols(out),
            }
        }
    }

    pub fn depends_on(&self, s: &Symbol) -> bool {
        self.num
            .atoms()
            .chain(self.den.atoms())
            .any(|a| atom_depends_on(a, s))
    }

    pub fn has_kernels(&self) -> bool {
        self.num
            .atoms()
            .chain(self.den.atoms())
            .any(|a| matches!(a, Atom::Fun(..)))
    }

    /// Exact partial derivative with respect to `s`.
    pub fn diff(&self, s: &Symbol) -> Expr {
        if !self.depends_on(s) {
            return Expr::zero();
        }
        let dn = poly_diff(&self.num, s);
        if self.den.is_one() {
            return dn;
        }
        let dd = poly_diff(&self.den, s);
        let den = Expr::from_poly(self.den.clone());
        let top = &(&dn * &den) - &(&Expr::from_poly(self.num.clone()) * &dd);
        let once = top.checked_div(&den).expect("nonzero denominator");
        once.checked_div(&den).expect("nonzero denominator")
    }

    /// Replace symbols by expressions, simultaneously.
    pub fn subs(&self, map: &BTreeMap<Symbol, Expr>) -> Expr {
        if map.is_empty() || !map.keys().any(|s| self.depends_on(s)) {
            return self.clone();
        }
        let num = poly_subs(&self.num, map);
        if self.den.is_one() {
            return num;
        }
        let den = poly_subs(&self.den, map);
        num.checked_div(&den)
            .expect("substitution made a denominator vanish identically")
    }

    pub fn subs_one(&self, s: &Symbol, value: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        map.insert(s.clone(), value.clone());
        self.subs(&map)
    }

    /// Floating-point evaluation.
    pub fn eval_f64(&self, env: &dyn Fn(&Symbol) -> Option<f64>) -> Result<f64, EvalError> {
        let n = eval_poly_f64(&self.num, env)?;
        let value = if self.den.is_one() {
            n
        } else {
            let d = eval_poly_f64(&self.den, env)?;
            if d == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            n / d
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    pub fn eval_map(&self, point: &BTreeMap<Symbol, f64>) -> Result<f64, EvalError> {
        self.eval_f64(&|s| point.get(s).copied())
    }

    /// Exact rational evaluation; `None` for kernels, unbound symbols or a
    /// vanishing denominator.
    pub fn eval_exact(&self, env: &dyn Fn(&Symbol) -> Option<Rational>) -> Option<Rational> {
        let n = eval_poly_exact(&self.num, env)?;
        if self.den.is_one() {
            return Some(n);
        }
        let d = eval_poly_exact(&self.den, env)?;
        if d.is_zero() {
            None
        } else {
            Some(n / d)
        }
    }

    /// Degree of the numerator in `s`; kernels depending on `s` count as
    /// unbounded (`None`).
    pub fn degree_in(&self, s: &Symbol) -> Option<u32> {
        if !self.den.is_one() && self.den.atoms().any(|a| atom_depends_on(a, s)) {
            return None;
        }
        let mut best = 0;
        for (m, _) in self.num.terms() {
            for (a, e) in m.factors() {
                match a {
                    Atom::Sym(t) if t == s => best = best.max(*e),
                    Atom::Sym(_) => {}
                    Atom::Fun(_, arg) => {
                        if arg.depends_on(s) {
                            return None;
                        }
                    }
                }
            }
        }
        Some(best)
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.as_rational().and_then(|r| r.to_f64())
    }
}

fn atom_depends_on(a: &Atom, s: &Symbol) -> bool {
    match a {
        Atom::Sym(t) => t == s,
        Atom::Fun(_, e) => e.depends_on(s),
    }
}

fn atom_diff(a: &Atom, s: &Symbol) -> Expr {
    match a {
        Atom::Sym(t) => {
            if t == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Fun(k, arg) => {
            let du = arg.diff(s);
            if du.is_zero() {
                return Expr::zero();
            }
            let outer = match k {
                Kernel::Sin => arg.cos(),
                Kernel::Cos => -arg.sin(),
                Kernel::Exp => arg.exp(),
            };
            &outer * &du
        }
    }
}

fn poly_diff(p: &Poly, s: &Symbol) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in p.terms() {
        let factors = m.factors();
        for (i, (a, e)) in factors.iter().enumerate() {
            let da = atom_diff(a, s);
            if da.is_zero() {
                continue;
            }
            let mut rest = Monomial::one();
            for (j, (b, f)) in factors.iter().enumerate() {
                let exp = if i == j { f - 1 } else { *f };
                for _ in 0..exp {
                    rest = rest.mul(&Monomial::atom(b.clone()));
                }
            }
            let coeff = c * Rational::from_integer(BigInt::from(*e));
            let term = Expr::from_poly(Poly::monomial(rest, coeff));
            acc = &acc + &(&term * &da);
        }
    }
    acc
}

fn atom_subs(a: &Atom, map: &BTreeMap<Symbol, Expr>) -> Expr {
    match a {
        Atom::Sym(s) => map.get(s).cloned().unwrap_or_else(|| Expr::sym(s.clone())),
        Atom::Fun(k, arg) => Expr::kernel(*k, &arg.subs(map)),
    }
}

fn poly_subs(p: &Poly, map: &BTreeMap<Symbol, Expr>) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in p.terms() {
        let mut term = Expr::from_rational(c.clone());
        for (a, e) in m.factors() {
            term = &term * &atom_subs(a, map).pow(*e as i32);
        }
        acc = &acc + &term;
    }
    acc
}

fn eval_atom_f64(a: &Atom, env: &dyn Fn(&Symbol) -> Option<f64>) -> Result<f64, EvalError> {
    match a {
        Atom::Sym(s) => env(s).ok_or_else(|| EvalError::Unbound(s.clone())),
        Atom::Fun(k, arg) => Ok(k.apply_f64(arg.eval_f64(env)?)),
    }
}

fn eval_poly_f64(p: &Poly, env: &dyn Fn(&Symbol) -> Option<f64>) -> Result<f64, EvalError> {
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        let mut t = c.to_f64().unwrap_or(f64::NAN);
        for (a, e) in m.factors() {
            t *= eval_atom_f64(a, env)?.powi(*e as i32);
        }
        acc += t;
    }
    Ok(acc)
}

fn eval_poly_exact(p: &Poly, env: &dyn Fn(&Symbol) -> Option<Rational>) -> Option<Rational> {
    let mut acc = Rational::zero();
    for (m, c) in p.terms() {
        let mut t = c.clone();
        for (a, e) in m.factors() {
            let Atom::Sym(s) = a else {
                return None;
            };
            let v = env(s)?;
            t *= num_traits::pow(v, *e as usize);
        }
        acc += t;
    }
    Some(acc)
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::sym(s)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            if self.den.is_one() {
                return Expr::from_poly(self.num.add(&rhs.num));
            }
            return Expr::from_parts(self.num.add(&rhs.num), self.den.clone(), &[]);
        }
        Expr::from_parts(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
            &[&self.den, &rhs.den],
        )
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return Expr::from_poly(self.num.mul(&rhs.num));
        }
        Expr::from_parts(
            self.num.mul(&rhs.num),
            self.den.mul(&rhs.den),
            &[&self.den, &rhs.den],
        )
    }
}

impl Div for &Expr {
    type Output = Expr;
    /// Panics on division by the zero expression; see [`Expr::checked_div`].
    fn div(self, rhs: &Expr) -> Expr {
        self.checked_div(rhs).expect("division by the zero expression")
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| &a + &b)
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}
