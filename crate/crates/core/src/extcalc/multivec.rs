use std::collections::BTreeMap;
use std::fmt;

use super::form::{write_terms, DiffForm};
use super::{sort_with_sign, ExtError, Space};
use crate::symcore::{Coord, Expr, Symbol};

/// A vector field `Σ X^z ∂/∂z`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    space: Space,
    comps: BTreeMap<Coord, Expr>,
}

impl VectorField {
    pub fn zero(space: Space) -> Self {
        VectorField {
            space,
            comps: BTreeMap::new(),
        }
    }

    /// `∂/∂z`.
    pub fn coordinate(space: Space, z: Symbol) -> Result<Self, ExtError> {
        let mut out = VectorField::zero(space);
        out.set(z, Expr::one())?;
        Ok(out)
    }

    pub fn from_components(
        space: Space,
        comps: impl IntoIterator<Item = (Symbol, Expr)>,
    ) -> Result<Self, ExtError> {
        let mut out = VectorField::zero(space);
        for (z, c) in comps {
            let prev = out.component(&z);
            out.set(z, &prev + &c)?;
        }
        Ok(out)
    }

    pub fn set(&mut self, z: Symbol, c: Expr) -> Result<(), ExtError> {
        if !self.space.contains(&z) {
            return Err(ExtError::NotACoordinate(z));
        }
        if c.is_zero() {
            self.comps.remove(&Coord(z));
        } else {
            self.comps.insert(Coord(z), c);
        }
        Ok(())
    }

    pub fn component(&self, z: &Symbol) -> Expr {
        self.comps.get(&Coord(z.clone())).cloned().unwrap_or_default()
    }

    pub fn components(&self) -> impl Iterator<Item = (&Symbol, &Expr)> {
        self.comps.iter().map(|(k, v)| (&k.0, v))
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.comps.iter().map(|(z, c)| c * &f.diff(&z.0)).sum()
    }

    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        let mut out = VectorField::zero(self.space);
        for (z, c) in &self.comps {
            let v = f(c);
            if !v.is_zero() {
                out.comps.insert(z.clone(), v);
            }
        }
        out
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: BTreeMap<Vec<Coord>, Expr> = self
            .comps
            .iter()
            .map(|(z, c)| (vec![z.clone()], c.clone()))
            .collect();
        write_terms(f, &terms, "d/d")
    }
}

/// A multivector field of degree `k`, stored in the basis
/// `∂/∂z_1 ∧ ⋯ ∧ ∂/∂z_k`. When built with [`decomposable`] the factor
/// list is kept as well.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVec {
    space: Space,
    degree: usize,
    terms: BTreeMap<Vec<Coord>, Expr>,
    factors: Option<Vec<VectorField>>,
}

impl MultiVec {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn factors(&self) -> Option<&[VectorField]> {
        self.factors.as_deref()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Coord>, &Expr)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient on `∂z_1 ∧ ⋯ ∧ ∂z_k` (coordinates in any order).
    pub fn coefficient(&self, coords: &[Symbol]) -> Expr {
        let key = coords.iter().cloned().map(Coord).collect();
        match sort_with_sign(key) {
            None => Expr::zero(),
            Some((key, neg)) => {
                let c = self.terms.get(&key).cloned().unwrap_or_default();
                if neg {
                    -c
                } else {
                    c
                }
            }
        }
    }

    /// `f X`. The factor list, if any, carries `f` on its first factor.
    pub fn scale(&self, f: &Expr) -> MultiVec {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let v = c * f;
            if !v.is_zero() {
                terms.insert(k.clone(), v);
            }
        }
        let factors = self.factors.as_ref().map(|fs| {
            let mut fs = fs.clone();
            if let Some(first) = fs.first_mut() {
                *first = first.map_coefficients(|c| c * f);
            }
            fs
        });
        MultiVec {
            space: self.space,
            degree: self.degree,
            terms,
            factors,
        }
    }
}

impl fmt::Display for MultiVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, &self.terms, "d/d")
    }
}

/// `X_1 ∧ ⋯ ∧ X_k`, expanded in the coordinate basis.
pub fn decomposable(factors: &[VectorField]) -> Result<MultiVec, ExtError> {
    let space = match factors.first() {
        Some(x) => x.space,
        None => panic!("decomposable multivector needs at least one factor"),
    };
    if factors.iter().any(|x| x.space != space) {
        return Err(ExtError::SpaceMismatch);
    }
    let mut acc: BTreeMap<Vec<Coord>, Expr> = BTreeMap::new();
    acc.insert(Vec::new(), Expr::one());
    for x in factors {
        let mut next: BTreeMap<Vec<Coord>, Expr> = BTreeMap::new();
        for (key, c) in &acc {
            for (z, xc) in &x.comps {
                let mut k = key.clone();
                k.push(z.clone());
                if let Some((k, neg)) = sort_with_sign(k) {
                    let v = c * xc;
                    let v = if neg { -v } else { v };
                    let e = next.entry(k).or_default();
                    *e = &*e + &v;
                }
            }
        }
        next.retain(|_, c| !c.is_zero());
        acc = next;
    }
    Ok(MultiVec {
        space,
        degree: factors.len(),
        terms: acc,
        factors: Some(factors.to_vec()),
    })
}

/// Interior product `i(X)ω`.
pub fn insert(x: &VectorField, form: &DiffForm) -> DiffForm {
    assert_eq!(x.space, form.space(), "insertion across spaces");
    let degree = form.degree().saturating_sub(1);
    let mut out = DiffForm::zero(form.space(), degree);
    for (key, c) in form.terms() {
        for (j, z) in key.iter().enumerate() {
            let xc = x.comps.get(z);
            let Some(xc) = xc else { continue };
            let mut rest = key.clone();
            rest.remove(j);
            let v = xc * c;
            out.add_term(rest, if j % 2 == 1 { -v } else { v });
        }
    }
    out
}

fn insert_basis(z: &Coord, form: &DiffForm) -> DiffForm {
    let mut out = DiffForm::zero(form.space(), form.degree().saturating_sub(1));
    for (key, c) in form.terms() {
        if let Some(j) = key.iter().position(|b| b == z) {
            let mut rest = key.clone();
            rest.remove(j);
            out.add_term(rest, if j % 2 == 1 { -c.clone() } else { c.clone() });
        }
    }
    out
}

/// `i(X_1 ∧ ⋯ ∧ X_k)ω = i(X_k) ⋯ i(X_1) ω`.
///
/// Uses the factor list when one is present and the basis expansion
/// otherwise; [`contract_basis`] forces the latter.
pub fn contract(mv: &MultiVec, form: &DiffForm) -> Result<DiffForm, ExtError> {
    check_degrees(mv, form)?;
    match &mv.factors {
        Some(fs) => Ok(fs.iter().fold(form.clone(), |acc, x| insert(x, &acc))),
        None => contract_basis(mv, form),
    }
}

/// Contraction through the coordinate expansion of `mv`.
pub fn contract_basis(mv: &MultiVec, form: &DiffForm) -> Result<DiffForm, ExtError> {
    check_degrees(mv, form)?;
    let mut out = DiffForm::zero(form.space(), form.degree() - mv.degree);
    for (key, c) in &mv.terms {
        let piece = key.iter().fold(form.clone(), |acc, z| insert_basis(z, &acc));
        out = out.add(&piece.scale(c));
    }
    Ok(out)
}

fn check_degrees(mv: &MultiVec, form: &DiffForm) -> Result<(), ExtError> {
    if mv.space != form.space() {
        return Err(ExtError::SpaceMismatch);
    }
    if mv.degree > form.degree() {
        return Err(ExtError::DegreeMismatch {
            mv: mv.degree,
            form: form.degree(),
        });
    }
    Ok(())
}
