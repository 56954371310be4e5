use std::collections::BTreeMap;
use std::fmt;

use super::{sort_with_sign, ExtError, Space};
use crate::symcore::{Coord, Expr, Symbol};

/// An exterior form of fixed degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffForm {
    space: Space,
    degree: usize,
    terms: BTreeMap<Vec<Coord>, Expr>,
}

impl DiffForm {
    pub fn zero(space: Space, degree: usize) -> Self {
        DiffForm {
            space,
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(space: Space, f: Expr) -> Self {
        let mut out = DiffForm::zero(space, 0);
        out.add_term(Vec::new(), f);
        out
    }

    /// `dz` for a coordinate `z` of the space.
    pub fn differential(space: Space, z: Symbol) -> Result<Self, ExtError> {
        if !space.contains(&z) {
            return Err(ExtError::NotACoordinate(z));
        }
        let mut out = DiffForm::zero(space, 1);
        out.add_term(vec![Coord(z)], Expr::one());
        Ok(out)
    }

    /// `f dz_1 ∧ ⋯ ∧ dz_k`, in any order of the `z`.
    pub fn monomial(space: Space, coeff: Expr, coords: &[Symbol]) -> Result<Self, ExtError> {
        if let Some(z) = coords.iter().find(|z| !space.contains(z)) {
            return Err(ExtError::NotACoordinate(z.clone()));
        }
        let mut out = DiffForm::zero(space, coords.len());
        let key = coords.iter().cloned().map(Coord).collect();
        if let Some((key, neg)) = sort_with_sign(key) {
            out.add_term(key, if neg { -coeff } else { coeff });
        }
        Ok(out)
    }

    /// Base volume form `dx1 ∧ ⋯ ∧ dxm`.
    pub fn volume(space: Space) -> Self {
        let coords = space.chart.base();
        DiffForm::monomial(space, Expr::one(), &coords).expect("base coordinates")
    }

    /// `d^{m-1}x_μ`, defined as the insertion of `∂/∂x^μ` into the volume.
    pub fn base_minor(space: Space, mu: usize) -> Self {
        let dx = super::VectorField::coordinate(space, Symbol::x(mu)).expect("base coordinate");
        super::insert(&dx, &DiffForm::volume(space))
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Coord>, &Expr)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient on `dz_1 ∧ ⋯ ∧ dz_k` (coordinates in any order).
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

    pub(crate) fn add_term(&mut self, key: Vec<Coord>, c: Expr) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&key) {
            Some(prev) => &prev + &c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(key, sum);
        }
    }

    pub fn add(&self, other: &DiffForm) -> DiffForm {
        assert_eq!(self.space, other.space, "forms on different spaces");
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> DiffForm {
        self.scale(&Expr::int(-1))
    }

    pub fn sub(&self, other: &DiffForm) -> DiffForm {
        self.add(&other.neg())
    }

    pub fn scale(&self, f: &Expr) -> DiffForm {
        let mut out = DiffForm::zero(self.space, self.degree);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * f);
        }
        out
    }

    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> DiffForm {
        let mut out = DiffForm::zero(self.space, self.degree);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), f(c));
        }
        out
    }
}

/// Exterior product. Graded commutative:
/// `a ∧ b = (−1)^{deg a · deg b} b ∧ a`.
pub fn wedge(a: &DiffForm, b: &DiffForm) -> Result<DiffForm, ExtError> {
    if a.space != b.space {
        return Err(ExtError::SpaceMismatch);
    }
    let dim = a.space.dim();
    if a.degree + b.degree > dim {
        return Err(ExtError::DegreeOverflow {
            left: a.degree,
            right: b.degree,
            dim,
        });
    }
    let mut out = DiffForm::zero(a.space, a.degree + b.degree);
    for (ka, ca) in &a.terms {
        for (kb, cb) in &b.terms {
            let mut key = ka.clone();
            key.extend(kb.iter().cloned());
            if let Some((key, neg)) = sort_with_sign(key) {
                let c = ca * cb;
                out.add_term(key, if neg { -c } else { c });
            }
        }
    }
    Ok(out)
}

/// Exterior derivative over the coordinates of the form's space.
/// Parameters are constants.
pub fn ext_d(form: &DiffForm) -> DiffForm {
    let coords = form.space.coords();
    let mut out = DiffForm::zero(form.space, form.degree + 1);
    for (key, c) in &form.terms {
        for z in &coords {
            let dc = c.diff(z);
            if dc.is_zero() {
                continue;
            }
            let mut k = Vec::with_capacity(key.len() + 1);
            k.push(Coord(z.clone()));
            k.extend(key.iter().cloned());
            if let Some((k, neg)) = sort_with_sign(k) {
                out.add_term(k, if neg { -dc } else { dc });
            }
        }
    }
    out
}

pub(crate) fn write_terms(
    f: &mut fmt::Formatter<'_>,
    terms: &BTreeMap<Vec<Coord>, Expr>,
    prefix: &str,
) -> fmt::Result {
    if terms.is_empty() {
        return f.write_str("0");
    }
    for (i, (k, c)) in terms.iter().enumerate() {
        if i > 0 {
            f.write_str(" + ")?;
        }
        write!(f, "({c})")?;
        for (j, z) in k.iter().enumerate() {
            f.write_str(if j == 0 { " " } else { "^" })?;
            write!(f, "{prefix}{z}")?;
        }
    }
    Ok(())
}

impl fmt::Display for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, &self.terms, "d")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{parse_expr, ChartSpec};

    fn jet(m: usize, n: usize) -> Space {
        Space::jet(ChartSpec::new(m, n).unwrap())
    }

    #[test]
    fn dy_wedge_volume() {
        let s = jet(2, 1);
        let dy = DiffForm::differential(s, Symbol::y(0)).unwrap();
        let w = wedge(&dy, &DiffForm::volume(s)).unwrap();
        assert_eq!(w.to_string(), "(1) dy1^dx1^dx2");
        let neg = DiffForm::monomial(s, -Expr::sym(Symbol::y(0)), &[Symbol::y(0), Symbol::x(0), Symbol::x(1)]).unwrap();
        assert_eq!(neg.to_string(), "(-y1) dy1^dx1^dx2");
    }

    #[test]
    fn repeated_differential_vanishes() {
        let s = jet(2, 1);
        let dx = DiffForm::differential(s, Symbol::x(0)).unwrap();
        assert!(wedge(&dx, &dx).unwrap().is_zero());
    }

    #[test]
    fn momentum_wedge_base_minor() {
        let s = Space::multimomentum(ChartSpec::new(2, 1).unwrap());
        let p = Expr::sym(Symbol::p(0, 0));
        let a = DiffForm::differential(s, Symbol::y(0)).unwrap().scale(&p);
        let minor = DiffForm::base_minor(s, 0);
        assert_eq!(minor.to_string(), "(1) dx2");
        let w = wedge(&a, &minor).unwrap();
        assert_eq!(w.coefficient(&[Symbol::y(0), Symbol::x(1)]), p);
        assert_eq!(DiffForm::base_minor(s, 1).to_string(), "(-1) dx1");
    }

    #[test]
    fn exterior_derivative_basics() {
        let s = jet(1, 1);
        let y = Expr::sym(Symbol::y(0));
        let f = DiffForm::differential(s, Symbol::x(0)).unwrap().scale(&y);
        let df = ext_d(&f);
        assert_eq!(df.coefficient(&[Symbol::y(0), Symbol::x(0)]), Expr::one());
        assert!(ext_d(&DiffForm::differential(s, Symbol::x(0)).unwrap()).is_zero());
    }

    #[test]
    fn hamilton_cartan_one_dimensional() {
        // Θ = p dy − ½p² dx; −dΘ = −dp∧dy + p dp∧dx.
        let s = Space::multimomentum(ChartSpec::new(1, 1).unwrap());
        let chart = s.chart;
        let p = Expr::sym(Symbol::p(0, 0));
        let h = parse_expr("1/2*p1_1^2", &chart).unwrap();
        let theta = DiffForm::differential(s, Symbol::y(0))
            .unwrap()
            .scale(&p)
            .sub(&DiffForm::volume(s).scale(&h));
        let omega = ext_d(&theta).neg();
        assert_eq!(omega.coefficient(&[Symbol::p(0, 0), Symbol::y(0)]), Expr::int(-1));
        assert_eq!(omega.coefficient(&[Symbol::p(0, 0), Symbol::x(0)]), p);
        assert_eq!(omega.len(), 2);
    }

    #[test]
    fn degree_overflow() {
        let s = jet(1, 1);
        let top = DiffForm::monomial(s, Expr::one(), &[Symbol::x(0), Symbol::y(0), Symbol::v(0, 0)]).unwrap();
        let dx = DiffForm::differential(s, Symbol::x(0)).unwrap();
        assert!(matches!(wedge(&top, &dx), Err(ExtError::DegreeOverflow { .. })));
    }
}
