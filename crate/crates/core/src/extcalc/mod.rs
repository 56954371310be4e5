//! Differential forms and multivector fields with symbolic coefficients.
//!
//! Both are stored sparsely, keyed by strictly increasing tuples of
//! [`Coord`]s. Coordinates order as `v/p < y < x`, so monomials print in
//! the familiar `dv ∧ dy ∧ dx` layout.

mod form;
mod multivec;

pub use form::{ext_d, wedge, DiffForm};
pub use multivec::{contract, contract_basis, decomposable, insert, MultiVec, VectorField};

use crate::symcore::{ChartSpec, Coord, Symbol};

/// Which bundle a chart describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bundle {
    /// `J¹E` with coordinates `(x, y, v)`.
    Jet,
    /// `J¹*E` with coordinates `(x, y, p)`.
    Multimomentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Space {
    pub chart: ChartSpec,
    pub bundle: Bundle,
}

impl Space {
    pub fn jet(chart: ChartSpec) -> Self {
        Space {
            chart,
            bundle: Bundle::Jet,
        }
    }

    pub fn multimomentum(chart: ChartSpec) -> Self {
        Space {
            chart,
            bundle: Bundle::Multimomentum,
        }
    }

    /// All coordinates, in chart order `x, y, v|p`.
    pub fn coords(&self) -> Vec<Symbol> {
        let mut out = self.chart.base();
        out.extend(self.chart.fields());
        match self.bundle {
            Bundle::Jet => out.extend(self.chart.velocities()),
            Bundle::Multimomentum => out.extend(self.chart.momenta()),
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.chart.jet_dim()
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        match s {
            Symbol::X(_) | Symbol::Y(_) => self.chart.contains(s),
            Symbol::V { .. } => self.bundle == Bundle::Jet && self.chart.contains(s),
            Symbol::P { .. } => self.bundle == Bundle::Multimomentum && self.chart.contains(s),
            Symbol::W { .. } | Symbol::Param(_) => false,
        }
    }

    /// The fibre coordinate of the top jet level: `v^A_μ` or `p^μ_A`.
    pub fn upper(&self, a: usize, mu: usize) -> Symbol {
        match self.bundle {
            Bundle::Jet => Symbol::v(a, mu),
            Bundle::Multimomentum => Symbol::p(a, mu),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtError {
    #[error("wedge of degrees {left} and {right} exceeds dimension {dim}")]
    DegreeOverflow { left: usize, right: usize, dim: usize },
    #[error("cannot contract a {mv}-vector with a {form}-form")]
    DegreeMismatch { mv: usize, form: usize },
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("`{0}` is not a coordinate of this space")]
    NotACoordinate(Symbol),
}

/// Sort a coordinate tuple, returning the sign of the permutation, or
/// `None` if a coordinate repeats.
pub(crate) fn sort_with_sign(mut v: Vec<Coord>) -> Option<(Vec<Coord>, bool)> {
    let mut negative = false;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            negative = !negative;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, negative))
}
