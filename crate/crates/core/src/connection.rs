//! Connections associated with normalized multivector classes, and their
//! curvature.
//!
//! The horizontal lift of `∂/∂x^μ` is the `μ`-th factor
//! `h_μ = ∂/∂x^μ + F^A_μ ∂/∂y^A + G^A_{μρ} ∂/∂u^A_ρ`. For `μ < η` the
//! reported component on a fibre coordinate `z` is
//! `h_η(C^z_μ) − h_μ(C^z_η)`, where `C^z_μ` is the `z` coefficient of
//! `h_μ`. On the jet side with `F = v` the `y` components reduce to
//! `G^B_{ημ} − G^B_{μη}`.
//!
//! On the multimomentum side, the substituted form of the `F` bracket
//! with `F = ∂H/∂p` carries `∂²H/∂x^η∂p^μ_B` in its `x` term; it is
//! computed here from the generic bracket, never from a substituted
//! formula.

use rayon::prelude::*;

use crate::extcalc::{Bundle, Space, VectorField};
use crate::mvf::MvfFamily;
use crate::symcore::{zero_test, Expr, Symbol, ZeroVerdict};

/// Horizontal-lift coefficients of a connection on `J¹E → M` or
/// `J¹*E → M`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetConnection {
    pub space: Space,
    /// `F[A][μ]`.
    pub f: Vec<Vec<Expr>>,
    /// `G[A][μ][ρ]`.
    pub g: Vec<Vec<Vec<Expr>>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConnectionError {
    #[error("multivector field is not normalized (f_μ = 1)")]
    NotNormalized,
}

/// Which part of the commutator a component comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    /// Along `∂/∂y^B`.
    Field,
    /// Along `∂/∂v^B_ρ` or `∂/∂p^ρ_B`.
    Upper,
}

impl ComponentKind {
    pub fn label(self, bundle: Bundle) -> &'static str {
        match (bundle, self) {
            (Bundle::Jet, ComponentKind::Field) => "symmetry",
            (Bundle::Jet, ComponentKind::Upper) => "bracket",
            (Bundle::Multimomentum, ComponentKind::Field) => "F-bracket",
            (Bundle::Multimomentum, ComponentKind::Upper) => "G-bracket",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureComponent {
    pub kind: ComponentKind,
    pub mu: usize,
    pub eta: usize,
    /// Fibre coordinate the component lies along.
    pub coord: Symbol,
    pub value: Expr,
    pub verdict: ZeroVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flatness {
    Flat,
    /// No component is provably nonzero but some vanish only on samples.
    SampledFlat,
    NonFlat,
    Undecided,
}

impl Flatness {
    pub fn label(self) -> &'static str {
        match self {
            Flatness::Flat => "flat",
            Flatness::SampledFlat => "sampled-flat",
            Flatness::NonFlat => "non-flat",
            Flatness::Undecided => "undecided",
        }
    }

    pub fn is_flat_like(self) -> bool {
        matches!(self, Flatness::Flat | Flatness::SampledFlat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub bundle: Bundle,
    pub components: Vec<CurvatureComponent>,
    pub flatness: Flatness,
}

impl CurvatureReport {
    pub fn group(&self, kind: ComponentKind) -> impl Iterator<Item = &CurvatureComponent> {
        self.components.iter().filter(move |c| c.kind == kind)
    }

    /// First component with a nonvanishing witness.
    pub fn first_nonzero(&self) -> Option<&CurvatureComponent> {
        self.components.iter().find(|c| c.verdict.is_proven_nonzero())
    }
}

pub fn mvf_to_connection(x: &MvfFamily) -> Result<JetConnection, ConnectionError> {
    if !x.is_normalized() {
        return Err(ConnectionError::NotNormalized);
    }
    Ok(JetConnection {
        space: x.space,
        f: x.f.clone(),
        g: x.g.clone(),
    })
}

pub fn connection_to_mvf(conn: &JetConnection) -> MvfFamily {
    MvfFamily::normalized(conn.space, conn.f.clone(), conn.g.clone())
        .expect("connection arrays follow the chart")
}

impl JetConnection {
    /// Horizontal lift of `∂/∂x^μ`.
    pub fn lift(&self, mu: usize) -> VectorField {
        let c = self.space.chart;
        let mut comps = vec![(Symbol::x(mu), Expr::one())];
        for a in 0..c.n {
            comps.push((Symbol::y(a), self.f[a][mu].clone()));
            for rho in 0..c.m {
                comps.push((self.space.upper(a, rho), self.g[a][mu][rho].clone()));
            }
        }
        VectorField::from_components(self.space, comps).expect("chart coordinates")
    }

    /// Components for one ordered pair `(μ, η)`, with no ordering
    /// restriction. Antisymmetric under exchange.
    pub fn pair_components(&self, mu: usize, eta: usize) -> Vec<CurvatureComponent> {
        let c = self.space.chart;
        let (hm, he) = (self.lift(mu), self.lift(eta));
        let mut out = Vec::new();
        for b in 0..c.n {
            let value = &he.apply(&self.f[b][mu]) - &hm.apply(&self.f[b][eta]);
            out.push((ComponentKind::Field, Symbol::y(b), value));
        }
        for b in 0..c.n {
            for rho in 0..c.m {
                let value = &he.apply(&self.g[b][mu][rho]) - &hm.apply(&self.g[b][eta][rho]);
                out.push((ComponentKind::Upper, self.space.upper(b, rho), value));
            }
        }
        out.into_iter()
            .map(|(kind, coord, value)| CurvatureComponent {
                kind,
                mu,
                eta,
                coord,
                verdict: zero_test(&value),
                value,
            })
            .collect()
    }
}

pub fn curvature(conn: &JetConnection) -> CurvatureReport {
    let m = conn.space.chart.m;
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|mu| (mu + 1..m).map(move |eta| (mu, eta)))
        .collect();
    let per_pair: Vec<Vec<CurvatureComponent>> = pairs
        .par_iter()
        .map(|&(mu, eta)| conn.pair_components(mu, eta))
        .collect();
    let mut components: Vec<CurvatureComponent> = per_pair.into_iter().flatten().collect();
    // Group by kind, keeping pair order within each group.
    components.sort_by_key(|c| c.kind == ComponentKind::Upper);
    let flatness = overall(&components);
    CurvatureReport {
        bundle: conn.space.bundle,
        components,
        flatness,
    }
}

fn overall(components: &[CurvatureComponent]) -> Flatness {
    if components.iter().any(|c| c.verdict.is_proven_nonzero()) {
        Flatness::NonFlat
    } else if components.iter().any(|c| c.verdict == ZeroVerdict::Undecided) {
        Flatness::Undecided
    } else if components.iter().all(|c| c.verdict.is_proven_zero()) {
        Flatness::Flat
    } else {
        Flatness::SampledFlat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolonomyClass {
    Holonomic,
    SemiHolonomicNotFlat,
    TransverseOnly,
}

impl HolonomyClass {
    pub fn label(self) -> &'static str {
        match self {
            HolonomyClass::Holonomic => "holonomic",
            HolonomyClass::SemiHolonomicNotFlat => "semi-holonomic-not-flat",
            HolonomyClass::TransverseOnly => "transverse-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: HolonomyClass,
    pub semi_holonomic: bool,
    pub curvature: CurvatureReport,
}

/// Holonomic exactly when `F = v` and the associated connection is flat.
pub fn classify(x: &MvfFamily) -> Result<Classification, ConnectionError> {
    let conn = mvf_to_connection(x)?;
    let c = x.chart();
    let semi_holonomic = x.is_lagrangian()
        && (0..c.n).all(|a| {
            (0..c.m).all(|mu| {
                let d = &x.f[a][mu] - &Expr::sym(Symbol::v(a, mu));
                zero_test(&d).is_proven_zero()
            })
        });
    let curvature = curvature(&conn);
    let class = match (semi_holonomic, curvature.flatness.is_flat_like()) {
        (true, true) => HolonomyClass::Holonomic,
        (true, false) => HolonomyClass::SemiHolonomicNotFlat,
        (false, _) => HolonomyClass::TransverseOnly,
    };
    Ok(Classification {
        class,
        semi_holonomic,
        curvature,
    })
}
