//! Families of locally decomposable, transverse multivector fields
//!
//! `X = ∧_μ f_μ (∂/∂x^μ + F^A_μ ∂/∂y^A + G^A_{μρ} ∂/∂u^A_ρ)`
//!
//! where `u` is `v` on the jet bundle and `p` on the multimomentum bundle.
//! `G[A][μ][ρ]` is indexed by field, factor, then the upper fibre index.

use std::collections::{BTreeMap, BTreeSet};

use crate::extcalc::{decomposable, Bundle, DiffForm, ExtError, MultiVec, Space, VectorField};
use crate::symcore::{zero_test, ChartSpec, Expr, Symbol, ZeroVerdict};

#[derive(Debug, Clone, PartialEq)]
pub struct MvfFamily {
    pub space: Space,
    /// `F[A][μ]`.
    pub f: Vec<Vec<Expr>>,
    /// `G[A][μ][ρ]`.
    pub g: Vec<Vec<Vec<Expr>>>,
    /// Names of the free-function parameters, in introduction order.
    pub params: Vec<String>,
    pub free_count: usize,
    /// Factor scales `f_μ`; all one for the normalized representative.
    pub scales: Vec<Expr>,
    /// Expressions assumed not to vanish on the working domain.
    pub assumptions: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MvfError {
    #[error("coefficient arrays do not match N = {n}, m = {m}")]
    Shape { m: usize, n: usize },
    #[error("parameter `{0}` has no assignment")]
    Unassigned(String),
    #[error(transparent)]
    Ext(#[from] ExtError),
}

impl MvfFamily {
    /// Normalized member with the given coefficients and no parameters.
    pub fn normalized(
        space: Space,
        f: Vec<Vec<Expr>>,
        g: Vec<Vec<Vec<Expr>>>,
    ) -> Result<Self, MvfError> {
        let ChartSpec { m, n } = space.chart;
        let ok = f.len() == n
            && f.iter().all(|r| r.len() == m)
            && g.len() == n
            && g.iter().all(|b| b.len() == m && b.iter().all(|r| r.len() == m));
        if !ok {
            return Err(MvfError::Shape { m, n });
        }
        Ok(MvfFamily {
            space,
            f,
            g,
            params: Vec::new(),
            free_count: 0,
            scales: vec![Expr::one(); m],
            assumptions: Vec::new(),
        })
    }

    /// Semi-holonomic member (`F = v`) on the jet bundle.
    pub fn semi_holonomic(chart: ChartSpec, g: Vec<Vec<Vec<Expr>>>) -> Result<Self, MvfError> {
        MvfFamily::normalized(Space::jet(chart), velocity_table(chart), g)
    }

    pub fn chart(&self) -> ChartSpec {
        self.space.chart
    }

    pub fn is_normalized(&self) -> bool {
        self.scales.iter().all(Expr::is_one)
    }

    pub fn is_lagrangian(&self) -> bool {
        self.space.bundle == Bundle::Jet
    }

    /// Parameter symbols that still occur in some coefficient.
    pub fn open_params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.coefficients() {
            for s in e.symbols() {
                if let Symbol::Param(name) = s {
                    if self.params.contains(&name) {
                        out.insert(name);
                    }
                }
            }
        }
        out
    }

    fn coefficients(&self) -> impl Iterator<Item = &Expr> {
        self.f
            .iter()
            .flatten()
            .chain(self.g.iter().flatten().flatten())
            .chain(self.scales.iter())
    }

    /// Substitute expressions for free parameters. Every parameter in
    /// `params` must be assigned.
    pub fn instantiate(&self, assign: &BTreeMap<String, Expr>) -> Result<MvfFamily, MvfError> {
        if let Some(p) = self.params.iter().find(|p| !assign.contains_key(*p)) {
            return Err(MvfError::Unassigned(p.clone()));
        }
        Ok(self.substitute(assign))
    }

    /// Substitute expressions for whichever parameters are given.
    pub fn substitute(&self, assign: &BTreeMap<String, Expr>) -> MvfFamily {
        let map: BTreeMap<Symbol, Expr> = assign
            .iter()
            .map(|(k, v)| (Symbol::param(k.clone()), v.clone()))
            .collect();
        let sub = |e: &Expr| e.subs(&map);
        let params: Vec<String> = self
            .params
            .iter()
            .filter(|p| !assign.contains_key(*p))
            .cloned()
            .collect();
        MvfFamily {
            space: self.space,
            f: self.f.iter().map(|r| r.iter().map(sub).collect()).collect(),
            g: self
                .g
                .iter()
                .map(|b| b.iter().map(|r| r.iter().map(sub).collect()).collect())
                .collect(),
            free_count: params.len(),
            params,
            scales: self.scales.iter().map(sub).collect(),
            assumptions: self.assumptions.iter().map(sub).collect(),
        }
    }

    /// The `μ`-th factor, including its scale.
    pub fn factor(&self, mu: usize) -> VectorField {
        let chart = self.space.chart;
        let mut comps = vec![(Symbol::x(mu), Expr::one())];
        for a in 0..chart.n {
            comps.push((Symbol::y(a), self.f[a][mu].clone()));
            for rho in 0..chart.m {
                comps.push((self.space.upper(a, rho), self.g[a][mu][rho].clone()));
            }
        }
        let x = VectorField::from_components(self.space, comps).expect("chart coordinates");
        let s = &self.scales[mu];
        if s.is_one() {
            x
        } else {
            x.map_coefficients(|c| c * s)
        }
    }

    pub fn factors(&self) -> Vec<VectorField> {
        (0..self.space.chart.m).map(|mu| self.factor(mu)).collect()
    }

    pub fn to_multivec(&self) -> MultiVec {
        decomposable(&self.factors()).expect("factors share a space")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEntry {
    pub coord: Symbol,
    pub value: Expr,
    pub verdict: ZeroVerdict,
}

/// Coefficients of the 1-form `i(X)Ω`, grouped by differential.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionResidual {
    /// `dv` (Lagrangian side) or `dp` (Hamiltonian side) coefficients.
    pub upper: Vec<ResidualEntry>,
    pub dy: Vec<ResidualEntry>,
    pub dx: Vec<ResidualEntry>,
}

impl ContractionResidual {
    pub(crate) fn from_form(space: Space, form: &DiffForm) -> Self {
        let mut out = ContractionResidual {
            upper: Vec::new(),
            dy: Vec::new(),
            dx: Vec::new(),
        };
        for z in space.coords() {
            let value = form.coefficient(std::slice::from_ref(&z));
            let verdict = zero_test(&value);
            let entry = ResidualEntry {
                coord: z.clone(),
                value,
                verdict,
            };
            match z {
                Symbol::X(_) => out.dx.push(entry),
                Symbol::Y(_) => out.dy.push(entry),
                _ => out.upper.push(entry),
            }
        }
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = &ResidualEntry> {
        self.upper.iter().chain(&self.dy).chain(&self.dx)
    }

    pub fn all_proven_zero(&self) -> bool {
        self.entries().all(|e| e.verdict.is_proven_zero())
    }
}

/// Normalized member whose coefficients are the parameters `F<A>_<μ>`
/// and `G<A>_<μ>_<ρ>`, with those symbols in unknown order.
pub(crate) fn generic_member(space: Space) -> (MvfFamily, Vec<Symbol>, Vec<Symbol>) {
    let c = space.chart;
    let f_syms: Vec<Symbol> = (0..c.n)
        .flat_map(|a| (0..c.m).map(move |mu| Symbol::param(f_name(a, mu))))
        .collect();
    let mut g_syms = vec![Symbol::param(""); c.n * c.m * c.m];
    for a in 0..c.n {
        for mu in 0..c.m {
            for rho in 0..c.m {
                g_syms[g_index(c, a, mu, rho)] = Symbol::param(g_name(a, mu, rho));
            }
        }
    }
    let f = (0..c.n)
        .map(|a| (0..c.m).map(|mu| Expr::sym(f_syms[a * c.m + mu].clone())).collect())
        .collect();
    let flat: Vec<Expr> = g_syms.iter().cloned().map(Expr::sym).collect();
    let x = MvfFamily::normalized(space, f, reshape_g(c, &flat)).expect("shapes follow the chart");
    (x, f_syms, g_syms)
}

/// `F[A][μ] = v^A_μ`.
pub fn velocity_table(chart: ChartSpec) -> Vec<Vec<Expr>> {
    (0..chart.n)
        .map(|a| (0..chart.m).map(|mu| Expr::sym(Symbol::v(a, mu))).collect())
        .collect()
}

pub fn zero_g(chart: ChartSpec) -> Vec<Vec<Vec<Expr>>> {
    vec![vec![vec![Expr::zero(); chart.m]; chart.m]; chart.n]
}

/// Fresh parameter names `g1, g2, …` that do not clash with `taken`.
pub(crate) fn fresh_params(count: usize, taken: &BTreeSet<Symbol>) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    let mut k = 1;
    while out.len() < count {
        let name = format!("g{k}");
        if !taken.contains(&Symbol::param(name.clone())) {
            out.push(name);
        }
        k += 1;
    }
    out
}

/// Flat index of `G[A][μ][ρ]` in the unknown vector.
pub fn g_index(chart: ChartSpec, a: usize, mu: usize, rho: usize) -> usize {
    (a * chart.m + mu) * chart.m + rho
}

/// Display name `G<A>_<μ>_<ρ>` (one-based).
pub fn g_name(a: usize, mu: usize, rho: usize) -> String {
    format!("G{}_{}_{}", a + 1, mu + 1, rho + 1)
}

/// Display name `F<A>_<μ>` (one-based).
pub fn f_name(a: usize, mu: usize) -> String {
    format!("F{}_{}", a + 1, mu + 1)
}

/// Reshape a flat vector of `N·m²` entries into `G[A][μ][ρ]`.
pub(crate) fn reshape_g(chart: ChartSpec, flat: &[Expr]) -> Vec<Vec<Vec<Expr>>> {
    let mut g = zero_g(chart);
    for a in 0..chart.n {
        for mu in 0..chart.m {
            for rho in 0..chart.m {
                g[a][mu][rho] = flat[g_index(chart, a, mu, rho)].clone();
            }
        }
    }
    g
}
