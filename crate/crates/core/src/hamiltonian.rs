//! Hamiltonian systems on the multimomentum bundle `J¹*E` and the
//! Legendre map from regular Lagrangians.

use std::collections::BTreeMap;

use crate::extcalc::{contract, decomposable, ext_d, wedge, DiffForm, Space, VectorField};
use crate::lagrangian::{
    g_unknowns, parametrize, CoefficientSystem, LagrangianSystem, Regularity, RegularityKind,
};
use crate::mvf::{f_name, generic_member, reshape_g, ContractionResidual, MvfFamily};
use crate::symcore::{
    linear_system_of, solve_linear, total_derivative, zero_test, ChartSpec, Coord, Expr,
    LinSolution, LinSolveError, Symbol,
};

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSystem {
    chart: ChartSpec,
    hamiltonian: Expr,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HamiltonianError {
    #[error("`{0}` is not a coordinate of the multimomentum chart")]
    ForeignSymbol(Symbol),
    #[error("the dp coefficient system does not determine F uniquely (rank {rank} of {size})")]
    FNotUnique { rank: usize, size: usize },
    #[error("the dy coefficient system is incompatible")]
    Incompatible,
    #[error("multivector field is not a normalized multimomentum-side representative")]
    NotNormalized,
    #[error(transparent)]
    Linear(#[from] LinSolveError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonCartanForms {
    pub theta: DiffForm,
    /// `−dΘ_h`.
    pub omega: DiffForm,
    /// `−dp^μ_A ∧ dy^A ∧ d^{m−1}x_μ + dH ∧ d^m x`.
    pub display: DiffForm,
}

impl HamiltonCartanForms {
    pub fn consistent(&self) -> bool {
        self.omega
            .sub(&self.display)
            .terms()
            .all(|(_, c)| zero_test(c).is_proven_zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdwSolution {
    pub family: MvfFamily,
    /// `dp` coefficient equations, unknowns `F`.
    pub f_system: CoefficientSystem,
    pub f_solution: LinSolution,
    /// `dy` coefficient equations with `F` substituted, unknowns `G`.
    pub g_system: CoefficientSystem,
    pub g_solution: LinSolution,
}

impl HamiltonianSystem {
    pub fn new(chart: ChartSpec, hamiltonian: Expr) -> Result<Self, HamiltonianError> {
        for s in hamiltonian.symbols() {
            let ok = match &s {
                Symbol::X(_) | Symbol::Y(_) | Symbol::P { .. } => chart.contains(&s),
                Symbol::Param(_) => true,
                Symbol::V { .. } | Symbol::W { .. } => false,
            };
            if !ok {
                return Err(HamiltonianError::ForeignSymbol(s));
            }
        }
        Ok(HamiltonianSystem { chart, hamiltonian })
    }

    pub fn chart(&self) -> ChartSpec {
        self.chart
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.hamiltonian
    }

    pub fn space(&self) -> Space {
        Space::multimomentum(self.chart)
    }

    pub fn hamilton_cartan_forms(&self) -> HamiltonCartanForms {
        let s = self.space();
        let c = self.chart;
        let d = |z: Symbol| DiffForm::differential(s, z).expect("chart coordinate");
        let vol = DiffForm::volume(s);
        let mut theta = vol.scale(&self.hamiltonian).neg();
        let mut display = DiffForm::zero(s, c.m + 1);
        for a in 0..c.n {
            for mu in 0..c.m {
                let dy_minor = wedge(&d(Symbol::y(a)), &DiffForm::base_minor(s, mu)).expect("fits");
                let p = Symbol::p(a, mu);
                theta = theta.add(&dy_minor.scale(&Expr::sym(p.clone())));
                display = display.sub(&wedge(&d(p), &dy_minor).expect("fits"));
            }
        }
        let dh = ext_d(&DiffForm::scalar(s, self.hamiltonian.clone()));
        display = display.add(&wedge(&dh, &vol).expect("fits"));
        HamiltonCartanForms {
            omega: ext_d(&theta).neg(),
            theta,
            display,
        }
    }

    /// `∂H/∂p^μ_A`, indexed `[A][μ]`.
    pub fn momentum_gradient(&self) -> Vec<Vec<Expr>> {
        let c = self.chart;
        (0..c.n)
            .map(|a| {
                (0..c.m)
                    .map(|mu| self.hamiltonian.diff(&Symbol::p(a, mu)))
                    .collect()
            })
            .collect()
    }

    /// `−∂H/∂y^A`.
    pub fn field_force(&self) -> Vec<Expr> {
        (0..self.chart.n)
            .map(|a| -self.hamiltonian.diff(&Symbol::y(a)))
            .collect()
    }

    /// HDW multivector fields: `F` from the `dp` coefficients, `G` from
    /// the `dy` coefficients, free functions as parameters `g1, g2, …`.
    pub fn hdw_solve(&self) -> Result<HdwSolution, HamiltonianError> {
        let c = self.chart;
        let (x, f_syms, g_syms) = generic_member(self.space());
        let form = contract(&x.to_multivec(), &self.hamilton_cartan_forms().omega)
            .expect("degrees match");
        let dp: Vec<Expr> = c
            .momenta()
            .into_iter()
            .map(|p| form.coefficient(&[p]))
            .collect();
        let (fm, fr) = linear_system_of(&dp, &f_syms).expect("dp coefficients are affine in F");
        let f_solution = solve_linear(&fm, &fr)?;
        if !f_solution.compatible || f_solution.free_count != 0 {
            return Err(HamiltonianError::FNotUnique {
                rank: f_solution.rank,
                size: f_syms.len(),
            });
        }
        let f_map: BTreeMap<Symbol, Expr> = f_syms
            .iter()
            .cloned()
            .zip(f_solution.particular.iter().cloned())
            .collect();
        let dy: Vec<Expr> = (0..c.n)
            .map(|a| form.coefficient(&[Symbol::y(a)]).subs(&f_map))
            .collect();
        let (gm, gr) = linear_system_of(&dy, &g_syms).expect("dy coefficients are affine in G");
        let g_solution = solve_linear(&gm, &gr)?;
        if !g_solution.compatible {
            return Err(HamiltonianError::Incompatible);
        }
        let (g, params) = parametrize(&g_solution, &self.hamiltonian.symbols());
        let f = (0..c.n)
            .map(|a| (0..c.m).map(|mu| f_solution.particular[a * c.m + mu].clone()).collect())
            .collect();
        let mut family =
            MvfFamily::normalized(self.space(), f, reshape_g(c, &g)).expect("chart shapes");
        family.free_count = params.len();
        family.params = params;
        family.assumptions = g_solution.assumptions.clone();
        Ok(HdwSolution {
            family,
            f_system: CoefficientSystem {
                matrix: fm,
                rhs: fr,
                unknowns: (0..c.n)
                    .flat_map(|a| (0..c.m).map(move |mu| f_name(a, mu)))
                    .collect(),
            },
            f_solution,
            g_system: CoefficientSystem {
                matrix: gm,
                rhs: gr,
                unknowns: g_unknowns(c),
            },
            g_solution,
        })
    }

    /// Coefficients of `i(X)Ω_h` for a normalized multimomentum member.
    pub fn hdw_residual(&self, x: &MvfFamily) -> Result<ContractionResidual, HamiltonianError> {
        if x.is_lagrangian() || !x.is_normalized() || x.chart() != self.chart {
            return Err(HamiltonianError::NotNormalized);
        }
        let form = contract(&x.to_multivec(), &self.hamilton_cartan_forms().omega)
            .expect("degrees match");
        Ok(ContractionResidual::from_form(self.space(), &form))
    }
}

/// The fibre map `p^μ_A = ∂L/∂v^A_μ` and, when certified, its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreMap {
    pub chart: ChartSpec,
    /// `p^μ_A` as expressions in `(x, y, v)`, indexed `[A][μ]`.
    pub momenta: Vec<Vec<Expr>>,
    /// `v^A_μ` as expressions in `(x, y, p)`.
    pub inverse: Option<Vec<Vec<Expr>>>,
    pub hyper_regular: bool,
}

impl LegendreMap {
    /// `v ↦ p`, as a substitution for `p` symbols.
    pub fn forward_subs(&self) -> BTreeMap<Symbol, Expr> {
        let mut out = BTreeMap::new();
        for (a, row) in self.momenta.iter().enumerate() {
            for (mu, e) in row.iter().enumerate() {
                out.insert(Symbol::p(a, mu), e.clone());
            }
        }
        out
    }

    /// `p ↦ v`, as a substitution for `v` symbols.
    pub fn inverse_subs(&self) -> Option<BTreeMap<Symbol, Expr>> {
        let inv = self.inverse.as_ref()?;
        let mut out = BTreeMap::new();
        for (a, row) in inv.iter().enumerate() {
            for (mu, e) in row.iter().enumerate() {
                out.insert(Symbol::v(a, mu), e.clone());
            }
        }
        Some(out)
    }

    /// `p(v(p)) − p` and `v(p(v)) − v`, all entries.
    pub fn round_trip_residuals(&self) -> Option<Vec<Expr>> {
        let inv = self.inverse_subs()?;
        let fwd = self.forward_subs();
        let mut out = Vec::new();
        for (a, row) in self.momenta.iter().enumerate() {
            for (mu, e) in row.iter().enumerate() {
                out.push(&e.subs(&inv) - &Expr::sym(Symbol::p(a, mu)));
                let v = &inv[&Symbol::v(a, mu)];
                out.push(&v.subs(&fwd) - &Expr::sym(Symbol::v(a, mu)));
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LegendreError {
    #[error("Lagrangian is not certified regular ({})", .0.kind.label())]
    NotRegular(Regularity),
    #[error(
        "cannot invert the Legendre map symbolically: the velocity Hessian depends on `{symbol}`; \
         use pointwise numeric inversion instead"
    )]
    InversionFailure { symbol: Symbol, map: LegendreMap },
    #[error(transparent)]
    Linear(#[from] LinSolveError),
}

/// Legendre map of a regular Lagrangian and the Hamiltonian
/// `H = p·v − L` with `v` eliminated.
pub fn legendre_of(sys: &LagrangianSystem) -> Result<(LegendreMap, HamiltonianSystem), LegendreError> {
    let c = sys.chart();
    let reg = sys.regularity();
    if !reg.certified() {
        return Err(LegendreError::NotRegular(reg));
    }
    let l = sys.lagrangian();
    let momenta: Vec<Vec<Expr>> = (0..c.n)
        .map(|a| (0..c.m).map(|mu| l.diff(&Symbol::v(a, mu))).collect())
        .collect();
    let mut map = LegendreMap {
        chart: c,
        momenta,
        inverse: None,
        hyper_regular: false,
    };
    let hessian = sys.hessian();
    if let Some(symbol) = hessian
        .iter()
        .flatten()
        .flat_map(|e| e.symbols())
        .find(|s| matches!(s, Symbol::V { .. }))
    {
        return Err(LegendreError::InversionFailure { symbol, map });
    }
    // p = M v + c(x, y) with M the constant-in-v Hessian.
    let vel = c.velocities();
    let eqs: Vec<Expr> = vel
        .iter()
        .map(|v| match v {
            Symbol::V { field, dir } => &map.momenta[*field][*dir] - &Expr::sym(Symbol::p(*field, *dir)),
            _ => unreachable!("velocities"),
        })
        .collect();
    let (m, rhs) = linear_system_of(&eqs, &vel).expect("momenta are affine in v");
    let sol = solve_linear(&m, &rhs)?;
    if !sol.compatible || sol.free_count != 0 {
        return Err(LegendreError::NotRegular(reg));
    }
    let inverse: Vec<Vec<Expr>> = (0..c.n)
        .map(|a| (0..c.m).map(|mu| sol.particular[c.pair(a, mu)].clone()).collect())
        .collect();
    map.inverse = Some(inverse);
    map.hyper_regular = reg.kind == RegularityKind::Regular
        || map
            .round_trip_residuals()
            .is_some_and(|r| r.iter().all(|e| zero_test(e).is_proven_zero()));
    let inv = map.inverse_subs().expect("just set");
    let mut h = -l.clone();
    for (a, row) in map.momenta.iter().enumerate() {
        for mu in 0..row.len() {
            h = &h + &(&Expr::sym(Symbol::p(a, mu)) * &Expr::sym(Symbol::v(a, mu)));
        }
    }
    let h = h.subs(&inv);
    let ham = HamiltonianSystem::new(c, h).expect("H is over (x, y, p)");
    Ok((map, ham))
}

/// Push each factor of `X_L` through the tangent map of the Legendre
/// map. Coefficients stay functions of `(x, y, v)`.
fn push_forward_factors(map: &LegendreMap, x_l: &MvfFamily) -> Vec<VectorField> {
    let c = map.chart;
    let target = Space::multimomentum(c);
    x_l.factors()
        .iter()
        .map(|xf| {
            let mut comps = Vec::new();
            for (z, e) in xf.components() {
                if matches!(z, Symbol::X(_) | Symbol::Y(_)) {
                    comps.push((z.clone(), e.clone()));
                }
            }
            for a in 0..c.n {
                for mu in 0..c.m {
                    comps.push((Symbol::p(a, mu), xf.apply(&map.momenta[a][mu])));
                }
            }
            VectorField::from_components(target, comps).expect("chart coordinates")
        })
        .collect()
}

/// The Hamiltonian-side field whose factors are the pushed-forward
/// factors of `X_L`, written in `(x, y, p)`.
pub fn hamiltonian_image(map: &LegendreMap, x_l: &MvfFamily) -> Option<MvfFamily> {
    let inv = map.inverse_subs()?;
    let c = map.chart;
    let pushed = push_forward_factors(map, x_l);
    let f = (0..c.n)
        .map(|a| {
            (0..c.m)
                .map(|mu| pushed[mu].component(&Symbol::y(a)).subs(&inv))
                .collect()
        })
        .collect();
    let g = (0..c.n)
        .map(|a| {
            (0..c.m)
                .map(|mu| {
                    (0..c.m)
                        .map(|rho| pushed[mu].component(&Symbol::p(a, rho)).subs(&inv))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut out = MvfFamily::normalized(Space::multimomentum(c), f, g).ok()?;
    out.params = x_l.params.clone();
    out.free_count = x_l.free_count;
    Some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlRelation {
    /// `Λ^m TFL ∘ X_L = f · X_H ∘ FL`.
    pub f: Expr,
    pub components_checked: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlError {
    #[error(transparent)]
    Legendre(#[from] LegendreError),
    #[error("X_L must be a normalized jet-side member and X_H a normalized multimomentum member")]
    WrongSides,
    #[error("the base component of the pulled-back X_H vanishes")]
    Degenerate,
    #[error("scale factor {0} is not constant")]
    NonconstantScale(Expr),
    #[error("components on {coords} are not proportional: pushed {pushed}, pulled back {pulled}")]
    NotProportional {
        coords: String,
        pushed: Expr,
        pulled: Expr,
    },
}

/// Certify that `X_L` and `X_H` are related through the Legendre map,
/// returning the scale factor.
pub fn fl_relatedness(
    sys: &LagrangianSystem,
    x_l: &MvfFamily,
    x_h: &MvfFamily,
) -> Result<FlRelation, FlError> {
    if !x_l.is_lagrangian() || x_h.is_lagrangian() || !x_l.is_normalized() || !x_h.is_normalized() {
        return Err(FlError::WrongSides);
    }
    let (map, _) = legendre_of(sys)?;
    let c = map.chart;
    let pushed = decomposable(&push_forward_factors(&map, x_l)).expect("same space");
    let fwd = map.forward_subs();
    let pulled_factors: Vec<VectorField> = x_h
        .factors()
        .iter()
        .map(|xf| xf.map_coefficients(|e| e.subs(&fwd)))
        .collect();
    let pulled = decomposable(&pulled_factors).expect("same space");
    let base: Vec<Symbol> = c.base();
    let denom = pulled.coefficient(&base);
    if zero_test(&denom).is_proven_zero() {
        return Err(FlError::Degenerate);
    }
    let f = pushed.coefficient(&base).checked_div(&denom).map_err(|_| FlError::Degenerate)?;
    if f.symbols().iter().any(Symbol::is_coordinate) {
        return Err(FlError::NonconstantScale(f));
    }
    let mut keys: Vec<Vec<Coord>> = pushed.terms().map(|(k, _)| k.clone()).collect();
    keys.extend(pulled.terms().map(|(k, _)| k.clone()));
    keys.sort();
    keys.dedup();
    for key in &keys {
        let coords: Vec<Symbol> = key.iter().map(|z| z.0.clone()).collect();
        let a = pushed.coefficient(&coords);
        let b = pulled.coefficient(&coords);
        if !zero_test(&(&a - &(&f * &b))).is_proven_zero() {
            let names: Vec<String> = coords.iter().map(|s| format!("d/d{s}")).collect();
            return Err(FlError::NotProportional {
                coords: names.join("^"),
                pushed: a,
                pulled: b,
            });
        }
    }
    Ok(FlRelation {
        f,
        components_checked: keys.len(),
    })
}

/// HDW equations pulled back along `p = ∂L/∂v`, on a prolonged section.
///
/// `∂y^A/∂x^μ` becomes `v^A_μ` and `∂p^μ_A/∂x^μ` becomes
/// `D_μ(∂L/∂v^A_μ)`. Returns the first group `[A][μ]` and the second
/// group `[A]`. The first group vanishes and the second equals `−EL_A`.
pub fn hdw_pullback(
    sys: &LagrangianSystem,
    map: &LegendreMap,
    ham: &HamiltonianSystem,
) -> (Vec<Vec<Expr>>, Vec<Expr>) {
    let c = sys.chart();
    let fwd = map.forward_subs();
    let grad = ham.momentum_gradient();
    let force = ham.field_force();
    let first = (0..c.n)
        .map(|a| {
            (0..c.m)
                .map(|mu| &Expr::sym(Symbol::v(a, mu)) - &grad[a][mu].subs(&fwd))
                .collect()
        })
        .collect();
    let second = (0..c.n)
        .map(|a| {
            let mut e = -force[a].subs(&fwd);
            for mu in 0..c.m {
                let d = total_derivative(&map.momenta[a][mu], mu, &c).expect("first-order momenta");
                e = &e + &d;
            }
            e
        })
        .collect();
    (first, second)
}
