//! First-order Lagrangian systems on `J¹E`.

use crate::extcalc::{contract, ext_d, wedge, DiffForm, Space};
use crate::mvf::{
    f_name, fresh_params, g_index, g_name, generic_member, reshape_g, ContractionResidual,
    MvfFamily,
};
use crate::symcore::{
    determinant, linear_system_of, rank, solve_linear, total_derivative, ChartSpec, Expr,
    zero_test, ExprMatrix, LinSolution, LinSolveError, Symbol, ZeroVerdict,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSystem {
    chart: ChartSpec,
    lagrangian: Expr,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LagrangianError {
    #[error("`{0}` is not a coordinate of the jet chart")]
    ForeignSymbol(Symbol),
    #[error("the Lagrangian is singular (Hessian determinant is {0})")]
    Singular(&'static str),
    #[error("regularity is not certified: the Hessian determinant is {0}")]
    RegularityNotCertified(&'static str),
    #[error("the coefficient system is incompatible in row(s) {}", rows.iter().map(|(r, _)| (r + 1).to_string()).collect::<Vec<_>>().join(", "))]
    Incompatible { rows: Vec<(usize, Expr)> },
    #[error("multivector field is not a normalized jet-side representative")]
    NotNormalized,
    #[error(transparent)]
    Linear(#[from] LinSolveError),
}

/// How the Hessian determinant behaves on the chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularityKind {
    /// Nonzero constant.
    Regular,
    /// Not identically zero, but depends on the point.
    PointDependent,
    /// Identically zero.
    Singular,
    /// Vanishes at every sample but is not canonically zero.
    SampledSingular,
    Undetermined,
}

impl RegularityKind {
    pub fn label(self) -> &'static str {
        match self {
            RegularityKind::Regular => "regular",
            RegularityKind::PointDependent => "point-dependent",
            RegularityKind::Singular => "singular",
            RegularityKind::SampledSingular => "sampled-singular",
            RegularityKind::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regularity {
    pub determinant: Expr,
    pub verdict: ZeroVerdict,
    pub kind: RegularityKind,
}

impl Regularity {
    pub fn certified(&self) -> bool {
        self.verdict.is_proven_nonzero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartanForms {
    pub theta: DiffForm,
    /// `−dΘ_L`.
    pub omega: DiffForm,
    /// The closed-form coefficient families of `Ω_L`, built independently.
    pub display: DiffForm,
}

impl CartanForms {
    /// `omega − display`; zero when the two constructions agree.
    pub fn mismatch(&self) -> DiffForm {
        self.omega.sub(&self.display)
    }

    pub fn consistent(&self) -> bool {
        self.mismatch().terms().all(|(_, c)| zero_test(c).is_proven_zero())
    }
}

/// The linear system for the `G` coefficients: `matrix · G = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSystem {
    pub matrix: ExprMatrix,
    pub rhs: Vec<Expr>,
    /// Unknown names in column order.
    pub unknowns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElSolution {
    pub family: MvfFamily,
    pub system: CoefficientSystem,
    pub solution: LinSolution,
    pub regularity: Regularity,
}

/// The `dv` coefficient equations of `i(X)Ω_L = 0` solved for `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingRecord {
    pub system: CoefficientSystem,
    pub solution: LinSolution,
    /// `F[A][μ]` where determined; `None` marks a free entry.
    pub f: Vec<Vec<Option<Expr>>>,
    /// Every `F` entry is determined and equals the velocity.
    pub forced_to_velocity: bool,
}

impl ForcingRecord {
    pub fn undetermined(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (a, row) in self.f.iter().enumerate() {
            for (mu, e) in row.iter().enumerate() {
                if e.is_none() {
                    out.push(f_name(a, mu));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularReport {
    pub regularity: Regularity,
    pub hessian_rank: usize,
    pub hessian_size: usize,
    pub forcing: ForcingRecord,
    pub el_system: CoefficientSystem,
    pub el_solution: LinSolution,
    /// Free functions in the `G` family where the system is compatible.
    pub free_count: Option<usize>,
    /// `free_count − N(m²−1)`.
    pub extra_free: Option<i64>,
    pub note: Option<String>,
}

impl LagrangianSystem {
    pub fn new(chart: ChartSpec, lagrangian: Expr) -> Result<Self, LagrangianError> {
        for s in lagrangian.symbols() {
            let ok = match &s {
                Symbol::X(_) | Symbol::Y(_) | Symbol::V { .. } => chart.contains(&s),
                Symbol::Param(_) => true,
                Symbol::P { .. } | Symbol::W { .. } => false,
            };
            if !ok {
                return Err(LagrangianError::ForeignSymbol(s));
            }
        }
        Ok(LagrangianSystem { chart, lagrangian })
    }

    pub fn chart(&self) -> ChartSpec {
        self.chart
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn space(&self) -> Space {
        Space::jet(self.chart)
    }

    fn lv(&self, a: usize, mu: usize) -> Expr {
        self.lagrangian.diff(&Symbol::v(a, mu))
    }

    /// `∂²L/∂v^A_μ ∂v^B_ν`, rows and columns indexed by `A·m + μ`.
    pub fn hessian(&self) -> ExprMatrix {
        let c = self.chart;
        let vel = c.velocities();
        let first: Vec<Expr> = vel.iter().map(|v| self.lagrangian.diff(v)).collect();
        first
            .iter()
            .map(|d| vel.iter().map(|v| d.diff(v)).collect())
            .collect()
    }

    pub fn regularity(&self) -> Regularity {
        classify_determinant(determinant(&self.hessian()))
    }

    pub fn cartan_forms(&self) -> CartanForms {
        let s = self.space();
        let c = self.chart;
        let vol = DiffForm::volume(s);
        let mut theta = DiffForm::zero(s, c.m);
        let mut energy = -self.lagrangian.clone();
        for a in 0..c.n {
            let dy = DiffForm::differential(s, Symbol::y(a)).expect("field coordinate");
            for mu in 0..c.m {
                let lv = self.lv(a, mu);
                energy = &energy + &(&Expr::sym(Symbol::v(a, mu)) * &lv);
                let piece = wedge(&dy, &DiffForm::base_minor(s, mu)).expect("degree fits");
                theta = theta.add(&piece.scale(&lv));
            }
        }
        theta = theta.sub(&vol.scale(&energy));
        let omega = ext_d(&theta).neg();
        CartanForms {
            display: self.omega_display(),
            theta,
            omega,
        }
    }

    /// `Ω_L` assembled from its four coefficient families.
    fn omega_display(&self) -> DiffForm {
        let s = self.space();
        let c = self.chart;
        let l = &self.lagrangian;
        let vol = DiffForm::volume(s);
        let d = |z: Symbol| DiffForm::differential(s, z).expect("chart coordinate");
        let w = |a: &DiffForm, b: &DiffForm| wedge(a, b).expect("degree fits");
        let mut out = DiffForm::zero(s, c.m + 1);
        for a in 0..c.n {
            for mu in 0..c.m {
                let lv = self.lv(a, mu);
                let dy_minor = w(&d(Symbol::y(a)), &DiffForm::base_minor(s, mu));
                for b in 0..c.n {
                    for nu in 0..c.m {
                        let h = lv.diff(&Symbol::v(b, nu));
                        out = out.sub(&w(&d(Symbol::v(b, nu)), &dy_minor).scale(&h));
                        let hv = &h * &Expr::sym(Symbol::v(a, mu));
                        out = out.add(&w(&d(Symbol::v(b, nu)), &vol).scale(&hv));
                    }
                    let lyv = lv.diff(&Symbol::y(b));
                    out = out.sub(&w(&d(Symbol::y(b)), &dy_minor).scale(&lyv));
                }
            }
        }
        for b in 0..c.n {
            let mut coeff = -l.diff(&Symbol::y(b));
            for mu in 0..c.m {
                coeff = &coeff + &self.lv(b, mu).diff(&Symbol::x(mu));
                for a in 0..c.n {
                    let lyv = self.lv(a, mu).diff(&Symbol::y(b));
                    coeff = &coeff + &(&lyv * &Expr::sym(Symbol::v(a, mu)));
                }
            }
            out = out.add(&w(&d(Symbol::y(b)), &vol).scale(&coeff));
        }
        out
    }

    /// `EL_A = ∂L/∂y^A − Σ_μ D_μ(∂L/∂v^A_μ)`, over `(x, y, v, w)`.
    pub fn euler_lagrange(&self) -> Vec<Expr> {
        let c = self.chart;
        (0..c.n)
            .map(|a| {
                let mut e = self.lagrangian.diff(&Symbol::y(a));
                for mu in 0..c.m {
                    let d = total_derivative(&self.lv(a, mu), mu, &c)
                        .expect("first-order Lagrangian");
                    e = &e - &d;
                }
                e
            })
            .collect()
    }

    /// Row `A`: `Σ ∂²L/∂v^A_μ∂v^B_ρ G^B_{μρ} = ∂L/∂y^A − Σ ∂²L/∂x^μ∂v^A_μ
    /// − Σ ∂²L/∂y^B∂v^A_μ v^B_μ`, unknowns ordered as `G[B][μ][ρ]`.
    pub fn assemble_el_system(&self) -> CoefficientSystem {
        let c = self.chart;
        let cols = c.n * c.m * c.m;
        let mut matrix = vec![vec![Expr::zero(); cols]; c.n];
        let mut rhs = Vec::with_capacity(c.n);
        for (a, row) in matrix.iter_mut().enumerate() {
            let mut r = self.lagrangian.diff(&Symbol::y(a));
            for mu in 0..c.m {
                let lv = self.lv(a, mu);
                r = &r - &lv.diff(&Symbol::x(mu));
                for b in 0..c.n {
                    r = &r - &(&lv.diff(&Symbol::y(b)) * &Expr::sym(Symbol::v(b, mu)));
                    for rho in 0..c.m {
                        row[g_index(c, b, mu, rho)] = lv.diff(&Symbol::v(b, rho));
                    }
                }
            }
            rhs.push(r);
        }
        CoefficientSystem {
            matrix,
            rhs,
            unknowns: g_unknowns(c),
        }
    }

    /// `EL_A + Σ M[A][j] w_j − rhs_A`, with `w` standing in for `G`.
    /// Vanishes identically.
    pub fn el_identity(&self) -> Vec<Expr> {
        let c = self.chart;
        let sys = self.assemble_el_system();
        let el = self.euler_lagrange();
        (0..c.n)
            .map(|a| {
                let mut e = &el[a] - &sys.rhs[a];
                for b in 0..c.n {
                    for mu in 0..c.m {
                        for rho in 0..c.m {
                            let coef = &sys.matrix[a][g_index(c, b, mu, rho)];
                            e = &e + &(coef * &Expr::sym(Symbol::w(b, mu, rho)));
                        }
                    }
                }
                e
            })
            .collect()
    }

    /// Euler-Lagrange multivector fields with `F = v` and `G` solving the
    /// coefficient system. Free functions appear as parameters `g1, g2, …`.
    pub fn solve_el_mvf(&self) -> Result<ElSolution, LagrangianError> {
        let regularity = self.regularity();
        match regularity.kind {
            RegularityKind::Singular => return Err(LagrangianError::Singular("identically zero")),
            RegularityKind::SampledSingular => {
                return Err(LagrangianError::Singular("zero at every sample point"))
            }
            _ => {}
        }
        let system = self.assemble_el_system();
        let solution = solve_linear(&system.matrix, &system.rhs)?;
        if !solution.compatible {
            return Err(LagrangianError::Incompatible {
                rows: solution.inconsistent_rows.clone(),
            });
        }
        let (g, params) = parametrize(&solution, &self.lagrangian.symbols());
        let mut family = MvfFamily::semi_holonomic(self.chart, reshape_g(self.chart, &g))
            .expect("shapes follow the chart");
        family.free_count = params.len();
        family.params = params;
        family.assumptions = solution.assumptions.clone();
        if regularity.kind == RegularityKind::PointDependent {
            family.assumptions.push(regularity.determinant.clone());
        }
        Ok(ElSolution {
            family,
            system,
            solution,
            regularity,
        })
    }

    /// The `dv` coefficient equations of `i(X)Ω_L = 0` for a general
    /// normalized `X`, solved for `F`.
    pub fn dv_system(&self) -> Result<ForcingRecord, LagrangianError> {
        let c = self.chart;
        let (x, f_syms, _) = generic_member(self.space());
        let omega = self.cartan_forms().omega;
        let form = contract(&x.to_multivec(), &omega).expect("degrees match");
        let eqs: Vec<Expr> = c
            .velocities()
            .into_iter()
            .map(|v| form.coefficient(&[v]))
            .collect();
        let (matrix, rhs) =
            linear_system_of(&eqs, &f_syms).expect("dv coefficients are affine in F");
        let solution = solve_linear(&matrix, &rhs)?;
        let mut table = vec![vec![None; c.m]; c.n];
        let mut forced = solution.compatible && solution.free_count == 0;
        if solution.compatible {
            for &col in &solution.pivot_columns {
                // A pivot variable is determined only if no free column feeds it.
                if solution.null_basis.iter().any(|nb| !nb[col].is_zero()) {
                    continue;
                }
                let (a, mu) = (col / c.m, col % c.m);
                let val = solution.particular[col].clone();
                let diff = &val - &Expr::sym(Symbol::v(a, mu));
                if !zero_test(&diff).is_proven_zero() {
                    forced = false;
                }
                table[a][mu] = Some(val);
            }
        }
        Ok(ForcingRecord {
            system: CoefficientSystem {
                matrix,
                rhs,
                unknowns: (0..c.n)
                    .flat_map(|a| (0..c.m).map(move |mu| f_name(a, mu)))
                    .collect(),
            },
            solution,
            f: table,
            forced_to_velocity: forced,
        })
    }

    /// Certify that a regular Lagrangian forces `F = v`.
    pub fn semi_holonomy_forcing(&self) -> Result<ForcingRecord, LagrangianError> {
        let reg = self.regularity();
        if !reg.certified() {
            return Err(LagrangianError::RegularityNotCertified(reg.verdict.label()));
        }
        self.dv_system()
    }

    /// Coefficients of `i(X)Ω_L` for a normalized jet-side member `X`.
    pub fn contraction_residual(&self, x: &MvfFamily) -> Result<ContractionResidual, LagrangianError> {
        if !x.is_lagrangian() || !x.is_normalized() || x.chart() != self.chart {
            return Err(LagrangianError::NotNormalized);
        }
        let omega = self.cartan_forms().omega;
        let form = contract(&x.to_multivec(), &omega).expect("degrees match");
        Ok(ContractionResidual::from_form(self.space(), &form))
    }

    /// Rank and compatibility facts for possibly singular Lagrangians.
    pub fn singular_report(&self) -> Result<SingularReport, LagrangianError> {
        let c = self.chart;
        let regularity = self.regularity();
        let hessian = self.hessian();
        let hessian_rank = rank(&hessian)?;
        let forcing = self.dv_system()?;
        let el_system = self.assemble_el_system();
        let el_solution = solve_linear(&el_system.matrix, &el_system.rhs)?;
        let free_count = el_solution.compatible.then_some(el_solution.free_count);
        let regular_count = (c.n * (c.m * c.m - 1)) as i64;
        let note = (regularity.kind == RegularityKind::Regular)
            .then(|| "regular; singular analysis not applicable".to_string());
        Ok(SingularReport {
            hessian_size: hessian.len(),
            extra_free: free_count.map(|f| f as i64 - regular_count),
            regularity,
            hessian_rank,
            forcing,
            el_system,
            el_solution,
            free_count,
            note,
        })
    }
}

pub(crate) fn classify_determinant(det: Expr) -> Regularity {
    let verdict = zero_test(&det);
    let kind = match &verdict {
        ZeroVerdict::ProvenZero => RegularityKind::Singular,
        ZeroVerdict::NumericallyZero(_) => RegularityKind::SampledSingular,
        ZeroVerdict::Undecided => RegularityKind::Undetermined,
        ZeroVerdict::ProvenNonzero(_) => {
            if det.symbols().iter().any(Symbol::is_coordinate) {
                RegularityKind::PointDependent
            } else {
                RegularityKind::Regular
            }
        }
    };
    Regularity {
        determinant: det,
        verdict,
        kind,
    }
}

pub(crate) fn g_unknowns(c: ChartSpec) -> Vec<String> {
    let mut out = vec![String::new(); c.n * c.m * c.m];
    for a in 0..c.n {
        for mu in 0..c.m {
            for rho in 0..c.m {
                out[g_index(c, a, mu, rho)] = g_name(a, mu, rho);
            }
        }
    }
    out
}

/// General solution `particular + Σ g_k · null_k` with fresh parameters.
pub(crate) fn parametrize(
    sol: &LinSolution,
    taken: &std::collections::BTreeSet<Symbol>,
) -> (Vec<Expr>, Vec<String>) {
    let params = fresh_params(sol.null_basis.len(), taken);
    let mut out = sol.particular.clone();
    for (name, basis) in params.iter().zip(&sol.null_basis) {
        let g = Expr::param(name);
        for (o, b) in out.iter_mut().zip(basis) {
            if !b.is_zero() {
                *o = &*o + &(b * &g);
            }
        }
    }
    (out, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mvf::zero_g;
    use std::collections::BTreeMap;
    use crate::symcore::{parse, parse_expr};

    fn sys(m: usize, n: usize, l: &str) -> LagrangianSystem {
        let chart = ChartSpec::new(m, n).unwrap();
        LagrangianSystem::new(chart, parse_expr(l, &chart).unwrap()).unwrap()
    }

    fn kg() -> LagrangianSystem {
        sys(2, 1, "1/2*(v1_1^2 - v1_2^2) - 1/2*y1^2")
    }

    fn e(s: &LagrangianSystem, t: &str) -> Expr {
        let params = (1..10).map(|k| format!("g{k}")).collect();
        parse(t, &s.chart, &params).unwrap()
    }

    #[test]
    fn rejects_momenta() {
        let chart = ChartSpec::new(1, 1).unwrap();
        let l = Expr::sym(Symbol::p(0, 0));
        assert!(matches!(LagrangianSystem::new(chart, l), Err(LagrangianError::ForeignSymbol(_))));
    }

    #[test]
    fn hessians() {
        let k = kg();
        let h = k.hessian();
        assert_eq!(h, vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::int(-1)]]);
        let s = sys(1, 2, "1/2*v1_1^2");
        assert_eq!(s.hessian()[1][1], Expr::zero());
        assert_eq!(s.hessian()[0][0], Expr::one());
    }

    #[test]
    fn regularity_kinds() {
        assert_eq!(kg().regularity().kind, RegularityKind::Regular);
        assert_eq!(kg().regularity().determinant, Expr::int(-1));
        assert_eq!(sys(1, 2, "1/2*v1_1^2").regularity().kind, RegularityKind::Singular);
        let p = sys(1, 1, "1/2*v1_1^2*y1").regularity();
        assert_eq!(p.kind, RegularityKind::PointDependent);
        assert_eq!(p.determinant, Expr::sym(Symbol::y(0)));
    }

    #[test]
    fn theta_free_particle() {
        let s = sys(1, 1, "1/2*v1_1^2");
        let cf = s.cartan_forms();
        assert_eq!(cf.theta.coefficient(&[Symbol::y(0)]), e(&s, "v1_1"));
        assert_eq!(cf.theta.coefficient(&[Symbol::x(0)]), e(&s, "-1/2*v1_1^2"));
        assert!(cf.consistent());
    }

    #[test]
    fn omega_kg_dy_volume() {
        let k = kg();
        let cf = k.cartan_forms();
        assert!(cf.consistent());
        let c = cf.omega.coefficient(&[Symbol::y(0), Symbol::x(0), Symbol::x(1)]);
        assert_eq!(c, e(&k, "y1"));
    }

    #[test]
    fn euler_lagrange_examples() {
        assert_eq!(sys(1, 1, "1/2*v1_1^2").euler_lagrange()[0].to_string(), "-w1_1_1");
        let k = kg();
        assert_eq!(k.euler_lagrange()[0], e(&k, "-y1 - w1_1_1 + w1_2_2"));
        let lap = sys(2, 1, "1/2*(v1_1^2 + v1_2^2)");
        assert_eq!(lap.euler_lagrange()[0], e(&lap, "-w1_1_1 - w1_2_2"));
    }

    #[test]
    fn assembled_systems() {
        let k = kg();
        let s = k.assemble_el_system();
        assert_eq!(s.unknowns, vec!["G1_1_1", "G1_1_2", "G1_2_1", "G1_2_2"]);
        assert_eq!(s.matrix[0], vec![Expr::one(), Expr::zero(), Expr::zero(), Expr::int(-1)]);
        assert_eq!(s.rhs[0], e(&k, "-y1"));
        let sing = sys(1, 2, "1/2*v1_1^2").assemble_el_system();
        assert_eq!(sing.matrix, vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::zero()]]);
        assert!(sing.rhs.iter().all(Expr::is_zero));
    }

    #[test]
    fn el_identity_holds() {
        for l in ["1/2*(v1_1^2 - v1_2^2) - 1/2*y1^2", "x1*y1*v1_2 + v1_1*v1_2 + 1/2*v1_1^2*y1"] {
            let s = sys(2, 1, l);
            assert!(s.el_identity().iter().all(Expr::is_zero), "{l}");
        }
    }

    #[test]
    fn kg_family() {
        let k = kg();
        let sol = k.solve_el_mvf().unwrap();
        assert_eq!(sol.family.free_count, 3);
        assert_eq!(sol.family.g[0][0][0], e(&k, "-y1 + g3"));
        assert_eq!(sol.family.g[0][1][1], Expr::param("g3"));
        let zero: BTreeMap<String, Expr> =
            sol.family.params.iter().map(|p| (p.clone(), Expr::zero())).collect();
        let member = sol.family.instantiate(&zero).unwrap();
        assert!(k.contraction_residual(&member).unwrap().all_proven_zero());
        assert!(k.contraction_residual(&sol.family).unwrap().all_proven_zero());
    }

    #[test]
    fn kg_zero_g_residual() {
        let k = kg();
        let x = MvfFamily::semi_holonomic(k.chart, zero_g(k.chart)).unwrap();
        let r = k.contraction_residual(&x).unwrap();
        assert_eq!(r.dy[0].value, e(&k, "y1"));
        assert!(r.dy[0].verdict.is_proven_nonzero());
    }

    #[test]
    fn dy_coefficient_matches_system() {
        // Cross terms between different fields make the factor/velocity
        // order of G visible. The dy coefficient is (-1)^m (lhs - rhs).
        let s = sys(2, 2, "v1_1*v2_2 + 1/2*v1_1^2 + 1/2*v2_1^2 + x2*y1*v1_2 + y2*v1_1^2");
        let c = s.chart;
        let g: Vec<Vec<Vec<Expr>>> = (0..2)
            .map(|a| {
                (0..2)
                    .map(|mu| (0..2).map(|rho| Expr::param(&g_name(a, mu, rho))).collect())
                    .collect()
            })
            .collect();
        let x = MvfFamily::semi_holonomic(c, g).unwrap();
        let r = s.contraction_residual(&x).unwrap();
        let sys_ = s.assemble_el_system();
        for a in 0..2 {
            let mut lhs = -sys_.rhs[a].clone();
            for (j, name) in sys_.unknowns.iter().enumerate() {
                lhs = &lhs + &(&sys_.matrix[a][j] * &Expr::param(name));
            }
            assert_eq!(r.dy[a].value, lhs);
        }
        assert!(!sys_.matrix[0][g_index(c, 1, 0, 1)].is_zero());
        assert!(sys_.matrix[0][g_index(c, 1, 1, 0)].is_zero());
    }

    #[test]
    fn forcing_regular_and_singular() {
        let rec = kg().semi_holonomy_forcing().unwrap();
        assert!(rec.forced_to_velocity);
        assert_eq!(rec.f[0][1], Some(Expr::sym(Symbol::v(0, 1))));
        let sing = sys(1, 2, "1/2*v1_1^2");
        assert!(matches!(
            sing.semi_holonomy_forcing(),
            Err(LagrangianError::RegularityNotCertified(_))
        ));
        let rec = sing.dv_system().unwrap();
        assert_eq!(rec.undetermined(), vec!["F2_1"]);
        assert_eq!(rec.f[0][0], Some(Expr::sym(Symbol::v(0, 0))));
    }

    #[test]
    fn mechanics_and_three_dimensions() {
        assert_eq!(sys(1, 2, "1/2*(v1_1^2 + v2_1^2) - y1*y2").solve_el_mvf().unwrap().family.free_count, 0);
        let s = sys(3, 1, "1/2*(v1_1^2 + v1_2^2 + v1_3^2)");
        assert_eq!(s.solve_el_mvf().unwrap().family.free_count, 8);
    }

    #[test]
    fn singular_reports() {
        let r = sys(1, 2, "1/2*v1_1^2").singular_report().unwrap();
        assert_eq!(r.hessian_rank, 1);
        assert!(r.el_solution.compatible);
        assert_eq!(r.free_count, Some(1));
        assert_eq!(r.extra_free, Some(1));
        let bad = sys(1, 2, "v1_1*y2");
        let r = bad.singular_report().unwrap();
        assert!(!r.el_solution.compatible);
        let rows: Vec<_> = r.el_solution.inconsistent_rows.iter().map(|(i, _)| *i).collect();
        assert!(rows.contains(&1));
        let row2 = &r.el_solution.inconsistent_rows.iter().find(|(i, _)| *i == 1).unwrap().1;
        assert_eq!(*row2, e(&bad, "v1_1"));
        assert!(matches!(bad.solve_el_mvf(), Err(LagrangianError::Singular(_))));
        let reg = kg().singular_report().unwrap();
        assert_eq!(reg.note.as_deref(), Some("regular; singular analysis not applicable"));
    }
}
