use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use mvfield::connection::{classify, curvature, mvf_to_connection, CurvatureReport};
use mvfield::hamiltonian::{fl_relatedness, hamiltonian_image, legendre_of, HamiltonianSystem, LegendreError};
use mvfield::lagrangian::{CoefficientSystem, LagrangianError, LagrangianSystem, SingularReport};
use mvfield::mvf::{f_name, g_name, MvfFamily};
use mvfield::numeric::{
    el_residual_grid, hdw_residual_grid, integrate_flat, second_order_residual_grid, GridSection, InitialData,
    NumericError, ResidualReport,
};
use mvfield::symcore::{ChartSpec, Expr, Symbol};

use crate::problem::{section_expr, Formalism, Problem};
use crate::report::{Report, Status};
use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub tol: f64,
    pub assign: BTreeMap<String, Expr>,
    pub check_fl: bool,
    pub grid: Option<PathBuf>,
    pub section: Vec<String>,
    pub integrate: bool,
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("report bodies are objects"),
    }
}

fn s(e: &Expr) -> Value {
    Value::String(e.to_string())
}

/// The problem expression with declared parameters substituted where
/// assigned.
fn expression(p: &Problem, opts: &Options) -> Expr {
    p.expression.subs(&declared_subs(p, opts))
}

fn declared_subs(p: &Problem, opts: &Options) -> BTreeMap<Symbol, Expr> {
    opts.assign
        .iter()
        .filter(|(k, _)| p.parameters.contains(*k))
        .map(|(k, v)| (Symbol::param(k.clone()), v.clone()))
        .collect()
}

/// Reject assignments that name neither a declared parameter nor one of
/// `family`.
fn check_names(p: &Problem, opts: &Options, family: &[String]) -> Result<(), CliError> {
    for k in opts.assign.keys() {
        if !p.parameters.contains(k) && !family.contains(k) {
            return Err(CliError::Input(format!("--assign: unknown parameter `{k}`")));
        }
    }
    Ok(())
}

fn lagrangian(p: &Problem, opts: &Options) -> Result<LagrangianSystem, CliError> {
    LagrangianSystem::new(p.chart, expression(p, opts)).map_err(|e| CliError::Input(e.to_string()))
}

fn hamiltonian(p: &Problem, opts: &Options) -> Result<HamiltonianSystem, CliError> {
    HamiltonianSystem::new(p.chart, expression(p, opts)).map_err(|e| CliError::Input(e.to_string()))
}

fn header(p: &Problem, e: &Expr) -> Map<String, Value> {
    obj(json!({
        "formalism": p.formalism.name(),
        "chart": {"m": p.chart.m, "N": p.chart.n},
        "expression": e.to_string(),
    }))
}

fn matrix(m: &[Vec<Expr>]) -> Value {
    m.iter().map(|r| r.iter().map(s).collect::<Vec<_>>()).collect()
}

/// Rows of a linear system as `Σ coeff·unknown = rhs`.
fn system_rows(sys: &CoefficientSystem) -> Value {
    sys.matrix
        .iter()
        .zip(&sys.rhs)
        .map(|(row, rhs)| {
            let terms: Vec<String> = row
                .iter()
                .zip(&sys.unknowns)
                .filter(|(c, _)| !c.is_zero())
                .map(|(c, u)| {
                    if c.is_one() {
                        u.clone()
                    } else {
                        format!("({c})*{u}")
                    }
                })
                .collect();
            let lhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            Value::String(format!("{lhs} = {rhs}"))
        })
        .collect()
}

fn family_json(x: &MvfFamily) -> Value {
    let mut f = Map::new();
    let mut g = Map::new();
    for (a, row) in x.f.iter().enumerate() {
        for (mu, e) in row.iter().enumerate() {
            f.insert(f_name(a, mu), s(e));
        }
    }
    for (a, block) in x.g.iter().enumerate() {
        for (mu, row) in block.iter().enumerate() {
            for (rho, e) in row.iter().enumerate() {
                g.insert(g_name(a, mu, rho), s(e));
            }
        }
    }
    json!({
        "free_count": x.free_count,
        "parameters": x.params,
        "F": f,
        "G": g,
        "assumptions": x.assumptions.iter().map(s).collect::<Vec<_>>(),
    })
}

fn singular_json(r: &SingularReport) -> Value {
    json!({
        "hessian_rank": r.hessian_rank,
        "hessian_size": r.hessian_size,
        "compatible": r.el_solution.compatible,
        "free_count": r.free_count,
        "extra_free": r.extra_free,
        "undetermined_F": r.forcing.undetermined(),
        "inconsistent_rows": r.el_solution.inconsistent_rows.iter()
            .map(|(i, e)| json!({"row": i + 1, "residual": e.to_string()}))
            .collect::<Vec<_>>(),
    })
}

fn curvature_json(r: &CurvatureReport) -> Value {
    let comps: Vec<Value> = r
        .components
        .iter()
        .map(|c| {
            json!({
                "group": c.kind.label(r.bundle),
                "pair": [c.mu + 1, c.eta + 1],
                "along": c.coord.to_string(),
                "value": c.value.to_string(),
                "verdict": c.verdict.label(),
            })
        })
        .collect();
    json!({"flatness": r.flatness.label(), "components": comps})
}

fn residual_json(r: &ResidualReport) -> Value {
    let eqs: Vec<Value> = r
        .equations
        .iter()
        .map(|e| json!({"name": e.name, "max_abs": e.max_abs, "rms": e.rms, "argmax": e.argmax}))
        .collect();
    json!({
        "extents": r.grid.extents,
        "spacing": r.grid.spacing,
        "interior_extents": r.interior_extents,
        "tolerance": r.tolerance,
        "max_abs": r.max_abs(),
        "pass": r.pass,
        "equations": eqs,
    })
}

fn numeric(e: NumericError) -> CliError {
    match e {
        NumericError::Eval(mvfield::symcore::EvalError::Unbound(Symbol::Param(name))) => {
            CliError::Input(format!("parameter `{name}` needs a value: pass --assign {name}=<value>"))
        }
        other => CliError::Input(other.to_string()),
    }
}

pub fn analyze(p: &Problem, opts: &Options) -> Result<Report, CliError> {
    check_names(p, opts, &[])?;
    let e = expression(p, opts);
    let mut body = header(p, &e);
    match p.formalism {
        Formalism::Lagrangian => {
            let sys = lagrangian(p, opts)?;
            let reg = sys.regularity();
            body.insert("hessian".into(), matrix(&sys.hessian()));
            body.insert(
                "regularity".into(),
                json!({
                    "determinant": reg.determinant.to_string(),
                    "kind": reg.kind.label(),
                    "verdict": reg.verdict.label(),
                    "certified": reg.certified(),
                }),
            );
            let el: Vec<Value> = sys
                .euler_lagrange()
                .iter()
                .enumerate()
                .map(|(a, e)| json!({"field": format!("y{}", a + 1), "expression": e.to_string()}))
                .collect();
            body.insert("euler_lagrange".into(), el.into());
            body.insert("cartan_cross_check".into(), sys.cartan_forms().consistent().into());
            if !reg.certified() {
                let r = sys.singular_report().map_err(|e| CliError::Input(e.to_string()))?;
                body.insert("singular".into(), singular_json(&r));
            }
        }
        Formalism::Hamiltonian => {
            let sys = hamiltonian(p, opts)?;
            let c = p.chart;
            let grad = sys.momentum_gradient();
            let force = sys.field_force();
            let mut eqs = Vec::new();
            for (a, row) in grad.iter().enumerate() {
                for (mu, g) in row.iter().enumerate() {
                    eqs.push(Value::String(format!("dy{}/dx{} = {g}", a + 1, mu + 1)));
                }
            }
            for (a, f) in force.iter().enumerate() {
                let div: Vec<String> = (1..=c.m).map(|mu| format!("dp{}_{mu}/dx{mu}", a + 1)).collect();
                eqs.push(Value::String(format!("{} = {f}", div.join(" + "))));
            }
            body.insert("hdw_equations".into(), eqs.into());
            body.insert("cartan_cross_check".into(), sys.hamilton_cartan_forms().consistent().into());
        }
    }
    Ok(Report::new("analyze", Status::Ok, body))
}

/// Solved family for either formalism, or the singular report when the
/// Lagrangian system has no regular solution.
fn solved_family(p: &Problem, opts: &Options) -> Result<Result<MvfFamily, Value>, CliError> {
    match p.formalism {
        Formalism::Lagrangian => {
            let sys = lagrangian(p, opts)?;
            match sys.solve_el_mvf() {
                Ok(sol) => Ok(Ok(sol.family)),
                Err(LagrangianError::Singular(_)) | Err(LagrangianError::RegularityNotCertified(_)) => {
                    let r = sys.singular_report().map_err(|e| CliError::Input(e.to_string()))?;
                    Ok(Err(singular_json(&r)))
                }
                Err(LagrangianError::Incompatible { rows }) => Ok(Err(json!({
                    "compatible": false,
                    "inconsistent_rows": rows.iter()
                        .map(|(i, e)| json!({"row": i + 1, "residual": e.to_string()}))
                        .collect::<Vec<_>>(),
                }))),
                Err(e) => Err(CliError::Input(e.to_string())),
            }
        }
        Formalism::Hamiltonian => {
            let sys = hamiltonian(p, opts)?;
            match sys.hdw_solve() {
                Ok(sol) => Ok(Ok(sol.family)),
                Err(e) => Ok(Err(json!({"compatible": false, "error": e.to_string()}))),
            }
        }
    }
}

pub fn solve(p: &Problem, opts: &Options) -> Result<Report, CliError> {
    check_names(p, opts, &[])?;
    let e = expression(p, opts);
    let mut body = header(p, &e);
    match p.formalism {
        Formalism::Lagrangian => {
            let sys = lagrangian(p, opts)?;
            let reg = sys.regularity();
            body.insert("regularity".into(), reg.kind.label().into());
            let forcing = sys.dv_system().map_err(|e| CliError::Input(e.to_string()))?;
            let f: Map<String, Value> = forcing
                .f
                .iter()
                .enumerate()
                .flat_map(|(a, row)| {
                    row.iter().enumerate().map(move |(mu, e)| {
                        (f_name(a, mu), e.as_ref().map(s).unwrap_or(Value::Null))
                    })
                })
                .collect();
            body.insert(
                "forcing".into(),
                json!({"forced_to_velocity": forcing.forced_to_velocity, "F": f}),
            );
        }
        Formalism::Hamiltonian => {
            let sys = hamiltonian(p, opts)?;
            if let Ok(sol) = sys.hdw_solve() {
                body.insert("constraints".into(), system_rows(&sol.g_system));
            }
        }
    }
    let status = match solved_family(p, opts)? {
        Ok(fam) => {
            body.insert("family".into(), family_json(&fam));
            Status::Ok
        }
        Err(singular) => {
            // A singular but compatible system is a finding, not a failure.
            let compatible = singular["compatible"] == Value::Bool(true);
            body.insert("singular".into(), singular);
            if compatible {
                Status::Ok
            } else {
                Status::Negative
            }
        }
    };
    Ok(Report::new("solve", status, body))
}

/// The solved family with every free parameter assigned, or an input error
/// naming the missing ones.
fn assigned_member(p: &Problem, opts: &Options, fam: &MvfFamily, default_zero: bool) -> Result<MvfFamily, CliError> {
    check_names(p, opts, &fam.params)?;
    let mut assign: BTreeMap<String, Expr> = opts
        .assign
        .iter()
        .filter(|(k, _)| fam.params.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let missing: Vec<&String> = fam.params.iter().filter(|k| !assign.contains_key(*k)).collect();
    if !missing.is_empty() {
        if !default_zero {
            let names: Vec<&str> = missing.iter().map(|s| s.as_str()).collect();
            return Err(CliError::Input(format!(
                "unassigned parameter(s) {}: pass --assign {}",
                names.join(", "),
                names.iter().map(|n| format!("{n}=<expr>")).collect::<Vec<_>>().join(",")
            )));
        }
        for k in missing {
            assign.insert(k.clone(), Expr::zero());
        }
    }
    let subs = declared_subs(p, opts);
    let member = fam.instantiate(&assign).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(MvfFamily {
        f: member.f.iter().map(|r| r.iter().map(|e| e.subs(&subs)).collect()).collect(),
        g: member
            .g
            .iter()
            .map(|b| b.iter().map(|r| r.iter().map(|e| e.subs(&subs)).collect()).collect())
            .collect(),
        ..member
    })
}

pub fn curvature_cmd(p: &Problem, opts: &Options) -> Result<Report, CliError> {
    let e = expression(p, opts);
    let mut body = header(p, &e);
    let fam = match solved_family(p, opts)? {
        Ok(f) => f,
        Err(singular) => {
            check_names(p, opts, &[])?;
            body.insert("singular".into(), singular);
            return Ok(Report::new("curvature", Status::Negative, body));
        }
    };
    let member = assigned_member(p, opts, &fam, false)?;
    let mut member_json = family_json(&member);
    if let Value::Object(m) = &mut member_json {
        m.shift_remove("free_count");
        m.shift_remove("parameters");
    }
    body.insert("member".into(), member_json);
    let report = match p.formalism {
        Formalism::Lagrangian => {
            let cls = classify(&member).map_err(|e| CliError::Input(e.to_string()))?;
            body.insert("semi_holonomic".into(), cls.semi_holonomic.into());
            body.insert("class".into(), cls.class.label().into());
            cls.curvature
        }
        Formalism::Hamiltonian => {
            curvature(&mvf_to_connection(&member).map_err(|e| CliError::Input(e.to_string()))?)
        }
    };
    body.insert("curvature".into(), curvature_json(&report));
    if let Some(k) = report.first_nonzero() {
        body.insert(
            "first_violation".into(),
            Value::String(format!(
                "{} component ({}, {}) along {}: {}",
                k.kind.label(report.bundle),
                k.mu + 1,
                k.eta + 1,
                k.coord,
                k.value
            )),
        );
    }
    let status = if report.flatness.is_flat_like() { Status::Ok } else { Status::Negative };
    Ok(Report::new("curvature", status, body))
}

pub fn legendre(p: &Problem, opts: &Options) -> Result<Report, CliError> {
    if p.formalism != Formalism::Lagrangian {
        return Err(CliError::Input("legendre needs a lagrangian problem file".into()));
    }
    let sys = lagrangian(p, opts)?;
    let mut body = header(p, sys.lagrangian());
    let momenta_json = |m: &[Vec<Expr>]| -> Value {
        let mut out = Map::new();
        for (a, row) in m.iter().enumerate() {
            for (mu, e) in row.iter().enumerate() {
                out.insert(format!("p{}_{}", a + 1, mu + 1), s(e));
            }
        }
        out.into()
    };
    let (map, ham) = match legendre_of(&sys) {
        Ok(pair) => pair,
        Err(LegendreError::NotRegular(reg)) => {
            check_names(p, opts, &[])?;
            let r = sys.singular_report().map_err(|e| CliError::Input(e.to_string()))?;
            body.insert("regularity".into(), reg.kind.label().into());
            body.insert("singular".into(), singular_json(&r));
            return Ok(Report::new("legendre", Status::Negative, body));
        }
        Err(err @ LegendreError::InversionFailure { .. }) => {
            check_names(p, opts, &[])?;
            if let LegendreError::InversionFailure { map, .. } = &err {
                body.insert("momenta".into(), momenta_json(&map.momenta));
            }
            body.insert("inversion_failure".into(), err.to_string().into());
            return Ok(Report::new("legendre", Status::Negative, body));
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    body.insert("momenta".into(), momenta_json(&map.momenta));
    if let Some(inv) = map.inverse_subs() {
        let v: Map<String, Value> = inv.iter().map(|(k, e)| (k.to_string(), s(e))).collect();
        body.insert("inverse".into(), v.into());
    }
    body.insert("hamiltonian".into(), s(ham.hamiltonian()));
    body.insert("hyper_regular".into(), map.hyper_regular.into());
    let mut status = Status::Ok;
    if opts.check_fl {
        let fam = sys.solve_el_mvf().map_err(|e| CliError::Input(e.to_string()))?.family;
        let x_l = assigned_member(p, opts, &fam, true)?;
        let defaulted: Vec<&String> = fam.params.iter().filter(|k| !opts.assign.contains_key(*k)).collect();
        let mut fl = match hamiltonian_image(&map, &x_l) {
            None => json!({"related": false, "error": "no Hamiltonian image without an inverse Legendre map"}),
            Some(x_h) => match fl_relatedness(&sys, &x_l, &x_h) {
                Ok(rel) => json!({
                    "related": true,
                    "f": rel.f.to_string(),
                    "components_checked": rel.components_checked,
                    "hamiltonian_member": family_json(&x_h),
                }),
                Err(e) => json!({"related": false, "error": e.to_string()}),
            },
        };
        if fl["related"] != Value::Bool(true) {
            status = Status::Negative;
        }
        fl["defaulted_to_zero"] = json!(defaulted);
        body.insert("fl_relatedness".into(), fl);
    } else {
        check_names(p, opts, &[])?;
    }
    Ok(Report::new("legendre", status, body))
}

fn load_section(p: &Problem, opts: &Options) -> Result<GridSection, CliError> {
    let sec = p.section.as_ref();
    let file = opts.grid.clone().or_else(|| sec.and_then(|s| s.file.clone()));
    let subs = declared_subs(p, opts);
    if let Some(path) = file {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Input(format!("cannot read grid file {}: {e}", path.display())))?;
        return GridSection::from_text(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())));
    }
    let grid = sec
        .and_then(|s| s.grid.clone())
        .ok_or_else(|| CliError::Input("verify needs a section grid ([section.grid]) or --grid <path>".into()))?;
    let mut ys: Vec<Option<Expr>> = match sec {
        Some(s) if !s.y.is_empty() => s.y.iter().cloned().map(Some).collect(),
        _ => vec![None; p.chart.n],
    };
    for entry in &opts.section {
        let (name, text) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--section: expected y<A>=expr, got `{entry}`")))?;
        let a = name
            .trim()
            .strip_prefix('y')
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|k| (1..=p.chart.n).contains(k))
            .ok_or_else(|| CliError::Input(format!("--section: `{name}` is not a field name")))?;
        ys[a - 1] = Some(section_expr(text.trim(), p.chart, &p.parameters, &format!("--section {name}"))?);
    }
    let ys: Vec<Expr> = ys
        .into_iter()
        .enumerate()
        .map(|(a, y)| y.map(|e| e.subs(&subs)).ok_or_else(|| CliError::Input(format!("no section expression for y{}", a + 1))))
        .collect::<Result<_, _>>()?;
    let ps: Option<Vec<Vec<Expr>>> = sec
        .and_then(|s| s.p.clone())
        .map(|rows| rows.iter().map(|r| r.iter().map(|e| e.subs(&subs)).collect()).collect());
    for e in ys.iter().chain(ps.iter().flatten().flatten()) {
        if let Some(s) = e.symbols().into_iter().find(Symbol::is_param) {
            return Err(CliError::Input(format!("parameter `{s}` needs a value: pass --assign {s}=<value>")));
        }
    }
    GridSection::sample(grid, &ys, ps.as_deref()).map_err(numeric)
}

pub fn verify(p: &Problem, opts: &Options) -> Result<Report, CliError> {
    let e = expression(p, opts);
    let mut body = header(p, &e);
    let mut reports = Map::new();
    match p.formalism {
        Formalism::Lagrangian => {
            let sys = lagrangian(p, opts)?;
            if opts.integrate {
                let fam = sys.solve_el_mvf().map_err(|e| CliError::Input(e.to_string()))?.family;
                let member = assigned_member(p, opts, &fam, false)?;
                let grid = p
                    .section
                    .as_ref()
                    .and_then(|s| s.grid.clone())
                    .ok_or_else(|| CliError::Input("--integrate needs [section.grid]".into()))?;
                let init = p
                    .section
                    .as_ref()
                    .and_then(|s| s.initial.clone())
                    .unwrap_or_else(|| zero_initial(p.chart));
                let out = match integrate_flat(&member, &init, &grid, opts.tol) {
                    Ok(out) => out,
                    Err(err @ (NumericError::NonFlat(_) | NumericError::CrossConsistency { .. })) => {
                        body.insert("integration".into(), json!({"error": err.to_string()}));
                        return Ok(Report::new("verify", Status::Negative, body));
                    }
                    Err(err) => return Err(numeric(err)),
                };
                body.insert(
                    "integration".into(),
                    json!({"flatness": out.flatness.label(), "cross_consistency": out.cross_consistency}),
                );
                let so = second_order_residual_grid(&member, &out.section, opts.tol).map_err(numeric)?;
                reports.insert("integrability".into(), residual_json(&so));
                let el = el_residual_grid(&sys, &out.section, opts.tol).map_err(numeric)?;
                reports.insert("euler_lagrange".into(), residual_json(&el));
            } else {
                check_names(p, opts, &[])?;
                let section = load_section(p, opts)?;
                let el = el_residual_grid(&sys, &section, opts.tol).map_err(numeric)?;
                reports.insert("euler_lagrange".into(), residual_json(&el));
            }
        }
        Formalism::Hamiltonian => {
            check_names(p, opts, &[])?;
            if opts.integrate {
                return Err(CliError::Input("--integrate works on lagrangian problem files".into()));
            }
            let sys = hamiltonian(p, opts)?;
            let section = load_section(p, opts)?;
            let r = hdw_residual_grid(&sys, &section, opts.tol).map_err(numeric)?;
            reports.insert("hdw".into(), residual_json(&r));
        }
    }
    let pass = reports.values().all(|r| r["pass"] == Value::Bool(true));
    body.insert("residuals".into(), reports.into());
    let status = if pass { Status::Ok } else { Status::Negative };
    Ok(Report::new("verify", status, body))
}

fn zero_initial(c: ChartSpec) -> InitialData {
    InitialData {
        y: vec![0.0; c.n],
        v: vec![vec![0.0; c.m]; c.n],
    }
}
