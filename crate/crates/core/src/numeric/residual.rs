use rayon::prelude::*;

use super::{reduce, Grid, GridSection, NumericError, Slots};
use crate::hamiltonian::HamiltonianSystem;
use crate::lagrangian::LagrangianSystem;
use crate::symcore::{ChartSpec, Compiled};

#[derive(Debug, Clone, PartialEq)]
pub struct EquationResidual {
    pub name: String,
    /// One value per interior node, in storage order.
    pub values: Vec<f64>,
    pub max_abs: f64,
    pub rms: f64,
    /// Base coordinates of the node attaining `max_abs`.
    pub argmax: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub grid: Grid,
    pub interior_extents: Vec<usize>,
    pub equations: Vec<EquationResidual>,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn max_abs(&self) -> f64 {
        self.equations.iter().map(|e| e.max_abs).fold(0.0, f64::max)
    }
}

/// Central first difference of `arr` along `axis` at node `i`.
pub(crate) fn d1(grid: &Grid, arr: &[f64], i: usize, axis: usize) -> f64 {
    let s = grid.stride(axis);
    (arr[i + s] - arr[i - s]) / (2.0 * grid.spacing[axis])
}

/// Central second difference; the mixed case uses the four-point stencil.
pub(crate) fn d2(grid: &Grid, arr: &[f64], i: usize, mu: usize, nu: usize) -> f64 {
    let (sm, hm) = (grid.stride(mu), grid.spacing[mu]);
    if mu == nu {
        return (arr[i + sm] - 2.0 * arr[i] + arr[i - sm]) / (hm * hm);
    }
    let (sn, hn) = (grid.stride(nu), grid.spacing[nu]);
    (arr[i + sm + sn] - arr[i + sm - sn] - arr[i - sm + sn] + arr[i - sm - sn]) / (4.0 * hm * hn)
}

pub(crate) fn interior_nodes(grid: &Grid) -> Result<Vec<usize>, NumericError> {
    if grid.extents.iter().any(|&e| e < 3) {
        return Err(NumericError::Grid(
            "central stencils need at least three nodes per axis".into(),
        ));
    }
    Ok(grid.interior())
}

fn check_chart(section: &GridSection, chart: ChartSpec) -> Result<(), NumericError> {
    if section.chart() != chart {
        return Err(NumericError::Shape(format!(
            "section has m = {}, N = {} but the system has m = {}, N = {}",
            section.grid.m(),
            section.n,
            chart.m,
            chart.n
        )));
    }
    Ok(())
}

/// Evaluate `per_node` on every interior node in parallel and reduce each
/// equation in node order.
pub(crate) fn build_report(
    grid: &Grid,
    names: Vec<String>,
    tolerance: f64,
    per_node: impl Fn(usize) -> Vec<f64> + Sync,
) -> Result<ResidualReport, NumericError> {
    let nodes = interior_nodes(grid)?;
    let rows: Vec<Vec<f64>> = nodes.par_iter().map(|&i| per_node(i)).collect();
    let equations: Vec<EquationResidual> = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let values: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let (max_abs, rms, arg) = reduce(&values);
            let argmax = nodes.get(arg).map(|&i| grid.coords(i)).unwrap_or_default();
            EquationResidual {
                name,
                values,
                max_abs,
                rms,
                argmax,
            }
        })
        .collect();
    let pass = equations.iter().all(|e| e.max_abs <= tolerance);
    Ok(ResidualReport {
        grid: grid.clone(),
        interior_extents: grid.interior_extents(),
        equations,
        tolerance,
        pass,
    })
}

/// Fill the `x, y, v` slots at node `i`; `v` comes from the section when it
/// carries velocities and from central differences otherwise.
pub(crate) fn fill_first_order(slots: &Slots, section: &GridSection, i: usize, buf: &mut [f64]) {
    let g = &section.grid;
    for (mu, x) in g.coords(i).into_iter().enumerate() {
        buf[slots.x(mu)] = x;
    }
    for a in 0..section.n {
        buf[slots.y(a)] = section.y[a][i];
        for mu in 0..g.m() {
            buf[slots.v(a, mu)] = match &section.v {
                Some(v) => v[a * g.m() + mu][i],
                None => d1(g, &section.y[a], i, mu),
            };
        }
    }
}

/// Euler–Lagrange residual of a section: `v` from the prolongation, `w`
/// from second differences, boundary nodes trimmed.
pub fn el_residual_grid(
    sys: &LagrangianSystem,
    section: &GridSection,
    tolerance: f64,
) -> Result<ResidualReport, NumericError> {
    let chart = sys.chart();
    check_chart(section, chart)?;
    let slots = Slots::new(chart);
    let el: Vec<Compiled> = sys
        .euler_lagrange()
        .iter()
        .map(|e| slots.compile(e))
        .collect::<Result<_, _>>()?;
    let names = (1..=chart.n).map(|a| format!("EL{a}")).collect();
    let g = &section.grid;
    build_report(g, names, tolerance, |i| {
        let mut buf = vec![0.0; slots.len()];
        fill_first_order(&slots, section, i, &mut buf);
        for a in 0..chart.n {
            for mu in 0..chart.m {
                for nu in mu..chart.m {
                    buf[slots.w(a, mu, nu)] = d2(g, &section.y[a], i, mu, nu);
                }
            }
        }
        el.iter().map(|c| c.eval(&buf)).collect()
    })
}

/// De Donder–Weyl residuals of a section `(y, p)`:
/// `∂y^A/∂x^μ − ∂H/∂p^μ_A` and `Σ_μ ∂p^μ_A/∂x^μ + ∂H/∂y^A`.
pub fn hdw_residual_grid(
    sys: &HamiltonianSystem,
    section: &GridSection,
    tolerance: f64,
) -> Result<ResidualReport, NumericError> {
    let chart = sys.chart();
    check_chart(section, chart)?;
    let p = section.p.as_ref().ok_or(NumericError::MissingMomenta)?;
    let slots = Slots::new(chart);
    let hp: Vec<Compiled> = sys
        .momentum_gradient()
        .iter()
        .flatten()
        .map(|e| slots.compile(e))
        .collect::<Result<_, _>>()?;
    let force: Vec<Compiled> = sys
        .field_force()
        .iter()
        .map(|e| slots.compile(e))
        .collect::<Result<_, _>>()?;
    let mut names = Vec::new();
    for a in 1..=chart.n {
        for mu in 1..=chart.m {
            names.push(format!("dy{a}/dx{mu} - dH/dp{a}_{mu}"));
        }
    }
    for a in 1..=chart.n {
        names.push(format!("div p{a} + dH/dy{a}"));
    }
    let g = &section.grid;
    let m = chart.m;
    build_report(g, names, tolerance, |i| {
        let mut buf = vec![0.0; slots.len()];
        for (mu, x) in g.coords(i).into_iter().enumerate() {
            buf[slots.x(mu)] = x;
        }
        for a in 0..chart.n {
            buf[slots.y(a)] = section.y[a][i];
            for mu in 0..m {
                buf[slots.p(a, mu)] = p[a * m + mu][i];
            }
        }
        let mut out = Vec::with_capacity(chart.n * (m + 1));
        for a in 0..chart.n {
            for mu in 0..m {
                out.push(d1(g, &section.y[a], i, mu) - hp[a * m + mu].eval(&buf));
            }
        }
        for a in 0..chart.n {
            let div: f64 = (0..m).map(|mu| d1(g, &p[a * m + mu], i, mu)).sum();
            out.push(div - force[a].eval(&buf));
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{parse_expr, Symbol};

    fn kg() -> LagrangianSystem {
        let c = ChartSpec::new(2, 1).unwrap();
        let l = parse_expr("1/2*(v1_1^2 - v1_2^2 - y1^2)", &c).unwrap();
        LagrangianSystem::new(c, l).unwrap()
    }

    fn section(text: &str, nodes: usize) -> GridSection {
        let c = ChartSpec::new(2, 1).unwrap();
        let g = Grid::uniform(2, nodes, 0.0, 1.0).unwrap();
        GridSection::sample(g, &[parse_expr(text, &c).unwrap()], None).unwrap()
    }

    #[test]
    fn dispersion_satisfied_is_small() {
        let r = el_residual_grid(&kg(), &section("cos(5/4*x1 + 3/4*x2)", 101), 1e-4).unwrap();
        assert!(r.pass, "{}", r.max_abs());
        assert_eq!(r.equations[0].values.len(), 99 * 99);
        assert_eq!(r.interior_extents, vec![99, 99]);
    }

    #[test]
    fn dispersion_violated_is_large() {
        // cos(x1) alone has k1 = 1, k2 = 0 and does satisfy k1² − k2² = 1.
        let ok = el_residual_grid(&kg(), &section("cos(x1)", 41), 1e-3).unwrap();
        assert!(ok.pass);
        let bad = el_residual_grid(&kg(), &section("cos(x1 + x2)", 41), 1e-3).unwrap();
        assert!(!bad.pass);
        assert!(bad.max_abs() > 0.5);
    }

    #[test]
    fn free_linear_section_vanishes() {
        let c = ChartSpec::new(1, 1).unwrap();
        let sys = LagrangianSystem::new(c, parse_expr("1/2*v1_1^2", &c).unwrap()).unwrap();
        let g = Grid::uniform(1, 11, 0.0, 1.0).unwrap();
        let s = GridSection::sample(g, &[parse_expr("2 + 3*x1", &c).unwrap()], None).unwrap();
        assert!(el_residual_grid(&sys, &s, 1e-12).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn hdw_plane_wave() {
        let c = ChartSpec::new(2, 1).unwrap();
        let h = parse_expr("1/2*(p1_1^2 - p1_2^2 + y1^2)", &c).unwrap();
        let sys = HamiltonianSystem::new(c, h).unwrap();
        let g = Grid::uniform(2, 81, 0.0, 1.0).unwrap();
        let y = parse_expr("cos(5/4*x1 + 3/4*x2)", &c).unwrap();
        let p = vec![vec![y.diff(&Symbol::x(0)), -y.diff(&Symbol::x(1))]];
        let s = GridSection::sample(g, &[y], Some(&p)).unwrap();
        let r = hdw_residual_grid(&sys, &s, 1e-3).unwrap();
        assert!(r.pass, "{}", r.max_abs());
        assert_eq!(r.equations.len(), 3);
        let no_p = GridSection { p: None, ..s };
        assert_eq!(hdw_residual_grid(&sys, &no_p, 1e-3), Err(NumericError::MissingMomenta));
    }
}
