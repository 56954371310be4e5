use rayon::prelude::*;

use super::residual::{build_report, d1, d2, fill_first_order, interior_nodes};
use super::{Grid, GridSection, NumericError, ResidualReport, Slots};
use crate::connection::{curvature, mvf_to_connection, Flatness};
use crate::extcalc::Bundle;
use crate::mvf::MvfFamily;
use crate::symcore::Compiled;

/// Values of `y^A` and `v^A_μ` at the grid origin.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub y: Vec<f64>,
    /// `[A][μ]`.
    pub v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    /// Integrated `y` and `v` on every node.
    pub section: GridSection,
    pub flatness: Flatness,
    /// For `m = 2`: largest gap between the mixed second difference of `y`
    /// and `G_{12}`, `G_{21}` over interior nodes.
    pub cross_consistency: Option<f64>,
}

/// Per-axis right-hand side `d(y, v)/dx^μ = (F_μ, G_μ·)`.
struct Flow {
    slots: Slots,
    n: usize,
    m: usize,
    f: Vec<Compiled>,
    g: Vec<Compiled>,
}

impl Flow {
    fn new(x: &MvfFamily, slots: Slots) -> Result<Self, NumericError> {
        let c = x.chart();
        let f = x.f.iter().flatten().map(|e| slots.compile(e)).collect::<Result<_, _>>()?;
        let g = x
            .g
            .iter()
            .flatten()
            .flatten()
            .map(|e| slots.compile(e))
            .collect::<Result<_, _>>()?;
        Ok(Flow {
            slots,
            n: c.n,
            m: c.m,
            f,
            g,
        })
    }

    /// State layout: `y (N) | v (N·m)`.
    fn rhs(&self, axis: usize, at: &[f64], state: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut buf = vec![0.0; self.slots.len()];
        buf[..m].copy_from_slice(at);
        for a in 0..n {
            buf[self.slots.y(a)] = state[a];
            for mu in 0..m {
                buf[self.slots.v(a, mu)] = state[n + a * m + mu];
            }
        }
        let mut out = vec![0.0; state.len()];
        for a in 0..n {
            out[a] = self.f[a * m + axis].eval(&buf);
            for rho in 0..m {
                out[n + a * m + rho] = self.g[(a * m + axis) * m + rho].eval(&buf);
            }
        }
        out
    }

    fn rk4(&self, axis: usize, at: &[f64], state: &[f64], h: f64) -> Vec<f64> {
        let shifted = |dt: f64| {
            let mut x = at.to_vec();
            x[axis] += dt;
            x
        };
        let add = |s: &[f64], k: &[f64], c: f64| -> Vec<f64> {
            s.iter().zip(k).map(|(a, b)| a + c * b).collect()
        };
        let k1 = self.rhs(axis, at, state);
        let k2 = self.rhs(axis, &shifted(h / 2.0), &add(state, &k1, h / 2.0));
        let k3 = self.rhs(axis, &shifted(h / 2.0), &add(state, &k2, h / 2.0));
        let k4 = self.rhs(axis, &shifted(h), &add(state, &k3, h));
        (0..state.len())
            .map(|i| state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }

    /// States along a grid line starting at node `start`.
    fn sweep(&self, grid: &Grid, start: usize, axis: usize, init: Vec<f64>) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(grid.extents[axis]);
        let mut state = init;
        let mut node = start;
        for k in 0..grid.extents[axis] {
            if k > 0 {
                state = self.rk4(axis, &grid.coords(node), &state, grid.spacing[axis]);
                node += grid.stride(axis);
            }
            out.push(state.clone());
        }
        out
    }
}

/// Integral section of a flat, fully specified jet-side multivector field,
/// by RK4 sweeps: along `x¹` from the origin, then along `x²` from each node
/// of that line.
pub fn integrate_flat(
    x: &MvfFamily,
    init: &InitialData,
    grid: &Grid,
    cross_tolerance: f64,
) -> Result<Integration, NumericError> {
    if x.space.bundle != Bundle::Jet {
        return Err(NumericError::Unsupported("integration works on the jet side".into()));
    }
    let open = x.open_params();
    if !open.is_empty() {
        return Err(NumericError::NotConcrete(open.into_iter().collect()));
    }
    let c = x.chart();
    if grid.m() != c.m {
        return Err(NumericError::Shape(format!("grid has m = {}, field has m = {}", grid.m(), c.m)));
    }
    if c.m > 2 {
        return Err(NumericError::Unsupported(format!("integration supports m ≤ 2, got {}", c.m)));
    }
    if init.y.len() != c.n || init.v.len() != c.n || init.v.iter().any(|r| r.len() != c.m) {
        return Err(NumericError::Shape(format!("initial data needs {} fields and {}×{} velocities", c.n, c.n, c.m)));
    }
    let conn = mvf_to_connection(x).map_err(|e| NumericError::Unsupported(e.to_string()))?;
    let report = curvature(&conn);
    match report.flatness {
        Flatness::NonFlat => {
            let k = report.first_nonzero().expect("non-flat report has a witness");
            return Err(NumericError::NonFlat(format!(
                "{} component ({}, {}) along {} is {}",
                k.kind.label(report.bundle),
                k.mu + 1,
                k.eta + 1,
                k.coord,
                k.value
            )));
        }
        Flatness::Undecided => {
            return Err(NumericError::NonFlat("flatness could not be decided".into()));
        }
        Flatness::Flat | Flatness::SampledFlat => {}
    }

    let slots = Slots::new(c);
    let flow = Flow::new(x, slots)?;
    let mut start = init.y.clone();
    start.extend(init.v.iter().flatten());
    let first = flow.sweep(grid, 0, 0, start);
    let states: Vec<Vec<f64>> = if c.m == 1 {
        first
    } else {
        let columns: Vec<Vec<Vec<f64>>> = first
            .into_par_iter()
            .enumerate()
            .map(|(i, s)| flow.sweep(grid, grid.index(&[i, 0]), 1, s))
            .collect();
        columns.into_iter().flatten().collect()
    };

    let nm = c.n * c.m;
    let y = (0..c.n).map(|a| states.iter().map(|s| s[a]).collect()).collect();
    let v = (0..nm).map(|k| states.iter().map(|s| s[c.n + k]).collect()).collect();
    let section = GridSection::new(grid.clone(), c.n, y, Some(v), None)?;

    let cross_consistency = if c.m == 2 && grid.extents.iter().all(|&e| e >= 3) {
        let gap = mixed_gap(&flow, &section)?;
        if gap.is_nan() || gap > cross_tolerance {
            return Err(NumericError::CrossConsistency {
                max: gap,
                tol: cross_tolerance,
            });
        }
        Some(gap)
    } else {
        None
    };
    Ok(Integration {
        section,
        flatness: report.flatness,
        cross_consistency,
    })
}

fn mixed_gap(flow: &Flow, section: &GridSection) -> Result<f64, NumericError> {
    let g = &section.grid;
    let (n, m) = (flow.n, flow.m);
    let gaps: Vec<f64> = interior_nodes(g)?
        .par_iter()
        .map(|&i| {
            let mut buf = vec![0.0; flow.slots.len()];
            fill_first_order(&flow.slots, section, i, &mut buf);
            (0..n)
                .map(|a| {
                    let mixed = d2(g, &section.y[a], i, 0, 1);
                    let g12 = flow.g[a * m * m + 1].eval(&buf);
                    let g21 = flow.g[(a * m + 1) * m].eval(&buf);
                    (mixed - g12).abs().max((mixed - g21).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// Residual of the second-order integrability equations
/// `G^A_{νρ}(x, y, v) − ∂²y^A/∂x^ρ∂x^ν` and the holonomy equations
/// `F^A_ν − ∂y^A/∂x^ν` on a section.
pub fn second_order_residual_grid(
    x: &MvfFamily,
    section: &GridSection,
    tolerance: f64,
) -> Result<ResidualReport, NumericError> {
    let c = x.chart();
    if section.chart() != c {
        return Err(NumericError::Shape("section and field charts differ".into()));
    }
    let slots = Slots::new(c);
    let flow = Flow::new(x, slots)?;
    let (n, m) = (c.n, c.m);
    let mut names = Vec::new();
    for a in 1..=n {
        for nu in 1..=m {
            names.push(format!("F{a}_{nu} - dy{a}/dx{nu}"));
        }
    }
    for a in 1..=n {
        for nu in 1..=m {
            for rho in 1..=m {
                names.push(format!("G{a}_{nu}_{rho} - d2y{a}/dx{rho}dx{nu}"));
            }
        }
    }
    let g = &section.grid;
    build_report(g, names, tolerance, |i| {
        let mut buf = vec![0.0; slots.len()];
        fill_first_order(&slots, section, i, &mut buf);
        let mut out = Vec::new();
        for a in 0..n {
            for nu in 0..m {
                out.push(flow.f[a * m + nu].eval(&buf) - d1(g, &section.y[a], i, nu));
            }
        }
        for a in 0..n {
            for nu in 0..m {
                for rho in 0..m {
                    let fd = d2(g, &section.y[a], i, rho, nu);
                    out.push(flow.g[(a * m + nu) * m + rho].eval(&buf) - fd);
                }
            }
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::LagrangianSystem;
    use crate::numeric::el_residual_grid;
    use crate::symcore::{parse_expr, ChartSpec, Expr};

    fn laplace_member() -> MvfFamily {
        let c = ChartSpec::new(2, 1).unwrap();
        let g = vec![vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), -Expr::one()]]];
        MvfFamily::semi_holonomic(c, g).unwrap()
    }

    fn zero_init() -> InitialData {
        InitialData {
            y: vec![0.0],
            v: vec![vec![0.0, 0.0]],
        }
    }

    #[test]
    fn laplace_quadratic() {
        let grid = Grid::uniform(2, 17, 0.0, 1.0).unwrap();
        let out = integrate_flat(&laplace_member(), &zero_init(), &grid, 1e-8).unwrap();
        assert_eq!(out.flatness, Flatness::Flat);
        for i in 0..grid.len() {
            let x = grid.coords(i);
            let exact = 0.5 * (x[0] * x[0] - x[1] * x[1]);
            assert!((out.section.y[0][i] - exact).abs() < 1e-12);
        }
        let res = second_order_residual_grid(&laplace_member(), &out.section, 1e-9).unwrap();
        assert!(res.pass, "{}", res.max_abs());
        let c = ChartSpec::new(2, 1).unwrap();
        let sys = LagrangianSystem::new(c, parse_expr("1/2*(v1_1^2 + v1_2^2)", &c).unwrap()).unwrap();
        assert!(el_residual_grid(&sys, &out.section, 1e-9).unwrap().pass);
    }

    #[test]
    fn rejects_curved_field() {
        let c = ChartSpec::new(2, 1).unwrap();
        let g = vec![vec![vec![Expr::zero(), Expr::one()], vec![Expr::zero(), Expr::zero()]]];
        let x = MvfFamily::semi_holonomic(c, g).unwrap();
        let grid = Grid::uniform(2, 5, 0.0, 1.0).unwrap();
        match integrate_flat(&x, &zero_init(), &grid, 1e-8) {
            Err(NumericError::NonFlat(msg)) => assert!(msg.contains("symmetry"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn one_dimensional_oscillator() {
        // y'' = −y from y = 0, y' = 1 gives sin.
        let c = ChartSpec::new(1, 1).unwrap();
        let g = vec![vec![vec![parse_expr("-y1", &c).unwrap()]]];
        let x = MvfFamily::semi_holonomic(c, g).unwrap();
        let grid = Grid::uniform(1, 201, 0.0, 2.0).unwrap();
        let init = InitialData {
            y: vec![0.0],
            v: vec![vec![1.0]],
        };
        let out = integrate_flat(&x, &init, &grid, 1e-8).unwrap();
        assert!(out.cross_consistency.is_none());
        assert!((out.section.y[0][200] - 2.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn needs_concrete_field() {
        let c = ChartSpec::new(1, 1).unwrap();
        let g = vec![vec![vec![Expr::param("g1")]]];
        let x = MvfFamily::semi_holonomic(c, g).unwrap();
        let mut x = x;
        x.params = vec!["g1".into()];
        let grid = Grid::uniform(1, 5, 0.0, 1.0).unwrap();
        let init = InitialData {
            y: vec![0.0],
            v: vec![vec![0.0]],
        };
        assert!(matches!(integrate_flat(&x, &init, &grid, 1e-8), Err(NumericError::NotConcrete(_))));
    }
}
