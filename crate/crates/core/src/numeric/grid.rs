use std::fmt::Write as _;

use rayon::prelude::*;

use super::{NumericError, Slots};
use crate::symcore::{ChartSpec, Expr, Symbol};

/// A uniform tensor-product grid over the base, `m ≤ 3`. Nodes are stored
/// with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub extents: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl Grid {
    pub fn new(extents: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self, NumericError> {
        let m = extents.len();
        if m == 0 || m > 3 {
            return Err(NumericError::Grid(format!("base dimension {m} outside 1..=3")));
        }
        if origin.len() != m || spacing.len() != m {
            return Err(NumericError::Grid("origin and spacing need one entry per axis".into()));
        }
        if let Some(h) = spacing.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(NumericError::Grid(format!("spacing must be positive, got {h}")));
        }
        if extents.contains(&0) {
            return Err(NumericError::Grid("every axis needs at least one node".into()));
        }
        Ok(Grid {
            extents,
            origin,
            spacing,
        })
    }

    /// `nodes` points per axis spanning `[lo, hi]`.
    pub fn uniform(m: usize, nodes: usize, lo: f64, hi: f64) -> Result<Self, NumericError> {
        if nodes < 2 {
            return Err(NumericError::Grid("need at least two nodes per axis".into()));
        }
        let h = (hi - lo) / (nodes - 1) as f64;
        Grid::new(vec![nodes; m], vec![lo; m], vec![h; m])
    }

    pub fn m(&self) -> usize {
        self.extents.len()
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.extents[axis + 1..].iter().product()
    }

    pub fn multi(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.m()];
        for k in (0..self.m()).rev() {
            out[k] = idx % self.extents[k];
            idx /= self.extents[k];
        }
        out
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .enumerate()
            .map(|(k, i)| i * self.stride(k))
            .sum()
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi(idx)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.origin[k] + i as f64 * self.spacing[k])
            .collect()
    }

    /// Nodes at least one step from every boundary, in storage order.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                self.multi(i)
                    .iter()
                    .zip(&self.extents)
                    .all(|(&k, &e)| k >= 1 && k + 1 < e)
            })
            .collect()
    }

    pub fn interior_extents(&self) -> Vec<usize> {
        self.extents.iter().map(|e| e.saturating_sub(2)).collect()
    }
}

/// Field values on a grid: `y^A` and optionally `v^A_μ` and `p^μ_A`,
/// each array indexed `[A·m + μ][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub grid: Grid,
    pub n: usize,
    pub y: Vec<Vec<f64>>,
    pub v: Option<Vec<Vec<f64>>>,
    pub p: Option<Vec<Vec<f64>>>,
}

impl GridSection {
    pub fn new(
        grid: Grid,
        n: usize,
        y: Vec<Vec<f64>>,
        v: Option<Vec<Vec<f64>>>,
        p: Option<Vec<Vec<f64>>>,
    ) -> Result<Self, NumericError> {
        let len = grid.len();
        let nm = n * grid.m();
        let ok = |arr: &Vec<Vec<f64>>, rows: usize| arr.len() == rows && arr.iter().all(|r| r.len() == len);
        if n == 0 || !ok(&y, n) {
            return Err(NumericError::Shape(format!("y needs {n} arrays of {len} nodes")));
        }
        if v.as_ref().is_some_and(|v| !ok(v, nm)) {
            return Err(NumericError::Shape(format!("v needs {nm} arrays of {len} nodes")));
        }
        if p.as_ref().is_some_and(|p| !ok(p, nm)) {
            return Err(NumericError::Shape(format!("p needs {nm} arrays of {len} nodes")));
        }
        Ok(GridSection { grid, n, y, v, p })
    }

    pub fn chart(&self) -> ChartSpec {
        ChartSpec {
            m: self.grid.m(),
            n: self.n,
        }
    }

    /// Sample closed-form `y^A(x)` and, optionally, `p^μ_A(x)`. The
    /// velocities `v^A_μ = ∂y^A/∂x^μ` are filled from symbolic derivatives.
    pub fn sample(grid: Grid, y: &[Expr], p: Option<&[Vec<Expr>]>) -> Result<Self, NumericError> {
        let m = grid.m();
        let n = y.len();
        let chart = ChartSpec { m, n };
        let slots = Slots::new(chart);
        for e in y.iter().chain(p.into_iter().flatten().flatten()) {
            if let Some(s) = e.symbols().into_iter().find(|s| !matches!(s, Symbol::X(_))) {
                return Err(NumericError::Unsupported(format!(
                    "section expressions may only use x coordinates, found `{s}`"
                )));
            }
        }
        let eval_all = |es: &[Expr]| -> Result<Vec<Vec<f64>>, NumericError> {
            es.iter()
                .map(|e| {
                    let c = slots.compile(e)?;
                    Ok((0..grid.len())
                        .into_par_iter()
                        .map(|i| {
                            let mut buf = vec![0.0; slots.len()];
                            buf[..m].copy_from_slice(&grid.coords(i));
                            c.eval(&buf)
                        })
                        .collect())
                })
                .collect()
        };
        let ys = eval_all(y)?;
        let dv: Vec<Expr> = y
            .iter()
            .flat_map(|e| (0..m).map(move |mu| e.diff(&Symbol::x(mu))))
            .collect();
        let vs = eval_all(&dv)?;
        let ps = match p {
            None => None,
            Some(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != m) {
                    return Err(NumericError::Shape(format!("p needs {n}×{m} expressions")));
                }
                let flat: Vec<Expr> = rows.iter().flatten().cloned().collect();
                Some(eval_all(&flat)?)
            }
        };
        GridSection::new(grid, n, ys, Some(vs), ps)
    }

    /// Column names in serialization order.
    pub fn columns(&self) -> Vec<String> {
        let c = self.chart();
        let mut out: Vec<String> = c.base().iter().map(|s| s.to_string()).collect();
        out.extend(c.fields().iter().map(|s| s.to_string()));
        if self.v.is_some() {
            out.extend(c.velocities().iter().map(|s| s.to_string()));
        }
        if self.p.is_some() {
            out.extend(c.momenta().iter().map(|s| s.to_string()));
        }
        out
    }

    /// Columnar text: one header line, then one node per row. Numbers use
    /// the shortest round-trip exponent form.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let mut out = format!(
            "# mvfield-grid 1 m={} n={} extents={} origin={} spacing={} columns={}\n",
            g.m(),
            self.n,
            g.extents.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
            join(&g.origin),
            join(&g.spacing),
            self.columns().join(","),
        );
        for i in 0..g.len() {
            let mut row: Vec<f64> = g.coords(i);
            row.extend(self.y.iter().map(|a| a[i]));
            for arr in self.v.iter().chain(self.p.iter()) {
                row.extend(arr.iter().map(|a| a[i]));
            }
            let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NumericError> {
        let fmt = |line: usize, message: &str| NumericError::Format {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| fmt(1, "empty file"))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("#") || tokens.next() != Some("mvfield-grid") || tokens.next() != Some("1") {
            return Err(fmt(1, "expected header `# mvfield-grid 1 ...`"));
        }
        let mut fields = std::collections::BTreeMap::new();
        for t in tokens {
            let (k, v) = t.split_once('=').ok_or_else(|| fmt(1, "header fields are key=value"))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| fmt(1, &format!("missing `{k}`")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| fmt(1, &format!("bad integer `{s}`")));
        let floats = |s: &str| -> Result<Vec<f64>, NumericError> {
            s.split(',')
                .map(|x| x.parse::<f64>().map_err(|_| fmt(1, &format!("bad number `{x}`"))))
                .collect()
        };
        let m = int(get("m")?)?;
        let n = int(get("n")?)?;
        let extents = get("extents")?
            .split(',')
            .map(int)
            .collect::<Result<Vec<_>, _>>()?;
        let grid = Grid::new(extents, floats(get("origin")?)?, floats(get("spacing")?)?)?;
        if grid.m() != m {
            return Err(fmt(1, "extents do not match m"));
        }
        let columns: Vec<&str> = get("columns")?.split(',').collect();
        let chart = ChartSpec::new(m, n).map_err(|e| fmt(1, &e.to_string()))?;
        let base = m + n;
        let has_v = columns.iter().any(|c| c.starts_with('v'));
        let has_p = columns.iter().any(|c| c.starts_with('p'));
        let width = base + chart.velocities().len() * (has_v as usize + has_p as usize);
        if columns.len() != width {
            return Err(fmt(1, "column list does not match m, n"));
        }
        let len = grid.len();
        let mut cols = vec![Vec::with_capacity(len); width];
        let mut rows = 0;
        for (lineno, line) in lines {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| fmt(lineno + 1, &format!("bad number `{x}`"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != width {
                return Err(fmt(lineno + 1, &format!("expected {width} values, found {}", vals.len())));
            }
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
            rows += 1;
        }
        if rows != len {
            return Err(fmt(1, &format!("expected {len} rows, found {rows}")));
        }
        let mut it = cols.into_iter().skip(m);
        let y: Vec<Vec<f64>> = it.by_ref().take(n).collect();
        let v = has_v.then(|| it.by_ref().take(n * m).collect());
        let p = has_p.then(|| it.by_ref().take(n * m).collect());
        GridSection::new(grid, n, y, v, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse_expr;

    #[test]
    fn indexing_round_trip() {
        let g = Grid::new(vec![3, 4, 2], vec![0.0; 3], vec![1.0; 3]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.index(&g.multi(i)), i);
        }
        assert_eq!(g.stride(2), 1);
        assert_eq!(g.interior().len(), 0);
        assert_eq!(Grid::uniform(2, 5, 0.0, 1.0).unwrap().interior().len(), 9);
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(Grid::new(vec![3], vec![0.0], vec![0.0]).is_err());
        assert!(Grid::new(vec![3; 4], vec![0.0; 4], vec![1.0; 4]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let chart = ChartSpec::new(2, 1).unwrap();
        let g = Grid::uniform(2, 4, 0.0, 1.0).unwrap();
        let y = parse_expr("x1^2 - 1/3*x2", &chart).unwrap();
        let p = vec![vec![parse_expr("x1", &chart).unwrap(), parse_expr("-x2", &chart).unwrap()]];
        let s = GridSection::sample(g, &[y], Some(&p)).unwrap();
        let text = s.to_text();
        assert_eq!(GridSection::from_text(&text).unwrap(), s);
    }

    #[test]
    fn sample_rejects_field_symbols() {
        let chart = ChartSpec::new(1, 1).unwrap();
        let g = Grid::uniform(1, 4, 0.0, 1.0).unwrap();
        let y = parse_expr("y1", &chart).unwrap();
        assert!(matches!(GridSection::sample(g, &[y], None), Err(NumericError::Unsupported(_))));
    }
}
