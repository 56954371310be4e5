//! Problem files: a TOML document with `schema = 1`.
//!
//! ```toml
//! schema = 1
//! formalism = "lagrangian"        # or "hamiltonian"
//! m = 2
//! N = 1
//! expression = "1/2*(v1_1^2 - v1_2^2) - 1/2*mass*y1^2"
//! parameters = ["mass"]
//!
//! [section]                       # only read by `verify`
//! y = ["cos(5/4*x1 + 3/4*x2)"]
//! p = [["...", "..."]]            # Hamiltonian files: p<A>_<μ>, row per field
//! file = "wave.grid"              # alternative: a columnar grid file
//!
//! [section.grid]
//! extents = [129, 129]
//! origin = [0.0, 0.0]             # optional, defaults to zero
//! spacing = [0.0078125, 0.0078125]
//!
//! [section.initial]               # `verify --integrate`, defaults to zero
//! y = [0.0]
//! v = [[0.0, 0.0]]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use mvfield::numeric::{Grid, InitialData};
use mvfield::symcore::{coordinate_from_name, parse, ChartSpec, Expr, ParseError, Symbol};

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formalism {
    Lagrangian,
    Hamiltonian,
}

impl Formalism {
    pub fn name(self) -> &'static str {
        match self {
            Formalism::Lagrangian => "lagrangian",
            Formalism::Hamiltonian => "hamiltonian",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    schema: u32,
    formalism: Formalism,
    m: usize,
    #[serde(rename = "N", alias = "n")]
    n: usize,
    expression: String,
    #[serde(default)]
    parameters: Vec<String>,
    section: Option<RawSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSection {
    y: Option<Vec<String>>,
    p: Option<Vec<Vec<String>>>,
    file: Option<PathBuf>,
    grid: Option<RawGrid>,
    initial: Option<RawInitial>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    extents: Vec<usize>,
    origin: Option<Vec<f64>>,
    spacing: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    y: Vec<f64>,
    v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub y: Vec<Expr>,
    pub p: Option<Vec<Vec<Expr>>>,
    pub file: Option<PathBuf>,
    pub grid: Option<Grid>,
    pub initial: Option<InitialData>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub chart: ChartSpec,
    pub formalism: Formalism,
    pub expression: Expr,
    pub parameters: BTreeSet<String>,
    pub section: Option<Section>,
}

/// Render a parse failure with a caret under the offending position.
pub fn parse_failure(label: &str, text: &str, err: &ParseError) -> CliError {
    let pad = " ".repeat(err.position().min(text.chars().count()));
    CliError::Input(format!("{label}: {err}\n    {text}\n    {pad}^"))
}

impl Problem {
    pub fn load(path: &Path) -> Result<Problem, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Problem::from_toml(&text, base)
    }

    /// `base` resolves a relative `section.file`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Problem, CliError> {
        let raw: RawProblem =
            toml::from_str(text).map_err(|e| CliError::Input(format!("problem file: {}", e.message())))?;
        if raw.schema != SCHEMA {
            return Err(CliError::Input(format!(
                "problem file: unsupported schema {} (expected {SCHEMA})",
                raw.schema
            )));
        }
        let chart = ChartSpec::new(raw.m, raw.n).map_err(|e| CliError::Input(format!("problem file: {e}")))?;
        let mut parameters = BTreeSet::new();
        for p in &raw.parameters {
            let ident = p.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ident || coordinate_from_name(p, &chart).is_some() || !parameters.insert(p.clone()) {
                return Err(CliError::Input(format!("problem file: bad parameter name `{p}`")));
            }
        }
        let expression =
            parse(&raw.expression, &chart, &parameters).map_err(|e| parse_failure("expression", &raw.expression, &e))?;
        let wrong_side = expression.symbols().into_iter().find(|s| {
            matches!(
                (raw.formalism, s),
                (Formalism::Lagrangian, Symbol::P { .. })
                    | (Formalism::Hamiltonian, Symbol::V { .. })
                    | (_, Symbol::W { .. })
            )
        });
        if let Some(s) = wrong_side {
            return Err(CliError::Input(format!(
                "expression: `{s}` is not a coordinate of the {} chart",
                raw.formalism.name()
            )));
        }
        let section = raw
            .section
            .map(|s| Section::from_raw(s, chart, &parameters, base))
            .transpose()?;
        Ok(Problem {
            chart,
            formalism: raw.formalism,
            expression,
            parameters,
            section,
        })
    }
}

/// Parse an expression that may only use base coordinates and parameters.
pub fn section_expr(text: &str, chart: ChartSpec, params: &BTreeSet<String>, label: &str) -> Result<Expr, CliError> {
    let e = parse(text, &chart, params).map_err(|e| parse_failure(label, text, &e))?;
    if let Some(s) = e.symbols().into_iter().find(|s| !matches!(s, Symbol::X(_) | Symbol::Param(_))) {
        return Err(CliError::Input(format!(
            "{label}: section expressions may only use x coordinates and parameters, found `{s}`"
        )));
    }
    Ok(e)
}

impl Section {
    fn from_raw(raw: RawSection, chart: ChartSpec, params: &BTreeSet<String>, base: &Path) -> Result<Section, CliError> {
        let y = match raw.y {
            None => Vec::new(),
            Some(ys) => {
                if ys.len() != chart.n {
                    return Err(CliError::Input(format!("section.y needs {} expressions", chart.n)));
                }
                ys.iter()
                    .enumerate()
                    .map(|(a, t)| section_expr(t, chart, params, &format!("section.y[{}]", a + 1)))
                    .collect::<Result<_, _>>()?
            }
        };
        let p = match raw.p {
            None => None,
            Some(rows) => {
                if rows.len() != chart.n || rows.iter().any(|r| r.len() != chart.m) {
                    return Err(CliError::Input(format!("section.p needs {}×{} expressions", chart.n, chart.m)));
                }
                let mut out = Vec::new();
                for (a, row) in rows.iter().enumerate() {
                    let mut r = Vec::new();
                    for (mu, t) in row.iter().enumerate() {
                        r.push(section_expr(t, chart, params, &format!("section.p{}_{}", a + 1, mu + 1))?);
                    }
                    out.push(r);
                }
                Some(out)
            }
        };
        let grid = raw
            .grid
            .map(|g| {
                let m = g.extents.len();
                Grid::new(g.extents, g.origin.unwrap_or_else(|| vec![0.0; m]), g.spacing)
                    .map_err(|e| CliError::Input(format!("section.grid: {e}")))
            })
            .transpose()?;
        if let Some(g) = &grid {
            if g.m() != chart.m {
                return Err(CliError::Input(format!("section.grid has {} axes, m = {}", g.m(), chart.m)));
            }
        }
        let initial = raw.initial.map(|i| InitialData { y: i.y, v: i.v });
        Ok(Section {
            y,
            p,
            file: raw.file.map(|f| base.join(f)),
            grid,
            initial,
        })
    }
}

/// `--assign name=expr` entries, values parsed on the problem chart.
pub fn parse_assignments(
    entries: &[String],
    chart: ChartSpec,
    params: &BTreeSet<String>,
) -> Result<BTreeMap<String, Expr>, CliError> {
    let mut out = BTreeMap::new();
    for entry in entries.iter().filter(|e| !e.trim().is_empty()) {
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--assign: expected name=value, got `{entry}`")))?;
        let name = name.trim();
        let e = parse(value.trim(), &chart, params).map_err(|e| parse_failure(&format!("--assign {name}"), value.trim(), &e))?;
        if out.insert(name.to_string(), e).is_some() {
            return Err(CliError::Input(format!("--assign: `{name}` given twice")));
        }
    }
    Ok(out)
}
