use std::cmp::Ordering;
use std::fmt;

/// A named quantity an [`Expr`](super::Expr) may depend on.
///
/// Coordinate indices are stored zero-based and printed one-based, so
/// `Symbol::V { field: 0, dir: 1 }` prints as `v1_2`. Second-order jet
/// coordinates keep `lo <= hi`; use [`Symbol::w`] to build them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Base coordinate `x^μ`.
    X(usize),
    /// Field coordinate `y^A`.
    Y(usize),
    /// Velocity `v^A_μ`.
    V { field: usize, dir: usize },
    /// Multimomentum `p^μ_A`, printed `p<A>_<μ>`.
    P { field: usize, dir: usize },
    /// Symmetric second-order jet coordinate `w^A_{μν}`.
    W { field: usize, lo: usize, hi: usize },
    /// Named parameter: a constant as far as differentiation by
    /// coordinates is concerned.
    Param(String),
}

impl Symbol {
    pub fn x(mu: usize) -> Self {
        Symbol::X(mu)
    }

    pub fn y(a: usize) -> Self {
        Symbol::Y(a)
    }

    pub fn v(a: usize, mu: usize) -> Self {
        Symbol::V { field: a, dir: mu }
    }

    pub fn p(a: usize, mu: usize) -> Self {
        Symbol::P { field: a, dir: mu }
    }

    /// `w^A_{μν}` with the index pair sorted.
    pub fn w(a: usize, mu: usize, nu: usize) -> Self {
        Symbol::W {
            field: a,
            lo: mu.min(nu),
            hi: mu.max(nu),
        }
    }

    pub fn param(name: impl Into<String>) -> Self {
        Symbol::Param(name.into())
    }

    pub fn is_param(&self) -> bool {
        matches!(self, Symbol::Param(_))
    }

    pub fn is_coordinate(&self) -> bool {
        !self.is_param()
    }

    /// Rank used to order differentials and partials: velocities and
    /// momenta first, then fields, then base coordinates, matching the
    /// `dv ∧ dy ∧ dx` layout of the Cartan forms.
    fn differential_rank(&self) -> u8 {
        match self {
            Symbol::V { .. } | Symbol::W { .. } => 0,
            Symbol::P { .. } => 1,
            Symbol::Y(_) => 2,
            Symbol::X(_) => 3,
            Symbol::Param(_) => 4,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::X(mu) => write!(f, "x{}", mu + 1),
            Symbol::Y(a) => write!(f, "y{}", a + 1),
            Symbol::V { field, dir } => write!(f, "v{}_{}", field + 1, dir + 1),
            Symbol::P { field, dir } => write!(f, "p{}_{}", field + 1, dir + 1),
            Symbol::W { field, lo, hi } => write!(f, "w{}_{}_{}", field + 1, lo + 1, hi + 1),
            Symbol::Param(name) => f.write_str(name),
        }
    }
}

/// A coordinate used as a differential `dz` or a partial `∂/∂z`.
///
/// Ordered so that wedge monomials read `dv ∧ dp ∧ dy ∧ dx`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coord(pub Symbol);

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .differential_rank()
            .cmp(&other.0.differential_rank())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Symbol> for Coord {
    fn from(s: Symbol) -> Self {
        Coord(s)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Dimensions of a natural chart: `m` base directions and `n` field
/// components. Fixes the coordinate names of both jet and multimomentum
/// bundles. The base volume form is `dx1^...^dxm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChartSpec {
    pub m: usize,
    pub n: usize,
}

impl ChartSpec {
    pub fn new(m: usize, n: usize) -> Result<Self, ChartError> {
        if m == 0 || n == 0 {
            return Err(ChartError::ZeroDimension { m, n });
        }
        Ok(ChartSpec { m, n })
    }

    pub fn base(&self) -> Vec<Symbol> {
        (0..self.m).map(Symbol::X).collect()
    }

    pub fn fields(&self) -> Vec<Symbol> {
        (0..self.n).map(Symbol::Y).collect()
    }

    pub fn velocities(&self) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.n * self.m);
        for a in 0..self.n {
            for mu in 0..self.m {
                out.push(Symbol::v(a, mu));
            }
        }
        out
    }

    pub fn momenta(&self) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.n * self.m);
        for a in 0..self.n {
            for mu in 0..self.m {
                out.push(Symbol::p(a, mu));
            }
        }
        out
    }

    /// Second-order coordinates with `μ ≤ ν`.
    pub fn second_order(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for mu in 0..self.m {
                for nu in mu..self.m {
                    out.push(Symbol::w(a, mu, nu));
                }
            }
        }
        out
    }

    /// Whether `s` names a coordinate that exists on this chart (any bundle).
    pub fn contains(&self, s: &Symbol) -> bool {
        match *s {
            Symbol::X(mu) => mu < self.m,
            Symbol::Y(a) => a < self.n,
            Symbol::V { field, dir } | Symbol::P { field, dir } => field < self.n && dir < self.m,
            Symbol::W { field, lo, hi } => field < self.n && lo <= hi && hi < self.m,
            Symbol::Param(_) => false,
        }
    }

    /// Dimension of `J¹E` (equal to that of `J¹*E`).
    pub fn jet_dim(&self) -> usize {
        self.m + self.n + self.n * self.m
    }

    /// Flat index of the pair `(A, μ)`.
    pub fn pair(&self, a: usize, mu: usize) -> usize {
        a * self.m + mu
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChartError {
    #[error("chart dimensions must be positive (m = {m}, N = {n})")]
    ZeroDimension { m: usize, n: usize },
}
