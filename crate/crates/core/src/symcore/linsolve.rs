use super::expr::Expr;
use super::zero::{zero_test, ZeroVerdict};

pub type ExprMatrix = Vec<Vec<Expr>>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinSolveError {
    #[error("matrix has {rows} rows but right-hand side has {rhs} entries")]
    ShapeMismatch { rows: usize, rhs: usize },
    #[error("row {row} has {len} entries, expected {cols}")]
    RaggedRow { row: usize, len: usize, cols: usize },
    #[error("cannot certify whether the pivot candidate in row {row}, column {col} vanishes: {entry}")]
    PivotUndecidable { row: usize, col: usize, entry: String },
}

/// A pivot or compatibility decision that did not rest on an exact proof.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditNote {
    pub row: usize,
    pub col: Option<usize>,
    pub entry: Expr,
    pub verdict: ZeroVerdict,
}

/// Result of fraction-field Gaussian elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct LinSolution {
    pub rank: usize,
    pub compatible: bool,
    /// Solution with every free unknown set to zero. Meaningful only when
    /// `compatible`.
    pub particular: Vec<Expr>,
    /// One vector per free column, in column order.
    pub null_basis: Vec<Vec<Expr>>,
    pub free_count: usize,
    pub pivot_columns: Vec<usize>,
    pub free_columns: Vec<usize>,
    /// Original indices of rows reduced to `0 = r` with `r` not zero.
    pub inconsistent_rows: Vec<(usize, Expr)>,
    /// Non-constant pivots, assumed not to vanish.
    pub assumptions: Vec<Expr>,
    /// Entries treated as zero on sampled evidence only.
    pub audit: Vec<AuditNote>,
}

/// Solve `matrix · u = rhs` over the field of fractions of expressions.
///
/// Pivots are chosen column by column, taking the first row whose entry is
/// [`ZeroVerdict::ProvenNonzero`]; sampled-zero entries are treated as zero
/// and recorded in `audit`.
pub fn solve_linear(matrix: &[Vec<Expr>], rhs: &[Expr]) -> Result<LinSolution, LinSolveError> {
    let rows = matrix.len();
    if rhs.len() != rows {
        return Err(LinSolveError::ShapeMismatch {
            rows,
            rhs: rhs.len(),
        });
    }
    let cols = matrix.first().map_or(0, |r| r.len());
    for (i, r) in matrix.iter().enumerate() {
        if r.len() != cols {
            return Err(LinSolveError::RaggedRow {
                row: i,
                len: r.len(),
                cols,
            });
        }
    }

    let mut a: ExprMatrix = matrix.to_vec();
    let mut b: Vec<Expr> = rhs.to_vec();
    let mut origin: Vec<usize> = (0..rows).collect();
    let mut audit = Vec::new();
    let mut assumptions = Vec::new();
    let mut pivot_columns = Vec::new();
    let mut r = 0;

    for col in 0..cols {
        if r == rows {
            break;
        }
        let mut chosen = None;
        for i in r..rows {
            if a[i][col].is_zero() {
                continue;
            }
            match zero_test(&a[i][col]) {
                ZeroVerdict::ProvenNonzero(_) => {
                    chosen = Some(i);
                    break;
                }
                ZeroVerdict::ProvenZero => {}
                v @ ZeroVerdict::NumericallyZero(_) => audit.push(AuditNote {
                    row: origin[i],
                    col: Some(col),
                    entry: a[i][col].clone(),
                    verdict: v,
                }),
                ZeroVerdict::Undecided => {
                    return Err(LinSolveError::PivotUndecidable {
                        row: origin[i],
                        col,
                        entry: a[i][col].to_string(),
                    })
                }
            }
        }
        let Some(p) = chosen else { continue };
        a.swap(r, p);
        b.swap(r, p);
        origin.swap(r, p);

        let pivot = a[r][col].clone();
        if !pivot.is_constant() {
            assumptions.push(pivot.clone());
        }
        for e in &mut a[r][col..cols] {
            *e = &*e / &pivot;
        }
        b[r] = &b[r] / &pivot;

        for i in 0..rows {
            if i == r || a[i][col].is_zero() {
                continue;
            }
            let factor = a[i][col].clone();
            let pivot_row = a[r][col..cols].to_vec();
            for (e, pr) in a[i][col..cols].iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *e = &*e - &(&factor * pr);
                }
            }
            b[i] = &b[i] - &(&factor * &b[r]);
        }
        pivot_columns.push(col);
        r += 1;
    }

    let rank = r;
    let mut inconsistent_rows = Vec::new();
    for i in rank..rows {
        if b[i].is_zero() {
            continue;
        }
        match zero_test(&b[i]) {
            ZeroVerdict::ProvenZero => {}
            v @ ZeroVerdict::NumericallyZero(_) => audit.push(AuditNote {
                row: origin[i],
                col: None,
                entry: b[i].clone(),
                verdict: v,
            }),
            _ => inconsistent_rows.push((origin[i], b[i].clone())),
        }
    }

    let free_columns: Vec<usize> = (0..cols).filter(|c| !pivot_columns.contains(c)).collect();
    let mut particular = vec![Expr::zero(); cols];
    for (k, &pc) in pivot_columns.iter().enumerate() {
        particular[pc] = b[k].clone();
    }
    let null_basis = free_columns
        .iter()
        .map(|&fc| {
            let mut v = vec![Expr::zero(); cols];
            v[fc] = Expr::one();
            for (k, &pc) in pivot_columns.iter().enumerate() {
                v[pc] = -&a[k][fc];
            }
            v
        })
        .collect();

    Ok(LinSolution {
        rank,
        compatible: inconsistent_rows.is_empty(),
        particular,
        null_basis,
        free_count: cols - rank,
        pivot_columns,
        free_columns,
        inconsistent_rows,
        assumptions,
        audit,
    })
}

/// `matrix · u`.
pub fn mat_vec(matrix: &[Vec<Expr>], u: &[Expr]) -> Vec<Expr> {
    matrix
        .iter()
        .map(|row| row.iter().zip(u).map(|(a, x)| a * x).sum())
        .collect()
}

/// Determinant by cofactor expansion, skipping zero entries.
pub fn determinant(matrix: &[Vec<Expr>]) -> Expr {
    let n = matrix.len();
    let cols: Vec<usize> = (0..n).collect();
    det_minor(matrix, 0, &cols)
}

fn det_minor(m: &[Vec<Expr>], row: usize, cols: &[usize]) -> Expr {
    if cols.is_empty() {
        return Expr::one();
    }
    if cols.len() == 1 {
        return m[row][cols[0]].clone();
    }
    let mut acc = Expr::zero();
    for (k, &c) in cols.iter().enumerate() {
        let entry = &m[row][c];
        if entry.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&j| j != c).collect();
        let minor = det_minor(m, row + 1, &rest);
        if minor.is_zero() {
            continue;
        }
        let term = entry * &minor;
        acc = if k % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

/// Rank of a matrix (zero right-hand side).
pub fn rank(matrix: &[Vec<Expr>]) -> Result<usize, LinSolveError> {
    let zeros = vec![Expr::zero(); matrix.len()];
    Ok(solve_linear(matrix, &zeros)?.rank)
}

/// Coefficient matrix and right-hand side of expressions that are affine
/// in `unknowns`: `exprs[i] = Σ_j M[i][j] u_j − rhs[i]`.
///
/// Returns `None` if some expression is not affine in the unknowns.
pub fn linear_system_of(
    exprs: &[Expr],
    unknowns: &[super::Symbol],
) -> Option<(ExprMatrix, Vec<Expr>)> {
    let zero_map = unknowns
        .iter()
        .map(|u| (u.clone(), Expr::zero()))
        .collect();
    let mut matrix = Vec::with_capacity(exprs.len());
    let mut rhs = Vec::with_capacity(exprs.len());
    for e in exprs {
        let row: Vec<Expr> = unknowns.iter().map(|u| e.diff(u)).collect();
        for entry in &row {
            if unknowns.iter().any(|u| entry.depends_on(u)) {
                return None;
            }
        }
        rhs.push(-e.subs(&zero_map));
        matrix.push(row);
    }
    Some((matrix, rhs))
}
