use super::expr::Expr;
use super::symbol::{ChartSpec, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TotalDerivativeError {
    #[error("total derivative needs first-order input, found second-order symbol `{0}`")]
    SecondOrderInput(Symbol),
    #[error("base index {mu} out of range for m = {m}")]
    BadIndex { mu: usize, m: usize },
}

/// Total derivative `D_μ = ∂/∂x^μ + v^A_μ ∂/∂y^A + w^A_{μν} ∂/∂v^A_ν`.
///
/// `mu` is zero-based. Input must not contain `w` symbols.
pub fn total_derivative(e: &Expr, mu: usize, chart: &ChartSpec) -> Result<Expr, TotalDerivativeError> {
    if mu >= chart.m {
        return Err(TotalDerivativeError::BadIndex { mu, m: chart.m });
    }
    if let Some(w) = e.symbols().into_iter().find(|s| matches!(s, Symbol::W { .. })) {
        return Err(TotalDerivativeError::SecondOrderInput(w));
    }
    let mut acc = e.diff(&Symbol::x(mu));
    for a in 0..chart.n {
        let dy = e.diff(&Symbol::y(a));
        if !dy.is_zero() {
            acc = &acc + &(&Expr::sym(Symbol::v(a, mu)) * &dy);
        }
        for nu in 0..chart.m {
            let dv = e.diff(&Symbol::v(a, nu));
            if !dv.is_zero() {
                acc = &acc + &(&Expr::sym(Symbol::w(a, mu, nu)) * &dv);
            }
        }
    }
    Ok(acc)
}
