use std::collections::BTreeMap;

use super::NumericError;
use crate::symcore::{Expr, Symbol};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdCheck {
    pub symbolic: f64,
    pub numeric: f64,
    /// `|numeric − symbolic| / max(1, |symbolic|)`.
    pub error: f64,
}

/// Compare `∂e/∂s` at `point` with a central difference of step `h`.
pub fn fd_check(
    e: &Expr,
    s: &Symbol,
    point: &BTreeMap<Symbol, f64>,
    h: f64,
) -> Result<FdCheck, NumericError> {
    if h <= 0.0 || !h.is_finite() {
        return Err(NumericError::Unsupported(format!("step must be positive, got {h}")));
    }
    let at = |delta: f64| -> Result<f64, NumericError> {
        let mut p = point.clone();
        *p.entry(s.clone()).or_insert(0.0) += delta;
        let v = e.eval_map(&p)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericError::Domain)
        }
    };
    let symbolic = e.diff(s).eval_map(point)?;
    if !symbolic.is_finite() {
        return Err(NumericError::Domain);
    }
    let numeric = (at(h)? - at(-h)?) / (2.0 * h);
    Ok(FdCheck {
        symbolic,
        numeric,
        error: (numeric - symbolic).abs() / symbolic.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{parse_expr, ChartSpec};

    #[test]
    fn cube_and_exponential() {
        let chart = ChartSpec::new(1, 1).unwrap();
        let cube = parse_expr("y1^3", &chart).unwrap();
        let p: BTreeMap<Symbol, f64> = [(Symbol::y(0), 2.0)].into();
        let r = fd_check(&cube, &Symbol::y(0), &p, 1e-5).unwrap();
        assert_eq!(r.symbolic, 12.0);
        assert!(r.error < 1e-8);
        let ex = parse_expr("exp(x1)", &chart).unwrap();
        let p: BTreeMap<Symbol, f64> = [(Symbol::x(0), 0.0)].into();
        assert!(fd_check(&ex, &Symbol::x(0), &p, 1e-5).unwrap().error < 1e-9);
        let c = Expr::int(7);
        assert_eq!(fd_check(&c, &Symbol::x(0), &p, 1e-5).unwrap().error, 0.0);
    }
}
