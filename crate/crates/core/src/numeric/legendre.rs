use nalgebra::{DMatrix, DVector};

use super::{NumericError, Slots};
use crate::lagrangian::LagrangianSystem;
use crate::symcore::Compiled;

const MAX_ITERATIONS: usize = 50;

/// Solve `∂L/∂v(x, y, v) = p` for `v` at one point by Newton's method on
/// the velocity Hessian. Used when the symbolic inverse is unavailable.
///
/// `p` and `v0` are flat, indexed `A·m + μ`. The iteration stops once the
/// max-norm of the momentum mismatch drops below `1e−12·max(1, |p|)`.
pub fn legendre_invert_point(
    sys: &LagrangianSystem,
    x: &[f64],
    y: &[f64],
    p: &[f64],
    v0: Option<&[f64]>,
) -> Result<Vec<f64>, NumericError> {
    let c = sys.chart();
    let k = c.n * c.m;
    if x.len() != c.m || y.len() != c.n || p.len() != k || v0.is_some_and(|v| v.len() != k) {
        return Err(NumericError::Shape(format!(
            "expected {} base values, {} field values and {k} momenta",
            c.m, c.n
        )));
    }
    let slots = Slots::new(c);
    let vel = c.velocities();
    let grad: Vec<Compiled> = vel
        .iter()
        .map(|s| slots.compile(&sys.lagrangian().diff(s)))
        .collect::<Result<_, _>>()?;
    let hess: Vec<Vec<Compiled>> = sys
        .hessian()
        .iter()
        .map(|row| row.iter().map(|e| slots.compile(e)).collect())
        .collect::<Result<_, _>>()?;

    let mut buf = vec![0.0; slots.len()];
    buf[..c.m].copy_from_slice(x);
    for (a, &ya) in y.iter().enumerate() {
        buf[slots.y(a)] = ya;
    }
    let v_slot = |i: usize| slots.v(i / c.m, i % c.m);
    let mut v: Vec<f64> = v0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; k]);
    let scale = p.iter().fold(1.0f64, |acc, q| acc.max(q.abs()));
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        for (i, vi) in v.iter().enumerate() {
            buf[v_slot(i)] = *vi;
        }
        let r = DVector::from_iterator(k, (0..k).map(|i| grad[i].eval(&buf) - p[i]));
        residual = r.amax();
        if !residual.is_finite() {
            return Err(NumericError::Domain);
        }
        if residual <= 1e-12 * scale {
            return Ok(v);
        }
        let j = DMatrix::from_fn(k, k, |i, l| hess[i][l].eval(&buf));
        let step = j.lu().solve(&(-r)).ok_or(NumericError::NoConvergence {
            iterations: 0,
            residual,
        })?;
        for (vi, d) in v.iter_mut().zip(step.iter()) {
            *vi += d;
        }
    }
    Err(NumericError::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}
