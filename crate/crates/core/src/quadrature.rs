//! Composite-trapezoid integration operators and second-order difference stencils.
//!
//! All three operators are exact on affine data (the derivative also on quadratics),
//! so every discrete operator in the pipeline has the same O(h²) order.

use ndarray::Zip;

use crate::error::{Error, Result};
use crate::grid::{Grid, Samples};

/// `V_i ≈ ∫₀^{t_i} F(s) ds` with `V_0 = 0`.
pub fn cumulative_integral(grid: &Grid, values: &Samples) -> Result<Samples> {
    grid.check_samples("integrand", values)?;
    let half_h = 0.5 * grid.spacing();
    let mut out = Samples::zeros(values.raw_dim());
    for i in 1..grid.len() {
        let (done, mut rest) = out.view_mut().split_at(ndarray::Axis(0), i);
        let prev = done.row(i - 1);
        Zip::from(rest.row_mut(0))
            .and(prev)
            .and(values.row(i - 1))
            .and(values.row(i))
            .for_each(|v, &p, &a, &b| *v = p + half_h * (a + b));
    }
    Ok(out)
}

/// `U_i ≈ −∫_{t_i}^T W(s) ds` with `U_{n−1} = 0` exactly.
pub fn reverse_negated_integral(grid: &Grid, values: &Samples) -> Result<Samples> {
    grid.check_samples("integrand", values)?;
    let half_h = 0.5 * grid.spacing();
    let n = grid.len();
    let mut out = Samples::zeros(values.raw_dim());
    for i in (0..n - 1).rev() {
        let (mut head, tail) = out.view_mut().split_at(ndarray::Axis(0), i + 1);
        let next = tail.row(0);
        Zip::from(head.row_mut(i))
            .and(next)
            .and(values.row(i))
            .and(values.row(i + 1))
            .for_each(|u, &nx, &a, &b| *u = nx - half_h * (a + b));
    }
    Ok(out)
}

/// Central differences inside, second-order one-sided stencils at both ends.
pub fn discrete_derivative(grid: &Grid, values: &Samples) -> Result<Samples> {
    grid.check_samples("differentiated samples", values)?;
    let n = grid.len();
    if n < 3 {
        return Err(Error::invalid(format!(
            "second-order differences need at least 3 nodes, got {n}"
        )));
    }
    let inv2h = 0.5 / grid.spacing();
    let v = values;
    let mut out = Samples::zeros(v.raw_dim());
    for j in 0..v.ncols() {
        out[[0, j]] = (-3.0 * v[[0, j]] + 4.0 * v[[1, j]] - v[[2, j]]) * inv2h;
        for i in 1..n - 1 {
            out[[i, j]] = (v[[i + 1, j]] - v[[i - 1, j]]) * inv2h;
        }
        out[[n - 1, j]] = (3.0 * v[[n - 1, j]] - 4.0 * v[[n - 2, j]] + v[[n - 3, j]]) * inv2h;
    }
    Ok(out)
}
