//! The fixed-point pipeline `M(λ, u) = K(φ⁻¹[λ·H(N_f(u))])` and its diagnostics.
//!
//! `H` is [`cumulative_integral`], `K` is [`reverse_negated_integral`]. The
//! derivative component of `M` is produced first and `u` is obtained from it, so
//! `u(T) = 0` and `u′(0) = 0` hold exactly for every output.

use crate::error::{Error, Result};
use crate::grid::{Grid, Samples, Trajectory};
use crate::problem::Problem;
use crate::quadrature::{cumulative_integral, discrete_derivative, reverse_negated_integral};

fn check_trajectory(p: &Problem, tr: &Trajectory) -> Result<()> {
    let t = tr.grid().t_end();
    if (t - p.t_end()).abs() > 1e-12 * p.t_end() {
        return Err(Error::invalid(format!(
            "trajectory grid covers [0, {t}] but the problem is posed on [0, {}]",
            p.t_end()
        )));
    }
    if tr.dim() != p.dim() {
        return Err(Error::invalid(format!(
            "trajectory has dimension {} but the problem has dimension {}",
            tr.dim(),
            p.dim()
        )));
    }
    Ok(())
}

/// `F_i = f(t_i, u_i, w_i)`.
pub fn nemytskii(p: &Problem, tr: &Trajectory) -> Result<Samples> {
    check_trajectory(p, tr)?;
    let grid = tr.grid();
    let mut out = Samples::zeros((grid.len(), p.dim()));
    let mut buf = vec![0.0; p.dim()];
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let t = grid.node(i);
        let x = tr.u().row(i);
        let y = tr.w().row(i);
        p.f().eval_into(t, x.as_slice().unwrap(), y.as_slice().unwrap(), &mut buf);
        if let Some(bad) = buf.iter().find(|v| !v.is_finite()) {
            return Err(Error::Evaluation { node: i, t, reason: format!("f returned {bad}") });
        }
        row.assign(&ndarray::ArrayView1::from(&buf[..]));
    }
    Ok(out)
}

/// `W_i = φ⁻¹(V_i)` node by node.
pub fn phi_inverse_lift(p: &Problem, grid: &Grid, values: &Samples) -> Result<Samples> {
    grid.check_samples("lifted samples", values)?;
    let mut out = Samples::zeros(values.raw_dim());
    let mut buf = vec![0.0; values.ncols()];
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let v = values.row(i).to_vec();
        p.phi().inverse_into(&v, &mut buf).map_err(|e| Error::Evaluation {
            node: i,
            t: grid.node(i),
            reason: e.to_string(),
        })?;
        if let Some(bad) = buf.iter().find(|v| !v.is_finite()) {
            return Err(Error::Evaluation { node: i, t: grid.node(i), reason: format!("φ⁻¹ returned {bad}") });
        }
        row.assign(&ndarray::ArrayView1::from(&buf[..]));
    }
    Ok(out)
}

/// One application of `M(λ, ·)`; at `λ = 1` this is the operator whose fixed
/// points are exactly the solutions of the boundary value problem.
pub fn apply_m(p: &Problem, lambda: f64, tr: &Trajectory) -> Result<Trajectory> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("λ must lie in [0, 1], got {lambda}")));
    }
    let grid = *tr.grid();
    let forcing = nemytskii(p, tr)?;
    let mut v = cumulative_integral(&grid, &forcing)?;
    v.mapv_inplace(|x| lambda * x);
    let mut w = phi_inverse_lift(p, &grid, &v)?;
    // H(·)(0) = 0 and φ⁻¹(0) = 0; pinned for maps whose inverse is only approximate.
    w.row_mut(0).fill(0.0);
    let u = reverse_negated_integral(&grid, &w)?;
    Trajectory::new(grid, u, w)
}

/// `‖tr − M(λ, tr)‖₁`.
pub fn fixed_point_gap_at(p: &Problem, lambda: f64, tr: &Trajectory) -> Result<f64> {
    let image = apply_m(p, lambda, tr)?;
    tr.distance_c1(&image, p.norm())
}

/// `‖tr − M₁(tr)‖₁`.
pub fn fixed_point_gap(p: &Problem, tr: &Trajectory) -> Result<f64> {
    fixed_point_gap_at(p, 1.0, tr)
}

/// Strong-form residual of `(φ(w))′ = λ·f(t, u, w)` plus the boundary defects
/// `‖u(T)‖` and `‖w(0)‖`, all combined in the sup norm.
pub fn ode_residual_at(p: &Problem, lambda: f64, tr: &Trajectory) -> Result<f64> {
    check_trajectory(p, tr)?;
    let grid = *tr.grid();
    let norm = p.norm();
    let mut flux = Samples::zeros(tr.w().raw_dim());
    for (i, mut row) in flux.rows_mut().into_iter().enumerate() {
        let w = tr.w().row(i).to_vec();
        row.assign(&ndarray::Array1::from(p.phi().forward(&w)));
    }
    let dflux = discrete_derivative(&grid, &flux)?;
    let forcing = nemytskii(p, tr)?;
    let interior = norm.sup_over_rows(&(&dflux - &(lambda * &forcing)));
    let end = norm.eval(tr.u().row(grid.len() - 1));
    let start = norm.eval(tr.w().row(0));
    Ok(interior.max(end).max(start))
}

pub fn ode_residual(p: &Problem, tr: &Trajectory) -> Result<f64> {
    ode_residual_at(p, 1.0, tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VectorNorm;
    use crate::phi::PhiMap;
    use crate::rhs::RhsFunction;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn problem(phi: PhiMap, f: RhsFunction) -> Problem {
        Problem::new(1.0, 1, phi, f, VectorNorm::Euclidean).unwrap()
    }

    fn cosine_problem() -> Problem {
        problem(PhiMap::identity(), RhsFunction::time_only("cos", |t| -(PI * PI / 4.0) * (PI * t / 2.0).cos()))
    }

    fn cosine_exact(n: usize) -> Trajectory {
        let g = Grid::new(1.0, n).unwrap();
        Trajectory::from_fn(g, 1, |t, _| (PI * t / 2.0).cos(), |t, _| -(PI / 2.0) * (PI * t / 2.0).sin()).unwrap()
    }

    fn wiggly(n: usize, dim: usize) -> Trajectory {
        let g = Grid::new(1.0, n).unwrap();
        Trajectory::from_fn(g, dim, |t, j| (3.0 * t + j as f64).sin() + 0.5, |t, j| (t * j as f64).cos()).unwrap()
    }

    #[test]
    fn nemytskii_examples() {
        let tr = wiggly(3, 1);
        let zero = nemytskii(&problem(PhiMap::identity(), RhsFunction::zero()), &tr).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));

        let g = Grid::new(1.0, 3).unwrap();
        let c = Trajectory::from_fn(g, 1, |_, _| 2.5, |_, _| 0.0).unwrap();
        let ident = RhsFunction::new("x", false, |_, x, _, out| out.copy_from_slice(x));
        let f = nemytskii(&problem(PhiMap::identity(), ident), &c).unwrap();
        assert!(f.iter().all(|&x| x == 2.5));

        let time = RhsFunction::new("t", false, |t, _, _, out| out.fill(t));
        let f = nemytskii(&problem(PhiMap::identity(), time), &c).unwrap();
        assert_eq!(f.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn nemytskii_reports_the_bad_node() {
        let f = RhsFunction::new("blowup", false, |t, _, _, out| out.fill(if t > 0.7 { f64::NAN } else { 0.0 }));
        let err = nemytskii(&problem(PhiMap::identity(), f), &wiggly(5, 1)).unwrap_err();
        assert!(matches!(err, Error::Evaluation { node: 3, .. }), "{err:?}");
    }

    #[test]
    fn lift_examples() {
        let g = Grid::new(1.0, 4).unwrap();
        let p = problem(PhiMap::cubic(), RhsFunction::zero());
        let zero = phi_inverse_lift(&p, &g, &Samples::zeros((4, 1))).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
        let two = phi_inverse_lift(&p, &g, &Samples::from_elem((4, 1), 2.0)).unwrap();
        two.iter().for_each(|&w| assert_abs_diff_eq!(w, 1.0, epsilon = 1e-12));
        let v = Samples::from_shape_fn((4, 1), |(i, _)| i as f64 - 1.3);
        let p = problem(PhiMap::identity(), RhsFunction::zero());
        assert_eq!(phi_inverse_lift(&p, &g, &v).unwrap(), v);
    }

    #[test]
    fn lift_reports_inversion_failure() {
        let g = Grid::new(1.0, 3).unwrap();
        let p = problem(PhiMap::cubic(), RhsFunction::zero());
        let v = Samples::from_shape_vec((3, 1), vec![0.0, f64::INFINITY, 1.0]).unwrap();
        assert!(matches!(phi_inverse_lift(&p, &g, &v), Err(Error::Evaluation { node: 1, .. })));
    }

    #[test]
    fn m_at_lambda_zero_or_zero_forcing_vanishes() {
        let tr = wiggly(9, 2);
        let p = Problem::new(1.0, 2, PhiMap::cubic(), RhsFunction::tanh(3.0), VectorNorm::Sup).unwrap();
        let out = apply_m(&p, 0.0, &tr).unwrap();
        assert_eq!(out.norm_c1(VectorNorm::Sup), 0.0);
        let p = Problem::new(1.0, 2, PhiMap::cubic(), RhsFunction::zero(), VectorNorm::Sup).unwrap();
        assert_eq!(apply_m(&p, 1.0, &tr).unwrap().norm_c1(VectorNorm::Sup), 0.0);
        assert!(apply_m(&p, 1.5, &tr).is_err());
        assert!(apply_m(&p, -0.1, &tr).is_err());
    }

    #[test]
    fn manufactured_solution_is_a_second_order_fixed_point() {
        let p = cosine_problem();
        let defect = |n: usize| {
            let exact = cosine_exact(n);
            apply_m(&p, 1.0, &exact).unwrap().distance_c1(&exact, VectorNorm::Euclidean).unwrap()
        };
        let (coarse, fine) = (defect(41), defect(81));
        assert!(coarse < 1e-3, "{coarse}");
        let ratio = coarse / fine;
        assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
        assert_abs_diff_eq!(fixed_point_gap(&p, &cosine_exact(81)).unwrap(), fine, epsilon = 0.0);
    }

    #[test]
    fn gap_examples() {
        let g = Grid::new(1.0, 11).unwrap();
        let zero = Trajectory::zeros(g, 1);
        let p = problem(PhiMap::identity(), RhsFunction::zero());
        assert_eq!(fixed_point_gap(&p, &zero).unwrap(), 0.0);
        let p = problem(PhiMap::identity(), RhsFunction::constant(1.0));
        assert_abs_diff_eq!(fixed_point_gap(&p, &zero).unwrap(), 1.0, epsilon = 1e-14);
        let image = apply_m(&p, 1.0, &zero).unwrap();
        for (i, t) in g.nodes().into_iter().enumerate() {
            assert_abs_diff_eq!(image.u()[[i, 0]], -(1.0 - t * t) / 2.0, epsilon = 1e-14);
            assert_abs_diff_eq!(image.w()[[i, 0]], t, epsilon = 1e-14);
        }
    }

    #[test]
    fn residual_examples() {
        let g = Grid::new(1.0, 11).unwrap();
        let p = problem(PhiMap::cubic(), RhsFunction::zero());
        assert_eq!(ode_residual(&p, &Trajectory::zeros(g, 1)).unwrap(), 0.0);

        let p = cosine_problem();
        let (r41, r81) = (ode_residual(&p, &cosine_exact(41)).unwrap(), ode_residual(&p, &cosine_exact(81)).unwrap());
        let ratio = r41 / r81;
        assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");

        let delta = 0.037;
        let (grid, mut u, w) = cosine_exact(41).into_parts();
        u.mapv_inplace(|x| x + delta);
        let shifted = Trajectory::new(grid, u, w).unwrap();
        assert!(ode_residual(&p, &shifted).unwrap() >= delta);
    }

    #[test]
    fn derivative_component_matches_the_lift() {
        let p = Problem::new(1.0, 2, PhiMap::arctan(0.7).unwrap(), RhsFunction::linear_growth(1.0, 0.5, 2, VectorNorm::Euclidean), VectorNorm::Euclidean).unwrap();
        let tr = wiggly(17, 2);
        let lambda = 0.625;
        let out = apply_m(&p, lambda, &tr).unwrap();
        let v = cumulative_integral(tr.grid(), &nemytskii(&p, &tr).unwrap()).unwrap().mapv(|x| lambda * x);
        assert_eq!(out.w(), &phi_inverse_lift(&p, tr.grid(), &v).unwrap());
    }

    #[test]
    fn derivative_component_is_linear_in_lambda_for_identity_phi() {
        let f = RhsFunction::new("pos", true, |t, x, y, out| {
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = 1.0 + t + a * a + b.abs();
            }
        });
        let p = problem(PhiMap::identity(), f);
        let tr = wiggly(21, 1);
        let full = apply_m(&p, 1.0, &tr).unwrap();
        let half = apply_m(&p, 0.5, &tr).unwrap();
        let none = apply_m(&p, 0.0, &tr).unwrap();
        assert_eq!(half.w(), &full.w().mapv(|x| 0.5 * x));
        assert!(none.w().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mismatched_trajectory_is_rejected() {
        let p = cosine_problem();
        let g = Grid::new(2.0, 5).unwrap();
        assert!(apply_m(&p, 1.0, &Trajectory::zeros(g, 1)).is_err());
        let g = Grid::new(1.0, 5).unwrap();
        assert!(apply_m(&p, 1.0, &Trajectory::zeros(g, 2)).is_err());
    }
}
