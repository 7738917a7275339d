//! Damped successive substitution on `u = M(λ, u)` and continuation in `λ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Trajectory};
use crate::operators::{apply_m, fixed_point_gap_at, ode_residual_at};
use crate::problem::Problem;

/// Iterates whose C¹ norm exceeds this are treated as divergent.
pub const BLOWUP_NORM: f64 = 1e12;
/// Consecutive growing steps that trigger the switch to [`FALLBACK_DAMPING`].
pub const GROWTH_PATIENCE: usize = 3;
pub const FALLBACK_DAMPING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Damping θ in (0, 1]; 1 is plain substitution.
    pub theta: f64,
    /// Relative C¹ step tolerance.
    pub tol: f64,
    pub max_iters: usize,
    pub lambda_steps: usize,
    pub residual_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { theta: 1.0, tol: 1e-10, max_iters: 1000, lambda_steps: 1, residual_tol: 1e-3 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::invalid(format!("damping θ must lie in (0, 1], got {}", self.theta)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.residual_tol > 0.0 && self.residual_tol.is_finite()) {
            return Err(Error::invalid(format!("residual_tol must be positive, got {}", self.residual_tol)));
        }
        if self.lambda_steps == 0 {
            return Err(Error::invalid("lambda_steps must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub trajectory: Trajectory,
    /// Step test met, and the final gap and residual are within tolerance.
    pub converged: bool,
    pub iterations_per_lambda: Vec<usize>,
    /// `‖u − M(λ, u)‖₁` at the last λ reached.
    pub final_gap: f64,
    pub final_residual: f64,
    /// C¹ norms of every update, across all λ stages.
    pub history: Vec<f64>,
    /// The λ at which continuation stopped without converging.
    pub failed_lambda: Option<f64>,
    /// Damping in force when the last stage finished.
    pub final_theta: f64,
}

/// Solves `u = M(λ, u)` by `u ← u + θ·(M(λ, u) − u)` starting from `start`.
///
/// The start is first made to satisfy `u(T) = 0`, `u′(0) = 0`; every later
/// iterate then satisfies them exactly. Running out of iterations or blowing up
/// is reported through `converged = false`; only evaluation failures are errors.
pub fn picard_solve(p: &Problem, lambda: f64, start: &Trajectory, opts: &SolveOptions) -> Result<SolveResult> {
    opts.validate()?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("λ must lie in [0, 1], got {lambda}")));
    }
    if start.grid().len() < 3 {
        return Err(Error::invalid("the solver needs grids with at least 3 nodes"));
    }
    let norm = p.norm();
    let mut tr = start.clone().with_boundary_conditions();
    let mut theta = opts.theta;
    let mut history = Vec::new();
    let mut growing = 0;
    let mut stopped = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let image = apply_m(p, lambda, &tr)?;
        let next = if theta == 1.0 { image } else { tr.lin_comb(1.0 - theta, &image, theta)? };
        let step = next.distance_c1(&tr, norm)?;
        if let Some(&prev) = history.last() {
            growing = if step > prev { growing + 1 } else { 0 };
        }
        history.push(step);
        tr = next;

        let size = tr.norm_c1(norm);
        if step <= opts.tol * (1.0 + size) {
            stopped = true;
            break;
        }
        if !size.is_finite() || size > BLOWUP_NORM {
            break;
        }
        if growing >= GROWTH_PATIENCE && theta > FALLBACK_DAMPING {
            theta = FALLBACK_DAMPING;
            growing = 0;
        }
    }

    let (final_gap, final_residual) = if tr.norm_c1(norm) > BLOWUP_NORM {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (fixed_point_gap_at(p, lambda, &tr)?, ode_residual_at(p, lambda, &tr)?)
    };
    let scale = 1.0 + tr.norm_c1(norm);
    let converged = stopped && final_gap <= opts.tol * scale && final_residual <= opts.residual_tol;
    Ok(SolveResult {
        trajectory: tr,
        converged,
        iterations_per_lambda: vec![iterations],
        final_gap,
        final_residual,
        history,
        failed_lambda: if converged { None } else { Some(lambda) },
        final_theta: theta,
    })
}

/// Marches `λ_j = j / lambda_steps` from the exact `λ = 0` solution (zero) to
/// `λ = 1`, warm-starting every stage from the previous one.
pub fn continuation_solve(p: &Problem, grid: Grid, opts: &SolveOptions) -> Result<SolveResult> {
    opts.validate()?;
    let mut current = Trajectory::zeros(grid, p.dim());
    let mut iterations = Vec::with_capacity(opts.lambda_steps);
    let mut history = Vec::new();
    let mut last = None;
    for j in 1..=opts.lambda_steps {
        let lambda = if j == opts.lambda_steps { 1.0 } else { j as f64 / opts.lambda_steps as f64 };
        let stage = picard_solve(p, lambda, &current, opts)?;
        iterations.extend_from_slice(&stage.iterations_per_lambda);
        history.extend_from_slice(&stage.history);
        current = stage.trajectory.clone();
        let failed = !stage.converged;
        last = Some(stage);
        if failed {
            break;
        }
    }
    let mut result = last.expect("lambda_steps >= 1");
    result.iterations_per_lambda = iterations;
    result.history = history;
    Ok(result)
}

/// Independent check of a computed solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: usize,
    pub gap: f64,
    pub residual: f64,
    pub refined_n: usize,
    /// Gap and residual after linear resampling to the halved spacing and one
    /// application of `M₁`.
    pub refined_gap: f64,
    pub refined_residual: f64,
    pub residual_ratio: f64,
    pub residual_tol: f64,
    pub passed: bool,
}

/// Recomputes the fixed-point gap and strong-form residual of `tr` on its own
/// grid and on the refined grid; passes when both residuals are within
/// `opts.residual_tol`.
pub fn verify_solution(p: &Problem, tr: &Trajectory, opts: &SolveOptions) -> Result<VerifyReport> {
    let gap = fixed_point_gap_at(p, 1.0, tr)?;
    let residual = ode_residual_at(p, 1.0, tr)?;
    let fine_grid = tr.grid().refined();
    let polished = apply_m(p, 1.0, &tr.resample(fine_grid)?)?;
    let refined_gap = fixed_point_gap_at(p, 1.0, &polished)?;
    let refined_residual = ode_residual_at(p, 1.0, &polished)?;
    let residual_ratio = if refined_residual > 0.0 { residual / refined_residual } else { f64::INFINITY };
    Ok(VerifyReport {
        n: tr.grid().len(),
        gap,
        residual,
        refined_n: fine_grid.len(),
        refined_gap,
        refined_residual,
        residual_ratio,
        residual_tol: opts.residual_tol,
        passed: residual <= opts.residual_tol && refined_residual <= opts.residual_tol,
    })
}
