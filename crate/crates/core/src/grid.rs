//! Uniform grids on `[0, T]`, sampled C¹ trajectories and the norms used on them.

use ndarray::{Array2, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` nodal vectors in ℝᵈ stored row-wise (shape `n × d`).
pub type Samples = Array2<f64>;

/// Uniform discretization of `[0, T]` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    t_end: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(t_end: f64, n: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::invalid(format!("interval length T must be positive, got {t_end}")));
        }
        if n < 2 {
            return Err(Error::invalid(format!("a grid needs at least 2 nodes, got {n}")));
        }
        Ok(Grid { t_end, n, h: t_end / (n - 1) as f64 })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false; a grid has at least two nodes.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Node `i`. The last node is exactly `T`.
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.t_end
        } else {
            i as f64 * self.t_end / (self.n - 1) as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Grid over the same interval with spacing halved (`2n - 1` nodes).
    pub fn refined(&self) -> Grid {
        Grid::new(self.t_end, 2 * self.n - 1).expect("refining a valid grid")
    }

    pub(crate) fn check_samples(&self, what: &str, values: &Samples) -> Result<()> {
        if values.nrows() != self.n {
            return Err(Error::invalid(format!(
                "{what} has {} rows but the grid has {} nodes",
                values.nrows(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Norm placed on ℝᵈ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorNorm {
    #[default]
    Euclidean,
    Sup,
    One,
}

impl VectorNorm {
    pub fn eval(self, v: ArrayView1<f64>) -> f64 {
        match self {
            VectorNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            VectorNorm::Sup => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            VectorNorm::One => v.iter().map(|x| x.abs()).sum(),
        }
    }

    pub fn of_slice(self, v: &[f64]) -> f64 {
        self.eval(ArrayView1::from(v))
    }

    /// Largest row norm of `values` (the discrete sup norm of a sampled function).
    pub fn sup_over_rows(self, values: &Samples) -> f64 {
        values.rows().into_iter().fold(0.0, |m, r| m.max(self.eval(r)))
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "euclidean" | "l2" => Some(VectorNorm::Euclidean),
            "sup" | "max" | "linf" => Some(VectorNorm::Sup),
            "one" | "l1" => Some(VectorNorm::One),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VectorNorm::Euclidean => "euclidean",
            VectorNorm::Sup => "sup",
            VectorNorm::One => "one",
        }
    }
}

/// A sampled C¹ function: values `u` and derivative values `w ≈ u′` on a grid.
///
/// `u` and `w` are carried jointly; `w` is never recovered by differencing `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    u: Samples,
    w: Samples,
}

impl Trajectory {
    pub fn new(grid: Grid, u: Samples, w: Samples) -> Result<Self> {
        grid.check_samples("u", &u)?;
        grid.check_samples("w", &w)?;
        if u.ncols() != w.ncols() {
            return Err(Error::invalid(format!(
                "u has dimension {} but w has dimension {}",
                u.ncols(),
                w.ncols()
            )));
        }
        if u.ncols() == 0 {
            return Err(Error::invalid("trajectory dimension must be at least 1"));
        }
        if let Some(i) = first_non_finite_row(&u).or_else(|| first_non_finite_row(&w)) {
            return Err(Error::Evaluation {
                node: i,
                t: grid.node(i),
                reason: "trajectory entry is not finite".into(),
            });
        }
        Ok(Trajectory { grid, u, w })
    }

    pub fn zeros(grid: Grid, dim: usize) -> Self {
        let n = grid.len();
        Trajectory { grid, u: Samples::zeros((n, dim)), w: Samples::zeros((n, dim)) }
    }

    /// Samples closed-form `u` and `u′` at the grid nodes.
    pub fn from_fn(
        grid: Grid,
        dim: usize,
        u: impl Fn(f64, usize) -> f64,
        w: impl Fn(f64, usize) -> f64,
    ) -> Result<Self> {
        let n = grid.len();
        let us = Samples::from_shape_fn((n, dim), |(i, j)| u(grid.node(i), j));
        let ws = Samples::from_shape_fn((n, dim), |(i, j)| w(grid.node(i), j));
        Trajectory::new(grid, us, ws)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn u(&self) -> &Samples {
        &self.u
    }

    pub fn w(&self) -> &Samples {
        &self.w
    }

    pub fn into_parts(self) -> (Grid, Samples, Samples) {
        (self.grid, self.u, self.w)
    }

    /// `‖u‖₁ = max{‖u‖∞, ‖u′‖∞}` with the given norm on ℝᵈ.
    pub fn norm_c1(&self, norm: VectorNorm) -> f64 {
        norm.sup_over_rows(&self.u).max(norm.sup_over_rows(&self.w))
    }

    /// `a·self + b·other`, both on the same grid.
    pub fn lin_comb(&self, a: f64, other: &Trajectory, b: f64) -> Result<Trajectory> {
        self.check_compatible(other)?;
        let mut u = self.u.clone();
        let mut w = self.w.clone();
        Zip::from(&mut u).and(&other.u).for_each(|x, &y| *x = a * *x + b * y);
        Zip::from(&mut w).and(&other.w).for_each(|x, &y| *x = a * *x + b * y);
        Ok(Trajectory { grid: self.grid, u, w })
    }

    /// C¹ distance between two trajectories on the same grid.
    pub fn distance_c1(&self, other: &Trajectory, norm: VectorNorm) -> Result<f64> {
        Ok(self.lin_comb(1.0, other, -1.0)?.norm_c1(norm))
    }

    /// Piecewise-linear resampling of `u` and `w` onto another grid over the same interval.
    pub fn resample(&self, target: Grid) -> Result<Trajectory> {
        if (target.t_end() - self.grid.t_end()).abs() > 1e-12 * self.grid.t_end() {
            return Err(Error::invalid("resampling requires grids over the same interval"));
        }
        let u = interpolate(&self.grid, &self.u, &target);
        let w = interpolate(&self.grid, &self.w, &target);
        Trajectory::new(target, u, w)
    }

    /// Forces `u(T) = 0` and `w(0) = 0`.
    pub fn with_boundary_conditions(mut self) -> Trajectory {
        let last = self.grid.len() - 1;
        self.u.row_mut(last).fill(0.0);
        self.w.row_mut(0).fill(0.0);
        self
    }

    fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::invalid("trajectories live on different grids or dimensions"));
        }
        Ok(())
    }
}

fn first_non_finite_row(values: &Samples) -> Option<usize> {
    values.rows().into_iter().position(|r| r.iter().any(|x| !x.is_finite()))
}

fn interpolate(from: &Grid, values: &Samples, to: &Grid) -> Samples {
    let d = values.ncols();
    let last = from.len() - 1;
    Samples::from_shape_fn((to.len(), d), |(i, j)| {
        let t = to.node(i);
        let pos = (t / from.spacing()).clamp(0.0, last as f64);
        let k = (pos.floor() as usize).min(last - 1);
        let s = pos - k as f64;
        (1.0 - s) * values[[k, j]] + s * values[[k + 1, j]]
    })
}
