//! Deterministic pseudo-random sampling of balls in ℝᵈ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::VectorNorm;

/// Where and how densely the hypotheses are probed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Initial radius of the ball sampled in `x` and `y`.
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    /// Number of equispaced times in `[0, T]` used for `t`.
    pub t_nodes: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan { radius: 1.0, samples: 2000, seed: 0, t_nodes: 11 }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid(format!("sampling radius must be positive, got {}", self.radius)));
        }
        if self.samples < 2 {
            return Err(Error::invalid(format!("need at least 2 samples, got {}", self.samples)));
        }
        if self.t_nodes < 2 {
            return Err(Error::invalid(format!("need at least 2 time nodes, got {}", self.t_nodes)));
        }
        Ok(())
    }

    pub fn with_radius(self, radius: f64) -> Self {
        SamplingPlan { radius, ..self }
    }
}

/// Each estimator draws from its own stream so results do not depend on call order.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    PhiInverse = 1,
    Growth = 2,
    Lipschitz = 3,
    Monotonicity = 4,
    HilbertGrowth = 5,
}

pub(crate) struct Sampler {
    rng: ChaCha8Rng,
    dim: usize,
    norm: VectorNorm,
}

impl Sampler {
    pub fn new(seed: u64, stream: Stream, dim: usize, norm: VectorNorm) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        Sampler { rng, dim, norm }
    }

    /// Point of norm at most `radius`; the radial coordinate is uniform, so the
    /// neighbourhood of the origin is sampled densely.
    pub fn in_ball(&mut self, radius: f64) -> Vec<f64> {
        let dir = self.direction();
        let r = radius * self.rng.gen::<f64>();
        dir.into_iter().map(|c| r * c).collect()
    }

    /// Point whose norm is log-uniform in `[lo, hi]`.
    pub fn on_log_shell(&mut self, lo: f64, hi: f64) -> Vec<f64> {
        let dir = self.direction();
        let r = lo * (hi / lo).powf(self.rng.gen::<f64>());
        dir.into_iter().map(|c| r * c).collect()
    }

    /// `p` moved by a relative distance `scale` in a random direction.
    pub fn nearby(&mut self, p: &[f64], scale: f64) -> Vec<f64> {
        let dir = self.direction();
        let r = scale * (0.5 + 0.5 * self.rng.gen::<f64>());
        p.iter().zip(dir).map(|(a, c)| a + r * c).collect()
    }

    pub fn time(&mut self, t_end: f64, t_nodes: usize) -> f64 {
        let j = self.rng.gen_range(0..t_nodes);
        if j + 1 == t_nodes {
            t_end
        } else {
            t_end * j as f64 / (t_nodes - 1) as f64
        }
    }

    fn direction(&mut self) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| self.rng.gen_range(-1.0..=1.0)).collect();
            let n = self.norm.of_slice(&v);
            if n > 1e-3 {
                return v.into_iter().map(|c| c / n).collect();
            }
        }
    }
}
