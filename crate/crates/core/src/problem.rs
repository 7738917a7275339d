use crate::error::{Error, Result};
use crate::grid::VectorNorm;
use crate::phi::PhiMap;
use crate::rhs::RhsFunction;

/// `(φ(u′))′ = f(t, u, u′)` on `[0, T]` with `u(T) = 0 = u′(0)`.
#[derive(Debug, Clone)]
pub struct Problem {
    t_end: f64,
    dim: usize,
    phi: PhiMap,
    f: RhsFunction,
    norm: VectorNorm,
    completely_continuous: bool,
}

impl Problem {
    pub fn new(t_end: f64, dim: usize, phi: PhiMap, f: RhsFunction, norm: VectorNorm) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::invalid(format!("T must be positive, got {t_end}")));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension d must be at least 1"));
        }
        let probe: Vec<Vec<f64>> = [0.5, -1.5, 3.0]
            .iter()
            .map(|&s| (0..dim).map(|j| s * (1.0 + j as f64)).collect())
            .collect();
        phi.validate(dim, &probe)?;
        let out = f.eval(0.0, &vec![0.0; dim], &vec![0.0; dim]);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("f is not finite at (0, 0, 0)"));
        }
        Ok(Problem { t_end, dim, phi, f, norm, completely_continuous: true })
    }

    /// Records whether `f` is assumed to map bounded sets to relatively compact
    /// ones. Sampling cannot check this, so it is carried as an assumption.
    pub fn with_completely_continuous(mut self, flag: bool) -> Self {
        self.completely_continuous = flag;
        self
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phi(&self) -> &PhiMap {
        &self.phi
    }

    pub fn f(&self) -> &RhsFunction {
        &self.f
    }

    pub fn norm(&self) -> VectorNorm {
        self.norm
    }

    pub fn completely_continuous(&self) -> bool {
        self.completely_continuous
    }
}
