//! The right-hand side `f(t, x, y)` and its optional metadata.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::VectorNorm;

type RhsEval = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;
type Weight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `f: [0,T] × ℝᵈ × ℝᵈ → ℝᵈ`, evaluated into an output buffer.
#[derive(Clone)]
pub struct RhsFunction {
    name: String,
    eval: RhsEval,
    depends_on_y: bool,
    growth_hint: Option<(f64, f64)>,
    hilbert_h: Option<Weight>,
    condensing_hint: Option<f64>,
}

impl fmt::Debug for RhsFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsFunction")
            .field("name", &self.name)
            .field("depends_on_y", &self.depends_on_y)
            .field("growth_hint", &self.growth_hint)
            .field("has_hilbert_h", &self.hilbert_h.is_some())
            .field("condensing_hint", &self.condensing_hint)
            .finish_non_exhaustive()
    }
}

impl RhsFunction {
    /// `depends_on_y = false` promises that `eval` ignores its `y` argument.
    pub fn new(
        name: impl Into<String>,
        depends_on_y: bool,
        eval: impl Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        RhsFunction {
            name: name.into(),
            eval: Arc::new(eval),
            depends_on_y,
            growth_hint: None,
            hilbert_h: None,
            condensing_hint: None,
        }
    }

    pub fn zero() -> Self {
        RhsFunction::new("zero", false, |_, _, _, out| out.fill(0.0)).with_growth_hint(0.0, 0.0)
    }

    /// `f ≡ c` (the same constant in every component).
    pub fn constant(c: f64) -> Self {
        RhsFunction::new(format!("const {c}"), false, move |_, _, _, out| out.fill(c))
    }

    /// `f(t, x, y) = g(t)` applied to every component.
    pub fn time_only(name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RhsFunction::new(name, false, move |t, _, _, out| out.fill(g(t)))
    }

    /// `f = a·tanh(x)` componentwise.
    pub fn tanh(a: f64) -> Self {
        RhsFunction::new(format!("tanh {a}"), false, move |_, x, _, out| {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = a * xi.tanh();
            }
        })
    }

    /// `f = a·sin(x)` componentwise.
    pub fn sin(a: f64) -> Self {
        RhsFunction::new(format!("sin {a}"), false, move |_, x, _, out| {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = a * xi.sin();
            }
        })
    }

    /// `f = c₀·cos(t)·tanh(x)/‖𝟙‖ − c₁·y`, which satisfies `‖f‖ ≤ c₀ + c₁‖y‖`
    /// in the chosen norm by construction.
    pub fn linear_growth(c0: f64, c1: f64, dim: usize, norm: VectorNorm) -> Self {
        let ones = vec![1.0; dim.max(1)];
        let scale = c0 / norm.of_slice(&ones);
        RhsFunction::new(format!("growth {c0} {c1}"), true, move |t, x, y, out| {
            let ct = t.cos();
            for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
                *o = scale * ct * xi.tanh() - c1 * yi;
            }
        })
        .with_growth_hint(c0, c1)
    }

    pub const REGISTRY: &'static [&'static str] = &["zero", "const", "tanh", "sin", "growth"];

    pub fn from_registry(name: &str, params: &[f64], dim: usize, norm: VectorNorm) -> Result<Self> {
        let arity = |want: usize| {
            if params.len() == want {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "f '{name}' takes {want} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match name {
            "zero" => arity(0).map(|_| RhsFunction::zero()),
            "const" => arity(1).map(|_| RhsFunction::constant(params[0])),
            "tanh" => arity(1).map(|_| RhsFunction::tanh(params[0])),
            "sin" => arity(1).map(|_| RhsFunction::sin(params[0])),
            "growth" => {
                arity(2)?;
                if params.iter().any(|p| *p < 0.0) {
                    return Err(Error::invalid("growth constants must be nonnegative"));
                }
                Ok(RhsFunction::linear_growth(params[0], params[1], dim, norm))
            }
            other => Err(Error::invalid(format!("unknown f '{other}'"))),
        }
    }

    /// Claimed constants `(c₀, c₁)` with `‖f(t,x,y)‖ ≤ c₀ + c₁‖y‖`.
    pub fn with_growth_hint(mut self, c0: f64, c1: f64) -> Self {
        self.growth_hint = Some((c0, c1));
        self
    }

    /// The nonnegative weight `h(t)` for the inner-product growth condition.
    pub fn with_hilbert_h(mut self, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.hilbert_h = Some(Arc::new(h));
        self
    }

    /// A declared constant `k₁` with `α(f([0,T]×A×B)) ≤ k₁·max{α(A), α(B)}`.
    pub fn with_condensing_hint(mut self, k1: f64) -> Self {
        self.condensing_hint = Some(k1);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn depends_on_y(&self) -> bool {
        self.depends_on_y
    }

    pub fn growth_hint(&self) -> Option<(f64, f64)> {
        self.growth_hint
    }

    pub fn condensing_hint(&self) -> Option<f64> {
        self.condensing_hint
    }

    pub fn has_hilbert_h(&self) -> bool {
        self.hilbert_h.is_some()
    }

    pub fn hilbert_h(&self, t: f64) -> Option<f64> {
        self.hilbert_h.as_ref().map(|h| h(t))
    }

    pub fn eval_into(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        (self.eval)(t, x, y, out)
    }

    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval_into(t, x, y, &mut out);
        out
    }
}
