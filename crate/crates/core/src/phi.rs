//! The homeomorphism φ, its inverse, and a registry of built-in maps.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type VectorInverseFn = Arc<dyn Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync>;

/// Relative tolerance used when φ⁻¹ must be computed numerically.
pub const INVERSION_TOL: f64 = 1e-12;
const MAX_BRACKET_DOUBLINGS: usize = 1100;
const MAX_INVERSION_ITERS: usize = 200;

/// Pointwise map φ: ℝᵈ → ℝᵈ with φ(0) = 0, together with φ⁻¹.
#[derive(Clone)]
pub struct PhiMap {
    name: String,
    forward: VectorFn,
    inverse: VectorInverseFn,
    lipschitz_inverse_hint: Option<f64>,
    monotone_hint: Option<bool>,
}

impl fmt::Debug for PhiMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiMap")
            .field("name", &self.name)
            .field("lipschitz_inverse_hint", &self.lipschitz_inverse_hint)
            .field("monotone_hint", &self.monotone_hint)
            .finish_non_exhaustive()
    }
}

impl PhiMap {
    /// A general pointwise map with a closed-form inverse.
    pub fn pointwise(
        name: impl Into<String>,
        forward: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        inverse: impl Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    ) -> Self {
        PhiMap {
            name: name.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            lipschitz_inverse_hint: None,
            monotone_hint: None,
        }
    }

    /// Starts a map acting the same way on every component.
    pub fn componentwise(
        name: impl Into<String>,
        forward: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> ComponentwiseBuilder {
        ComponentwiseBuilder {
            name: name.into(),
            forward: Arc::new(forward),
            derivative: None,
            inverse: None,
        }
    }

    pub fn identity() -> Self {
        PhiMap::componentwise("identity", |y| y)
            .derivative(|_| 1.0)
            .inverse(|v| v)
            .build()
            .lipschitz_inverse(1.0)
            .monotone(true)
    }

    /// φ(y) = c·y, c ≠ 0.
    pub fn linear(c: f64) -> Result<Self> {
        if !(c.is_finite() && c != 0.0) {
            return Err(Error::invalid(format!("linear φ needs a finite nonzero slope, got {c}")));
        }
        Ok(PhiMap::componentwise(format!("linear {c}"), move |y| c * y)
            .derivative(move |_| c)
            .inverse(move |v| v / c)
            .build()
            .lipschitz_inverse(1.0 / c.abs())
            .monotone(c > 0.0))
    }

    /// φ(y) = y + y³ componentwise; inverted numerically.
    pub fn cubic() -> Self {
        PhiMap::componentwise("cubic", |y| y + y * y * y)
            .derivative(|y| 1.0 + 3.0 * y * y)
            .build()
            .lipschitz_inverse(1.0)
            .monotone(true)
    }

    /// φ(y) = y + a·atan(y) componentwise, a > −1; inverted numerically.
    pub fn arctan(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > -1.0) {
            return Err(Error::invalid(format!("arctan φ needs a > -1, got {a}")));
        }
        let k = if a >= 0.0 { 1.0 } else { 1.0 / (1.0 + a) };
        Ok(PhiMap::componentwise(format!("arctan {a}"), move |y| y + a * y.atan())
            .derivative(move |y| 1.0 + a / (1.0 + y * y))
            .build()
            .lipschitz_inverse(k)
            .monotone(true))
    }

    /// Looks up a built-in map by name and parameters.
    pub fn from_registry(name: &str, params: &[f64]) -> Result<Self> {
        let arity = |want: usize| {
            if params.len() == want {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "φ '{name}' takes {want} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match name {
            "identity" => arity(0).map(|_| PhiMap::identity()),
            "linear" => arity(1).and_then(|_| PhiMap::linear(params[0])),
            "cubic" => arity(0).map(|_| PhiMap::cubic()),
            "arctan" => arity(1).and_then(|_| PhiMap::arctan(params[0])),
            other => Err(Error::invalid(format!("unknown φ '{other}'"))),
        }
    }

    pub const REGISTRY: &'static [&'static str] = &["identity", "linear", "cubic", "arctan"];

    /// `s·φ`, with inverse `v ↦ φ⁻¹(v/s)`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s != 0.0) {
            return Err(Error::invalid(format!("scale factor must be finite and nonzero, got {s}")));
        }
        let fwd = self.forward.clone();
        let inv = self.inverse.clone();
        Ok(PhiMap {
            name: format!("{s}*({})", self.name),
            forward: Arc::new(move |x, out| {
                fwd(x, out);
                out.iter_mut().for_each(|o| *o *= s);
            }),
            inverse: Arc::new(move |v, out| {
                let scaled: Vec<f64> = v.iter().map(|x| x / s).collect();
                inv(&scaled, out)
            }),
            lipschitz_inverse_hint: self.lipschitz_inverse_hint.map(|k| k / s.abs()),
            monotone_hint: self.monotone_hint.map(|m| if s > 0.0 { m } else { !m }),
        })
    }

    pub fn lipschitz_inverse(mut self, k: f64) -> Self {
        self.lipschitz_inverse_hint = Some(k);
        self
    }

    pub fn monotone(mut self, flag: bool) -> Self {
        self.monotone_hint = Some(flag);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz_inverse_hint(&self) -> Option<f64> {
        self.lipschitz_inverse_hint
    }

    pub fn monotone_hint(&self) -> Option<bool> {
        self.monotone_hint
    }

    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        (self.forward)(x, out)
    }

    pub fn inverse_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        (self.inverse)(v, out)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.forward_into(x, &mut out);
        out
    }

    pub fn inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; v.len()];
        self.inverse_into(v, &mut out)?;
        Ok(out)
    }

    /// Checks `φ(0) = 0` and `φ⁻¹(φ(x)) = x` (relative tolerance `1e-10`) on the given points.
    pub fn validate(&self, dim: usize, points: &[Vec<f64>]) -> Result<()> {
        let zero = vec![0.0; dim];
        if self.forward(&zero).iter().any(|&v| v != 0.0) {
            return Err(Error::invalid(format!("φ '{}' does not fix the origin", self.name)));
        }
        for p in points {
            let back = self.inverse(&self.forward(p))?;
            let scale = 1.0 + p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let err = p.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if err > 1e-10 * scale {
                return Err(Error::invalid(format!(
                    "φ '{}' fails the inverse round trip at {p:?} (error {err:e})",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Builder for componentwise maps; without a closed-form inverse the inverse is
/// computed by safeguarded Newton/bisection.
pub struct ComponentwiseBuilder {
    name: String,
    forward: ScalarFn,
    derivative: Option<ScalarFn>,
    inverse: Option<ScalarFn>,
}

impl ComponentwiseBuilder {
    pub fn derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn inverse(mut self, inv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    pub fn build(self) -> PhiMap {
        let fwd = self.forward.clone();
        let forward: VectorFn = Arc::new(move |x, out| {
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = fwd(xi);
            }
        });
        let inverse: VectorInverseFn = match self.inverse {
            Some(inv) => Arc::new(move |v, out| {
                for (o, &vi) in out.iter_mut().zip(v) {
                    *o = inv(vi);
                }
                Ok(())
            }),
            None => {
                let g = self.forward;
                let dg = self.derivative;
                Arc::new(move |v, out| {
                    for (o, &vi) in out.iter_mut().zip(v) {
                        *o = invert_monotone(&*g, dg.as_deref(), vi, INVERSION_TOL)?;
                    }
                    Ok(())
                })
            }
        };
        PhiMap {
            name: self.name,
            forward,
            inverse,
            lipschitz_inverse_hint: None,
            monotone_hint: None,
        }
    }
}

/// Solves `g(x) = target` for a strictly monotone scalar `g` with `g(0) = 0`.
///
/// The root is bracketed by doubling, then refined by Newton steps that are
/// rejected in favour of bisection whenever they leave the bracket.
pub fn invert_monotone(
    g: &dyn Fn(f64) -> f64,
    dg: Option<&(dyn Fn(f64) -> f64 + Send + Sync)>,
    target: f64,
    tol: f64,
) -> Result<f64> {
    if !target.is_finite() {
        return Err(Error::Inversion { value: target, reason: "target is not finite".into() });
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let increasing = g(1.0) > g(-1.0);
    // h is increasing with a root at the answer.
    let h = |x: f64| if increasing { g(x) - target } else { target - g(x) };

    let mut width = target.abs().max(1.0);
    let (mut lo, mut hi) = (-width, width);
    let mut doublings = 0;
    while !(h(lo) <= 0.0 && h(hi) >= 0.0) {
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || !width.is_finite() {
            return Err(Error::Inversion { value: target, reason: "could not bracket the root".into() });
        }
        width *= 2.0;
        lo = -width;
        hi = width;
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_INVERSION_ITERS {
        let hx = h(x);
        if hx == 0.0 {
            return Ok(x);
        }
        if hx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = 0.5 * (lo + hi);
        if let Some(d) = dg {
            let slope = if increasing { d(x) } else { -d(x) };
            if slope.is_finite() && slope > 0.0 {
                let candidate = x - hx / slope;
                if candidate > lo && candidate < hi {
                    next = candidate;
                }
            }
        }
        let scale = next.abs().max(1.0);
        if (next - x).abs() <= tol * scale || hi - lo <= tol * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Inversion { value: target, reason: "iteration limit reached".into() })
}
