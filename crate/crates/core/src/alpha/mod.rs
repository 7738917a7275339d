//! Symbolic calculus for the Kuratowski measure of noncompactness `α`.
//!
//! Sets are expressions over named atoms whose `α` is declared. Evaluation
//! propagates values through the algebraic rules for `α`, keeping exact values
//! separate from one-sided bounds, and records every rule it applies.
//!
//! In ℝᵈ every bounded set has `α = 0`, so nothing here is computed from
//! point-set data; the values are annotations for sets in an infinite-dimensional
//! Banach space.

mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use parse::parse_expr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "alpha")]
pub enum Declared {
    Value(f64),
    /// Relatively compact, `α = 0`.
    Compact,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaExpr {
    Atom { name: String, declared: Declared },
    Closure(Box<AlphaExpr>),
    Union(Box<AlphaExpr>, Box<AlphaExpr>),
    Sum(Box<AlphaExpr>, Box<AlphaExpr>),
    Scale(f64, Box<AlphaExpr>),
    /// `S·B = {s·b}` for a bounded `S ⊂ ℝ` with `sup |S| = sup_abs`.
    ScalarSetProduct { sup_abs: f64, set: Box<AlphaExpr> },
    /// `A × B` with the max norm.
    ProductMax(Box<AlphaExpr>, Box<AlphaExpr>),
    ConvexHull(Box<AlphaExpr>),
    /// Any subset of the inner set.
    SubsetOf(Box<AlphaExpr>),
}

impl AlphaExpr {
    pub fn atom(name: impl Into<String>, alpha: f64) -> Self {
        AlphaExpr::Atom { name: name.into(), declared: Declared::Value(alpha) }
    }

    pub fn compact(name: impl Into<String>) -> Self {
        AlphaExpr::Atom { name: name.into(), declared: Declared::Compact }
    }

    pub fn unknown(name: impl Into<String>) -> Self {
        AlphaExpr::Atom { name: name.into(), declared: Declared::Unknown }
    }

    pub fn closure(self) -> Self {
        AlphaExpr::Closure(Box::new(self))
    }

    pub fn hull(self) -> Self {
        AlphaExpr::ConvexHull(Box::new(self))
    }

    pub fn subset(self) -> Self {
        AlphaExpr::SubsetOf(Box::new(self))
    }

    pub fn scale(self, lambda: f64) -> Self {
        AlphaExpr::Scale(lambda, Box::new(self))
    }

    pub fn scalar_set_product(self, sup_abs: f64) -> Self {
        AlphaExpr::ScalarSetProduct { sup_abs, set: Box::new(self) }
    }

    pub fn union(self, other: Self) -> Self {
        AlphaExpr::Union(Box::new(self), Box::new(other))
    }

    pub fn sum(self, other: Self) -> Self {
        AlphaExpr::Sum(Box::new(self), Box::new(other))
    }

    pub fn product(self, other: Self) -> Self {
        AlphaExpr::ProductMax(Box::new(self), Box::new(other))
    }
}

impl fmt::Display for AlphaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaExpr::Atom { name, declared } => {
                write!(f, "(atom \"{}\" ", name.replace('\\', "\\\\").replace('"', "\\\""))?;
                match declared {
                    Declared::Value(v) => write!(f, "{v:?})"),
                    Declared::Compact => write!(f, "compact)"),
                    Declared::Unknown => write!(f, "unknown)"),
                }
            }
            AlphaExpr::Closure(e) => write!(f, "(closure {e})"),
            AlphaExpr::Union(a, b) => write!(f, "(union {a} {b})"),
            AlphaExpr::Sum(a, b) => write!(f, "(sum {a} {b})"),
            AlphaExpr::Scale(l, e) => write!(f, "(scale {l:?} {e})"),
            AlphaExpr::ScalarSetProduct { sup_abs, set } => write!(f, "(scalar_set_product {sup_abs:?} {set})"),
            AlphaExpr::ProductMax(a, b) => write!(f, "(product {a} {b})"),
            AlphaExpr::ConvexHull(e) => write!(f, "(hull {e})"),
            AlphaExpr::SubsetOf(e) => write!(f, "(subset {e})"),
        }
    }
}

/// What is known about `α` of a set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum AlphaValue {
    Exact(f64),
    UpperBound(f64),
    Unknown,
}

impl AlphaValue {
    /// The exact value or the upper bound.
    pub fn bound(self) -> Option<f64> {
        match self {
            AlphaValue::Exact(v) | AlphaValue::UpperBound(v) => Some(v),
            AlphaValue::Unknown => None,
        }
    }

    pub fn exact(self) -> Option<f64> {
        match self {
            AlphaValue::Exact(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, AlphaValue::Exact(_))
    }

    fn map(self, g: impl Fn(f64) -> f64) -> Self {
        match self {
            AlphaValue::Exact(v) => AlphaValue::Exact(g(v)),
            AlphaValue::UpperBound(v) => AlphaValue::UpperBound(g(v)),
            AlphaValue::Unknown => AlphaValue::Unknown,
        }
    }

    fn loosen(self) -> Self {
        match self {
            AlphaValue::Exact(v) => AlphaValue::UpperBound(v),
            other => other,
        }
    }

    fn combine(self, other: Self, g: impl Fn(f64, f64) -> f64) -> Self {
        match (self, other) {
            (AlphaValue::Exact(a), AlphaValue::Exact(b)) => AlphaValue::Exact(g(a, b)),
            (a, b) => match (a.bound(), b.bound()) {
                (Some(a), Some(b)) => AlphaValue::UpperBound(g(a, b)),
                _ => AlphaValue::Unknown,
            },
        }
    }
}

impl fmt::Display for AlphaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaValue::Exact(v) => write!(f, "= {v}"),
            AlphaValue::UpperBound(v) => write!(f, "<= {v}"),
            AlphaValue::Unknown => write!(f, "unknown"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub rule: String,
    pub premises: Vec<AlphaValue>,
    pub conclusion: AlphaValue,
    /// Multiplier the rule applies, when it is a scaling step.
    pub factor: Option<f64>,
    /// The identity or inequality the rule instantiates.
    pub citation: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DerivationTrace {
    pub steps: Vec<TraceStep>,
}

impl DerivationTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn push(&mut self, rule: &str, premises: Vec<AlphaValue>, conclusion: AlphaValue, citation: &str) {
        self.steps.push(TraceStep {
            rule: rule.into(),
            premises,
            conclusion,
            factor: None,
            citation: citation.into(),
        });
    }
}

impl fmt::Display for DerivationTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            let premises: Vec<String> = s.premises.iter().map(|p| p.to_string()).collect();
            write!(f, "{:>3}. {:<20} [{}] => {}", i + 1, s.rule, premises.join(", "), s.conclusion)?;
            if let Some(k) = s.factor {
                write!(f, "  (x{k})")?;
            }
            writeln!(f, "  {}", s.citation)?;
        }
        Ok(())
    }
}

pub const CITE_COMPACT: &str = "α(B) = 0 iff B is relatively compact";
pub const CITE_SUBSET: &str = "S ⊂ B ⇒ α(S) ≤ α(B)";
pub const CITE_CLOSURE: &str = "α(cl B) = α(B)";
pub const CITE_UNION: &str = "α(B ∪ S) = max{α(B), α(S)}";
pub const CITE_SCALE: &str = "α(λB) = |λ|·α(B)";
pub const CITE_SUM: &str = "α(B + S) ≤ α(B) + α(S)";
pub const CITE_HULL: &str = "α(cl conv B) = α(B)";
pub const CITE_SCALAR_SET: &str = "α(SB) = sup{|s| : s ∈ S}·α(B)";
pub const CITE_PRODUCT: &str = "α(A × B) = max{α(A), α(B)}";
pub const CITE_C1_LOWER: &str = "α₁(H) ≥ α(H(I)) and 2α₁(H) ≥ α(H′(I))";
pub const CITE_C1_EXACT: &str = "α₁(H) = max{max_t α(H(t)), max_t α(H′(t))} for H′ equicontinuous";

/// Propagates declared values bottom-up. Equality rules keep exactness; the
/// subset and sum rules turn any value into an upper bound.
pub fn alpha_eval(e: &AlphaExpr) -> Result<(AlphaValue, DerivationTrace)> {
    let mut trace = DerivationTrace::default();
    let v = eval_into(e, &mut trace)?;
    Ok((v, trace))
}

fn eval_into(e: &AlphaExpr, tr: &mut DerivationTrace) -> Result<AlphaValue> {
    let v = match e {
        AlphaExpr::Atom { name, declared } => {
            // a declared value is a premise, not a rule application
            return match *declared {
                Declared::Value(a) if a >= 0.0 && a.is_finite() => Ok(AlphaValue::Exact(a)),
                Declared::Value(a) => Err(Error::invalid(format!("α of {name} must be finite and nonnegative, got {a}"))),
                Declared::Compact => {
                    tr.push("compact", vec![], AlphaValue::Exact(0.0), CITE_COMPACT);
                    Ok(AlphaValue::Exact(0.0))
                }
                Declared::Unknown => Ok(AlphaValue::Unknown),
            };
        }
        AlphaExpr::Closure(inner) => {
            let a = eval_into(inner, tr)?;
            tr.push("closure", vec![a], a, CITE_CLOSURE);
            a
        }
        AlphaExpr::ConvexHull(inner) => {
            let a = eval_into(inner, tr)?;
            tr.push("convex_hull", vec![a], a, CITE_HULL);
            a
        }
        AlphaExpr::SubsetOf(inner) => {
            let a = eval_into(inner, tr)?;
            let v = a.loosen();
            tr.push("subset", vec![a], v, CITE_SUBSET);
            v
        }
        AlphaExpr::Union(x, y) | AlphaExpr::ProductMax(x, y) | AlphaExpr::Sum(x, y) => {
            let a = eval_into(x, tr)?;
            let b = eval_into(y, tr)?;
            let (rule, v, cite) = match e {
                AlphaExpr::Union(..) => ("union", a.combine(b, f64::max), CITE_UNION),
                AlphaExpr::ProductMax(..) => ("product", a.combine(b, f64::max), CITE_PRODUCT),
                _ => ("sum", a.combine(b, |p, q| p + q).loosen(), CITE_SUM),
            };
            tr.push(rule, vec![a, b], v, cite);
            v
        }
        AlphaExpr::Scale(lambda, inner) | AlphaExpr::ScalarSetProduct { sup_abs: lambda, set: inner } => {
            let scalar_set = matches!(e, AlphaExpr::ScalarSetProduct { .. });
            if !lambda.is_finite() || (scalar_set && *lambda < 0.0) {
                return Err(Error::invalid(format!("invalid scalar {lambda}")));
            }
            let a = eval_into(inner, tr)?;
            let s = lambda.abs();
            // a single point (or {0}·B) is compact whatever B is
            let v = if s == 0.0 { AlphaValue::Exact(0.0) } else { a.map(|x| s * x) };
            let (rule, cite) =
                if scalar_set { ("scalar_set_product", CITE_SCALAR_SET) } else { ("scale", CITE_SCALE) };
            tr.steps.push(TraceStep {
                rule: rule.into(),
                premises: vec![a],
                conclusion: v,
                factor: Some(s),
                citation: cite.into(),
            });
            v
        }
    };
    Ok(v)
}

/// What is known about `α₁` of a bounded family in `C¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C1Alpha {
    Exact(f64),
    /// `α₁ ≥ from_values` and `α₁ ≥ from_derivatives`.
    LowerBounds { from_values: f64, from_derivatives: f64 },
}

/// `α₁` of a family `H ⊂ C¹` from `α(H(I))` and `α(H′(I))`: the maximum when
/// `H′` is equicontinuous, otherwise only the two lower bounds.
pub fn alpha_c1_bounds(h_alpha: f64, hprime_alpha: f64, equicontinuous_prime: bool) -> Result<C1Alpha> {
    for v in [h_alpha, hprime_alpha] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("α values must be finite and nonnegative, got {v}")));
        }
    }
    Ok(if equicontinuous_prime {
        C1Alpha::Exact(h_alpha.max(hprime_alpha))
    } else {
        C1Alpha::LowerBounds { from_values: h_alpha, from_derivatives: hprime_alpha / 2.0 }
    })
}

/// Replays the estimate `α₁(M₁Λ) ≤ 2·k·k₁·α₁(Λ)` for the fixed-point operator.
///
/// Step `i` multiplies the running coefficient by its factor; its conclusion is
/// that coefficient times `α₁(Λ)`. The last conclusion is the bound.
pub fn condensing_chain(k: f64, k1: f64, lambda_alpha: f64) -> Result<(f64, DerivationTrace)> {
    if !(k > 0.0 && k.is_finite() && k1 > 0.0 && k1.is_finite()) {
        return Err(Error::invalid(format!("k and k1 must be positive, got k = {k}, k1 = {k1}")));
    }
    if !(lambda_alpha >= 0.0 && lambda_alpha.is_finite()) {
        return Err(Error::invalid(format!("α₁(Λ) must be finite and nonnegative, got {lambda_alpha}")));
    }
    let steps: [(&str, f64, &str); 6] = [
        ("integration", 1.0, "α({∫_τ^1 v(s) ds}) ≤ (1 − τ)·α(cl conv{v(s)}) and 1 − τ ≤ 1"),
        ("convex_hull", 1.0, CITE_HULL),
        ("lipschitz_phi_inverse", k, "α(φ⁻¹(B)) ≤ k·α(B) for k-Lipschitz φ⁻¹"),
        ("scalar_set_product", 1.0, "α([0,1]·B) = 1·α(B)"),
        ("condensing_hypothesis", k1, "α(f(I × A × B)) ≤ k₁·max{α(A), α(B)}"),
        ("c1_lower_bounds", 2.0, CITE_C1_LOWER),
    ];
    let mut trace = DerivationTrace::default();
    let mut coeff = 1.0;
    let mut previous = AlphaValue::UpperBound(lambda_alpha);
    for (rule, factor, cite) in steps {
        coeff *= factor;
        let conclusion = AlphaValue::UpperBound(coeff * lambda_alpha);
        trace.steps.push(TraceStep {
            rule: rule.into(),
            premises: vec![previous, AlphaValue::Exact(factor)],
            conclusion,
            factor: Some(factor),
            citation: cite.into(),
        });
        previous = conclusion;
    }
    Ok((coeff * lambda_alpha, trace))
}
