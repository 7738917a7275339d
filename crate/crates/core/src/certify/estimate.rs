//! Sampling estimators for the constants in the existence hypotheses, and the
//! closed-form bounds built from them.
//!
//! Sampling only ever bounds a supremum from below, so every Lipschitz-type
//! estimate is inflated by [`SAFETY_FACTOR`] and labelled as numerical evidence.

use serde::{Deserialize, Serialize};

use super::sampling::{Sampler, SamplingPlan, Stream};
use crate::error::{Error, Result};
use crate::grid::VectorNorm;
use crate::phi::PhiMap;
use crate::problem::Problem;
use crate::rhs::RhsFunction;

pub const SAFETY_FACTOR: f64 = 1.1;
/// Candidates for `c₁`: `0, 0.25, …, 4`.
pub const C1_STEP: f64 = 0.25;
pub const C1_CANDIDATES: usize = 17;
/// The growth condition is global, so it is also probed on shells out to this
/// multiple of the sampling radius.
pub const GROWTH_PROBE_SCALE: f64 = 1e4;
/// A `c₀` above this on the probe shells counts as superlinear growth.
pub const GROWTH_C0_CAP: f64 = 1e6;
/// Relative size of the perturbation used for local difference quotients.
const LOCAL_STEP: f64 = 1e-4;

/// An extremal sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub quantity: String,
    pub value: f64,
    pub t: Option<f64>,
    pub point: Vec<f64>,
}

/// Largest sampled difference quotient of `φ⁻¹` over the ball, times [`SAFETY_FACTOR`].
pub fn estimate_phi_inverse_lipschitz(
    phi: &PhiMap,
    dim: usize,
    norm: VectorNorm,
    plan: &SamplingPlan,
) -> Result<(f64, Witness)> {
    plan.validate()?;
    let mut s = Sampler::new(plan.seed, Stream::PhiInverse, dim, norm);
    let rho = plan.radius;
    let mut best = 0.0f64;
    let mut at = vec![0.0; dim];
    for i in 0..plan.samples {
        let v = if i == 0 { vec![0.0; dim] } else { s.in_ball(rho) };
        let other = if i % 2 == 0 { s.nearby(&v, LOCAL_STEP * rho) } else { s.in_ball(rho) };
        let dv = dist(norm, &v, &other);
        if dv == 0.0 {
            continue;
        }
        let q = dist(norm, &phi.inverse(&v)?, &phi.inverse(&other)?) / dv;
        if q > best {
            best = q;
            at = v;
        }
    }
    let k = SAFETY_FACTOR * best;
    Ok((k, Witness { quantity: "phi_inverse_lipschitz".into(), value: k, t: None, point: at }))
}

/// Result of fitting `‖f(t,x,y)‖ ≤ c₀ + c₁‖y‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub c0: f64,
    pub c1: f64,
    /// `(c₁, c₀(c₁))` for every candidate, `c₀ = None` when above the cap.
    pub candidates: Vec<(f64, Option<f64>)>,
    pub witness: Witness,
}

/// Fits the linear growth envelope on the grid of `c₁` candidates and keeps the
/// pair with the smallest Gronwall constant `β`. `Ok(None)` means every candidate
/// exceeded [`GROWTH_C0_CAP`], i.e. the growth looks superlinear.
pub fn estimate_growth_constants(
    f: &RhsFunction,
    t_end: f64,
    dim: usize,
    norm: VectorNorm,
    k: f64,
    plan: &SamplingPlan,
) -> Result<Option<GrowthEstimate>> {
    plan.validate()?;
    let mut s = Sampler::new(plan.seed, Stream::Growth, dim, norm);
    let rho = plan.radius;
    let mut samples = Vec::with_capacity(plan.samples);
    for i in 0..plan.samples {
        let t = s.time(t_end, plan.t_nodes);
        let (x, y) = match i % 4 {
            0 => (s.in_ball(rho), vec![0.0; dim]),
            1 => (s.in_ball(rho), s.in_ball(rho)),
            2 => (s.on_log_shell(rho, rho * GROWTH_PROBE_SCALE), vec![0.0; dim]),
            _ => (
                s.on_log_shell(rho, rho * GROWTH_PROBE_SCALE),
                s.on_log_shell(rho, rho * GROWTH_PROBE_SCALE),
            ),
        };
        let fx = f.eval(t, &x, &y);
        if fx.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation { node: i, t, reason: "f is not finite on the sampled ball".into() });
        }
        samples.push((norm.of_slice(&fx), norm.of_slice(&y), t, x, y));
    }

    let mut candidates = Vec::with_capacity(C1_CANDIDATES);
    let mut best: Option<(f64, f64, f64, usize)> = None;
    for j in 0..C1_CANDIDATES {
        let c1 = C1_STEP * j as f64;
        let (arg, excess) = samples
            .iter()
            .enumerate()
            .map(|(i, (nf, ny, ..))| (i, nf - c1 * ny))
            .fold((0, f64::NEG_INFINITY), |m, e| if e.1 > m.1 { e } else { m });
        let c0 = excess.max(0.0);
        if c0 > GROWTH_C0_CAP {
            candidates.push((c1, None));
            continue;
        }
        candidates.push((c1, Some(c0)));
        let (beta, _) = gronwall_bound(k, c0, c1, t_end);
        if best.is_none_or(|b| beta < b.0) {
            best = Some((beta, c0, c1, arg));
        }
    }
    Ok(best.map(|(_, c0, c1, arg)| {
        let (_, _, t, x, y) = &samples[arg];
        GrowthEstimate {
            c0,
            c1,
            candidates,
            witness: Witness {
                quantity: "growth_c0".into(),
                value: c0,
                t: Some(*t),
                point: x.iter().chain(y).copied().collect(),
            },
        }
    }))
}

/// `β = k·c₀·T·e^{k·c₁·T}` bounds `‖u′‖∞` for every fixed point of `M(λ, ·)`, and
/// `R₁ = max{β, β·T}` bounds `‖u‖₁`.
pub fn gronwall_bound(k: f64, c0: f64, c1: f64, t_end: f64) -> (f64, f64) {
    let beta = k * c0 * t_end * (k * c1 * t_end).exp();
    (beta, beta.max(beta * t_end))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CondensingMode {
    /// factor `2·k·k₁`
    Banach,
    /// factor `k·k₁`
    Hilbert,
}

/// Returns the contraction factor of the measure of noncompactness and whether
/// it is strictly below one.
pub fn condensing_check(k: f64, k1: f64, mode: CondensingMode) -> (f64, bool) {
    let factor = match mode {
        CondensingMode::Banach => 2.0 * k * k1,
        CondensingMode::Hilbert => k * k1,
    };
    (factor, factor < 1.0)
}

/// Largest sampled quotient `‖f(t,x,y) − f(t,x′,y′)‖ / max{‖x−x′‖, ‖y−y′‖}` at
/// shared `t`, times [`SAFETY_FACTOR`]. When `f` ignores `y`, only `x` moves.
pub fn estimate_f_lipschitz(
    f: &RhsFunction,
    t_end: f64,
    dim: usize,
    norm: VectorNorm,
    plan: &SamplingPlan,
) -> Result<(f64, Witness)> {
    plan.validate()?;
    let mut s = Sampler::new(plan.seed, Stream::Lipschitz, dim, norm);
    let rho = plan.radius;
    let moves_y = f.depends_on_y();
    let mut best = 0.0f64;
    let mut witness = (0.0, vec![0.0; 2 * dim]);
    for i in 0..plan.samples {
        let t = s.time(t_end, plan.t_nodes);
        let (x, y) = if i == 0 { (vec![0.0; dim], vec![0.0; dim]) } else { (s.in_ball(rho), s.in_ball(rho)) };
        let local = i % 2 == 0;
        let x2 = if local { s.nearby(&x, LOCAL_STEP * rho) } else { s.in_ball(rho) };
        let y2 = match (moves_y, local) {
            (false, _) => y.clone(),
            (true, true) => s.nearby(&y, LOCAL_STEP * rho),
            (true, false) => s.in_ball(rho),
        };
        let den = dist(norm, &x, &x2).max(dist(norm, &y, &y2));
        if den == 0.0 {
            continue;
        }
        let q = dist(norm, &f.eval(t, &x, &y), &f.eval(t, &x2, &y2)) / den;
        if !q.is_finite() {
            return Err(Error::Evaluation { node: i, t, reason: "f is not finite on the sampled ball".into() });
        }
        if q > best {
            best = q;
            witness = (t, x.into_iter().chain(y).collect());
        }
    }
    let k1 = SAFETY_FACTOR * best;
    Ok((k1, Witness { quantity: "f_lipschitz".into(), value: k1, t: Some(witness.0), point: witness.1 }))
}

/// Sampled margins of the inner-product hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HilbertReport {
    /// `min ⟨φ(x) − φ(y), x − y⟩` over distinct sampled pairs.
    pub monotonicity_margin: f64,
    /// `min ⟨f(t,x,y), x⟩ + h(t) − ‖f(t,x,y)‖` over sampled triples.
    pub growth_margin: f64,
    pub monotone: bool,
    pub growth: bool,
    pub passed: bool,
    pub witnesses: Vec<Witness>,
}

/// Probes strict monotonicity of φ and `‖f‖ ≤ ⟨f, x⟩ + h(t)` on the sampling ball.
pub fn check_hilbert_conditions(p: &Problem, plan: &SamplingPlan) -> Result<HilbertReport> {
    plan.validate()?;
    if p.norm() != VectorNorm::Euclidean {
        return Err(Error::invalid("the inner-product conditions need the euclidean norm"));
    }
    if !p.f().has_hilbert_h() {
        return Err(Error::invalid("the inner-product conditions need the weight h(t)"));
    }
    let dim = p.dim();
    let rho = plan.radius;

    let mut s = Sampler::new(plan.seed, Stream::Monotonicity, dim, p.norm());
    let mut mono = (f64::INFINITY, vec![]);
    for i in 0..plan.samples {
        let x = if i == 0 { vec![0.0; dim] } else { s.in_ball(rho) };
        let y = if i % 2 == 0 { s.nearby(&x, LOCAL_STEP * rho) } else { s.in_ball(rho) };
        if x == y {
            continue;
        }
        let m = dot(&sub(&p.phi().forward(&x), &p.phi().forward(&y)), &sub(&x, &y));
        if m < mono.0 {
            mono = (m, x.into_iter().chain(y).collect());
        }
    }

    let mut s = Sampler::new(plan.seed, Stream::HilbertGrowth, dim, p.norm());
    let mut growth = (f64::INFINITY, 0.0, vec![]);
    for _ in 0..plan.samples {
        let t = s.time(p.t_end(), plan.t_nodes);
        let x = s.in_ball(rho);
        let y = s.in_ball(rho);
        let fx = p.f().eval(t, &x, &y);
        let h = p.f().hilbert_h(t).expect("checked above");
        let m = dot(&fx, &x) + h - p.norm().of_slice(&fx);
        if m < growth.0 {
            growth = (m, t, x.into_iter().chain(y).collect());
        }
    }

    let monotone = mono.0 > 0.0;
    let growth_ok = growth.0 >= 0.0;
    Ok(HilbertReport {
        monotonicity_margin: mono.0,
        growth_margin: growth.0,
        monotone,
        growth: growth_ok,
        passed: monotone && growth_ok,
        witnesses: vec![
            Witness { quantity: "monotonicity_margin".into(), value: mono.0, t: None, point: mono.1 },
            Witness { quantity: "hilbert_growth_margin".into(), value: growth.0, t: Some(growth.1), point: growth.2 },
        ],
    })
}

/// Bounds from the inner-product growth condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertBound {
    pub h_l1: f64,
    /// `L = k·‖h‖_{L¹}` bounds `‖u′‖∞`.
    pub l: f64,
    /// `R = max{L, L·T}` bounds `‖u‖₁`.
    pub r: f64,
}

/// `‖φ(u′(t))‖ ≤ ‖h‖_{L¹}` and `φ⁻¹(0) = 0` give `‖u′‖∞ ≤ k·‖h‖_{L¹}`; the norm of
/// `h` is taken by the trapezoid rule on `nodes` equispaced samples.
pub fn hilbert_bound(p: &Problem, k: f64, nodes: usize) -> Result<HilbertBound> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("k must be positive, got {k}")));
    }
    if nodes < 2 {
        return Err(Error::invalid("h needs at least 2 samples"));
    }
    if !p.f().has_hilbert_h() {
        return Err(Error::invalid("the problem carries no weight h(t)"));
    }
    let t_end = p.t_end();
    let step = t_end / (nodes - 1) as f64;
    let mut values = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let t = if i + 1 == nodes { t_end } else { i as f64 * step };
        let h = p.f().hilbert_h(t).expect("checked above");
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("h must be finite and nonnegative, got h({t}) = {h}")));
        }
        values.push(h);
    }
    let h_l1 = values.windows(2).map(|w| 0.5 * step * (w[0] + w[1])).sum::<f64>();
    let l = k * h_l1;
    Ok(HilbertBound { h_l1, l, r: l.max(l * t_end) })
}

fn dist(norm: VectorNorm, a: &[f64], b: &[f64]) -> f64 {
    norm.of_slice(&sub(a, b))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn plan() -> SamplingPlan {
        SamplingPlan::default()
    }

    #[test]
    fn phi_inverse_constants() {
        let e = VectorNorm::Euclidean;
        let (k, _) = estimate_phi_inverse_lipschitz(&PhiMap::identity(), 2, e, &plan()).unwrap();
        assert_relative_eq!(k, 1.1, max_relative = 1e-9);
        let (k, _) = estimate_phi_inverse_lipschitz(&PhiMap::linear(2.0).unwrap(), 1, e, &plan()).unwrap();
        assert_relative_eq!(k, 0.55, max_relative = 1e-9);
        let (k, w) = estimate_phi_inverse_lipschitz(&PhiMap::cubic(), 1, e, &plan()).unwrap();
        assert_relative_eq!(k, 1.1, max_relative = 1e-3);
        assert!(k <= 1.1 + 1e-12);
        assert_eq!(w.point, vec![0.0]);
    }

    #[test]
    fn doubling_phi_halves_k() {
        // (2φ)⁻¹(v) = φ⁻¹(v/2), so the doubled map is sampled on the doubled ball
        for phi in [PhiMap::cubic(), PhiMap::arctan(2.0).unwrap(), PhiMap::identity()] {
            let (k, _) = estimate_phi_inverse_lipschitz(&phi, 2, VectorNorm::Sup, &plan()).unwrap();
            let wide = plan().with_radius(2.0 * plan().radius);
            let (k2, _) =
                estimate_phi_inverse_lipschitz(&phi.scaled(2.0).unwrap(), 2, VectorNorm::Sup, &wide).unwrap();
            assert!((k2 / (k / 2.0) - 1.0).abs() <= 0.05, "{} {k} {k2}", phi.name());
            let (b, _) = gronwall_bound(k / 2.0, 1.0, 0.5, 1.0);
            let (b2, _) = gronwall_bound(k2, 1.0, 0.5, 1.0);
            assert!((b / b2 - 1.0).abs() <= 0.05);
        }
    }

    #[test]
    fn growth_examples() {
        let e = VectorNorm::Euclidean;
        let g = estimate_growth_constants(&RhsFunction::zero(), 1.0, 1, e, 1.1, &plan()).unwrap().unwrap();
        assert_eq!((g.c0, g.c1), (0.0, 0.0));

        let g = estimate_growth_constants(&RhsFunction::sin(1.0), 1.0, 1, e, 1.1, &plan()).unwrap().unwrap();
        assert_eq!(g.c1, 0.0);
        assert!(g.c0 <= 1.0 && g.c0 > 0.99, "{}", g.c0);

        let ident_y = RhsFunction::new("y", true, |_, _, y, o| o.copy_from_slice(y));
        let g = estimate_growth_constants(&ident_y, 1.0, 2, e, 1.1, &plan()).unwrap().unwrap();
        assert_eq!((g.c0, g.c1), (0.0, 1.0));
    }

    #[test]
    fn superlinear_growth_is_rejected() {
        let sq = RhsFunction::new("y^2", true, |_, _, y, o| o[0] = y[0] * y[0]);
        let g = estimate_growth_constants(&sq, 1.0, 1, VectorNorm::Euclidean, 1.1, &plan()).unwrap();
        assert!(g.is_none());
    }

    #[test]
    fn gronwall_examples() {
        assert_eq!(gronwall_bound(1.0, 1.0, 0.0, 1.0), (1.0, 1.0));
        assert_eq!(gronwall_bound(3.7, 0.0, 2.0, 5.0), (0.0, 0.0));
        let (b, r) = gronwall_bound(2.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(b, 2.0 * 1f64.exp().powi(2), max_relative = 1e-15);
        assert_eq!(r, b);
        let (b, r) = gronwall_bound(1.0, 1.0, 0.0, 3.0);
        assert_eq!((b, r), (3.0, 9.0));
    }

    #[test]
    fn condensing_examples() {
        assert_eq!(condensing_check(1.0, 0.4, CondensingMode::Banach), (0.8, true));
        assert_eq!(condensing_check(1.0, 0.5, CondensingMode::Banach), (1.0, false));
        assert_eq!(condensing_check(0.5, 0.9, CondensingMode::Hilbert), (0.45, true));
    }

    #[test]
    fn f_lipschitz_examples() {
        let e = VectorNorm::Euclidean;
        let (k1, _) = estimate_f_lipschitz(&RhsFunction::time_only("t", |t| t * t), 1.0, 2, e, &plan()).unwrap();
        assert_eq!(k1, 0.0);
        let lin = RhsFunction::new("0.3x", false, |_, x, _, o| o.iter_mut().zip(x).for_each(|(o, x)| *o = 0.3 * x));
        let (k1, _) = estimate_f_lipschitz(&lin, 1.0, 3, e, &plan()).unwrap();
        assert_relative_eq!(k1, 0.33, max_relative = 1e-9);
        let (k1, _) = estimate_f_lipschitz(&RhsFunction::sin(1.0), 1.0, 1, e, &plan()).unwrap();
        assert_relative_eq!(k1, 1.1, max_relative = 1e-3);
    }

    #[test]
    fn hilbert_condition_examples() {
        let e = VectorNorm::Euclidean;
        let ident_x = RhsFunction::new("x", false, |_, x, _, o| o.copy_from_slice(x)).with_hilbert_h(|_| 1.0);
        let p = Problem::new(1.0, 2, PhiMap::identity(), ident_x.clone(), e).unwrap();
        let rep = check_hilbert_conditions(&p, &plan()).unwrap();
        assert!(rep.passed);
        assert!(rep.monotonicity_margin > 0.0);
        // ‖x‖² − ‖x‖ + 1 ≥ 3/4 on any ball
        assert!(rep.growth_margin >= 0.75 - 1e-12);

        let p = Problem::new(1.0, 2, PhiMap::linear(-1.0).unwrap(), ident_x.clone(), e).unwrap();
        let rep = check_hilbert_conditions(&p, &plan()).unwrap();
        assert!(!rep.monotone && rep.monotonicity_margin < 0.0);

        let p = Problem::new(1.0, 2, PhiMap::identity(), RhsFunction::zero(), e).unwrap();
        assert!(matches!(check_hilbert_conditions(&p, &plan()), Err(Error::InvalidArgument(_))));
        let p = Problem::new(1.0, 2, PhiMap::identity(), ident_x, VectorNorm::Sup).unwrap();
        assert!(check_hilbert_conditions(&p, &plan()).is_err());
    }

    #[test]
    fn hilbert_bound_examples() {
        let e = VectorNorm::Euclidean;
        let with_h = |t_end: f64, h: f64| {
            Problem::new(t_end, 1, PhiMap::identity(), RhsFunction::zero().with_hilbert_h(move |_| h), e).unwrap()
        };
        let b = hilbert_bound(&with_h(1.0, 0.0), 1.0, 11).unwrap();
        assert_eq!((b.l, b.r), (0.0, 0.0));
        let b = hilbert_bound(&with_h(1.0, 1.0), 1.0, 11).unwrap();
        assert_relative_eq!(b.h_l1, 1.0, max_relative = 1e-14);
        assert_relative_eq!(b.l, 1.0, max_relative = 1e-14);
        assert_relative_eq!(b.r, 1.0, max_relative = 1e-14);
        let b = hilbert_bound(&with_h(2.0, 2.0), 0.5, 11).unwrap();
        assert_relative_eq!(b.h_l1, 4.0, max_relative = 1e-14);
        assert_relative_eq!(b.l, 2.0, max_relative = 1e-14);
        assert_relative_eq!(b.r, 4.0, max_relative = 1e-14);
        assert!(hilbert_bound(&with_h(1.0, -0.5), 1.0, 11).is_err());
        let no_h = Problem::new(1.0, 1, PhiMap::identity(), RhsFunction::zero(), e).unwrap();
        assert!(hilbert_bound(&no_h, 1.0, 11).is_err());
    }

    proptest! {
        #[test]
        fn gronwall_is_monotone(
            k in 0.0f64..3.0, c0 in 0.0f64..3.0, c1 in 0.0f64..3.0, t in 0.01f64..3.0,
            dk in 0.0f64..1.0, dc0 in 0.0f64..1.0, dc1 in 0.0f64..1.0, dt in 0.0f64..1.0,
        ) {
            let (b, r) = gronwall_bound(k, c0, c1, t);
            for (b2, r2) in [
                gronwall_bound(k + dk, c0, c1, t),
                gronwall_bound(k, c0 + dc0, c1, t),
                gronwall_bound(k, c0, c1 + dc1, t),
                gronwall_bound(k, c0, c1, t + dt),
            ] {
                prop_assert!(b2 >= b && r2 >= r);
            }
        }

        #[test]
        fn condensing_fails_exactly_at_one(k in 0.01f64..4.0, k1 in 0.0f64..4.0) {
            for mode in [CondensingMode::Banach, CondensingMode::Hilbert] {
                let (factor, pass) = condensing_check(k, k1, mode);
                prop_assert_eq!(pass, factor < 1.0);
            }
        }
    }
}
