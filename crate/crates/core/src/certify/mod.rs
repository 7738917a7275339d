//! Sampled verification of the existence hypotheses and the a-priori bounds they
//! imply.
//!
//! Every constant is an estimate from deterministic pseudo-random sampling on a
//! ball whose radius is enlarged until it contains twice the bound it produces.
//! The resulting [`Certificate`] is numerical evidence, not a proof.

mod certificate;
mod estimate;
mod sampling;

pub use certificate::{
    to_json_17, Certificate, Check, Digits17, SamplingReport, Theorem, Verdict, EVIDENCE_LABEL,
};
pub use estimate::{
    check_hilbert_conditions, condensing_check, estimate_f_lipschitz, estimate_growth_constants,
    estimate_phi_inverse_lipschitz, gronwall_bound, hilbert_bound, CondensingMode, GrowthEstimate,
    HilbertBound, HilbertReport, Witness, C1_CANDIDATES, C1_STEP, GROWTH_C0_CAP, GROWTH_PROBE_SCALE,
    SAFETY_FACTOR,
};
pub use sampling::SamplingPlan;

use crate::error::Result;
use crate::grid::VectorNorm;
use crate::problem::Problem;

/// Upper limit on radius enlargements.
pub const BOOTSTRAP_ROUNDS: usize = 5;
/// Each enlargement overshoots the required radius by this factor, since the
/// bound itself grows with the radius when `k` or `c₀` do.
pub const BOOTSTRAP_SLACK: f64 = 1.25;
/// Samples of `h` for its `L¹` norm.
pub const H_QUADRATURE_NODES: usize = 1001;

struct Round {
    k: f64,
    k_witness: Witness,
    growth: Option<GrowthEstimate>,
    gronwall: Option<(f64, f64)>,
    hilbert: Option<HilbertBound>,
}

impl Round {
    fn run(p: &Problem, plan: &SamplingPlan, hilbert_ready: bool) -> Result<Round> {
        let (k, k_witness) = estimate_phi_inverse_lipschitz(p.phi(), p.dim(), p.norm(), plan)?;
        let growth = estimate_growth_constants(p.f(), p.t_end(), p.dim(), p.norm(), k, plan)?;
        let gronwall = growth.as_ref().map(|g| gronwall_bound(k, g.c0, g.c1, p.t_end()));
        let hilbert = if hilbert_ready && k > 0.0 { Some(hilbert_bound(p, k, H_QUADRATURE_NODES)?) } else { None };
        Ok(Round { k, k_witness, growth, gronwall, hilbert })
    }

    fn required_radius(&self) -> Option<f64> {
        let r1 = self.gronwall.map(|g| g.1);
        let r = self.hilbert.map(|h| h.r);
        match (r1, r) {
            (None, None) => None,
            (a, b) => Some(2.0 * a.unwrap_or(0.0).max(b.unwrap_or(0.0))),
        }
    }
}

/// Estimates every constant, evaluates each theorem's hypotheses on the final
/// sampling ball, and names the first theorem that passes, in
/// [`Theorem::HILBERT_ORDER`] for a euclidean problem with `h` and in
/// [`Theorem::ORDER`] otherwise.
///
/// The ball starts at `plan.radius` and is enlarged past twice the largest
/// a-priori bound (`R₁` or `R`) until its radius is at least that, for at most
/// [`BOOTSTRAP_ROUNDS`] rounds. Failures are reported inside the certificate; only invalid plans and
/// evaluation failures of `φ⁻¹` or `f` are errors.
pub fn build_certificate(p: &Problem, plan: &SamplingPlan) -> Result<Certificate> {
    plan.validate()?;
    let euclidean = p.norm() == VectorNorm::Euclidean;
    let hilbert_ready = euclidean && p.f().has_hilbert_h();

    let mut current = *plan;
    let mut radii = vec![];
    let mut round = Round::run(p, &current, hilbert_ready)?;
    radii.push(current.radius);
    let mut closed = round.required_radius().is_none_or(|need| current.radius >= need);
    while !closed && radii.len() < BOOTSTRAP_ROUNDS {
        let need = round.required_radius().expect("open bootstrap has a bound");
        if !need.is_finite() {
            break;
        }
        current = current.with_radius(BOOTSTRAP_SLACK * need);
        round = Round::run(p, &current, hilbert_ready)?;
        radii.push(current.radius);
        closed = round.required_radius().is_none_or(|need| current.radius >= need);
    }

    let rho = current.radius;
    let k = round.k;
    let mut witnesses = vec![round.k_witness.clone()];
    let mut assumptions = vec![
        format!("constants are sampled on [0, {}] x B({rho}) x B({rho}) and inflated by {SAFETY_FACTOR}", p.t_end()),
        "finite-dimensional measure-of-noncompactness conditions are replaced by the Lipschitz constant of f"
            .to_string(),
    ];
    if p.completely_continuous() {
        assumptions.push("f is declared completely continuous".into());
    }

    let ball_check = |bound: Option<f64>, name: &str| Check {
        hypothesis: "a_priori_ball".into(),
        passed: bound.is_some_and(|b| rho >= 2.0 * b),
        detail: match bound {
            Some(b) => format!("sampling radius {rho} against 2·{name} = {}", 2.0 * b),
            None => format!("{name} unavailable"),
        },
    };
    let cc_check = Check {
        hypothesis: "completely_continuous".into(),
        passed: p.completely_continuous(),
        detail: "declared on the problem, not sampled".into(),
    };
    let k_check = Check {
        hypothesis: "phi_inverse_lipschitz".into(),
        passed: k.is_finite() && k > 0.0,
        detail: format!("k = {k}"),
    };

    // Linear growth chain.
    let growth_check = match &round.growth {
        Some(g) => {
            witnesses.push(g.witness.clone());
            Check {
                hypothesis: "linear_growth".into(),
                passed: true,
                detail: format!("|f| <= c0 + c1|y| with c0 = {}, c1 = {}", g.c0, g.c1),
            }
        }
        None => Check {
            hypothesis: "linear_growth".into(),
            passed: false,
            detail: format!(
                "c0 exceeds {GROWTH_C0_CAP:e} for every c1 in [0, 4]; |f| grows with |x| or faster than linearly in |y|"
            ),
        },
    };
    let r1 = round.gronwall.map(|g| g.1);
    let (k1_banach, k1_source) = match p.f().condensing_hint() {
        Some(k1) => (k1, "declared"),
        None => {
            let (k1, w) = estimate_f_lipschitz(p.f(), p.t_end(), p.dim(), p.norm(), &current)?;
            witnesses.push(w);
            (k1, "sampled Lipschitz constant in (x, y)")
        }
    };
    let (banach_factor, banach_pass) = condensing_check(k, k1_banach, CondensingMode::Banach);
    let banach_condensing = Check {
        hypothesis: "condensing_2kk1_below_1".into(),
        passed: banach_pass,
        detail: format!("2·k·k1 = {banach_factor} with k1 = {k1_banach} ({k1_source})"),
    };

    let mut verdict = vec![
        chain(
            Theorem::GrowthCompact,
            vec![k_check.clone(), cc_check.clone(), growth_check.clone(), ball_check(r1, "R1")],
        ),
        chain(
            Theorem::GrowthCondensing,
            vec![k_check.clone(), growth_check, banach_condensing, ball_check(r1, "R1")],
        ),
    ];

    // Inner-product chain.
    let mut hilbert_report = None;
    let mut hilbert_k1 = None;
    let applicable = Check {
        hypothesis: "inner_product_setting".into(),
        passed: hilbert_ready,
        detail: match (euclidean, p.f().has_hilbert_h()) {
            (true, true) => "euclidean norm with weight h".into(),
            (false, _) => format!("norm is {}, not euclidean", p.norm().name()),
            (true, false) => "no weight h(t) supplied".into(),
        },
    };
    let y_free = Check {
        hypothesis: "f_independent_of_y".into(),
        passed: !p.f().depends_on_y(),
        detail: if p.f().depends_on_y() { "f depends on y".into() } else { "f = f(t, x)".into() },
    };
    if hilbert_ready {
        let rep = check_hilbert_conditions(p, &current)?;
        witnesses.extend(rep.witnesses.iter().cloned());
        let mono = Check {
            hypothesis: "phi_strictly_monotone".into(),
            passed: rep.monotone,
            detail: format!("min <phi(x) - phi(y), x - y> = {}", rep.monotonicity_margin),
        };
        let hg = Check {
            hypothesis: "inner_product_growth".into(),
            passed: rep.growth,
            detail: format!("min <f, x> + h - |f| = {}", rep.growth_margin),
        };
        let ball = ball_check(round.hilbert.map(|b| b.r), "R");
        let base = vec![k_check.clone(), applicable.clone(), mono, hg, ball];

        let mut compact = base.clone();
        compact.push(cc_check);
        verdict.push(chain(Theorem::HilbertCompact, compact));

        let mut condensing = base.clone();
        condensing.push(y_free.clone());
        condensing.push(match p.f().condensing_hint() {
            Some(k1) => {
                let (factor, pass) = condensing_check(k, k1, CondensingMode::Hilbert);
                Check {
                    hypothesis: "condensing_kk1_below_1".into(),
                    passed: pass,
                    detail: format!("k·k1 = {factor} with declared k1 = {k1}"),
                }
            }
            None => Check {
                hypothesis: "condensing_kk1_below_1".into(),
                passed: false,
                detail: "no condensing constant declared".into(),
            },
        });
        verdict.push(chain(Theorem::HilbertCondensing, condensing));

        let mut lipschitz = base;
        lipschitz.push(y_free);
        let (k1, w) = estimate_f_lipschitz(p.f(), p.t_end(), p.dim(), p.norm(), &current)?;
        witnesses.push(w);
        let (factor, pass) = condensing_check(k, k1, CondensingMode::Hilbert);
        lipschitz.push(Check {
            hypothesis: "lipschitz_kk1_below_1".into(),
            passed: pass,
            detail: format!("k·k1 = {factor} with sampled k1 = {k1}"),
        });
        hilbert_k1 = Some((k1, factor));
        verdict.push(chain(Theorem::HilbertLipschitz, lipschitz));
        hilbert_report = Some(rep);
    } else {
        for t in [Theorem::HilbertCompact, Theorem::HilbertCondensing, Theorem::HilbertLipschitz] {
            verdict.push(chain(t, vec![applicable.clone()]));
        }
    }

    let order = if hilbert_ready { Theorem::HILBERT_ORDER } else { Theorem::ORDER };
    verdict.sort_by_key(|v| order.iter().position(|&t| t == v.theorem));
    let theorem = verdict.iter().find(|v| v.passed).map_or(Theorem::None, |v| v.theorem);
    let (k1, condensing_factor) = match theorem {
        Theorem::HilbertLipschitz => (hilbert_k1.map(|x| x.0), hilbert_k1.map(|x| x.1)),
        Theorem::HilbertCondensing => {
            let k1 = p.f().condensing_hint();
            (k1, k1.map(|k1| condensing_check(k, k1, CondensingMode::Hilbert).0))
        }
        Theorem::HilbertCompact => (None, None),
        _ => (Some(k1_banach), Some(banach_factor)),
    };
    let failures = if theorem == Theorem::None {
        verdict
            .iter()
            .flat_map(|v| v.failed().map(move |c| format!("{}: {}: {}", v.theorem.name(), c.hypothesis, c.detail)))
            .collect()
    } else {
        vec![]
    };

    Ok(Certificate {
        theorem,
        evidence: EVIDENCE_LABEL.into(),
        k,
        c0: round.growth.as_ref().map(|g| g.c0),
        c1: round.growth.as_ref().map(|g| g.c1),
        k1,
        beta: round.gronwall.map(|g| g.0),
        r1,
        l: round.hilbert.map(|b| b.l),
        r: round.hilbert.map(|b| b.r),
        condensing_factor,
        verdict,
        failures,
        assumptions,
        hilbert: hilbert_report,
        sampling_report: SamplingReport {
            plan: *plan,
            radii,
            final_radius: rho,
            bootstrap_closed: closed,
            t_interval: [0.0, p.t_end()],
            samples_per_estimator: plan.samples,
            witnesses,
        },
    })
}

fn chain(theorem: Theorem, checks: Vec<Check>) -> Verdict {
    Verdict { theorem, passed: checks.iter().all(|c| c.passed), checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::PhiMap;
    use crate::rhs::RhsFunction;
    use approx::assert_relative_eq;

    fn problem(f: RhsFunction, norm: VectorNorm) -> Problem {
        Problem::new(1.0, 1, PhiMap::identity(), f, norm).unwrap()
    }

    #[test]
    fn zero_forcing_gets_the_growth_certificate() {
        let c = build_certificate(&problem(RhsFunction::zero(), VectorNorm::Euclidean), &Default::default()).unwrap();
        assert_eq!(c.theorem, Theorem::GrowthCompact);
        assert_eq!((c.c0, c.c1, c.beta, c.r1), (Some(0.0), Some(0.0), Some(0.0), Some(0.0)));
        assert_relative_eq!(c.k, 1.1, max_relative = 1e-12);
        assert_eq!(c.sampling_report.radii, vec![1.0]);
        assert!(c.failures.is_empty());
        assert_eq!(c.evidence, "numerical evidence");
    }

    #[test]
    fn cosine_plus_damping_freezes_at_seed_zero() {
        let f = RhsFunction::new("cos x + 0.2y", true, |_, x, y, o| o[0] = x[0].cos() + 0.2 * y[0]);
        let c = build_certificate(&problem(f, VectorNorm::Euclidean), &Default::default()).unwrap();
        assert_eq!(c.theorem, Theorem::GrowthCompact);
        let (c0, c1, beta) = (c.c0.unwrap(), c.c1.unwrap(), c.beta.unwrap());
        assert_eq!(c1, 0.25);
        assert!(c0 <= 1.0 && c0 > 0.999, "{c0}");
        assert_relative_eq!(beta, 1.1 * c0 * (1.1f64 * 0.25).exp(), max_relative = 1e-15);
        assert_eq!(c.r1, Some(beta));
        assert!(c.sampling_report.bootstrap_closed);
        assert!(c.sampling_report.final_radius >= 2.0 * beta);
        println!("{}", c.to_json());
    }

    #[test]
    fn lipschitz_inner_product_chain_is_available() {
        let f = RhsFunction::sin(0.3).with_hilbert_h(|_| 1.0);
        let c = build_certificate(&problem(f, VectorNorm::Euclidean), &Default::default()).unwrap();
        let v = c.verdict_for(Theorem::HilbertLipschitz).unwrap();
        assert!(v.passed, "{v:?}");
        assert_eq!(c.theorem, Theorem::HilbertLipschitz);
        assert_relative_eq!(c.l.unwrap(), 1.1, max_relative = 1e-9);
        assert_relative_eq!(c.k1.unwrap(), 0.33, max_relative = 1e-3);
        assert!(c.condensing_factor.unwrap() < 1.0);
        assert_eq!(c.verdict[0].theorem, Theorem::HilbertLipschitz);
        // the growth chain is still evaluated
        assert!(c.verdict_for(Theorem::GrowthCompact).unwrap().passed);

        // without h the same f falls back to the growth theorem
        let p = problem(RhsFunction::sin(0.3), VectorNorm::Euclidean);
        let c = build_certificate(&p, &Default::default()).unwrap();
        assert_eq!(c.theorem, Theorem::GrowthCompact);
        let p = p.with_completely_continuous(false);
        let c = build_certificate(&p, &Default::default()).unwrap();
        assert_eq!(c.theorem, Theorem::GrowthCondensing);
        assert!(c.condensing_factor.unwrap() < 1.0);
    }

    #[test]
    fn superlinear_growth_gives_no_certificate() {
        let f = RhsFunction::new("y^2", true, |_, _, y, o| o[0] = y[0] * y[0]);
        let c = build_certificate(&problem(f, VectorNorm::Euclidean), &Default::default()).unwrap();
        assert_eq!(c.theorem, Theorem::None);
        assert!(c.failures.iter().any(|s| s.contains("linear_growth")), "{:?}", c.failures);
        assert!(c.beta.is_none());
    }

    #[test]
    fn certificates_are_deterministic() {
        let f = RhsFunction::new("mix", true, |t, x, y, o| o[0] = (t + x[0]).sin() + 0.1 * y[0].tanh());
        let p = problem(f, VectorNorm::Sup);
        let plan = SamplingPlan { seed: 42, ..Default::default() };
        let a = build_certificate(&p, &plan).unwrap().to_json();
        let b = build_certificate(&p, &plan).unwrap().to_json();
        assert_eq!(a, b);
        let other = build_certificate(&p, &SamplingPlan { seed: 43, ..plan }).unwrap().to_json();
        assert_ne!(a, other);
    }

    #[test]
    fn growing_bound_enlarges_the_ball() {
        let p = Problem::new(2.0, 1, PhiMap::identity(), RhsFunction::sin(1.0), VectorNorm::Euclidean).unwrap();
        let c = build_certificate(&p, &Default::default()).unwrap();
        let r1 = c.r1.unwrap();
        assert!(r1 > 2.0);
        assert!(c.sampling_report.radii.len() >= 2);
        assert!(c.sampling_report.bootstrap_closed);
        assert!(c.sampling_report.final_radius >= 2.0 * r1);
    }
}
