use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::estimate::{HilbertReport, Witness};
use super::sampling::SamplingPlan;

pub const EVIDENCE_LABEL: &str = "numerical evidence";

/// Existence results, named by the hypotheses they rest on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// `f` completely continuous with linear growth `‖f‖ ≤ c₀ + c₁‖y‖`.
    GrowthCompact,
    /// linear growth and `α(f(I×A×B)) ≤ k₁·max{α(A), α(B)}` with `2kk₁ < 1`.
    GrowthCondensing,
    /// `f` completely continuous with `‖f‖ ≤ ⟨f, x⟩ + h(t)`, φ strictly monotone.
    HilbertCompact,
    /// `f = f(t,x)` with `‖f‖ ≤ ⟨f, x⟩ + h(t)` and `α(f(I×S)) ≤ k₁α(S)`, `kk₁ < 1`.
    HilbertCondensing,
    /// `f = f(t,x)` with `‖f‖ ≤ ⟨f, x⟩ + h(t)` and `k₁`-Lipschitz in `x`, `kk₁ < 1`.
    HilbertLipschitz,
    None,
}

impl Theorem {
    /// Dispatch order when no inner-product data is given: weakest hypotheses first.
    pub const ORDER: [Theorem; 5] = [
        Theorem::GrowthCompact,
        Theorem::GrowthCondensing,
        Theorem::HilbertCompact,
        Theorem::HilbertCondensing,
        Theorem::HilbertLipschitz,
    ];

    /// Dispatch order for a euclidean problem carrying `h`: the inner-product
    /// chain first, and within it the theorems whose hypotheses are all sampled
    /// before those resting on declarations.
    pub const HILBERT_ORDER: [Theorem; 5] = [
        Theorem::HilbertLipschitz,
        Theorem::HilbertCondensing,
        Theorem::HilbertCompact,
        Theorem::GrowthCompact,
        Theorem::GrowthCondensing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::GrowthCompact => "growth_compact",
            Theorem::GrowthCondensing => "growth_condensing",
            Theorem::HilbertCompact => "hilbert_compact",
            Theorem::HilbertCondensing => "hilbert_condensing",
            Theorem::HilbertLipschitz => "hilbert_lipschitz",
            Theorem::None => "none",
        }
    }
}

/// Outcome of one sampled or declared hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub hypothesis: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem: Theorem,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub plan: SamplingPlan,
    /// Radius of the ball sampled in each bootstrap round.
    pub radii: Vec<f64>,
    pub final_radius: f64,
    /// Whether the last radius is at least twice every a-priori bound computed.
    pub bootstrap_closed: bool,
    pub t_interval: [f64; 2],
    pub samples_per_estimator: usize,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub theorem: Theorem,
    pub evidence: String,
    pub k: f64,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub k1: Option<f64>,
    pub beta: Option<f64>,
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub condensing_factor: Option<f64>,
    pub verdict: Vec<Verdict>,
    /// `"<theorem>: <hypothesis>: <detail>"` for every failed check, filled only
    /// when no theorem applies.
    pub failures: Vec<String>,
    pub assumptions: Vec<String>,
    pub hilbert: Option<HilbertReport>,
    pub sampling_report: SamplingReport,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.theorem != Theorem::None
    }

    pub fn verdict_for(&self, theorem: Theorem) -> Option<&Verdict> {
        self.verdict.iter().find(|v| v.theorem == theorem)
    }

    /// Pretty JSON with every number printed to 17 significant digits, so the
    /// output is a faithful and byte-stable record of the `f64` values.
    pub fn to_json(&self) -> String {
        to_json_17(self)
    }
}

/// Serializes with [`Digits17`].
pub fn to_json_17<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17::default());
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Pretty formatter that writes floats as `d.dddddddddddddddde±x`.
#[derive(Default)]
pub struct Digits17<'a>(PrettyFormatter<'a>);

impl<'a> Formatter for Digits17<'a> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}
