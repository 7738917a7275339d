//! The problem-definition file: `key: value` lines, with `solver:` and
//! `sampling:` blocks nested by indentation. `#` starts a comment.
//!
//! ```text
//! T: 1
//! d: 1
//! norm: euclidean
//! phi: cubic
//! f: cos(x) + 0.2*y
//! h: 1
//! grid_n: 81
//! solver:
//!   tol: 1e-10
//!   lambda_steps: 4
//! sampling:
//!   seed: 7
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use phibvp::certify::SamplingPlan;
use phibvp::solver::SolveOptions;
use phibvp::{Grid, PhiMap, Problem, RhsFunction, VectorNorm};

use crate::expr::Expr;

pub const DEFAULT_GRID_N: usize = 81;

const TOP_KEYS: &[&str] = &["T", "d", "norm", "phi", "f", "h", "grid_n", "completely_continuous", "condensing_k1"];
const SOLVER_KEYS: &[&str] = &["theta", "tol", "max_iters", "lambda_steps", "residual_tol"];
const SAMPLING_KEYS: &[&str] = &["radius", "samples", "seed", "t_nodes"];

/// A problem in a file, with a 1-based line number when one applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for FileError {}

fn at(line: usize, message: impl Into<String>) -> FileError {
    FileError { line: Some(line), message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RhsSpec {
    Registry { name: String, params: Vec<f64> },
    /// One expression per component, or one shared by all.
    Expressions { source: String, components: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub t_end: f64,
    pub dim: usize,
    pub norm: VectorNorm,
    pub phi_name: String,
    pub phi_params: Vec<f64>,
    pub f: RhsSpec,
    pub h: Option<(String, Expr)>,
    pub grid_n: usize,
    pub completely_continuous: bool,
    pub condensing_k1: Option<f64>,
    pub solver: SolveOptions,
    pub sampling: SamplingPlan,
    lines: BTreeMap<String, usize>,
}

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

type Section = BTreeMap<String, Entry>;
/// Named blocks with the line of their header.
type Blocks = BTreeMap<String, (usize, Section)>;

fn split_sections(text: &str) -> Result<(Section, Blocks), FileError> {
    let mut top = Section::new();
    let mut blocks = Blocks::new();
    let mut open: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim_end();
        if content.trim().is_empty() {
            continue;
        }
        if content.starts_with('\t') {
            return Err(at(line, "indent with spaces, not tabs"));
        }
        let indented = content.starts_with(' ');
        let (key, value) = content
            .trim()
            .split_once(':')
            .ok_or_else(|| at(line, format!("expected 'key: value', got '{}'", content.trim())))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            return Err(at(line, "missing key before ':'"));
        }
        if indented {
            let block = open.as_ref().ok_or_else(|| at(line, format!("'{key}' is indented outside a block")))?;
            let section = &mut blocks.get_mut(block).expect("opened").1;
            if section.insert(key.clone(), Entry { value, line }).is_some() {
                return Err(at(line, format!("duplicate key '{block}.{key}'")));
            }
        } else if value.is_empty() {
            if !matches!(key.as_str(), "solver" | "sampling") {
                return Err(at(line, format!("'{key}' needs a value")));
            }
            if blocks.insert(key.clone(), (line, Section::new())).is_some() {
                return Err(at(line, format!("duplicate block '{key}'")));
            }
            open = Some(key);
        } else {
            open = None;
            if top.insert(key.clone(), Entry { value, line }).is_some() {
                return Err(at(line, format!("duplicate key '{key}'")));
            }
        }
    }
    Ok((top, blocks))
}

fn check_keys(section: &Section, allowed: &[&str], prefix: &str) -> Result<(), FileError> {
    for (k, e) in section {
        if !allowed.contains(&k.as_str()) {
            return Err(at(e.line, format!("unknown key '{prefix}{k}'; expected one of {}", allowed.join(", "))));
        }
    }
    Ok(())
}

fn number<T: std::str::FromStr>(e: &Entry, key: &str, what: &str) -> Result<T, FileError> {
    e.value.parse().map_err(|_| at(e.line, format!("{key}: expected {what}, got '{}'", e.value)))
}

fn real(e: &Entry, key: &str) -> Result<f64, FileError> {
    let v: f64 = number(e, key, "a number")?;
    if !v.is_finite() {
        return Err(at(e.line, format!("{key}: must be finite, got {}", e.value)));
    }
    Ok(v)
}

fn boolean(e: &Entry, key: &str) -> Result<bool, FileError> {
    match e.value.as_str() {
        "true" | "yes" => Ok(true),
        "false" | "no" => Ok(false),
        other => Err(at(e.line, format!("{key}: expected true or false, got '{other}'"))),
    }
}

/// `name p1 p2 …` when every parameter is a number.
fn registry_form(value: &str) -> Option<(String, Vec<f64>)> {
    let mut words = value.split_whitespace();
    let name = words.next()?;
    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    let params: Option<Vec<f64>> = words.map(|w| w.parse().ok()).collect();
    Some((name.to_string(), params?))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile, FileError> {
        let (top, blocks) = split_sections(text)?;
        check_keys(&top, TOP_KEYS, "")?;
        let required = |k: &str| {
            top.get(k).ok_or_else(|| FileError { line: None, message: format!("missing required key '{k}'") })
        };
        let mut lines: BTreeMap<String, usize> = top.iter().map(|(k, e)| (k.clone(), e.line)).collect();

        let t_entry = required("T")?;
        let t_end = real(t_entry, "T")?;
        if t_end <= 0.0 {
            return Err(at(t_entry.line, format!("T: must be positive, got {}", t_entry.value)));
        }
        let d_entry = required("d")?;
        let dim: usize = number(d_entry, "d", "a positive integer")?;
        if dim == 0 {
            return Err(at(d_entry.line, "d: must be at least 1"));
        }
        let norm = match top.get("norm") {
            None => VectorNorm::default(),
            Some(e) => VectorNorm::parse(&e.value)
                .ok_or_else(|| at(e.line, format!("norm: unknown norm '{}'; use euclidean, sup or one", e.value)))?,
        };

        let phi_entry = required("phi")?;
        let (phi_name, phi_params) = registry_form(&phi_entry.value)
            .filter(|(n, _)| PhiMap::REGISTRY.contains(&n.as_str()))
            .ok_or_else(|| {
                at(
                    phi_entry.line,
                    format!("phi: expected one of {} with numeric parameters, got '{}'", PhiMap::REGISTRY.join(", "), phi_entry.value),
                )
            })?;

        let f_entry = required("f")?;
        let f = match registry_form(&f_entry.value).filter(|(n, _)| RhsFunction::REGISTRY.contains(&n.as_str())) {
            Some((name, params)) => RhsSpec::Registry { name, params },
            None => {
                let mut components = vec![];
                for (j, part) in f_entry.value.split(';').enumerate() {
                    let e = Expr::parse(part.trim())
                        .map_err(|err| at(f_entry.line, format!("f: component {j}: {err}")))?;
                    if let Some(i) = e.max_index() {
                        if i >= dim {
                            return Err(at(f_entry.line, format!("f: component index {i} is out of range for d = {dim}")));
                        }
                    }
                    components.push(e);
                }
                if components.len() != 1 && components.len() != dim {
                    return Err(at(
                        f_entry.line,
                        format!("f: has {} components but d = {dim}; give 1 or {dim}", components.len()),
                    ));
                }
                RhsSpec::Expressions { source: f_entry.value.clone(), components }
            }
        };

        let h = match top.get("h") {
            None => None,
            Some(e) => {
                let expr = Expr::parse(&e.value).map_err(|err| at(e.line, format!("h: {err}")))?;
                if expr.uses_state() {
                    return Err(at(e.line, "h: may depend on t only"));
                }
                Some((e.value.clone(), expr))
            }
        };

        let grid_n = match top.get("grid_n") {
            None => DEFAULT_GRID_N,
            Some(e) => {
                let n: usize = number(e, "grid_n", "an integer")?;
                if n < 3 {
                    return Err(at(e.line, format!("grid_n: need at least 3 nodes, got {n}")));
                }
                n
            }
        };
        let completely_continuous = top.get("completely_continuous").map(|e| boolean(e, "completely_continuous")).transpose()?.unwrap_or(true);
        let condensing_k1 = match top.get("condensing_k1") {
            None => None,
            Some(e) => {
                let k1 = real(e, "condensing_k1")?;
                if k1 <= 0.0 {
                    return Err(at(e.line, format!("condensing_k1: must be positive, got {k1}")));
                }
                Some(k1)
            }
        };

        let mut solver = SolveOptions::default();
        if let Some((line, s)) = blocks.get("solver") {
            check_keys(s, SOLVER_KEYS, "solver.")?;
            lines.insert("solver".into(), *line);
            for (k, e) in s {
                let key = format!("solver.{k}");
                match k.as_str() {
                    "theta" => solver.theta = real(e, &key)?,
                    "tol" => solver.tol = real(e, &key)?,
                    "residual_tol" => solver.residual_tol = real(e, &key)?,
                    "max_iters" => solver.max_iters = number(e, &key, "an integer")?,
                    _ => solver.lambda_steps = number(e, &key, "an integer")?,
                }
                lines.insert(key, e.line);
            }
            solver.validate().map_err(|err| at(*line, format!("solver: {err}")))?;
        }

        let mut sampling = SamplingPlan::default();
        if let Some((line, s)) = blocks.get("sampling") {
            check_keys(s, SAMPLING_KEYS, "sampling.")?;
            lines.insert("sampling".into(), *line);
            for (k, e) in s {
                let key = format!("sampling.{k}");
                match k.as_str() {
                    "radius" => sampling.radius = real(e, &key)?,
                    "samples" => sampling.samples = number(e, &key, "an integer")?,
                    "seed" => sampling.seed = number(e, &key, "an unsigned integer")?,
                    _ => sampling.t_nodes = number(e, &key, "an integer")?,
                }
                lines.insert(key, e.line);
            }
            sampling.validate().map_err(|err| at(*line, format!("sampling: {err}")))?;
        }

        Ok(ProblemFile {
            t_end,
            dim,
            norm,
            phi_name,
            phi_params,
            f,
            h,
            grid_n,
            completely_continuous,
            condensing_k1,
            solver,
            sampling,
            lines,
        })
    }

    /// Line of `key` (dotted for block entries), if it was present.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }

    fn err_at(&self, key: &str, message: impl fmt::Display) -> FileError {
        FileError { line: self.line_of(key), message: format!("{key}: {message}") }
    }

    pub fn f_source(&self) -> String {
        match &self.f {
            RhsSpec::Registry { name, params } => {
                let mut s = name.clone();
                for p in params {
                    s.push_str(&format!(" {p}"));
                }
                s
            }
            RhsSpec::Expressions { source, .. } => source.clone(),
        }
    }

    pub fn phi(&self) -> Result<PhiMap, FileError> {
        PhiMap::from_registry(&self.phi_name, &self.phi_params).map_err(|e| self.err_at("phi", e))
    }

    pub fn rhs(&self) -> Result<RhsFunction, FileError> {
        let mut f = match &self.f {
            RhsSpec::Registry { name, params } => {
                RhsFunction::from_registry(name, params, self.dim, self.norm).map_err(|e| self.err_at("f", e))?
            }
            RhsSpec::Expressions { source, components } => {
                let comps = Arc::new(components.clone());
                let uses_y = comps.iter().any(Expr::uses_y);
                RhsFunction::new(source.clone(), uses_y, move |t, x, y, out| {
                    for (j, o) in out.iter_mut().enumerate() {
                        let e = if comps.len() == 1 { &comps[0] } else { &comps[j] };
                        *o = e.eval(t, x, y, j);
                    }
                })
            }
        };
        if let Some((_, h)) = &self.h {
            let h = h.clone();
            f = f.with_hilbert_h(move |t| h.eval(t, &[], &[], 0));
        }
        if let Some(k1) = self.condensing_k1 {
            f = f.with_condensing_hint(k1);
        }
        Ok(f)
    }

    pub fn problem(&self) -> Result<Problem, FileError> {
        let phi = self.phi()?;
        let f = self.rhs()?;
        let p = Problem::new(self.t_end, self.dim, phi, f, self.norm).map_err(|e| FileError {
            line: None,
            message: e.to_string(),
        })?;
        Ok(p.with_completely_continuous(self.completely_continuous))
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.t_end, self.grid_n).expect("validated on parse")
    }
}
