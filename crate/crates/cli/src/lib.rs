//! Batch front end for `phibvp`: problem files in, solution tables,
//! diagnostics and existence certificates out.
//!
//! Exit codes: [`EXIT_OK`], [`EXIT_INPUT`] for unreadable or invalid input,
//! [`EXIT_NOT_SOLVED`] when the solver does not converge or the solution fails
//! verification, and [`EXIT_NO_CERTIFICATE`] when no existence theorem applies.
//! Runs over several files report the largest code.

pub mod expr;
pub mod output;
pub mod problem_file;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use phibvp::alpha::{alpha_eval, parse_expr, AlphaValue, DerivationTrace};
use phibvp::certify::{build_certificate, to_json_17, Certificate, SamplingPlan};
use phibvp::solver::{continuation_solve, verify_solution, SolveOptions, VerifyReport};

use crate::problem_file::ProblemFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_SOLVED: i32 = 2;
pub const EXIT_NO_CERTIFICATE: i32 = 3;

/// Overrides applied on top of the values in a problem file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid_n: Option<usize>,
    pub tol: Option<f64>,
    pub theta: Option<f64>,
    pub lambda_steps: Option<usize>,
    pub seed: Option<u64>,
}

/// The result of one command on one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    /// One-line summary or error, for stderr.
    pub message: String,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    fn input_error(path: &Path, err: impl std::fmt::Display) -> Outcome {
        Outcome {
            code: EXIT_INPUT,
            stdout: String::new(),
            message: format!("error: {}: {err}", path.display()),
            written: vec![],
        }
    }
}

fn load(path: &Path, ov: &Overrides) -> Result<ProblemFile, Outcome> {
    let text = fs::read_to_string(path).map_err(|e| Outcome::input_error(path, e))?;
    let mut pf = ProblemFile::parse(&text).map_err(|e| Outcome::input_error(path, e))?;
    if let Some(n) = ov.grid_n {
        if n < 3 {
            return Err(Outcome::input_error(path, format!("--grid-n: need at least 3 nodes, got {n}")));
        }
        pf.grid_n = n;
    }
    pf.solver.tol = ov.tol.unwrap_or(pf.solver.tol);
    pf.solver.theta = ov.theta.unwrap_or(pf.solver.theta);
    pf.solver.lambda_steps = ov.lambda_steps.unwrap_or(pf.solver.lambda_steps);
    pf.sampling.seed = ov.seed.unwrap_or(pf.sampling.seed);
    pf.solver.validate().map_err(|e| Outcome::input_error(path, e))?;
    Ok(pf)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "problem".into(), |s| s.to_string_lossy().into_owned())
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), String> {
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    written.push(path);
    Ok(())
}

#[derive(Debug, Serialize)]
struct ProblemSummary {
    #[serde(rename = "T")]
    t_end: f64,
    d: usize,
    norm: &'static str,
    phi: String,
    f: String,
    h: Option<String>,
    grid_n: usize,
    completely_continuous: bool,
}

impl ProblemSummary {
    fn of(pf: &ProblemFile, phi: &str) -> Self {
        ProblemSummary {
            t_end: pf.t_end,
            d: pf.dim,
            norm: pf.norm.name(),
            phi: phi.to_string(),
            f: pf.f_source(),
            h: pf.h.as_ref().map(|h| h.0.clone()),
            grid_n: pf.grid_n,
            completely_continuous: pf.completely_continuous,
        }
    }
}

/// Everything `solve` learns about a run.
#[derive(Debug, Serialize)]
pub struct Diagnostics {
    input: String,
    problem: ProblemSummary,
    options: SolveOptions,
    sampling: SamplingPlan,
    pub converged: bool,
    pub iterations_per_lambda: Vec<usize>,
    /// `‖u_{k+1} − u_k‖₁` for every iteration of every stage.
    pub history: Vec<f64>,
    pub final_gap: f64,
    pub final_residual: f64,
    pub failed_lambda: Option<f64>,
    pub final_theta: f64,
    pub verify: Option<VerifyReport>,
    pub certificate: Option<Certificate>,
}

/// Solves one problem file. Writes `<stem>.csv` and `<stem>.diagnostics.json`
/// into `out_dir`.
pub fn solve_file(path: &Path, ov: &Overrides, out_dir: &Path) -> Outcome {
    let pf = match load(path, ov) {
        Ok(pf) => pf,
        Err(o) => return o,
    };
    let p = match pf.problem() {
        Ok(p) => p,
        Err(e) => return Outcome::input_error(path, e),
    };
    let fail = |msg: String| Outcome { code: EXIT_NOT_SOLVED, stdout: String::new(), message: msg, written: vec![] };
    let result = match continuation_solve(&p, pf.grid(), &pf.solver) {
        Ok(r) => r,
        Err(e) => return fail(format!("error: {}: solver failed: {e}", path.display())),
    };
    let verify = verify_solution(&p, &result.trajectory, &pf.solver).ok();
    let certificate = build_certificate(&p, &pf.sampling).ok();
    let diagnostics = Diagnostics {
        input: path.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
        problem: ProblemSummary::of(&pf, p.phi().name()),
        options: pf.solver,
        sampling: pf.sampling,
        converged: result.converged,
        iterations_per_lambda: result.iterations_per_lambda.clone(),
        history: result.history.clone(),
        final_gap: result.final_gap,
        final_residual: result.final_residual,
        failed_lambda: result.failed_lambda,
        final_theta: result.final_theta,
        verify,
        certificate,
    };

    let mut written = vec![];
    let base = stem(path);
    let csv = match output::trajectory_csv(&result.trajectory) {
        Ok(s) => s,
        Err(e) => return fail(format!("error: {}: {e}", path.display())),
    };
    if let Err(e) = write(out_dir.join(format!("{base}.csv")), &csv, &mut written)
        .and_then(|_| write(out_dir.join(format!("{base}.diagnostics.json")), &to_json_17(&diagnostics), &mut written))
    {
        return Outcome::input_error(path, e);
    }

    let verified = diagnostics.verify.as_ref().is_some_and(|v| v.passed);
    let (code, status) = match (result.converged, verified) {
        (true, true) => (EXIT_OK, "converged".to_string()),
        (true, false) => (EXIT_NOT_SOLVED, "converged but failed verification".to_string()),
        (false, _) => (
            EXIT_NOT_SOLVED,
            format!("did not converge at lambda = {}", result.failed_lambda.unwrap_or(1.0)),
        ),
    };
    Outcome {
        code,
        stdout: String::new(),
        message: format!(
            "{}: {status}; {} iterations, residual {:e}",
            path.display(),
            result.iterations_per_lambda.iter().sum::<usize>(),
            result.final_residual
        ),
        written,
    }
}

/// Re-reads a solution table written by [`solve_file`] and recomputes its
/// verification report, printed as JSON.
pub fn verify_file(path: &Path, ov: &Overrides, csv_path: &Path) -> Outcome {
    let pf = match load(path, ov) {
        Ok(pf) => pf,
        Err(o) => return o,
    };
    let p = match pf.problem() {
        Ok(p) => p,
        Err(e) => return Outcome::input_error(path, e),
    };
    let tr = match fs::read_to_string(csv_path)
        .map_err(|e| e.to_string())
        .and_then(|text| output::read_trajectory_csv(&text, pf.t_end, pf.dim))
    {
        Ok(tr) => tr,
        Err(e) => return Outcome::input_error(csv_path, e),
    };
    match verify_solution(&p, &tr, &pf.solver) {
        Ok(report) => Outcome {
            code: if report.passed { EXIT_OK } else { EXIT_NOT_SOLVED },
            stdout: to_json_17(&report) + "\n",
            message: format!(
                "{}: verification {} (residual {:e})",
                csv_path.display(),
                if report.passed { "passed" } else { "failed" },
                report.residual
            ),
            written: vec![],
        },
        Err(e) => Outcome {
            code: EXIT_NOT_SOLVED,
            stdout: String::new(),
            message: format!("error: {}: {e}", csv_path.display()),
            written: vec![],
        },
    }
}

/// Builds the existence certificate for one problem file. The JSON goes to
/// `<stem>.certificate.json` in `out_dir`, or to stdout without one.
pub fn certify_file(path: &Path, ov: &Overrides, out_dir: Option<&Path>) -> Outcome {
    let pf = match load(path, ov) {
        Ok(pf) => pf,
        Err(o) => return o,
    };
    let p = match pf.problem() {
        Ok(p) => p,
        Err(e) => return Outcome::input_error(path, e),
    };
    let cert = match build_certificate(&p, &pf.sampling) {
        Ok(c) => c,
        Err(e) => {
            return Outcome {
                code: EXIT_NO_CERTIFICATE,
                stdout: String::new(),
                message: format!("error: {}: {e}", path.display()),
                written: vec![],
            }
        }
    };
    let json = cert.to_json() + "\n";
    let mut written = vec![];
    let stdout = match out_dir {
        Some(dir) => {
            if let Err(e) = write(dir.join(format!("{}.certificate.json", stem(path))), &json, &mut written) {
                return Outcome::input_error(path, e);
            }
            String::new()
        }
        None => json,
    };
    let code = if cert.passed() { EXIT_OK } else { EXIT_NO_CERTIFICATE };
    let message = if cert.passed() {
        format!("{}: {} ({})", path.display(), cert.theorem.name(), cert.evidence)
    } else {
        format!("{}: no certificate; {} failed hypotheses", path.display(), cert.failures.len())
    };
    Outcome { code, stdout, message, written }
}

#[derive(Debug, Serialize)]
struct AlphaReport<'a> {
    expression: String,
    value: AlphaValue,
    trace: &'a DerivationTrace,
}

/// Evaluates an `α` expression; prints the value and its derivation.
pub fn alpha_command(src: &str, json: bool) -> Outcome {
    let result = parse_expr(src).and_then(|e| alpha_eval(&e).map(|(v, t)| (e, v, t)));
    let (expr, value, trace) = match result {
        Ok(r) => r,
        Err(e) => {
            return Outcome { code: EXIT_INPUT, stdout: String::new(), message: format!("error: {e}"), written: vec![] }
        }
    };
    let stdout = if json {
        to_json_17(&AlphaReport { expression: expr.to_string(), value, trace: &trace }) + "\n"
    } else {
        let value = match value {
            AlphaValue::Exact(v) => format!("{v} exact"),
            AlphaValue::UpperBound(v) => format!("<= {v} (upper bound)"),
            AlphaValue::Unknown => "unknown".into(),
        };
        format!("expression: {expr}\nvalue: {value}\ntrace:\n{trace}")
    };
    Outcome { code: EXIT_OK, stdout, message: String::new(), written: vec![] }
}

/// Runs `task` over `inputs` on up to `jobs` threads, keeping input order.
pub fn run_all<T: Sync>(inputs: &[T], jobs: usize, task: impl Fn(&T) -> Outcome + Sync) -> Vec<Outcome> {
    let jobs = jobs.clamp(1, inputs.len().max(1));
    if jobs == 1 {
        return inputs.iter().map(&task).collect();
    }
    let chunk = inputs.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = inputs
            .chunks(chunk)
            .map(|part| {
                let task = &task;
                s.spawn(move || part.iter().map(task).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn worst_code(outcomes: &[Outcome]) -> i32 {
    outcomes.iter().map(|o| o.code).max().unwrap_or(EXIT_OK)
}
