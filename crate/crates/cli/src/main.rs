use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phibvp_cli::{alpha_command, certify_file, run_all, solve_file, verify_file, worst_code, Outcome, Overrides};

#[derive(Parser)]
#[command(name = "phibvp", version, about = "Solve and certify φ-Laplacian boundary value problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve problem files; writes <stem>.csv and <stem>.diagnostics.json
    Solve {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        lambda_steps: Option<usize>,
        /// Directory for the outputs
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Recompute the verification report of a saved solution table instead of solving
        #[arg(long, value_name = "CSV")]
        verify: Option<PathBuf>,
    },
    /// Estimate the existence-theorem constants; prints the certificate as JSON
    Certify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Write <stem>.certificate.json here instead of printing
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Measure-of-noncompactness calculus
    Alpha {
        #[command(subcommand)]
        action: AlphaAction,
    },
}

#[derive(Args)]
struct Common {
    /// Sampling seed for the certificate
    #[arg(long)]
    seed: Option<u64>,
    /// Number of files processed concurrently
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum AlphaAction {
    /// Evaluate an expression such as '(scale 3 (atom "B" 2))'
    Eval {
        expr: String,
        #[arg(long)]
        json: bool,
    },
}

fn report(outcomes: &[Outcome]) -> ExitCode {
    for o in outcomes {
        print!("{}", o.stdout);
        if !o.message.is_empty() {
            eprintln!("{}", o.message);
        }
    }
    ExitCode::from(worst_code(outcomes) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcomes = match cli.command {
        Command::Solve { files, common, grid_n, tol, theta, lambda_steps, out_dir, verify } => {
            let ov = Overrides { grid_n, tol, theta, lambda_steps, seed: common.seed };
            match verify {
                Some(csv) if files.len() == 1 => vec![verify_file(&files[0], &ov, &csv)],
                Some(_) => {
                    eprintln!("error: --verify takes exactly one problem file");
                    return ExitCode::from(phibvp_cli::EXIT_INPUT as u8);
                }
                None => {
                    if let Err(e) = std::fs::create_dir_all(&out_dir) {
                        eprintln!("error: {}: {e}", out_dir.display());
                        return ExitCode::from(phibvp_cli::EXIT_INPUT as u8);
                    }
                    run_all(&files, common.jobs, |f| solve_file(f, &ov, &out_dir))
                }
            }
        }
        Command::Certify { files, common, out_dir } => {
            let ov = Overrides { seed: common.seed, ..Default::default() };
            if let Some(dir) = &out_dir {
                if let Err(e) = std::fs::create_dir_all(dir) {
                    eprintln!("error: {}: {e}", dir.display());
                    return ExitCode::from(phibvp_cli::EXIT_INPUT as u8);
                }
            }
            run_all(&files, common.jobs, |f| certify_file(f, &ov, out_dir.as_deref()))
        }
        Command::Alpha { action: AlphaAction::Eval { expr, json } } => vec![alpha_command(&expr, json)],
    };
    report(&outcomes)
}
