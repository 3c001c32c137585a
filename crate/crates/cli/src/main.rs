//! Command-line front end for `affine-psd`.

mod commands;
mod error;
mod inputs;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::EXIT_USAGE;

#[derive(Parser, Debug)]
#[command(name = "affine-psd", version, about = "Affine processes on positive semidefinite matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a parameter set for admissibility and print the per-condition report.
    Validate(ValidateArgs),
    /// Solve the Riccati equations and write t, phi, psi, lambda_min(psi) as CSV.
    Riccati(RiccatiArgs),
    /// Evaluate the Laplace transform E_x[exp(-<u, X_t>)].
    Transform(TransformArgs),
    /// Simulate paths and write them as CSV or a JSON summary.
    Simulate(SimulateArgs),
    /// Compare Monte Carlo Laplace estimates with the Riccati solution.
    Compare(CompareArgs),
    /// Transform a parameter set to canonical form.
    Canonicalize(CanonicalizeArgs),
    /// Audit viability conditions of the regularised equation at boundary points.
    Audit(AuditArgs),
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Parameter file (JSON).
    pub params: PathBuf,
    /// Random rotations used for the inward-drift pair test.
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub atol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub max_step: f64,
}

#[derive(Args, Debug)]
pub struct RiccatiArgs {
    pub params: PathBuf,
    /// Initial value u: a JSON file or inline JSON.
    #[arg(long)]
    pub u: String,
    /// Horizon.
    #[arg(long)]
    pub t: f64,
    /// Number of equally spaced output times in (0, t].
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    /// Parameter file; not needed with --closed-form.
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub u: String,
    #[arg(long)]
    pub t: f64,
    /// Use the Wishart closed form instead of the Riccati solver, e.g. `wishart:2`.
    #[arg(long, value_name = "wishart:DELTA")]
    pub closed_form: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeArg {
    EulerProject,
    EulerRegularized,
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    /// Initial state: a JSON file or inline JSON.
    #[arg(long)]
    pub x0: String,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SchemeArg::EulerProject)]
    pub scheme: SchemeArg,
    /// Regularisation epsilon for euler-regularized.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Cutoff radius n for euler-regularized.
    #[arg(long, default_value_t = 1e6)]
    pub n_cut: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub params: PathBuf,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Horizon.
    #[arg(long)]
    pub t: f64,
    /// Comma-separated record times; defaults to the horizon only.
    #[arg(long, value_delimiter = ',')]
    pub record: Vec<f64>,
    /// JSON array of matrices u for Laplace estimates in the summary.
    #[arg(long)]
    pub u_list: Option<String>,
    /// Output path; `.csv` dumps paths, anything else writes a JSON summary.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    pub params: PathBuf,
    #[command(flatten)]
    pub sim: SimArgs,
    /// JSON array of matrices u.
    #[arg(long)]
    pub u_list: String,
    /// Comma-separated query times.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t_list: Vec<f64>,
    #[arg(long, default_value_t = affine_psd::mc_compare::DEFAULT_BIAS_BUDGET)]
    pub bias_budget: f64,
    /// Comma-separated step sizes for a convergence table.
    #[arg(long, value_delimiter = ',')]
    pub convergence: Vec<f64>,
    /// Seeds per row of the convergence table.
    #[arg(long, default_value_t = 5)]
    pub convergence_seeds: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CanonicalizeArgs {
    pub params: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    pub rank_tol: f64,
    /// Output parameter file; it carries the matrix g as `transform_g`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    pub params: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e6)]
    pub n_cut: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Riccati(a) => commands::riccati(a),
        Command::Transform(a) => commands::transform(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Compare(a) => commands::compare(a),
        Command::Canonicalize(a) => commands::canonicalize(a),
        Command::Audit(a) => commands::audit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
