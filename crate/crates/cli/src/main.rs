//! `eusim`: synthesize, verify, simulate and sweep Eulerian control
//! schedules.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 infeasible target,
//! 3 configuration error.

mod commands;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Failed(String),
}

impl From<eusim_core::Error> for CliError {
    fn from(e: eusim_core::Error) -> Self {
        use eusim_core::Error as E;
        match e {
            E::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            E::NotUnitary(_) | E::NonConvergent(_) | E::GeneratorMismatch { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("malformed JSON: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "eusim", version, about = "Eulerian bounded-control Hamiltonian simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Model, target, group and timing shared by the schedule-building commands.
#[derive(Args, Clone, Debug)]
pub struct Setup {
    /// `heisenberg<N>`, `honeycomb`, `open<N>[:axes[:seed]]` or an operator JSON file [default: heisenberg2]
    #[arg(long)]
    model: Option<String>,
    /// `dipolar`, `kitaev`, `xyz:<jx>,<jy>,<jz>`, a model preset or an operator JSON file [default: dipolar]
    #[arg(long)]
    target: Option<String>,
    /// Group preset; defaults by model (g1, g_odd, honeycomb, pauli2)
    #[arg(long)]
    group: Option<String>,
    /// bb, eulerian or symmetric
    #[arg(long, default_value = "eulerian")]
    mode: String,
    /// Ramp duration Δ [default: T̃/10]
    #[arg(long)]
    delta: Option<f64>,
    /// Simulated interval T̃ per cycle [default: 0.1/‖H‖]
    #[arg(long)]
    tsim: Option<f64>,
    /// sine2, triangle, constant, or a `t,f` CSV file
    #[arg(long, default_value = "sine2")]
    shape: String,
    /// Seed for bath operators and initial states
    #[arg(long)]
    seed: Option<u64>,
}

impl Setup {
    pub fn model(&self) -> &str {
        self.model.as_deref().unwrap_or("heisenberg2")
    }

    pub fn target(&self) -> &str {
        self.target.as_deref().unwrap_or("dipolar")
    }

    pub fn model_override(&self) -> Option<String> {
        self.model.clone()
    }

    pub fn target_override(&self) -> Option<String> {
        self.target.clone()
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Schedule JSON written by `synth`
    schedule: PathBuf,
    /// Residual tolerance [default: 1e-8]
    #[arg(long)]
    tol: Option<f64>,
    /// Overrides the model named in the schedule
    #[arg(long)]
    model: Option<String>,
    /// Overrides the target named in the schedule
    #[arg(long)]
    target: Option<String>,
    /// Shape CSV for schedules with tabulated ramps
    #[arg(long)]
    shape: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    setup: Setup,
    /// Simulate a schedule file instead of building one
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Shape CSV for schedule files with tabulated ramps
    #[arg(long)]
    shape_file: Option<String>,
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// infidelity or error (phase-aligned Frobenius distance)
    #[arg(long, default_value = "infidelity")]
    metric: String,
    /// Pass threshold on the final metric [default: 1e-3]
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SweepParam {
    Delta,
    Tsim,
    Cycle,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    setup: Setup,
    #[arg(long, value_enum, default_value = "cycle")]
    param: SweepParam,
    #[arg(long)]
    min: f64,
    #[arg(long)]
    max: f64,
    #[arg(long, default_value_t = 6)]
    points: usize,
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// CSV output [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for weights and build a schedule
    Synth {
        #[command(flatten)]
        setup: Setup,
        /// Weight residual tolerance [default: 1e-9]
        #[arg(long)]
        tol: Option<f64>,
        /// Schedule JSON output; embedded in the report when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a schedule's average Hamiltonian against its target
    Verify(VerifyArgs),
    /// Evolve a schedule and compare with the target propagator
    Simulate(SimulateArgs),
    /// Error-scaling sweep over Δ, T̃ or T_c, written as CSV
    Sweep(SweepArgs),
    /// List presets, or export a group closure (`<preset>`) or the honeycomb lattice (`lattice`)
    Models {
        name: Option<String>,
        /// Register size for group exports
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Synth { setup, tol, out } => commands::synth(&setup, tol, out.as_deref()),
        Command::Verify(a) => commands::verify(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Sweep(a) => {
            if a.cycles == 0 {
                return Err(CliError::Config("--cycles must be at least 1".into()));
            }
            commands::sweep(&a)
        }
        Command::Models { name, n, out } => commands::models(name.as_deref(), n, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let (code, kind, msg) = match e {
                CliError::Config(m) => (3, "configuration error", m),
                CliError::Infeasible(m) => (2, "infeasible", m),
                CliError::Failed(m) => (1, "failed", m),
            };
            eprintln!("eusim: {kind}: {msg}");
            ExitCode::from(code)
        }
    }
}
