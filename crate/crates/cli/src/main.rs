use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ptqm_cli::commands::{self, Command};
use ptqm_cli::config::{BackendChoice, Overrides, RunConfig};
use ptqm_cli::EXIT_CONFIG;

#[derive(Parser)]
#[command(name = "ptqm", version, about = "Spectra, metrics and equivalence checks for PT-symmetric Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Compute eigenvalues (and eigenfunctions for the shooting backend).
    Spectrum(Common),
    /// Build the positive metric from the eigenbasis and check its invariants.
    Metric(Common),
    /// Build the equivalence bundle and verify its unitarity and similarity checks.
    Bundle(Common),
    /// Run every check: bundle, expectation-value equivalence and norm conservation.
    Verify(Common),
    /// Sweep a discretization parameter and report convergence.
    Converge(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides PTQM_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Treat convergence flags as failures.
    #[arg(long)]
    strict: bool,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Number of levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Oscillator-basis truncation.
    #[arg(long)]
    n_trunc: Option<usize>,
    #[arg(long, value_enum)]
    backend: Option<BackendChoice>,
    /// Verification tolerance.
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// Fixed step count for the shooting integrator.
    #[arg(long)]
    steps: Option<usize>,
    /// Convergence sweep, e.g. `n_trunc=10,20,40` or `steps=5,10,20`.
    #[arg(long)]
    sweep: Option<String>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            epsilon: self.epsilon,
            mu: self.mu,
            lambda: self.lambda,
            levels: self.levels,
            n_trunc: self.n_trunc,
            backend: self.backend,
            tol: self.tol,
            steps: self.steps,
            sweep: self.sweep.clone(),
            out: self.out.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Sub::Spectrum(c) => (Command::Spectrum, c),
        Sub::Metric(c) => (Command::Metric, c),
        Sub::Bundle(c) => (Command::Bundle, c),
        Sub::Verify(c) => (Command::Verify, c),
        Sub::Converge(c) => (Command::Converge, c),
    };
    let config = match RunConfig::resolve(common.config.as_deref(), &common.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match commands::run(command, &config, common.strict) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            for f in &outcome.failed {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
