//! `per-etd`: fixed points, training runs and sweeps on the Baird
//! counterexample (or any MDP given as text files), emitted as CSV.

mod commands;
mod config;
mod error;
mod setup;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Figure, Settings};
use error::CliError;
use setup::Setup;

#[derive(Debug, Parser)]
#[command(
    name = "per-etd",
    version,
    about = "Emphatic TD with periodic restarts: fixed points, runs and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form fixed point and theory constants.
    FixedPoint(Opts),
    /// Error curves for one or more algorithms.
    Run(Opts),
    /// Bias and variance of the final iterate across period lengths.
    SweepB(Opts),
    /// PER-ETD(λ) final errors and fixed-point loci over a λ grid.
    SweepLambda(Opts),
    /// Error curves keyed by policy mismatch ρ_max.
    SweepRho(Opts),
    /// Monte-Carlo mean and second moment of the empirical operator.
    Probe(Opts),
}

/// Flags shared by every subcommand. Each one overrides the config key
/// named in its help text.
#[derive(Debug, Args)]
struct Opts {
    /// Figure preset: 1a, 1b, 2, 3, 5, 6, 7, 8 or 9.
    #[arg(long)]
    figure: Option<Figure>,
    /// INI config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// [experiment] base_seed; trial k uses base_seed + k.
    #[arg(long)]
    base_seed: Option<String>,
    /// [experiment] jobs: cap on concurrently running trials.
    #[arg(long)]
    jobs: Option<String>,

    /// [mdp] preset: baird or file.
    #[arg(long)]
    preset: Option<String>,
    /// [mdp] target_solid.
    #[arg(long)]
    target_solid: Option<String>,
    /// [mdp] behavior_solid.
    #[arg(long)]
    behavior_solid: Option<String>,
    /// [mdp] mdp_file.
    #[arg(long)]
    mdp_file: Option<String>,
    /// [mdp] target_file.
    #[arg(long)]
    target_file: Option<String>,
    /// [mdp] behavior_file.
    #[arg(long)]
    behavior_file: Option<String>,
    /// [mdp] start: stationary or a state index.
    #[arg(long)]
    start: Option<String>,

    /// [features] preset: phi1, phi2, phi3 or tabular.
    #[arg(long)]
    features: Option<String>,
    /// [features] file: CSV feature matrix.
    #[arg(long)]
    features_file: Option<String>,

    /// [algo] algo: comma list of td0, etd0, etd-lambda, per-etd0, per-etd-lambda.
    #[arg(long)]
    algo: Option<String>,
    /// [algo] b: period length(s), comma separated.
    #[arg(long)]
    b: Option<String>,
    /// [algo] lambda.
    #[arg(long)]
    lambda: Option<String>,
    /// [algo] schedule: constant, diminishing or theory.
    #[arg(long)]
    schedule: Option<String>,
    /// [algo] eta.
    #[arg(long)]
    eta: Option<String>,
    /// [algo] mu.
    #[arg(long)]
    mu: Option<String>,
    /// [algo] t0.
    #[arg(long)]
    t0: Option<String>,
    /// [algo] radius: none, theory or a number.
    #[arg(long)]
    radius: Option<String>,

    /// [experiment] iterations.
    #[arg(long)]
    iterations: Option<String>,
    /// [experiment] budget: transition budget.
    #[arg(long)]
    budget: Option<String>,
    /// [experiment] stride, in outer iterations.
    #[arg(long)]
    stride: Option<String>,
    /// [experiment] stride_transitions.
    #[arg(long)]
    stride_transitions: Option<String>,
    /// [experiment] seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// [experiment] metric: value-l2, value-rms or param-l2.
    #[arg(long)]
    metric: Option<String>,
    /// [experiment] reference: v-pi, theta-star, theta-star-lambda or finite-b.
    #[arg(long)]
    reference: Option<String>,
    /// [experiment] lambda_values.
    #[arg(long)]
    lambda_values: Option<String>,
    /// [experiment] rho_values.
    #[arg(long)]
    rho_values: Option<String>,
    /// [experiment] vary: target or behavior.
    #[arg(long)]
    vary: Option<String>,
    /// [experiment] samples.
    #[arg(long)]
    samples: Option<String>,
    /// [experiment] theta, comma separated.
    #[arg(long)]
    theta: Option<String>,
}

impl Opts {
    fn flag_settings(&self) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        let pairs = [
            ("experiment.base_seed", &self.base_seed),
            ("experiment.jobs", &self.jobs),
            ("mdp.preset", &self.preset),
            ("mdp.target_solid", &self.target_solid),
            ("mdp.behavior_solid", &self.behavior_solid),
            ("mdp.mdp_file", &self.mdp_file),
            ("mdp.target_file", &self.target_file),
            ("mdp.behavior_file", &self.behavior_file),
            ("mdp.start", &self.start),
            ("features.preset", &self.features),
            ("features.file", &self.features_file),
            ("algo.algo", &self.algo),
            ("algo.b", &self.b),
            ("algo.lambda", &self.lambda),
            ("algo.schedule", &self.schedule),
            ("algo.eta", &self.eta),
            ("algo.mu", &self.mu),
            ("algo.t0", &self.t0),
            ("algo.radius", &self.radius),
            ("experiment.iterations", &self.iterations),
            ("experiment.budget", &self.budget),
            ("experiment.stride", &self.stride),
            ("experiment.stride_transitions", &self.stride_transitions),
            ("experiment.seeds", &self.seeds),
            ("experiment.metric", &self.metric),
            ("experiment.reference", &self.reference),
            ("experiment.lambda_values", &self.lambda_values),
            ("experiment.rho_values", &self.rho_values),
            ("experiment.vary", &self.vary),
            ("experiment.samples", &self.samples),
            ("experiment.theta", &self.theta),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                s.insert_checked(key, v.as_str())?;
            }
        }
        Ok(s)
    }

    fn settings(&self, subcommand: &str) -> Result<Settings, CliError> {
        let mut s = match self.figure {
            Some(f) => f.settings(subcommand)?,
            None => Settings::default(),
        };
        if let Some(path) = &self.config {
            s.overlay(&Settings::load_ini(path)?);
        }
        s.overlay(&self.flag_settings()?);
        Ok(s)
    }
}

fn execute(name: &str, opts: &Opts, f: fn(&Setup, &mut Vec<u8>) -> Result<(), CliError>) -> Result<(), CliError> {
    let setup = Setup::new(opts.settings(name)?)?;
    let mut buf = Vec::new();
    let status = f(&setup, &mut buf);
    // Output is written even when every trial diverged.
    if status.is_ok() || matches!(status, Err(CliError::Diverged(_))) {
        match &opts.out {
            Some(path) => std::fs::write(path, &buf)
                .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?,
            None => std::io::stdout().write_all(&buf)?,
        }
    }
    status
}

fn dispatch(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::FixedPoint(o) => execute("fixed-point", o, commands::fixed_point),
        Command::Run(o) => execute("run", o, commands::run),
        Command::SweepB(o) => execute("sweep-b", o, commands::sweep_b),
        Command::SweepLambda(o) => execute("sweep-lambda", o, commands::sweep_lambda_cmd),
        Command::SweepRho(o) => execute("sweep-rho", o, commands::sweep_rho_cmd),
        Command::Probe(o) => execute("probe", o, commands::probe),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
