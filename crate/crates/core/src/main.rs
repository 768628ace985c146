use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use miwf::commands::{self, Command};

/// Möbius-invariant Willmore flow of tori.
#[derive(Parser)]
#[command(name = "miwf", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the MIWF or DeTurck flow and write diagnostics and snapshots.
    Simulate(Common),
    /// Report energy, umbilic margin and symbol bounds of the initial surface.
    Energy(Common),
    /// Check the linearized flow: AD vs finite differences, propagators, adjoint.
    Linearize(Common),
    /// Compare the velocity of phi(f) with dphi applied to the velocity of f.
    CheckInvariance(Common),
    /// Elastic curve flow on S^2 and the Hopf torus energy identity.
    Hopf(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default: output.dir, then $MIWF_OUT_DIR, then ./miwf_out).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Energy(a) => (Command::Energy, a),
        Cmd::Linearize(a) => (Command::Linearize, a),
        Cmd::CheckInvariance(a) => (Command::CheckInvariance, a),
        Cmd::Hopf(a) => (Command::Hopf, a),
    };
    let result = commands::load_config(args.config.as_deref(), &args.set).and_then(|cfg| {
        let out = commands::output_dir(args.out.as_deref(), &cfg);
        commands::run(cmd, &cfg, &out)
    });
    match &result {
        Ok(o) => println!("{}", o.summary),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(commands::exit_code(&result) as u8)
}
