use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bpe_cli::commands::{run_batch, run_file, Command, Options};
use bpe_core::scenario::Overrides;
use clap::{Args, Parser, Subcommand};

/// Bearing-only formation control under persistence of excitation.
#[derive(Parser)]
#[command(name = "bpe", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the closed-loop controller; writes a CSV log, an error-norm plot
    /// and a trajectory plot.
    Simulate(RunArgs),
    /// Run the configuration observer along the desired motion.
    Observe(RunArgs),
    /// Test the desired formation for bearing persistence of excitation.
    Analyze(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; the `.toml` extension may be omitted.
    #[arg(required_unless_present = "batch", conflicts_with = "batch")]
    file: Option<PathBuf>,
    /// Integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long)]
    horizon: Option<f64>,
    /// Controller gain.
    #[arg(long = "k-p")]
    k_p: Option<f64>,
    /// Excitation window length.
    #[arg(long, value_name = "T")]
    window: Option<f64>,
    /// Seed for random initial conditions and estimates.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// SVG output path.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    /// Run every scenario file in a directory, in parallel.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["csv", "svg"])]
    batch: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Observe(a) => (Command::Observe, a),
        Cmd::Analyze(a) => (Command::Analyze, a),
    };
    let opts = Options {
        overrides: Overrides {
            dt: args.dt,
            horizon: args.horizon,
            k_p: args.k_p,
            window: args.window,
            seed: args.seed,
        },
        csv: args.csv,
        svg: args.svg,
    };
    let report = match (&args.batch, &args.file) {
        (Some(dir), _) => run_batch(cmd, dir, &opts),
        (None, Some(file)) => run_file(cmd, file, &opts),
        (None, None) => unreachable!("clap requires a file or --batch"),
    };
    print!("{}", report.stdout);
    eprint!("{}", report.stderr);
    let _ = std::io::stdout().flush();
    ExitCode::from(report.status)
}
