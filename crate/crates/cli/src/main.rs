use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tcqpt_cli::config::Pipeline;
use tcqpt_cli::{execute, plots, CliError, RunRequest};

#[derive(Parser)]
#[command(name = "tcqpt", version, about = "Time-correlated process tomography of spin-qubit gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ramsey, Hahn echo, Rabi and CPMG benchmarks of the noise model.
    NoiseBench(RunArgs),
    /// Windowed process tomography and error-generator spectra.
    Qpt(RunArgs),
    /// Fidelity benchmarks from the static noise split.
    Benchmarks(RunArgs),
    /// Fit the compressed gate-set model over a T2* grid.
    Compress(RunArgs),
    /// Interleaved randomized benchmarking of CZ.
    Irb(RunArgs),
    /// Render SVG plots for the CSV files in an output directory.
    Plot { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; defaults are used for missing keys or a missing file argument.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
    /// Worker threads.
    #[arg(long, env = "TCQPT_THREADS")]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (pipeline, args) = match cli.command {
        Command::Plot { dir } => {
            for p in plots::render_plots(&dir)? {
                println!("{}", p.display());
            }
            return Ok(());
        }
        Command::NoiseBench(a) => (Pipeline::NoiseBench, a),
        Command::Qpt(a) => (Pipeline::Qpt, a),
        Command::Benchmarks(a) => (Pipeline::Benchmarks, a),
        Command::Compress(a) => (Pipeline::Compress, a),
        Command::Irb(a) => (Pipeline::Irb, a),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("`--threads` must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let req = RunRequest { pipeline, config: args.config, out: args.out, seed: args.seed, plot: args.plot };
    let art = execute(&req)?;
    println!("{}: {} files in {}", pipeline.name(), art.files().len(), art.dir().display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
