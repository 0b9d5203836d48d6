use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssn_bench::commands;
use ssn_bench::diagnostics::DiagnosticKind;
use ssn_bench::{BenchError, RunConfig};

#[derive(Parser)]
#[command(name = "ssn", version, about = "SubspaceNet DOA benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a training dataset.
    Simulate(Common),
    /// Train a model and write a checkpoint with its loss log.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset written by `simulate`; simulated afresh if omitted.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Monte-Carlo metrics table.
    Eval(Common),
    /// MUSIC spectra and root maps for one trial.
    Spectrum(Common),
    /// MVDR beampatterns for one trial.
    Beampattern(Common),
    /// Normalized eigenvalue profiles for one trial.
    Eigvals(Common),
}

fn config(c: Common) -> Result<RunConfig, BenchError> {
    let base = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    commands::with_overrides(base, c.seed, c.trials, c.checkpoint, c.out)
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = config(c)?;
            let path = commands::simulate(&cfg, &cfg.out_dir)?;
            println!("{}", path.display());
        }
        Command::Train { common, dataset } => {
            let cfg = config(common)?;
            let out = commands::train(&cfg, dataset.as_deref(), &cfg.out_dir)?;
            let best = &out.report.epochs[out.report.best_epoch - 1];
            println!("{} best epoch {} val {:.5}", out.checkpoint.display(), best.epoch, best.val_rmspe);
        }
        Command::Eval(c) => {
            let cfg = config(c)?;
            print!("{}", commands::eval(&cfg, &cfg.out_dir)?.to_csv());
        }
        Command::Spectrum(c) => diagnostics(c, DiagnosticKind::Spectrum)?,
        Command::Beampattern(c) => diagnostics(c, DiagnosticKind::Beampattern)?,
        Command::Eigvals(c) => diagnostics(c, DiagnosticKind::Eigenvalues)?,
    }
    Ok(())
}

fn diagnostics(c: Common, kind: DiagnosticKind) -> Result<(), BenchError> {
    let cfg = config(c)?;
    let manifest = commands::diagnostics(&cfg, &[kind], &cfg.out_dir)?;
    for f in manifest.files {
        println!("{}", cfg.out_dir.join(f.file).display());
    }
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
