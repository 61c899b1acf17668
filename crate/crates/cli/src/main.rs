use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fqam_fbmc::config::ReportKind;
use fqam_fbmc::harness::{run_report, Experiment};

/// FQAM over FBMC link-level experiments.
#[derive(Debug, Parser)]
#[command(name = "fqam-fbmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// BER sweep per scheme and SNR point.
    Ber(Common),
    /// Self-SIR table from the transmultiplexer response.
    Selfsir(Common),
    /// Prototype and signal power spectral densities.
    Psd(Common),
    /// Per-symbol PAPR CCDFs.
    Papr(Common),
    /// Closed-form and measured rates.
    Rate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to `outputs.directory` next to the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overrides `channel.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Ber(a) => (ReportKind::Ber, a),
        Command::Selfsir(a) => (ReportKind::Selfsir, a),
        Command::Psd(a) => (ReportKind::Psd, a),
        Command::Papr(a) => (ReportKind::Papr, a),
        Command::Rate(a) => (ReportKind::Rate, a),
    };
    let result = Experiment::load(&args.config, args.seed, args.workers).and_then(|exp| {
        let out = args
            .out
            .clone()
            .unwrap_or_else(|| exp.base_dir.join(&exp.config.outputs.directory));
        run_report(&exp, kind, &out)
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}
