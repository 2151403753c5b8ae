use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use isac_sim::commands::Run;
use isac_sim::ExperimentConfig;

#[derive(Parser)]
#[command(name = "isac-sim", version, about = "ISAC CSI dataset, training and Monte-Carlo experiment driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override one config key, e.g. `--set data.samples_per_snr=50`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: `output.dir`, then $ISAC_OUT_DIR, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the training and evaluation datasets.
    Generate(Common),
    /// Train the enhancer and write the checkpoint and training curve.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train_data: Option<PathBuf>,
        #[arg(long)]
        eval_data: Option<PathBuf>,
    },
    /// NMSE per SNR of LS, LMMSE and enhanced CSI.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// AoA and range MSE per SNR, CSI variant and biased-FFT step count.
    Sense {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// BER per SNR, constellation and CSI source.
    Ber {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Pivot the metric CSVs into one table per metric.
    Report(Common),
}

fn open(c: &Common) -> Result<Run> {
    let cfg = ExperimentConfig::load(&c.config, &c.overrides)?;
    let out = cfg.output_dir(c.out.as_deref());
    Run::new(cfg, out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => {
            open(&c)?.generate()?;
        }
        Command::Train {
            common,
            train_data,
            eval_data,
        } => open(&common)?.train(train_data.as_deref(), eval_data.as_deref())?,
        Command::Eval { common, checkpoint, data } => {
            open(&common)?.eval(checkpoint.as_deref(), data.as_deref())?;
        }
        Command::Sense { common, checkpoint, data } => {
            open(&common)?.sense(checkpoint.as_deref(), data.as_deref())?;
        }
        Command::Ber { common, checkpoint } => {
            open(&common)?.ber(checkpoint.as_deref())?;
        }
        Command::Report(c) => {
            for p in open(&c)?.report()? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
