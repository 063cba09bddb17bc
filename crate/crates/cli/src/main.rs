//! Binary entry point: argument parsing, config resolution, and the exit
//! code contract (0 success, 2 config error, 3 data/format error, 4
//! shape/compatibility error).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use canta_cli::commands;
use canta_cli::config::RunConfig;
use canta_cli::CliError;

#[derive(Parser)]
#[command(
    name = "canta",
    version,
    about = "Multimodal lyric transcription: synthesize data, train, decode, evaluate"
)]
struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Override the command's output directory (the dataset directory for
    /// `gen`, the run output directory otherwise).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Let `gen` overwrite a non-empty dataset directory.
    #[arg(long, global = true)]
    force: bool,

    /// Make `eval` dump the first utterance's fusion attention maps.
    #[arg(long, global = true)]
    dump_attention: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset and its manifest.
    Gen,
    /// Train the transcription model.
    TrainAlt,
    /// Train the voicing detector.
    TrainVad,
    /// Transcribe a sample file or a dataset split.
    Decode {
        /// A sample file or dataset directory; defaults to the configured
        /// dataset and split.
        input: Option<PathBuf>,
    },
    /// Score a checkpoint over the interference/modality grid.
    Eval,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        match cli.command {
            Command::Gen => cfg.paths.data_dir = out.clone(),
            _ => cfg.paths.out_dir = out.clone(),
        }
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Gen => {
            let summary = commands::cmd_gen(&cfg, cli.force)?;
            println!("{summary}");
        }
        Command::TrainAlt => {
            let outcome = commands::cmd_train_alt(&cfg)?;
            println!(
                "kept epoch {} (val_wer={}) at {}; skipped {} infeasible utterances",
                outcome.best_epoch,
                outcome.best_val_wer,
                outcome.checkpoint.display(),
                outcome.total_skipped
            );
        }
        Command::TrainVad => {
            let outcome = commands::cmd_train_vad(&cfg)?;
            println!(
                "kept epoch {} (val_loss={}) at {}; test accuracy={} macro_f1={}",
                outcome.best_epoch,
                outcome.best_val_loss,
                outcome.checkpoint.display(),
                outcome.report.accuracy,
                outcome.report.macro_f1
            );
        }
        Command::Decode { input } => {
            let path = commands::cmd_decode(&cfg, input.as_deref())?;
            println!("wrote {}", path.display());
        }
        Command::Eval => {
            let path = commands::cmd_eval(&cfg, cli.dump_attention)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}
