//! `stp`: one binary for every pipeline stage. Exit codes: 0 success,
//! 1 validation error (bad flags, malformed data, range violations),
//! 2 I/O error. Diagnostics go to stderr, data to stdout or `--out`.

mod args;
mod commands;
mod config;
mod error;
mod util;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::FileConfig;
use error::{AppError, EXIT_VALIDATION};

/// Config file contents plus resolved global flags, passed to every
/// subcommand.
pub struct Resolved {
    pub config: FileConfig,
    pub jobs: usize,
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let jobs = cli.jobs.unwrap_or(1);
    if jobs == 0 {
        return Err(AppError::Validation("--jobs must be >= 1".into()));
    }
    let ctx = Resolved { config, jobs };
    match &cli.command {
        Command::Vad(args) => commands::segments::run_vad(args, &ctx),
        Command::MergeSegments(args) => commands::segments::run_merge_segments(args, &ctx),
        Command::Stats(args) => commands::segments::run_stats(args, &ctx),
        Command::FilterBitext(args) => commands::filter::run_filter_bitext(args, &ctx),
        Command::TrainLm(args) => commands::train::run_train_lm(args, &ctx),
        Command::TrainLangid(args) => commands::train::run_train_langid(args),
        Command::LearnBpe(args) => commands::bpe::run_learn_bpe(args, &ctx),
        Command::ApplyBpe(args) => commands::bpe::run_apply_bpe(args, &ctx),
        Command::Decode(args) => commands::decode::run_decode(args, &ctx),
        Command::Seqkd(args) => commands::seqkd::run_seqkd(args, &ctx),
        Command::Score(args) => commands::score::run_score(args, &ctx),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; parse failures are
            // validation errors. err.print() routes help to stdout and
            // errors (with usage) to stderr.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_VALIDATION,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(&cli) {
        eprintln!("stp: {err}");
        std::process::exit(err.exit_code());
    }
}
