//! `labelspan`: synthesize label-to-span data, encode it, sample few-shot
//! subsets, train the toy tagger and evaluate it.

mod commands;
mod failure;
mod files;
mod manifest;
mod openai;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "labelspan", version, about = "Label-to-span information extraction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annotate corpus sentences with an LLM and write distillation records.
    Synth(commands::synth::Args),
    /// Label frequency table of a distillation dataset, grouped by label length.
    Stats(commands::stats::Args),
    /// Encode records or task data as tagged examples or text-to-text pairs.
    Encode(commands::encode::Args),
    /// Draw a few-shot training subset from a task dataset.
    Fewshot(commands::fewshot::Args),
    /// Train the toy tagger on records or task data.
    Train(commands::train::Args),
    /// Score a tagger on a task dataset.
    Eval(commands::eval::Args),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { failure::Kind::Usage.exit_code() } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth::run(a),
        Command::Stats(a) => commands::stats::run(a),
        Command::Encode(a) => commands::encode::run(a),
        Command::Fewshot(a) => commands::fewshot::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Eval(a) => commands::eval::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.kind.exit_code()
        }
    }
}
