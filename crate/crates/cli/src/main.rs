//! Batch reproduction surface for the toolkit. Exit codes: 0 success,
//! 1 partial per-item failures, 2 fatal configuration error.

mod clusters;
mod emotion;
mod extract;
mod reliability;
mod run;
mod train;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "midlevel",
    version,
    about = "Perceptual music features: extraction, agreement, models",
    after_help = "Relative inputs missing locally are looked up under \
                  MIDLEVEL_DATA_DIR. Every run writes a config echo beside \
                  its results; reruns with the same seed are byte-identical."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the six handcrafted features from WAV clips.
    Extract(extract::ExtractArgs),
    /// Cronbach's alpha per quality, plus optional worker screening.
    Reliability(reliability::ReliabilityArgs),
    /// Predict emotion ratings from the seven qualities (cross-validated).
    Emotion(emotion::EmotionArgs),
    /// Classify songs into clusters 1-5 from the seven qualities.
    Clusters(clusters::ClustersArgs),
    /// Network stages: pretrain, embed, transfer, finetune, gradcheck.
    Train(train::TrainArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Extract(args) => extract::run(args),
        Command::Reliability(args) => reliability::run(args),
        Command::Emotion(args) => emotion::run(args),
        Command::Clusters(args) => clusters::run(args),
        Command::Train(args) => train::run(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
