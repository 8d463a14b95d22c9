//! `emocue` — image in, detection, emotion classification, Grad-CAM
//! explanation, playlist out; plus self-verification and a toy trainer.
//!
//! Exit codes: 0 success, 1 verification failure, 2 I/O error, 3 parse
//! error, 4 format error, 5 argument error. Machine output (JSON, CSV,
//! images) goes to stdout or declared paths only; diagnostics go to stderr.

mod cmds;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use emocue_core::Error;

/// Maps a library error onto the documented exit-code table.
pub(crate) fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 2,
        Error::Parse { .. } | Error::Schema { .. } | Error::Validation { .. } | Error::Unsupported(_) => 3,
        Error::Format(_)
        | Error::Shape { .. }
        | Error::Dimension(_)
        | Error::Geometry(_)
        | Error::Numeric(_)
        | Error::Correspondence(_)
        | Error::Integrity(_) => 4,
        Error::Domain(_) | Error::Index(_) | Error::Config(_) => 5,
    }
}

/// Command-level error: an exit code plus the message printed to stderr.
pub(crate) struct CliError {
    pub code: u8,
    pub msg: String,
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError { code: exit_code_for(&err), msg: err.to_string() }
    }
}

pub(crate) type CliResult = Result<u8, CliError>;

#[derive(Parser)]
#[command(
    name = "emocue",
    version,
    about = "Facial-emotion to music pipeline: detect, classify, explain, recommend"
)]
struct Cli {
    /// Seed for every randomized choice (playlist shuffle, dataset, init)
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Spaces per JSON indent level; 0 prints compact single-line JSON
    #[arg(long, global = true, default_value_t = 2)]
    json_indent: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the eye cascade over a PGM image and print detections as JSON
    Detect {
        /// Input image (binary PGM, P5)
        image: PathBuf,
        /// Cascade XML file
        cascade: PathBuf,
        /// Window growth factor between scales
        #[arg(long, default_value_t = 1.1)]
        scale_factor: f64,
        /// Scan step in base-window pixels (scaled per level)
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Minimum grouped-neighbor count for a detection to survive
        #[arg(long, default_value_t = 3)]
        min_neighbors: usize,
    },
    /// Classify the emotion in a PGM image and print the prediction as JSON
    Classify {
        /// Input image (binary PGM, P5)
        image: PathBuf,
        /// Weights file (FEMR v1)
        weights: PathBuf,
        /// Network layout the weights belong to: fernet9, resnet-mini, light
        #[arg(long, default_value = "fernet9")]
        config: String,
    },
    /// Write a Grad-CAM overlay (PPM) for a class and print {label, heatmap_path}
    Explain {
        /// Input image (binary PGM, P5)
        image: PathBuf,
        /// Weights file (FEMR v1)
        weights: PathBuf,
        /// Output overlay path (binary PPM, P6)
        out: PathBuf,
        /// Network layout the weights belong to: fernet9, resnet-mini, light
        #[arg(long, default_value = "fernet9")]
        config: String,
        /// Class index 0..=6 to explain (default: the predicted class)
        #[arg(long)]
        class: Option<usize>,
        /// Heatmap blend weight in [0,1]; 0 reproduces the grayscale input
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Also write the raw (un-upsampled) heatmap as an ASCII PGM (P2)
        #[arg(long)]
        raw_map: Option<PathBuf>,
    },
    /// Pick songs for an emotion from a catalog CSV and print the playlist as JSON
    Recommend {
        /// Catalog CSV file
        catalog: PathBuf,
        /// Emotion name (case-insensitive): Angry, Disgust, Fear, Happy, Sad, Surprise, Neutral
        #[arg(long)]
        emotion: String,
        /// Number of songs requested (capped at availability)
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Full flow: detect eyes, classify, explain, recommend; print the report as JSON
    Pipeline {
        /// Input image (binary PGM, P5)
        image: PathBuf,
        /// Weights file (FEMR v1)
        weights: PathBuf,
        /// Eye cascade XML file
        cascade: PathBuf,
        /// Catalog CSV file
        catalog: PathBuf,
        /// Directory for eye crops and the heatmap overlay
        out_dir: PathBuf,
        /// Network layout the weights belong to: fernet9, resnet-mini, light
        #[arg(long, default_value = "fernet9")]
        config: String,
        /// Number of songs requested (capped at availability)
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Heatmap blend weight in [0,1]
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Window growth factor between scales
        #[arg(long, default_value_t = 1.1)]
        scale_factor: f64,
        /// Scan step in base-window pixels (scaled per level)
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Minimum grouped-neighbor count for a detection to survive
        #[arg(long, default_value_t = 3)]
        min_neighbors: usize,
    },
    /// Run the self-verification suites and print a pass/fail table
    Verify {
        /// Comma-separated suites to run (default: all). Known: gradcheck,
        /// kernels, integral, cascade, softmax, gradcam, shuffle, roundtrip
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Train on the built-in glyph dataset and write weights + a loss CSV
    TrainToy {
        /// Output weights path (FEMR v1)
        out: PathBuf,
        /// Network layout to train: fernet9, resnet-mini, light
        #[arg(long, default_value = "light")]
        config: String,
        /// Number of passes over the training split
        #[arg(long, default_value_t = 30)]
        epochs: u32,
        /// Mini-batch size
        #[arg(long, default_value_t = 10)]
        batch_size: usize,
        /// SGD learning rate
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f32,
        /// Loss CSV path (default: OUT with ".loss.csv" appended)
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult {
    let json = emit::JsonOpts { indent: cli.json_indent };
    match cli.command {
        Command::Detect { image, cascade, scale_factor, step, min_neighbors } => {
            cmds::detect::run(&image, &cascade, scale_factor, step, min_neighbors, &json)
        }
        Command::Classify { image, weights, config } => {
            cmds::classify::run(&image, &weights, &config, &json)
        }
        Command::Explain { image, weights, out, config, class, alpha, raw_map } => {
            cmds::explain::run(&image, &weights, &out, &config, class, alpha, raw_map.as_deref(), &json)
        }
        Command::Recommend { catalog, emotion, count } => {
            cmds::recommend::run(&catalog, &emotion, count, cli.seed, &json)
        }
        Command::Pipeline {
            image,
            weights,
            cascade,
            catalog,
            out_dir,
            config,
            count,
            alpha,
            scale_factor,
            step,
            min_neighbors,
        } => cmds::pipeline::run(&cmds::pipeline::Args {
            image,
            weights,
            cascade,
            catalog,
            out_dir,
            config,
            count,
            alpha,
            scale_factor,
            step,
            min_neighbors,
            seed: cli.seed,
            json,
        }),
        Command::Verify { only } => cmds::verify::run(&only),
        Command::TrainToy { out, config, epochs, batch_size, learning_rate, loss_csv } => {
            cmds::train::run(
                &out,
                &config,
                epochs,
                batch_size,
                learning_rate,
                loss_csv.as_deref(),
                cli.seed,
                &json,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version land here too and must stay successful
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(5);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.msg);
            ExitCode::from(err.code)
        }
    }
}
