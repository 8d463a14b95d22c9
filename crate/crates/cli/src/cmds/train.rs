use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use emocue_core::autodiff::{accuracy, train_toy, TrainConfig};
use emocue_core::glyphs::glyph_dataset;
use emocue_core::net::{build_model, NetworkConfig};
use emocue_core::weights::save_weights;
use serde::Serialize;

use crate::emit::{print_json, JsonOpts};
use crate::CliResult;

#[derive(Serialize)]
struct TrainOut {
    train_accuracy: f64,
    test_accuracy: f64,
    epochs: u32,
    weights_path: String,
    loss_csv_path: String,
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    out: &Path,
    config: &str,
    epochs: u32,
    batch_size: usize,
    learning_rate: f32,
    loss_csv: Option<&Path>,
    seed: u64,
    json: &JsonOpts,
) -> CliResult {
    let config = NetworkConfig::by_name(config)?;
    let (train, test) = glyph_dataset(seed);
    let model = build_model(&config, seed)?;
    let train_config = TrainConfig { epochs, batch_size, learning_rate, seed };
    let (trained, losses) = train_toy(model, &train, &train_config)?;

    save_weights(&trained, out)?;

    let loss_csv_path: PathBuf = match loss_csv {
        Some(p) => p.to_path_buf(),
        None => {
            let mut name = out.as_os_str().to_os_string();
            name.push(".loss.csv");
            PathBuf::from(name)
        }
    };
    let mut csv = String::from("epoch,mean_loss\n");
    for (i, loss) in losses.iter().enumerate() {
        let _ = writeln!(csv, "{},{loss:.8e}", i + 1);
    }
    fs::write(&loss_csv_path, csv).map_err(emocue_core::Error::from)?;

    let out_json = TrainOut {
        train_accuracy: accuracy(&trained, &train)?,
        test_accuracy: accuracy(&trained, &test)?,
        epochs,
        weights_path: out.display().to_string(),
        loss_csv_path: loss_csv_path.display().to_string(),
    };
    print_json(&out_json, json)?;
    Ok(0)
}
