use std::path::Path;

use emocue_core::image::read_pgm;
use emocue_core::net::{classify, NetworkConfig};
use emocue_core::weights::load_weights;

use crate::emit::{print_json, prob_array, JsonOpts, PredictionOut};
use crate::CliResult;

pub fn run(image: &Path, weights: &Path, config: &str, json: &JsonOpts) -> CliResult {
    let img = read_pgm(image)?;
    let config = NetworkConfig::by_name(config)?;
    let model = load_weights(weights, &config)?;
    let prediction = classify(&model, &img)?;
    let out = PredictionOut {
        label: prediction.label.name().to_string(),
        probabilities: prob_array(&prediction.probabilities),
    };
    print_json(&out, json)?;
    Ok(0)
}
