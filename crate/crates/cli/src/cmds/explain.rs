use std::fs;
use std::path::Path;

use emocue_core::gradcam::{compute_gradcam, overlay, upsample_bilinear};
use emocue_core::image::{read_pgm, write_pgm_ascii, write_ppm};
use emocue_core::net::{classify, preprocess, EmotionLabel, NetworkConfig, NUM_CLASSES};
use emocue_core::weights::load_weights;
use emocue_core::Error;
use serde::Serialize;

use crate::emit::{print_json, JsonOpts};
use crate::CliResult;

#[derive(Serialize)]
struct ExplainOut {
    label: String,
    heatmap_path: String,
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    image: &Path,
    weights: &Path,
    out: &Path,
    config: &str,
    class: Option<usize>,
    alpha: f64,
    raw_map: Option<&Path>,
    json: &JsonOpts,
) -> CliResult {
    let img = read_pgm(image)?;
    let config = NetworkConfig::by_name(config)?;
    let model = load_weights(weights, &config)?;

    let target = match class {
        Some(c) => {
            if c >= NUM_CLASSES {
                return Err(Error::index(format!(
                    "class {c} is out of range 0..{NUM_CLASSES}"
                ))
                .into());
            }
            c
        }
        None => classify(&model, &img)?.label.index(),
    };

    let input = preprocess(&img)?;
    let heat = compute_gradcam(&model, &input, target)?;
    if let Some(raw_path) = raw_map {
        fs::write(raw_path, write_pgm_ascii(&heat.to_gray()?))
            .map_err(emocue_core::Error::from)?;
    }
    let up = upsample_bilinear(&heat, img.height, img.width)?;
    let blend = overlay(&img, &up, alpha)?;
    fs::write(out, write_ppm(&blend)).map_err(emocue_core::Error::from)?;

    let out_json = ExplainOut {
        label: EmotionLabel::from_index(target)?.name().to_string(),
        heatmap_path: out.display().to_string(),
    };
    print_json(&out_json, json)?;
    Ok(0)
}
