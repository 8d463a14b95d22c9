use std::fs;
use std::path::{Path, PathBuf};

use emocue_core::cascade_xml::read_cascade;
use emocue_core::gradcam::{compute_gradcam, overlay, upsample_bilinear};
use emocue_core::haar::{detect_multiscale, extract_eye_rois_from, ScanParams};
use emocue_core::image::{read_pgm, write_pgm, write_ppm};
use emocue_core::net::{classify, classify_eyes, preprocess, NetworkConfig, INPUT_SIZE};
use emocue_core::recommend::{load_catalog, map_prediction, recommend};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::emit::{
    playlist_out, print_json, prob_array, sorted_detections, DetectionOut, JsonOpts, PlaylistOut,
};
use crate::{exit_code_for, CliError, CliResult};

pub struct Args {
    pub image: PathBuf,
    pub weights: PathBuf,
    pub cascade: PathBuf,
    pub catalog: PathBuf,
    pub out_dir: PathBuf,
    pub config: String,
    pub count: usize,
    pub alpha: f64,
    pub scale_factor: f64,
    pub step: f64,
    pub min_neighbors: usize,
    pub seed: u64,
    pub json: JsonOpts,
}

#[derive(Serialize)]
struct PipelineReport {
    input: String,
    detections: Vec<DetectionOut>,
    roi_used: String,
    probabilities: Vec<Box<RawValue>>,
    label: String,
    playlist: PlaylistOut,
    heatmap_path: String,
}

/// Tags an error with the pipeline stage it came from.
fn stage<T>(name: &str, result: emocue_core::Result<T>) -> Result<T, CliError> {
    result.map_err(|err| CliError {
        code: exit_code_for(&err),
        msg: format!("pipeline stage '{name}': {err}"),
    })
}

pub fn run(args: &Args) -> CliResult {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = run_inner(args, &mut written);
    if result.is_err() {
        // do not leave partial outputs behind
        for path in &written {
            let _ = fs::remove_file(path);
        }
    }
    result
}

fn write_output(path: &Path, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    stage("write-outputs", fs::write(path, bytes).map_err(emocue_core::Error::from))?;
    written.push(path.to_path_buf());
    Ok(())
}

fn run_inner(args: &Args, written: &mut Vec<PathBuf>) -> CliResult {
    let img = stage("load-image", read_pgm(&args.image))?;
    let config = stage("load-weights", NetworkConfig::by_name(&args.config))?;
    let model = stage("load-weights", emocue_core::weights::load_weights(&args.weights, &config))?;
    let cascade = stage("load-cascade", read_cascade(&args.cascade))?;
    let catalog_text =
        stage("load-catalog", fs::read_to_string(&args.catalog).map_err(emocue_core::Error::from))?;
    let catalog = stage("load-catalog", load_catalog(&catalog_text))?;

    let params = ScanParams {
        scale_factor: args.scale_factor,
        step: args.step,
        min_neighbors: args.min_neighbors,
    };
    let detections = stage("detect", detect_multiscale(&img, &cascade, &params))?;

    let eyes = if detections.is_empty() {
        Vec::new()
    } else {
        stage("extract-eyes", extract_eye_rois_from(&img, &detections, (INPUT_SIZE, INPUT_SIZE)))?
    };
    let (prediction, roi_used) = if eyes.is_empty() {
        (stage("classify", classify(&model, &img))?, "FULL_FRAME")
    } else {
        (stage("classify", classify_eyes(&model, &eyes))?, "EYES")
    };

    let input = stage("explain", preprocess(&img))?;
    let heat = stage("explain", compute_gradcam(&model, &input, prediction.label.index()))?;
    let up = stage("explain", upsample_bilinear(&heat, img.height, img.width))?;
    let blend = stage("explain", overlay(&img, &up, args.alpha))?;

    let emotion = stage("recommend", map_prediction(&prediction))?;
    let playlist = stage("recommend", recommend(&catalog, emotion, args.count, args.seed))?;

    stage(
        "write-outputs",
        fs::create_dir_all(&args.out_dir).map_err(emocue_core::Error::from),
    )?;
    for (i, eye) in eyes.iter().enumerate() {
        let path = args.out_dir.join(format!("eye_{i}.pgm"));
        write_output(&path, &write_pgm(eye), written)?;
    }
    let heatmap_path = args.out_dir.join("heatmap.ppm");
    write_output(&heatmap_path, &write_ppm(&blend), written)?;

    let report = PipelineReport {
        input: args.image.display().to_string(),
        detections: sorted_detections(&detections),
        roi_used: roi_used.to_string(),
        probabilities: prob_array(&prediction.probabilities),
        label: prediction.label.name().to_string(),
        playlist: playlist_out(&catalog, &playlist)?,
        heatmap_path: heatmap_path.display().to_string(),
    };
    print_json(&report, &args.json)?;
    Ok(0)
}
