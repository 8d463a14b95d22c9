use std::path::Path;

use emocue_core::cascade_xml::read_cascade;
use emocue_core::haar::{detect_multiscale, ScanParams};
use emocue_core::image::read_pgm;

use crate::emit::{print_json, sorted_detections, JsonOpts};
use crate::CliResult;

pub fn run(
    image: &Path,
    cascade: &Path,
    scale_factor: f64,
    step: f64,
    min_neighbors: usize,
    json: &JsonOpts,
) -> CliResult {
    let img = read_pgm(image)?;
    let cascade = read_cascade(cascade)?;
    let params = ScanParams { scale_factor, step, min_neighbors };
    let detections = detect_multiscale(&img, &cascade, &params)?;
    print_json(&sorted_detections(&detections), json)?;
    Ok(0)
}
