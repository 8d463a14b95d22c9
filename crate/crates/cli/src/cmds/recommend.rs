use std::fs;
use std::path::Path;

use emocue_core::net::EmotionLabel;
use emocue_core::recommend::{load_catalog, recommend};

use crate::emit::{playlist_out, print_json, JsonOpts};
use crate::CliResult;

pub fn run(catalog: &Path, emotion: &str, count: usize, seed: u64, json: &JsonOpts) -> CliResult {
    let text = fs::read_to_string(catalog).map_err(emocue_core::Error::from)?;
    let catalog = load_catalog(&text)?;
    let emotion = EmotionLabel::from_name(emotion)?;
    let playlist = recommend(&catalog, emotion, count, seed)?;
    print_json(&playlist_out(&catalog, &playlist)?, json)?;
    Ok(0)
}
