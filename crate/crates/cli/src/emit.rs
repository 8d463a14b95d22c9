//! JSON emission shared by the commands: indent control and full-precision
//! probability rendering.

use emocue_core::haar::Detection;
use emocue_core::net::NUM_CLASSES;
use emocue_core::recommend::{Catalog, Playlist};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::CliError;

/// Global JSON options (from `--json-indent`).
#[derive(Clone, Copy)]
pub struct JsonOpts {
    pub indent: usize,
}

/// Serializes with the configured indentation; 0 means compact.
pub fn to_json<T: Serialize>(value: &T, opts: &JsonOpts) -> Result<String, CliError> {
    let oops = |e: serde_json::Error| CliError { code: 4, msg: format!("JSON encoding failed: {e}") };
    if opts.indent == 0 {
        return serde_json::to_string(value).map_err(oops);
    }
    let indent = vec![b' '; opts.indent];
    let mut buf = Vec::new();
    let fmt = serde_json::ser::PrettyFormatter::with_indent(&indent);
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser).map_err(oops)?;
    String::from_utf8(buf).map_err(|e| CliError { code: 4, msg: format!("JSON was not UTF-8: {e}") })
}

/// Prints a value as JSON on stdout followed by a newline.
pub fn print_json<T: Serialize>(value: &T, opts: &JsonOpts) -> Result<(), CliError> {
    println!("{}", to_json(value, opts)?);
    Ok(())
}

/// Renders one probability with 9 significant digits (enough for an exact
/// f32 round-trip) as a raw JSON number, e.g. `1.42857149e-1`.
fn prob_number(p: f32) -> Box<RawValue> {
    RawValue::from_string(format!("{p:.8e}"))
        .expect("a formatted float is always a valid JSON number")
}

/// Full-precision probability array for JSON output.
pub fn prob_array(probabilities: &[f32; NUM_CLASSES]) -> Vec<Box<RawValue>> {
    probabilities.iter().copied().map(prob_number).collect()
}

#[derive(Serialize)]
pub struct DetectionOut {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub neighbors: usize,
}

impl From<&Detection> for DetectionOut {
    fn from(d: &Detection) -> Self {
        DetectionOut { x: d.x, y: d.y, w: d.width, h: d.height, neighbors: d.neighbors }
    }
}

/// Canonical presentation order for detection boxes.
pub fn sorted_detections(detections: &[Detection]) -> Vec<DetectionOut> {
    let mut out: Vec<DetectionOut> = detections.iter().map(DetectionOut::from).collect();
    out.sort_by_key(|d| (d.y, d.x, d.w, d.h));
    out
}

#[derive(Serialize)]
pub struct PredictionOut {
    pub label: String,
    pub probabilities: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
pub struct SongOut {
    pub id: String,
    pub title: String,
    pub artist: String,
    pub uri: String,
}

#[derive(Serialize)]
pub struct PlaylistOut {
    pub emotion: String,
    pub seed: u64,
    pub songs: Vec<SongOut>,
}

/// Expands a playlist's song ids back into full catalog entries.
pub fn playlist_out(catalog: &Catalog, playlist: &Playlist) -> Result<PlaylistOut, CliError> {
    let mut songs = Vec::with_capacity(playlist.song_ids.len());
    for id in &playlist.song_ids {
        let song = catalog
            .songs()
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| CliError { code: 4, msg: format!("playlist id '{id}' missing from catalog") })?;
        songs.push(SongOut {
            id: song.id.clone(),
            title: song.title.clone(),
            artist: song.artist.clone(),
            uri: song.uri.clone(),
        });
    }
    Ok(PlaylistOut { emotion: playlist.emotion.name().to_string(), seed: playlist.seed, songs })
}
