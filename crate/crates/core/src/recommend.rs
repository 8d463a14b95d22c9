//! Emotion-tagged music catalog and deterministic playlist generation.
//!
//! Catalogs are CSV files with the exact header
//! `id,title,artist,emotion,uri`; `#` starts a comment line and fields
//! with embedded commas use standard double-quote escaping. The `uri`
//! is an opaque locator — nothing here ever dereferences it.
//!
//! Playlists are produced by a seeded Fisher-Yates shuffle of the
//! requested emotion's songs (taken in catalog order), so the output
//! is a pure function of catalog order, emotion, count, and seed.

use std::collections::HashMap;

use crate::error::Error;
use crate::net::{EmotionLabel, Prediction, NUM_CLASSES};
use crate::rng::SplitMix64;
use crate::Result;

pub const CATALOG_HEADER: [&str; 5] = ["id", "title", "artist", "emotion", "uri"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Song {
    pub id: String,
    pub title: String,
    pub artist: String,
    pub emotion: EmotionLabel,
    pub uri: String,
}

/// Immutable song collection with a per-emotion index built at load
/// time; index order is catalog order.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    songs: Vec<Song>,
    index: [Vec<usize>; NUM_CLASSES],
}

impl Catalog {
    /// Validates id uniqueness (rows counted from 1 in list order) and
    /// builds the emotion index.
    pub fn from_songs(songs: Vec<Song>) -> Result<Self> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (i, song) in songs.iter().enumerate() {
            if song.id.is_empty() {
                return Err(Error::validation(i + 1, "empty song id"));
            }
            // '#' opens a comment line, and ids start CSV rows: such an
            // id could not round-trip through serialize_catalog
            if song.id.starts_with('#') {
                return Err(Error::validation(
                    i + 1,
                    format!("id '{}' must not start with the comment marker '#'", song.id),
                ));
            }
            if let Some(first) = seen.insert(&song.id, i + 1) {
                return Err(Error::validation(
                    i + 1,
                    format!("duplicate id '{}' (first used at entry {first})", song.id),
                ));
            }
        }
        let mut index: [Vec<usize>; NUM_CLASSES] = Default::default();
        for (i, song) in songs.iter().enumerate() {
            index[song.emotion.index()].push(i);
        }
        Ok(Catalog { songs, index })
    }

    pub fn songs(&self) -> &[Song] {
        &self.songs
    }

    pub fn len(&self) -> usize {
        self.songs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.songs.is_empty()
    }

    pub fn count_for(&self, emotion: EmotionLabel) -> usize {
        self.index[emotion.index()].len()
    }

    /// Songs per emotion, indexed by `EmotionLabel::index()`.
    pub fn counts(&self) -> [usize; NUM_CLASSES] {
        let mut out = [0usize; NUM_CLASSES];
        for (i, bucket) in self.index.iter().enumerate() {
            out[i] = bucket.len();
        }
        out
    }

    /// The emotion's songs in catalog order.
    pub fn songs_for(&self, emotion: EmotionLabel) -> impl Iterator<Item = &Song> {
        self.index[emotion.index()].iter().map(|&i| &self.songs[i])
    }
}

fn row_of(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Parses a catalog from CSV text. The emotion column is matched
/// case-insensitively against the seven label names.
pub fn load_catalog(csv_text: &str) -> Result<Catalog> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(csv_text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::schema("header", e.to_string()))?
        .clone();
    if headers.iter().ne(CATALOG_HEADER) {
        return Err(Error::schema(
            "header",
            format!(
                "expected columns {}, got {}",
                CATALOG_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut songs = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::validation(row, e.to_string())
        })?;
        let row = row_of(&record);
        if record.len() != CATALOG_HEADER.len() {
            return Err(Error::validation(
                row,
                format!("expected {} fields, got {}", CATALOG_HEADER.len(), record.len()),
            ));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::validation(row, "empty song id"));
        }
        if id.starts_with('#') {
            return Err(Error::validation(
                row,
                format!("id '{id}' must not start with the comment marker '#'"),
            ));
        }
        if let Some(first) = seen.insert(id.clone(), row) {
            return Err(Error::validation(
                row,
                format!("duplicate id '{id}' (first used at row {first})"),
            ));
        }
        let emotion = EmotionLabel::from_name(&record[3])
            .map_err(|_| Error::validation(row, format!("unknown emotion '{}'", &record[3])))?;
        songs.push(Song {
            id,
            title: record[1].to_string(),
            artist: record[2].to_string(),
            emotion,
            uri: record[4].to_string(),
        });
    }
    Catalog::from_songs(songs)
}

/// Writes the catalog back to CSV (canonical emotion names, quoting
/// only where needed). `load_catalog ∘ serialize_catalog` is the
/// identity on catalogs.
pub fn serialize_catalog(catalog: &Catalog) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(CATALOG_HEADER)
        .map_err(|e| Error::format(e.to_string()))?;
    for song in &catalog.songs {
        writer
            .write_record([
                song.id.as_str(),
                song.title.as_str(),
                song.artist.as_str(),
                song.emotion.name(),
                song.uri.as_str(),
            ])
            .map_err(|e| Error::format(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Playlist {
    pub emotion: EmotionLabel,
    /// Ordered song ids; every id's song carries `emotion`.
    pub song_ids: Vec<String>,
    pub seed: u64,
    /// Set when the catalog holds no songs for the emotion (the
    /// playlist is then empty, which is not a hard error).
    pub no_songs_for_emotion: bool,
}

/// Shuffles the emotion's songs with the seeded generator and returns
/// the first `min(count, available)` ids.
pub fn recommend(
    catalog: &Catalog,
    emotion: EmotionLabel,
    count: usize,
    seed: u64,
) -> Result<Playlist> {
    if count == 0 {
        return Err(Error::domain("playlist count must be positive"));
    }
    let bucket = &catalog.index[emotion.index()];
    if bucket.is_empty() {
        return Ok(Playlist { emotion, song_ids: Vec::new(), seed, no_songs_for_emotion: true });
    }
    let mut order = bucket.clone();
    SplitMix64::new(seed).shuffle(&mut order);
    let song_ids = order
        .iter()
        .take(count.min(order.len()))
        .map(|&i| catalog.songs[i].id.clone())
        .collect();
    Ok(Playlist { emotion, song_ids, seed, no_songs_for_emotion: false })
}

/// Maps a prediction to the emotion used for recommendation, after
/// re-checking the probability-sum invariant.
pub fn map_prediction(pred: &Prediction) -> Result<EmotionLabel> {
    let sum: f64 = pred.probabilities.iter().map(|&p| p as f64).sum();
    if !sum.is_finite() || (sum - 1.0).abs() > 1e-4 {
        return Err(Error::integrity(format!(
            "probabilities sum to {sum}, expected 1 within 1e-4"
        )));
    }
    Ok(pred.label)
}
