//! Regenerates everything under `fixtures/`. Run from the workspace with
//! `cargo run -p emocue-cli --example make_fixtures`; the outputs are
//! committed, and this program exists so they stay reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use emocue_core::glyphs::base_glyph;
use emocue_core::haar::{Cascade, HaarFeature, Stage, Stump, WeightedRect};
use emocue_core::image::{write_pgm, GrayImage};
use emocue_core::net::{build_model, NetworkConfig};
use emocue_core::weights::save_weights;
use emocue_core::Result;

fn fixtures_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

/// The 146-song placeholder catalog (Happy 20, Sad 30, Angry 20,
/// Surprise 20, Neutral 20, Disgust 20, Fear 16). A couple of rows carry
/// odd-cased emotion cells and comma-bearing quoted titles on purpose, so
/// loaders get exercised.
fn catalog_csv() -> String {
    let groups: [(&str, usize); 7] = [
        ("Happy", 20),
        ("Sad", 30),
        ("Angry", 20),
        ("Surprise", 20),
        ("Neutral", 20),
        ("Disgust", 20),
        ("Fear", 16),
    ];
    let mut out = String::new();
    out.push_str("# Sample music catalog: 146 placeholder tracks, counts per emotion:\n");
    out.push_str("# Happy 20, Sad 30, Angry 20, Surprise 20, Neutral 20, Disgust 20, Fear 16.\n");
    out.push_str(
        "# Titles, artists, and URIs are invented placeholders; URIs are opaque locators and are never dereferenced.\n",
    );
    out.push_str("id,title,artist,emotion,uri\n");
    for (emo, count) in groups {
        let lower = emo.to_ascii_lowercase();
        for i in 1..=count {
            let id = format!("{lower}-{i:02}");
            let title = if i % 7 == 0 {
                format!("\"Study No. {i}, {emo} Suite\"")
            } else {
                format!("{emo} Study No. {i}")
            };
            let cell = match id.as_str() {
                "happy-03" => "HAPPY".to_string(),
                "sad-02" => "sad".to_string(),
                _ => emo.to_string(),
            };
            let _ = writeln!(out, "{id},{title},The {emo} Ensemble,{cell},local://tracks/{id}");
        }
    }
    out
}

/// One-stage band detector: fires when the top half of the window is
/// brighter than the bottom half. The stump threshold -0.5 demands that
/// most of the window cover the band, so two well-separated bands group
/// into two detections instead of chaining into one.
fn band_cascade(size: u32, stump_threshold: f32, stage_threshold: f32) -> Cascade {
    Cascade {
        window_width: size,
        window_height: size,
        stages: vec![Stage {
            threshold: stage_threshold,
            stumps: vec![Stump {
                feature: HaarFeature {
                    rects: vec![
                        WeightedRect { x: 0, y: 0, w: size, h: size, weight: 1.0 },
                        WeightedRect { x: 0, y: 0, w: size, h: size / 2, weight: -2.0 },
                    ],
                },
                threshold: stump_threshold,
                left: 1.0,
                right: -1.0,
            }],
        }],
    }
}

/// Stamps the pattern `eye_cascade.xml` looks for: a bright band over the
/// 40-valued background.
fn paint_band(img: &mut GrayImage, x: usize, y: usize, size: usize, value: u8) {
    for yy in 0..size / 2 {
        for xx in 0..size {
            img.set(x + xx, y + yy, value);
        }
    }
}

fn two_eyes_image() -> Result<GrayImage> {
    let mut img = GrayImage::filled(64, 32, 40)?;
    // different intensities so the two eye crops classify differently
    paint_band(&mut img, 4, 10, 12, 200);
    paint_band(&mut img, 48, 10, 12, 190);
    Ok(img)
}

/// 48x48 frame whose energy sits in the top-left quadrant: bright
/// deterministic texture inside, near-black outside.
fn quadrant_face() -> Result<GrayImage> {
    let mut img = GrayImage::filled(48, 48, 1)?;
    for y in 0..24 {
        for x in 0..24 {
            img.set(x, y, (180 + (x * 7 + y * 13) % 40) as u8);
        }
    }
    Ok(img)
}

fn main() -> Result<()> {
    let dir = fixtures_dir();
    fs::create_dir_all(&dir)?;

    fs::write(dir.join("sample_catalog.csv"), catalog_csv())?;

    fs::write(
        dir.join("eye_cascade.xml"),
        emocue_core::cascade_xml::serialize_cascade(&band_cascade(12, -0.5, 0.0)),
    )?;
    // a stage threshold no stump sum can reach: rejects every window
    fs::write(
        dir.join("reject_all_cascade.xml"),
        emocue_core::cascade_xml::serialize_cascade(&band_cascade(12, -0.5, 1.0e9)),
    )?;

    fs::write(dir.join("two_eyes.pgm"), write_pgm(&two_eyes_image()?))?;
    fs::write(dir.join("face.pgm"), write_pgm(&base_glyph(3)?))?;
    fs::write(dir.join("quadrant_face.pgm"), write_pgm(&quadrant_face()?))?;

    // untrained random init: varied, unsaturated probabilities
    let config = NetworkConfig::light();
    save_weights(&build_model(&config, 5)?, &dir.join("random_weights_light.femr"))?;

    // all-zero weights: uniform probabilities, argmax tie-break -> Angry
    let mut zero = build_model(&config, 0)?;
    for (_, tensor) in zero.params.iter_mut() {
        for v in tensor.data_mut() {
            *v = 0.0;
        }
    }
    save_weights(&zero, &dir.join("zero_weights_light.femr"))?;

    // hand-wired routing: conv channel 0 is an identity tap and the Happy
    // logit sums that channel, so any bright image classifies Happy and
    // Grad-CAM mass follows the image's own energy
    let mut routed = zero.clone();
    routed.params.get_mut("conv1.weight")?.data_mut()[4] = 1.0; // center of the 3x3 kernel
    let w = routed.params.get_mut("dense1.weight")?;
    let happy = 3usize;
    let channel_block = 12 * 12;
    for i in 0..channel_block {
        w.data_mut()[happy * 4 * channel_block + i] = 1.0;
    }
    save_weights(&routed, &dir.join("quadrant_weights_light.femr"))?;

    println!("fixtures written to {}", dir.display());
    Ok(())
}
