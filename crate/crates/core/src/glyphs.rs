//! Synthetic 7-class glyph dataset for toy training.
//!
//! Each emotion label gets one deterministic 48×48 pattern drawn in
//! foreground 200 on background 40:
//!
//! | label | glyph |
//! |-------|-------|
//! | 0 Angry | horizontal bar |
//! | 1 Disgust | vertical bar |
//! | 2 Fear | X (both diagonals) |
//! | 3 Happy | ring |
//! | 4 Sad | filled top-left quadrant |
//! | 5 Surprise | checkerboard |
//! | 6 Neutral | horizontal gradient |
//!
//! Samples are augmented with seeded per-sample noise: a translation of up
//! to ±3 px on each axis and a global intensity offset of up to ±16,
//! clamped to [0, 255]. For each sample the generator is consumed in a
//! fixed order — dx, dy, then jitter — and samples are produced class by
//! class in label order, so a seed pins the entire dataset bit for bit.
//! The training split uses `SplitMix64(seed)` and the test split
//! `SplitMix64(seed + 1)`, making the two draws independent.

use crate::image::GrayImage;
use crate::net::{preprocess, NUM_CLASSES};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;
use crate::{Error, Result};

pub const GLYPH_SIZE: usize = 48;
pub const FOREGROUND: u8 = 200;
pub const BACKGROUND: u8 = 40;
pub const TRAIN_PER_CLASS: usize = 50;
pub const TEST_PER_CLASS: usize = 10;
pub const MAX_SHIFT: i32 = 3;
pub const MAX_JITTER: i32 = 16;

/// The clean, untranslated, unjittered pattern for a class.
pub fn base_glyph(class: usize) -> Result<GrayImage> {
    if class >= NUM_CLASSES {
        return Err(Error::index(format!("glyph class {class} out of range 0..{NUM_CLASSES}")));
    }
    let n = GLYPH_SIZE;
    let mut px = vec![BACKGROUND; n * n];
    fn set(px: &mut [u8], x: i64, y: i64) {
        let n = GLYPH_SIZE as i64;
        if (0..n).contains(&x) && (0..n).contains(&y) {
            px[(y * n + x) as usize] = FOREGROUND;
        }
    }
    match class {
        0 => {
            // horizontal bar
            for y in 20..28 {
                for x in 8..40 {
                    set(&mut px, x, y);
                }
            }
        }
        1 => {
            // vertical bar
            for y in 8..40 {
                for x in 20..28 {
                    set(&mut px, x, y);
                }
            }
        }
        2 => {
            // X: both diagonals, 3 px thick
            for i in 6..42i64 {
                for t in -1..=1i64 {
                    set(&mut px, i, i + t);
                    set(&mut px, i, 47 - i + t);
                }
            }
        }
        3 => {
            // ring centered on the image, radii 12..=16
            for y in 0..n as i64 {
                for x in 0..n as i64 {
                    let dx = 2 * x - 47; // doubled to stay in integers
                    let dy = 2 * y - 47;
                    let r2 = dx * dx + dy * dy;
                    if (576..=1024).contains(&r2) {
                        set(&mut px, x, y);
                    }
                }
            }
        }
        4 => {
            // filled top-left quadrant
            for y in 0..24 {
                for x in 0..24 {
                    set(&mut px, x, y);
                }
            }
        }
        5 => {
            // checkerboard with 6 px cells
            for y in 0..n as i64 {
                for x in 0..n as i64 {
                    if (x / 6 + y / 6) % 2 == 0 {
                        set(&mut px, x, y);
                    }
                }
            }
        }
        _ => {
            // horizontal gradient from background to foreground
            let span = (FOREGROUND - BACKGROUND) as f64;
            for y in 0..n {
                for x in 0..n {
                    let v = BACKGROUND as f64 + span * x as f64 / (n - 1) as f64;
                    px[y * n + x] = v.round() as u8;
                }
            }
        }
    }
    GrayImage::new(n, n, px)
}

/// One augmented sample: the base glyph shifted by `(dx, dy)` (background
/// fills vacated pixels) with `jitter` added to every pixel, clamped.
pub fn glyph_sample(class: usize, dx: i32, dy: i32, jitter: i32) -> Result<GrayImage> {
    if dx.unsigned_abs() > MAX_SHIFT as u32 || dy.unsigned_abs() > MAX_SHIFT as u32 {
        return Err(Error::domain(format!("shift ({dx},{dy}) exceeds ±{MAX_SHIFT}")));
    }
    if jitter.unsigned_abs() > MAX_JITTER as u32 {
        return Err(Error::domain(format!("jitter {jitter} exceeds ±{MAX_JITTER}")));
    }
    let base = base_glyph(class)?;
    let n = GLYPH_SIZE as i32;
    let mut px = Vec::with_capacity((n * n) as usize);
    for y in 0..n {
        for x in 0..n {
            let (sx, sy) = (x - dx, y - dy);
            let v = if (0..n).contains(&sx) && (0..n).contains(&sy) {
                base.pixels[(sy * n + sx) as usize]
            } else {
                BACKGROUND
            };
            px.push((v as i32 + jitter).clamp(0, 255) as u8);
        }
    }
    GrayImage::new(GLYPH_SIZE, GLYPH_SIZE, px)
}

fn draw_sample(rng: &mut SplitMix64, class: usize) -> (Tensor<f32>, usize) {
    let dx = rng.next_below(2 * MAX_SHIFT as u64 + 1) as i32 - MAX_SHIFT;
    let dy = rng.next_below(2 * MAX_SHIFT as u64 + 1) as i32 - MAX_SHIFT;
    let jitter = rng.next_below(2 * MAX_JITTER as u64 + 1) as i32 - MAX_JITTER;
    let img = glyph_sample(class, dx, dy, jitter).expect("draws stay within augmentation bounds");
    let tensor = preprocess(&img).expect("glyphs are valid 48x48 images");
    (tensor, class)
}

fn split(rng: &mut SplitMix64, per_class: usize) -> Vec<(Tensor<f32>, usize)> {
    let mut out = Vec::with_capacity(per_class * NUM_CLASSES);
    for class in 0..NUM_CLASSES {
        for _ in 0..per_class {
            out.push(draw_sample(rng, class));
        }
    }
    out
}

/// The full dataset: 50 training and 10 test samples per class
/// (350 train / 70 test), preprocessed to `(1, 48, 48)` tensors in [0, 1].
pub fn glyph_dataset(seed: u64) -> (Vec<(Tensor<f32>, usize)>, Vec<(Tensor<f32>, usize)>) {
    let train = split(&mut SplitMix64::new(seed), TRAIN_PER_CLASS);
    let test = split(&mut SplitMix64::new(seed.wrapping_add(1)), TEST_PER_CLASS);
    (train, test)
}
