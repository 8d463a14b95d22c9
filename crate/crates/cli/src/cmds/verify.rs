//! Self-verification: every suite checks the build against an independent
//! oracle (naive loops, finite differences, brute-force scans) or a frozen
//! fixture. Output is one `PASS`/`FAIL` line per check with the measured
//! error; the command exits 1 if any check fails.

use emocue_core::autodiff::{gradient_suite, verification_model};
use emocue_core::cascade_xml::{parse_cascade, serialize_cascade};
use emocue_core::gradcam::{compute_gradcam, Heatmap};
use emocue_core::haar::{
    detect_multiscale, iou, run_cascade, run_cascade_unstaged, Cascade, Detection, HaarFeature,
    IntegralImage, ScanParams, Stage, Stump, WeightedRect,
};
use emocue_core::image::GrayImage;
use emocue_core::net::{ArchTag, EmotionLabel, LayerSpec, NetworkConfig, NUM_CLASSES};
use emocue_core::recommend::{load_catalog, recommend, serialize_catalog, Catalog, Song};
use emocue_core::rng::SplitMix64;
use emocue_core::tensor::{conv2d, dense, maxpool2d, softmax, ConvSpec, Tensor};
use emocue_core::weights::{expected_file_size, parse_weights, serialize_weights};
use emocue_core::{Error, Result};

use crate::{CliError, CliResult};

/// How many scalars of the two full-layout models the gradient suite probes.
const GRADCHECK_MODEL_SAMPLES: usize = 2000;

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

const SUITE_NAMES: [&str; 8] =
    ["gradcheck", "kernels", "integral", "cascade", "softmax", "gradcam", "shuffle", "roundtrip"];

fn run_suite(name: &str) -> Result<Vec<Check>> {
    match name {
        "gradcheck" => suite_gradcheck(),
        "kernels" => suite_kernels(),
        "integral" => suite_integral(),
        "cascade" => suite_cascade(),
        "softmax" => suite_softmax(),
        "gradcam" => suite_gradcam(),
        "shuffle" => suite_shuffle(),
        "roundtrip" => suite_roundtrip(),
        other => Err(Error::domain(format!("unknown verify suite '{other}'"))),
    }
}

pub fn run(only: &[String]) -> CliResult {
    let selected: Vec<&str> = if only.is_empty() {
        SUITE_NAMES.to_vec()
    } else {
        let mut picked = Vec::new();
        for name in only {
            let name = name.trim();
            match SUITE_NAMES.iter().find(|s| **s == name) {
                Some(s) => picked.push(*s),
                None => {
                    return Err(CliError {
                        code: 5,
                        msg: format!(
                            "unknown verify suite '{name}' (known: {})",
                            SUITE_NAMES.join(", ")
                        ),
                    })
                }
            }
        }
        picked
    };

    let mut total = 0usize;
    let mut failed = 0usize;
    for suite in selected {
        let checks = match run_suite(suite) {
            Ok(checks) => checks,
            // an oracle that cannot even run is a verification failure
            Err(err) => vec![Check::new(format!("{suite}/internal"), false, err.to_string())],
        };
        for check in checks {
            total += 1;
            if !check.pass {
                failed += 1;
            }
            let status = if check.pass { "PASS" } else { "FAIL" };
            println!("{status}  {:<28} {}", check.name, check.detail);
        }
    }
    println!("verify: {total} checks, {failed} failed");
    Ok(if failed == 0 { 0 } else { 1 })
}

// ---------------------------------------------------------------- gradcheck

fn suite_gradcheck() -> Result<Vec<Check>> {
    let sabotage = std::env::var_os("EMOCUE_VERIFY_SABOTAGE").is_some();
    let cases = gradient_suite(GRADCHECK_MODEL_SAMPLES, sabotage)?;
    Ok(cases
        .into_iter()
        .map(|c| {
            Check::new(
                format!("gradcheck/{}", c.name),
                c.pass,
                format!(
                    "max_rel_err={:.3e} (limit {:.1e}, {} scalars checked)",
                    c.max_rel_err, c.threshold, c.checked
                ),
            )
        })
        .collect())
}

// ------------------------------------------------------------------ kernels

/// Naive convolution oracle: quadruple loop, zero padding, no reuse of the
/// engine's layout helpers.
#[allow(clippy::too_many_arguments)]
fn naive_conv(
    input: &[f32],
    (c_in, h, w): (usize, usize, usize),
    kernel: &[f32],
    (c_out, kh, kw): (usize, usize, usize),
    bias: &[f32],
    stride: usize,
    padding: usize,
) -> Vec<f32> {
    let oh = (h + 2 * padding - kh) / stride + 1;
    let ow = (w + 2 * padding - kw) / stride + 1;
    let mut out = vec![0f32; c_out * oh * ow];
    for o in 0..c_out {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = bias[o];
                for c in 0..c_in {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = (oy * stride + ky) as isize - padding as isize;
                            let ix = (ox * stride + kx) as isize - padding as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            let iv = input[c * h * w + iy as usize * w + ix as usize];
                            let kv = kernel[o * c_in * kh * kw + c * kh * kw + ky * kw + kx];
                            acc += iv * kv;
                        }
                    }
                }
                out[o * oh * ow + oy * ow + ox] = acc;
            }
        }
    }
    out
}

fn naive_maxpool(
    input: &[f32],
    (c, h, w): (usize, usize, usize),
    window: usize,
    stride: usize,
) -> Vec<f32> {
    let oh = (h - window) / stride + 1;
    let ow = (w - window) / stride + 1;
    let mut out = vec![0f32; c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f32::NEG_INFINITY;
                for dy in 0..window {
                    for dx in 0..window {
                        let v = input[ch * h * w + (oy * stride + dy) * w + (ox * stride + dx)];
                        if v > best {
                            best = v;
                        }
                    }
                }
                out[ch * oh * ow + oy * ow + ox] = best;
            }
        }
    }
    out
}

fn naive_dense(x: &[f32], weights: &[f32], bias: &[f32], inputs: usize, outputs: usize) -> Vec<f32> {
    let mut out = vec![0f32; outputs];
    for o in 0..outputs {
        let mut acc = bias[o];
        for i in 0..inputs {
            acc += weights[o * inputs + i] * x[i];
        }
        out[o] = acc;
    }
    out
}

fn rand_vec(rng: &mut SplitMix64, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.next_range_f32(-2.0, 2.0)).collect()
}

fn max_abs_diff(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() as f64).fold(0.0, f64::max)
}

fn suite_kernels() -> Result<Vec<Check>> {
    const LIMIT: f64 = 1e-5;
    const INSTANCES: usize = 100;
    let mut rng = SplitMix64::new(0xC0FF_EE01);
    let mut checks = Vec::new();

    let mut worst_conv = 0f64;
    for _ in 0..INSTANCES {
        let c_in = 1 + rng.next_below(3) as usize;
        let c_out = 1 + rng.next_below(3) as usize;
        let kh = 1 + rng.next_below(3) as usize;
        let kw = 1 + rng.next_below(3) as usize;
        let stride = 1 + rng.next_below(2) as usize;
        let oh = 1 + rng.next_below(4) as usize;
        let ow = 1 + rng.next_below(4) as usize;
        let mut padding = rng.next_below(2) as usize;
        if (oh - 1) * stride + kh <= 2 * padding || (ow - 1) * stride + kw <= 2 * padding {
            padding = 0;
        }
        let h = (oh - 1) * stride + kh - 2 * padding;
        let w = (ow - 1) * stride + kw - 2 * padding;

        let input = rand_vec(&mut rng, c_in * h * w);
        let kernel = rand_vec(&mut rng, c_out * c_in * kh * kw);
        let bias = rand_vec(&mut rng, c_out);

        let got = conv2d(
            &Tensor::new(&[c_in, h, w], input.clone())?,
            &Tensor::new(&[c_out, c_in, kh, kw], kernel.clone())?,
            &Tensor::new(&[c_out], bias.clone())?,
            stride,
            padding,
        )?;
        let want = naive_conv(&input, (c_in, h, w), &kernel, (c_out, kh, kw), &bias, stride, padding);
        worst_conv = worst_conv.max(max_abs_diff(got.data(), &want));
    }
    checks.push(Check::new(
        "kernels/conv2d",
        worst_conv <= LIMIT,
        format!("{INSTANCES} instances, max_abs_err={worst_conv:.3e} (limit {LIMIT:.0e})"),
    ));

    let mut worst_pool = 0f64;
    for _ in 0..INSTANCES {
        let c = 1 + rng.next_below(3) as usize;
        let window = 1 + rng.next_below(3) as usize;
        let stride = 1 + rng.next_below(2) as usize;
        let oh = 1 + rng.next_below(5) as usize;
        let ow = 1 + rng.next_below(5) as usize;
        let h = (oh - 1) * stride + window;
        let w = (ow - 1) * stride + window;
        let input = rand_vec(&mut rng, c * h * w);
        let got = maxpool2d(&Tensor::new(&[c, h, w], input.clone())?, window, stride)?;
        let want = naive_maxpool(&input, (c, h, w), window, stride);
        worst_pool = worst_pool.max(max_abs_diff(got.data(), &want));
    }
    checks.push(Check::new(
        "kernels/maxpool2d",
        worst_pool <= LIMIT,
        format!("{INSTANCES} instances, max_abs_err={worst_pool:.3e} (limit {LIMIT:.0e})"),
    ));

    let mut worst_dense = 0f64;
    for _ in 0..INSTANCES {
        let inputs = 1 + rng.next_below(12) as usize;
        let outputs = 1 + rng.next_below(8) as usize;
        let x = rand_vec(&mut rng, inputs);
        let weights = rand_vec(&mut rng, outputs * inputs);
        let bias = rand_vec(&mut rng, outputs);
        let got = dense(
            &Tensor::new(&[inputs], x.clone())?,
            &Tensor::new(&[outputs, inputs], weights.clone())?,
            &Tensor::new(&[outputs], bias.clone())?,
        )?;
        let want = naive_dense(&x, &weights, &bias, inputs, outputs);
        worst_dense = worst_dense.max(max_abs_diff(got.data(), &want));
    }
    checks.push(Check::new(
        "kernels/dense",
        worst_dense <= LIMIT,
        format!("{INSTANCES} instances, max_abs_err={worst_dense:.3e} (limit {LIMIT:.0e})"),
    ));

    Ok(checks)
}

// ----------------------------------------------------------------- integral

fn random_image(rng: &mut SplitMix64, width: usize, height: usize) -> Result<GrayImage> {
    let mut img = GrayImage::filled(width, height, 0)?;
    for y in 0..height {
        for x in 0..width {
            img.set(x, y, rng.next_below(256) as u8);
        }
    }
    Ok(img)
}

fn suite_integral() -> Result<Vec<Check>> {
    let mut rng = SplitMix64::new(0x1234_5678);
    let size = 32usize;
    let mut worst = 0u64;
    let mut rects = 0usize;
    for _ in 0..20 {
        let img = random_image(&mut rng, size, size)?;
        let ii = IntegralImage::new(&img);
        for _ in 0..50 {
            let x = rng.next_below(size as u64) as usize;
            let y = rng.next_below(size as u64) as usize;
            let w = 1 + rng.next_below((size - x) as u64) as usize;
            let h = 1 + rng.next_below((size - y) as u64) as usize;
            let (mut brute, mut brute_sq) = (0u64, 0u64);
            for yy in y..y + h {
                for xx in x..x + w {
                    let v = img.get(xx, yy) as u64;
                    brute += v;
                    brute_sq += v * v;
                }
            }
            let sum_err = ii.rect_sum(x, y, w, h)?.abs_diff(brute);
            let sq_err = ii.rect_sq_sum(x, y, w, h)?.abs_diff(brute_sq);
            worst = worst.max(sum_err).max(sq_err);
            rects += 1;
        }
    }
    Ok(vec![Check::new(
        "integral/rect-sums",
        worst == 0,
        format!("{rects} rectangles on random 32x32 images, max_abs_diff={worst} (exact required)"),
    )])
}

// ------------------------------------------------------------------ cascade

/// One-stage band detector: fires when the bottom half of the window is
/// brighter than the top half.
fn band_cascade(size: u32) -> Cascade {
    Cascade {
        window_width: size,
        window_height: size,
        stages: vec![Stage {
            threshold: 0.0,
            stumps: vec![Stump {
                feature: HaarFeature {
                    rects: vec![
                        WeightedRect { x: 0, y: 0, w: size, h: size, weight: 1.0 },
                        WeightedRect { x: 0, y: 0, w: size, h: size / 2, weight: -2.0 },
                    ],
                },
                threshold: -0.2,
                left: 1.0,
                right: -1.0,
            }],
        }],
    }
}

/// Stamps a 12x12 "eye": dark 200-valued band over the 40-valued background.
fn paint_band(img: &mut GrayImage, x: usize, y: usize, size: usize) {
    for yy in 0..size / 2 {
        for xx in 0..size {
            img.set(x + xx, y + yy, 200);
        }
    }
}

fn random_cascade(rng: &mut SplitMix64, window: u32) -> Cascade {
    let mut stages = Vec::new();
    for _ in 0..3 {
        let mut stumps = Vec::new();
        for _ in 0..(1 + rng.next_below(3)) {
            let mut rects = Vec::new();
            for _ in 0..(2 + rng.next_below(2)) {
                let x = rng.next_below(window as u64 - 1) as u32;
                let y = rng.next_below(window as u64 - 1) as u32;
                let w = 1 + rng.next_below((window - x) as u64) as u32;
                let h = 1 + rng.next_below((window - y) as u64) as u32;
                rects.push(WeightedRect { x, y, w, h, weight: rng.next_range_f32(-2.0, 2.0) });
            }
            stumps.push(Stump {
                feature: HaarFeature { rects },
                threshold: rng.next_range_f32(-0.5, 0.5),
                left: rng.next_range_f32(-1.0, 1.0),
                right: rng.next_range_f32(-1.0, 1.0),
            });
        }
        stages.push(Stage { threshold: rng.next_range_f32(-0.5, 0.5), stumps });
    }
    Cascade { window_width: window, window_height: window, stages }
}

fn suite_cascade() -> Result<Vec<Check>> {
    let mut rng = SplitMix64::new(0xCA5C_ADE0);
    let window = 12u32;
    let cascade = random_cascade(&mut rng, window);
    cascade.validate()?;

    let mut disagreements = 0usize;
    let mut windows = 0usize;
    for _ in 0..10 {
        let img = random_image(&mut rng, 40, 40)?;
        let ii = IntegralImage::new(&img);
        for _ in 0..50 {
            let x = rng.next_below((40 - window) as u64) as usize;
            let y = rng.next_below((40 - window) as u64) as usize;
            let staged = run_cascade(&ii, &cascade, x, y, 1.0)?;
            let unstaged = run_cascade_unstaged(&ii, &cascade, x, y, 1.0)?;
            if staged != unstaged {
                disagreements += 1;
            }
            windows += 1;
        }
    }
    let equivalence = Check::new(
        "cascade/staged-vs-unstaged",
        disagreements == 0,
        format!("{windows} windows on a synthetic 3-stage cascade, {disagreements} disagreements"),
    );

    let planted = Detection { x: 24, y: 14, width: 12, height: 12, neighbors: 0 };
    let mut img = GrayImage::filled(60, 40, 40)?;
    paint_band(&mut img, planted.x, planted.y, 12);
    let detections = detect_multiscale(
        &img,
        &band_cascade(12),
        &ScanParams { scale_factor: 1.25, step: 1.0, min_neighbors: 1 },
    )?;
    let best_iou = detections.iter().map(|d| iou(d, &planted)).fold(0.0, f64::max);
    let planted_check = Check::new(
        "cascade/planted-pattern",
        best_iou >= 0.5,
        format!("{} detections, best IoU={best_iou:.3} (need >= 0.5)", detections.len()),
    );

    Ok(vec![equivalence, planted_check])
}

// ------------------------------------------------------------------ softmax

fn suite_softmax() -> Result<Vec<Check>> {
    let mut rng = SplitMix64::new(0x50F7_5EED);
    let mut worst_dev = 0f64;
    let mut all_finite = true;
    let mut f64_positive = true;
    for _ in 0..10_000 {
        let logits: Vec<f32> = (0..NUM_CLASSES).map(|_| rng.next_range_f32(-80.0, 80.0)).collect();
        let probs = softmax(&Tensor::new(&[NUM_CLASSES], logits.clone())?)?;
        let sum: f64 = probs.data().iter().map(|&p| p as f64).sum();
        worst_dev = worst_dev.max((sum - 1.0).abs());
        all_finite &= probs.data().iter().all(|p| p.is_finite() && *p >= 0.0);

        let logits64: Vec<f64> = logits.iter().map(|&l| l as f64).collect();
        let probs64 = softmax(&Tensor::new(&[NUM_CLASSES], logits64)?)?;
        f64_positive &= probs64.data().iter().all(|&p| p > 0.0);
        let sum64: f64 = probs64.data().iter().sum();
        worst_dev = worst_dev.max((sum64 - 1.0).abs());
    }
    Ok(vec![
        Check::new(
            "softmax/sums-to-one",
            worst_dev <= 1e-6 && all_finite,
            format!("10000 logit vectors in ±80, max |sum-1|={worst_dev:.3e} (limit 1e-6)"),
        ),
        Check::new(
            "softmax/strictly-positive-f64",
            f64_positive,
            "64-bit probabilities stay strictly positive at ±80 logits".to_string(),
        ),
    ])
}

// ------------------------------------------------------------------ gradcam

fn conv_spec(out_ch: usize, in_ch: usize, kernel: usize, padding: usize) -> LayerSpec {
    LayerSpec::Conv(ConvSpec {
        out_channels: out_ch,
        in_channels: in_ch,
        kernel_h: kernel,
        kernel_w: kernel,
        stride: 1,
        padding,
    })
}

fn quadrant_config(size: usize) -> NetworkConfig {
    NetworkConfig {
        tag: ArchTag::Custom,
        input: [1, size, size],
        layers: vec![
            conv_spec(1, 1, 1, 0),
            LayerSpec::Flatten,
            LayerSpec::Dense { inputs: size * size, outputs: NUM_CLASSES },
            LayerSpec::Softmax,
        ],
    }
}

fn small_conv_config(size: usize) -> NetworkConfig {
    NetworkConfig {
        tag: ArchTag::Custom,
        input: [1, size, size],
        layers: vec![
            conv_spec(2, 1, 3, 1),
            LayerSpec::Relu,
            LayerSpec::MaxPool { window: 2, stride: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense { inputs: 2 * (size / 2) * (size / 2), outputs: NUM_CLASSES },
            LayerSpec::Softmax,
        ],
    }
}

fn random_input(rng: &mut SplitMix64, size: usize) -> Result<Tensor<f32>> {
    Tensor::new(&[1, size, size], (0..size * size).map(|_| rng.next_range_f32(-1.0, 1.0)).collect())
}

fn heat_bits(h: &Heatmap) -> Vec<u32> {
    h.values.iter().map(|v| v.to_bits()).collect()
}

fn suite_gradcam() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    // quadrant localization: the logit is wired to the top-left quadrant
    // of an identity conv channel, and the inputs carry their energy there
    let size = 8usize;
    let target = 0usize;
    let mut model = verification_model(&quadrant_config(size), 3)?;
    model.params.get_mut("conv1.weight")?.data_mut()[0] = 1.0;
    model.params.get_mut("conv1.bias")?.data_mut()[0] = 0.0;
    let w = model.params.get_mut("dense1.weight")?;
    for v in w.data_mut() {
        *v = 0.0;
    }
    for y in 0..size / 2 {
        for x in 0..size / 2 {
            w.data_mut()[target * size * size + y * size + x] = 4.0 / (size * size) as f32;
        }
    }
    let mut worst_mass = 1.0f64;
    for seed in 0..10u64 {
        let mut rng = SplitMix64::new(1000 + seed);
        let mut data = vec![0f32; size * size];
        for y in 0..size {
            for x in 0..size {
                let inside = y < size / 2 && x < size / 2;
                data[y * size + x] = if inside {
                    0.5 + 0.5 * rng.next_unit_f32()
                } else {
                    0.000_1 + 0.009_9 * rng.next_unit_f32()
                };
            }
        }
        let heat = compute_gradcam(&model, &Tensor::new(&[1, size, size], data)?, target)?;
        let total: f64 = heat.values.iter().map(|&v| v as f64).sum();
        let mut inside = 0f64;
        for y in 0..size / 2 {
            for x in 0..size / 2 {
                inside += heat.get(y, x) as f64;
            }
        }
        if total > 0.0 {
            worst_mass = worst_mass.min(inside / total);
        } else {
            worst_mass = 0.0;
        }
    }
    checks.push(Check::new(
        "gradcam/quadrant-mass",
        worst_mass >= 0.9,
        format!("10 random positive inputs, min quadrant mass={:.1}% (need >= 90%)", 100.0 * worst_mass),
    ));

    // output-bias shifts change logits but not activations or gradients
    let config = small_conv_config(8);
    let model = verification_model(&config, 21)?;
    let mut rng = SplitMix64::new(77);
    let input = random_input(&mut rng, 8)?;
    let base = compute_gradcam(&model, &input, 4)?;
    let mut shifted = model.clone();
    for v in shifted.params.get_mut("dense1.bias")?.data_mut() {
        *v += 3.75;
    }
    let after = compute_gradcam(&shifted, &input, 4)?;
    checks.push(Check::new(
        "gradcam/bias-shift-invariance",
        heat_bits(&base) == heat_bits(&after),
        "heatmap bits unchanged under +3.75 output-bias shift".to_string(),
    ));

    // range and normalization invariants on random models
    let mut range_ok = true;
    let mut max_ok = true;
    for seed in 0..8u64 {
        let model = verification_model(&config, 100 + seed)?;
        let input = random_input(&mut rng, 8)?;
        let class = (seed % NUM_CLASSES as u64) as usize;
        let heat = compute_gradcam(&model, &input, class)?;
        range_ok &= heat.values.iter().all(|&v| (0.0..=1.0).contains(&v));
        let max = heat.values.iter().copied().fold(0f32, f32::max);
        max_ok &= max == 1.0 || heat.values.iter().all(|&v| v == 0.0);
    }
    checks.push(Check::new(
        "gradcam/range-and-max",
        range_ok && max_ok,
        "8 random models: values in [0,1], max exactly 1 on nonzero maps".to_string(),
    ));

    Ok(checks)
}

// ------------------------------------------------------------------ shuffle

fn suite_shuffle() -> Result<Vec<Check>> {
    let emotion = EmotionLabel::Happy;
    let songs: Vec<Song> = (0..5)
        .map(|i| Song {
            id: format!("s{i}"),
            title: format!("Song {i}"),
            artist: "Verifier".to_string(),
            emotion,
            uri: format!("local://verify/{i}"),
        })
        .collect();
    let catalog = Catalog::from_songs(songs)?;

    let mut first_slot = [0usize; 5];
    let trials = 10_000u64;
    for seed in 0..trials {
        let playlist = recommend(&catalog, emotion, 5, seed)?;
        let first = &playlist.song_ids[0];
        let idx: usize = first[1..].parse().map_err(|_| Error::domain("bad id"))?;
        first_slot[idx] += 1;
    }
    let shares: Vec<f64> = first_slot.iter().map(|&c| c as f64 / trials as f64).collect();
    let min_share = shares.iter().copied().fold(1.0, f64::min);
    let max_share = shares.iter().copied().fold(0.0, f64::max);
    let uniform = Check::new(
        "shuffle/uniformity",
        min_share >= 0.15 && max_share <= 0.25,
        format!(
            "10000 seeds, first-slot shares in [{min_share:.3}, {max_share:.3}] (need within [0.15, 0.25])"
        ),
    );

    let a = recommend(&catalog, emotion, 5, 12_345)?;
    let b = recommend(&catalog, emotion, 5, 12_345)?;
    let deterministic = Check::new(
        "shuffle/determinism",
        a.song_ids == b.song_ids,
        "same seed twice yields the same order".to_string(),
    );

    Ok(vec![uniform, deterministic])
}

// ---------------------------------------------------------------- roundtrip

const CATALOG_FIXTURE: &str = include_str!("../../../../fixtures/sample_catalog.csv");

fn suite_roundtrip() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    // weights: serialize -> parse is bit-exact, byte length is closed-form
    let config = NetworkConfig::light();
    let model = verification_model(&config, 7)?;
    let bytes = serialize_weights(&model)?;
    let size_ok = bytes.len() == expected_file_size(&config)?;
    let reparsed = parse_weights(&bytes, &config)?;
    let mut bits_ok = true;
    let mut tensors = 0usize;
    for (name, tensor) in model.params.iter() {
        let other = reparsed.params.get(name)?;
        bits_ok &= tensor.shape() == other.shape();
        bits_ok &= tensor
            .data()
            .iter()
            .zip(other.data())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        tensors += 1;
    }
    let bytes_again = serialize_weights(&reparsed)?;
    checks.push(Check::new(
        "roundtrip/weights",
        size_ok && bits_ok && bytes == bytes_again,
        format!("{tensors} tensors bit-exact, {} bytes, closed-form length matches", bytes.len()),
    ));

    // cascade: serialize -> parse -> serialize is a fixed point
    let cascade = band_cascade(12);
    let xml = serialize_cascade(&cascade);
    let parsed = parse_cascade(&xml)?;
    let xml_again = serialize_cascade(&parsed);
    checks.push(Check::new(
        "roundtrip/cascade",
        cascade == parsed && xml == xml_again,
        format!("parse . serialize fixed point over {} bytes of XML", xml.len()),
    ));

    // catalog: load -> serialize -> load preserves every song
    let catalog = load_catalog(CATALOG_FIXTURE)?;
    let csv = serialize_catalog(&catalog)?;
    let reloaded = load_catalog(&csv)?;
    let csv_again = serialize_catalog(&reloaded)?;
    let counts = catalog.counts();
    let want_counts = [20, 20, 16, 20, 30, 20, 20]; // label order: Angry..Neutral
    checks.push(Check::new(
        "roundtrip/catalog",
        catalog.songs() == reloaded.songs() && csv == csv_again && counts == want_counts,
        format!("{} songs load/serialize identical, counts {counts:?}", catalog.len()),
    ));

    Ok(checks)
}
