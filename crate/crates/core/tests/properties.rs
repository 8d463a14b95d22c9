//! Property tests over randomized instances: shape laws, algebraic
//! identities of the numeric kernels, cascade scan determinism, and
//! catalog/playlist totality.

use emocue_core::glyphs;
use emocue_core::haar::{
    detect_multiscale, Cascade, HaarFeature, ScanParams, Stage, Stump, WeightedRect,
};
use emocue_core::image::GrayImage;
use emocue_core::net::{self, ArchTag, EmotionLabel, LayerSpec, NetworkConfig};
use emocue_core::recommend::{load_catalog, recommend, serialize_catalog, Catalog, Song};
use emocue_core::rng::SplitMix64;
use emocue_core::tensor::{self, ConvSpec, Tensor};
use proptest::prelude::*;

fn random_tensor(shape: &[usize], seed: u64, lo: f32, hi: f32) -> Tensor<f32> {
    let mut rng = SplitMix64::new(seed);
    let n: usize = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.next_range_f32(lo, hi)).collect()).unwrap()
}

proptest! {
    #[test]
    fn conv_output_shape_is_a_pure_function_of_geometry(
        in_c in 1usize..=3,
        out_c in 1usize..=3,
        h in 1usize..=10,
        w in 1usize..=10,
        kh in 1usize..=4,
        kw in 1usize..=4,
        stride in 1usize..=3,
        padding in 0usize..=2,
        seed in any::<u64>(),
    ) {
        prop_assume!(h + 2 * padding >= kh && w + 2 * padding >= kw);
        let input = random_tensor(&[in_c, h, w], seed, -1.0, 1.0);
        let kernel = random_tensor(&[out_c, in_c, kh, kw], seed ^ 1, -1.0, 1.0);
        let bias = random_tensor(&[out_c], seed ^ 2, -1.0, 1.0);
        let out = tensor::conv2d(&input, &kernel, &bias, stride, padding).unwrap();
        let oh = (h + 2 * padding - kh) / stride + 1;
        let ow = (w + 2 * padding - kw) / stride + 1;
        prop_assert_eq!(out.shape(), &[out_c, oh, ow]);
        prop_assert!(out.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn maxpool_output_shape_is_a_pure_function_of_geometry(
        c in 1usize..=3,
        h in 1usize..=10,
        w in 1usize..=10,
        window in 1usize..=3,
        stride in 1usize..=3,
        seed in any::<u64>(),
    ) {
        prop_assume!(h >= window && w >= window);
        let input = random_tensor(&[c, h, w], seed, -1.0, 1.0);
        let out = tensor::maxpool2d(&input, window, stride).unwrap();
        let oh = (h - window) / stride + 1;
        let ow = (w - window) / stride + 1;
        prop_assert_eq!(out.shape(), &[c, oh, ow]);
    }

    #[test]
    fn conv_is_linear_in_the_input(
        seed in any::<u64>(),
        a in -2.0f32..2.0,
        b in -2.0f32..2.0,
    ) {
        let x = random_tensor(&[2, 6, 6], seed, -1.0, 1.0);
        let y = random_tensor(&[2, 6, 6], seed ^ 3, -1.0, 1.0);
        let kernel = random_tensor(&[3, 2, 3, 3], seed ^ 4, -1.0, 1.0);
        let zero_bias = Tensor::new(&[3], vec![0.0; 3]).unwrap();

        let mixed_data: Vec<f32> = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(xv, yv)| a * xv + b * yv)
            .collect();
        let mixed = Tensor::new(&[2, 6, 6], mixed_data).unwrap();

        let lhs = tensor::conv2d(&mixed, &kernel, &zero_bias, 1, 1).unwrap();
        let cx = tensor::conv2d(&x, &kernel, &zero_bias, 1, 1).unwrap();
        let cy = tensor::conv2d(&y, &kernel, &zero_bias, 1, 1).unwrap();
        for ((l, xv), yv) in lhs.data().iter().zip(cx.data()).zip(cy.data()) {
            let rhs = a * xv + b * yv;
            prop_assert!(
                (l - rhs).abs() <= 1e-4 * rhs.abs().max(1.0),
                "conv(a·x + b·y) = {l} vs a·conv(x) + b·conv(y) = {rhs}"
            );
        }
    }

    #[test]
    fn maxpool_commutes_with_adding_a_constant(
        seed in any::<u64>(),
        c in -10.0f32..10.0,
        window in 1usize..=3,
        stride in 1usize..=2,
    ) {
        let x = random_tensor(&[2, 7, 7], seed, -5.0, 5.0);
        let shifted_data: Vec<f32> = x.data().iter().map(|v| v + c).collect();
        let shifted = Tensor::new(&[2, 7, 7], shifted_data).unwrap();

        let pooled_then_shift: Vec<f32> = tensor::maxpool2d(&x, window, stride)
            .unwrap()
            .data()
            .iter()
            .map(|v| v + c)
            .collect();
        let shift_then_pooled = tensor::maxpool2d(&shifted, window, stride).unwrap();
        prop_assert_eq!(shift_then_pooled.data(), &pooled_then_shift[..]);
    }

    #[test]
    fn kernels_map_finite_inputs_to_finite_outputs(
        seed in any::<u64>(),
        scale in 1.0f32..1000.0,
    ) {
        let x = random_tensor(&[2, 8, 8], seed, -scale, scale);
        let kernel = random_tensor(&[3, 2, 3, 3], seed ^ 5, -scale, scale);
        let bias = random_tensor(&[3], seed ^ 6, -scale, scale);
        let conv = tensor::conv2d(&x, &kernel, &bias, 1, 1).unwrap();
        prop_assert!(conv.data().iter().all(|v| v.is_finite()));
        let act = tensor::relu(&conv);
        prop_assert!(act.data().iter().all(|v| v.is_finite()));
        let pooled = tensor::maxpool2d(&act, 2, 2).unwrap();
        prop_assert!(pooled.data().iter().all(|v| v.is_finite()));
        let gap = tensor::global_avg_pool(&pooled).unwrap();
        prop_assert!(gap.data().iter().all(|v| v.is_finite()));
        let w = random_tensor(&[7, 3], seed ^ 7, -scale, scale);
        let b = random_tensor(&[7], seed ^ 8, -scale, scale);
        let logits = tensor::dense(&gap, &w, &b).unwrap();
        prop_assert!(logits.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn relu_is_idempotent_and_nonnegative(seed in any::<u64>()) {
        let x = random_tensor(&[3, 5, 5], seed, -100.0, 100.0);
        let once = tensor::relu(&x);
        let twice = tensor::relu(&once);
        prop_assert!(once.data().iter().all(|v| *v >= 0.0));
        prop_assert_eq!(once.data(), twice.data());
    }
}

#[test]
fn softmax_sums_to_one_and_f64_stays_strictly_positive() {
    let mut rng = SplitMix64::new(0x50F7_5EED);
    for trial in 0..10_000u32 {
        let logits: Vec<f32> = (0..7).map(|_| rng.next_range_f32(-80.0, 80.0)).collect();
        let t32 = Tensor::new(&[7], logits.clone()).unwrap();
        let p32 = tensor::softmax(&t32).unwrap();
        let sum32: f64 = p32.data().iter().map(|&p| p as f64).sum();
        assert!(
            (sum32 - 1.0).abs() <= 1e-6,
            "trial {trial}: f32 softmax sums to {sum32}"
        );
        assert!(p32.data().iter().all(|p| p.is_finite() && *p >= 0.0));

        // strict positivity is guaranteed in the 64-bit path: the worst
        // shifted logit here is -160 and exp(-160) ≈ 2.6e-70 > f64::MIN_POSITIVE
        let t64 = Tensor::new(&[7], logits.iter().map(|&v| v as f64).collect::<Vec<f64>>()).unwrap();
        let p64 = tensor::softmax(&t64).unwrap();
        let sum64: f64 = p64.data().iter().sum();
        assert!((sum64 - 1.0).abs() <= 1e-6);
        assert!(
            p64.data().iter().all(|p| *p > 0.0),
            "trial {trial}: f64 softmax produced a non-positive probability"
        );
    }
}

/// Single-stage cascade that fires where the window's bottom half is
/// brighter than its top half.
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

fn paint_band(img: &mut GrayImage, x: usize, y: usize, size: usize) {
    for py in 0..size {
        let v = if py < size / 2 { 200 } else { 40 };
        for px in 0..size {
            img.set(x + px, y + py, v);
        }
    }
}

#[test]
fn detect_multiscale_is_deterministic_and_canonically_sorted() {
    let cascade = band_cascade(8);
    cascade.validate().unwrap();
    let mut img = GrayImage::filled(64, 48, 120).unwrap();
    paint_band(&mut img, 10, 6, 8);
    paint_band(&mut img, 40, 28, 16);
    let params = ScanParams { scale_factor: 1.25, step: 1.0, min_neighbors: 1 };

    let first = detect_multiscale(&img, &cascade, &params).unwrap();
    let second = detect_multiscale(&img, &cascade, &params).unwrap();
    assert_eq!(first, second, "identical inputs must give identical detections");
    assert!(!first.is_empty());
    for pair in first.windows(2) {
        let a = (&pair[0]).clone();
        let b = (&pair[1]).clone();
        assert!(
            (a.y, a.x, a.width) <= (b.y, b.x, b.width),
            "detections must be sorted by (y, x, width)"
        );
    }
}

#[test]
fn classify_agrees_on_exact_2x_nearest_neighbor_upsampling() {
    // the upsampled image resamples back to (nearly) the same network
    // input, so probabilities should move very little
    let nn_upsample = |img: &GrayImage| -> GrayImage {
        let mut pixels = Vec::with_capacity(img.width * img.height * 4);
        for y in 0..img.height * 2 {
            for x in 0..img.width * 2 {
                pixels.push(img.get(x / 2, y / 2));
            }
        }
        GrayImage::new(img.width * 2, img.height * 2, pixels).unwrap()
    };

    let glorot = net::build_model(&NetworkConfig::fernet9(), 11).unwrap();
    let wide = emocue_core::autodiff::verification_model(
        &NetworkConfig {
            tag: ArchTag::Fernet9,
            input: [1, 48, 48],
            layers: vec![
                LayerSpec::Conv(ConvSpec {
                    out_channels: 4,
                    in_channels: 1,
                    kernel_h: 3,
                    kernel_w: 3,
                    stride: 1,
                    padding: 1,
                }),
                LayerSpec::Relu,
                LayerSpec::MaxPool { window: 4, stride: 4 },
                LayerSpec::Flatten,
                LayerSpec::Dense { inputs: 576, outputs: 7 },
                LayerSpec::Softmax,
            ],
        },
        19,
    )
    .unwrap();

    for model in [&glorot, &wide] {
        for class in 0..7 {
            let img = glyphs::base_glyph(class).unwrap();
            let up = nn_upsample(&img);
            let p1 = net::classify(model, &img).unwrap().probabilities;
            let p2 = net::classify(model, &up).unwrap().probabilities;
            let linf = p1
                .iter()
                .zip(&p2)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f32, f32::max);
            assert!(
                linf <= 0.05,
                "class {class}: probability vectors differ by {linf} in L∞"
            );
        }
    }
}

fn song_strategy(i: usize) -> impl Strategy<Value = Song> {
    (".*", ".*", ".*", 0usize..7).prop_map(move |(title, artist, uri, emotion)| Song {
        id: format!("s{i:03}"),
        title,
        artist,
        emotion: EmotionLabel::from_index(emotion).unwrap(),
        uri,
    })
}

fn catalog_strategy() -> impl Strategy<Value = Catalog> {
    (0usize..30)
        .prop_flat_map(|n| {
            let songs: Vec<_> = (0..n).map(song_strategy).collect();
            songs
        })
        .prop_map(|songs| Catalog::from_songs(songs).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn playlists_are_pure_and_length_lawful(
        catalog in catalog_strategy(),
        emotion_idx in 0usize..7,
        count in 1usize..=20,
        seed in any::<u64>(),
    ) {
        let emotion = EmotionLabel::from_index(emotion_idx).unwrap();
        let playlist = recommend(&catalog, emotion, count, seed).unwrap();

        prop_assert_eq!(playlist.song_ids.len(), count.min(catalog.count_for(emotion)));
        prop_assert_eq!(playlist.no_songs_for_emotion, catalog.count_for(emotion) == 0);

        let mut unique = playlist.song_ids.clone();
        unique.sort();
        unique.dedup();
        prop_assert_eq!(unique.len(), playlist.song_ids.len(), "duplicate ids in playlist");

        for id in &playlist.song_ids {
            let song = catalog.songs().iter().find(|s| &s.id == id).expect("id from catalog");
            prop_assert_eq!(song.emotion, emotion, "song {} carries the wrong emotion", id);
        }

        let again = recommend(&catalog, emotion, count, seed).unwrap();
        prop_assert_eq!(playlist, again, "recommend must be deterministic");
    }

    #[test]
    fn catalog_serialization_round_trips(catalog in catalog_strategy()) {
        let text = serialize_catalog(&catalog).unwrap();
        let back = load_catalog(&text).unwrap();
        prop_assert_eq!(catalog, back);
    }
}
