//! Command-level behavior: documented examples, error paths, exit codes,
//! and output formats.

mod common;

use std::fs;

use common::{emocue, emocue_env, fixture, probs_of};

// ------------------------------------------------------------------ detect

#[test]
fn detect_rejecting_cascade_prints_empty_array() {
    let run = emocue(&[
        "detect",
        &fixture("two_eyes.pgm"),
        &fixture("reject_all_cascade.xml"),
        "--json-indent",
        "0",
    ]);
    assert_eq!(run.code(), 0);
    assert_eq!(run.stdout().trim(), "[]");
}

#[test]
fn detect_planted_patterns_overlap_truth() {
    let run = emocue(&[
        "detect",
        &fixture("two_eyes.pgm"),
        &fixture("eye_cascade.xml"),
        "--scale-factor",
        "2.0",
        "--min-neighbors",
        "1",
    ]);
    assert_eq!(run.code(), 0);
    let boxes = run.json();
    let boxes = boxes.as_array().unwrap();
    assert_eq!(boxes.len(), 2, "expected one detection per planted band");

    let planted = [(4i64, 10i64), (48, 10)];
    for (det, (px, py)) in boxes.iter().zip(planted) {
        let (x, y) = (det["x"].as_i64().unwrap(), det["y"].as_i64().unwrap());
        let (w, h) = (det["w"].as_i64().unwrap(), det["h"].as_i64().unwrap());
        let ix = (x.max(px) - (x + w).min(px + 12)).min(0).abs();
        let iy = (y.max(py) - (y + h).min(py + 12)).min(0).abs();
        let inter = ix * iy;
        let union = w * h + 144 - inter;
        assert!(
            inter as f64 / union as f64 >= 0.5,
            "detection {det} misses planted box at ({px},{py})"
        );
    }
}

#[test]
fn detect_output_is_canonically_sorted() {
    let run = emocue(&[
        "detect",
        &fixture("two_eyes.pgm"),
        &fixture("eye_cascade.xml"),
        "--scale-factor",
        "2.0",
        "--min-neighbors",
        "1",
    ]);
    let json = run.json();
    let boxes = json.as_array().unwrap();
    let keys: Vec<(i64, i64, i64)> = boxes
        .iter()
        .map(|d| (d["y"].as_i64().unwrap(), d["x"].as_i64().unwrap(), d["w"].as_i64().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn detect_missing_file_is_io_error() {
    let run = emocue(&["detect", "/nonexistent/input.pgm", &fixture("eye_cascade.xml")]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("error"));
}

#[test]
fn detect_malformed_cascade_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xml");
    fs::write(&bad, "<opencv_storage><cascade>truncated").unwrap();
    let run = emocue(&["detect", &fixture("two_eyes.pgm"), bad.to_str().unwrap()]);
    assert_eq!(run.code(), 3, "stderr: {}", run.stderr());
}

// ---------------------------------------------------------------- classify

#[test]
fn classify_zero_weights_is_uniform_and_angry() {
    let run = emocue(&[
        "classify",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        "--config",
        "light",
    ]);
    assert_eq!(run.code(), 0);
    let json = run.json();
    assert_eq!(json["label"], "Angry");
    for p in probs_of(&json) {
        assert!((p - 1.0 / 7.0).abs() < 1e-7, "probability {p} is not uniform");
    }
    // probabilities echo 9 significant digits: 1/7 as f32 prints exactly so
    assert_eq!(run.stdout().matches("1.42857149e-1").count(), 7);
}

#[test]
fn classify_routing_fixture_is_happy() {
    let run = emocue(&[
        "classify",
        &fixture("quadrant_face.pgm"),
        &fixture("quadrant_weights_light.femr"),
        "--config",
        "light",
    ]);
    assert_eq!(run.code(), 0);
    assert_eq!(run.json()["label"], "Happy");
}

#[test]
fn classify_truncated_weights_is_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = fs::read(fixture("zero_weights_light.femr")).unwrap();
    let truncated = dir.path().join("truncated.femr");
    fs::write(&truncated, &bytes[..bytes.len() / 2]).unwrap();
    let run = emocue(&[
        "classify",
        &fixture("face.pgm"),
        truncated.to_str().unwrap(),
        "--config",
        "light",
    ]);
    assert_eq!(run.code(), 4, "stderr: {}", run.stderr());
    assert!(run.stderr().contains("truncated"));
}

#[test]
fn classify_wrong_config_for_weights_is_format_class_error() {
    let run = emocue(&[
        "classify",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        "--config",
        "fernet9",
    ]);
    assert_eq!(run.code(), 4, "stderr: {}", run.stderr());
}

// ----------------------------------------------------------------- explain

#[test]
fn explain_alpha_zero_replicates_grayscale() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("overlay.ppm");
    let run = emocue(&[
        "explain",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        out.to_str().unwrap(),
        "--config",
        "light",
        "--alpha",
        "0",
    ]);
    assert_eq!(run.code(), 0, "stderr: {}", run.stderr());

    let gray = emocue_core::image::read_pgm(std::path::Path::new(&fixture("face.pgm"))).unwrap();
    let ppm = fs::read(&out).unwrap();
    let mut parts = ppm.splitn(5, |b| b.is_ascii_whitespace());
    assert_eq!(parts.next().unwrap(), b"P6");
    let w: usize = std::str::from_utf8(parts.next().unwrap()).unwrap().parse().unwrap();
    let h: usize = std::str::from_utf8(parts.next().unwrap()).unwrap().parse().unwrap();
    assert_eq!(parts.next().unwrap(), b"255");
    let rgb = parts.next().unwrap();
    assert_eq!((w, h), (gray.width, gray.height));
    assert_eq!(rgb.len(), 3 * w * h);
    for (i, px) in gray.pixels.iter().enumerate() {
        assert_eq!(&rgb[3 * i..3 * i + 3], &[*px, *px, *px], "pixel {i} differs");
    }
}

#[test]
fn explain_quadrant_fixture_localizes_mass_in_raw_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("overlay.ppm");
    let raw = dir.path().join("raw.pgm");
    let run = emocue(&[
        "explain",
        &fixture("quadrant_face.pgm"),
        &fixture("quadrant_weights_light.femr"),
        out.to_str().unwrap(),
        "--config",
        "light",
        "--raw-map",
        raw.to_str().unwrap(),
    ]);
    assert_eq!(run.code(), 0, "stderr: {}", run.stderr());
    assert_eq!(run.json()["label"], "Happy");

    let text = fs::read_to_string(&raw).unwrap();
    let mut tokens = text.split_ascii_whitespace();
    assert_eq!(tokens.next(), Some("P2"));
    let w: usize = tokens.next().unwrap().parse().unwrap();
    let h: usize = tokens.next().unwrap().parse().unwrap();
    assert_eq!((w, h), (48, 48));
    assert_eq!(tokens.next(), Some("255"));
    let values: Vec<u64> = tokens.map(|t| t.parse().unwrap()).collect();
    assert_eq!(values.len(), 48 * 48);

    let total: u64 = values.iter().sum();
    let values = &values;
    let quadrant: u64 = (0..24).flat_map(|y| (0..24).map(move |x| values[y * 48 + x])).sum();
    assert!(total > 0);
    let mass = quadrant as f64 / total as f64;
    assert!(mass >= 0.9, "quadrant mass {mass:.3} below 0.9");
}

#[test]
fn explain_class_flag_overrides_predicted_label() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("overlay.ppm");
    let run = emocue(&[
        "explain",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        out.to_str().unwrap(),
        "--config",
        "light",
        "--class",
        "2",
    ]);
    assert_eq!(run.code(), 0);
    assert_eq!(run.json()["label"], "Fear");
    assert!(out.exists());
}

#[test]
fn explain_class_out_of_range_is_argument_error() {
    let run = emocue(&[
        "explain",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        "/tmp/never_written.ppm",
        "--config",
        "light",
        "--class",
        "9",
    ]);
    assert_eq!(run.code(), 5);
    assert!(run.stderr().contains("range"), "stderr: {}", run.stderr());
}

#[test]
fn explain_unwritable_output_is_io_error() {
    let run = emocue(&[
        "explain",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        "/nonexistent_dir/overlay.ppm",
        "--config",
        "light",
    ]);
    assert_eq!(run.code(), 2, "stderr: {}", run.stderr());
}

// --------------------------------------------------------------- recommend

#[test]
fn recommend_sad_returns_thirty() {
    let run = emocue(&[
        "recommend",
        &fixture("sample_catalog.csv"),
        "--emotion",
        "Sad",
        "--count",
        "30",
    ]);
    assert_eq!(run.code(), 0);
    let json = run.json();
    assert_eq!(json["emotion"], "Sad");
    assert_eq!(json["songs"].as_array().unwrap().len(), 30);
}

#[test]
fn recommend_fear_caps_at_availability() {
    let run = emocue(&[
        "recommend",
        &fixture("sample_catalog.csv"),
        "--emotion",
        "Fear",
        "--count",
        "99",
    ]);
    assert_eq!(run.code(), 0);
    assert_eq!(run.json()["songs"].as_array().unwrap().len(), 16);
}

#[test]
fn recommend_seed_repeats_byte_identically_and_defaults_to_42() {
    let args = ["recommend", &fixture("sample_catalog.csv"), "--emotion", "Happy", "--seed", "7"];
    let a = emocue(&args);
    let b = emocue(&args);
    assert_eq!(a.code(), 0);
    assert_eq!(a.stdout(), b.stdout());

    let default_run =
        emocue(&["recommend", &fixture("sample_catalog.csv"), "--emotion", "Happy"]);
    let explicit_run = emocue(&[
        "recommend",
        &fixture("sample_catalog.csv"),
        "--emotion",
        "Happy",
        "--seed",
        "42",
    ]);
    assert_eq!(default_run.stdout(), explicit_run.stdout());
    assert_eq!(default_run.json()["seed"], 42);
}

#[test]
fn recommend_unknown_emotion_is_argument_error() {
    let run = emocue(&[
        "recommend",
        &fixture("sample_catalog.csv"),
        "--emotion",
        "Melancholy",
    ]);
    assert_eq!(run.code(), 5);
    assert!(run.stderr().contains("Melancholy"));
}

#[test]
fn recommend_zero_count_is_argument_error() {
    let run = emocue(&[
        "recommend",
        &fixture("sample_catalog.csv"),
        "--emotion",
        "Happy",
        "--count",
        "0",
    ]);
    assert_eq!(run.code(), 5);
}

#[test]
fn recommend_bad_header_is_parse_class_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,name,artist,emotion,uri\nx,y,z,Happy,u\n").unwrap();
    let run = emocue(&["recommend", bad.to_str().unwrap(), "--emotion", "Happy"]);
    assert_eq!(run.code(), 3, "stderr: {}", run.stderr());
}

// ---------------------------------------------------------------- pipeline

#[test]
fn pipeline_full_frame_example() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let run = emocue(&[
        "pipeline",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        &fixture("reject_all_cascade.xml"),
        &fixture("sample_catalog.csv"),
        out_dir.to_str().unwrap(),
        "--config",
        "light",
        "--count",
        "25",
        "--seed",
        "7",
    ]);
    assert_eq!(run.code(), 0, "stderr: {}", run.stderr());
    let json = run.json();
    assert_eq!(json["roi_used"], "FULL_FRAME");
    assert_eq!(json["detections"].as_array().unwrap().len(), 0);
    assert_eq!(json["label"], "Angry");
    assert_eq!(json["playlist"]["emotion"], "Angry");
    assert_eq!(json["playlist"]["seed"], 7);
    assert_eq!(json["playlist"]["songs"].as_array().unwrap().len(), 20);
    assert!(out_dir.join("heatmap.ppm").exists());
    assert!(!out_dir.join("eye_0.pgm").exists());

    // probabilities in the report sum to 1
    let sum: f64 = probs_of(&json).iter().sum();
    assert!((sum - 1.0).abs() < 1e-6);
}

#[test]
fn pipeline_eyes_probabilities_are_roi_means() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let run = emocue(&[
        "pipeline",
        &fixture("two_eyes.pgm"),
        &fixture("random_weights_light.femr"),
        &fixture("eye_cascade.xml"),
        &fixture("sample_catalog.csv"),
        out_dir.to_str().unwrap(),
        "--config",
        "light",
        "--scale-factor",
        "2.0",
        "--min-neighbors",
        "1",
    ]);
    assert_eq!(run.code(), 0, "stderr: {}", run.stderr());
    let json = run.json();
    assert_eq!(json["roi_used"], "EYES");
    assert_eq!(json["detections"].as_array().unwrap().len(), 2);

    // cross-check: classify each saved crop and average
    let mut means = vec![0f64; 7];
    for eye in ["eye_0.pgm", "eye_1.pgm"] {
        let crop = out_dir.join(eye);
        assert!(crop.exists(), "missing saved crop {eye}");
        let cls = emocue(&[
            "classify",
            crop.to_str().unwrap(),
            &fixture("random_weights_light.femr"),
            "--config",
            "light",
        ]);
        assert_eq!(cls.code(), 0);
        for (m, p) in means.iter_mut().zip(probs_of(&cls.json())) {
            *m += p / 2.0;
        }
    }
    let reported = probs_of(&json);
    for (m, r) in means.iter().zip(&reported) {
        assert!((m - r).abs() <= 1e-6, "mean {m} vs reported {r}");
    }
    // the two crops must not be identical, or the mean check is vacuous
    let p0 = fs::read(out_dir.join("eye_0.pgm")).unwrap();
    let p1 = fs::read(out_dir.join("eye_1.pgm")).unwrap();
    assert_ne!(p0, p1);
}

#[test]
fn pipeline_stage_errors_name_the_stage_and_clean_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let run = emocue(&[
        "pipeline",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        &fixture("reject_all_cascade.xml"),
        "/nonexistent/catalog.csv",
        out_dir.to_str().unwrap(),
        "--config",
        "light",
    ]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("load-catalog"), "stderr: {}", run.stderr());

    // block the heatmap write after the eye crops land: crops get removed
    let blocked = dir.path().join("blocked");
    fs::create_dir_all(blocked.join("heatmap.ppm")).unwrap();
    let run = emocue(&[
        "pipeline",
        &fixture("two_eyes.pgm"),
        &fixture("random_weights_light.femr"),
        &fixture("eye_cascade.xml"),
        &fixture("sample_catalog.csv"),
        blocked.to_str().unwrap(),
        "--config",
        "light",
        "--scale-factor",
        "2.0",
        "--min-neighbors",
        "1",
    ]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("write-outputs"), "stderr: {}", run.stderr());
    assert!(!blocked.join("eye_0.pgm").exists(), "partial eye crop left behind");
    assert!(!blocked.join("eye_1.pgm").exists(), "partial eye crop left behind");
}

#[test]
fn pipeline_probabilities_match_cmd_classify_on_full_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let pipe = emocue(&[
        "pipeline",
        &fixture("quadrant_face.pgm"),
        &fixture("random_weights_light.femr"),
        &fixture("reject_all_cascade.xml"),
        &fixture("sample_catalog.csv"),
        out_dir.to_str().unwrap(),
        "--config",
        "light",
    ]);
    assert_eq!(pipe.code(), 0, "stderr: {}", pipe.stderr());
    let cls = emocue(&[
        "classify",
        &fixture("quadrant_face.pgm"),
        &fixture("random_weights_light.femr"),
        "--config",
        "light",
    ]);
    assert_eq!(probs_of(&pipe.json()), probs_of(&cls.json()));
    assert_eq!(pipe.json()["label"], cls.json()["label"]);
}

// ------------------------------------------------------------------ verify

#[test]
fn verify_only_flag_runs_exactly_that_suite() {
    let run = emocue(&["verify", "--only", "roundtrip"]);
    assert_eq!(run.code(), 0);
    let stdout = run.stdout();
    for line in stdout.lines() {
        if line.starts_with("PASS") || line.starts_with("FAIL") {
            assert!(line.contains("roundtrip/"), "foreign suite in output: {line}");
        }
    }
    assert!(stdout.contains("verify: 3 checks, 0 failed"));
}

#[test]
fn verify_sabotage_hook_fails_loudly_and_names_checks() {
    let run = emocue_env(&["verify", "--only", "gradcheck"], &[("EMOCUE_VERIFY_SABOTAGE", "1")]);
    assert_eq!(run.code(), 1, "sabotaged build must fail verification");
    let stdout = run.stdout();
    assert!(stdout.contains("FAIL  gradcheck/conv2d"), "stdout: {stdout}");
    assert!(stdout.contains("FAIL  gradcheck/fernet9_toy_width"), "stdout: {stdout}");
}

#[test]
fn verify_unknown_suite_is_argument_error() {
    let run = emocue(&["verify", "--only", "bogus"]);
    assert_eq!(run.code(), 5);
    assert!(run.stderr().contains("bogus"));
}

// --------------------------------------------------------------- train-toy

#[test]
fn train_toy_zero_epochs_stays_at_chance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("init.femr");
    let run = emocue(&["train-toy", out.to_str().unwrap(), "--epochs", "0"]);
    assert_eq!(run.code(), 0, "stderr: {}", run.stderr());
    let acc = run.json()["test_accuracy"].as_f64().unwrap();
    assert!(acc < 0.5, "untrained accuracy {acc} suspiciously high");

    // weights equal initialization: an untouched build_model with the same seed
    let config = emocue_core::net::NetworkConfig::light();
    let init = emocue_core::net::build_model(&config, 42).unwrap();
    let loaded = emocue_core::weights::load_weights(&out, &config).unwrap();
    for (name, tensor) in init.params.iter() {
        let other = loaded.params.get(name).unwrap();
        assert_eq!(
            tensor.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            other.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            "tensor {name} changed despite --epochs 0"
        );
    }
    // loss CSV exists and holds only the header
    assert_eq!(fs::read_to_string(dir.path().join("init.femr.loss.csv")).unwrap(), "epoch,mean_loss\n");
}

#[test]
fn train_toy_invalid_config_is_argument_error() {
    let run = emocue(&["train-toy", "/tmp/never.femr", "--config", "bogus"]);
    assert_eq!(run.code(), 5);
}

// ----------------------------------------------------------------- globals

#[test]
fn json_indent_controls_formatting() {
    let compact = emocue(&[
        "classify",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        "--config",
        "light",
        "--json-indent",
        "0",
    ]);
    assert_eq!(compact.stdout().trim().lines().count(), 1);

    let pretty = emocue(&[
        "classify",
        &fixture("face.pgm"),
        &fixture("zero_weights_light.femr"),
        "--config",
        "light",
    ]);
    assert!(pretty.stdout().starts_with("{\n  \"label\""), "default output is 2-space indented");
    // both parse to the same value
    assert_eq!(compact.json(), pretty.json());
}

#[test]
fn unknown_flag_is_argument_error() {
    let run = emocue(&["detect", "--bogus-flag"]);
    assert_eq!(run.code(), 5);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(emocue(&["--help"]).code(), 0);
    assert_eq!(emocue(&["--version"]).code(), 0);
    assert_eq!(emocue(&["classify", "--help"]).code(), 0);
}
