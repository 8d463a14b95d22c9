//! Helpers shared by the CLI integration tests: spawn the built binary,
//! capture its streams, and locate fixtures.
#![allow(dead_code)] // each test binary uses a different subset

use std::path::PathBuf;
use std::process::{Command, Output};

pub struct Run {
    pub output: Output,
}

impl Run {
    pub fn code(&self) -> i32 {
        self.output.status.code().expect("process terminated by signal")
    }

    pub fn stdout(&self) -> String {
        String::from_utf8(self.output.stdout.clone()).expect("stdout is UTF-8")
    }

    pub fn stderr(&self) -> String {
        String::from_utf8(self.output.stderr.clone()).expect("stderr is UTF-8")
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.stdout()).unwrap_or_else(|e| {
            panic!("stdout is not JSON ({e}):\n{}", self.stdout());
        })
    }
}

pub fn emocue(args: &[&str]) -> Run {
    emocue_env(args, &[])
}

pub fn emocue_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_emocue"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let output = cmd.output().expect("failed to spawn emocue");
    Run { output }
}

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")).join(name);
    assert!(path.exists(), "missing fixture {}", path.display());
    path.display().to_string()
}

/// Probabilities parsed from a prediction-style JSON value.
pub fn probs_of(value: &serde_json::Value) -> Vec<f64> {
    value["probabilities"]
        .as_array()
        .expect("probabilities array")
        .iter()
        .map(|p| p.as_f64().expect("numeric probability"))
        .collect()
}
