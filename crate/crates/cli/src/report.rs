use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::format::SystemFile;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Auto,
    Pairwise,
    Sphere,
    Diagonal,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Check,
    Hull,
    FalsifyHhc,
}

/// Everything besides the system that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub seed: u64,
    /// Relative strictness margin used by sampling and verification.
    pub tol: f64,
    pub samples: usize,
    pub mode: Mode,
    pub verify: bool,
    pub falsify: bool,
    pub trials: usize,
    pub hyperplanes: Vec<Vec<f64>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: 1e-6,
            samples: 10_000,
            mode: Mode::Auto,
            verify: false,
            falsify: false,
            trials: 100,
            hyperplanes: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// SHA-256 of the input bytes, lowercase hex.
    pub sha256: String,
    pub system: SystemFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub command: Command,
    pub options: RunOptions,
    pub input: InputInfo,
    pub verdicts: BTreeMap<String, Value>,
    pub certificates: BTreeMap<String, Value>,
    pub witnesses: Vec<Value>,
    pub warnings: Vec<String>,
    pub exit_code: i32,
    pub timings_ms: BTreeMap<String, f64>,
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
    pub fn new(command: Command, options: RunOptions, input: InputInfo) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: format!("aggrahull {}", env!("CARGO_PKG_VERSION")),
            command,
            options,
            input,
            verdicts: BTreeMap::new(),
            certificates: BTreeMap::new(),
            witnesses: vec![],
            warnings: vec![],
            exit_code: 0,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn verdict(&mut self, key: &str, v: impl Serialize) {
        self.verdicts.insert(key.to_string(), to_value(v));
    }

    pub fn certificate(&mut self, key: &str, v: impl Serialize) {
        self.certificates.insert(key.to_string(), to_value(v));
    }

    /// Paths at which two reports differ, ignoring timings.
    pub fn differences(&self, other: &Report) -> Vec<String> {
        let strip = |r: &Report| {
            let mut v = to_value(r);
            v.as_object_mut().unwrap().remove("timings_ms");
            v
        };
        let mut out = vec![];
        diff(&strip(self), &strip(other), String::new(), &mut out);
        out
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report payloads serialize")
}

fn diff(a: &Value, b: &Value, path: String, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for k in x.keys().chain(y.keys().filter(|k| !x.contains_key(*k))) {
                match (x.get(k), y.get(k)) {
                    (Some(p), Some(q)) => diff(p, q, format!("{path}/{k}"), out),
                    _ => out.push(format!("{path}/{k}")),
                }
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                diff(p, q, format!("{path}/{i}"), out);
            }
        }
        _ if a != b => out.push(if path.is_empty() { "/".into() } else { path }),
        _ => {}
    }
}
