use crate::io::{num, to_json, SCHEMA_VERSION};
use serde::Serialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of_bytes(path: &str, bytes: &[u8]) -> Self {
        FileDigest { path: path.to_string(), sha256: hex(&Sha256::digest(bytes)) }
    }

    pub fn of_file(path: &Path) -> Option<Self> {
        std::fs::read(path).ok().map(|b| Self::of_bytes(&path.display().to_string(), &b))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
pub struct Tolerances {
    pub tol_ode: Box<RawValue>,
    pub tol_alg: Option<Box<RawValue>>,
    pub tol_mon: Box<RawValue>,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub schema_version: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    pub exit_code: i32,
    pub wall_clock_seconds: Box<RawValue>,
}

impl RunManifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        command: &str,
        inputs: Vec<FileDigest>,
        outputs: Vec<FileDigest>,
        tol_ode: f64,
        tol_alg: Option<f64>,
        tol_mon: f64,
        seed: Option<u64>,
        exit_code: i32,
        seconds: f64,
    ) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            args: std::env::args().collect(),
            inputs,
            outputs,
            tolerances: Tolerances { tol_ode: num(tol_ode), tol_alg: tol_alg.map(num), tol_mon: num(tol_mon) },
            seed,
            exit_code,
            wall_clock_seconds: num(seconds),
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}
