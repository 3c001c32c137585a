use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Host {
    pub os: &'static str,
    pub arch: &'static str,
    pub parallelism: usize,
}

/// Provenance record embedded in every output artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub started_unix_seconds: f64,
    pub elapsed_seconds: f64,
    pub host: Host,
}

pub struct ManifestBuilder {
    command: String,
    inputs: Vec<InputDigest>,
    seed: Option<u64>,
    started: f64,
    clock: Instant,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        let started = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            command: command.into(),
            inputs: Vec::new(),
            seed: None,
            started,
            clock: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: digest_bytes(bytes),
        });
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn finish(&self, config: Value) -> RunManifest {
        RunManifest {
            command: self.command.clone(),
            config,
            inputs: self.inputs.clone(),
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            started_unix_seconds: self.started,
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
            host: Host {
                os: std::env::consts::OS,
                arch: std::env::consts::ARCH,
                parallelism: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            },
        }
    }
}

/// Writes `body` as pretty JSON with `schema` and `manifest` fields added.
pub fn write_json(path: &Path, mut body: Value, manifest: &RunManifest) -> CliResult<()> {
    if let Value::Object(map) = &mut body {
        map.insert("schema".into(), Value::String(affine_psd::io::SCHEMA.into()));
        map.insert("manifest".into(), serde_json::to_value(manifest).expect("manifest serialises"));
    }
    let text = serde_json::to_string_pretty(&body).expect("output serialises");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// CSV with the manifest on a leading comment line.
pub fn write_csv(path: Option<&Path>, header: &[String], rows: &[Vec<String>], manifest: &RunManifest) -> CliResult<()> {
    let mut text = format!(
        "# manifest: {}\n{}\n",
        serde_json::to_string(manifest).expect("manifest serialises"),
        header.join(",")
    );
    for r in rows {
        text.push_str(&r.join(","));
        text.push('\n');
    }
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
