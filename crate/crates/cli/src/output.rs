//! Output directory writer. Every artifact gets a `<name>.provenance.json` sidecar.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::spec::{hex, ExperimentSpec};

pub const SIDECAR_SUFFIX: &str = ".provenance.json";

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    artifact: &'a str,
    command: &'a str,
    spec_hash: &'a str,
    version: &'a str,
    content_sha256: String,
    wall_time_s: f64,
}

pub struct Output {
    dir: PathBuf,
    command: &'static str,
    spec_hash: String,
    started: Instant,
}

impl Output {
    /// Creates the directory and records the effective spec as `spec.json`.
    pub fn create(spec: &ExperimentSpec, started: Instant) -> Result<Self> {
        let dir = spec.output_dir.clone();
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let out = Self { dir, command: spec.command.as_str(), spec_hash: spec.hash(), started };
        out.write("spec.json", spec.to_json().as_bytes())?;
        Ok(out)
    }

    pub fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        let prov = Provenance {
            artifact: name,
            command: self.command,
            spec_hash: &self.spec_hash,
            version: env!("CARGO_PKG_VERSION"),
            content_sha256: hex(&Sha256::digest(contents)),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let sidecar = self.dir.join(format!("{name}{SIDECAR_SUFFIX}"));
        fs::write(&sidecar, serde_json::to_vec_pretty(&prov)?).with_context(|| format!("writing {}", sidecar.display()))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names_artifact_and_hash() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec { output_dir: tmp.path().join("o"), ..Default::default() };
        let out = Output::create(&spec, Instant::now()).unwrap();
        out.write("a/b.csv", b"x,y\n").unwrap();
        let side: serde_json::Value =
            serde_json::from_slice(&fs::read(tmp.path().join("o/a/b.csv.provenance.json")).unwrap()).unwrap();
        assert_eq!(side["artifact"], "a/b.csv");
        assert_eq!(side["spec_hash"], spec.hash());
        assert_eq!(side["content_sha256"], hex(&Sha256::digest(b"x,y\n")));
        assert!(tmp.path().join("o/spec.json.provenance.json").exists());
    }
}
