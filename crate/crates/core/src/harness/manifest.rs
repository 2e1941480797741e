//! Run manifests and CSV artifacts stamped with the manifest hash.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: Vec<String>,
    /// Wall-clock seconds per stage; excluded from the hash.
    pub timings: BTreeMap<String, f64>,
    pub manifest_hash: String,
}

#[derive(Serialize)]
struct Hashed<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a BTreeMap<String, String>,
    seeds: &'a BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(command: &str, config: BTreeMap<String, String>, seeds: BTreeMap<String, u64>) -> Self {
        let version = env!("CARGO_PKG_VERSION").to_string();
        let hashed = Hashed {
            command,
            version: &version,
            config: &config,
            seeds: &seeds,
        };
        let bytes = serde_json::to_vec(&hashed).expect("maps of strings serialize");
        let manifest_hash = hex::encode(Sha256::digest(bytes));
        Self {
            command: command.to_string(),
            version,
            config,
            seeds,
            artifacts: Vec::new(),
            timings: BTreeMap::new(),
            manifest_hash,
        }
    }

    pub fn record_artifact(&mut self, relative_path: &str) {
        if !self.artifacts.iter().any(|a| a == relative_path) {
            self.artifacts.push(relative_path.to_string());
        }
    }

    pub fn record_timing(&mut self, stage: &str, seconds: f64) {
        self.timings.insert(stage.to_string(), seconds);
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(out_dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

/// Writes `# manifest_hash=… units=…`, a header row, then the rows.
pub fn write_csv<I, R>(path: &Path, manifest_hash: &str, units: &str, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# manifest_hash={manifest_hash} units={units}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(std::io::Error::from)?;
    for row in rows {
        w.write_record(row).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(seed: u64) -> RunManifest {
        let config = BTreeMap::from([("samples".to_string(), "1000".to_string())]);
        RunManifest::new("sweep", config, BTreeMap::from([("master".to_string(), seed)]))
    }

    #[test]
    fn hash_depends_on_inputs_not_timings() {
        let mut a = manifest(1);
        let b = manifest(1);
        a.record_timing("fit", 3.2);
        a.record_artifact("sweep.csv");
        assert_eq!(a.manifest_hash, b.manifest_hash);
        assert_ne!(a.manifest_hash, manifest(2).manifest_hash);
        assert_eq!(a.manifest_hash.len(), 64);
    }

    #[test]
    fn csv_has_stamped_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_csv(&path, "abc", "t=branch_length", &["t", "v"], [["0.5", "1"], ["1", "2"]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# manifest_hash=abc units=t=branch_length\nt,v\n0.5,1\n1,2\n");
        let m = manifest(3);
        m.write(dir.path()).unwrap();
        let back: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
