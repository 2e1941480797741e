//! State shared by every command: resolved globals, the output directory
//! and the manifest being built.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pointmut::generators::{FactorizedModel, Model, ModelFile};
use pointmut::harness::{epistasis_truth, write_csv, RunManifest, PAPER_SCALE_SAMPLES};
use pointmut::kernels::{ExpmConfig, ExpmMethod};
use pointmut::state_space::StateSpace;
use pointmut::{Error, Result};
use serde::Serialize;

use crate::args::Global;

pub const DEFAULT_SAMPLES: usize = 100_000;

pub struct Context {
    pub seed: u64,
    pub expm: ExpmConfig,
    pub paper_scale: bool,
    out_dir: PathBuf,
    pub manifest: RunManifest,
    started: Instant,
}

fn config_map(global: &Global, command: &impl Serialize) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for v in [serde_json::to_value(global)?, serde_json::to_value(command)?] {
        collect(v, &mut out);
    }
    Ok(out)
}

fn collect(value: serde_json::Value, out: &mut BTreeMap<String, String>) {
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            match v {
                serde_json::Value::Object(_) => collect(v, out),
                serde_json::Value::String(s) => {
                    out.insert(k.replace('_', "-"), s);
                }
                other => {
                    out.insert(k.replace('_', "-"), other.to_string());
                }
            }
        }
    }
}

impl Context {
    pub fn new(global: &Global, name: &str, command: &impl Serialize) -> Result<Self> {
        let method: ExpmMethod = global.expm_method.parse()?;
        let expm = ExpmConfig {
            method,
            truncation_tol: global.expm_tol,
            ..ExpmConfig::default()
        };
        expm.validate()?;
        std::fs::create_dir_all(&global.out_dir)?;
        let manifest = RunManifest::new(
            name,
            config_map(global, command)?,
            BTreeMap::from([("master".to_string(), global.seed)]),
        );
        Ok(Self {
            seed: global.seed,
            expm,
            paper_scale: global.paper_scale,
            out_dir: global.out_dir.clone(),
            manifest,
            started: Instant::now(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.manifest.manifest_hash
    }

    pub fn samples(&self, requested: Option<usize>) -> usize {
        requested.unwrap_or(if self.paper_scale { PAPER_SCALE_SAMPLES } else { DEFAULT_SAMPLES })
    }

    /// Path of an artifact inside the output directory, recorded in the
    /// manifest.
    pub fn artifact(&mut self, name: &str) -> PathBuf {
        self.manifest.record_artifact(name);
        self.out_dir.join(name)
    }

    pub fn csv<I, R>(&mut self, name: &str, units: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let hash = self.hash().to_string();
        let path = self.artifact(name);
        write_csv(&path, &hash, units, header, rows)
    }

    pub fn write_model(&mut self, name: &str, model: &Model, epsilon: Option<f64>) -> Result<()> {
        let mut file = ModelFile::from_model(model, Some(self.seed), epsilon)?;
        file.header.manifest_hash = Some(self.hash().to_string());
        let path = self.artifact(name);
        file.write(&path)
    }

    pub fn finish(mut self) -> Result<()> {
        let secs = self.started.elapsed().as_secs_f64();
        self.manifest.record_timing("total", secs);
        self.manifest.write(&self.out_dir)
    }
}

pub fn read_model(path: &Path) -> Result<(Model, ModelFile)> {
    let file = ModelFile::read(path)?;
    Ok((file.to_model()?, file))
}

/// A model file, or the matched truth of replicate 0 at ε.
pub fn sampling_model(path: Option<&Path>, epsilon: f64) -> Result<FactorizedModel> {
    match path {
        Some(p) => read_model(p)?.0.to_factorized(),
        None => {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1], got {epsilon}")));
            }
            FactorizedModel::matched_to_truth(&epistasis_truth(&StateSpace::codons(), 0, 0, epsilon)?)
        }
    }
}

pub fn fmt(v: f64) -> String {
    format!("{v}")
}
