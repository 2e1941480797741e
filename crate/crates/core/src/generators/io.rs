//! JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::factorized::{FactorizedModel, Parameterization};
use super::full::FullGenerator;
use super::site::SiteRateMatrix;
use crate::error::{Error, Result};
use crate::state_space::{Alphabet, StateSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Full,
    FactorizedContextFree,
    FactorizedTabular,
    FactorizedContextExplicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub alphabet: Alphabet,
    pub length: usize,
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

/// On-disk layout: the header plus exactly one payload field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub header: ModelHeader,
    /// Dense row-major generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    /// Row-major site matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    /// Row-major site matrices per context.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contexts: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Full(FullGenerator),
    Factorized(FactorizedModel),
}

impl Model {
    pub fn space(&self) -> &StateSpace {
        match self {
            Model::Full(q) => q.space(),
            Model::Factorized(m) => m.space(),
        }
    }

    /// The generator this model defines over whole sequences.
    pub fn to_full(&self) -> Result<FullGenerator> {
        match self {
            Model::Full(q) => Ok(q.clone()),
            Model::Factorized(m) => m.assemble_full(),
        }
    }

    /// Factorized view: full generators are matched row by row.
    pub fn to_factorized(&self) -> Result<FactorizedModel> {
        match self {
            Model::Full(q) => FactorizedModel::matched_to_truth(q),
            Model::Factorized(m) => Ok(m.clone()),
        }
    }
}

impl ModelFile {
    pub fn from_model(model: &Model, seed: Option<u64>, epsilon: Option<f64>) -> Result<Self> {
        let space = model.space();
        let header = |kind| ModelHeader {
            alphabet: space.alphabet().clone(),
            length: space.length(),
            kind,
            seed,
            epsilon,
            manifest_hash: None,
        };
        let mut file = ModelFile {
            header: header(ModelKind::Full),
            rates: None,
            sites: None,
            theta: None,
            contexts: None,
        };
        match model {
            Model::Full(q) => {
                file.rates = Some(q.to_dense()?.transpose().as_slice().to_vec());
            }
            Model::Factorized(m) => match m.parameterization() {
                Parameterization::ContextFree(sites) => {
                    file.header = header(ModelKind::FactorizedContextFree);
                    file.sites = Some(sites.iter().map(SiteRateMatrix::to_row_major).collect());
                }
                Parameterization::ContextTabular(theta) => {
                    file.header = header(ModelKind::FactorizedTabular);
                    file.theta = Some(theta.clone());
                }
                Parameterization::ContextExplicit(ctx) => {
                    file.header = header(ModelKind::FactorizedContextExplicit);
                    file.contexts = Some(
                        ctx.iter()
                            .map(|row| row.iter().map(SiteRateMatrix::to_row_major).collect())
                            .collect(),
                    );
                }
            },
        }
        Ok(file)
    }

    pub fn to_model(&self) -> Result<Model> {
        let space = StateSpace::new(self.header.alphabet.clone(), self.header.length)?;
        let a = space.alphabet_size();
        let missing = |field: &str| Error::Parse(format!("model file of kind {:?} lacks `{field}`", self.header.kind));
        match self.header.kind {
            ModelKind::Full => {
                let rates = self.rates.as_ref().ok_or_else(|| missing("rates"))?;
                let n = space.num_states();
                if rates.len() != n * n {
                    return Err(Error::ShapeMismatch(format!("expected {} rates, got {}", n * n, rates.len())));
                }
                let dense = nalgebra::DMatrix::from_row_slice(n, n, rates);
                Ok(Model::Full(FullGenerator::from_dense(space, &dense)?))
            }
            ModelKind::FactorizedContextFree => {
                let sites = self.sites.as_ref().ok_or_else(|| missing("sites"))?;
                let sites = sites
                    .iter()
                    .map(|s| SiteRateMatrix::from_row_major(a, s))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Model::Factorized(FactorizedModel::context_free(space, sites)?))
            }
            ModelKind::FactorizedTabular => {
                let theta = self.theta.clone().ok_or_else(|| missing("theta"))?;
                Ok(Model::Factorized(FactorizedModel::tabular(space, theta)?))
            }
            ModelKind::FactorizedContextExplicit => {
                let ctx = self.contexts.as_ref().ok_or_else(|| missing("contexts"))?;
                let sites = ctx
                    .iter()
                    .map(|row| row.iter().map(|s| SiteRateMatrix::from_row_major(a, s)).collect())
                    .collect::<Result<Vec<Vec<_>>>>()?;
                Ok(Model::Factorized(FactorizedModel::explicit(space, sites)?))
            }
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::full::{build_factorized_truth_with_sites, build_state_dependent_truth};
    use crate::rng;

    fn round_trip(model: &Model) -> Model {
        let file = ModelFile::from_model(model, Some(3), Some(0.5)).unwrap();
        let text = serde_json::to_string(&file).unwrap();
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.header.seed, Some(3));
        back.to_model().unwrap()
    }

    #[test]
    fn full_round_trip() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 1).unwrap();
        let Model::Full(back) = round_trip(&Model::Full(q.clone())) else { panic!() };
        for (a, b) in back.all_neighbor_rates().iter().zip(q.all_neighbor_rates()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn tabular_round_trip_is_exact() {
        let sp = StateSpace::codons();
        let m = FactorizedModel::random_tabular(sp, 1.0, &mut rng::seeded(2)).unwrap();
        let back = round_trip(&Model::Factorized(m.clone()));
        assert_eq!(back, Model::Factorized(m));
    }

    #[test]
    fn context_free_and_explicit_round_trip() {
        let sp = StateSpace::codons();
        let (q, sites) = build_factorized_truth_with_sites(&sp, 6).unwrap();
        let m = FactorizedModel::context_free(sp, sites).unwrap();
        assert_eq!(round_trip(&Model::Factorized(m.clone())), Model::Factorized(m));
        let e = FactorizedModel::matched_to_truth(&q).unwrap();
        assert_eq!(round_trip(&Model::Factorized(e.clone())), Model::Factorized(e));
    }

    #[test]
    fn header_kind_is_snake_case() {
        let sp = StateSpace::codons();
        let m = FactorizedModel::tabular(sp, vec![0.0; 2304]).unwrap();
        let file = ModelFile::from_model(&Model::Factorized(m), None, None).unwrap();
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"kind\":\"factorized_tabular\""));
        assert!(text.contains("\"alphabet\":\"ACGT\""));
    }

    #[test]
    fn missing_payload_is_an_error() {
        let text = r#"{"header":{"alphabet":"ACGT","length":3,"kind":"full"}}"#;
        let file: ModelFile = serde_json::from_str(text).unwrap();
        assert!(file.to_model().is_err());
    }
}
