//! Sampler kernel error across epistasis levels.

use serde::{Deserialize, Serialize};

use super::sweep::{epistasis_truth, SweepConfig};
use crate::analysis::{default_t_grid, frobenius_relative_error, sampling_error_curves, CurvePoint};
use crate::error::{Error, Result};
use crate::estimation::{fit, generate_dataset, Estimator};
use crate::generators::Model;
use crate::rng::derive_seed;
use crate::state_space::StateSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Levels, replicate count is ignored; replicate 0's truths are used.
    pub sweep: SweepConfig,
    pub grid: Vec<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            sweep: SweepConfig::default(),
            grid: default_t_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingCurves {
    pub epsilon: f64,
    pub fit_error: f64,
    pub points: Vec<CurvePoint>,
}

/// Fits a factorized model per level and evaluates both samplers' kernels.
pub fn run_sampling_comparison(cfg: &SamplingConfig) -> Result<Vec<SamplingCurves>> {
    cfg.sweep.validate()?;
    if cfg.grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument("grid times must be finite and non-negative".into()));
    }
    let s = &cfg.sweep;
    let space = StateSpace::codons();
    s.epsilon_levels
        .iter()
        .enumerate()
        .map(|(ei, &eps)| {
            let truth = epistasis_truth(&space, s.master_seed, 0, eps)?;
            let data_seed = derive_seed(s.master_seed, &[0, 2, ei as u64]);
            let data = generate_dataset(&truth, s.samples, s.branch_rate, s.bins, data_seed, &s.expm)?;
            let fitted = fit(&data, &s.training(Estimator::Factorized, eps, derive_seed(s.master_seed, &[0, 3, ei as u64])))?;
            let Model::Factorized(model) = fitted.model else {
                unreachable!("factorized estimator returns a factorized model")
            };
            let fit_error = frobenius_relative_error(&model.assemble_full()?, &truth)?;
            Ok(SamplingCurves {
                epsilon: eps,
                fit_error,
                points: sampling_error_curves(&truth, &model, &cfg.grid, &s.expm)?,
            })
        })
        .collect()
}
