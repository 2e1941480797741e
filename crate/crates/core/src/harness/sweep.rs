//! Estimation error across epistasis levels.

use serde::{Deserialize, Serialize};

use crate::analysis::frobenius_relative_error;
use crate::error::{Error, Result};
use crate::estimation::{fit, generate_dataset, Estimator, TrainingConfig, DEFAULT_BINS};
use crate::generators::{build_factorized_truth, build_state_dependent_truth, interpolate_truth, FullGenerator};
use crate::kernels::ExpmConfig;
use crate::par;
use crate::rng::derive_seed;
use crate::state_space::StateSpace;

pub const DEFAULT_EPSILONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const PAPER_SCALE_SAMPLES: usize = 2_500_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub epsilon_levels: Vec<f64>,
    pub replicates: usize,
    pub samples: usize,
    pub branch_rate: f64,
    pub bins: usize,
    pub estimators: Vec<Estimator>,
    pub master_seed: u64,
    /// Fixed δ for the SNR estimator; `None` uses 1 − ε.
    pub snr_delta: Option<f64>,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: Option<usize>,
    pub expm: ExpmConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilon_levels: DEFAULT_EPSILONS.to_vec(),
            replicates: 3,
            samples: 100_000,
            branch_rate: 0.5,
            bins: DEFAULT_BINS,
            estimators: vec![Estimator::FullMle, Estimator::Factorized, Estimator::FactorizedSnr],
            master_seed: 0,
            snr_delta: None,
            max_epochs: 1000,
            patience: 50,
            batch_size: None,
            expm: ExpmConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon_levels.is_empty() || self.epsilon_levels.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::InvalidArgument("epsilon levels must be non-empty and lie in [0, 1]".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("no estimators requested".into()));
        }
        if let Some(d) = self.snr_delta {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InvalidArgument(format!("SNR offset must lie in [0, 1], got {d}")));
            }
        }
        self.expm.validate()
    }

    pub(crate) fn training(&self, estimator: Estimator, epsilon: f64, seed: u64) -> TrainingConfig {
        let mut t = TrainingConfig::new(estimator, seed);
        t.max_epochs = self.max_epochs;
        t.patience = self.patience;
        t.batch_size = self.batch_size;
        t.truncation_tol = self.expm.truncation_tol;
        t.snr_delta = self.snr_delta.unwrap_or(1.0 - epsilon);
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub replicate: usize,
    pub estimator: Estimator,
    /// `None` when the cell failed; see `reason`.
    pub error: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub epochs: usize,
    pub reason: Option<String>,
}

/// Truth at level ε for a replicate; both endpoints depend only on the
/// replicate, so levels of one replicate share them.
pub fn epistasis_truth(space: &StateSpace, master_seed: u64, replicate: usize, epsilon: f64) -> Result<FullGenerator> {
    let fact = build_factorized_truth(space, derive_seed(master_seed, &[replicate as u64, 0]))?;
    let dep = build_state_dependent_truth(space, derive_seed(master_seed, &[replicate as u64, 1]))?;
    interpolate_truth(&fact, &dep, epsilon)
}

/// One dataset per (ε, replicate) cell, shared by every estimator.
pub fn run_epistasis_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let space = StateSpace::codons();
    let cells: Vec<(usize, usize)> = (0..cfg.epsilon_levels.len())
        .flat_map(|e| (0..cfg.replicates).map(move |r| (e, r)))
        .collect();
    let per_cell = par::map_range(cells.len(), |c| {
        let (ei, rep) = cells[c];
        let eps = cfg.epsilon_levels[ei];
        let data_seed = derive_seed(cfg.master_seed, &[rep as u64, 2, ei as u64]);
        let fit_seed = derive_seed(cfg.master_seed, &[rep as u64, 3, ei as u64]);
        let row = |estimator, outcome: Result<(f64, usize)>| {
            let (error, epochs, reason) = match outcome {
                Ok((e, n)) => (Some(e), n, None),
                Err(err) => (None, 0, Some(err.to_string())),
            };
            SweepRow {
                epsilon: eps,
                replicate: rep,
                estimator,
                error,
                samples: cfg.samples,
                seed: data_seed,
                epochs,
                reason,
            }
        };
        let prepared = epistasis_truth(&space, cfg.master_seed, rep, eps).and_then(|truth| {
            let data = generate_dataset(&truth, cfg.samples, cfg.branch_rate, cfg.bins, data_seed, &cfg.expm)?;
            Ok((truth, data))
        });
        let (truth, data) = match prepared {
            Ok(p) => p,
            Err(e) => {
                let msg = e.to_string();
                return cfg
                    .estimators
                    .iter()
                    .map(|&est| row(est, Err(Error::Numerical(msg.clone()))))
                    .collect::<Vec<_>>();
            }
        };
        cfg.estimators
            .iter()
            .map(|&est| {
                let outcome = fit(&data, &cfg.training(est, eps, fit_seed)).and_then(|r| {
                    let q_hat = r.model.to_full()?;
                    Ok((frobenius_relative_error(&q_hat, &truth)?, r.epochs_run))
                });
                row(est, outcome)
            })
            .collect()
    });
    Ok(per_cell.into_iter().flatten().collect())
}
