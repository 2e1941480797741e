//! Gradient-based maximum likelihood with early stopping.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::dataset::TransitionDataset;
use super::likelihood::{Evaluation, FactorizedProblem, FullProblem};
use crate::error::{Error, Result};
use crate::generators::{link, tabular_len, FactorizedModel, FullGenerator, Model};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// One free rate per single-site transition.
    FullMle,
    /// Context-tabular factorized model.
    Factorized,
    /// As `Factorized`, each record weighted by 1/(δ+t).
    FactorizedSnr,
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "full_mle" | "full" => Ok(Self::FullMle),
            "factorized" => Ok(Self::Factorized),
            "factorized_snr" => Ok(Self::FactorizedSnr),
            _ => Err(Error::InvalidArgument(format!("unknown estimator {s:?}"))),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FullMle => "full_mle",
            Self::Factorized => "factorized",
            Self::FactorizedSnr => "factorized_snr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub estimator: Estimator,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// `None` trains on the whole training split each step.
    pub batch_size: Option<usize>,
    pub validation_fraction: f64,
    /// δ in the SNR weight; ignored by the other estimators.
    pub snr_delta: f64,
    pub init_std: f64,
    pub truncation_tol: f64,
    pub seed: u64,
}

impl TrainingConfig {
    pub fn new(estimator: Estimator, seed: u64) -> Self {
        Self {
            estimator,
            learning_rate: match estimator {
                Estimator::FullMle => 0.1,
                _ => 0.01,
            },
            max_epochs: 1000,
            patience: 50,
            batch_size: None,
            validation_fraction: 0.1,
            snr_delta: 0.5,
            init_std: 0.1,
            truncation_tol: 1e-12,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!("learning rate {}", self.learning_rate)));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("max_epochs must be at least 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if !(self.snr_delta.is_finite() && self.snr_delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("SNR offset must be non-negative, got {}", self.snr_delta)));
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return Err(Error::InvalidArgument(format!("init std {}", self.init_std)));
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!("truncation tolerance {}", self.truncation_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: Model,
    /// Loss at the start of each epoch.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub stopped_early: bool,
    /// Records whose probability hit the floor at the returned parameters.
    pub floor_hits: usize,
    pub config: TrainingConfig,
}

enum Problem {
    Full(FullProblem),
    Factorized(FactorizedProblem),
}

impl Problem {
    fn new(data: &TransitionDataset, cfg: &TrainingConfig) -> Result<Self> {
        Ok(match cfg.estimator {
            Estimator::FullMle => Self::Full(FullProblem::new(data)?),
            Estimator::Factorized => Self::Factorized(FactorizedProblem::new(data, None)?),
            Estimator::FactorizedSnr => Self::Factorized(FactorizedProblem::new(data, Some(cfg.snr_delta))?),
        })
    }

    fn eval(&self, params: &[f64], tol: f64, want_grad: bool) -> Result<Evaluation> {
        match self {
            Self::Full(p) => p.eval_params(params, tol, want_grad),
            Self::Factorized(p) => p.eval_theta(params, tol, want_grad),
        }
    }
}

fn check_finite(ev: &Evaluation, epoch: usize, params: &[f64]) -> Result<()> {
    let grad_ok = ev.gradient.as_ref().is_none_or(|g| g.iter().all(|v| v.is_finite()));
    if ev.loss.is_finite() && grad_ok {
        return Ok(());
    }
    Err(Error::Divergence {
        epoch,
        loss: ev.loss,
        param_norm: params.iter().map(|p| p * p).sum::<f64>().sqrt(),
    })
}

/// Fits the configured estimator, keeping the parameters with the best
/// validation loss (training loss when the validation split is empty).
pub fn fit(data: &TransitionDataset, cfg: &TrainingConfig) -> Result<FitResult> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("cannot fit an empty dataset".into()));
    }
    let space = data.space().clone();
    let num_params = match cfg.estimator {
        Estimator::FullMle => {
            space.require_dense(crate::generators::DENSE_MATRIX_CAP)?;
            space.num_states() * space.num_neighbors()
        }
        _ => tabular_len(&space),
    };
    let normal = Normal::new(0.0, cfg.init_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut init_rng = rng::stream(cfg.seed, 0);
    let mut params: Vec<f64> = (0..num_params).map(|_| normal.sample(&mut init_rng)).collect();

    let (train, val) = data.split(cfg.validation_fraction, rng::derive_seed(cfg.seed, &[1]))?;
    let train_problem = Problem::new(&train, cfg)?;
    let val_problem = if val.is_empty() { None } else { Some(Problem::new(&val, cfg)?) };
    let full_batch = cfg.batch_size.is_none_or(|b| b >= train.len());
    let mut batch_rng = rng::stream(cfg.seed, 2);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut opt = Adam::new(num_params, cfg.learning_rate);
    let mut train_curve = Vec::new();
    let mut val_curve = Vec::new();
    let mut best = (f64::INFINITY, 0usize, params.clone(), 0usize);
    let mut stopped_early = false;
    let tol = cfg.truncation_tol;

    for epoch in 0..cfg.max_epochs {
        let ev = train_problem.eval(&params, tol, full_batch)?;
        check_finite(&ev, epoch, &params)?;
        let val_loss = match &val_problem {
            Some(p) => {
                let v = p.eval(&params, tol, false)?;
                check_finite(&v, epoch, &params)?;
                v.loss
            }
            None => ev.loss,
        };
        train_curve.push(ev.loss);
        val_curve.push(val_loss);
        if val_loss < best.0 {
            best = (val_loss, epoch, params.clone(), ev.floor_hits);
        } else if epoch - best.1 >= cfg.patience {
            stopped_early = true;
            break;
        }
        if epoch + 1 == cfg.max_epochs {
            break;
        }
        if full_batch {
            opt.update(&mut params, ev.gradient.as_deref().expect("gradient requested"));
        } else {
            order.shuffle(&mut batch_rng);
            for chunk in order.chunks(cfg.batch_size.expect("mini-batch size")) {
                let batch = Problem::new(&train.select(chunk), cfg)?;
                let bev = batch.eval(&params, tol, true)?;
                check_finite(&bev, epoch, &params)?;
                opt.update(&mut params, bev.gradient.as_deref().expect("gradient requested"));
            }
        }
    }

    let (_, best_epoch, best_params, floor_hits) = best;
    let model = match cfg.estimator {
        Estimator::FullMle => {
            let rates = best_params.iter().map(|&p| link::rate(p)).collect();
            Model::Full(FullGenerator::from_neighbor_rates(space, rates)?)
        }
        _ => Model::Factorized(FactorizedModel::tabular(space, best_params)?),
    };
    Ok(FitResult {
        model,
        epochs_run: train_curve.len(),
        train_loss: train_curve,
        val_loss: val_curve,
        best_epoch,
        stopped_early,
        floor_hits,
        config: cfg.clone(),
    })
}

/// The full generator a factorized model implies on single-site moves.
pub fn assemble_full_from_factorized(model: &FactorizedModel) -> Result<FullGenerator> {
    model.assemble_full()
}
