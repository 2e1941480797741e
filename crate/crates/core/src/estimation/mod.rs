//! Fitting generators to observed transitions.

mod adam;
mod dataset;
mod fit;
mod likelihood;
mod uniformized;

pub use adam::Adam;
pub use dataset::{
    exponential_bin_means, generate_dataset, DatasetHeader, Quantization, TransitionDataset, DEFAULT_BINS,
};
pub use fit::{assemble_full_from_factorized, fit, Estimator, FitResult, TrainingConfig};
pub use likelihood::{
    nll_factorized, nll_factorized_with_gradient, nll_full, nll_full_with_gradient, snr_weight, Evaluation,
};
pub use uniformized::PROB_FLOOR;
