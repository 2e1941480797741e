//! Evaluation metrics and interpretability tools.

mod curves;
mod entropy;
mod jacobian;
mod metrics;
mod score;
pub mod stats;

pub use curves::{default_t_grid, log_grid, sampling_error_curves, CurvePoint};
pub use entropy::per_site_entropy;
pub use jacobian::{categorical_jacobian, JacobianResult};
pub use metrics::{frobenius_relative_error, kl_divergence, KlResult};
pub use score::{selection_score, BaselineMutationModel};
