//! Log-likelihood ratio of a model against a mutation-only baseline.

use crate::error::{Error, Result};
use crate::generators::Model;
use crate::kernels::{exact_transition, factorized_transition, ExpmConfig};
use crate::state_space::Sequence;

/// The selection-free mutational process q(y|x,t).
pub type BaselineMutationModel = Model;

fn probability(model: &Model, x: &Sequence, y: &Sequence, t: f64, cfg: &ExpmConfig) -> Result<f64> {
    match model {
        Model::Full(q) => {
            let yi = q.space().state_index(y)?;
            Ok(exact_transition(q, x, t, cfg)?.get(yi))
        }
        Model::Factorized(m) => factorized_transition(m, x, y, t, cfg),
    }
}

/// ln p(y|x,t) − ln q(y|x,t); a baseline probability of zero is an error.
pub fn selection_score(
    model: &Model,
    baseline: &BaselineMutationModel,
    x: &Sequence,
    y: &Sequence,
    t: f64,
    cfg: &ExpmConfig,
) -> Result<f64> {
    model.space().ensure_same(baseline.space())?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    let q = probability(baseline, x, y, t, cfg)?;
    if q <= 0.0 {
        return Err(Error::ZeroProbability(format!(
            "{} -> {}",
            model.space().format(x),
            model.space().format(y)
        )));
    }
    let p = probability(model, x, y, t, cfg)?;
    Ok(p.ln() - q.ln())
}
