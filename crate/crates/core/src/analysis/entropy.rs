//! Entropy of per-site transition rows.

use crate::error::{Error, Result};
use crate::generators::FactorizedModel;
use crate::kernels::{factorized_site_kernels, ExpmConfig};
use crate::state_space::Sequence;

/// Shannon entropy (nats) of exp(t·Q(x)_ℓ)_{x_ℓ,·} for each site.
pub fn per_site_entropy(model: &FactorizedModel, x: &Sequence, t: f64, cfg: &ExpmConfig) -> Result<Vec<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be finite and non-negative, got {t}")));
    }
    let kernels = factorized_site_kernels(model, x, t, cfg)?;
    Ok(kernels
        .iter()
        .enumerate()
        .map(|(l, k)| {
            k.row(x.0[l] as usize)
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.ln())
                .sum::<f64>()
                .max(0.0)
        })
        .collect())
}
