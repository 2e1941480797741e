//! Kernel error of the two samplers as a function of branch length.

use super::metrics::kl_divergence;
use crate::error::{Error, Result};
use crate::generators::{FactorizedModel, FullGenerator};
use crate::kernels::{factorized_distribution, transition_matrix, ExpmConfig, TransitionDistribution};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    /// Mean KL from the true row to the row of the assembled fitted
    /// generator, which Gillespie sampling draws from exactly.
    pub kl_gillespie: f64,
    /// Mean KL from the true row to the factorized product row.
    pub kl_matexp: f64,
}

/// `n` log-spaced points with exact endpoints.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::InvalidArgument(format!("bad log grid [{lo}, {hi}] with {n} points")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

/// 30 points from 0.01 to 10.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(0.01, 10.0, 30).expect("valid grid")
}

/// Both curves averaged uniformly over start states; no Monte Carlo.
pub fn sampling_error_curves(
    truth: &FullGenerator,
    fitted: &FactorizedModel,
    grid: &[f64],
    cfg: &ExpmConfig,
) -> Result<Vec<CurvePoint>> {
    truth.space().ensure_same(fitted.space())?;
    let space = truth.space();
    let assembled = fitted.assemble_full()?;
    let n = space.num_states();
    let starts: Vec<_> = space.sequences().collect();
    par::try_map_range(grid.len(), |i| {
        let t = grid[i];
        let p_true = transition_matrix(truth, t, cfg)?;
        let p_hat = transition_matrix(&assembled, t, cfg)?;
        let row = |m: &nalgebra::DMatrix<f64>, x: usize| {
            TransitionDistribution::new(space.clone(), m.row(x).iter().copied().collect())
        };
        let mut kl_g = 0.0;
        let mut kl_m = 0.0;
        for (x, seq) in starts.iter().enumerate() {
            let truth_row = row(&p_true, x)?;
            kl_g += kl_divergence(&truth_row, &row(&p_hat, x)?)?.value;
            kl_m += kl_divergence(&truth_row, &factorized_distribution(fitted, seq, t, cfg)?)?.value;
        }
        Ok(CurvePoint {
            t,
            kl_gillespie: kl_g / n as f64,
            kl_matexp: kl_m / n as f64,
        })
    })
}
