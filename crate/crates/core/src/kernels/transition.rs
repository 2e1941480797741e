//! Transition distributions of full and factorized models.

use nalgebra::DMatrix;

use super::expm::{expm_generator, ExpmConfig, NEGATIVE_CLAMP, ROW_SUM_TOL};
use super::poisson::PoissonWeights;
use crate::error::{Error, Result};
use crate::generators::{FactorizedModel, FullGenerator, SiteRateMatrix, DENSE_MATRIX_CAP};
use crate::state_space::{neighbor_slot, Sequence, StateSpace, DEFAULT_DENSE_CAP};

/// One row of a transition kernel over a whole state space.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDistribution {
    space: StateSpace,
    probabilities: Vec<f64>,
}

impl TransitionDistribution {
    /// Clamps rounding negatives and checks normalization.
    pub fn new(space: StateSpace, mut probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != space.num_states() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} probabilities, got {}",
                space.num_states(),
                probabilities.len()
            )));
        }
        for (i, p) in probabilities.iter_mut().enumerate() {
            if !p.is_finite() || *p < NEGATIVE_CLAMP {
                return Err(Error::Numerical(format!("probability {p} at state {i}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::Numerical(format!("probabilities sum to {sum}")));
        }
        Ok(Self { space, probabilities })
    }

    pub fn point_mass(space: StateSpace, x: usize) -> Self {
        let mut probabilities = vec![0.0; space.num_states()];
        probabilities[x] = 1.0;
        Self { space, probabilities }
    }

    pub fn uniform(space: StateSpace) -> Self {
        let n = space.num_states();
        Self {
            space,
            probabilities: vec![1.0 / n as f64; n],
        }
    }

    /// Normalized histogram of state indices.
    pub fn empirical(space: StateSpace, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut counts = vec![0.0; space.num_states()];
        let mut total = 0.0;
        for i in indices {
            *counts.get_mut(i).ok_or(Error::IndexOutOfRange {
                index: i,
                num_states: space.num_states(),
            })? += 1.0;
            total += 1.0;
        }
        if total == 0.0 {
            return Err(Error::InvalidArgument("empirical distribution of zero samples".into()));
        }
        counts.iter_mut().for_each(|c| *c /= total);
        Ok(Self {
            space,
            probabilities: counts,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn get(&self, y: usize) -> f64 {
        self.probabilities[y]
    }

    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(0.5 * self.probabilities.iter().zip(&other.probabilities).map(|(p, q)| (p - q).abs()).sum::<f64>())
    }

    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        Ok(2.0 * self.total_variation(other)?)
    }
}

/// exp(tQ) as a dense matrix.
pub fn transition_matrix(q: &FullGenerator, t: f64, cfg: &ExpmConfig) -> Result<DMatrix<f64>> {
    expm_generator(&q.to_dense()?, t, cfg)
}

/// Row x of exp(tQ).
///
/// Spaces above the dense-matrix cap propagate a single probability vector
/// through the uniformized chain instead of forming the full exponential.
pub fn exact_transition(q: &FullGenerator, x: &Sequence, t: f64, cfg: &ExpmConfig) -> Result<TransitionDistribution> {
    let space = q.space();
    let xi = space.state_index(x)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be finite and non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(TransitionDistribution::point_mass(space.clone(), xi));
    }
    if space.num_states() <= DENSE_MATRIX_CAP {
        let p = transition_matrix(q, t, cfg)?;
        return TransitionDistribution::new(space.clone(), p.row(xi).iter().copied().collect());
    }
    cfg.validate()?;
    uniformized_row(q, xi, t, cfg.truncation_tol)
}

fn uniformized_row(q: &FullGenerator, x: usize, t: f64, tol: f64) -> Result<TransitionDistribution> {
    let space = q.space();
    space.require_dense(DEFAULT_DENSE_CAP)?;
    let lambda = q.max_exit_rate();
    let n = space.num_states();
    if lambda == 0.0 {
        return Ok(TransitionDistribution::point_mass(space.clone(), x));
    }
    let weights = PoissonWeights::new(lambda * t, tol);
    let mut v = vec![0.0; n];
    v[x] = 1.0;
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let mut neighbors = Vec::new();
    let mut symbols = vec![0u8; space.length()];
    for k in 0..weights.end() {
        if k > 0 {
            // next = v R with R = I + Q/λ.
            next.iter_mut().for_each(|e| *e = 0.0);
            for (z, &mass) in v.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                space.decode_into(z, &mut symbols);
                space.neighbor_indices(z, &symbols, &mut neighbors);
                let rates = q.neighbor_rates(z);
                let mut stay = 1.0;
                for (&y, &r) in neighbors.iter().zip(rates) {
                    let p = r / lambda;
                    next[y] += mass * p;
                    stay -= p;
                }
                next[z] += mass * stay;
            }
            std::mem::swap(&mut v, &mut next);
        }
        let w = weights.get(k);
        if w > 0.0 {
            acc.iter_mut().zip(&v).for_each(|(a, b)| *a += w * b);
        }
    }
    TransitionDistribution::new(space.clone(), acc)
}

/// exp(t·Q(x)_ℓ) for every site.
pub fn factorized_site_kernels(
    model: &FactorizedModel,
    x: &Sequence,
    t: f64,
    cfg: &ExpmConfig,
) -> Result<Vec<DMatrix<f64>>> {
    model
        .evaluate_site_matrices(x)?
        .iter()
        .map(|m| expm_generator(m.matrix(), t, cfg))
        .collect()
}

/// Π_ℓ exp(t·Q(x)_ℓ)_{x_ℓ, y_ℓ}.
pub fn factorized_transition(
    model: &FactorizedModel,
    x: &Sequence,
    y: &Sequence,
    t: f64,
    cfg: &ExpmConfig,
) -> Result<f64> {
    model.space().check(y)?;
    let kernels = factorized_site_kernels(model, x, t, cfg)?;
    Ok(kernels
        .iter()
        .enumerate()
        .map(|(l, k)| k[(x.0[l] as usize, y.0[l] as usize)])
        .product())
}

/// The full factorized row: the Kronecker product of per-site rows.
pub fn factorized_distribution(
    model: &FactorizedModel,
    x: &Sequence,
    t: f64,
    cfg: &ExpmConfig,
) -> Result<TransitionDistribution> {
    let space = model.space();
    space.require_dense(DEFAULT_DENSE_CAP)?;
    let kernels = factorized_site_kernels(model, x, t, cfg)?;
    let mut row = vec![1.0];
    for (l, k) in kernels.iter().enumerate() {
        let site_row = k.row(x.0[l] as usize);
        row = row.iter().flat_map(|&p| site_row.iter().map(move |&s| p * s)).collect();
    }
    TransitionDistribution::new(space.clone(), row)
}

/// ‖P(·|x,t) − p_θ(·|x,t)‖₁ and the bound (λt)².
pub fn prop1_error(
    q: &FullGenerator,
    model: &FactorizedModel,
    x: &Sequence,
    t: f64,
    cfg: &ExpmConfig,
) -> Result<(f64, f64)> {
    q.space().ensure_same(model.space())?;
    let exact = exact_transition(q, x, t, cfg)?;
    let approx = factorized_distribution(model, x, t, cfg)?;
    let lambda = q.max_exit_rate();
    Ok((exact.l1_distance(&approx)?, (lambda * t).powi(2)))
}

/// Site matrices whose row x_ℓ reproduces Q's single-site rates out of x.
///
/// Row a ≠ x_ℓ of site ℓ takes Q's rates out of the context x[ℓ ← a], so
/// for a site-independent Q the generating site matrices come back exactly.
pub fn match_rows_to_truth(q: &FullGenerator, x: &Sequence) -> Result<Vec<SiteRateMatrix>> {
    let space = q.space();
    space.check(x)?;
    let a = space.alphabet_size();
    (0..space.length())
        .map(|site| {
            SiteRateMatrix::from_off_diagonal(a, |from, to| {
                let mut ctx = x.0.clone();
                ctx[site] = from as u8;
                let z = space.index_unchecked(&ctx);
                q.neighbor_rates(z)[neighbor_slot(a, site, from as u8, to as u8)]
            })
        })
        .collect()
}
