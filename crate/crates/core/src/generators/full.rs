use nalgebra::DMatrix;
use rand::Rng;

use super::site::SiteRateMatrix;
use crate::error::{Error, Result};
use crate::rng;
use crate::state_space::{StateSpace, DEFAULT_DENSE_CAP};

/// Largest space for which a dense |S|×|S| matrix is materialized.
pub const DENSE_MATRIX_CAP: usize = 4096;

/// Row-sum tolerance for full generators.
pub const FULL_ROW_TOL: f64 = 1e-10;

/// A sequential point-mutation generator over a whole state space.
///
/// Only single-site transitions can carry rate, so the generator is stored as
/// one row of L·(|A|−1) neighbor rates per state (in the order produced by
/// [`StateSpace::hamming_neighbors`]). The diagonal is always the negative
/// row sum, so row sums are zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FullGenerator {
    space: StateSpace,
    rates: Vec<f64>,
}

impl FullGenerator {
    pub fn from_neighbor_rates(space: StateSpace, rates: Vec<f64>) -> Result<Self> {
        space.require_dense(DEFAULT_DENSE_CAP)?;
        let expected = space.num_states() * space.num_neighbors();
        if rates.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} neighbor rates, got {}",
                rates.len()
            )));
        }
        if let Some(pos) = rates.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidGenerator(format!(
                "rate {} for state {} is not a finite non-negative number",
                rates[pos],
                pos / space.num_neighbors()
            )));
        }
        Ok(Self { space, rates })
    }

    /// Fills every neighbor rate from `f(state, neighbor_state, site, from, to)`.
    pub fn from_fn(
        space: StateSpace,
        mut f: impl FnMut(usize, usize, usize, u8, u8) -> f64,
    ) -> Result<Self> {
        space.require_dense(DEFAULT_DENSE_CAP)?;
        let k = space.num_neighbors();
        let a = space.alphabet_size();
        let mut rates = Vec::with_capacity(space.num_states() * k);
        let mut symbols = vec![0u8; space.length()];
        for x in 0..space.num_states() {
            space.decode_into(x, &mut symbols);
            for (site, &cur) in symbols.iter().enumerate() {
                let stride = space.stride(site);
                for b in (0..a as u8).filter(|&b| b != cur) {
                    let y = x - cur as usize * stride + b as usize * stride;
                    rates.push(f(x, y, site, cur, b));
                }
            }
        }
        Self::from_neighbor_rates(space, rates)
    }

    /// Validates a dense generator and converts it to neighbor storage.
    pub fn from_dense(space: StateSpace, q: &DMatrix<f64>) -> Result<Self> {
        let n = space.num_states();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "expected a {n}x{n} matrix, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        let mut neighbors = Vec::new();
        let mut symbols = vec![0u8; space.length()];
        for x in 0..n {
            space.decode_into(x, &mut symbols);
            space.neighbor_indices(x, &symbols, &mut neighbors);
            let mut sum = 0.0;
            let mut scale = 0.0f64;
            for y in 0..n {
                let v = q[(x, y)];
                if !v.is_finite() {
                    return Err(Error::InvalidGenerator(format!("non-finite entry at ({x},{y})")));
                }
                if x != y {
                    if v < 0.0 {
                        return Err(Error::InvalidGenerator(format!("negative off-diagonal {v} at ({x},{y})")));
                    }
                    if v != 0.0 && !neighbors.contains(&y) {
                        return Err(Error::InvalidGenerator(format!(
                            "nonzero rate {v} between non-neighbors {x} and {y}"
                        )));
                    }
                }
                sum += v;
                scale = scale.max(v.abs());
            }
            if sum.abs() > FULL_ROW_TOL * scale.max(1.0) {
                return Err(Error::InvalidGenerator(format!("row {x} sums to {sum}")));
            }
        }
        Self::from_fn(space, |x, y, _, _, _| q[(x, y)])
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    /// Neighbor rates out of state `x`.
    #[inline]
    pub fn neighbor_rates(&self, x: usize) -> &[f64] {
        let k = self.space.num_neighbors();
        &self.rates[x * k..(x + 1) * k]
    }

    pub fn all_neighbor_rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn exit_rate(&self, x: usize) -> f64 {
        self.neighbor_rates(x).iter().sum()
    }

    /// λ = max_x −Q_xx.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.space.num_states()).map(|x| self.exit_rate(x)).fold(0.0, f64::max)
    }

    /// Entry Q_xy (zero for non-neighbors).
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return -self.exit_rate(x);
        }
        let mut sx = vec![0u8; self.space.length()];
        let mut sy = vec![0u8; self.space.length()];
        self.space.decode_into(x, &mut sx);
        self.space.decode_into(y, &mut sy);
        let diff: Vec<usize> = (0..sx.len()).filter(|&i| sx[i] != sy[i]).collect();
        if diff.len() != 1 {
            return 0.0;
        }
        let site = diff[0];
        let slot = crate::state_space::neighbor_slot(self.space.alphabet_size(), site, sx[site], sy[site]);
        self.neighbor_rates(x)[slot]
    }

    /// Materializes the dense generator matrix.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        self.space.require_dense(DENSE_MATRIX_CAP)?;
        let n = self.space.num_states();
        let mut q = DMatrix::zeros(n, n);
        let mut neighbors = Vec::new();
        let mut symbols = vec![0u8; self.space.length()];
        for x in 0..n {
            self.space.decode_into(x, &mut symbols);
            self.space.neighbor_indices(x, &symbols, &mut neighbors);
            let mut exit = 0.0;
            for (&y, &r) in neighbors.iter().zip(self.neighbor_rates(x)) {
                q[(x, y)] = r;
                exit += r;
            }
            q[(x, x)] = -exit;
        }
        Ok(q)
    }

    /// New generator with rates `f(x, y, q_xy)` on the same sparsity pattern.
    pub fn map_rates(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let k = self.space.num_neighbors();
        let mut rates = Vec::with_capacity(self.rates.len());
        let mut neighbors = Vec::new();
        let mut symbols = vec![0u8; self.space.length()];
        for x in 0..self.space.num_states() {
            self.space.decode_into(x, &mut symbols);
            self.space.neighbor_indices(x, &symbols, &mut neighbors);
            for (j, &y) in neighbors.iter().enumerate() {
                rates.push(f(x, y, self.rates[x * k + j]));
            }
        }
        Self::from_neighbor_rates(self.space.clone(), rates)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_neighbor_rates(self.space.clone(), self.rates.iter().map(|r| r * c).collect())
    }

    /// Sum of squared entries, diagonal included.
    pub fn frobenius_norm_sq(&self) -> f64 {
        (0..self.space.num_states())
            .map(|x| {
                let row = self.neighbor_rates(x);
                let exit: f64 = row.iter().sum();
                exit * exit + row.iter().map(|r| r * r).sum::<f64>()
            })
            .sum()
    }
}

/// Draws one Uniform[0,2) site matrix per site, in site order.
pub fn draw_site_matrices<R: Rng + ?Sized>(space: &StateSpace, rng: &mut R) -> Vec<SiteRateMatrix> {
    (0..space.length())
        .map(|_| SiteRateMatrix::random_uniform(space.alphabet_size(), rng))
        .collect()
}

/// Site-independent ground truth: the Kronecker sum of per-site Uniform(0,2)
/// generators.
pub fn build_factorized_truth(space: &StateSpace, seed: u64) -> Result<FullGenerator> {
    build_factorized_truth_with_sites(space, seed).map(|(q, _)| q)
}

/// Like [`build_factorized_truth`] but also returns the site matrices.
pub fn build_factorized_truth_with_sites(
    space: &StateSpace,
    seed: u64,
) -> Result<(FullGenerator, Vec<SiteRateMatrix>)> {
    space.require_dense(DEFAULT_DENSE_CAP)?;
    let mut rng = rng::seeded(seed);
    let sites = draw_site_matrices(space, &mut rng);
    let q = kronecker_sum(space, &sites)?;
    Ok((q, sites))
}

/// Maximally epistatic ground truth: every single-site transition gets an
/// independent Uniform(0,2) rate.
pub fn build_state_dependent_truth(space: &StateSpace, seed: u64) -> Result<FullGenerator> {
    space.require_dense(DEFAULT_DENSE_CAP)?;
    let mut rng = rng::seeded(seed);
    FullGenerator::from_fn(space.clone(), |_, _, _, _, _| rng.random_range(0.0..2.0))
}

/// (1−ε)·q_fact + ε·q_dep, entrywise.
pub fn interpolate_truth(q_fact: &FullGenerator, q_dep: &FullGenerator, epsilon: f64) -> Result<FullGenerator> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    q_fact.space.ensure_same(&q_dep.space)?;
    if epsilon == 0.0 {
        return Ok(q_fact.clone());
    }
    if epsilon == 1.0 {
        return Ok(q_dep.clone());
    }
    let rates = q_fact
        .rates
        .iter()
        .zip(&q_dep.rates)
        .map(|(a, b)| (1.0 - epsilon) * a + epsilon * b)
        .collect();
    FullGenerator::from_neighbor_rates(q_fact.space.clone(), rates)
}

/// Q_1 ⊕ ⋯ ⊕ Q_L: single-site transitions at site ℓ take their rate from
/// site matrix ℓ, independent of the other sites.
pub fn kronecker_sum(space: &StateSpace, sites: &[SiteRateMatrix]) -> Result<FullGenerator> {
    if sites.len() != space.length() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} site matrices, got {}",
            space.length(),
            sites.len()
        )));
    }
    if let Some(bad) = sites.iter().find(|m| m.dim() != space.alphabet_size()) {
        return Err(Error::ShapeMismatch(format!(
            "site matrix of dimension {} for an alphabet of size {}",
            bad.dim(),
            space.alphabet_size()
        )));
    }
    FullGenerator::from_fn(space.clone(), |_, _, site, from, to| {
        sites[site].rate(from as usize, to as usize)
    })
}
