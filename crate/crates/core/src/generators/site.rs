use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Row-sum tolerance for per-site generators.
pub const SITE_ROW_TOL: f64 = 1e-12;

/// A per-site |A|×|A| generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteRateMatrix {
    rates: DMatrix<f64>,
}

impl SiteRateMatrix {
    /// Validates a full matrix: non-negative off-diagonals, zero row sums.
    pub fn new(rates: DMatrix<f64>) -> Result<Self> {
        if rates.nrows() != rates.ncols() || rates.nrows() < 2 {
            return Err(Error::ShapeMismatch(format!(
                "site matrix must be square with dimension >= 2, got {}x{}",
                rates.nrows(),
                rates.ncols()
            )));
        }
        let n = rates.nrows();
        for a in 0..n {
            let mut sum = 0.0;
            let mut scale = 0.0f64;
            for b in 0..n {
                let v = rates[(a, b)];
                if !v.is_finite() {
                    return Err(Error::InvalidGenerator(format!("non-finite entry at ({a},{b})")));
                }
                if a != b && v < 0.0 {
                    return Err(Error::InvalidGenerator(format!("negative off-diagonal {v} at ({a},{b})")));
                }
                sum += v;
                scale = scale.max(v.abs());
            }
            if sum.abs() > SITE_ROW_TOL * scale.max(1.0) {
                return Err(Error::InvalidGenerator(format!("row {a} sums to {sum}")));
            }
        }
        Ok(Self { rates })
    }

    /// Builds a generator from off-diagonal rates; the diagonal is the
    /// negative row sum.
    pub fn from_off_diagonal(dim: usize, mut rate: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            let mut exit = 0.0;
            for b in (0..dim).filter(|&b| b != a) {
                let r = rate(a, b);
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::InvalidGenerator(format!("rate {r} at ({a},{b})")));
                }
                m[(a, b)] = r;
                exit += r;
            }
            m[(a, a)] = -exit;
        }
        Ok(Self { rates: m })
    }

    /// Off-diagonal entries drawn i.i.d. from Uniform[0, 2).
    pub fn random_uniform<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self::from_off_diagonal(dim, |_, _| rng.random_range(0.0..2.0)).expect("uniform rates are valid")
    }

    pub fn dim(&self) -> usize {
        self.rates.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    #[inline]
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[(from, to)]
    }

    pub fn exit_rate(&self, from: usize) -> f64 {
        -self.rates[(from, from)]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { rates: &self.rates * c }
    }

    /// Row-major entries, diagonal included.
    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| self.rates[(a, b)]).collect()
    }

    pub fn from_row_major(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for a {dim}x{dim} site matrix, got {}",
                dim * dim,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_matrices() {
        let bad = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -0.5, 0.5]);
        assert!(SiteRateMatrix::new(bad).is_err());
        let unbalanced = DMatrix::from_row_slice(2, 2, &[-1.0, 1.5, 0.5, -0.5]);
        assert!(SiteRateMatrix::new(unbalanced).is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.5, -0.5]);
        assert!(SiteRateMatrix::new(ok).is_ok());
    }

    #[test]
    fn random_matrices_are_valid() {
        let mut rng = crate::rng::seeded(3);
        for _ in 0..20 {
            let m = SiteRateMatrix::random_uniform(4, &mut rng);
            SiteRateMatrix::new(m.matrix().clone()).unwrap();
            for a in 0..4 {
                for b in (0..4).filter(|&b| b != a) {
                    assert!((0.0..2.0).contains(&m.rate(a, b)));
                }
            }
        }
    }
}
