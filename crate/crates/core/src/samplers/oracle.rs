//! Fitness oracles: a mean prediction, its uncertainty and the gradient of
//! the mean with respect to the one-hot input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state_space::{Sequence, StateSpace};

/// Smallest standard deviation an oracle reports.
pub const SIGMA_FLOOR: f64 = 1e-6;

pub trait FitnessOracle: Send + Sync {
    fn space(&self) -> &StateSpace;

    fn mean(&self, x: &Sequence) -> Result<f64>;

    /// Never below [`SIGMA_FLOOR`].
    fn stddev(&self, x: &Sequence) -> Result<f64>;

    /// ∂μ/∂(one-hot input) as a row-major L×|A| table.
    fn gradient(&self, x: &Sequence) -> Result<Vec<f64>>;
}

/// μ(x) = Σ_ℓ w[ℓ][x_ℓ] with constant σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOracle {
    space: StateSpace,
    weights: Vec<f64>,
    sigma: f64,
}

impl LinearOracle {
    pub fn new(space: StateSpace, weights: Vec<f64>, sigma: f64) -> Result<Self> {
        let expected = space.length() * space.alphabet_size();
        if weights.len() != expected {
            return Err(Error::ShapeMismatch(format!("expected {expected} weights, got {}", weights.len())));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("oracle weights must be finite".into()));
        }
        check_sigma(sigma)?;
        Ok(Self { space, weights, sigma })
    }

    /// Weights drawn from Uniform[−scale, scale).
    pub fn random<R: Rng + ?Sized>(space: StateSpace, scale: f64, sigma: f64, rng: &mut R) -> Result<Self> {
        let n = space.length() * space.alphabet_size();
        let weights = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
        Self::new(space, weights, sigma)
    }

    /// μ ≡ 0.
    pub fn constant(space: StateSpace, sigma: f64) -> Result<Self> {
        let n = space.length() * space.alphabet_size();
        Self::new(space, vec![0.0; n], sigma)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl FitnessOracle for LinearOracle {
    fn space(&self) -> &StateSpace {
        &self.space
    }

    fn mean(&self, x: &Sequence) -> Result<f64> {
        self.space.check(x)?;
        let a = self.space.alphabet_size();
        Ok(x.0.iter().enumerate().map(|(l, &s)| self.weights[l * a + s as usize]).sum())
    }

    fn stddev(&self, x: &Sequence) -> Result<f64> {
        self.space.check(x)?;
        Ok(self.sigma.max(SIGMA_FLOOR))
    }

    fn gradient(&self, x: &Sequence) -> Result<Vec<f64>> {
        self.space.check(x)?;
        Ok(self.weights.clone())
    }
}

/// An explicit value per state with constant σ; the gradient is the
/// one-hot difference g[ℓ][a] = μ(x[ℓ←a]) − μ(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularOracle {
    space: StateSpace,
    values: Vec<f64>,
    sigma: f64,
}

impl TabularOracle {
    pub fn new(space: StateSpace, values: Vec<f64>, sigma: f64) -> Result<Self> {
        if values.len() != space.num_states() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} oracle values, got {}",
                space.num_states(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("oracle values must be finite".into()));
        }
        check_sigma(sigma)?;
        Ok(Self { space, values, sigma })
    }

    /// Values drawn i.i.d. from Uniform[−scale, scale).
    pub fn random<R: Rng + ?Sized>(space: StateSpace, scale: f64, sigma: f64, rng: &mut R) -> Result<Self> {
        let values = (0..space.num_states()).map(|_| rng.random_range(-scale..scale)).collect();
        Self::new(space, values, sigma)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl FitnessOracle for TabularOracle {
    fn space(&self) -> &StateSpace {
        &self.space
    }

    fn mean(&self, x: &Sequence) -> Result<f64> {
        Ok(self.values[self.space.state_index(x)?])
    }

    fn stddev(&self, x: &Sequence) -> Result<f64> {
        self.space.check(x)?;
        Ok(self.sigma.max(SIGMA_FLOOR))
    }

    fn gradient(&self, x: &Sequence) -> Result<Vec<f64>> {
        let xi = self.space.state_index(x)?;
        let a = self.space.alphabet_size();
        let base = self.values[xi];
        let mut g = vec![0.0; self.space.length() * a];
        for (l, &cur) in x.0.iter().enumerate() {
            let stride = self.space.stride(l);
            for b in 0..a {
                let y = xi - cur as usize * stride + b * stride;
                g[l * a + b] = self.values[y] - base;
            }
        }
        Ok(g)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("oracle sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Serialized form of the built-in oracles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleFile {
    Linear(LinearOracle),
    Tabular(TabularOracle),
}

impl OracleFile {
    pub fn into_oracle(self) -> Result<Box<dyn FitnessOracle>> {
        Ok(match self {
            OracleFile::Linear(o) => Box::new(LinearOracle::new(o.space, o.weights, o.sigma)?),
            OracleFile::Tabular(o) => Box::new(TabularOracle::new(o.space, o.values, o.sigma)?),
        })
    }
}
