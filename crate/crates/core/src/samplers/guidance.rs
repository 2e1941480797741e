//! Rate tilting toward higher oracle predictions.

use serde::{Deserialize, Serialize};


use super::oracle::FitnessOracle;
use crate::error::{Error, Result};
use crate::state_space::Sequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceMode {
    /// Δ = μ(y) − μ(x), one oracle call per candidate.
    #[default]
    Exact,
    /// Δ = g·(y − x) from one gradient call per step.
    Tag,
}

impl std::str::FromStr for GuidanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "tag" => Ok(Self::Tag),
            _ => Err(Error::InvalidArgument(format!("unknown guidance mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for GuidanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Tag => "tag",
        })
    }
}

/// Which sequence σ is evaluated at in exact mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaAt {
    #[default]
    Parent,
    Child,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub gamma: f64,
    pub mode: GuidanceMode,
    pub sigma_at: SigmaAt,
}

impl GuidanceConfig {
    pub fn new(gamma: f64, mode: GuidanceMode) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        Ok(Self {
            gamma,
            mode,
            sigma_at: SigmaAt::Parent,
        })
    }

    pub fn with_sigma_at(mut self, sigma_at: SigmaAt) -> Self {
        self.sigma_at = sigma_at;
        self
    }
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// [2Φ(Δ/σ)]^γ, exactly 1 when γ = 0.
#[inline]
pub fn tilt_factor(delta: f64, sigma: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        (2.0 * normal_cdf(delta / sigma)).powf(gamma)
    }
}

/// Tilt factors for every single mutation out of `x`, in neighbor order.
pub fn tilt_factors(oracle: &dyn FitnessOracle, cfg: &GuidanceConfig, x: &Sequence, out: &mut Vec<f64>) -> Result<()> {
    let space = oracle.space();
    let a = space.alphabet_size() as u8;
    out.clear();
    if cfg.gamma == 0.0 {
        out.resize(space.num_neighbors(), 1.0);
        return Ok(());
    }
    let fmt = |s: &Sequence| space.format(s);
    let wrap = |s: &Sequence, e: Error| match e {
        e @ Error::Oracle { .. } => e,
        e => Error::Oracle {
            state: fmt(s),
            reason: e.to_string(),
        },
    };
    let sigma_parent = oracle.stddev(x).map_err(|e| wrap(x, e))?;
    match cfg.mode {
        GuidanceMode::Tag => {
            let g = oracle.gradient(x).map_err(|e| wrap(x, e))?;
            let au = a as usize;
            for (l, &cur) in x.0.iter().enumerate() {
                for b in (0..a).filter(|&b| b != cur) {
                    let delta = g[l * au + b as usize] - g[l * au + cur as usize];
                    out.push(tilt_factor(delta, sigma_parent, cfg.gamma));
                }
            }
        }
        GuidanceMode::Exact => {
            let mu_x = oracle.mean(x).map_err(|e| wrap(x, e))?;
            let mut y = x.clone();
            for l in 0..x.len() {
                let cur = x.0[l];
                for b in (0..a).filter(|&b| b != cur) {
                    y.0[l] = b;
                    let mu_y = oracle.mean(&y).map_err(|e| wrap(&y, e))?;
                    let sigma = match cfg.sigma_at {
                        SigmaAt::Parent => sigma_parent,
                        SigmaAt::Child => oracle.stddev(&y).map_err(|e| wrap(&y, e))?,
                    };
                    out.push(tilt_factor(mu_y - mu_x, sigma, cfg.gamma));
                }
                y.0[l] = cur;
            }
        }
    }
    if let Some(bad) = out.iter().find(|f| !f.is_finite()) {
        return Err(Error::Oracle {
            state: fmt(x),
            reason: format!("non-finite tilt factor {bad}"),
        });
    }
    Ok(())
}
