//! Mutation–selection generators built from a mutational baseline and a
//! fitness landscape.

use super::full::FullGenerator;
use crate::error::{Error, Result};

/// Below this |s| the fixation probability uses its second-order series.
pub const SERIES_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixationParams {
    effective_population: f64,
    rate_scale: f64,
}

impl FixationParams {
    /// `N_e ≥ 1` keeps the fixation probability in (0, 1].
    pub fn new(effective_population: f64, rate_scale: f64) -> Result<Self> {
        if !(effective_population.is_finite() && effective_population >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "effective population must be finite and >= 1, got {effective_population}"
            )));
        }
        if !(rate_scale.is_finite() && rate_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rate scale must be finite and positive, got {rate_scale}"
            )));
        }
        Ok(Self {
            effective_population,
            rate_scale,
        })
    }

    /// k = N_e, so neutral mutations keep their baseline rate.
    pub fn neutral_scaled(effective_population: f64) -> Result<Self> {
        Self::new(effective_population, effective_population)
    }

    pub fn effective_population(&self) -> f64 {
        self.effective_population
    }

    pub fn rate_scale(&self) -> f64 {
        self.rate_scale
    }
}

/// Kimura's haploid fixation probability (1 − e^{−2s}) / (1 − e^{−2 N_e s}).
pub fn fixation_probability(s: f64, params: &FixationParams) -> f64 {
    let n = params.effective_population;
    if s.abs() < SERIES_THRESHOLD {
        return (1.0 + (n - 1.0) * s + (n - 1.0) * (n - 2.0) * s * s / 3.0) / n;
    }
    if s > 0.0 {
        (-(-2.0 * s).exp_m1()) / (-(-2.0 * n * s).exp_m1())
    } else {
        let u = -2.0 * s;
        (-(n - 1.0) * u).exp() * (-(-u).exp_m1()) / (-(-n * u).exp_m1())
    }
}

/// Q_xy = k·μ_xy·P_fix(F_y − F_x) on every single-site transition.
pub fn halpern_bruno_generator(
    baseline: &FullGenerator,
    fitness: &[f64],
    params: &FixationParams,
) -> Result<FullGenerator> {
    let space = baseline.space();
    if fitness.len() != space.num_states() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} fitness values, got {}",
            space.num_states(),
            fitness.len()
        )));
    }
    if fitness.iter().any(|f| !f.is_finite()) {
        return Err(Error::InvalidArgument("fitness values must be finite".into()));
    }
    let k = params.rate_scale;
    baseline.map_rates(|x, y, mu| k * mu * fixation_probability(fitness[y] - fitness[x], params))
}
