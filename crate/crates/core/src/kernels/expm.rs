//! Matrix exponentials of dense generators and general square matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::poisson::PoissonWeights;
use crate::error::{Error, Result};

/// Entry tolerance for generator validation (relative to the row scale).
pub const GENERATOR_TOL: f64 = 1e-10;
/// Rounding negatives down to this are clamped to zero.
pub const NEGATIVE_CLAMP: f64 = -1e-12;
/// Allowed deviation of kernel row sums from one.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Uniformization runs at most this λt per stage; larger values are scaled
/// down by powers of two and squared back.
pub const UNIFORMIZATION_STAGE: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExpmMethod {
    #[default]
    Uniformization,
    ScalingSquaring,
}

impl std::str::FromStr for ExpmMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uniformization" => Ok(Self::Uniformization),
            "scaling_squaring" => Ok(Self::ScalingSquaring),
            _ => Err(Error::InvalidArgument(format!("unknown expm method {s:?}"))),
        }
    }
}

impl std::fmt::Display for ExpmMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Uniformization => "uniformization",
            Self::ScalingSquaring => "scaling_squaring",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpmConfig {
    pub method: ExpmMethod,
    pub truncation_tol: f64,
    pub taylor_order: usize,
    pub max_squarings: u32,
}

impl Default for ExpmConfig {
    fn default() -> Self {
        Self {
            method: ExpmMethod::Uniformization,
            truncation_tol: 1e-12,
            taylor_order: 18,
            max_squarings: 40,
        }
    }
}

impl ExpmConfig {
    pub fn with_method(method: ExpmMethod) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.truncation_tol > 0.0 && self.truncation_tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "truncation tolerance must lie in (0, 1e-6], got {}",
                self.truncation_tol
            )));
        }
        if self.taylor_order < 4 {
            return Err(Error::InvalidArgument(format!(
                "Taylor order must be at least 4, got {}",
                self.taylor_order
            )));
        }
        Ok(())
    }
}

/// Checks generator structure and returns λ = max exit rate.
pub fn check_generator(q: &DMatrix<f64>) -> Result<f64> {
    if q.nrows() != q.ncols() {
        return Err(Error::ShapeMismatch(format!("generator must be square, got {}x{}", q.nrows(), q.ncols())));
    }
    let mut lambda = 0.0f64;
    for i in 0..q.nrows() {
        let mut sum = 0.0;
        let mut scale = 0.0f64;
        for j in 0..q.ncols() {
            let v = q[(i, j)];
            if !v.is_finite() {
                return Err(Error::InvalidGenerator(format!("non-finite entry at ({i},{j})")));
            }
            if i != j && v < 0.0 {
                return Err(Error::InvalidGenerator(format!("negative off-diagonal {v} at ({i},{j})")));
            }
            sum += v;
            scale = scale.max(v.abs());
        }
        if sum.abs() > GENERATOR_TOL * scale.max(1.0) {
            return Err(Error::InvalidGenerator(format!("row {i} sums to {sum}")));
        }
        lambda = lambda.max(-q[(i, i)]);
    }
    Ok(lambda)
}

/// exp(tQ) for a generator Q; the result is row-stochastic.
pub fn expm_generator(q: &DMatrix<f64>, t: f64, cfg: &ExpmConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be finite and non-negative, got {t}")));
    }
    let lambda = check_generator(q)?;
    let n = q.nrows();
    if t == 0.0 || lambda == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut p = match cfg.method {
        ExpmMethod::Uniformization => uniformization(q, lambda, t, cfg)?,
        ExpmMethod::ScalingSquaring => expm_taylor(&(q * t), cfg)?,
    };
    clamp_stochastic(&mut p)?;
    Ok(p)
}

/// Clamps rounding negatives and verifies row sums.
pub fn clamp_stochastic(p: &mut DMatrix<f64>) -> Result<()> {
    for i in 0..p.nrows() {
        let mut sum = 0.0;
        for j in 0..p.ncols() {
            let v = p[(i, j)];
            if v < 0.0 {
                if v < NEGATIVE_CLAMP {
                    return Err(Error::Numerical(format!("kernel entry ({i},{j}) = {v} is negative")));
                }
                p[(i, j)] = 0.0;
            }
            sum += p[(i, j)];
        }
        if !((1.0 - ROW_SUM_TOL)..=(1.0 + ROW_SUM_TOL)).contains(&sum) {
            return Err(Error::Numerical(format!("kernel row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Number of halvings that bring λt down to one uniformization stage.
pub fn uniformization_squarings(lambda_t: f64) -> u32 {
    if lambda_t <= UNIFORMIZATION_STAGE {
        0
    } else {
        (lambda_t / UNIFORMIZATION_STAGE).log2().ceil() as u32
    }
}

fn uniformization(q: &DMatrix<f64>, lambda: f64, t: f64, cfg: &ExpmConfig) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    let s = uniformization_squarings(lambda * t);
    if s > cfg.max_squarings {
        return Err(Error::Numerical(format!("λt = {} needs {s} squarings", lambda * t)));
    }
    let scale = 2f64.powi(s as i32);
    let weights = PoissonWeights::new(lambda * t / scale, cfg.truncation_tol / scale);
    let r = DMatrix::identity(n, n) + q / lambda;
    let mut power = DMatrix::identity(n, n);
    let mut acc = DMatrix::zeros(n, n);
    for k in 0..weights.end() {
        if k > 0 {
            power = &power * &r;
        }
        let w = weights.get(k);
        if w > 0.0 {
            acc.zip_apply(&power, |a, p| *a += w * p);
        }
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    Ok(acc)
}

/// exp(A) for any square A: halve until ‖A‖₁ ≤ 1, Horner-evaluate the
/// Taylor polynomial, square back.
pub fn expm_taylor(a: &DMatrix<f64>, cfg: &ExpmConfig) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch(format!("matrix must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let s = if norm > 1.0 { norm.log2().ceil() as u32 } else { 0 };
    if s > cfg.max_squarings {
        return Err(Error::Numerical(format!("‖A‖₁ = {norm} needs {s} squarings")));
    }
    let scaled = a / 2f64.powi(s as i32);
    let id = DMatrix::<f64>::identity(n, n);
    let mut acc = id.clone();
    for k in (1..=cfg.taylor_order).rev() {
        acc = &id + (&scaled * acc) / k as f64;
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    Ok(acc)
}

/// Maximum absolute column sum.
pub fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}
