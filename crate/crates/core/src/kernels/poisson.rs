//! Truncated Poisson weight vectors for uniformization.

use statrs::function::gamma::ln_gamma;

/// Fewest terms ever returned.
pub const MIN_TERMS: usize = 5;

/// Poisson(n; μ) for n in `start..start + weights.len()`, with the mass
/// outside that window below the requested tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl PoissonWeights {
    /// Walks outward from the mode in log space. Each tail is bounded by a
    /// geometric series whose ratio is the last term ratio, so truncation
    /// stops only once the true remaining mass is below `tol / 2`. The kept
    /// weights are renormalized, which also absorbs rounding in the mode
    /// term for large means.
    pub fn new(mu: f64, tol: f64) -> Self {
        assert!(mu.is_finite() && mu >= 0.0, "Poisson mean must be finite and non-negative");
        if mu == 0.0 {
            let mut weights = vec![0.0; MIN_TERMS];
            weights[0] = 1.0;
            return Self { start: 0, weights };
        }
        let half = 0.5 * tol;
        let mode = mu.floor() as usize;
        let w_mode = (-mu + mode as f64 * mu.ln() - ln_gamma(mode as f64 + 1.0)).exp();

        let mut right = vec![w_mode];
        let mut n = mode;
        let mut w = w_mode;
        loop {
            let next = w * mu / (n + 1) as f64;
            let ratio = mu / (n + 2) as f64;
            if ratio < 1.0 && next / (1.0 - ratio) < half {
                break;
            }
            right.push(next);
            w = next;
            n += 1;
        }

        let mut left = Vec::new();
        let mut n = mode;
        let mut w = w_mode;
        while n > 0 {
            let prev = w * n as f64 / mu;
            let ratio = (n - 1) as f64 / mu;
            if ratio < 1.0 && prev / (1.0 - ratio) < half {
                break;
            }
            left.push(prev);
            w = prev;
            n -= 1;
        }

        let start = mode - left.len();
        left.reverse();
        left.extend(right);
        let mut weights = left;
        while weights.len() < MIN_TERMS {
            let n = start + weights.len();
            let last = *weights.last().expect("non-empty");
            weights.push(last * mu / n as f64);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { start, weights }
    }

    /// One past the largest index carried.
    pub fn end(&self) -> usize {
        self.start + self.weights.len()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// (n, weight) pairs in increasing n.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.start + i, w))
    }

    /// Weight of term `n`, zero outside the window.
    pub fn get(&self, n: usize) -> f64 {
        if n < self.start {
            0.0
        } else {
            self.weights.get(n - self.start).copied().unwrap_or(0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{Discrete, Poisson};

    #[test]
    fn matches_reference_pmf() {
        for &mu in &[0.01, 0.7, 3.0, 25.0, 400.0] {
            let w = PoissonWeights::new(mu, 1e-12);
            let reference = Poisson::new(mu).unwrap();
            for (n, v) in w.iter() {
                let r = reference.pmf(n as u64);
                assert!((v - r).abs() <= 1e-11 * r + 1e-13, "mu={mu} n={n} {v} vs {r}");
            }
            assert!((1.0 - w.mass()).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_mean_is_point_mass() {
        let w = PoissonWeights::new(0.0, 1e-12);
        assert_eq!(w.get(0), 1.0);
        assert_eq!(w.mass(), 1.0);
    }

    #[test]
    fn always_at_least_five_terms() {
        let w = PoissonWeights::new(1e-9, 1e-6);
        assert!(w.weights.len() >= MIN_TERMS);
    }

    proptest! {
        #[test]
        fn dropped_mass_below_tolerance(mu in 1e-4f64..2000.0, exp in 6i32..14) {
            let tol = 10f64.powi(-exp);
            let w = PoissonWeights::new(mu, tol);
            let reference = Poisson::new(mu).unwrap();
            let kept: f64 = (w.start..w.end()).map(|n| reference.pmf(n as u64)).sum();
            prop_assert!(1.0 - kept < tol + 1e-11);
            prop_assert!(w.weights.iter().all(|v| *v >= 0.0));
        }
    }
}
