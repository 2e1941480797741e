//! Divergences between kernels and distances between generators.

use crate::error::{Error, Result};
use crate::generators::FullGenerator;
use crate::kernels::TransitionDistribution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlResult {
    /// +∞ when q vanishes somewhere p does not.
    pub value: f64,
    pub support_violations: usize,
}

impl KlResult {
    pub fn is_finite(&self) -> bool {
        self.support_violations == 0
    }
}

/// Σ p ln(p/q) with 0·ln 0 = 0.
pub fn kl_divergence(p: &TransitionDistribution, q: &TransitionDistribution) -> Result<KlResult> {
    p.space().ensure_same(q.space())?;
    let mut value = 0.0;
    let mut support_violations = 0;
    for (&pi, &qi) in p.probabilities().iter().zip(q.probabilities()) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            support_violations += 1;
            continue;
        }
        value += pi * (pi / qi).ln();
    }
    if support_violations > 0 {
        value = f64::INFINITY;
    }
    // Rounding can leave a tiny negative sum when p ≈ q.
    Ok(KlResult {
        value: value.max(0.0),
        support_violations,
    })
}

/// ‖Q_est − Q_true‖_F / ‖Q_true‖_F, diagonals included.
pub fn frobenius_relative_error(est: &FullGenerator, truth: &FullGenerator) -> Result<f64> {
    est.space().ensure_same(truth.space())?;
    let denom = truth.frobenius_norm_sq();
    if denom == 0.0 {
        return Err(Error::InvalidArgument("reference generator has zero norm".into()));
    }
    let off: f64 = est
        .all_neighbor_rates()
        .iter()
        .zip(truth.all_neighbor_rates())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let diag: f64 = (0..truth.space().num_states())
        .map(|x| (est.exit_rate(x) - truth.exit_rate(x)).powi(2))
        .sum();
    Ok(((off + diag) / denom).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::build_state_dependent_truth;
    use crate::rng;
    use crate::state_space::StateSpace;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_dist(sp: &StateSpace, r: &mut impl Rng, sparse: bool) -> TransitionDistribution {
        let mut p: Vec<f64> = (0..sp.num_states())
            .map(|_| if sparse && r.random::<f64>() < 0.3 { 0.0 } else { r.random::<f64>() })
            .collect();
        p[0] += 1e-3;
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        TransitionDistribution::new(sp.clone(), p).unwrap()
    }

    #[test]
    fn closed_forms() {
        let sp = StateSpace::codons();
        let point = TransitionDistribution::point_mass(sp.clone(), 5);
        let uni = TransitionDistribution::uniform(sp.clone());
        assert!((kl_divergence(&point, &uni).unwrap().value - 64f64.ln()).abs() < 1e-14);
        assert_eq!(kl_divergence(&uni, &uni).unwrap().value, 0.0);
        let r = kl_divergence(&uni, &point).unwrap();
        assert_eq!((r.value, r.support_violations), (f64::INFINITY, 63));
    }

    #[test]
    fn gibbs_inequality_on_random_pairs() {
        let sp = StateSpace::codons();
        let mut r = rng::seeded(1);
        for _ in 0..1000 {
            let p = random_dist(&sp, &mut r, true);
            let q = random_dist(&sp, &mut r, false);
            assert!(kl_divergence(&p, &q).unwrap().value >= 0.0);
        }
    }

    proptest! {
        #[test]
        fn zero_exactly_when_equal(seed in any::<u64>(), eps in 1e-6f64..1e-2) {
            let sp = StateSpace::codons();
            let mut r = rng::seeded(seed);
            let p = random_dist(&sp, &mut r, false);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap().value, 0.0);
            let mut shifted = p.probabilities().to_vec();
            shifted[0] += eps;
            shifted[1] = (shifted[1] - eps).max(0.0);
            let s: f64 = shifted.iter().sum();
            shifted.iter_mut().for_each(|v| *v /= s);
            let q = TransitionDistribution::new(sp, shifted).unwrap();
            prop_assert!(kl_divergence(&p, &q).unwrap().value > 0.0);
        }
    }

    #[test]
    fn frobenius_values() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 1).unwrap();
        assert_eq!(frobenius_relative_error(&q, &q).unwrap(), 0.0);
        let q2 = q.scaled(2.0).unwrap();
        assert!((frobenius_relative_error(&q2, &q).unwrap() - 1.0).abs() < 1e-14);
        // Not symmetric when the norms differ: 1 vs 1/2.
        assert!((frobenius_relative_error(&q, &q2).unwrap() - 0.5).abs() < 1e-14);
    }
}
