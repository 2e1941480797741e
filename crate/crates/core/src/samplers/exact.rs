//! Brute-force reference distributions for samplers on small spaces.

use rand::Rng;

use super::guidance::{tilt_factors, GuidanceConfig};
use super::oracle::FitnessOracle;
use crate::error::Result;
use crate::generators::{FactorizedModel, FullGenerator};
use crate::kernels::{exact_transition, factorized_site_kernels, ExpmConfig, TransitionDistribution};
use crate::state_space::Sequence;

/// Q with every row tilted by the guidance factors at that row's state.
pub fn tilted_generator(q: &FullGenerator, oracle: &dyn FitnessOracle, cfg: &GuidanceConfig) -> Result<FullGenerator> {
    let space = q.space();
    space.ensure_same(oracle.space())?;
    let mut rates = Vec::with_capacity(q.all_neighbor_rates().len());
    let mut tilt = Vec::new();
    for (x, seq) in space.sequences().enumerate() {
        tilt_factors(oracle, cfg, &seq, &mut tilt)?;
        rates.extend(q.neighbor_rates(x).iter().zip(&tilt).map(|(r, f)| r * f));
    }
    FullGenerator::from_neighbor_rates(space.clone(), rates)
}

/// Row x of the exponential of the tilted generator.
pub fn exact_guided_distribution(
    q: &FullGenerator,
    oracle: &dyn FitnessOracle,
    cfg: &GuidanceConfig,
    x: &Sequence,
    t: f64,
    expm: &ExpmConfig,
) -> Result<TransitionDistribution> {
    exact_transition(&tilted_generator(q, oracle, cfg)?, x, t, expm)
}

/// Draws each site independently from its row of exp(t·Q(x)_ℓ), the
/// factorized matrix-exponential sampler.
pub fn sample_factorized<R: Rng + ?Sized>(
    model: &FactorizedModel,
    x: &Sequence,
    t: f64,
    expm: &ExpmConfig,
    rng: &mut R,
) -> Result<Sequence> {
    let kernels = factorized_site_kernels(model, x, t, expm)?;
    let mut y = x.clone();
    for (l, k) in kernels.iter().enumerate() {
        let row = k.row(x.0[l] as usize);
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut pick = x.0[l];
        for (b, &p) in row.iter().enumerate() {
            if p > 0.0 {
                cum += p;
                pick = b as u8;
                if cum > u {
                    break;
                }
            }
        }
        y.0[l] = pick;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{build_state_dependent_truth, kronecker_sum, SiteRateMatrix};
    use crate::rng;
    use crate::samplers::guidance::GuidanceMode;
    use crate::samplers::oracle::{LinearOracle, TabularOracle};
    use crate::state_space::{Alphabet, StateSpace};

    #[test]
    fn zero_gamma_matches_unguided() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 1).unwrap();
        let o = TabularOracle::random(sp.clone(), 1.0, 0.3, &mut rng::seeded(2)).unwrap();
        let cfg = GuidanceConfig::new(0.0, GuidanceMode::Exact).unwrap();
        let x = sp.parse("CGT").unwrap();
        let e = ExpmConfig::default();
        assert_eq!(
            exact_guided_distribution(&q, &o, &cfg, &x, 0.7, &e).unwrap(),
            exact_transition(&q, &x, 0.7, &e).unwrap()
        );
    }

    #[test]
    fn tilting_never_creates_transitions() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 3).unwrap();
        let q = q.map_rates(|x, _, r| if x % 3 == 0 { 0.0 } else { r }).unwrap();
        let o = LinearOracle::random(sp, 2.0, 0.2, &mut rng::seeded(4)).unwrap();
        let tilted = tilted_generator(&q, &o, &GuidanceConfig::new(3.0, GuidanceMode::Tag).unwrap()).unwrap();
        for (a, b) in q.all_neighbor_rates().iter().zip(tilted.all_neighbor_rates()) {
            assert!(*b >= 0.0);
            assert_eq!(*a == 0.0, *b == 0.0);
        }
    }

    #[test]
    fn guidance_moves_mass_to_fitter_states() {
        // Binary alphabet, three sites: fitness counts the B symbols.
        let sp = StateSpace::new(Alphabet::new("AB".chars()).unwrap(), 3).unwrap();
        let mut r = rng::seeded(5);
        let sites: Vec<_> = (0..3).map(|_| SiteRateMatrix::random_uniform(2, &mut r)).collect();
        let q = kronecker_sum(&sp, &sites).unwrap();
        let o = LinearOracle::new(sp.clone(), vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0], 0.5).unwrap();
        let x = sp.parse("AAA").unwrap();
        let e = ExpmConfig::default();
        let plain = exact_transition(&q, &x, 1.0, &e).unwrap();
        let guided =
            exact_guided_distribution(&q, &o, &GuidanceConfig::new(2.0, GuidanceMode::Exact).unwrap(), &x, 1.0, &e)
                .unwrap();
        let mean = |p: &TransitionDistribution| -> f64 {
            sp.sequences().enumerate().map(|(i, s)| p.get(i) * o.mean(&s).unwrap()).sum()
        };
        assert!(mean(&guided) > mean(&plain));
        let top = sp.state_index(&sp.parse("BBB").unwrap()).unwrap();
        assert!(guided.get(top) > plain.get(top));
    }

    #[test]
    fn factorized_sampler_matches_site_kernels() {
        let sp = StateSpace::new(Alphabet::dna(), 1).unwrap();
        let mut r = rng::seeded(6);
        let m = FactorizedModel::context_free(sp.clone(), vec![SiteRateMatrix::random_uniform(4, &mut r)]).unwrap();
        let x = sp.parse("C").unwrap();
        let e = ExpmConfig::default();
        let n = 100_000;
        let draws = (0..n).map(|_| sp.state_index(&sample_factorized(&m, &x, 0.6, &e, &mut r).unwrap()).unwrap());
        let emp = TransitionDistribution::empirical(sp.clone(), draws).unwrap();
        let exact = crate::kernels::factorized_distribution(&m, &x, 0.6, &e).unwrap();
        assert!(emp.total_variation(&exact).unwrap() < 0.01);
    }
}
