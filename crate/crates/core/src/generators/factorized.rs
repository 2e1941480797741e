use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::full::{kronecker_sum, FullGenerator};
use super::link;
use super::site::SiteRateMatrix;
use crate::error::{Error, Result};
use crate::state_space::{Sequence, StateSpace, DEFAULT_DENSE_CAP};

/// Standard deviation of the Normal initialization of tabular parameters.
pub const INIT_STD: f64 = 0.1;

/// How a factorized model produces its site matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum Parameterization {
    /// One site matrix per site, shared by every context.
    ContextFree(Vec<SiteRateMatrix>),
    /// Free parameters θ[x][ℓ][a][b], b ≠ a, mapped through softplus.
    ///
    /// Flat layout: `((x·L + ℓ)·A + a)·(A−1) + b'` where `b'` skips `a`.
    ContextTabular(Vec<f64>),
    /// Explicit site matrices for every context, indexed `[x][ℓ]`.
    ContextExplicit(Vec<Vec<SiteRateMatrix>>),
}

/// A model that predicts L per-site generators from the full sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedModel {
    space: StateSpace,
    param: Parameterization,
}

impl FactorizedModel {
    pub fn context_free(space: StateSpace, sites: Vec<SiteRateMatrix>) -> Result<Self> {
        check_sites(&space, &sites)?;
        Ok(Self {
            space,
            param: Parameterization::ContextFree(sites),
        })
    }

    pub fn tabular(space: StateSpace, theta: Vec<f64>) -> Result<Self> {
        space.require_dense(DEFAULT_DENSE_CAP)?;
        let expected = tabular_len(&space);
        if theta.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} tabular parameters, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("tabular parameters must be finite".into()));
        }
        Ok(Self {
            space,
            param: Parameterization::ContextTabular(theta),
        })
    }

    /// Tabular model with θ(x, ℓ, a, b) supplied by `f`.
    pub fn tabular_from_fn(
        space: StateSpace,
        mut f: impl FnMut(&[u8], usize, u8, u8) -> f64,
    ) -> Result<Self> {
        space.require_dense(DEFAULT_DENSE_CAP)?;
        let a = space.alphabet_size();
        let mut theta = Vec::with_capacity(tabular_len(&space));
        let mut symbols = vec![0u8; space.length()];
        for x in 0..space.num_states() {
            space.decode_into(x, &mut symbols);
            for site in 0..space.length() {
                for from in 0..a as u8 {
                    for to in (0..a as u8).filter(|&b| b != from) {
                        theta.push(f(&symbols, site, from, to));
                    }
                }
            }
        }
        Self::tabular(space, theta)
    }

    /// Tabular model with θ drawn i.i.d. from Normal(0, `std`).
    pub fn random_tabular<R: Rng + ?Sized>(space: StateSpace, std: f64, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let theta = (0..tabular_len(&space)).map(|_| normal.sample(rng)).collect();
        Self::tabular(space, theta)
    }

    /// Explicit per-context site matrices, `sites[x][ℓ]`.
    pub fn explicit(space: StateSpace, sites: Vec<Vec<SiteRateMatrix>>) -> Result<Self> {
        space.require_dense(DEFAULT_DENSE_CAP)?;
        if sites.len() != space.num_states() {
            return Err(Error::ShapeMismatch(format!(
                "expected site matrices for {} contexts, got {}",
                space.num_states(),
                sites.len()
            )));
        }
        for row in &sites {
            check_sites(&space, row)?;
        }
        Ok(Self {
            space,
            param: Parameterization::ContextExplicit(sites),
        })
    }

    /// Model whose site matrices at every context reproduce the truth's
    /// single-mutation rates out of that context.
    pub fn matched_to_truth(q: &FullGenerator) -> Result<Self> {
        let space = q.space().clone();
        let sites = space
            .sequences()
            .map(|x| crate::kernels::match_rows_to_truth(q, &x))
            .collect::<Result<Vec<_>>>()?;
        Self::explicit(space, sites)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn parameterization(&self) -> &Parameterization {
        &self.param
    }

    pub fn theta(&self) -> Option<&[f64]> {
        match &self.param {
            Parameterization::ContextTabular(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_context_free(&self) -> bool {
        matches!(self.param, Parameterization::ContextFree(_))
    }

    /// {Q(x)_ℓ} for ℓ = 0..L.
    pub fn evaluate_site_matrices(&self, context: &Sequence) -> Result<Vec<SiteRateMatrix>> {
        self.space.check(context)?;
        Ok(self.site_matrices_unchecked(context.symbols()))
    }

    pub(crate) fn site_matrices_unchecked(&self, symbols: &[u8]) -> Vec<SiteRateMatrix> {
        (0..self.space.length()).map(|l| self.site_matrix_unchecked(symbols, l)).collect()
    }

    pub(crate) fn site_matrix_unchecked(&self, symbols: &[u8], site: usize) -> SiteRateMatrix {
        match &self.param {
            Parameterization::ContextFree(sites) => sites[site].clone(),
            Parameterization::ContextExplicit(sites) => sites[self.space.index_unchecked(symbols)][site].clone(),
            Parameterization::ContextTabular(theta) => {
                let x = self.space.index_unchecked(symbols);
                let a = self.space.alphabet_size();
                SiteRateMatrix::from_off_diagonal(a, |from, to| {
                    link::rate(theta[tabular_index(&self.space, x, site, from as u8, to as u8)])
                })
                .expect("softplus rates are valid")
            }
        }
    }

    /// (Q(x)_ℓ)_{from,to} for `from != to`.
    #[inline]
    pub(crate) fn site_rate(&self, x: usize, site: usize, from: u8, to: u8) -> f64 {
        match &self.param {
            Parameterization::ContextFree(sites) => sites[site].rate(from as usize, to as usize),
            Parameterization::ContextExplicit(sites) => sites[x][site].rate(from as usize, to as usize),
            Parameterization::ContextTabular(theta) => link::rate(theta[tabular_index(&self.space, x, site, from, to)]),
        }
    }

    /// Rates of the L·(|A|−1) single mutations out of `symbols` (state index
    /// `x`), in neighbor order; returns the exit rate.
    pub(crate) fn neighbor_rates_into(&self, symbols: &[u8], x: usize, out: &mut Vec<f64>) -> f64 {
        out.clear();
        let a = self.space.alphabet_size() as u8;
        let mut exit = 0.0;
        for (site, &cur) in symbols.iter().enumerate() {
            for b in (0..a).filter(|&b| b != cur) {
                let r = self.site_rate(x, site, cur, b);
                out.push(r);
                exit += r;
            }
        }
        exit
    }

    /// Neighbor rates out of a sequence, validated.
    pub fn neighbor_rates(&self, x: &Sequence) -> Result<Vec<f64>> {
        self.space.check(x)?;
        let idx = self.index_for_rates(x.symbols());
        let mut out = Vec::with_capacity(self.space.num_neighbors());
        let exit = self.neighbor_rates_into(x.symbols(), idx, &mut out);
        if !exit.is_finite() {
            return Err(Error::NonFiniteRate(self.space.format(x)));
        }
        Ok(out)
    }

    /// State index when the parameterization needs one; context-free
    /// models never index, so they also work beyond the dense cap.
    #[inline]
    pub(crate) fn index_for_rates(&self, symbols: &[u8]) -> usize {
        match self.param {
            Parameterization::ContextFree(_) => 0,
            _ => self.space.index_unchecked(symbols),
        }
    }

    /// The full generator with Q̂_xy = (Q(x)_ℓ)_{x_ℓ,y_ℓ} for every
    /// single-site neighbor y.
    pub fn assemble_full(&self) -> Result<FullGenerator> {
        if let Parameterization::ContextFree(sites) = &self.param {
            return kronecker_sum(&self.space, sites);
        }
        self.space.require_dense(DEFAULT_DENSE_CAP)?;
        let mut rates = Vec::with_capacity(self.space.num_states() * self.space.num_neighbors());
        let mut row = Vec::new();
        let mut symbols = vec![0u8; self.space.length()];
        for x in 0..self.space.num_states() {
            self.space.decode_into(x, &mut symbols);
            self.neighbor_rates_into(&symbols, x, &mut row);
            rates.extend_from_slice(&row);
        }
        FullGenerator::from_neighbor_rates(self.space.clone(), rates)
    }
}

fn check_sites(space: &StateSpace, sites: &[SiteRateMatrix]) -> Result<()> {
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
    Ok(())
}

/// Number of tabular parameters: |S|·L·|A|·(|A|−1).
pub fn tabular_len(space: &StateSpace) -> usize {
    let a = space.alphabet_size();
    space.num_states() * space.length() * a * (a - 1)
}

/// Flat position of θ[x][site][from][to].
#[inline]
pub fn tabular_index(space: &StateSpace, x: usize, site: usize, from: u8, to: u8) -> usize {
    let a = space.alphabet_size();
    let offset = if to < from { to } else { to - 1 } as usize;
    ((x * space.length() + site) * a + from as usize) * (a - 1) + offset
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::full::{build_factorized_truth_with_sites, build_state_dependent_truth};
    use crate::rng;

    #[test]
    fn context_free_is_context_independent() {
        let sp = StateSpace::codons();
        let (_, sites) = build_factorized_truth_with_sites(&sp, 3).unwrap();
        let m = FactorizedModel::context_free(sp.clone(), sites.clone()).unwrap();
        let a = m.evaluate_site_matrices(&sp.parse("ACG").unwrap()).unwrap();
        let b = m.evaluate_site_matrices(&sp.parse("TTA").unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, sites);
    }

    #[test]
    fn zero_theta_gives_ln2_rates() {
        let sp = StateSpace::codons();
        let m = FactorizedModel::tabular(sp.clone(), vec![0.0; tabular_len(&sp)]).unwrap();
        for x in sp.sequences().step_by(7) {
            for q in m.evaluate_site_matrices(&x).unwrap() {
                for a in 0..4 {
                    for b in (0..4).filter(|&b| b != a) {
                        assert!((q.rate(a, b) - std::f64::consts::LN_2).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn random_tabular_rows_sum_to_zero() {
        let sp = StateSpace::codons();
        let mut r = rng::seeded(17);
        let m = FactorizedModel::random_tabular(sp.clone(), 1.0, &mut r).unwrap();
        for _ in 0..100 {
            let x = sp.index_to_sequence(r.random_range(0..64)).unwrap();
            for q in m.evaluate_site_matrices(&x).unwrap() {
                for a in 0..4 {
                    assert!(q.matrix().row(a).sum().abs() < 1e-12);
                    assert!((0..4).filter(|&b| b != a).all(|b| q.rate(a, b) > 0.0));
                }
            }
        }
    }

    #[test]
    fn tabular_layout_round_trips_through_from_fn() {
        let sp = StateSpace::codons();
        let m = FactorizedModel::tabular_from_fn(sp.clone(), |s, l, a, b| {
            (sp.index_unchecked(s) * 100 + l * 16 + a as usize * 4 + b as usize) as f64
        })
        .unwrap();
        let theta = m.theta().unwrap();
        for x in [0usize, 17, 63] {
            for l in 0..3 {
                for a in 0..4u8 {
                    for b in (0..4u8).filter(|&b| b != a) {
                        let v = theta[tabular_index(&sp, x, l, a, b)];
                        assert_eq!(v, (x * 100 + l * 16 + a as usize * 4 + b as usize) as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn assemble_context_free_is_kronecker_sum() {
        let sp = StateSpace::codons();
        let (q, sites) = build_factorized_truth_with_sites(&sp, 9).unwrap();
        let m = FactorizedModel::context_free(sp, sites).unwrap();
        assert_eq!(m.assemble_full().unwrap(), q);
    }

    #[test]
    fn matched_model_reassembles_truth() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 4).unwrap();
        let m = FactorizedModel::matched_to_truth(&q).unwrap();
        assert_eq!(m.assemble_full().unwrap(), q);
    }

    #[test]
    fn shape_errors() {
        let sp = StateSpace::codons();
        assert!(FactorizedModel::tabular(sp.clone(), vec![0.0; 5]).is_err());
        assert!(FactorizedModel::context_free(sp.clone(), vec![]).is_err());
        let m = FactorizedModel::tabular(sp, vec![0.0; 2304]).unwrap();
        assert!(m.evaluate_site_matrices(&Sequence(vec![0, 1])).is_err());
    }
}
