//! Position-by-position sensitivity of predicted site matrices.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::generators::{FactorizedModel, SiteRateMatrix};
use crate::state_space::Sequence;

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianResult {
    /// S[i, j]: mean Frobenius change of site j's matrix over the
    /// alternative symbols at position i.
    pub sensitivity: DMatrix<f64>,
    pub context: Sequence,
}

fn frobenius_diff(a: &SiteRateMatrix, b: &SiteRateMatrix) -> f64 {
    (a.matrix() - b.matrix()).norm()
}

pub fn categorical_jacobian(model: &FactorizedModel, x: &Sequence) -> Result<JacobianResult> {
    let base = model.evaluate_site_matrices(x)?;
    let length = model.space().length();
    let a = model.space().alphabet_size();
    let mut s = DMatrix::zeros(length, length);
    if a < 2 {
        return Ok(JacobianResult {
            sensitivity: s,
            context: x.clone(),
        });
    }
    for i in 0..length {
        for alt in (0..a as u8).filter(|&b| b != x.0[i]) {
            let perturbed = model.evaluate_site_matrices(&x.with_site(i, alt))?;
            for j in 0..length {
                s[(i, j)] += frobenius_diff(&base[j], &perturbed[j]);
            }
        }
        for j in 0..length {
            s[(i, j)] /= (a - 1) as f64;
        }
    }
    Ok(JacobianResult {
        sensitivity: s,
        context: x.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{build_factorized_truth_with_sites, link};
    use crate::rng;
    use crate::state_space::StateSpace;

    #[test]
    fn context_free_is_zero() {
        let sp = StateSpace::codons();
        let (_, sites) = build_factorized_truth_with_sites(&sp, 1).unwrap();
        let m = FactorizedModel::context_free(sp.clone(), sites).unwrap();
        let j = categorical_jacobian(&m, &sp.parse("ACG").unwrap()).unwrap();
        assert_eq!(j.sensitivity, DMatrix::zeros(3, 3));
    }

    #[test]
    fn self_sensitive_model_is_diagonal() {
        let sp = StateSpace::codons();
        // Site ℓ's rates depend only on the symbol currently at ℓ.
        let m = FactorizedModel::tabular_from_fn(sp.clone(), |symbols, site, from, to| {
            0.3 * symbols[site] as f64 + 0.1 * (from * 4 + to) as f64 - 1.0
        })
        .unwrap();
        let j = categorical_jacobian(&m, &sp.parse("TGA").unwrap()).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let v = j.sensitivity[(r, c)];
                assert!(if r == c { v > 0.0 } else { v == 0.0 }, "S[{r},{c}]={v}");
            }
        }
    }

    #[test]
    fn matches_entrywise_recomputation() {
        let sp = StateSpace::codons();
        let m = FactorizedModel::random_tabular(sp.clone(), 1.0, &mut rng::seeded(3)).unwrap();
        let theta = m.theta().unwrap();
        let x = sp.parse("CAT").unwrap();
        let j = categorical_jacobian(&m, &x).unwrap();
        let entry = |ctx: usize, site: usize, from: usize, to: usize| -> f64 {
            if from == to {
                -(0..4).filter(|&b| b != from).map(|b| link::rate(theta[crate::generators::tabular_index(&sp, ctx, site, from as u8, b as u8)])).sum::<f64>()
            } else {
                link::rate(theta[crate::generators::tabular_index(&sp, ctx, site, from as u8, to as u8)])
            }
        };
        let x_idx = sp.state_index(&x).unwrap();
        for i in 0..3 {
            for jj in 0..3 {
                let mut total = 0.0;
                // Alternatives enumerated in reverse order.
                for alt in (0..4u8).rev().filter(|&b| b != x.0[i]) {
                    let y_idx = sp.state_index(&x.with_site(i, alt)).unwrap();
                    let mut sq = 0.0;
                    for from in 0..4 {
                        for to in 0..4 {
                            sq += (entry(x_idx, jj, from, to) - entry(y_idx, jj, from, to)).powi(2);
                        }
                    }
                    total += sq.sqrt();
                }
                assert!((total / 3.0 - j.sensitivity[(i, jj)]).abs() < 1e-12);
            }
        }
    }
}
