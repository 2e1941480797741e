//! Fréchet derivatives of the matrix exponential.

use nalgebra::DMatrix;

use super::expm::{expm_taylor, ExpmConfig};
use crate::error::{Error, Result};

/// L(A, E): the upper-right block of exp([[A, E], [0, A]]).
pub fn frechet_derivative(a: &DMatrix<f64>, e: &DMatrix<f64>, cfg: &ExpmConfig) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || e.nrows() != n || e.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "A is {}x{}, E is {}x{}",
            a.nrows(),
            a.ncols(),
            e.nrows(),
            e.ncols()
        )));
    }
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block.view_mut((0, n), (n, n)).copy_from(e);
    block.view_mut((n, n), (n, n)).copy_from(a);
    let full = expm_taylor(&block, cfg)?;
    Ok(full.view((0, n), (n, n)).into_owned())
}

/// G with G_uv = ∂ exp(tQ)_xy / ∂Q_uv, treating every entry of Q as free.
pub fn expm_entry_gradient(q: &DMatrix<f64>, t: f64, x: usize, y: usize, cfg: &ExpmConfig) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    if x >= n || y >= n {
        return Err(Error::IndexOutOfRange {
            index: x.max(y),
            num_states: n,
        });
    }
    let mut e = DMatrix::zeros(n, n);
    e[(x, y)] = 1.0;
    Ok(frechet_derivative(&(q.transpose() * t), &e, cfg)? * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::build_state_dependent_truth;
    use crate::kernels::expm::expm_generator;
    use crate::rng;
    use crate::state_space::StateSpace;
    use rand::Rng;

    fn random_matrix(n: usize, seed: u64) -> DMatrix<f64> {
        let mut r = rng::seeded(seed);
        DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0))
    }

    #[test]
    fn zero_direction_gives_zero() {
        let a = random_matrix(6, 1);
        let l = frechet_derivative(&a, &DMatrix::zeros(6, 6), &ExpmConfig::default()).unwrap();
        assert_eq!(l, DMatrix::zeros(6, 6));
    }

    #[test]
    fn matches_central_differences() {
        let cfg = ExpmConfig::default();
        for seed in 0..5 {
            let a = random_matrix(8, seed);
            let e = random_matrix(8, seed + 100);
            let l = frechet_derivative(&a, &e, &cfg).unwrap();
            let h = 1e-6;
            let fd = (expm_taylor(&(&a + &e * h), &cfg).unwrap() - expm_taylor(&(&a - &e * h), &cfg).unwrap())
                / (2.0 * h);
            let rel = (&l - &fd).abs().max() / l.abs().max();
            assert!(rel < 1e-6, "seed={seed} rel={rel}");
        }
    }

    #[test]
    fn linear_in_direction() {
        let cfg = ExpmConfig::default();
        let a = random_matrix(6, 7);
        let e1 = random_matrix(6, 8);
        let e2 = random_matrix(6, 9);
        let lhs = frechet_derivative(&a, &(&e1 * 0.3 + &e2 * -1.7), &cfg).unwrap();
        let rhs = frechet_derivative(&a, &e1, &cfg).unwrap() * 0.3 + frechet_derivative(&a, &e2, &cfg).unwrap() * -1.7;
        assert!((lhs - rhs).abs().max() < 1e-10);
    }

    #[test]
    fn entry_gradient_matches_finite_differences_on_all_free_entries() {
        let cfg = ExpmConfig::default();
        let sp = StateSpace::codons();
        let gen = build_state_dependent_truth(&sp, 5).unwrap();
        let q = gen.to_dense().unwrap();
        let (x, y, t) = (5, 21, 0.3);
        let g = expm_entry_gradient(&q, t, x, y, &cfg).unwrap();
        let h = 1e-5;
        let mut checked = 0;
        for u in 0..64 {
            for v in 0..64 {
                if u == v || q[(u, v)] == 0.0 {
                    continue;
                }
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[(u, v)] += h;
                qp[(u, u)] -= h;
                qm[(u, v)] -= h;
                qm[(u, u)] += h;
                let fd = (expm_generator(&qp, t, &cfg).unwrap()[(x, y)] - expm_generator(&qm, t, &cfg).unwrap()[(x, y)])
                    / (2.0 * h);
                let analytic = g[(u, v)] - g[(u, u)];
                let scale = analytic.abs().max(1e-4);
                assert!((analytic - fd).abs() / scale < 1e-5, "({u},{v}) {analytic} vs {fd}");
                checked += 1;
            }
        }
        assert_eq!(checked, 576);
    }
}
