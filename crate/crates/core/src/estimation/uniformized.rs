//! Negative log-likelihood of observed transitions and its gradient with
//! respect to the generator, through the uniformized series
//! exp(tQ) = Σ_n Pois(n; λt) Rⁿ with R = I + Q/λ.
//!
//! The gradient runs the series backwards (an adjoint pass), so one forward
//! and one backward sweep over the powers of R cover every record at once.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::PoissonWeights;

/// Probabilities below this are floored before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

/// One observation: entry (a, b) of exp(tQ), weighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Obs {
    pub a: usize,
    pub b: usize,
    pub t: f64,
    pub w: f64,
}

/// Multiplication by the jump matrix R.
pub(crate) trait JumpOperator {
    fn dim(&self) -> usize;
    /// out = m·R
    fn right(&self, m: &DMatrix<f64>, out: &mut DMatrix<f64>);
    /// out = h·Rᵀ
    fn right_t(&self, h: &DMatrix<f64>, out: &mut DMatrix<f64>);
    /// out = Rᵀ·k
    fn left_t(&self, k: &DMatrix<f64>, out: &mut DMatrix<f64>);
}

pub(crate) struct DenseJump {
    r: DMatrix<f64>,
    rt: DMatrix<f64>,
}

impl DenseJump {
    pub fn new(q: &DMatrix<f64>, lambda: f64) -> Self {
        let n = q.nrows();
        let r = DMatrix::identity(n, n) + q / lambda;
        let rt = r.transpose();
        Self { r, rt }
    }
}

impl JumpOperator for DenseJump {
    fn dim(&self) -> usize {
        self.r.nrows()
    }
    fn right(&self, m: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        out.gemm(1.0, m, &self.r, 0.0);
    }
    fn right_t(&self, h: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        out.gemm(1.0, h, &self.rt, 0.0);
    }
    fn left_t(&self, k: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        out.gemm(1.0, &self.rt, k, 0.0);
    }
}

/// R stored as a diagonal plus a fixed number of off-diagonal entries per row.
pub(crate) struct SparseJump {
    n: usize,
    k: usize,
    cols: Vec<usize>,
    vals: Vec<f64>,
    stay: Vec<f64>,
}

impl SparseJump {
    /// `cols[x·k + j]` is the j-th neighbor of x and `rates` the matching
    /// off-diagonal entries of Q.
    pub fn new(n: usize, k: usize, cols: Vec<usize>, rates: &[f64], lambda: f64) -> Self {
        let vals: Vec<f64> = rates.iter().map(|r| r / lambda).collect();
        let stay = (0..n).map(|x| 1.0 - vals[x * k..(x + 1) * k].iter().sum::<f64>()).collect();
        Self { n, k, cols, vals, stay }
    }

    fn row(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        std::iter::once((x, self.stay[x])).chain(
            self.cols[x * self.k..(x + 1) * self.k]
                .iter()
                .copied()
                .zip(self.vals[x * self.k..(x + 1) * self.k].iter().copied()),
        )
    }
}

fn axpy_col(out: &mut DMatrix<f64>, dst: usize, src: &DMatrix<f64>, col: usize, c: f64) {
    let n = src.nrows();
    let s = &src.as_slice()[col * n..(col + 1) * n];
    let d = &mut out.as_mut_slice()[dst * n..(dst + 1) * n];
    for (o, v) in d.iter_mut().zip(s) {
        *o += c * v;
    }
}

impl JumpOperator for SparseJump {
    fn dim(&self) -> usize {
        self.n
    }
    fn right(&self, m: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        // (mR)[:, y] = Σ_x m[:, x] R[x, y]
        out.fill(0.0);
        for x in 0..self.n {
            for (y, v) in self.row(x) {
                axpy_col(out, y, m, x, v);
            }
        }
    }
    fn right_t(&self, h: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        // (hRᵀ)[:, j] = Σ_x h[:, x] R[j, x]
        out.fill(0.0);
        for j in 0..self.n {
            for (x, v) in self.row(j) {
                axpy_col(out, j, h, x, v);
            }
        }
    }
    fn left_t(&self, k: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        // (Rᵀk)[y, :] = Σ_x R[x, y] k[x, :]
        out.fill(0.0);
        let n = self.n;
        let ks = k.as_slice();
        let os = out.as_mut_slice();
        for col in 0..n {
            let kc = &ks[col * n..(col + 1) * n];
            let oc = &mut os[col * n..(col + 1) * n];
            for x in 0..n {
                let kx = kc[x];
                if kx == 0.0 {
                    continue;
                }
                oc[x] += self.stay[x] * kx;
                for j in 0..self.k {
                    oc[self.cols[x * self.k + j]] += self.vals[x * self.k + j] * kx;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NllSum {
    /// Σ_i w_i·(−ln P_i).
    pub loss: f64,
    pub floor_hits: usize,
    /// ∂loss/∂Q with every entry of Q treated as free.
    pub grad_q: Option<DMatrix<f64>>,
}

/// Weighted negative log-likelihood of `obs` under exp(tQ), where R is the
/// jump matrix for uniformization rate `lambda` (any λ > 0 is exact; the
/// maximum exit rate keeps R non-negative).
pub(crate) fn uniformized_nll(
    op: &impl JumpOperator,
    lambda: f64,
    obs: &[Obs],
    tol: f64,
    want_grad: bool,
) -> Result<NllSum> {
    let n = op.dim();
    let mut window_of: HashMap<u64, usize> = HashMap::new();
    let mut windows: Vec<PoissonWeights> = Vec::new();
    let mut which = Vec::with_capacity(obs.len());
    for o in obs {
        let idx = *window_of.entry(o.t.to_bits()).or_insert_with(|| {
            windows.push(PoissonWeights::new(lambda * o.t, tol));
            windows.len() - 1
        });
        which.push(idx);
    }
    let terms = windows.iter().map(PoissonWeights::end).max().unwrap_or(1);

    let mut powers = Vec::with_capacity(terms);
    powers.push(DMatrix::identity(n, n));
    for k in 1..terms {
        let mut next = DMatrix::zeros(n, n);
        op.right(&powers[k - 1], &mut next);
        powers.push(next);
    }

    let mut loss = 0.0;
    let mut floor_hits = 0;
    let mut probs = Vec::with_capacity(obs.len());
    for (o, &wi) in obs.iter().zip(&which) {
        let p: f64 = windows[wi].iter().map(|(k, pk)| pk * powers[k][(o.a, o.b)]).sum();
        if !p.is_finite() {
            return Err(Error::Numerical(format!("non-finite transition probability at t={}", o.t)));
        }
        if p < PROB_FLOOR {
            floor_hits += 1;
        }
        loss -= o.w * p.max(PROB_FLOOR).ln();
        probs.push(p);
    }
    if !want_grad {
        return Ok(NllSum { loss, floor_hits, grad_q: None });
    }

    // c_k = ∂loss/∂(R^k), non-zero only on observed entries.
    let mut c = vec![DMatrix::<f64>::zeros(n, n); terms];
    for ((o, &wi), &p) in obs.iter().zip(&which).zip(&probs) {
        if p < PROB_FLOOR {
            continue;
        }
        let coef = -o.w / p;
        for (k, pk) in windows[wi].iter() {
            c[k][(o.a, o.b)] += coef * pk;
        }
    }
    drop(powers);

    // ∂(R^k)_{ab}/∂R = Σ_{j<k} (Rᵀ)^j e_a e_bᵀ (Rᵀ)^{k-1-j}; with
    // H_m = Σ_{k>m} c_k (Rᵀ)^{k-1-m} the total is Σ_m (Rᵀ)^m H_m,
    // accumulated by Horner from the top.
    let mut grad_r = DMatrix::zeros(n, n);
    if terms > 1 {
        let mut h = c[terms - 1].clone();
        let mut scratch = DMatrix::zeros(n, n);
        let mut kacc = h.clone();
        for m in (0..terms - 2).rev() {
            op.right_t(&h, &mut scratch);
            std::mem::swap(&mut h, &mut scratch);
            h += &c[m + 1];
            op.left_t(&kacc, &mut scratch);
            std::mem::swap(&mut kacc, &mut scratch);
            kacc += &h;
        }
        grad_r = kacc;
    }
    Ok(NllSum {
        loss,
        floor_hits,
        grad_q: Some(grad_r / lambda),
    })
}
