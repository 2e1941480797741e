//! Mean negative log-likelihoods of transition data and their gradients in
//! the free (softplus) parameters.

use nalgebra::DMatrix;

use super::dataset::TransitionDataset;
use super::uniformized::{uniformized_nll, DenseJump, Obs, SparseJump};
use crate::error::{Error, Result};
use crate::generators::{link, tabular_index, tabular_len, FactorizedModel, FullGenerator};
use crate::par;
use crate::state_space::StateSpace;

/// Per-record weight of the SNR-weighted objective.
#[inline]
pub fn snr_weight(t: f64, delta: f64) -> f64 {
    1.0 / (delta + t).max(1e-12)
}

/// Loss, floor hits and optional gradient.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    pub floor_hits: usize,
    pub gradient: Option<Vec<f64>>,
}

/// Loss, floor hits and optional rate gradient of one (context, site) group.
type GroupOutcome = (f64, usize, Option<DMatrix<f64>>);

/// Observations prepared for a full generator.
pub(crate) struct FullProblem {
    space: StateSpace,
    cols: Vec<usize>,
    obs: Vec<Obs>,
    records: usize,
}

impl FullProblem {
    pub fn new(data: &TransitionDataset) -> Result<Self> {
        let space = data.space().clone();
        space.require_dense(crate::generators::DENSE_MATRIX_CAP)?;
        let mut cols = Vec::with_capacity(space.num_states() * space.num_neighbors());
        let mut buf = Vec::new();
        let mut symbols = vec![0u8; space.length()];
        for x in 0..space.num_states() {
            space.decode_into(x, &mut symbols);
            space.neighbor_indices(x, &symbols, &mut buf);
            cols.extend_from_slice(&buf);
        }
        let obs = data
            .records()
            .iter()
            .map(|r| {
                Ok(Obs {
                    a: space.state_index(&r.parent)?,
                    b: space.state_index(&r.child)?,
                    t: r.branch_length,
                    w: 1.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space,
            cols,
            obs,
            records: data.len(),
        })
    }

    pub fn num_params(&self) -> usize {
        self.cols.len()
    }

    /// Gradient is with respect to the neighbor rates.
    pub fn eval_rates(&self, rates: &[f64], tol: f64, want_grad: bool) -> Result<Evaluation> {
        let n = self.space.num_states();
        let k = self.space.num_neighbors();
        if self.records == 0 {
            return Ok(Evaluation {
                loss: 0.0,
                floor_hits: 0,
                gradient: want_grad.then(|| vec![0.0; rates.len()]),
            });
        }
        let lambda = (0..n).map(|x| rates[x * k..(x + 1) * k].iter().sum::<f64>()).fold(0.0, f64::max);
        let lambda = if lambda > 0.0 { lambda } else { 1.0 };
        let op = SparseJump::new(n, k, self.cols.clone(), rates, lambda);
        let out = uniformized_nll(&op, lambda, &self.obs, tol, want_grad)?;
        let scale = 1.0 / self.records as f64;
        let gradient = out.grad_q.map(|g| {
            (0..n * k)
                .map(|i| {
                    let x = i / k;
                    (g[(x, self.cols[i])] - g[(x, x)]) * scale
                })
                .collect()
        });
        Ok(Evaluation {
            loss: out.loss * scale,
            floor_hits: out.floor_hits,
            gradient,
        })
    }

    /// Gradient is with respect to φ, rates = softplus(φ).
    pub fn eval_params(&self, phi: &[f64], tol: f64, want_grad: bool) -> Result<Evaluation> {
        let rates: Vec<f64> = phi.iter().map(|&p| link::rate(p)).collect();
        let mut ev = self.eval_rates(&rates, tol, want_grad)?;
        if let Some(g) = ev.gradient.as_mut() {
            for (gi, &p) in g.iter_mut().zip(phi) {
                *gi *= link::rate_derivative(p);
            }
        }
        Ok(ev)
    }
}

struct Group {
    x: usize,
    site: usize,
    symbols: Vec<u8>,
    obs: Vec<Obs>,
}

/// Observations split into independent (context, site) groups.
pub(crate) struct FactorizedProblem {
    space: StateSpace,
    groups: Vec<Group>,
    records: usize,
}

impl FactorizedProblem {
    pub fn new(data: &TransitionDataset, snr_delta: Option<f64>) -> Result<Self> {
        let space = data.space().clone();
        let length = space.length();
        let mut slots: Vec<Option<Group>> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for r in data.records() {
            let x = space.state_index(&r.parent)?;
            let w = snr_delta.map_or(1.0, |d| snr_weight(r.branch_length, d));
            for site in 0..length {
                let key = x * length + site;
                let slot = *index.entry(key).or_insert_with(|| {
                    slots.push(Some(Group {
                        x,
                        site,
                        symbols: r.parent.symbols().to_vec(),
                        obs: Vec::new(),
                    }));
                    slots.len() - 1
                });
                slots[slot].as_mut().expect("group present").obs.push(Obs {
                    a: r.parent.symbols()[site] as usize,
                    b: r.child.symbols()[site] as usize,
                    t: r.branch_length,
                    w,
                });
            }
        }
        let mut groups: Vec<Group> = slots.into_iter().flatten().collect();
        groups.sort_by_key(|g| (g.x, g.site));
        Ok(Self {
            space,
            groups,
            records: data.len(),
        })
    }

    fn eval_with(
        &self,
        site_matrix: impl Fn(&Group) -> DMatrix<f64> + Sync + Send,
        tol: f64,
        want_grad: bool,
    ) -> Result<Vec<GroupOutcome>> {
        par::map_slice(&self.groups, |g| {
            let q = site_matrix(g);
            let lambda = (0..q.nrows()).map(|i| -q[(i, i)]).fold(0.0, f64::max);
            let lambda = if lambda > 0.0 { lambda } else { 1.0 };
            let out = uniformized_nll(&DenseJump::new(&q, lambda), lambda, &g.obs, tol, want_grad)?;
            Ok((out.loss, out.floor_hits, out.grad_q))
        })
        .into_iter()
        .collect()
    }

    /// Mean loss of an arbitrary factorized model.
    pub fn eval_model(&self, model: &FactorizedModel, tol: f64) -> Result<Evaluation> {
        self.space.ensure_same(model.space())?;
        let parts = self.eval_with(|g| model.site_matrix_unchecked(&g.symbols, g.site).matrix().clone(), tol, false)?;
        Ok(self.reduce(parts, None))
    }

    /// Loss and gradient with respect to tabular θ.
    pub fn eval_theta(&self, theta: &[f64], tol: f64, want_grad: bool) -> Result<Evaluation> {
        if theta.len() != tabular_len(&self.space) {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                tabular_len(&self.space),
                theta.len()
            )));
        }
        let a = self.space.alphabet_size();
        let sp = &self.space;
        let parts = self.eval_with(
            |g| {
                let mut q = DMatrix::zeros(a, a);
                for from in 0..a {
                    for to in (0..a).filter(|&to| to != from) {
                        let r = link::rate(theta[tabular_index(sp, g.x, g.site, from as u8, to as u8)]);
                        q[(from, to)] = r;
                        q[(from, from)] -= r;
                    }
                }
                q
            },
            tol,
            want_grad,
        )?;
        let grad = want_grad.then(|| vec![0.0; theta.len()]);
        let mut ev = self.reduce(parts.clone(), None);
        if let Some(mut grad) = grad {
            let scale = self.scale();
            for (g, (_, _, gq)) in self.groups.iter().zip(parts) {
                let gq = gq.expect("gradient requested");
                for from in 0..a {
                    for to in (0..a).filter(|&to| to != from) {
                        let i = tabular_index(sp, g.x, g.site, from as u8, to as u8);
                        grad[i] = (gq[(from, to)] - gq[(from, from)]) * link::rate_derivative(theta[i]) * scale;
                    }
                }
            }
            ev.gradient = Some(grad);
        }
        Ok(ev)
    }

    fn scale(&self) -> f64 {
        if self.records == 0 {
            0.0
        } else {
            1.0 / self.records as f64
        }
    }

    fn reduce(&self, parts: Vec<(f64, usize, Option<DMatrix<f64>>)>, gradient: Option<Vec<f64>>) -> Evaluation {
        let loss = parts.iter().map(|p| p.0).sum::<f64>() * self.scale();
        let floor_hits = parts.iter().map(|p| p.1).sum();
        Evaluation {
            loss,
            floor_hits,
            gradient,
        }
    }
}

/// Mean of −ln exp(tQ)_{xy} over the dataset.
pub fn nll_full(q: &FullGenerator, data: &TransitionDataset, tol: f64) -> Result<f64> {
    data.space().ensure_same(q.space())?;
    Ok(FullProblem::new(data)?.eval_rates(q.all_neighbor_rates(), tol, false)?.loss)
}

/// [`nll_full`] at rates softplus(φ) with its gradient in φ.
pub fn nll_full_with_gradient(phi: &[f64], data: &TransitionDataset, tol: f64) -> Result<Evaluation> {
    let problem = FullProblem::new(data)?;
    if phi.len() != problem.num_params() {
        return Err(Error::ShapeMismatch(format!("expected {} parameters, got {}", problem.num_params(), phi.len())));
    }
    problem.eval_params(phi, tol, true)
}

/// Mean over records of −Σ_ℓ ln exp(t Q(x)_ℓ)_{x_ℓ y_ℓ}, each record
/// weighted by 1/(δ+t) when `snr_delta` is given.
pub fn nll_factorized(
    model: &FactorizedModel,
    data: &TransitionDataset,
    snr_delta: Option<f64>,
    tol: f64,
) -> Result<f64> {
    Ok(FactorizedProblem::new(data, snr_delta)?.eval_model(model, tol)?.loss)
}

/// [`nll_factorized`] at tabular θ with its gradient in θ.
pub fn nll_factorized_with_gradient(
    theta: &[f64],
    data: &TransitionDataset,
    snr_delta: Option<f64>,
    tol: f64,
) -> Result<Evaluation> {
    FactorizedProblem::new(data, snr_delta)?.eval_theta(theta, tol, true)
}
