//! Transition datasets drawn from an exact kernel.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::FullGenerator;
use crate::kernels::{expm_generator, ExpmConfig, PoissonWeights};
use crate::rng;
use crate::state_space::{Alphabet, Sequence, StateSpace, TransitionRecord};

/// Default number of equal-probability branch-length bins.
pub const DEFAULT_BINS: usize = 512;

/// Spaces up to this size share one table of jump-chain powers across bins.
const SHARED_POWER_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantization {
    pub bins: usize,
    /// Widest finite bin; the last bin is unbounded.
    pub max_finite_bin_width: f64,
    /// ‖d/dt exp(tQ)‖ ≤ 2λ, so moving t by δ moves each kernel row by at
    /// most 2λδ in L1.
    pub lipschitz_l1_per_unit_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub alphabet: Alphabet,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantization: Option<Quantization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset {
    space: StateSpace,
    records: Vec<TransitionRecord>,
    pub header: DatasetHeader,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    x: String,
    y: String,
    t: f64,
}

impl TransitionDataset {
    pub fn new(space: StateSpace, records: Vec<TransitionRecord>) -> Result<Self> {
        for r in &records {
            space.check(&r.parent)?;
            space.check(&r.child)?;
            if !(r.branch_length.is_finite() && r.branch_length >= 0.0) {
                return Err(Error::InvalidArgument(format!("branch length {}", r.branch_length)));
            }
        }
        let header = DatasetHeader {
            alphabet: space.alphabet().clone(),
            length: space.length(),
            truth_seed: None,
            epsilon: None,
            branch_rate: None,
            seed: None,
            quantization: None,
            manifest_hash: None,
        };
        Ok(Self { space, records, header })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn records(&self) -> &[TransitionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Subset in the given index order, keeping the header.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            space: self.space.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            header: self.header.clone(),
        }
    }

    /// (train, validation): the validation part is the last
    /// `fraction` of a seeded shuffle.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!("validation fraction must lie in [0, 1), got {fraction}")));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng::seeded(seed));
        let n_val = (fraction * self.len() as f64).round() as usize;
        let cut = self.len() - n_val;
        Ok((self.select(&order[..cut]), self.select(&order[cut..])))
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for r in &self.records {
            let line = RecordLine {
                x: self.space.format(&r.parent),
                y: self.space.format(&r.child),
                t: r.branch_length,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| Error::Parse("empty dataset file".into()))??;
        let header: DatasetHeader = serde_json::from_str(&first)?;
        let space = StateSpace::new(header.alphabet.clone(), header.length)?;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordLine =
                serde_json::from_str(&line).map_err(|e| Error::Parse(format!("record {}: {e}", i + 1)))?;
            records.push(TransitionRecord::new(&space, space.parse(&rec.x)?, space.parse(&rec.y)?, rec.t)?);
        }
        let mut ds = Self::new(space, records)?;
        ds.header = header;
        Ok(ds)
    }
}

/// Representative branch length of each of `bins` equal-probability bins of
/// Exp(rate): the conditional mean within the bin.
pub fn exponential_bin_means(rate: f64, bins: usize) -> Vec<f64> {
    (0..bins)
        .map(|k| {
            let lo = -(-(k as f64) / bins as f64).ln_1p() / rate;
            if k + 1 == bins {
                return lo + 1.0 / rate;
            }
            let hi = -(-((k + 1) as f64) / bins as f64).ln_1p() / rate;
            let w = hi - lo;
            let e = (-rate * w).exp();
            lo + 1.0 / rate - w * e / (-(-rate * w).exp_m1())
        })
        .collect()
}

fn bin_edges(rate: f64, bins: usize) -> Vec<f64> {
    (0..bins).map(|k| -(-(k as f64) / bins as f64).ln_1p() / rate).collect()
}

/// n records with uniform parents, t from the quantized Exp(branch_rate) and
/// children drawn from row x of exp(tQ).
pub fn generate_dataset(
    q: &FullGenerator,
    n: usize,
    branch_rate: f64,
    bins: usize,
    seed: u64,
    cfg: &ExpmConfig,
) -> Result<TransitionDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset size must be at least 1".into()));
    }
    if !(branch_rate.is_finite() && branch_rate > 0.0) {
        return Err(Error::InvalidArgument(format!("branch rate must be positive, got {branch_rate}")));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    let space = q.space().clone();
    let dense = q.to_dense()?;
    let num_states = space.num_states();
    let reps = exponential_bin_means(branch_rate, bins);

    let mut r = rng::seeded(seed);
    let draws: Vec<(usize, usize, f64)> =
        (0..n).map(|_| (r.random_range(0..num_states), r.random_range(0..bins), r.random::<f64>())).collect();

    let mut by_bin: Vec<Vec<usize>> = vec![Vec::new(); bins];
    for (i, d) in draws.iter().enumerate() {
        by_bin[d.1].push(i);
    }
    let lambda = q.max_exit_rate();
    let mut kernels = BinKernels::new(&dense, lambda, &reps, &by_bin, cfg)?;
    let mut children = vec![0usize; n];
    for (k, members) in by_bin.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let p = kernels.kernel(k)?;
        for &i in members {
            let (x, _, u) = draws[i];
            children[i] = inverse_cdf(p.row(x).iter().copied(), u);
        }
    }

    let records = draws
        .iter()
        .zip(&children)
        .map(|(&(x, k, _), &y)| TransitionRecord {
            parent: index_seq(&space, x),
            child: index_seq(&space, y),
            branch_length: reps[k],
        })
        .collect();
    let edges = bin_edges(branch_rate, bins);
    let max_width = edges.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let mut ds = TransitionDataset::new(space, records)?;
    ds.header.branch_rate = Some(branch_rate);
    ds.header.seed = Some(seed);
    ds.header.quantization = Some(Quantization {
        bins,
        max_finite_bin_width: max_width,
        lipschitz_l1_per_unit_t: 2.0 * lambda,
    });
    Ok(ds)
}

fn index_seq(space: &StateSpace, i: usize) -> Sequence {
    space.index_to_sequence(i).expect("index in range")
}

fn inverse_cdf(row: impl Iterator<Item = f64>, u: f64) -> usize {
    let probs: Vec<f64> = row.collect();
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = j;
            if cum > target {
                return j;
            }
        }
    }
    last
}

/// exp(t_k Q) per bin, from shared jump-chain powers on small spaces.
struct BinKernels<'a> {
    q: &'a DMatrix<f64>,
    lambda: f64,
    reps: &'a [f64],
    cfg: &'a ExpmConfig,
    powers: Vec<DMatrix<f64>>,
}

impl<'a> BinKernels<'a> {
    fn new(
        q: &'a DMatrix<f64>,
        lambda: f64,
        reps: &'a [f64],
        used: &[Vec<usize>],
        cfg: &'a ExpmConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let n = q.nrows();
        let mut powers = Vec::new();
        if n <= SHARED_POWER_CAP && lambda > 0.0 {
            let t_max = reps
                .iter()
                .zip(used)
                .filter(|(_, m)| !m.is_empty())
                .map(|(t, _)| *t)
                .fold(0.0, f64::max);
            let terms = PoissonWeights::new(lambda * t_max, cfg.truncation_tol).end();
            let r = DMatrix::identity(n, n) + q / lambda;
            powers.push(DMatrix::identity(n, n));
            for k in 1..terms {
                let next = &powers[k - 1] * &r;
                powers.push(next);
            }
        }
        Ok(Self {
            q,
            lambda,
            reps,
            cfg,
            powers,
        })
    }

    fn kernel(&mut self, k: usize) -> Result<DMatrix<f64>> {
        let t = self.reps[k];
        if self.powers.is_empty() {
            return expm_generator(self.q, t, self.cfg);
        }
        let w = PoissonWeights::new(self.lambda * t, self.cfg.truncation_tol);
        let n = self.q.nrows();
        let mut acc = DMatrix::zeros(n, n);
        for (j, p) in w.iter() {
            let m = self.powers.get(j).ok_or_else(|| Error::Numerical("power table too short".into()))?;
            acc.zip_apply(m, |a, v| *a += p * v);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::build_state_dependent_truth;

    #[test]
    fn bin_means_average_to_the_exponential_mean() {
        for &(rate, bins) in &[(0.5, 512), (2.0, 16), (1.0, 1)] {
            let reps = exponential_bin_means(rate, bins);
            let mean = reps.iter().sum::<f64>() / bins as f64;
            assert!((mean - 1.0 / rate).abs() < 1e-10 * (1.0 / rate), "{rate} {bins}: {mean}");
            let edges = bin_edges(rate, bins);
            for k in 0..bins {
                assert!(reps[k] >= edges[k]);
                if k + 1 < bins {
                    assert!(reps[k] < edges[k + 1]);
                }
            }
        }
    }

    #[test]
    fn branch_lengths_and_parents_have_the_right_law() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 1).unwrap();
        let n = 100_000;
        let ds = generate_dataset(&q, n, 0.5, DEFAULT_BINS, 2, &ExpmConfig::default()).unwrap();
        let ts: Vec<f64> = ds.records().iter().map(|r| r.branch_length).collect();
        assert!(ts.iter().all(|t| *t >= 0.0));
        let mean = ts.iter().sum::<f64>() / n as f64;
        let var = ts.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 2.0).abs() < 3.0 * (var / n as f64).sqrt(), "mean {mean}");
        let mut counts = [0usize; 64];
        for r in ds.records() {
            counts[sp.state_index(&r.parent).unwrap()] += 1;
        }
        let p = 1.0 / 64.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let within = counts.iter().filter(|&&c| (c as f64 / n as f64 - p).abs() < 3.0 * se).count();
        // Each state misses the 3 s.e. band with probability ~0.27%.
        assert!(within >= 62, "{within} of 64 states within 3 s.e.");
    }

    #[test]
    fn children_follow_the_kernel() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 3).unwrap();
        let cfg = ExpmConfig::default();
        let ds = generate_dataset(&q, 60_000, 0.5, 1, 4, &cfg).unwrap();
        let t = ds.records()[0].branch_length;
        assert!((t - 2.0).abs() < 1e-12);
        let p = expm_generator(&q.to_dense().unwrap(), t, &cfg).unwrap();
        let n = 60_000.0;
        let mut marginal = [0.0f64; 64];
        let mut stays = 0.0;
        for r in ds.records() {
            marginal[sp.state_index(&r.child).unwrap()] += 1.0;
            stays += f64::from(u8::from(r.parent == r.child));
        }
        // Parents are uniform, so the child law is the column mean of P.
        let expected: Vec<f64> = (0..64).map(|y| p.column(y).sum() / 64.0 * n).collect();
        let chi2: f64 = marginal.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
        let df: f64 = 63.0;
        assert!(chi2 < df + 5.0 * (2.0 * df).sqrt(), "chi2 {chi2}");
        let stay = p.diagonal().sum() / 64.0;
        assert!((stays / n - stay).abs() < 5.0 * (stay * (1.0 - stay) / n).sqrt());
    }

    #[test]
    fn shared_powers_match_direct_exponentials() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 5).unwrap();
        let dense = q.to_dense().unwrap();
        let cfg = ExpmConfig::default();
        let reps = exponential_bin_means(0.5, 8);
        let used = vec![vec![0]; 8];
        let mut k = BinKernels::new(&dense, q.max_exit_rate(), &reps, &used, &cfg).unwrap();
        for (b, &t) in reps.iter().enumerate() {
            let direct = expm_generator(&dense, t, &cfg).unwrap();
            assert!((k.kernel(b).unwrap() - direct).abs().max() < 1e-10);
        }
    }

    #[test]
    fn deterministic_and_round_trips() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 6).unwrap();
        let cfg = ExpmConfig::default();
        let a = generate_dataset(&q, 500, 0.5, 64, 9, &cfg).unwrap();
        let b = generate_dataset(&q, 500, 0.5, 64, 9, &cfg).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_jsonl(&mut buf).unwrap();
        let back = TransitionDataset::read_jsonl(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn split_sizes() {
        let sp = StateSpace::codons();
        let q = build_state_dependent_truth(&sp, 7).unwrap();
        let ds = generate_dataset(&q, 1000, 0.5, 16, 1, &ExpmConfig::default()).unwrap();
        let (train, val) = ds.split(0.1, 3).unwrap();
        assert_eq!((train.len(), val.len()), (900, 100));
        assert!(ds.split(1.0, 3).is_err());
    }
}
