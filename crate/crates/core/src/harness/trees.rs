//! Leaf fidelity of the two samplers on phylogenies.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::analysis::stats::pearson;
use crate::error::{Error, Result};
use crate::generators::{FactorizedModel, FullGenerator};
use crate::kernels::ExpmConfig;
use crate::rng::derive_seed;
use crate::samplers::{simulate_tree, EdgeSampler, Tree};
use crate::state_space::{hamming_distance, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closer {
    Gillespie,
    MatrixExponential,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafRow {
    pub tree: usize,
    pub node: usize,
    pub name: Option<String>,
    pub depth: f64,
    /// Hamming distance from the reference leaf.
    pub d_gillespie: usize,
    pub d_matexp: usize,
    pub closer: Closer,
    /// Hamming distances from the root.
    pub root_reference: usize,
    pub root_gillespie: usize,
    pub root_matexp: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeFidelity {
    pub rows: Vec<LeafRow>,
    pub frac_gillespie_closer: f64,
    pub frac_matexp_closer: f64,
    pub frac_tie: f64,
    /// Pearson correlation of root-to-leaf distances with the reference;
    /// `None` when either side is constant.
    pub corr_gillespie: Option<f64>,
    pub corr_matexp: Option<f64>,
}

/// Random binary tree by repeated leaf splitting, Exp(1/mean) branches.
pub fn random_tree<R: Rng + ?Sized>(leaves: usize, mean_branch: f64, rng: &mut R) -> Result<Tree> {
    if leaves == 0 {
        return Err(Error::InvalidArgument("a tree needs at least one leaf".into()));
    }
    let exp = Exp::new(1.0 / mean_branch).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut parents = vec![None];
    let mut tips = vec![0usize];
    while tips.len() < leaves {
        let k = rng.random_range(0..tips.len());
        let split = tips.swap_remove(k);
        for _ in 0..2 {
            parents.push(Some(split));
            tips.push(parents.len() - 1);
        }
    }
    let lengths: Vec<f64> = (0..parents.len()).map(|i| if i == 0 { 0.0 } else { exp.sample(rng) }).collect();
    Tree::from_parents(vec![None; parents.len()], &parents, &lengths)
}

/// Reference leaves come from exact simulation under the truth; the fitted
/// model is then sampled by Gillespie and by per-site matrix exponentials.
pub fn run_tree_fidelity(
    truth: &FullGenerator,
    fitted: &FactorizedModel,
    root: &Sequence,
    trees: &[Tree],
    seed: u64,
    cfg: &ExpmConfig,
) -> Result<TreeFidelity> {
    truth.space().ensure_same(fitted.space())?;
    let reference_model = FactorizedModel::matched_to_truth(truth)?;
    let mut rows = Vec::new();
    for (ti, tree) in trees.iter().enumerate() {
        let s = |k| derive_seed(seed, &[ti as u64, k]);
        let reference = simulate_tree(&reference_model, root, tree, s(0), EdgeSampler::Gillespie(None))?;
        let gill = simulate_tree(fitted, root, tree, s(1), EdgeSampler::Gillespie(None))?;
        let matexp = simulate_tree(fitted, root, tree, s(2), EdgeSampler::MatrixExponential(cfg))?;
        for leaf in tree.leaves() {
            let d_g = hamming_distance(&gill[leaf], &reference[leaf])?;
            let d_m = hamming_distance(&matexp[leaf], &reference[leaf])?;
            rows.push(LeafRow {
                tree: ti,
                node: leaf,
                name: tree.nodes()[leaf].name.clone(),
                depth: tree.depth(leaf),
                d_gillespie: d_g,
                d_matexp: d_m,
                closer: match d_g.cmp(&d_m) {
                    std::cmp::Ordering::Less => Closer::Gillespie,
                    std::cmp::Ordering::Greater => Closer::MatrixExponential,
                    std::cmp::Ordering::Equal => Closer::Tie,
                },
                root_reference: hamming_distance(&reference[leaf], root)?,
                root_gillespie: hamming_distance(&gill[leaf], root)?,
                root_matexp: hamming_distance(&matexp[leaf], root)?,
            });
        }
    }
    let n = rows.len().max(1) as f64;
    let frac = |c| rows.iter().filter(|r| r.closer == c).count() as f64 / n;
    let col = |f: fn(&LeafRow) -> usize| rows.iter().map(|r| f(r) as f64).collect::<Vec<_>>();
    let reference = col(|r| r.root_reference);
    Ok(TreeFidelity {
        frac_gillespie_closer: frac(Closer::Gillespie),
        frac_matexp_closer: frac(Closer::MatrixExponential),
        frac_tie: if rows.is_empty() { 1.0 } else { frac(Closer::Tie) },
        corr_gillespie: pearson(&reference, &col(|r| r.root_gillespie)).ok(),
        corr_matexp: pearson(&reference, &col(|r| r.root_matexp)).ok(),
        rows,
    })
}
