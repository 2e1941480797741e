//! Rooted trees with branch lengths and simulation along them.

use crate::error::{Error, Result};
use crate::generators::FactorizedModel;
use crate::kernels::ExpmConfig;
use crate::par;
use crate::rng;
use crate::state_space::Sequence;

use super::exact::sample_factorized;
use super::gillespie::{simulate, Guide, DEFAULT_MAX_JUMPS};

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: Option<String>,
    pub parent: Option<usize>,
    pub branch_length: f64,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    root: usize,
}

impl Tree {
    /// Builds a tree from a parent array; exactly one entry must be `None`.
    pub fn from_parents(names: Vec<Option<String>>, parents: &[Option<usize>], lengths: &[f64]) -> Result<Self> {
        let n = parents.len();
        if names.len() != n || lengths.len() != n {
            return Err(Error::MalformedTree("names, parents and lengths differ in length".into()));
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_none()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::MalformedTree("no root".into())),
            _ => return Err(Error::MalformedTree(format!("{} roots", roots.len()))),
        };
        let mut nodes: Vec<Node> = names
            .into_iter()
            .zip(parents)
            .zip(lengths)
            .map(|((name, &parent), &branch_length)| Node {
                name,
                parent,
                branch_length,
                children: Vec::new(),
            })
            .collect();
        for i in 0..n {
            if let Some(p) = parents[i] {
                if p >= n {
                    return Err(Error::MalformedTree(format!("node {i} has missing parent {p}")));
                }
                nodes[p].children.push(i);
            }
            let b = lengths[i];
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::MalformedTree(format!("node {i} has branch length {b}")));
            }
        }
        let tree = Self { nodes, root };
        if tree.breadth_first().len() != n {
            return Err(Error::MalformedTree("cycle or node unreachable from the root".into()));
        }
        Ok(tree)
    }

    /// Parses a Newick string such as `((A:0.1,B:0.2)AB:0.05,C:0.3)root;`.
    /// Every non-root node needs a branch length.
    pub fn parse_newick(text: &str) -> Result<Self> {
        let mut p = NewickParser {
            chars: text.trim().chars().collect(),
            pos: 0,
            names: Vec::new(),
            parents: Vec::new(),
            lengths: Vec::new(),
        };
        p.subtree(None)?;
        p.skip_ws();
        if p.peek() == Some(';') {
            p.pos += 1;
        }
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(Error::MalformedTree(format!("trailing input at offset {}", p.pos)));
        }
        for (i, len) in p.lengths.iter().enumerate() {
            if len.is_none() && p.parents[i].is_some() {
                return Err(Error::MalformedTree(format!(
                    "node {} lacks a branch length",
                    p.names[i].clone().unwrap_or_else(|| i.to_string())
                )));
            }
        }
        let lengths: Vec<f64> = p.lengths.iter().map(|l| l.unwrap_or(0.0)).collect();
        Self::from_parents(p.names, &p.parents, &lengths)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].children.is_empty()).collect()
    }

    /// Node indices grouped by depth, root first.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut levels = vec![vec![self.root]];
        let mut seen = 1;
        loop {
            let next: Vec<usize> = levels
                .last()
                .expect("non-empty")
                .iter()
                .flat_map(|&i| self.nodes[i].children.iter().copied())
                .collect();
            if next.is_empty() || seen + next.len() > self.nodes.len() {
                break;
            }
            seen += next.len();
            levels.push(next);
        }
        levels
    }

    pub fn breadth_first(&self) -> Vec<usize> {
        self.levels().into_iter().flatten().collect()
    }

    /// Sum of branch lengths from the root to `node`.
    pub fn depth(&self, mut node: usize) -> f64 {
        let mut d = 0.0;
        while let Some(p) = self.nodes[node].parent {
            d += self.nodes[node].branch_length;
            node = p;
        }
        d
    }

    pub fn with_zero_lengths(&self) -> Self {
        let mut t = self.clone();
        t.nodes.iter_mut().for_each(|n| n.branch_length = 0.0);
        t
    }
}

struct NewickParser {
    chars: Vec<char>,
    pos: usize,
    names: Vec<Option<String>>,
    parents: Vec<Option<usize>>,
    lengths: Vec<Option<f64>>,
}

impl NewickParser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn subtree(&mut self, parent: Option<usize>) -> Result<usize> {
        let id = self.names.len();
        self.names.push(None);
        self.parents.push(parent);
        self.lengths.push(None);
        self.skip_ws();
        if self.peek() == Some('(') {
            self.pos += 1;
            loop {
                self.subtree(Some(id))?;
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    other => {
                        return Err(Error::MalformedTree(format!(
                            "expected ',' or ')' at offset {}, found {other:?}",
                            self.pos
                        )))
                    }
                }
            }
        }
        self.skip_ws();
        let name = self.label();
        if !name.is_empty() {
            self.names[id] = Some(name);
        }
        self.skip_ws();
        if self.peek() == Some(':') {
            self.pos += 1;
            self.skip_ws();
            let text = self.label();
            let len: f64 = text
                .parse()
                .map_err(|_| Error::MalformedTree(format!("bad branch length {text:?}")))?;
            self.lengths[id] = Some(len);
        }
        Ok(id)
    }

    fn label(&mut self) -> String {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| !matches!(c, '(' | ')' | ',' | ':' | ';') && !c.is_whitespace())
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }
}

/// How each edge is sampled.
#[derive(Clone, Copy)]
pub enum EdgeSampler<'a> {
    Gillespie(Option<Guide<'a>>),
    /// Independent per-site draws from the factorized kernel.
    MatrixExponential(&'a ExpmConfig),
}

/// Samples every node's sequence given the root, level by level. Node i
/// draws from stream i of `seed`, so results do not depend on scheduling.
pub fn simulate_tree(
    model: &FactorizedModel,
    root: &Sequence,
    tree: &Tree,
    seed: u64,
    sampler: EdgeSampler<'_>,
) -> Result<Vec<Sequence>> {
    model.space().check(root)?;
    let mut seqs: Vec<Option<Sequence>> = vec![None; tree.len()];
    seqs[tree.root()] = Some(root.clone());
    for level in tree.levels().into_iter().skip(1) {
        let drawn = par::try_map_range(level.len(), |k| {
            let node = level[k];
            let info = &tree.nodes()[node];
            let parent = seqs[info.parent.expect("non-root")].as_ref().expect("parent sampled first");
            let mut r = rng::stream(seed, node as u64);
            match sampler {
                EdgeSampler::Gillespie(guide) => {
                    simulate(model, guide, parent, info.branch_length, DEFAULT_MAX_JUMPS, &mut r).map(|(y, _)| y)
                }
                EdgeSampler::MatrixExponential(cfg) => sample_factorized(model, parent, info.branch_length, cfg, &mut r),
            }
        })?;
        for (node, y) in level.into_iter().zip(drawn) {
            seqs[node] = Some(y);
        }
    }
    Ok(seqs.into_iter().map(|s| s.expect("every node reached")).collect())
}
