//! Alphabets, fixed-length sequences and their canonical integer indexing.
//!
//! Sequences hold alphabet indices rather than characters; text conversion
//! only happens at I/O boundaries. State indices use a big-endian positional
//! encoding, so site 0 is the most significant digit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest state space that dense (full-generator) operations accept.
pub const DEFAULT_DENSE_CAP: usize = 1_000_000;

/// An ordered set of distinct symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.len() < 2 {
            return Err(Error::InvalidAlphabet(format!(
                "need at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        if symbols.len() > u8::MAX as usize {
            return Err(Error::InvalidAlphabet(format!(
                "at most 255 symbols supported, got {}",
                symbols.len()
            )));
        }
        for (i, c) in symbols.iter().enumerate() {
            if symbols[..i].contains(c) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {c:?}")));
            }
        }
        Ok(Self { symbols })
    }

    /// Nucleotides in lexicographic order A, C, G, T.
    pub fn dna() -> Self {
        Self {
            symbols: vec!['A', 'C', 'G', 'T'],
        }
    }

    /// The 20 standard amino acids in one-letter alphabetical order.
    pub fn amino_acids() -> Self {
        Self {
            symbols: "ACDEFGHIKLMNPQRSTVWY".chars().collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn index_of(&self, c: char) -> Result<u8> {
        self.symbols
            .iter()
            .position(|&s| s == c)
            .map(|i| i as u8)
            .ok_or(Error::UnknownSymbol(c))
    }

    pub fn symbol(&self, index: u8) -> char {
        self.symbols[index as usize]
    }
}

impl TryFrom<String> for Alphabet {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Alphabet::new(s.chars())
    }
}

impl From<Alphabet> for String {
    fn from(a: Alphabet) -> String {
        a.symbols.iter().collect()
    }
}

/// A fixed-length sequence of alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sequence(pub Vec<u8>);

impl Sequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    /// Copy of `self` with `site` set to `symbol`.
    pub fn with_site(&self, site: usize, symbol: u8) -> Sequence {
        let mut s = self.0.clone();
        s[site] = symbol;
        Sequence(s)
    }
}

/// One single-site substitution away from some sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighbor {
    pub site: usize,
    pub symbol: u8,
    pub sequence: Sequence,
}

/// All sequences of a given length over an alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    alphabet: Alphabet,
    length: usize,
    num_states: usize,
}

impl StateSpace {
    /// A state space whose size must not exceed [`DEFAULT_DENSE_CAP`].
    pub fn new(alphabet: Alphabet, length: usize) -> Result<Self> {
        Self::with_cap(alphabet, length, DEFAULT_DENSE_CAP)
    }

    /// A state space whose size must not exceed `cap`.
    ///
    /// Pass `usize::MAX` for spaces only used by samplers and context-free
    /// models, which never enumerate states.
    pub fn with_cap(alphabet: Alphabet, length: usize, cap: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidArgument("sequence length must be positive".into()));
        }
        let exact = (alphabet.size() as u128).checked_pow(length as u32);
        let num_states = match exact {
            Some(n) if n <= cap as u128 => n as usize,
            Some(n) => return Err(Error::DenseCapExceeded { num_states: n, cap }),
            None => {
                return Err(Error::DenseCapExceeded {
                    num_states: u128::MAX,
                    cap,
                })
            }
        };
        Ok(Self {
            alphabet,
            length,
            num_states,
        })
    }

    /// The 64-codon space over A, C, G, T.
    pub fn codons() -> Self {
        Self::new(Alphabet::dna(), 3).expect("64 states fit")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Number of single-site neighbors of any sequence, L·(|A|−1).
    pub fn num_neighbors(&self) -> usize {
        self.length * (self.alphabet.size() - 1)
    }

    /// Fails unless the space is small enough for dense operations.
    pub fn require_dense(&self, cap: usize) -> Result<()> {
        if self.num_states > cap {
            return Err(Error::DenseCapExceeded {
                num_states: self.num_states as u128,
                cap,
            });
        }
        Ok(())
    }

    pub fn check(&self, seq: &Sequence) -> Result<()> {
        if seq.len() != self.length {
            return Err(Error::LengthMismatch {
                expected: self.length,
                found: seq.len(),
            });
        }
        let size = self.alphabet.size() as u8;
        if let Some(&bad) = seq.0.iter().find(|&&s| s >= size) {
            return Err(Error::InvalidArgument(format!(
                "symbol index {bad} out of range for alphabet of size {size}"
            )));
        }
        Ok(())
    }

    pub fn ensure_same(&self, other: &StateSpace) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch(format!(
                "{}^{} vs {}^{}",
                String::from(self.alphabet.clone()),
                self.length,
                String::from(other.alphabet.clone()),
                other.length
            )));
        }
        Ok(())
    }

    /// Big-endian positional index: Σ_ℓ s_ℓ·|A|^(L−1−ℓ).
    pub fn state_index(&self, seq: &Sequence) -> Result<usize> {
        self.check(seq)?;
        Ok(self.index_unchecked(seq.symbols()))
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, symbols: &[u8]) -> usize {
        let a = self.alphabet.size();
        symbols.iter().fold(0usize, |acc, &s| acc * a + s as usize)
    }

    pub fn index_to_sequence(&self, index: usize) -> Result<Sequence> {
        if index >= self.num_states {
            return Err(Error::IndexOutOfRange {
                index,
                num_states: self.num_states,
            });
        }
        let mut out = vec![0u8; self.length];
        self.decode_into(index, &mut out);
        Ok(Sequence(out))
    }

    #[inline]
    pub(crate) fn decode_into(&self, mut index: usize, out: &mut [u8]) {
        let a = self.alphabet.size();
        for slot in out.iter_mut().rev() {
            *slot = (index % a) as u8;
            index /= a;
        }
    }

    /// Place value of `site` in the index encoding.
    #[inline]
    pub(crate) fn stride(&self, site: usize) -> usize {
        self.alphabet.size().pow((self.length - 1 - site) as u32)
    }

    /// Neighbors in site-major, then symbol-index order.
    pub fn hamming_neighbors(&self, seq: &Sequence) -> Result<Vec<Neighbor>> {
        self.check(seq)?;
        let a = self.alphabet.size() as u8;
        let mut out = Vec::with_capacity(self.num_neighbors());
        for site in 0..self.length {
            for symbol in (0..a).filter(|&b| b != seq.0[site]) {
                out.push(Neighbor {
                    site,
                    symbol,
                    sequence: seq.with_site(site, symbol),
                });
            }
        }
        Ok(out)
    }

    /// State indices of the neighbors of state `index`, in neighbor order.
    pub(crate) fn neighbor_indices(&self, index: usize, symbols: &[u8], out: &mut Vec<usize>) {
        out.clear();
        let a = self.alphabet.size();
        for (site, &cur) in symbols.iter().enumerate() {
            let stride = self.stride(site);
            let base = index - cur as usize * stride;
            for b in (0..a).filter(|&b| b != cur as usize) {
                out.push(base + b * stride);
            }
        }
    }

    pub fn parse(&self, text: &str) -> Result<Sequence> {
        let seq = Sequence(
            text.trim()
                .chars()
                .map(|c| self.alphabet.index_of(c))
                .collect::<Result<_>>()?,
        );
        self.check(&seq)?;
        Ok(seq)
    }

    pub fn format(&self, seq: &Sequence) -> String {
        seq.0.iter().map(|&s| self.alphabet.symbol(s)).collect()
    }

    /// Iterates over every sequence in index order.
    pub fn sequences(&self) -> impl Iterator<Item = Sequence> + '_ {
        (0..self.num_states).map(move |i| {
            let mut out = vec![0u8; self.length];
            self.decode_into(i, &mut out);
            Sequence(out)
        })
    }
}

/// Position in the neighbor ordering of the substitution (site, symbol)
/// away from `current`.
#[inline]
pub(crate) fn neighbor_slot(alphabet_size: usize, site: usize, current: u8, symbol: u8) -> usize {
    let offset = if symbol < current { symbol } else { symbol - 1 };
    site * (alphabet_size - 1) + offset as usize
}

/// Inverse of [`neighbor_slot`]: the (site, symbol) for slot `k`.
#[inline]
pub(crate) fn slot_to_mutation(alphabet_size: usize, symbols: &[u8], k: usize) -> (usize, u8) {
    let site = k / (alphabet_size - 1);
    let offset = (k % (alphabet_size - 1)) as u8;
    let symbol = if offset < symbols[site] { offset } else { offset + 1 };
    (site, symbol)
}

/// Number of sites at which two sequences differ.
pub fn hamming_distance(a: &Sequence, b: &Sequence) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count())
}

/// An observed evolutionary transition (parent, child, branch length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub parent: Sequence,
    pub child: Sequence,
    pub branch_length: f64,
}

impl TransitionRecord {
    pub fn new(space: &StateSpace, parent: Sequence, child: Sequence, branch_length: f64) -> Result<Self> {
        space.check(&parent)?;
        space.check(&child)?;
        if !(branch_length.is_finite() && branch_length >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "branch length must be finite and non-negative, got {branch_length}"
            )));
        }
        Ok(Self {
            parent,
            child,
            branch_length,
        })
    }
}
