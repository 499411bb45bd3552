//! Partition of coefficient indices into contiguous blocks.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The block layout of a dictionary / coefficient vector: `n` blocks with
/// `sizes[i] = m_i` columns each, laid out contiguously.
///
/// Offsets are derived prefix sums, so block `i` occupies
/// `offsets[i] .. offsets[i] + sizes[i]` and the total length is
/// `N = Σ m_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockStructure {
    sizes: Vec<usize>,
    #[serde(skip)]
    offsets: Vec<usize>,
}

impl<'de> Deserialize<'de> for BlockStructure {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            sizes: Vec<usize>,
        }
        let raw = Raw::deserialize(deserializer)?;
        BlockStructure::new(raw.sizes).map_err(serde::de::Error::custom)
    }
}

impl BlockStructure {
    /// Builds a structure from per-block sizes. Every size must be ≥ 1.
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidParameter(
                "block structure needs at least one block".into(),
            ));
        }
        if let Some(i) = sizes.iter().position(|&m| m == 0) {
            return Err(Error::InvalidParameter(format!(
                "block {i} has size 0 (every block needs ≥ 1 column)"
            )));
        }
        let offsets = Self::prefix_sums(&sizes);
        Ok(Self { sizes, offsets })
    }

    /// `n` blocks of identical size `m`.
    pub fn uniform(n: usize, m: usize) -> Result<Self> {
        Self::new(vec![m; n])
    }

    fn prefix_sums(sizes: &[usize]) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &m in sizes {
            offsets.push(acc);
            acc += m;
        }
        offsets
    }

    /// Number of blocks `n`.
    pub fn n_blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Total column count `N = Σ m_i`.
    pub fn total_len(&self) -> usize {
        self.offsets.last().unwrap() + self.sizes.last().unwrap()
    }

    /// Size `m_i` of block `i`.
    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    /// All block sizes.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Index range of block `i` within the flat coefficient vector.
    pub fn range(&self, i: usize) -> Range<usize> {
        let start = self.offsets[i];
        start..start + self.sizes[i]
    }

    /// `Some(m)` when every block has the same size `m`.
    pub fn uniform_size(&self) -> Option<usize> {
        let m = self.sizes[0];
        self.sizes.iter().all(|&s| s == m).then_some(m)
    }

    /// Concatenation: the blocks of `self` followed by the blocks of `other`.
    pub fn concat(&self, other: &BlockStructure) -> BlockStructure {
        let mut sizes = self.sizes.clone();
        sizes.extend_from_slice(&other.sizes);
        BlockStructure::new(sizes).expect("both operands already validated")
    }
}
