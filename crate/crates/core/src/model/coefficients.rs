//! Coefficient vectors partitioned by a block structure.

use nalgebra::{DVector, DVectorView};

use crate::error::{Error, Result};
use crate::model::BlockStructure;
use crate::norm::Norm;

/// A length-`N` coefficient vector viewed through a [`BlockStructure`].
///
/// A vector is `k`-block-sparse when at most `k` blocks have nonzero
/// Euclidean norm; [`support`](Self::support) reports those blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseCoefficients {
    values: DVector<f64>,
    structure: BlockStructure,
}

impl BlockSparseCoefficients {
    /// Wraps `values` with `structure`; lengths must agree.
    pub fn new(values: DVector<f64>, structure: BlockStructure) -> Result<Self> {
        if values.len() != structure.total_len() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector has length {} but structure expects {}",
                values.len(),
                structure.total_len()
            )));
        }
        Ok(Self { values, structure })
    }

    /// The all-zero coefficient vector for `structure`.
    pub fn zeros(structure: BlockStructure) -> Self {
        let values = DVector::zeros(structure.total_len());
        Self { values, structure }
    }

    /// Flat view of all coefficients.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Mutable flat access (length is fixed by the structure).
    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    /// The block layout.
    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    /// View of block `i`'s coefficients `c[i]`.
    pub fn block(&self, i: usize) -> DVectorView<'_, f64> {
        self.values.rows_range(self.structure.range(i))
    }

    /// Writes `data` into block `i`.
    pub fn set_block(&mut self, i: usize, data: &[f64]) {
        let range = self.structure.range(i);
        assert_eq!(data.len(), range.len(), "block size mismatch");
        self.values.rows_range_mut(range).copy_from_slice(data);
    }

    /// ‖c[i]‖_q for block `i`.
    pub fn block_norm(&self, i: usize, q: Norm) -> f64 {
        q.eval(self.block(i).as_slice())
    }

    /// Blocks with ‖c[i]‖₂ strictly above `threshold` (ascending order).
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.structure.n_blocks())
            .filter(|&i| self.block_norm(i, Norm::L2) > threshold)
            .collect()
    }

    /// Number of blocks with nonzero norm above `threshold`.
    pub fn block_sparsity(&self, threshold: f64) -> usize {
        self.support(threshold).len()
    }
}
