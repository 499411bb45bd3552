//! Block-structured dictionaries over a union of subspaces.

use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BlockSparseCoefficients, BlockStructure};
use crate::norm::Norm;

/// Tolerance on column norms and basis orthonormality.
const UNIT_TOL: f64 = 1e-10;
/// Tolerance on the residual of block columns projected onto their basis span.
const SPAN_TOL: f64 = 1e-8;

/// A dense `D×N` dictionary whose columns are grouped into `n` blocks, the
/// columns of block `i` spanning a `d_i`-dimensional subspace with stored
/// orthonormal basis `A_i`.
///
/// Invariants (checked at construction):
/// * every column has unit Euclidean norm (± 1e-10);
/// * every `A_i` is orthonormal (± 1e-10) and spans its block's columns
///   (projection residual < 1e-8);
/// * `d_i` equals the rank of block `i`.
///
/// A block is *non-redundant* when `m_i = d_i` (independent columns) and
/// *redundant* when `m_i > d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    matrix: DMatrix<f64>,
    structure: BlockStructure,
    bases: Vec<DMatrix<f64>>,
}

impl Dictionary {
    /// Builds a dictionary from parts, verifying all invariants.
    pub fn new(
        matrix: DMatrix<f64>,
        structure: BlockStructure,
        bases: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if matrix.ncols() != structure.total_len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns but structure expects {}",
                matrix.ncols(),
                structure.total_len()
            )));
        }
        if bases.len() != structure.n_blocks() {
            return Err(Error::DimensionMismatch(format!(
                "{} bases supplied for {} blocks",
                bases.len(),
                structure.n_blocks()
            )));
        }
        let dict = Self {
            matrix,
            structure,
            bases,
        };
        dict.validate()?;
        Ok(dict)
    }

    /// Builds a dictionary from a matrix and block sizes alone, deriving each
    /// block's subspace dimension from its singular values and an orthonormal
    /// basis from a column-pivoted QR factorization.
    pub fn from_matrix(matrix: DMatrix<f64>, sizes: Vec<usize>) -> Result<Self> {
        let structure = BlockStructure::new(sizes)?;
        if matrix.ncols() != structure.total_len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns but block sizes sum to {}",
                matrix.ncols(),
                structure.total_len()
            )));
        }
        let mut bases = Vec::with_capacity(structure.n_blocks());
        for i in 0..structure.n_blocks() {
            let block = matrix.columns_range(structure.range(i)).clone_owned();
            let rank = linalg::rank(&block);
            if rank == 0 {
                return Err(Error::RankDeficientBlock {
                    block: i,
                    rank: 0,
                    needed: 1,
                });
            }
            // The rank comes from the singular values, but the basis comes
            // from Householder QR with column pivoting: the iterative SVD can
            // return singular vectors that miss the true span of an exactly
            // rank-deficient block by far more than roundoff.
            let qr = block.col_piv_qr();
            bases.push(qr.q().columns(0, rank).clone_owned());
        }
        Self::new(matrix, structure, bases)
    }

    /// Re-checks all construction invariants.
    pub fn validate(&self) -> Result<()> {
        for j in 0..self.matrix.ncols() {
            let norm = self.matrix.column(j).norm();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidParameter(format!(
                    "dictionary column {j} has norm {norm:.12} (must be 1 ± {UNIT_TOL:.0e})"
                )));
            }
        }
        for (i, basis) in self.bases.iter().enumerate() {
            if basis.nrows() != self.ambient_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "basis {i} has {} rows, ambient dimension is {}",
                    basis.nrows(),
                    self.ambient_dim()
                )));
            }
            if !linalg::is_orthonormal(basis, UNIT_TOL) {
                return Err(Error::NonOrthonormalBasis(format!(
                    "basis {i} fails the orthonormality check"
                )));
            }
            let block = self.block(i);
            for (jj, col) in block.column_iter().enumerate() {
                let v = DVector::from_column_slice(col.as_slice());
                let residual = (&v - linalg::project_onto_span(basis, &v)).norm();
                if residual > SPAN_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "column {jj} of block {i} lies outside span(A_{i}) \
                         (residual {residual:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Signal dimension `D`.
    pub fn ambient_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of blocks `n`.
    pub fn n_blocks(&self) -> usize {
        self.structure.n_blocks()
    }

    /// Total number of columns `N`.
    pub fn total_cols(&self) -> usize {
        self.structure.total_len()
    }

    /// The block layout.
    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    /// The full `D×N` matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// View of block `i`'s columns `B[i]` (`D×m_i`).
    pub fn block(&self, i: usize) -> DMatrixView<'_, f64> {
        self.matrix.columns_range(self.structure.range(i))
    }

    /// Orthonormal basis `A_i` of block `i`'s subspace (`D×d_i`).
    pub fn basis(&self, i: usize) -> &DMatrix<f64> {
        &self.bases[i]
    }

    /// Subspace dimension `d_i` of block `i`.
    pub fn subspace_dim(&self, i: usize) -> usize {
        self.bases[i].ncols()
    }

    /// All subspace dimensions.
    pub fn subspace_dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    /// `true` when some block has more columns than its subspace dimension.
    pub fn is_redundant(&self) -> bool {
        (0..self.n_blocks()).any(|i| self.structure.size(i) > self.subspace_dim(i))
    }

    /// `B c` for a structured coefficient vector.
    pub fn apply(&self, c: &BlockSparseCoefficients) -> DVector<f64> {
        &self.matrix * c.values()
    }

    /// The contribution `B[i] c[i]` of block `i`.
    pub fn block_contribution(&self, c: &BlockSparseCoefficients, i: usize) -> DVector<f64> {
        self.block(i) * c.block(i)
    }

    /// ‖B[i] c[i]‖_q for every block.
    pub fn contribution_norms(&self, c: &BlockSparseCoefficients, q: Norm) -> Vec<f64> {
        (0..self.n_blocks())
            .map(|i| q.eval(self.block_contribution(c, i).as_slice()))
            .collect()
    }

    /// Verifies that every pair of subspaces intersects only at the origin:
    /// the smallest singular value of `[A_i A_j]` must be ≥ `tol`.
    ///
    /// Returns the minimum over all pairs on success.
    pub fn check_pairwise_disjoint(&self, tol: f64) -> Result<f64> {
        let n = self.n_blocks();
        let mut global_min = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let di = self.subspace_dim(i);
                let dj = self.subspace_dim(j);
                let smin = if di + dj > self.ambient_dim() {
                    // More columns than ambient dimensions: the subspaces
                    // must share a direction.
                    0.0
                } else {
                    let mut stacked = DMatrix::zeros(self.ambient_dim(), di + dj);
                    stacked.columns_mut(0, di).copy_from(&self.bases[i]);
                    stacked.columns_mut(di, dj).copy_from(&self.bases[j]);
                    linalg::sigma_min(&stacked)
                };
                if smin < tol {
                    return Err(Error::DisjointnessViolation {
                        attempts: 1,
                        sigma_min: smin,
                    });
                }
                global_min = global_min.min(smin);
            }
        }
        Ok(global_min)
    }

    /// The dictionary `[B I]`: this dictionary followed by the `D×D`
    /// identity as `D` extra single-column blocks (each an axis line).
    ///
    /// Used by the corrupted-signal programs, where the identity part
    /// carries the sparse error term.
    pub fn append_identity(&self) -> Dictionary {
        let d = self.ambient_dim();
        let n = self.total_cols();
        let mut matrix = DMatrix::zeros(d, n + d);
        matrix.columns_mut(0, n).copy_from(&self.matrix);
        for j in 0..d {
            matrix[(j, n + j)] = 1.0;
        }
        let structure = self
            .structure
            .concat(&BlockStructure::uniform(d, 1).expect("d ≥ 1"));
        let mut bases = self.bases.clone();
        for j in 0..d {
            let mut e = DMatrix::zeros(d, 1);
            e[(j, 0)] = 1.0;
            bases.push(e);
        }
        Dictionary {
            matrix,
            structure,
            bases,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 2×3 dictionary: block 0 = {e₁, e₂} (rank 2), block 1 = one diagonal
    /// column.
    fn small_dict() -> Dictionary {
        let s = 1.0 / 2f64.sqrt();
        let matrix = DMatrix::from_column_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, s, s]);
        Dictionary::from_matrix(matrix, vec![2, 1]).unwrap()
    }

    #[test]
    fn from_matrix_derives_ranks_and_bases() {
        let d = small_dict();
        assert_eq!(d.ambient_dim(), 2);
        assert_eq!(d.n_blocks(), 2);
        assert_eq!(d.subspace_dim(0), 2);
        assert_eq!(d.subspace_dim(1), 1);
        assert!(!d.is_redundant());
        d.validate().unwrap();
    }

    #[test]
    fn redundant_block_rank_detected() {
        // Three collinear unit columns: rank 1, m = 3.
        let matrix = DMatrix::from_column_slice(2, 3, &[1.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let d = Dictionary::from_matrix(matrix, vec![3]).unwrap();
        assert_eq!(d.subspace_dim(0), 1);
        assert!(d.is_redundant());
    }

    #[test]
    fn non_unit_column_rejected() {
        let matrix = DMatrix::from_column_slice(2, 1, &[2.0, 0.0]);
        assert!(Dictionary::from_matrix(matrix, vec![1]).is_err());
    }

    #[test]
    fn contributions_and_apply_agree() {
        let d = small_dict();
        let mut c = BlockSparseCoefficients::zeros(d.structure().clone());
        c.set_block(0, &[2.0, -1.0]);
        c.set_block(1, &[3.0]);
        let direct = d.apply(&c);
        let summed = d.block_contribution(&c, 0) + d.block_contribution(&c, 1);
        assert!((direct - summed).norm() < 1e-14);
    }

    #[test]
    fn disjointness_flags_shared_directions() {
        let d = small_dict();
        // Block 1's line lies inside block 0's plane: not disjoint.
        assert!(d.check_pairwise_disjoint(1e-8).is_err());

        let matrix = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let ortho = Dictionary::from_matrix(matrix, vec![1, 1]).unwrap();
        let smin = ortho.check_pairwise_disjoint(1e-8).unwrap();
        assert!((smin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn append_identity_adds_axis_blocks() {
        let d = small_dict();
        let aug = d.append_identity();
        assert_eq!(aug.n_blocks(), 2 + 2);
        assert_eq!(aug.total_cols(), 3 + 2);
        aug.validate().unwrap();
        // Last blocks are the coordinate axes.
        assert_eq!(aug.block(2)[(0, 0)], 1.0);
        assert_eq!(aug.block(3)[(1, 0)], 1.0);
    }
}
