//! A planted block-sparse instance: dictionary, signal, and ground truth.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{BlockSparseCoefficients, Dictionary};

/// A signal `y = B c⁰` generated from a known `k`-block-sparse coefficient
/// vector, carrying everything needed to score a recovery attempt.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    dictionary: Dictionary,
    signal: DVector<f64>,
    truth: BlockSparseCoefficients,
    support: Vec<usize>,
    k: usize,
    seed: u64,
}

impl PlantedInstance {
    /// Assembles an instance, verifying `y = B c⁰` and the support size.
    pub fn new(
        dictionary: Dictionary,
        signal: DVector<f64>,
        truth: BlockSparseCoefficients,
        support: Vec<usize>,
        k: usize,
        seed: u64,
    ) -> Result<Self> {
        if signal.len() != dictionary.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "signal length {} vs ambient dimension {}",
                signal.len(),
                dictionary.ambient_dim()
            )));
        }
        if truth.values().len() != dictionary.total_cols() {
            return Err(Error::DimensionMismatch(format!(
                "truth length {} vs dictionary columns {}",
                truth.values().len(),
                dictionary.total_cols()
            )));
        }
        if support.len() != k {
            return Err(Error::InvalidParameter(format!(
                "support lists {} blocks but k = {k}",
                support.len()
            )));
        }
        if support.iter().any(|&i| i >= dictionary.n_blocks()) {
            return Err(Error::InvalidParameter(
                "support contains an out-of-range block index".into(),
            ));
        }
        let residual = (&signal - dictionary.apply(&truth)).norm();
        if residual > 1e-12 * signal.norm().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "signal is not B·truth (residual {residual:.3e})"
            )));
        }
        Ok(Self {
            dictionary,
            signal,
            truth,
            support,
            k,
            seed,
        })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn signal(&self) -> &DVector<f64> {
        &self.signal
    }

    /// The planted coefficients `c⁰`.
    pub fn truth(&self) -> &BlockSparseCoefficients {
        &self.truth
    }

    /// The planted block support Λ_k (ascending).
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Planted block sparsity `k`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Seed the instance was planted with.
    pub fn seed(&self) -> u64 {
        self.seed
    }
}
