//! Dimensionality reduction for classification features.
//!
//! Three reducers map raw pixel vectors to a `D`-dimensional feature space:
//! principal components of the training covariance, a random Gaussian
//! projection with entry variance `1/D`, and plain strided downsampling.
//! Fitting is deterministic given the seed, and a fitted reducer applies the
//! same map to training and test vectors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::stream_rng;

/// Which reduction method to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReducerKind {
    /// Project onto the top principal components of the training covariance.
    Eigen,
    /// Multiply by a random matrix with i.i.d. `N(0, 1/D)` entries.
    RandomProjection,
    /// Keep every `factor`-th coordinate.
    Downsample {
        /// Stride between kept coordinates.
        factor: usize,
    },
}

enum ReducerState {
    /// `D × input` projection, with the training mean subtracted first when
    /// present (principal components are computed on centered data).
    Projection {
        matrix: DMatrix<f64>,
        offset: Option<DVector<f64>>,
    },
    /// Coordinates kept by downsampling.
    Indices(Vec<usize>),
}

/// A fitted feature map.
pub struct FeatureReducer {
    kind: ReducerKind,
    input_dim: usize,
    output_dim: usize,
    seed: u64,
    state: ReducerState,
}

impl FeatureReducer {
    /// The method this reducer was fitted with.
    pub fn kind(&self) -> ReducerKind {
        self.kind
    }

    /// Expected input length.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Length of reduced vectors.
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Seed the fit was derived from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Maps one vector into the feature space.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "reducer expects length {}, got {}",
                self.input_dim,
                v.len()
            )));
        }
        Ok(match &self.state {
            ReducerState::Projection { matrix, offset } => match offset {
                Some(mean) => matrix * (v - mean),
                None => matrix * v,
            },
            ReducerState::Indices(idx) => DVector::from_fn(idx.len(), |r, _| v[idx[r]]),
        })
    }

    /// Maps every column of a matrix.
    pub fn apply_columns(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.output_dim, m.ncols());
        for j in 0..m.ncols() {
            let reduced = self.apply(&m.column(j).clone_owned())?;
            out.set_column(j, &reduced);
        }
        Ok(out)
    }
}

/// Fits a reducer to the training matrix (one sample per column).
///
/// For [`ReducerKind::Eigen`] the training columns are mean-centered and the
/// top `output_dim` principal components are extracted; a centered covariance
/// of rank below `output_dim` is rejected with
/// [`Error::RankDeficientCovariance`]. For [`ReducerKind::Downsample`] the
/// input length must be divisible by the factor and the quotient must equal
/// `output_dim` ([`Error::NonDivisibleDownsample`] otherwise).
pub fn fit_reducer(
    training: &DMatrix<f64>,
    kind: ReducerKind,
    output_dim: usize,
    seed: u64,
) -> Result<FeatureReducer> {
    let input_dim = training.nrows();
    if output_dim == 0 || output_dim > input_dim {
        return Err(Error::InvalidParameter(format!(
            "reduced dimension must lie in [1, {input_dim}], got {output_dim}"
        )));
    }
    let state = match kind {
        ReducerKind::Eigen => {
            if training.ncols() < 2 {
                return Err(Error::InvalidParameter(
                    "principal components need at least two training samples".into(),
                ));
            }
            let mean = DVector::from_fn(input_dim, |r, _| training.row(r).mean());
            let mut centered = training.clone();
            for mut col in centered.column_iter_mut() {
                col -= &mean;
            }
            let svd = centered.clone().svd(true, false);
            let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
            let tol = linalg::rank_tolerance(smax, centered.nrows(), centered.ncols());
            let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
            if rank < output_dim {
                return Err(Error::RankDeficientCovariance {
                    rank,
                    needed: output_dim,
                });
            }
            let u = svd.u.expect("SVD computed with U");
            ReducerState::Projection {
                matrix: u.columns(0, output_dim).transpose(),
                offset: Some(mean),
            }
        }
        ReducerKind::RandomProjection => {
            let mut rng = stream_rng(seed, 0x5250);
            let scale = (1.0 / output_dim as f64).sqrt();
            ReducerState::Projection {
                matrix: DMatrix::from_fn(output_dim, input_dim, |_, _| {
                    scale * rng.sample::<f64, _>(StandardNormal)
                }),
                offset: None,
            }
        }
        ReducerKind::Downsample { factor } => {
            if factor == 0 || input_dim % factor != 0 {
                return Err(Error::NonDivisibleDownsample(format!(
                    "input length {input_dim} is not divisible by factor {factor}"
                )));
            }
            if input_dim / factor != output_dim {
                return Err(Error::NonDivisibleDownsample(format!(
                    "factor {factor} on length {input_dim} yields {}, not {output_dim}",
                    input_dim / factor
                )));
            }
            ReducerState::Indices((0..input_dim).step_by(factor).collect())
        }
    };
    Ok(FeatureReducer {
        kind,
        input_dim,
        output_dim,
        seed,
        state,
    })
}
