//! Block-sparse signal recovery over unions of subspaces.
//!
//! A signal `y ∈ R^D` is block-sparse in a dictionary `B = [B[1] … B[n]]`
//! when it is a combination of columns drawn from only a few blocks, each
//! block spanning one low-dimensional subspace. This crate provides:
//!
//! - the data model: block structures, dictionaries with per-block subspace
//!   bases, random generation of disjoint-subspace dictionaries, planted
//!   test instances, and a checksummed binary file format ([`model`]);
//! - geometry diagnostics: subspace and classical coherence profiles
//!   ([`coherence`]) and block isometry constants ([`isometry`]);
//! - solvers: ADMM for the convex recovery programs (minimizing either a sum
//!   of coefficient-block norms or a sum of reconstruction norms, with exact
//!   or ball-relaxed data fit and optional sparse-corruption handling), plus
//!   a combinatorial oracle for small instances ([`solver`]);
//! - recovery certificates: sufficient conditions that certify every signal
//!   with at most `k` active blocks is recovered ([`conditions`]);
//! - experiment harnesses: deterministic benchmark sweeps with CSV/SVG output
//!   ([`experiments`]) and a subspace classifier for grayscale images
//!   ([`classify`]).

pub mod classify;
pub mod cli;
pub mod coherence;
pub mod conditions;
pub mod error;
pub mod experiments;
pub mod isometry;
pub mod linalg;
pub mod model;
pub mod norm;
pub mod rng;
pub mod solver;

#[cfg(test)]
pub(crate) mod test_util {
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// A `rows×cols` matrix of i.i.d. standard normal entries.
    pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }
}

pub use error::{Error, Result};
pub use model::{
    BlockSparseCoefficients, BlockStructure, Dictionary, PlantedInstance, generate_dictionary,
    plant_signal,
};
pub use norm::Norm;
pub use solver::{solve, Family, SolveResult, SolveSpec};
