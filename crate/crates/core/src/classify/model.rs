//! Sparse-representation classification over a labeled block dictionary.
//!
//! Training vectors of each class form one block; a test vector is solved
//! against the whole dictionary with a ball-relaxed convex program, and the
//! predicted class is the block whose contribution best reconstructs the
//! test vector. A nearest-subspace baseline scores classes by plain
//! projection residuals instead.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Dictionary;
use crate::norm::Norm;
use crate::solver::{Constraint, Family, PreparedSolver, SolveSpec};

/// Ball radius used by the classification solves.
pub const CLASSIFY_DELTA: f64 = 0.05;

/// Gap below which two class residuals count as tied.
const CONFIDENCE_GAP: f64 = 1e-9;

/// The standard classification solve: ball constraint with
/// [`CLASSIFY_DELTA`] on unit-normalized test vectors.
pub fn classification_spec(family: Family, q: Norm) -> SolveSpec {
    let mut spec = SolveSpec::new(family, q);
    spec.constraint = Constraint::Ball {
        delta: CLASSIFY_DELTA,
    };
    spec
}

/// A block dictionary whose blocks are labeled training classes.
pub struct LabeledDictionary {
    dictionary: Dictionary,
    labels: Vec<usize>,
}

/// One classification outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    /// Predicted class label (ties broken toward the smallest label).
    pub class: usize,
    /// Residual `‖ŷ − B[i]c*[i]‖₂` per block, in label order.
    pub residuals: Vec<f64>,
    /// Whether the underlying solve converged (always true for the
    /// nearest-subspace rule).
    pub converged: bool,
    /// False when the best residual is not meaningfully below the runner-up
    /// or the solve did not converge.
    pub confident: bool,
}

impl LabeledDictionary {
    /// Groups training columns by label into blocks (ascending label order),
    /// unit-normalizes each column, and derives per-class subspace bases.
    ///
    /// `labels[j]` is the class of training column `j`; every class needs at
    /// least one column, and zero columns are rejected.
    pub fn from_training(training: &DMatrix<f64>, labels: &[usize]) -> Result<Self> {
        if labels.len() != training.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} training columns",
                labels.len(),
                training.ncols()
            )));
        }
        if training.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "training matrix has no columns".into(),
            ));
        }
        let mut classes: Vec<usize> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();

        let mut columns: Vec<DVector<f64>> = Vec::with_capacity(training.ncols());
        let mut sizes = Vec::with_capacity(classes.len());
        for &class in &classes {
            let mut count = 0;
            for (j, &label) in labels.iter().enumerate() {
                if label != class {
                    continue;
                }
                let col = training.column(j).clone_owned();
                let norm = col.norm();
                if norm <= 0.0 {
                    return Err(Error::ZeroSignal(format!(
                        "training column {j} of class {class} is zero"
                    )));
                }
                columns.push(col / norm);
                count += 1;
            }
            sizes.push(count);
        }

        let mut matrix = DMatrix::zeros(training.nrows(), columns.len());
        for (j, col) in columns.iter().enumerate() {
            matrix.set_column(j, col);
        }
        Ok(LabeledDictionary {
            dictionary: Dictionary::from_matrix(matrix, sizes)?,
            labels: classes,
        })
    }

    /// The underlying block dictionary.
    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    /// Class label per block, ascending.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Classifies one test vector with the given convex program.
    ///
    /// The test vector is unit-normalized first (so the ball radius has a
    /// consistent meaning), then the predicted class is the block whose
    /// contribution leaves the smallest residual.
    pub fn classify(&self, y: &DVector<f64>, spec: &SolveSpec) -> Result<Classification> {
        let solver = PreparedSolver::new(&self.dictionary, spec.clone())?;
        self.classify_prepared(y, &solver)
    }

    /// [`LabeledDictionary::classify`] with a reusable prepared solver
    /// (factorizations shared across many test vectors).
    pub fn classify_prepared(
        &self,
        y: &DVector<f64>,
        solver: &PreparedSolver,
    ) -> Result<Classification> {
        let normalized = normalize(y)?;
        let sol = solver.solve(&normalized)?;
        let residuals: Vec<f64> = (0..self.dictionary.n_blocks())
            .map(|i| {
                (&normalized - self.dictionary.block_contribution(&sol.coefficients, i)).norm()
            })
            .collect();
        Ok(self.decide(residuals, sol.converged))
    }

    /// Nearest-subspace baseline: the class whose stored subspace basis
    /// leaves the smallest projection residual.
    pub fn nearest_subspace(&self, y: &DVector<f64>) -> Result<Classification> {
        let normalized = normalize(y)?;
        let residuals: Vec<f64> = (0..self.dictionary.n_blocks())
            .map(|i| {
                (&normalized - linalg::project_onto_span(self.dictionary.basis(i), &normalized))
                    .norm()
            })
            .collect();
        Ok(self.decide(residuals, true))
    }

    fn decide(&self, residuals: Vec<f64>, converged: bool) -> Classification {
        let mut best = 0;
        for i in 1..residuals.len() {
            if residuals[i] < residuals[best] {
                best = i;
            }
        }
        let mut runner_up = f64::INFINITY;
        for (i, &r) in residuals.iter().enumerate() {
            if i != best {
                runner_up = runner_up.min(r);
            }
        }
        let confident = converged && runner_up - residuals[best] > CONFIDENCE_GAP;
        Classification {
            class: self.labels[best],
            residuals,
            converged,
            confident,
        }
    }
}

fn normalize(y: &DVector<f64>) -> Result<DVector<f64>> {
    let norm = y.norm();
    if norm <= 0.0 {
        return Err(Error::ZeroSignal("cannot classify a zero vector".into()));
    }
    Ok(y / norm)
}

/// Synthetic union-of-subspaces classification data: `per_class` training
/// and `tests_per_class` test vectors drawn from each of `n_classes` random
/// disjoint subspaces, with optional additive Gaussian noise on the tests.
#[cfg(test)]
pub(crate) fn synthetic_classes(
    ambient_dim: usize,
    n_classes: usize,
    subspace_dim: usize,
    per_class: usize,
    tests_per_class: usize,
    noise: f64,
    seed: u64,
) -> (DMatrix<f64>, Vec<usize>, Vec<(DVector<f64>, usize)>) {
    use crate::model::generate_dictionary;
    use crate::rng::chain_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    let scaffold =
        generate_dictionary(ambient_dim, n_classes, subspace_dim, subspace_dim, seed).unwrap();
    let mut training = DMatrix::zeros(ambient_dim, n_classes * per_class);
    let mut labels = Vec::new();
    let mut tests = Vec::new();
    for class in 0..n_classes {
        let basis = scaffold.basis(class);
        for j in 0..per_class {
            let mut rng = chain_rng(seed, &[1, class as u64, j as u64]);
            let w = DVector::from_fn(subspace_dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v = basis * w;
            training.set_column(class * per_class + j, &(&v / v.norm()));
            labels.push(class);
        }
        for j in 0..tests_per_class {
            let mut rng = chain_rng(seed, &[2, class as u64, j as u64]);
            let w = DVector::from_fn(subspace_dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v = basis * w;
            let mut y = &v / v.norm();
            for r in 0..ambient_dim {
                y[r] += noise * rng.sample::<f64, _>(StandardNormal);
            }
            tests.push((y, class));
        }
    }
    (training, labels, tests)
}
