//! Sparse-representation classification.
//!
//! The pipeline: [`ingest_images`] loads grayscale training images,
//! [`fit_reducer`] maps them to a low-dimensional feature space,
//! [`LabeledDictionary::from_training`] groups the reduced vectors into one
//! block per class, and [`LabeledDictionary::classify`] assigns a test
//! vector to the class whose block best reconstructs it under a
//! ball-relaxed convex solve. [`LabeledDictionary::nearest_subspace`] is the
//! projection-residual baseline.

pub mod ingest;
pub mod model;
pub mod reduce;

pub use ingest::{ingest_images, ImageSet};
pub use model::{
    classification_spec, Classification, LabeledDictionary, CLASSIFY_DELTA,
};
pub use reduce::{fit_reducer, FeatureReducer, ReducerKind};
