//! Image ingestion for classification experiments.
//!
//! Reads a directory of 8-bit grayscale images (PGM or PNG) laid out one
//! subdirectory per class, producing a column-per-image training matrix with
//! pixel values scaled to `[0, 1]` and a label per column. Files within a
//! class are visited in sorted name order, so ingestion is deterministic.

use std::path::Path;

use image::DynamicImage;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A loaded image directory.
#[derive(Debug, Clone)]
pub struct ImageSet {
    /// One column per image, row-major pixel vectorization in `[0, 1]`.
    pub matrix: DMatrix<f64>,
    /// Class id per column, in manifest order.
    pub labels: Vec<usize>,
    /// Common image width.
    pub width: u32,
    /// Common image height.
    pub height: u32,
}

/// Loads every PGM/PNG image under `root/<subdir>` for each manifest entry
/// `(subdir, class id)`, in the order given.
///
/// All images must be 8-bit grayscale with identical dimensions; color or
/// higher-depth images are rejected ([`Error::UnreadableImage`]) rather than
/// converted, and a size mismatch is [`Error::InconsistentDimensions`].
pub fn ingest_images(root: &Path, manifest: &[(String, usize)]) -> Result<ImageSet> {
    if manifest.is_empty() {
        return Err(Error::InvalidParameter(
            "ingestion manifest names no classes".into(),
        ));
    }
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut dims: Option<(u32, u32)> = None;

    for (subdir, class) in manifest {
        let class_dir = root.join(subdir);
        let mut files: Vec<_> = std::fs::read_dir(&class_dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| {
                        let e = e.to_ascii_lowercase();
                        e == "pgm" || e == "png"
                    })
                    .unwrap_or(false)
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "class {class} directory {} has no PGM/PNG images",
                class_dir.display()
            )));
        }
        for path in files {
            let display = path.display().to_string();
            let img = image::open(&path).map_err(|e| Error::UnreadableImage {
                path: display.clone(),
                reason: e.to_string(),
            })?;
            let DynamicImage::ImageLuma8(gray) = img else {
                return Err(Error::UnreadableImage {
                    path: display,
                    reason: "not an 8-bit grayscale image (color images are rejected, \
                             not converted)"
                        .into(),
                });
            };
            let (w, h) = (gray.width(), gray.height());
            match dims {
                None => dims = Some((w, h)),
                Some((ew, eh)) if (ew, eh) != (w, h) => {
                    return Err(Error::InconsistentDimensions(format!(
                        "{display} is {w}×{h}, expected {ew}×{eh}"
                    )));
                }
                Some(_) => {}
            }
            columns.push(DVector::from_iterator(
                (w * h) as usize,
                gray.as_raw().iter().map(|&p| p as f64 / 255.0),
            ));
            labels.push(*class);
        }
    }

    let (width, height) = dims.expect("at least one class with images");
    let mut matrix = DMatrix::zeros((width * height) as usize, columns.len());
    for (j, col) in columns.iter().enumerate() {
        matrix.set_column(j, col);
    }
    Ok(ImageSet {
        matrix,
        labels,
        width,
        height,
    })
}
