//! Data matrices and feature preprocessing.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Column-sum tolerance accepted after centering.
pub const CENTERING_TOL: f64 = 1e-9;

/// An n-by-d observation matrix whose columns have been centered and scaled
/// to unit Euclidean norm. Zero-variance columns are zeroed out and listed in
/// `constant_columns` instead of being normalized.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    pub values: Array2<f64>,
    pub constant_columns: Vec<usize>,
}

impl DataMatrix {
    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }
}

/// Centers every column and scales it to unit 2-norm.
///
/// Constant columns cannot be normalized; they become all-zero and are
/// reported through [`DataMatrix::constant_columns`].
pub fn preprocess(raw: &Array2<f64>) -> Result<DataMatrix> {
    let (n, d) = raw.dim();
    if n < 2 || d == 0 {
        return Err(Error::invalid(format!(
            "preprocess requires at least 2 samples and 1 feature, got {n}x{d}"
        )));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("preprocess: input contains NaN or infinity"));
    }

    let mut values = raw.clone();
    let mut constant_columns = Vec::new();
    for (j, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mean);
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            constant_columns.push(j);
        } else {
            col.mapv_inplace(|v| v / norm);
        }
    }

    Ok(DataMatrix {
        values,
        constant_columns,
    })
}
