//! JSON shapes for matrices and state vectors: real and imaginary parts are
//! carried as separate arrays so no complex literal syntax is needed.

use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// `{"rows": n, "cols": m, "re": [[...]], "im": [[...]]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// `{"re": [...], "im": [...]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        let part = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.rows())
                .map(|r| (0..m.cols()).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        Self {
            rows: m.rows(),
            cols: m.cols(),
            re: part(|z| z.re),
            im: part(|z| z.im),
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let shape_ok = |parts: &[Vec<f64>]| parts.len() == j.rows && parts.iter().all(|r| r.len() == j.cols);
        if !shape_ok(&j.re) || !shape_ok(&j.im) {
            return Err(Error::InvalidMatrix(format!(
                "`re` and `im` must both be {}x{} nested arrays",
                j.rows, j.cols
            )));
        }
        let data = j
            .re
            .iter()
            .flatten()
            .zip(j.im.iter().flatten())
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        ComplexMatrix::new(j.rows, j.cols, data)
    }
}

impl From<&[C64]> for VectorJson {
    fn from(v: &[C64]) -> Self {
        Self {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<VectorJson> for Vec<C64> {
    type Error = Error;

    fn try_from(j: VectorJson) -> Result<Self> {
        if j.re.len() != j.im.len() || j.re.is_empty() {
            return Err(Error::InvalidState(format!(
                "`re` ({}) and `im` ({}) must be non-empty and of equal length",
                j.re.len(),
                j.im.len()
            )));
        }
        let v: Vec<C64> = j.re.iter().zip(&j.im).map(|(&a, &b)| C64::new(a, b)).collect();
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        Ok(v)
    }
}
