//! Dense complex linear algebra for small operators.
//!
//! Everything in this crate lives at dimension 16 or below, so matrices are
//! plain row-major `Vec`s and every routine is a straightforward dense loop.
//! Bipartite operators always put the chronology-respecting (CR) factor first
//! and the CTC factor second.

mod eigen;
mod json;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eigen::{eig_hermitian, null_space, singular_values, solve, HermitianEigen, Svd};
pub use json::{MatrixJson, VectorJson};

pub type C64 = Complex64;

/// Maximum |A - A†| entry tolerated when an operator is declared Hermitian.
pub const TOL_HERMITIAN: f64 = 1e-10;
/// Orthonormality tolerance for eigenvector columns.
pub const TOL_ORTHO: f64 = 1e-10;
/// Reconstruction tolerance for `V diag(λ) V†`.
pub const TOL_RECON: f64 = 1e-9;
/// Eigenvalues down to `-POSITIVITY_SLACK` count as zero.
pub const POSITIVITY_SLACK: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                i / cols,
                i % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag_real(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| if r == c { C64::new(diag[r], 0.0) } else { ZERO })
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "vector length must match column count");
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        u.matmul(self)?.matmul(&dagger(u))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hilbert-Schmidt inner product `tr(self† · other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn hermitian_part(&self) -> Self {
        let d = dagger(self);
        Self::from_fn(self.rows, self.cols, |r, c| (self[(r, c)] + d[(r, c)]) * 0.5)
    }

    /// `(self - self†) / 2i`, the Hermitian matrix B with `self = A + iB`.
    pub fn anti_hermitian_part(&self) -> Self {
        let d = dagger(self);
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] - d[(r, c)]) * C64::new(0.0, -0.5)
        })
    }

    /// `max |A_rc - conj(A_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Column-stacking vectorization: entry (r, c) lands at index `c * rows + r`.
    pub fn vec_columns(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    /// Inverse of [`vec_columns`](Self::vec_columns).
    pub fn unvec_columns(v: &[C64], rows: usize, cols: usize) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot reshape {} entries into {rows}x{cols}",
                v.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |r, c| v[c * rows + r]))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

fn assert_same_shape(a: &ComplexMatrix, b: &ComplexMatrix) {
    assert!(
        a.rows == b.rows && a.cols == b.cols,
        "shape mismatch: {}x{} vs {}x{}",
        a.rows,
        a.cols,
        b.rows,
        b.cols
    );
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_same_shape(self, rhs);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_same_shape(self, rhs);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Panics on incompatible shapes; use [`ComplexMatrix::matmul`] for a checked product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("incompatible matrix shapes")
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.map(|z| z * rhs)
    }
}

/// Ordered subsystem dimensions of a composite space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(transparent)]
pub struct DimensionSplit(Vec<usize>);

impl DimensionSplit {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dimensions must be positive and non-empty, got {factors:?}"
            )));
        }
        Ok(Self(factors))
    }

    pub fn single(d: usize) -> Self {
        Self(vec![d.max(1)])
    }

    /// `[d_cr, d_ctc]`.
    pub fn bipartite(first: usize, second: usize) -> Self {
        Self(vec![first.max(1), second.max(1)])
    }

    pub fn factors(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn factor(&self, i: usize) -> Option<usize> {
        self.0.get(i).copied()
    }

    /// Split of a tensor product, `self` factors first.
    pub fn join(&self, other: &Self) -> Self {
        Self(self.0.iter().chain(&other.0).copied().collect())
    }

    pub(crate) fn check_matches(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::DimensionMismatch(format!(
                "split {:?} has total dimension {}, expected {dim}",
                self.0,
                self.total()
            )));
        }
        Ok(())
    }
}

/// Kronecker product with `a` as the leftmost factor.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Tensor product of two state vectors, `a` first.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

/// Conjugate transpose.
pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.cols, a.rows, |r, c| a[(c, r)].conj())
}

/// Reduced operator on subsystem `keep`, tracing out every other factor of `split`.
pub fn partial_trace(m: &ComplexMatrix, split: &DimensionSplit, keep: usize) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "partial trace needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    split.check_matches(m.rows)?;
    let dk = split.factor(keep).ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "subsystem {keep} out of range for {} factors",
            split.len()
        ))
    })?;
    let left: usize = split.factors()[..keep].iter().product();
    let right: usize = split.factors()[keep + 1..].iter().product();
    let idx = |l: usize, i: usize, r: usize| (l * dk + i) * right + r;

    let mut out = ComplexMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = ZERO;
            for l in 0..left {
                for r in 0..right {
                    acc += m[(idx(l, i, r), idx(l, j, r))];
                }
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Trace norm distance `½ Σ|λ_i(r - s)|`.
pub fn trace_distance(r: &ComplexMatrix, s: &ComplexMatrix) -> Result<f64> {
    if r.rows != s.rows || r.cols != s.cols {
        return Err(Error::DimensionMismatch(format!(
            "trace distance between {}x{} and {}x{}",
            r.rows, r.cols, s.rows, s.cols
        )));
    }
    let diff = (r - s).hermitian_part();
    let eig = eig_hermitian(&diff)?;
    Ok(0.5 * eig.values.iter().map(|l| l.abs()).sum::<f64>())
}

/// Von Neumann entropy in bits. Eigenvalues inside the positivity slack are clamped to zero.
pub fn entropy_bits(m: &ComplexMatrix) -> Result<f64> {
    let eig = eig_hermitian(&m.hermitian_part())?;
    Ok(shannon_bits(&eig.values))
}

/// `-Σ p log₂ p` with `0 log 0 = 0`; non-positive weights are skipped.
pub fn shannon_bits(weights: &[f64]) -> f64 {
    weights
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// The first density-matrix condition a candidate violates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DensityViolation {
    NotSquare { rows: usize, cols: usize },
    NotHermitian { deviation: f64 },
    NotPositive { min_eigenvalue: f64 },
    Trace { trace: f64 },
    Eigensolver,
}

impl fmt::Display for DensityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotSquare { rows, cols } => write!(f, "not square ({rows}x{cols})"),
            Self::NotHermitian { deviation } => {
                write!(f, "not Hermitian (deviation {deviation:.3e})")
            }
            Self::NotPositive { min_eigenvalue } => {
                write!(f, "not positive (min eigenvalue {min_eigenvalue:.3e})")
            }
            Self::Trace { trace } => write!(f, "trace {trace} is not 1"),
            Self::Eigensolver => write!(f, "eigensolver failed"),
        }
    }
}

/// Checks Hermiticity, positivity and unit trace, in that order.
pub fn check_density(m: &ComplexMatrix, tol: f64) -> Result<(), DensityViolation> {
    if !m.is_square() {
        return Err(DensityViolation::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let deviation = m.hermiticity_defect();
    if deviation > tol {
        return Err(DensityViolation::NotHermitian { deviation });
    }
    let eig = eig_hermitian(&m.hermitian_part()).map_err(|_| DensityViolation::Eigensolver)?;
    let min_eigenvalue = eig.values.first().copied().unwrap_or(0.0);
    if min_eigenvalue < -tol {
        return Err(DensityViolation::NotPositive { min_eigenvalue });
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > tol {
        return Err(DensityViolation::Trace { trace });
    }
    Ok(())
}

pub fn is_density(m: &ComplexMatrix, tol: f64) -> bool {
    check_density(m, tol).is_ok()
}

/// `max |(m†m - I)_rc| <= tol`.
pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    (&dagger(m) * m).max_abs_diff(&ComplexMatrix::identity(m.rows))
}

pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    unitarity_defect(m) <= tol
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
