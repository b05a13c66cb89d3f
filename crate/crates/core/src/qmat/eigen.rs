//! Jacobi eigensolver and one-sided Jacobi SVD for small complex matrices.

use super::{ComplexMatrix, C64, ONE, TOL_HERMITIAN, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_THRESHOLD: f64 = 1e-13;

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = self.vectors[(r, k)] * w;
                for c in 0..n {
                    out[(r, c)] += vr * self.vectors[(c, k)].conj();
                }
            }
        }
        out
    }
}

/// Unitary 2x2 block `[[c, s], [-s e^{-iα}, c e^{-iα}]]` that diagonalizes
/// the Hermitian block `[[app, apq], [conj(apq), aqq]]`.
#[derive(Clone, Copy)]
struct Rotation {
    pp: C64,
    pq: C64,
    qp: C64,
    qq: C64,
}

impl Rotation {
    fn new(app: f64, aqq: f64, apq: C64) -> Self {
        let magnitude = apq.norm();
        let phase = if magnitude > 0.0 { (apq / magnitude).conj() } else { ONE };
        let theta = 0.5 * (2.0 * magnitude).atan2(aqq - app);
        let (s, c) = theta.sin_cos();
        Self {
            pp: C64::new(c, 0.0),
            pq: C64::new(s, 0.0),
            qp: phase * (-s),
            qq: phase * c,
        }
    }

    /// `m ← m · G` on columns p, q.
    fn apply_right(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        for k in 0..m.rows() {
            let (a, b) = (m[(k, p)], m[(k, q)]);
            m[(k, p)] = a * self.pp + b * self.qp;
            m[(k, q)] = a * self.pq + b * self.qq;
        }
    }

    /// `m ← G† · m` on rows p, q.
    fn apply_left_adjoint(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        for k in 0..m.cols() {
            let (a, b) = (m[(p, k)], m[(q, k)]);
            m[(p, k)] = self.pp.conj() * a + self.qp.conj() * b;
            m[(q, k)] = self.pq.conj() * a + self.qq.conj() * b;
        }
    }
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                acc += m[(r, c)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic complex Jacobi eigensolver for Hermitian input.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let scale = h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > TOL_HERMITIAN * scale {
        return Err(Error::NotHermitian(defect));
    }

    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = OFF_DIAGONAL_THRESHOLD * a.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                algorithm: "Jacobi eigensolver",
                iterations: sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.norm() == 0.0 {
                    continue;
                }
                let rot = Rotation::new(a[(p, p)].re, a[(q, q)].re, apq);
                rot.apply_right(&mut a, p, q);
                rot.apply_left_adjoint(&mut a, p, q);
                rot.apply_right(&mut v, p, q);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Singular values (one per column of the input) and right singular vectors.
#[derive(Clone, Debug)]
pub struct Svd {
    pub values: Vec<f64>,
    pub right: ComplexMatrix,
}

/// One-sided (Hestenes) Jacobi SVD. Singular values are returned in column
/// order, unsorted; `right` column `j` pairs with `values[j]`.
pub fn singular_values(a: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    let mut work = a.clone();
    let mut right = ComplexMatrix::identity(n);
    let tol = f64::EPSILON * (m.max(n) as f64);
    // Columns at rounding-noise level would otherwise keep rotating forever.
    let floor = tol * a.frobenius_norm().powi(2);

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, ZERO);
                for k in 0..m {
                    let (x, y) = (work[(k, p)], work[(k, q)]);
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                if gamma.norm() <= tol * (alpha * beta).sqrt() || gamma.norm() <= floor {
                    continue;
                }
                worst = worst.max(gamma.norm() / (alpha * beta).sqrt());
                rotated = true;
                let rot = Rotation::new(alpha, beta, gamma);
                rot.apply_right(&mut work, p, q);
                rot.apply_right(&mut right, p, q);
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                algorithm: "one-sided Jacobi SVD",
                iterations: sweeps,
                residual: worst,
            });
        }
    }

    let values = (0..n)
        .map(|c| (0..m).map(|r| work[(r, c)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    Ok(Svd { values, right })
}

/// Orthonormal basis of the right null space: right singular vectors whose
/// singular value is at most `threshold`.
pub fn null_space(a: &ComplexMatrix, threshold: f64) -> Result<Vec<Vec<C64>>> {
    let svd = singular_values(a)?;
    Ok(svd
        .values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= threshold)
        .map(|(j, _)| svd.right.column(j))
        .collect())
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "cannot solve {}x{} system with {}x{} right-hand side",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut lhs = a.clone();
    let mut rhs = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lhs[(i, col)].norm().total_cmp(&lhs[(j, col)].norm()))
            .unwrap_or(col);
        if lhs[(pivot, col)].norm() <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        if pivot != col {
            for k in 0..n {
                let t = lhs[(col, k)];
                lhs[(col, k)] = lhs[(pivot, k)];
                lhs[(pivot, k)] = t;
            }
            for k in 0..rhs.cols() {
                let t = rhs[(col, k)];
                rhs[(col, k)] = rhs[(pivot, k)];
                rhs[(pivot, k)] = t;
            }
        }
        let inv = ONE / lhs[(col, col)];
        for row in col + 1..n {
            let factor = lhs[(row, col)] * inv;
            if factor == ZERO {
                continue;
            }
            for k in col..n {
                let t = lhs[(col, k)];
                lhs[(row, k)] -= factor * t;
            }
            for k in 0..rhs.cols() {
                let t = rhs[(col, k)];
                rhs[(row, k)] -= factor * t;
            }
        }
    }
    let mut x = ComplexMatrix::zeros(n, rhs.cols());
    for k in 0..rhs.cols() {
        for row in (0..n).rev() {
            let mut acc = rhs[(row, k)];
            for j in row + 1..n {
                acc -= lhs[(row, j)] * x[(j, k)];
            }
            x[(row, k)] = acc / lhs[(row, row)];
        }
    }
    Ok(x)
}
