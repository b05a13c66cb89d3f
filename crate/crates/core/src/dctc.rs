//! The Deutsch CTC channel.
//!
//! For an interaction `U` on `W ⊗ W_ctc` and a CR input `ρ`, the looped
//! state must satisfy `σ = tr_cr[U (ρ ⊗ σ) U†]`, and the CR system leaves as
//! `tr_ctc[U (ρ ⊗ σ) U†]`. The map is affine in `σ`, so its fixed points are
//! the eigenvalue-1 eigenspace of a `d_ctc² × d_ctc²` superoperator.
//! When that space holds more than one density matrix the solver picks the
//! one of maximal von Neumann entropy and reports the whole space.

use log::{debug, warn};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmat::{
    dagger, eig_hermitian, is_unitary, kron, null_space, partial_trace, solve, trace_distance,
    unitarity_defect, ComplexMatrix, DimensionSplit, C64,
};
use crate::states::{serialize_density_matrix, DensityMatrix, Provenance};

/// Maximum residual `‖σ − map(σ)‖_tr` accepted for a reported fixed point.
pub const RESIDUAL_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;

/// An interaction unitary together with the CR input state.
#[derive(Clone, Debug)]
pub struct DeutschInstance {
    unitary: ComplexMatrix,
    input: DensityMatrix,
    split: DimensionSplit,
}

impl DeutschInstance {
    pub fn new(unitary: ComplexMatrix, input: DensityMatrix, d_ctc: usize) -> Result<Self> {
        let split = DimensionSplit::new(vec![input.dim(), d_ctc])?;
        if !unitary.is_square() || unitary.rows() != split.total() {
            return Err(Error::DimensionMismatch(format!(
                "interaction is {}x{} but W ⊗ W_ctc has dimension {}",
                unitary.rows(),
                unitary.cols(),
                split.total()
            )));
        }
        if !is_unitary(&unitary, UNITARY_TOL) {
            return Err(Error::NotUnitary(unitarity_defect(&unitary)));
        }
        Ok(Self { unitary, input, split })
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn input(&self) -> &DensityMatrix {
        &self.input
    }

    pub fn split(&self) -> &DimensionSplit {
        &self.split
    }

    pub fn d_cr(&self) -> usize {
        self.split.factors()[0]
    }

    pub fn d_ctc(&self) -> usize {
        self.split.factors()[1]
    }

    /// Same interaction, different CR input.
    pub fn with_input(&self, input: DensityMatrix) -> Result<Self> {
        if input.dim() != self.d_cr() {
            return Err(Error::DimensionMismatch(format!(
                "input has dimension {}, expected {}",
                input.dim(),
                self.d_cr()
            )));
        }
        Ok(Self {
            unitary: self.unitary.clone(),
            input,
            split: self.split.clone(),
        })
    }

    fn joint(&self, sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
        kron(self.input.matrix(), sigma).conjugate_by(&self.unitary)
    }

    /// Linear extension of the Deutsch map to arbitrary `d_ctc × d_ctc` matrices.
    fn map_matrix(&self, sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
        partial_trace(&self.joint(sigma)?, &self.split, 1)
    }

    fn check_ctc(&self, rho_ctc: &DensityMatrix) -> Result<()> {
        if rho_ctc.dim() != self.d_ctc() {
            return Err(Error::DimensionMismatch(format!(
                "CTC state has dimension {}, expected {}",
                rho_ctc.dim(),
                self.d_ctc()
            )));
        }
        Ok(())
    }
}

/// `tr_cr[U (ρ ⊗ σ) U†]`.
pub fn deutsch_map(inst: &DeutschInstance, rho_ctc: &DensityMatrix) -> Result<DensityMatrix> {
    inst.check_ctc(rho_ctc)?;
    DensityMatrix::from_numerical(
        inst.map_matrix(rho_ctc.matrix())?,
        DimensionSplit::single(inst.d_ctc()),
        Provenance::Unspecified,
    )
}

/// `tr_ctc[U (ρ ⊗ σ) U†]`, the state the CR system leaves with.
pub fn cr_output(inst: &DeutschInstance, rho_ctc: &DensityMatrix) -> Result<DensityMatrix> {
    inst.check_ctc(rho_ctc)?;
    DensityMatrix::from_numerical(
        partial_trace(&inst.joint(rho_ctc.matrix())?, &inst.split, 0)?,
        inst.input.split().clone(),
        Provenance::Unspecified,
    )
}

/// Matrix `S` with `vec(map(σ)) = S vec(σ)` under column stacking.
pub fn superoperator(inst: &DeutschInstance) -> Result<ComplexMatrix> {
    let d = inst.d_ctc();
    let n = d * d;
    let mut s = ComplexMatrix::zeros(n, n);
    for c in 0..d {
        for r in 0..d {
            let mut unit = ComplexMatrix::zeros(d, d);
            unit[(r, c)] = C64::new(1.0, 0.0);
            let image = inst.map_matrix(&unit)?.vec_columns();
            let col = c * d + r;
            for (row, z) in image.into_iter().enumerate() {
                s[(row, col)] = z;
            }
        }
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Kernel,
    Iteration,
}

/// How the reported fixed point was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// The fixed space holds a single density matrix.
    Unique,
    /// Several fixed points; the maximum-entropy one was chosen.
    MaxEntropy,
    /// Kernel extraction failed; Cesàro iteration from `I/d` was used.
    IterationFallback,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointReport {
    #[serde(serialize_with = "serialize_density_matrix")]
    pub chosen: DensityMatrix,
    pub fixed_space_dim: usize,
    pub residual: f64,
    pub entropy_bits: f64,
    pub method: SolveMethod,
    pub selection: Selection,
    pub basis_of_fixed_space: Vec<ComplexMatrix>,
}

impl FixedPointReport {
    pub fn is_unique(&self) -> bool {
        self.fixed_space_dim == 1
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Singular values of `S − I` at or below this count as zero.
    pub kernel_threshold: f64,
    /// Stop the entropy ascent once the projected gradient norm drops below this.
    pub entropy_tol: f64,
    pub max_ascent_steps: usize,
    /// Residual target and step cap for the iteration fallback.
    pub fallback_tol: f64,
    pub fallback_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kernel_threshold: 1e-9,
            entropy_tol: 1e-10,
            max_ascent_steps: 20_000,
            fallback_tol: 1e-12,
            fallback_max_iter: 1_000_000,
        }
    }
}

pub fn solve_fixed_points(inst: &DeutschInstance) -> Result<FixedPointReport> {
    solve_fixed_points_with(inst, &SolverOptions::default())
}

pub fn solve_fixed_points_with(inst: &DeutschInstance, opts: &SolverOptions) -> Result<FixedPointReport> {
    let s = superoperator(inst)?;
    let basis = hermitian_fixed_basis(&s, inst.d_ctc(), opts.kernel_threshold)?;
    let fixed_space_dim = basis.len();

    match select_from_kernel(inst, &s, &basis, opts) {
        Ok((chosen, selection)) => {
            let residual = chosen.trace_distance(&deutsch_map(inst, &chosen)?)?;
            if residual <= RESIDUAL_TOL && fixed_space_dim >= 1 {
                return Ok(FixedPointReport {
                    entropy_bits: chosen.entropy_bits()?,
                    chosen,
                    fixed_space_dim,
                    residual,
                    method: SolveMethod::Kernel,
                    selection,
                    basis_of_fixed_space: basis,
                });
            }
            warn!("kernel fixed point has residual {residual:.3e}; falling back to iteration");
        }
        Err(e) => warn!("kernel fixed-point extraction failed ({e}); falling back to iteration"),
    }

    let seed = DensityMatrix::maximally_mixed(DimensionSplit::single(inst.d_ctc()), Provenance::Unspecified);
    let outcome = iterate_fixed_point(inst, &seed, opts.fallback_tol, opts.fallback_max_iter)
        .map_err(|e| Error::NoFixedPoint(e.to_string()))?;
    Ok(FixedPointReport {
        entropy_bits: outcome.state.entropy_bits()?,
        chosen: outcome.state,
        fixed_space_dim: fixed_space_dim.max(1),
        residual: outcome.residual,
        method: SolveMethod::Iteration,
        selection: Selection::IterationFallback,
        basis_of_fixed_space: basis,
    })
}

/// Dimension of the Hermitian fixed space, without selecting a fixed point.
pub fn fixed_space_dimension(inst: &DeutschInstance, threshold: f64) -> Result<usize> {
    let s = superoperator(inst)?;
    Ok(hermitian_fixed_basis(&s, inst.d_ctc(), threshold)?.len())
}

/// Real-orthonormal (Hilbert-Schmidt) Hermitian basis of `ker(S − I)`.
fn hermitian_fixed_basis(s: &ComplexMatrix, d: usize, threshold: f64) -> Result<Vec<ComplexMatrix>> {
    let shifted = s - &ComplexMatrix::identity(d * d);
    let kernel = null_space(&shifted, threshold)?;
    debug!("superoperator kernel has complex dimension {}", kernel.len());

    let mut basis: Vec<ComplexMatrix> = Vec::with_capacity(kernel.len());
    for v in &kernel {
        let k = ComplexMatrix::unvec_columns(v, d, d)?;
        for candidate in [k.hermitian_part(), k.anti_hermitian_part()] {
            if basis.len() == kernel.len() {
                break;
            }
            if let Some(b) = orthonormalize_against(&basis, candidate, 1e-6) {
                basis.push(b);
            }
        }
    }
    Ok(basis)
}

/// Real Gram-Schmidt step for Hermitian matrices under `Re tr(A† B)`.
fn orthonormalize_against(basis: &[ComplexMatrix], mut m: ComplexMatrix, tol: f64) -> Option<ComplexMatrix> {
    let start = m.frobenius_norm();
    if start <= tol {
        return None;
    }
    // two passes for numerical orthogonality
    for _ in 0..2 {
        for b in basis {
            let coeff = b.hs_inner(&m).re;
            m = &m - &(b * coeff);
        }
    }
    let n = m.frobenius_norm();
    (n > tol * start.max(1.0)).then(|| &m * (1.0 / n))
}

fn select_from_kernel(
    inst: &DeutschInstance,
    s: &ComplexMatrix,
    basis: &[ComplexMatrix],
    opts: &SolverOptions,
) -> Result<(DensityMatrix, Selection)> {
    let d = inst.d_ctc();
    let split = DimensionSplit::single(d);
    match basis {
        [] => Err(Error::NoFixedPoint("superoperator has no unit eigenvalue".into())),
        [only] => {
            let tr = only.trace().re;
            if tr.abs() < 1e-12 {
                return Err(Error::NoFixedPoint("fixed operator is traceless".into()));
            }
            let chosen = DensityMatrix::from_numerical(only * (1.0 / tr), split, Provenance::Unspecified)?;
            Ok((chosen, Selection::Unique))
        }
        _ => {
            let start = spectral_projection_of_identity(s, d, opts.kernel_threshold)?;
            let chosen = maximize_entropy(&start, basis, opts)?;
            Ok((
                DensityMatrix::from_numerical(chosen, split, Provenance::Unspecified)?,
                Selection::MaxEntropy,
            ))
        }
    }
}

/// Image of `I/d` under the spectral projector onto the unit eigenspace of
/// `S`. This equals the limit of Cesàro averages from `I/d`, so it is a fixed
/// point whose support contains the support of every other fixed point.
fn spectral_projection_of_identity(s: &ComplexMatrix, d: usize, threshold: f64) -> Result<ComplexMatrix> {
    let n = d * d;
    let shifted = s - &ComplexMatrix::identity(n);
    let right = null_space(&shifted, threshold)?;
    let left = null_space(&dagger(&shifted), threshold)?;
    if right.len() != left.len() || right.is_empty() {
        return Err(Error::NoFixedPoint(format!(
            "left/right unit eigenspaces differ ({} vs {})",
            left.len(),
            right.len()
        )));
    }
    let k = right.len();
    let r = ComplexMatrix::from_fn(n, k, |i, j| right[j][i]);
    let l = ComplexMatrix::from_fn(n, k, |i, j| left[j][i]);
    let identity_vec = (&ComplexMatrix::identity(d) * (1.0 / d as f64)).vec_columns();
    let rhs = dagger(&l).matmul(&ComplexMatrix::from_fn(n, 1, |i, _| identity_vec[i]))?;
    let coeffs = solve(&dagger(&l).matmul(&r)?, &rhs)?;
    let projected = r.matmul(&coeffs)?;
    let m = ComplexMatrix::unvec_columns(&projected.column(0), d, d)?.hermitian_part();
    let tr = m.trace().re;
    if tr <= 0.0 {
        return Err(Error::NoFixedPoint("projected identity has non-positive trace".into()));
    }
    Ok(&m * (1.0 / tr))
}

fn entropy_nats(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Projected gradient ascent of the von Neumann entropy over
/// `{start + Σ c_i D_i}`, where the `D_i` span the trace-zero Hermitian fixed
/// directions that stay inside the support of `start`.
fn maximize_entropy(start: &ComplexMatrix, basis: &[ComplexMatrix], opts: &SolverOptions) -> Result<ComplexMatrix> {
    const SUPPORT_TOL: f64 = 1e-9;
    let d = start.rows();

    let eig = eig_hermitian(start)?;
    let mut complement = ComplexMatrix::zeros(d, d);
    for (i, &l) in eig.values.iter().enumerate() {
        if l <= SUPPORT_TOL {
            complement = &complement + &ComplexMatrix::projector(&eig.vector(i));
        }
    }

    // Linear constraints on real coefficients c: tr(Σ c B) = 0 and Q (Σ c B) = 0.
    let k = basis.len();
    let mut rows: Vec<Vec<f64>> = vec![basis.iter().map(|b| b.trace().re).collect()];
    let restricted: Vec<ComplexMatrix> = basis.iter().map(|b| &complement * b).collect();
    for r in 0..d {
        for c in 0..d {
            rows.push(restricted.iter().map(|m| m[(r, c)].re).collect());
            rows.push(restricted.iter().map(|m| m[(r, c)].im).collect());
        }
    }
    let constraint = ComplexMatrix::from_fn(rows.len(), k, |r, c| C64::new(rows[r][c], 0.0));
    let coefficient_space = null_space(&constraint, 1e-9)?;

    let mut directions: Vec<ComplexMatrix> = Vec::new();
    for coeffs in &coefficient_space {
        let mut dir = ComplexMatrix::zeros(d, d);
        for (b, c) in basis.iter().zip(coeffs) {
            dir = &dir + &(b * c.re);
        }
        if let Some(unit) = orthonormalize_against(&directions, dir.hermitian_part(), 1e-9) {
            directions.push(unit);
        }
    }
    debug!("entropy ascent over {} feasible directions", directions.len());
    if directions.is_empty() {
        return Ok(start.clone());
    }

    let feasible = |x: &ComplexMatrix| -> Option<f64> {
        let e = eig_hermitian(&x.hermitian_part()).ok()?;
        (e.values[0] >= -1e-13).then(|| entropy_nats(&e.values))
    };

    let mut x = start.clone();
    let mut entropy = feasible(&x).ok_or_else(|| Error::NoFixedPoint("start point is not positive".into()))?;
    let mut step = 1.0;
    for _ in 0..opts.max_ascent_steps {
        let e = eig_hermitian(&x.hermitian_part())?;
        let log_x = e.reconstruct_with(|l| if l > 1e-300 { l.ln() } else { 0.0 });
        let grad: Vec<f64> = directions.iter().map(|dir| -log_x.hs_inner(dir).re).collect();
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= opts.entropy_tol {
            break;
        }
        let mut delta = ComplexMatrix::zeros(d, d);
        for (dir, g) in directions.iter().zip(&grad) {
            delta = &delta + &(dir * *g);
        }

        let mut accepted = false;
        while step > 1e-18 {
            let trial = &x + &(&delta * step);
            if let Some(h) = feasible(&trial) {
                if h >= entropy + 1e-4 * step * grad_norm * grad_norm {
                    x = trial;
                    entropy = h;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step *= 2.0;
    }
    Ok(x)
}

/// Result of [`iterate_fixed_point`].
#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub state: DensityMatrix,
    pub iterations: usize,
    pub residual: f64,
    /// Whether the Cesàro average (rather than the plain iterate) met the tolerance.
    pub averaged: bool,
}

/// Iterates the Deutsch map from `seed`, tracking both the plain iterate
/// `map^k(seed)` and the Cesàro average `(1/N) Σ_{k<N} map^k(seed)`, and
/// returns whichever first has residual `‖x − map(x)‖_tr ≤ tol`.
///
/// The average converges even when the plain iterate cycles; the plain
/// iterate converges geometrically whenever it converges at all, where the
/// average only closes in as `1/N`.
pub fn iterate_fixed_point(
    inst: &DeutschInstance,
    seed: &DensityMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<IterationOutcome> {
    inst.check_ctc(seed)?;
    let d = inst.d_ctc();
    let split = DimensionSplit::single(d);
    let mut current = seed.matrix().clone();
    let mut sum = ComplexMatrix::zeros(d, d);
    let mut best = f64::INFINITY;

    for k in 0..max_iter {
        let next = inst.map_matrix(&current)?;
        let plain = trace_distance(&current, &next)?;
        if plain <= tol {
            return Ok(IterationOutcome {
                state: DensityMatrix::from_numerical(current, split, Provenance::Unspecified)?,
                iterations: k,
                residual: plain,
                averaged: false,
            });
        }
        sum = &sum + &current;
        let average = &sum * (1.0 / (k + 1) as f64);
        let averaged = trace_distance(&average, &inst.map_matrix(&average)?)?;
        if averaged <= tol {
            return Ok(IterationOutcome {
                state: DensityMatrix::from_numerical(average, split, Provenance::Unspecified)?,
                iterations: k + 1,
                residual: averaged,
                averaged: true,
            });
        }
        best = best.min(plain).min(averaged);
        current = next;
    }
    Err(Error::NoConvergence {
        algorithm: "Cesàro fixed-point iteration",
        iterations: max_iter,
        residual: best,
    })
}

/// The full nonlinear channel on the CR input: solve for the looped state,
/// then read off the CR output.
pub fn evolve(inst: &DeutschInstance) -> Result<DensityMatrix> {
    evolve_with_report(inst).map(|(out, _)| out)
}

pub fn evolve_with_report(inst: &DeutschInstance) -> Result<(DensityMatrix, FixedPointReport)> {
    evolve_with(inst, &SolverOptions::default())
}

pub fn evolve_with(inst: &DeutschInstance, opts: &SolverOptions) -> Result<(DensityMatrix, FixedPointReport)> {
    let report = solve_fixed_points_with(inst, opts)?;
    let out = cr_output(inst, &report.chosen)?;
    Ok((out, report))
}
