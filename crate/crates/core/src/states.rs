//! Pure states, density matrices with a proper/improper provenance tag, and
//! projective measurement.
//!
//! Provenance never changes any arithmetic here. A proper mixture and an
//! improper reduction with the same matrix behave identically under every
//! linear operation in this module; only the experiments look at the tag.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qmat::{
    self, check_density, entropy_bits, inner, kron, kron_vec, norm, partial_trace,
    trace_distance, ComplexMatrix, DimensionSplit, C64, ONE, ZERO,
};

/// Outcomes with probability at or below this carry no collapsed state.
pub const PROB_TOL: f64 = 1e-12;
/// Normalization tolerance for pure states.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance used when validating density matrices.
pub const DENSITY_TOL: f64 = 1e-10;

/// How a density matrix came about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Classical ignorance over an ensemble of pure states.
    Proper,
    /// Partial trace of an entangled pure state.
    Improper,
    Unspecified,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Proper => "proper",
            Self::Improper => "improper",
            Self::Unspecified => "unspecified",
        })
    }
}

/// Unit-norm state vector on a (possibly composite) space.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    split: DimensionSplit,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, split: DimensionSplit) -> Result<Self> {
        split.check_matches(amplitudes.len())?;
        let n = norm(&amplitudes);
        if !n.is_finite() || (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm is {n}, expected 1")));
        }
        Ok(Self { amplitudes, split })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<C64>, split: DimensionSplit) -> Result<Self> {
        let n = norm(&amplitudes);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|z| z / n).collect(), split)
    }

    /// `|k⟩` in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::InvalidState(format!("basis index {k} out of range for dimension {d}")));
        }
        let mut v = vec![ZERO; d];
        v[k] = ONE;
        Self::new(v, DimensionSplit::single(d))
    }

    pub fn z_plus() -> Self {
        Self::qubit(ONE, ZERO)
    }

    pub fn z_minus() -> Self {
        Self::qubit(ZERO, ONE)
    }

    pub fn x_plus() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::qubit(s, s)
    }

    pub fn x_minus() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::qubit(s, -s)
    }

    fn qubit(a: C64, b: C64) -> Self {
        Self {
            amplitudes: vec![a, b],
            split: DimensionSplit::single(2),
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn split(&self) -> &DimensionSplit {
        &self.split
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
            split: self.split.join(&other.split),
        }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm()
    }

    /// Equality up to global phase.
    pub fn same_ray(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && (self.overlap(other) - 1.0).abs() <= tol
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.amplitudes)
    }

    pub fn to_density(&self, provenance: Provenance) -> DensityMatrix {
        DensityMatrix {
            matrix: self.projector(),
            split: self.split.clone(),
            provenance,
        }
    }

    /// Applies a unitary (or any norm-preserving operator) and renormalizes.
    pub fn evolve(&self, op: &ComplexMatrix) -> Result<Self> {
        if op.cols() != self.dim() || op.rows() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on a {}-dimensional state",
                op.rows(),
                op.cols(),
                self.dim()
            )));
        }
        Self::normalized(op.apply(&self.amplitudes), self.split.clone())
    }
}

/// Hermitian, positive, unit-trace operator with a provenance tag.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    split: DimensionSplit,
    provenance: Provenance,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, split: DimensionSplit, provenance: Provenance) -> Result<Self> {
        split.check_matches(matrix.rows())?;
        check_density(&matrix, DENSITY_TOL).map_err(Error::NotDensity)?;
        Ok(Self {
            matrix,
            split,
            provenance,
        })
    }

    /// Symmetrizes and renormalizes the trace before validating, absorbing
    /// roundoff from channel evaluations.
    pub fn from_numerical(matrix: ComplexMatrix, split: DimensionSplit, provenance: Provenance) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotDensity(qmat::DensityViolation::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            }));
        }
        let defect = matrix.hermiticity_defect();
        if defect > DENSITY_TOL {
            return Err(Error::NotDensity(qmat::DensityViolation::NotHermitian { deviation: defect }));
        }
        let h = matrix.hermitian_part();
        let tr = h.trace().re;
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::NotDensity(qmat::DensityViolation::Trace { trace: tr }));
        }
        Self::new(&h * (1.0 / tr), split, provenance)
    }

    /// `I/d`.
    pub fn maximally_mixed(split: DimensionSplit, provenance: Provenance) -> Self {
        let d = split.total();
        Self {
            matrix: &ComplexMatrix::identity(d) * (1.0 / d as f64),
            split,
            provenance,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn split(&self) -> &DimensionSplit {
        &self.split
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &Self, provenance: Provenance) -> Self {
        Self {
            matrix: kron(&self.matrix, &other.matrix),
            split: self.split.join(&other.split),
            provenance,
        }
    }

    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        trace_distance(&self.matrix, &other.matrix)
    }

    pub fn entropy_bits(&self) -> Result<f64> {
        entropy_bits(&self.matrix)
    }

    /// `tr(ρ O)`.
    pub fn expectation(&self, op: &ComplexMatrix) -> Result<C64> {
        Ok(self.matrix.matmul(op)?.trace())
    }

    /// Convex combination `Σ w_i ρ_i`.
    pub fn mixture(members: &[(f64, &DensityMatrix)], provenance: Provenance) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?
            .1;
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in members {
            if rho.dim() != first.dim() {
                return Err(Error::DimensionMismatch("mixture members differ in dimension".into()));
            }
            acc = &acc + &(&rho.matrix * *w);
        }
        Self::new(acc, first.split.clone(), provenance)
    }
}

/// Pure states weighted by classical probabilities.
#[derive(Clone, Debug)]
pub struct Ensemble {
    members: Vec<(f64, PureState)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, PureState)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::InvalidState("ensemble is empty".into()));
        };
        let dim = first.dim();
        if members.iter().any(|(_, s)| s.dim() != dim) {
            return Err(Error::InvalidState("ensemble members differ in dimension".into()));
        }
        if members.iter().any(|(p, _)| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidState("ensemble weights must lie in [0, 1]".into()));
        }
        let total: f64 = members.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("ensemble weights sum to {total}")));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, PureState)] {
        &self.members
    }
}

/// Complete set of orthogonal projectors with outcome labels.
#[derive(Clone, Debug)]
pub struct MeasurementBasis {
    projectors: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl MeasurementBasis {
    const TOL: f64 = 1e-10;

    pub fn new(projectors: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        if projectors.is_empty() || projectors.len() != labels.len() {
            return Err(Error::InvalidState(format!(
                "{} projectors with {} labels",
                projectors.len(),
                labels.len()
            )));
        }
        let d = projectors[0].rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for (i, p) in projectors.iter().enumerate() {
            if !p.is_square() || p.rows() != d {
                return Err(Error::DimensionMismatch("projectors differ in dimension".into()));
            }
            if p.hermiticity_defect() > Self::TOL || (p * p).max_abs_diff(p) > Self::TOL {
                return Err(Error::InvalidState(format!("`{}` is not an orthogonal projector", labels[i])));
            }
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                if (p * q).max_abs() > Self::TOL {
                    return Err(Error::InvalidState(format!(
                        "projectors `{}` and `{}` are not orthogonal",
                        labels[i], labels[j]
                    )));
                }
            }
            sum = &sum + p;
        }
        if sum.max_abs_diff(&ComplexMatrix::identity(d)) > Self::TOL {
            return Err(Error::InvalidState("projectors do not sum to the identity".into()));
        }
        Ok(Self { projectors, labels })
    }

    /// Rank-one projectors onto orthonormal `states`.
    pub fn from_states(states: &[PureState], labels: &[&str]) -> Result<Self> {
        Self::new(
            states.iter().map(PureState::projector).collect(),
            labels.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn z() -> Self {
        Self::from_states(&[PureState::z_plus(), PureState::z_minus()], &["z+", "z-"])
            .expect("z basis is orthonormal")
    }

    pub fn x() -> Self {
        Self::from_states(&[PureState::x_plus(), PureState::x_minus()], &["x+", "x-"])
            .expect("x basis is orthonormal")
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].rows()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub label: String,
    pub probability: f64,
    /// `Π ρ Π / p`, present only when `p > PROB_TOL`.
    pub collapsed: Option<DensityMatrix>,
}

#[derive(Clone, Debug)]
pub struct Measurement {
    pub outcomes: Vec<Outcome>,
}

impl Measurement {
    pub fn probabilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.probability).collect()
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        self.outcomes.iter().find(|o| o.label == label).map(|o| o.probability)
    }
}

/// `cos(θ/2)|z+⟩ + e^{iφ} sin(θ/2)|z−⟩`.
pub fn bloch_state(theta: f64, phi: f64) -> PureState {
    let (s, c) = (theta / 2.0).sin_cos();
    PureState::qubit(C64::new(c, 0.0), C64::from_polar(s, phi))
}

/// `(|z+⟩|z−⟩ − |z−⟩|z+⟩)/√2`.
pub fn bell_singlet() -> PureState {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    PureState {
        amplitudes: vec![ZERO, s, -s, ZERO],
        split: DimensionSplit::bipartite(2, 2),
    }
}

/// `Σ P_α |ψ_α⟩⟨ψ_α|`, tagged proper.
pub fn proper_mixture(e: &Ensemble) -> DensityMatrix {
    let first = &e.members[0].1;
    let d = first.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for (p, psi) in &e.members {
        acc = &acc + &(&psi.projector() * *p);
    }
    DensityMatrix {
        matrix: acc,
        split: first.split.clone(),
        provenance: Provenance::Proper,
    }
}

/// Reduced state of factor `keep`, tagged improper.
pub fn reduce(psi: &PureState, keep: usize) -> Result<DensityMatrix> {
    let dk = psi.split.factor(keep).ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "subsystem {keep} out of range for {} factors",
            psi.split.len()
        ))
    })?;
    let matrix = partial_trace(&psi.projector(), &psi.split, keep)?;
    DensityMatrix::from_numerical(matrix, DimensionSplit::single(dk), Provenance::Improper)
}

/// Born-rule probabilities `tr(Π_k ρ)` and post-measurement states.
pub fn measure(rho: &DensityMatrix, basis: &MeasurementBasis) -> Result<Measurement> {
    if basis.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional basis on a {}-dimensional state",
            basis.dim(),
            rho.dim()
        )));
    }
    let mut outcomes = Vec::with_capacity(basis.len());
    for (proj, label) in basis.projectors.iter().zip(&basis.labels) {
        let unnormalized = &(proj * rho.matrix()) * proj;
        let probability = unnormalized.trace().re.max(0.0);
        let collapsed = if probability > PROB_TOL {
            Some(DensityMatrix::from_numerical(
                &unnormalized * (1.0 / probability),
                rho.split.clone(),
                Provenance::Proper,
            )?)
        } else {
            None
        };
        outcomes.push(Outcome {
            label: label.clone(),
            probability,
            collapsed,
        });
    }
    Ok(Measurement { outcomes })
}

/// One branch of a measurement on the first factor of a bipartite pure state.
#[derive(Clone, Debug)]
pub struct RemoteBranch {
    pub label: String,
    pub probability: f64,
    /// The first factor's post-measurement state.
    pub local: Option<PureState>,
    /// The second factor's conditional state.
    pub remote: Option<PureState>,
}

/// Every outcome of measuring factor 0 of `psi` in `basis` (rank-one
/// projectors), with the conditional pure state left on factor 1.
pub fn remote_branches(psi: &PureState, basis: &MeasurementBasis) -> Result<Vec<RemoteBranch>> {
    let factors = psi.split.factors();
    if factors.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "remote collapse needs a bipartite state, got split {factors:?}"
        )));
    }
    let (da, db) = (factors[0], factors[1]);
    if basis.dim() != da {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional basis for a {da}-dimensional factor",
            basis.dim()
        )));
    }
    let mut branches = Vec::with_capacity(basis.len());
    for (proj, label) in basis.projectors.iter().zip(&basis.labels) {
        if (proj.trace().re - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "remote collapse needs rank-one projectors; `{label}` has rank {:.0}",
                proj.trace().re
            )));
        }
        // Π = |a⟩⟨a|; take the largest column as |a⟩ (fixes the phase).
        let best = (0..da)
            .max_by(|&i, &j| proj[(i, i)].re.total_cmp(&proj[(j, j)].re))
            .unwrap_or(0);
        let col = proj.column(best);
        let a: Vec<C64> = {
            let n = norm(&col);
            col.into_iter().map(|z| z / n).collect()
        };
        // (⟨a| ⊗ I)|ψ⟩
        let remote: Vec<C64> = (0..db)
            .map(|j| (0..da).map(|i| a[i].conj() * psi.amplitudes[i * db + j]).sum())
            .collect();
        let probability = remote.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let (local, remote) = if probability > PROB_TOL {
            (
                Some(PureState::normalized(a, DimensionSplit::single(da))?),
                Some(PureState::normalized(remote, DimensionSplit::single(db))?),
            )
        } else {
            (None, None)
        };
        branches.push(RemoteBranch {
            label: label.clone(),
            probability,
            local,
            remote,
        });
    }
    Ok(branches)
}

/// Samples the first party's outcome and returns the second party's
/// conditional pure state.
pub fn remote_collapse<R: Rng + ?Sized>(
    psi: &PureState,
    alice_basis: &MeasurementBasis,
    rng: &mut R,
) -> Result<(String, PureState)> {
    let branches = remote_branches(psi, alice_basis)?;
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    let last_possible = branches
        .iter()
        .rposition(|b| b.remote.is_some())
        .ok_or_else(|| Error::InvalidState("no outcome has positive probability".into()))?;
    for (i, b) in branches.iter().enumerate() {
        acc += b.probability;
        if b.remote.is_some() && (draw < acc || i == last_possible) {
            return Ok((b.label.clone(), b.remote.clone().expect("checked")));
        }
    }
    unreachable!("last possible branch always returns")
}

/// Serializes the matrix alone, dropping split and provenance.
pub(crate) fn serialize_density_matrix<S: Serializer>(rho: &DensityMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    rho.matrix.serialize(s)
}
