//! Circuit builders for the CTC discrimination protocol: SWAP, flag-controlled
//! unitaries, unitary completion, and the Brun circuit
//! `V = (Σ_j π_{u_j} ⊗ O_j) · SWAP` with `O_j |ψ_j⟩ = |u_j⟩`.

use log::debug;
use serde::Serialize;

use crate::dctc::{fixed_space_dimension, DeutschInstance, SolverOptions};
use crate::error::{Error, Result};
use crate::qmat::{inner, is_unitary, kron, unitarity_defect, ComplexMatrix, DimensionSplit, C64, ONE, ZERO};
use crate::states::{PureState, Provenance};

const ORTHO_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;

/// A finite list of normalized (possibly non-orthogonal) states of one system.
#[derive(Clone, Debug)]
pub struct Alphabet {
    states: Vec<PureState>,
}

impl Alphabet {
    pub fn new(states: Vec<PureState>) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidState("alphabet is empty".into()));
        };
        let d = first.dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch("alphabet states differ in dimension".into()));
        }
        if states.len() > d {
            return Err(Error::DimensionMismatch(format!(
                "{} alphabet states exceed the dimension {d}",
                states.len()
            )));
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn get(&self, k: usize) -> Option<&PureState> {
        self.states.get(k)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Gram matrix `G_jk = ⟨ψ_j|ψ_k⟩`.
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.len();
        ComplexMatrix::from_fn(n, n, |j, k| self.states[j].inner(&self.states[k]))
    }
}

/// An orthonormal basis `{|u_j⟩}` of the whole space.
#[derive(Clone, Debug)]
pub struct FlagBasis {
    vectors: Vec<PureState>,
}

impl FlagBasis {
    pub fn new(vectors: Vec<PureState>) -> Result<Self> {
        let d = vectors.first().map(PureState::dim).unwrap_or(0);
        if d == 0 || vectors.len() != d || vectors.iter().any(|v| v.dim() != d) {
            return Err(Error::DimensionMismatch(format!(
                "a flag basis needs exactly d vectors of dimension d (got {} of dimension {d})",
                vectors.len()
            )));
        }
        for (j, a) in vectors.iter().enumerate() {
            for (k, b) in vectors.iter().enumerate() {
                let expected = if j == k { ONE } else { ZERO };
                if (a.inner(b) - expected).norm() > ORTHO_TOL {
                    return Err(Error::InvalidState(format!("flags {j} and {k} are not orthonormal")));
                }
            }
        }
        Ok(Self { vectors })
    }

    /// The computational basis of dimension `d`.
    pub fn standard(d: usize) -> Result<Self> {
        Self::new((0..d).map(|k| PureState::basis(d, k)).collect::<Result<_>>()?)
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn projectors(&self) -> Vec<ComplexMatrix> {
        self.vectors.iter().map(PureState::projector).collect()
    }
}

/// `SWAP |a⟩|b⟩ = |b⟩|a⟩` on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, c| if r == (c % d) * d + c / d { ONE } else { ZERO })
}

/// `Σ_j π_{u_j} ⊗ O_j`: controlled on the first factor in the flag basis.
pub fn controlled_u(flags: &FlagBasis, ops: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    if ops.len() != flags.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} controlled operators for {} flags",
            ops.len(),
            flags.dim()
        )));
    }
    let target = ops[0].rows();
    for op in ops {
        if !op.is_square() || op.rows() != target {
            return Err(Error::DimensionMismatch("controlled operators differ in shape".into()));
        }
        if !is_unitary(op, UNITARY_TOL) {
            return Err(Error::NotUnitary(unitarity_defect(op)));
        }
    }
    let n = flags.dim() * target;
    let mut total = ComplexMatrix::zeros(n, n);
    for (p, op) in flags.projectors().iter().zip(ops) {
        total = &total + &kron(p, op);
    }
    Ok(total)
}

/// A unitary `O` with `O|src⟩ = |dst⟩` exactly (not just up to phase):
/// a rotation in `span{src, dst}` that is the identity on the orthogonal
/// complement.
pub fn completion_unitary(src: &PureState, dst: &PureState) -> Result<ComplexMatrix> {
    if src.dim() != dst.dim() {
        return Err(Error::DimensionMismatch(format!(
            "cannot map dimension {} onto dimension {}",
            src.dim(),
            dst.dim()
        )));
    }
    let d = src.dim();
    let s = src.amplitudes();
    let t = dst.amplitudes();
    let overlap = inner(t, s);
    if (overlap.norm() - 1.0).abs() < 1e-12 {
        let phase = overlap / overlap.norm();
        return Ok(ComplexMatrix::identity(d).scale(phase.conj()));
    }
    // w: dst with its src component removed; dst = a src + b w
    let a = inner(s, t);
    let mut w: Vec<C64> = t.iter().zip(s).map(|(tv, sv)| tv - a * sv).collect();
    let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    w.iter_mut().for_each(|z| *z /= wn);
    let b = inner(&w, t);

    let mut o = &(&ComplexMatrix::identity(d) - &ComplexMatrix::projector(s)) - &ComplexMatrix::projector(&w);
    let image_s: Vec<C64> = s.iter().zip(&w).map(|(sv, wv)| a * sv + b * wv).collect();
    let image_w: Vec<C64> = s.iter().zip(&w).map(|(sv, wv)| -b.conj() * sv + a.conj() * wv).collect();
    o = &o + &ComplexMatrix::outer(&image_s, s);
    o = &o + &ComplexMatrix::outer(&image_w, &w);
    Ok(o)
}

/// Fixes `u_j` and applies the (d−1)-point discrete Fourier transform to
/// the remaining flags, taken in index order.
pub fn flag_mixer(flags: &FlagBasis, j: usize) -> ComplexMatrix {
    let d = flags.dim();
    let others: Vec<usize> = (0..d).filter(|&k| k != j).collect();
    let m = others.len();
    let u = flags.vectors();
    let mut k = ComplexMatrix::projector(u[j].amplitudes());
    for (a, &ka) in others.iter().enumerate() {
        for (b, &kb) in others.iter().enumerate() {
            let angle = 2.0 * std::f64::consts::PI * (a * b) as f64 / m as f64;
            let coeff = C64::from_polar(1.0 / (m as f64).sqrt(), angle);
            k = &k + &ComplexMatrix::outer(u[ka].amplitudes(), u[kb].amplitudes()).scale(coeff);
        }
    }
    k
}

/// How the controlled operators `O_j` are completed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BrunConstruction {
    /// `O_j = completion_unitary(ψ_j, u_j)`.
    Canonical,
    /// `O_j = K_j · completion_unitary(ψ_j, u_j)` with `K_j = flag_mixer(flags, j)`.
    ///
    /// The canonical rotation leaves every flag outside `span{ψ_j, u_j}`
    /// untouched, which can trap the looped system in a closed set of flags
    /// and leave several fixed points. The mixer spreads the remaining flags
    /// over each other without disturbing `O_j|ψ_j⟩ = |u_j⟩`.
    FlagMixing,
}

#[derive(Clone, Debug)]
pub struct BrunCircuit {
    pub unitary: ComplexMatrix,
    pub ops: Vec<ComplexMatrix>,
    pub construction: BrunConstruction,
    /// Fixed-space dimension of the Deutsch map for each alphabet input.
    pub fixed_space_dims: Vec<usize>,
}

impl BrunCircuit {
    pub fn all_unique(&self) -> bool {
        self.fixed_space_dims.iter().all(|&k| k == 1)
    }
}

/// The total unitary `V` of the Brun circuit.
pub fn brun_circuit(alphabet: &Alphabet, flags: &FlagBasis) -> Result<ComplexMatrix> {
    brun_circuit_detailed(alphabet, flags).map(|c| c.unitary)
}

/// Builds the canonical circuit and, if some alphabet input has more than one
/// fixed point, the flag-mixing circuit; returns the first with unique fixed
/// points everywhere, otherwise whichever has fewer non-unique inputs.
pub fn brun_circuit_detailed(alphabet: &Alphabet, flags: &FlagBasis) -> Result<BrunCircuit> {
    let canonical = brun_circuit_with(alphabet, flags, BrunConstruction::Canonical)?;
    if canonical.all_unique() {
        return Ok(canonical);
    }
    let mixing = brun_circuit_with(alphabet, flags, BrunConstruction::FlagMixing)?;
    let count = |c: &BrunCircuit| c.fixed_space_dims.iter().filter(|&&k| k != 1).count();
    debug!(
        "canonical Brun completion has {} non-unique inputs; flag mixing has {}",
        count(&canonical),
        count(&mixing)
    );
    Ok(if count(&mixing) < count(&canonical) { mixing } else { canonical })
}

pub fn brun_circuit_with(
    alphabet: &Alphabet,
    flags: &FlagBasis,
    construction: BrunConstruction,
) -> Result<BrunCircuit> {
    let d = flags.dim();
    if alphabet.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "alphabet dimension {} does not match {d} flags",
            alphabet.dim()
        )));
    }
    let ops = (0..d)
        .map(|j| {
            let base = match alphabet.get(j) {
                Some(psi) => completion_unitary(psi, &flags.vectors()[j])?,
                None => ComplexMatrix::identity(d),
            };
            match construction {
                BrunConstruction::Canonical => Ok(base),
                BrunConstruction::FlagMixing => flag_mixer(flags, j).matmul(&base),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let unitary = controlled_u(flags, &ops)?.matmul(&swap_operator(d))?;

    let threshold = SolverOptions::default().kernel_threshold;
    let fixed_space_dims = alphabet
        .states()
        .iter()
        .map(|psi| {
            let inst = DeutschInstance::new(unitary.clone(), psi.to_density(Provenance::Proper), d)?;
            fixed_space_dimension(&inst, threshold)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BrunCircuit {
        unitary,
        ops,
        construction,
        fixed_space_dims,
    })
}

/// `ξ_j ⊗ |z+⟩` for `ξ = z+, z−, x+, x−`, with flags
/// `u_0 = z+z+, u_1 = z−z+, u_2 = z+z−, u_3 = z−z−`.
pub fn four_state_alphabet() -> (Alphabet, FlagBasis) {
    let zp = PureState::z_plus();
    let zm = PureState::z_minus();
    let xis = [zp.clone(), zm.clone(), PureState::x_plus(), PureState::x_minus()];
    let alphabet = Alphabet::new(xis.iter().map(|xi| xi.tensor(&zp)).collect()).expect("static alphabet");
    let flags = FlagBasis::new(vec![zp.tensor(&zp), zm.tensor(&zp), zp.tensor(&zm), zm.tensor(&zm)])
        .expect("static flag basis");
    (alphabet, flags)
}

/// Split of the joint CR ⊗ CTC space for a `d`-dimensional Brun circuit.
pub fn brun_split(d: usize) -> DimensionSplit {
    DimensionSplit::bipartite(d, d)
}
