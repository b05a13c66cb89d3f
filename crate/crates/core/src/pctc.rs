//! Post-selected CTCs. The looped system is traced out of the interaction
//! itself, `C = tr_ctc(U)`, and the CR state transforms as
//! `ρ ↦ C ρ C† / tr(C ρ C†)`.

use crate::error::{Error, Result};
use crate::qmat::{dagger, is_unitary, unitarity_defect, ComplexMatrix, DimensionSplit, C64, ZERO};
use crate::states::{DensityMatrix, Provenance};

/// Post-selection probabilities at or below this are treated as zero.
pub const TAU_POST: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct PctcInstance {
    unitary: ComplexMatrix,
    split: DimensionSplit,
}

impl PctcInstance {
    pub fn new(unitary: ComplexMatrix, split: DimensionSplit) -> Result<Self> {
        if split.len() != 2 {
            return Err(Error::DimensionMismatch("a P-CTC interaction needs a CR ⊗ CTC split".into()));
        }
        if !unitary.is_square() || unitary.rows() != split.total() {
            return Err(Error::DimensionMismatch(format!(
                "interaction is {}x{} but the split has total dimension {}",
                unitary.rows(),
                unitary.cols(),
                split.total()
            )));
        }
        if !is_unitary(&unitary, 1e-10) {
            return Err(Error::NotUnitary(unitarity_defect(&unitary)));
        }
        Ok(Self { unitary, split })
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn split(&self) -> &DimensionSplit {
        &self.split
    }
}

/// `C_ab = Σ_k ⟨a,k|U|b,k⟩`.
pub fn pctc_operator(inst: &PctcInstance) -> ComplexMatrix {
    let (d, t) = (inst.split.factors()[0], inst.split.factors()[1]);
    ComplexMatrix::from_fn(d, d, |a, b| {
        (0..t).fold(ZERO, |acc, k| acc + inst.unitary[(a * t + k, b * t + k)])
    })
}

/// `C ρ C† / tr(C ρ C†)`.
pub fn pctc_map(c: &ComplexMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if !c.is_square() || c.rows() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but the state has dimension {}",
            c.rows(),
            c.cols(),
            rho.dim()
        )));
    }
    let out = c.matmul(rho.matrix())?.matmul(&dagger(c))?;
    let p = out.trace().re;
    if p <= TAU_POST {
        return Err(Error::VanishingPostSelection(p));
    }
    DensityMatrix::from_numerical(out.scale(C64::new(1.0 / p, 0.0)), rho.split().clone(), Provenance::Unspecified)
}

pub fn run_pctc_signaling_leg(inst: &PctcInstance, input: &DensityMatrix) -> Result<DensityMatrix> {
    pctc_map(&pctc_operator(inst), input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{brun_circuit, brun_split, controlled_u, four_state_alphabet, swap_operator, FlagBasis};
    use crate::qmat::kron;
    use crate::states::PureState;

    fn cnot() -> ComplexMatrix {
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        controlled_u(&FlagBasis::standard(2).unwrap(), &[ComplexMatrix::identity(2), x]).unwrap()
    }

    #[test]
    fn operator_examples() {
        let split = DimensionSplit::bipartite(2, 3);
        let inst = PctcInstance::new(ComplexMatrix::identity(6), split).unwrap();
        assert!(pctc_operator(&inst).max_abs_diff(&(&ComplexMatrix::identity(2) * 3.0)) < 1e-15);

        for d in 2..=4 {
            let inst = PctcInstance::new(swap_operator(d), DimensionSplit::bipartite(d, d)).unwrap();
            assert!(pctc_operator(&inst).max_abs_diff(&ComplexMatrix::identity(d)) < 1e-15);
        }

        let inst = PctcInstance::new(cnot(), DimensionSplit::bipartite(2, 2)).unwrap();
        assert!(pctc_operator(&inst).max_abs_diff(&ComplexMatrix::diag_real(&[2.0, 0.0])) < 1e-15);
    }

    #[test]
    fn operator_matches_blockwise_trace() {
        // C = Σ_j π_j tr(O_j) for a controlled unitary
        let (alphabet, flags) = four_state_alphabet();
        let v = brun_circuit(&alphabet, &flags).unwrap();
        let inst = PctcInstance::new(v.clone(), brun_split(4)).unwrap();
        let c = pctc_operator(&inst);
        // oracle: contract with an explicit CTC identity, tr_ctc(U) = Σ_k (I ⊗ ⟨k|) U (I ⊗ |k⟩)
        let mut oracle = ComplexMatrix::zeros(4, 4);
        for k in 0..4 {
            let ket = ComplexMatrix::from_fn(4, 1, |r, _| PureState::basis(4, k).unwrap().amplitudes()[r]);
            let lift = kron(&ComplexMatrix::identity(4), &ket);
            oracle = &oracle + &dagger(&lift).matmul(&v).unwrap().matmul(&lift).unwrap();
        }
        assert!(c.max_abs_diff(&oracle) < 1e-14);
    }

    #[test]
    fn map_examples() {
        let mixed = DensityMatrix::maximally_mixed(DimensionSplit::single(2), Provenance::Proper);
        let out = pctc_map(&ComplexMatrix::identity(2), &mixed).unwrap();
        assert!(out.matrix().max_abs_diff(mixed.matrix()) < 1e-15);

        let c = ComplexMatrix::diag_real(&[2.0, 0.0]);
        let out = pctc_map(&c, &mixed).unwrap();
        assert!(out.matrix().max_abs_diff(&PureState::z_plus().projector()) < 1e-15);

        let zm = PureState::z_minus().to_density(Provenance::Proper);
        assert!(matches!(pctc_map(&c, &zm), Err(Error::VanishingPostSelection(_))));
    }

    #[test]
    fn map_is_scale_invariant() {
        let c = ComplexMatrix::new(
            2,
            2,
            vec![C64::new(1.0, 0.5), C64::new(0.3, 0.0), C64::new(-0.2, 0.1), C64::new(0.7, -0.4)],
        )
        .unwrap();
        let rho = PureState::x_plus().to_density(Provenance::Proper);
        let base = pctc_map(&c, &rho).unwrap();
        for lambda in [C64::new(3.0, 0.0), C64::new(0.0, -2.0), C64::new(1e-3, 1e-3)] {
            let scaled = pctc_map(&c.scale(lambda), &rho).unwrap();
            assert!(scaled.matrix().max_abs_diff(base.matrix()) < 1e-12);
        }
    }

    #[test]
    fn signaling_leg_examples() {
        let rho = PureState::x_minus().to_density(Provenance::Proper);
        for u in [ComplexMatrix::identity(4), swap_operator(2)] {
            let inst = PctcInstance::new(u, DimensionSplit::bipartite(2, 2)).unwrap();
            let out = run_pctc_signaling_leg(&inst, &rho).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        }
    }

    #[test]
    fn brun_circuit_does_not_discriminate_under_postselection() {
        let (alphabet, flags) = four_state_alphabet();
        let inst = PctcInstance::new(brun_circuit(&alphabet, &flags).unwrap(), brun_split(4)).unwrap();
        let out0 = run_pctc_signaling_leg(&inst, &alphabet.states()[0].to_density(Provenance::Proper)).unwrap();
        let out2 = run_pctc_signaling_leg(&inst, &alphabet.states()[2].to_density(Provenance::Proper)).unwrap();
        let overlap = out0.matrix().hs_inner(out2.matrix()).re;
        assert!(overlap > 1e-3, "outputs are orthogonal: {overlap}");
        let success: f64 = alphabet
            .states()
            .iter()
            .enumerate()
            .map(|(s, psi)| {
                let out = run_pctc_signaling_leg(&inst, &psi.to_density(Provenance::Proper)).unwrap();
                out.expectation(&flags.vectors()[s].projector()).unwrap().re
            })
            .sum::<f64>()
            / 4.0;
        assert!(success <= 0.95);
    }

    #[test]
    fn instance_validation() {
        assert!(PctcInstance::new(ComplexMatrix::identity(4), DimensionSplit::single(4)).is_err());
        assert!(PctcInstance::new(ComplexMatrix::identity(4), DimensionSplit::bipartite(2, 3)).is_err());
        assert!(PctcInstance::new(&ComplexMatrix::identity(4) * 2.0, DimensionSplit::bipartite(2, 2)).is_err());
    }
}
