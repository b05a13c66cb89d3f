use std::path::PathBuf;

use ctclab_core::circuits::{brun_circuit, controlled_u, four_state_alphabet, swap_operator, Alphabet, FlagBasis};
use ctclab_core::qmat::{ComplexMatrix, DimensionSplit, VectorJson, C64};
use ctclab_core::states::{DensityMatrix, Provenance, PureState};
use ctclab_core::{Error, Result};
use serde::Deserialize;

/// Everything a run can be configured with. Command-line flags override
/// the corresponding keys.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub unitary: Option<UnitarySpec>,
    pub input: Option<StateSpec>,
    /// CTC dimension for explicit unitaries; inferred from the input otherwise.
    pub d_ctc: Option<usize>,
    pub alphabet: Option<AlphabetSpec>,
    pub model: Option<String>,
    pub prior_z: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub monte_carlo: Option<usize>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidState(format!("cannot read config {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum UnitarySpec {
    Named(String),
    Matrix(ComplexMatrix),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Vector(VectorJson),
    Density(ComplexMatrix),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AlphabetSpec {
    Named(String),
    Custom(CustomAlphabet),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomAlphabet {
    pub states: Vec<StateSpec>,
    /// Defaults to the computational basis.
    pub flags: Option<Vec<StateSpec>>,
}

fn named_state(name: &str) -> Result<PureState> {
    let zp = PureState::z_plus();
    let xi = |k: usize| -> PureState {
        let q = [PureState::z_plus(), PureState::z_minus(), PureState::x_plus(), PureState::x_minus()];
        q[k].tensor(&zp)
    };
    Ok(match name {
        "z+" => PureState::z_plus(),
        "z-" => PureState::z_minus(),
        "x+" => PureState::x_plus(),
        "x-" => PureState::x_minus(),
        "xi0" => xi(0),
        "xi1" => xi(1),
        "xi2" => xi(2),
        "xi3" => xi(3),
        other => {
            return Err(Error::InvalidState(format!(
                "unknown state `{other}` (expected z+, z-, x+, x-, xi0..xi3, or an amplitude object)"
            )))
        }
    })
}

impl StateSpec {
    pub fn pure(&self) -> Result<PureState> {
        match self {
            StateSpec::Named(name) => named_state(name),
            StateSpec::Vector(v) => {
                let amps: Vec<C64> = v.clone().try_into()?;
                let d = amps.len();
                PureState::new(amps, DimensionSplit::single(d))
            }
            StateSpec::Density(_) => Err(Error::InvalidState("expected a pure state, got a matrix".into())),
        }
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        match self {
            StateSpec::Density(m) => {
                let d = m.rows();
                DensityMatrix::new(m.clone(), DimensionSplit::single(d), Provenance::Unspecified)
            }
            _ => Ok(self.pure()?.to_density(Provenance::Proper)),
        }
    }
}

impl UnitarySpec {
    /// The interaction on `C^d_cr ⊗ C^d_ctc` and its CTC dimension.
    pub fn build(&self, d_cr: usize, d_ctc: Option<usize>) -> Result<(ComplexMatrix, usize)> {
        let named_dim = |name: &str, required: Option<usize>| -> Result<usize> {
            let d = required.unwrap_or(d_cr);
            if d != d_cr || d_ctc.is_some_and(|t| t != d) {
                return Err(Error::DimensionMismatch(format!(
                    "builtin `{name}` needs d_cr = d_ctc = {d}, input has dimension {d_cr}"
                )));
            }
            Ok(d)
        };
        match self {
            UnitarySpec::Named(name) => match name.as_str() {
                "identity" => {
                    let t = d_ctc.unwrap_or(d_cr);
                    Ok((ComplexMatrix::identity(d_cr * t), t))
                }
                "swap" => {
                    let d = named_dim("swap", None)?;
                    Ok((swap_operator(d), d))
                }
                "cnot" => {
                    named_dim("cnot", Some(2))?;
                    let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])?;
                    Ok((controlled_u(&FlagBasis::standard(2)?, &[ComplexMatrix::identity(2), x])?, 2))
                }
                "brun4" => {
                    named_dim("brun4", Some(4))?;
                    let (alphabet, flags) = four_state_alphabet();
                    Ok((brun_circuit(&alphabet, &flags)?, 4))
                }
                other => Err(Error::InvalidState(format!(
                    "unknown unitary `{other}` (expected identity, swap, cnot, brun4, or a matrix object)"
                ))),
            },
            UnitarySpec::Matrix(m) => {
                let t = match d_ctc {
                    Some(t) => t,
                    None if d_cr > 0 && m.rows() % d_cr == 0 => m.rows() / d_cr,
                    None => {
                        return Err(Error::DimensionMismatch(format!(
                            "a {}x{} unitary does not factor over a {d_cr}-dimensional input",
                            m.rows(),
                            m.cols()
                        )))
                    }
                };
                Ok((m.clone(), t))
            }
        }
    }
}

impl AlphabetSpec {
    pub fn build(&self) -> Result<(Alphabet, FlagBasis)> {
        match self {
            AlphabetSpec::Named(name) if name == "four-state" => Ok(four_state_alphabet()),
            AlphabetSpec::Named(other) => Err(Error::InvalidState(format!(
                "unknown alphabet `{other}` (expected four-state or an object with `states`)"
            ))),
            AlphabetSpec::Custom(custom) => {
                let states = custom.states.iter().map(StateSpec::pure).collect::<Result<Vec<_>>>()?;
                let alphabet = Alphabet::new(states)?;
                let flags = match &custom.flags {
                    Some(f) => FlagBasis::new(f.iter().map(StateSpec::pure).collect::<Result<Vec<_>>>()?)?,
                    None => FlagBasis::standard(alphabet.dim())?,
                };
                Ok((alphabet, flags))
            }
        }
    }
}
