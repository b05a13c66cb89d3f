//! Executable versions of the signaling arguments.
//!
//! Alice and Bob share a singlet. Alice encodes one bit by her choice of
//! measurement basis (`z` or `x`); Bob appends `|z+⟩` to his half, runs the
//! result through a channel model, and measures the flag basis of the
//! four-state Brun circuit. Two descriptions of Bob's input are compared:
//! in the *proper* frame Alice has already measured, so Bob holds one of
//! the pure collapsed states; in the *improper* frame he holds the reduced
//! state of the singlet. Linear channels cannot tell the two apart; the
//! Deutsch channel can.

mod report;

use std::fmt;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::circuits::{brun_circuit_detailed, brun_split, four_state_alphabet, Alphabet, BrunCircuit, BrunConstruction, FlagBasis};
use crate::dctc::{evolve_with, DeutschInstance, SolverOptions};
use crate::error::{Error, Result};
use crate::pctc::{run_pctc_signaling_leg, PctcInstance};
use crate::qmat::{kron, ComplexMatrix, DimensionSplit};
use crate::states::{
    bell_singlet, proper_mixture, reduce, remote_branches, remote_collapse, DensityMatrix, Ensemble,
    MeasurementBasis, Provenance, PureState,
};

pub use report::{emit_report, frame_inconsistency_gap, Report, ReportFormat};

/// Alice's symbols and Bob's decoded bits.
pub const SYMBOLS: [&str; 2] = ["z", "x"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameLabel {
    ProperFrame,
    ImproperFrame,
}

impl FrameLabel {
    pub const ALL: [FrameLabel; 2] = [FrameLabel::ProperFrame, FrameLabel::ImproperFrame];

    pub fn as_str(self) -> &'static str {
        match self {
            FrameLabel::ProperFrame => "proper_frame",
            FrameLabel::ImproperFrame => "improper_frame",
        }
    }
}

impl fmt::Display for FrameLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    Dctc,
    Pctc,
    Linear,
}

impl ChannelModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelModel::Dctc => "dctc",
            ChannelModel::Pctc => "pctc",
            ChannelModel::Linear => "linear",
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dctc" => Ok(ChannelModel::Dctc),
            "pctc" => Ok(ChannelModel::Pctc),
            "linear" => Ok(ChannelModel::Linear),
            other => Err(Error::InvalidState(format!("unknown channel model `{other}`"))),
        }
    }
}

/// Classical joint distribution of Alice's symbol (rows) and Bob's outcome (columns).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointTable {
    rows: Vec<String>,
    cols: Vec<String>,
    probabilities: Vec<Vec<f64>>,
}

impl JointTable {
    pub fn new(rows: Vec<String>, cols: Vec<String>, probabilities: Vec<Vec<f64>>) -> Result<Self> {
        if probabilities.len() != rows.len() || probabilities.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::DimensionMismatch(format!(
                "joint table with {} row labels and {} column labels has the wrong shape",
                rows.len(),
                cols.len()
            )));
        }
        let mut probabilities = probabilities;
        for p in probabilities.iter_mut().flatten() {
            if !p.is_finite() || *p < -1e-12 {
                return Err(Error::InvalidState(format!("joint probability {p} is negative")));
            }
            *p = p.max(0.0);
        }
        let total: f64 = probabilities.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("joint probabilities sum to {total}")));
        }
        Ok(Self { rows, cols, probabilities })
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.probabilities
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.probabilities[r][c]
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        self.probabilities.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        (0..self.cols.len())
            .map(|c| self.probabilities.iter().map(|r| r[c]).sum())
            .collect()
    }
}

/// `I(A;B)` in bits; zero-probability cells contribute nothing.
pub fn mutual_information(t: &JointTable) -> f64 {
    let pa = t.row_marginals();
    let pb = t.col_marginals();
    let mut mi = 0.0;
    for (a, row) in t.probabilities.iter().enumerate() {
        for (b, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (pa[a] * pb[b])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Bob's flag statistics for one branch of Alice's measurement.
#[derive(Clone, Debug, Serialize)]
pub struct BranchStatistics {
    /// Alice's basis and outcome, e.g. `z:z+`, or `*` when Bob's input does not depend on it.
    pub branch: String,
    pub weight: f64,
    pub flag_probabilities: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloEstimate {
    pub samples: usize,
    pub seed: u64,
    pub joint: JointTable,
    pub mutual_information_bits: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignalingReport {
    pub frame: FrameLabel,
    pub model: ChannelModel,
    pub joint: JointTable,
    pub mutual_information_bits: f64,
    /// `P(Bob decodes b | Alice chose b)`, indexed like [`SYMBOLS`].
    pub per_symbol_success: Vec<f64>,
    pub branches: Vec<BranchStatistics>,
    pub monte_carlo: Option<MonteCarloEstimate>,
    pub notes: String,
}

impl SignalingReport {
    pub fn mean_success(&self) -> f64 {
        self.per_symbol_success.iter().sum::<f64>() / self.per_symbol_success.len() as f64
    }
}

#[derive(Clone, Debug)]
pub struct SignalingOptions {
    /// Probability that Alice chooses the `z` basis.
    pub prior_z: f64,
    /// Number of sampled protocol runs to add as a seeded estimate; `None` for exact only.
    pub monte_carlo: Option<usize>,
    pub solver: SolverOptions,
}

impl Default for SignalingOptions {
    fn default() -> Self {
        Self {
            prior_z: 0.5,
            monte_carlo: None,
            solver: SolverOptions::default(),
        }
    }
}

/// The four-state alphabet, its flags, and the Brun circuit built on them.
#[derive(Clone, Debug)]
pub struct Protocol {
    pub alphabet: Alphabet,
    pub flags: FlagBasis,
    pub circuit: BrunCircuit,
}

impl Protocol {
    pub fn four_state() -> Result<Self> {
        let (alphabet, flags) = four_state_alphabet();
        Self::new(alphabet, flags)
    }

    pub fn new(alphabet: Alphabet, flags: FlagBasis) -> Result<Self> {
        let circuit = brun_circuit_detailed(&alphabet, &flags)?;
        Ok(Self { alphabet, flags, circuit })
    }

    pub fn dim(&self) -> usize {
        self.flags.dim()
    }

    /// Sends `input` through the model channel built on this circuit.
    pub fn run(&self, model: ChannelModel, input: &DensityMatrix, solver: &SolverOptions) -> Result<DensityMatrix> {
        let d = self.dim();
        match model {
            ChannelModel::Linear => Ok(input.clone()),
            ChannelModel::Dctc => {
                let inst = DeutschInstance::new(self.circuit.unitary.clone(), input.clone(), d)?;
                evolve_with(&inst, solver).map(|(out, _)| out)
            }
            ChannelModel::Pctc => {
                let inst = PctcInstance::new(self.circuit.unitary.clone(), brun_split(d))?;
                run_pctc_signaling_leg(&inst, input)
            }
        }
    }

    pub fn flag_probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.flags
            .projectors()
            .iter()
            .map(|p| Ok(rho.expectation(p)?.re.clamp(0.0, 1.0)))
            .collect()
    }
}

/// Bob's decoded bit for a flag index: flags 0 and 1 carry `ξ ∈ {z+, z−}`.
pub fn decode_flag(k: usize) -> usize {
    usize::from(k >= 2)
}

fn alice_basis(symbol: usize) -> MeasurementBasis {
    if symbol == 0 {
        MeasurementBasis::z()
    } else {
        MeasurementBasis::x()
    }
}

/// Bob's qubit joined with the `|z+⟩` rail.
fn with_rail(bob: &DensityMatrix, provenance: Provenance) -> DensityMatrix {
    bob.tensor(&PureState::z_plus().to_density(Provenance::Proper), provenance)
}

pub fn improper_bob_input() -> Result<DensityMatrix> {
    Ok(with_rail(&reduce(&bell_singlet(), 1)?, Provenance::Improper))
}

fn decoded(flag_probabilities: &[f64]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (k, p) in flag_probabilities.iter().enumerate() {
        out[decode_flag(k)] += p;
    }
    out
}

pub fn signaling_experiment(frame: FrameLabel, model: ChannelModel, rng_seed: u64) -> Result<SignalingReport> {
    signaling_experiment_with(&Protocol::four_state()?, frame, model, rng_seed, &SignalingOptions::default())
}

/// Exact Born-weight joint table, plus a seeded sampled estimate when requested.
pub fn signaling_experiment_with(
    protocol: &Protocol,
    frame: FrameLabel,
    model: ChannelModel,
    rng_seed: u64,
    opts: &SignalingOptions,
) -> Result<SignalingReport> {
    if !(0.0..=1.0).contains(&opts.prior_z) {
        return Err(Error::InvalidState(format!("prior {} is not a probability", opts.prior_z)));
    }
    let priors = [opts.prior_z, 1.0 - opts.prior_z];
    let singlet = bell_singlet();

    // branch statistics per Alice symbol: (label, conditional weight, flag distribution)
    let mut per_symbol: Vec<Vec<(String, f64, Vec<f64>)>> = Vec::with_capacity(2);
    let improper = match frame {
        FrameLabel::ImproperFrame => {
            let out = protocol.run(model, &improper_bob_input()?, &opts.solver)?;
            Some(protocol.flag_probabilities(&out)?)
        }
        FrameLabel::ProperFrame => None,
    };
    for symbol in 0..2 {
        let mut stats = Vec::new();
        match &improper {
            Some(dist) => stats.push(("*".to_string(), 1.0, dist.clone())),
            None => {
                for branch in remote_branches(&singlet, &alice_basis(symbol))? {
                    let Some(remote) = branch.remote else { continue };
                    let input = with_rail(&remote.to_density(Provenance::Proper), Provenance::Proper);
                    let out = protocol.run(model, &input, &opts.solver)?;
                    let label = format!("{}:{}", SYMBOLS[symbol], branch.label);
                    stats.push((label, branch.probability, protocol.flag_probabilities(&out)?));
                }
            }
        }
        per_symbol.push(stats);
    }

    let mut probabilities = vec![vec![0.0; 2]; 2];
    let mut branches = Vec::new();
    for (symbol, stats) in per_symbol.iter().enumerate() {
        for (label, weight, dist) in stats {
            let bits = decoded(dist);
            for (b, p) in bits.iter().enumerate() {
                probabilities[symbol][b] += priors[symbol] * weight * p;
            }
            if improper.is_none() || symbol == 0 {
                branches.push(BranchStatistics {
                    branch: label.clone(),
                    weight: if improper.is_some() { 1.0 } else { priors[symbol] * weight },
                    flag_probabilities: dist.clone(),
                });
            }
        }
    }
    let per_symbol_success = (0..2)
        .map(|symbol| {
            per_symbol[symbol]
                .iter()
                .map(|(_, w, dist)| w * decoded(dist)[symbol])
                .sum::<f64>()
        })
        .collect();
    let labels = || SYMBOLS.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let joint = JointTable::new(labels(), labels(), probabilities)?;

    let monte_carlo = match opts.monte_carlo {
        Some(samples) => Some(sample_protocol(&per_symbol, priors, &singlet, samples, rng_seed)?),
        None => None,
    };

    let notes = match (frame, model) {
        (FrameLabel::ImproperFrame, _) => {
            "Bob's input is the reduced singlet state joined with |z+>, the same for both symbols".to_string()
        }
        (FrameLabel::ProperFrame, ChannelModel::Linear) => {
            "no CTC; Bob measures the flag basis on the collapsed state directly".to_string()
        }
        (FrameLabel::ProperFrame, _) => format!(
            "Bob's input is Alice's collapsed state joined with |z+>; Brun circuit built with {} completion",
            match protocol.circuit.construction {
                BrunConstruction::Canonical => "canonical",
                BrunConstruction::FlagMixing => "flag-mixing",
            }
        ),
    };

    Ok(SignalingReport {
        frame,
        model,
        mutual_information_bits: mutual_information(&joint),
        joint,
        per_symbol_success,
        branches,
        monte_carlo,
        notes,
    })
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let draw: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if draw < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Runs the protocol `samples` times: Alice draws her basis, her outcome
/// collapses Bob's qubit, and Bob's flag outcome is drawn from the exact
/// post-channel statistics of that branch.
fn sample_protocol(
    per_symbol: &[Vec<(String, f64, Vec<f64>)>],
    priors: [f64; 2],
    singlet: &PureState,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::InvalidState("Monte Carlo mode needs at least one sample".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut counts = vec![vec![0usize; 2]; 2];
    for _ in 0..samples {
        let symbol = usize::from(rng.random::<f64>() >= priors[0]);
        let (outcome, _) = remote_collapse(singlet, &alice_basis(symbol), &mut rng)?;
        let stats = &per_symbol[symbol];
        let label = format!("{}:{}", SYMBOLS[symbol], outcome);
        let dist = stats
            .iter()
            .find(|(l, _, _)| *l == label || l == "*")
            .map(|(_, _, d)| d)
            .ok_or_else(|| Error::InvalidState(format!("branch {label} has no statistics")))?;
        let flag = sample_index(dist, &mut rng);
        counts[symbol][decode_flag(flag)] += 1;
    }
    let probabilities = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / samples as f64).collect())
        .collect();
    let labels = || SYMBOLS.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let joint = JointTable::new(labels(), labels(), probabilities)?;
    Ok(MonteCarloEstimate {
        samples,
        seed,
        mutual_information_bits: mutual_information(&joint),
        joint,
    })
}

/// The five signaling runs: both frames under the Deutsch and post-selected
/// models, and the linear control in the proper frame.
pub fn signaling_suite(rng_seed: u64, opts: &SignalingOptions) -> Result<Vec<SignalingReport>> {
    let protocol = Protocol::four_state()?;
    [
        (FrameLabel::ProperFrame, ChannelModel::Dctc),
        (FrameLabel::ImproperFrame, ChannelModel::Dctc),
        (FrameLabel::ProperFrame, ChannelModel::Pctc),
        (FrameLabel::ImproperFrame, ChannelModel::Pctc),
        (FrameLabel::ProperFrame, ChannelModel::Linear),
    ]
    .into_iter()
    .map(|(frame, model)| signaling_experiment_with(&protocol, frame, model, rng_seed, opts))
    .collect()
}

/// A coin-toss mixture of `|z+⟩, |z−⟩` against the reduced singlet.
#[derive(Clone, Debug, Serialize)]
pub struct PreparationReport {
    /// Trace distance between the two density matrices.
    pub trace_distance_linear: f64,
    /// Deutsch-channel outputs: (coin-toss ensemble, reduced singlet).
    pub dctc_outputs: (DensityMatrix, DensityMatrix),
    pub dctc_distance: f64,
}

/// The coin-toss preparation is run member by member through the Deutsch
/// channel and the outputs mixed; the reduced singlet is run as one state.
pub fn preparation_equivalence(solver: &SolverOptions) -> Result<PreparationReport> {
    let protocol = Protocol::four_state()?;
    let coin = Ensemble::new(vec![(0.5, PureState::z_plus()), (0.5, PureState::z_minus())])?;
    let improper = reduce(&bell_singlet(), 1)?;
    let trace_distance_linear = proper_mixture(&coin).trace_distance(&improper)?;

    let mut outputs = Vec::new();
    for (p, member) in coin.members() {
        let input = with_rail(&member.to_density(Provenance::Proper), Provenance::Proper);
        outputs.push((*p, protocol.run(ChannelModel::Dctc, &input, solver)?));
    }
    let members: Vec<(f64, &DensityMatrix)> = outputs.iter().map(|(p, o)| (*p, o)).collect();
    let proper_out = DensityMatrix::mixture(&members, Provenance::Proper)?;
    let improper_out = protocol.run(ChannelModel::Dctc, &improper_bob_input()?, solver)?;
    let dctc_distance = proper_out.trace_distance(&improper_out)?;
    Ok(PreparationReport {
        trace_distance_linear,
        dctc_outputs: (proper_out, improper_out),
        dctc_distance,
    })
}

/// Alice–Bob joint state after Bob's Deutsch channel, under the two frames.
#[derive(Clone, Debug, Serialize)]
pub struct DecorrelationReport {
    /// `ρ_Alice ⊗ evolve((I/2) ⊗ |z+⟩⟨z+|)`.
    pub improper_joint: DensityMatrix,
    /// `Σ_α p_α π_α ⊗ evolve(collapsed Bob input α)` over Alice's four (basis, outcome) branches.
    pub proper_joint: DensityMatrix,
    pub distance: f64,
}

pub fn decorrelation_comparison(solver: &SolverOptions) -> Result<DecorrelationReport> {
    let protocol = Protocol::four_state()?;
    let singlet = bell_singlet();
    let split = DimensionSplit::bipartite(2, protocol.dim());

    let bob = protocol.run(ChannelModel::Dctc, &improper_bob_input()?, solver)?;
    let alice = reduce(&singlet, 0)?;
    let improper_joint = DensityMatrix::from_numerical(kron(alice.matrix(), bob.matrix()), split.clone(), Provenance::Improper)?;

    let mut acc = ComplexMatrix::zeros(split.total(), split.total());
    for symbol in 0..2 {
        for branch in remote_branches(&singlet, &alice_basis(symbol))? {
            let (Some(local), Some(remote)) = (branch.local, branch.remote) else { continue };
            let input = with_rail(&remote.to_density(Provenance::Proper), Provenance::Proper);
            let out = protocol.run(ChannelModel::Dctc, &input, solver)?;
            acc = &acc + &(&kron(&local.projector(), out.matrix()) * (0.5 * branch.probability));
        }
    }
    let proper_joint = DensityMatrix::from_numerical(acc, split, Provenance::Proper)?;
    let distance = proper_joint.trace_distance(&improper_joint)?;
    Ok(DecorrelationReport {
        improper_joint,
        proper_joint,
        distance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscriminationRow {
    pub symbol: usize,
    /// Probability that the flag-basis measurement returns `u_symbol`.
    pub success: f64,
    /// Fixed-space dimension of the Deutsch map (Deutsch model only).
    pub fixed_space_dim: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscriminationReport {
    pub model: ChannelModel,
    pub construction: BrunConstruction,
    pub rows: Vec<DiscriminationRow>,
    pub mean_success: f64,
    /// Symbol pairs whose channel outputs coincide (trace distance ≤ 1e-9).
    pub indistinguishable_pairs: Vec<(usize, usize)>,
}

/// Sends each alphabet state through the model channel and scores the
/// flag-basis measurement.
pub fn discriminate(protocol: &Protocol, model: ChannelModel, solver: &SolverOptions) -> Result<DiscriminationReport> {
    let mut outputs = Vec::new();
    let mut rows = Vec::new();
    for (s, psi) in protocol.alphabet.states().iter().enumerate() {
        let input = psi.to_density(Provenance::Proper);
        let (out, dim) = match model {
            ChannelModel::Dctc => {
                let inst = DeutschInstance::new(protocol.circuit.unitary.clone(), input, protocol.dim())?;
                let (out, report) = evolve_with(&inst, solver)?;
                (out, Some(report.fixed_space_dim))
            }
            _ => (protocol.run(model, &input, solver)?, None),
        };
        let success = protocol.flag_probabilities(&out)?[s];
        rows.push(DiscriminationRow {
            symbol: s,
            success,
            fixed_space_dim: dim,
        });
        outputs.push(out);
    }
    let mut indistinguishable_pairs = Vec::new();
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            if outputs[i].trace_distance(&outputs[j])? <= 1e-9 {
                indistinguishable_pairs.push((i, j));
            }
        }
    }
    let mean_success = rows.iter().map(|r| r.success).sum::<f64>() / rows.len() as f64;
    Ok(DiscriminationReport {
        model,
        construction: protocol.circuit.construction,
        rows,
        mean_success,
        indistinguishable_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(p: [[f64; 2]; 2]) -> JointTable {
        let l = || vec!["a".to_string(), "b".to_string()];
        JointTable::new(l(), l(), p.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn mutual_information_examples() {
        assert!((mutual_information(&table([[0.5, 0.0], [0.0, 0.5]])) - 1.0).abs() < 1e-15);
        assert!(mutual_information(&table([[0.25, 0.25], [0.25, 0.25]])).abs() < 1e-15);
        // four-term oracle: 2·(3/8)·log2(3/2) + 2·(1/8)·log2(1/2)
        let oracle = 0.75 * (1.5f64).log2() - 0.25;
        let mi = mutual_information(&table([[0.375, 0.125], [0.125, 0.375]]));
        assert!((mi - oracle).abs() < 1e-15);
        assert!((mi - 0.188722).abs() < 1e-6);
    }

    #[test]
    fn joint_table_validation() {
        let l = || vec!["a".to_string(), "b".to_string()];
        assert!(JointTable::new(l(), l(), vec![vec![0.5, 0.5]]).is_err());
        assert!(JointTable::new(l(), l(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
        assert!(JointTable::new(l(), l(), vec![vec![1.5, -0.5], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn proper_frame_dctc_signals_one_bit() {
        let r = signaling_experiment(FrameLabel::ProperFrame, ChannelModel::Dctc, 0).unwrap();
        assert!((r.mutual_information_bits - 1.0).abs() < 1e-9);
        assert!(r.per_symbol_success.iter().all(|&s| s >= 1.0 - 1e-9));
        assert_eq!(r.branches.len(), 4);
    }

    #[test]
    fn improper_frame_is_a_product_for_every_model() {
        for model in [ChannelModel::Dctc, ChannelModel::Pctc, ChannelModel::Linear] {
            let r = signaling_experiment(FrameLabel::ImproperFrame, model, 0).unwrap();
            assert!(r.mutual_information_bits <= 1e-12, "{model}: {}", r.mutual_information_bits);
        }
    }

    #[test]
    fn linear_control_does_not_signal() {
        let r = signaling_experiment(FrameLabel::ProperFrame, ChannelModel::Linear, 0).unwrap();
        assert!(r.mutual_information_bits <= 1e-10);
        // every collapsed state is ξ ⊗ z+, so Bob always reads a z-flag
        assert!((r.joint.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((r.joint.get(1, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn postselected_channel_does_not_signal_perfectly() {
        let r = signaling_experiment(FrameLabel::ProperFrame, ChannelModel::Pctc, 0).unwrap();
        assert!(r.mutual_information_bits < 0.95);
    }

    #[test]
    fn exact_mode_ignores_the_seed() {
        let a = signaling_experiment(FrameLabel::ProperFrame, ChannelModel::Dctc, 1).unwrap();
        let b = signaling_experiment(FrameLabel::ProperFrame, ChannelModel::Dctc, 99).unwrap();
        assert_eq!(a.joint, b.joint);
        assert_eq!(a.per_symbol_success, b.per_symbol_success);
    }

    #[test]
    fn monte_carlo_tracks_exact_values() {
        let opts = SignalingOptions {
            monte_carlo: Some(10_000),
            ..SignalingOptions::default()
        };
        let reports = signaling_suite(7, &opts).unwrap();
        for r in &reports {
            let mc = r.monte_carlo.as_ref().unwrap();
            assert!((mc.mutual_information_bits - r.mutual_information_bits).abs() < 0.05);
        }
        let again = signaling_suite(7, &opts).unwrap();
        for (a, b) in reports.iter().zip(&again) {
            assert_eq!(a.monte_carlo.as_ref().unwrap().joint, b.monte_carlo.as_ref().unwrap().joint);
        }
    }

    #[test]
    fn preparation_examples() {
        let r = preparation_equivalence(&SolverOptions::default()).unwrap();
        assert!(r.trace_distance_linear < 1e-12);
        let (flags_mix, _) = (&r.dctc_outputs.0, ());
        let (_, flags) = four_state_alphabet();
        let expected = &(&flags.vectors()[0].projector() + &flags.vectors()[1].projector()) * 0.5;
        assert!(flags_mix.matrix().max_abs_diff(&expected) < 1e-9);
        assert!(r.dctc_distance > 0.1);
    }

    #[test]
    fn decorrelation_examples() {
        let r = decorrelation_comparison(&SolverOptions::default()).unwrap();
        let protocol = Protocol::four_state().unwrap();
        let bob = protocol
            .run(ChannelModel::Dctc, &improper_bob_input().unwrap(), &SolverOptions::default())
            .unwrap();
        let split = DimensionSplit::bipartite(2, 4);
        let marginal = crate::qmat::partial_trace(r.improper_joint.matrix(), &split, 1).unwrap();
        assert!(marginal.max_abs_diff(bob.matrix()) < 1e-12);

        // Alice's outcome projector and Bob's flag are perfectly correlated:
        // z+ ↔ u1, z− ↔ u0, x+ ↔ u3, x− ↔ u2
        let pairs = [
            (PureState::z_plus(), 1),
            (PureState::z_minus(), 0),
            (PureState::x_plus(), 3),
            (PureState::x_minus(), 2),
        ];
        for (alice, flag) in pairs {
            let proj = kron(&alice.projector(), &protocol.flags.vectors()[flag].projector());
            let p = r.proper_joint.expectation(&proj).unwrap().re;
            assert!(p > 0.25 - 1e-9, "{p}");
        }
        assert!(r.distance > 0.1);
    }

    #[test]
    fn discrimination_reports() {
        let protocol = Protocol::four_state().unwrap();
        let d = discriminate(&protocol, ChannelModel::Dctc, &SolverOptions::default()).unwrap();
        assert!(d.rows.iter().all(|r| r.success >= 1.0 - 1e-9 && r.fixed_space_dim == Some(1)));
        assert!(d.indistinguishable_pairs.is_empty());

        let p = discriminate(&protocol, ChannelModel::Pctc, &SolverOptions::default()).unwrap();
        assert!(p.mean_success <= 0.95);

        let flags = FlagBasis::standard(2).unwrap();
        let twins = Protocol::new(Alphabet::new(vec![PureState::x_plus(), PureState::x_plus()]).unwrap(), flags).unwrap();
        let t = discriminate(&twins, ChannelModel::Dctc, &SolverOptions::default()).unwrap();
        assert_eq!(t.indistinguishable_pairs, vec![(0, 1)]);
        assert!(t.rows.iter().any(|r| r.success <= 0.5 + 1e-9));
    }
}
