//! `ctclab`: run CTC fixed-point solves and signaling experiments from the
//! command line or a JSON config.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctclab_core::dctc::{solve_fixed_points_with, DeutschInstance, FixedPointReport, SolverOptions};
use ctclab_core::experiments::{
    decorrelation_comparison, discriminate, emit_report, preparation_equivalence, signaling_experiment_with,
    signaling_suite, ChannelModel, FrameLabel, Protocol, Report, ReportFormat, SignalingOptions,
};
use ctclab_core::pctc::{pctc_map, pctc_operator, PctcInstance};
use ctclab_core::qmat::{ComplexMatrix, DimensionSplit};
use ctclab_core::states::DensityMatrix;
use ctclab_core::Error;
use log::info;
use serde::Serialize;

use crate::config::{AlphabetSpec, RunConfig, StateSpec, UnitarySpec};

const EXIT_INVALID: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "ctclab", version, about = "Deutsch and post-selected CTC channel experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; flags override its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json, csv or markdown
    #[arg(long, global = true)]
    format: Option<String>,
    /// Singular-value threshold for the fixed-point kernel
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Add a sampled estimate from this many protocol runs
    #[arg(long = "monte-carlo", global = true)]
    monte_carlo: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Deutsch self-consistency condition for one instance
    FixedPoint {
        /// identity, swap, cnot or brun4
        #[arg(long)]
        unitary: Option<String>,
        /// z+, z-, x+, x-, xi0..xi3
        #[arg(long)]
        input: Option<String>,
    },
    /// Score flag-basis discrimination of an alphabet through a channel
    Discriminate {
        /// four-state (custom alphabets go in the config)
        #[arg(long)]
        alphabet: Option<String>,
        /// dctc, pctc or linear
        #[arg(long)]
        model: Option<String>,
    },
    /// Run the two-frame signaling protocol under every channel model
    Signal,
    /// Compare a coin-toss mixture with the reduced singlet
    Equivalence {
        /// Show only this model's row (linear or dctc)
        #[arg(long)]
        model: Option<String>,
        /// Also report the joint-state decorrelation comparison
        #[arg(long)]
        decorrelation: bool,
    },
    /// Post-selected CTC: one channel run, or the four-state comparison by default
    Pctc {
        #[arg(long)]
        unitary: Option<String>,
        #[arg(long)]
        input: Option<String>,
    },
}

/// Failures mapped to exit codes.
enum Failure {
    Invalid(String),
    Solver(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::NoFixedPoint(_) | Error::VanishingPostSelection(_) | Error::Singular => {
                Failure::Solver(e.to_string())
            }
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

struct Settings {
    config: RunConfig,
    format: ReportFormat,
    solver: SolverOptions,
    seed: u64,
    monte_carlo: Option<usize>,
    out: Option<PathBuf>,
}

fn settings(common: Common) -> Result<Settings, Failure> {
    let config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let format: ReportFormat = common
        .format
        .as_deref()
        .or(config.format.as_deref())
        .unwrap_or("json")
        .parse()?;
    let mut solver = SolverOptions::default();
    if let Some(tol) = common.tol.or(config.tol) {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Failure::Invalid(format!("--tol must be a positive number, got {tol}")));
        }
        solver.kernel_threshold = tol;
    }
    Ok(Settings {
        format,
        solver,
        seed: common.seed.or(config.seed).unwrap_or(0),
        monte_carlo: common.monte_carlo.or(config.monte_carlo),
        out: common.out.clone().or(config.out.clone()),
        config,
    })
}

fn model(name: Option<&str>, default: ChannelModel) -> Result<ChannelModel, Failure> {
    name.map(str::parse).transpose().map_err(Failure::from).map(|m| m.unwrap_or(default))
}

fn unitary_and_input(
    s: &Settings,
    unitary: Option<String>,
    input: Option<String>,
    default_unitary: Option<&str>,
) -> Result<(ComplexMatrix, usize, DensityMatrix), Failure> {
    let input = input
        .map(StateSpec::Named)
        .or(s.config.input.clone())
        .ok_or_else(|| Failure::Invalid("no input state given (--input or config `input`)".into()))?
        .density()?;
    let spec = unitary
        .map(UnitarySpec::Named)
        .or(s.config.unitary.clone())
        .or(default_unitary.map(|n| UnitarySpec::Named(n.into())))
        .ok_or_else(|| Failure::Invalid("no unitary given (--unitary or config `unitary`)".into()))?;
    let (u, d_ctc) = spec.build(input.dim(), s.config.d_ctc)?;
    Ok((u, d_ctc, input))
}

/// Single-document output for the fixed-point and P-CTC leg commands.
fn render<T: Serialize>(value: &T, format: ReportFormat, table: &[(&str, String)]) -> Result<String, Failure> {
    Ok(match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let header: Vec<&str> = table.iter().map(|(k, _)| *k).collect();
            let row: Vec<&str> = table.iter().map(|(_, v)| v.as_str()).collect();
            format!("{}\n{}\n", header.join(","), row.join(","))
        }
        ReportFormat::Markdown => {
            let mut s = String::from("| quantity | value |\n|---|---|\n");
            for (k, v) in table {
                s.push_str(&format!("| {k} | {v} |\n"));
            }
            s
        }
    })
}

fn fixed_point(s: &Settings, unitary: Option<String>, input: Option<String>) -> Result<String, Failure> {
    let (u, d_ctc, input) = unitary_and_input(s, unitary, input, None)?;
    let inst = DeutschInstance::new(u, input, d_ctc)?;
    let report: FixedPointReport = solve_fixed_points_with(&inst, &s.solver)?;
    info!("fixed space dimension {}, residual {:.3e}", report.fixed_space_dim, report.residual);
    let table = [
        ("fixed_space_dim", report.fixed_space_dim.to_string()),
        ("residual", report.residual.to_string()),
        ("entropy_bits", report.entropy_bits.to_string()),
        ("method", format!("{:?}", report.method).to_lowercase()),
        ("selection", serde_json::to_value(report.selection).map_err(Error::from)?.as_str().unwrap_or_default().to_string()),
    ];
    render(&report, s.format, &table)
}

fn protocol(s: &Settings, alphabet: Option<String>) -> Result<Protocol, Failure> {
    let spec = alphabet
        .map(AlphabetSpec::Named)
        .or(s.config.alphabet.clone())
        .unwrap_or_else(|| AlphabetSpec::Named("four-state".into()));
    let (alphabet, flags) = spec.build()?;
    Ok(Protocol::new(alphabet, flags)?)
}

fn signaling_options(s: &Settings) -> SignalingOptions {
    SignalingOptions {
        prior_z: s.config.prior_z.unwrap_or(0.5),
        monte_carlo: s.monte_carlo,
        solver: s.solver.clone(),
    }
}

fn run(command: Command, s: &Settings) -> Result<String, Failure> {
    match command {
        Command::FixedPoint { unitary, input } => fixed_point(s, unitary, input),
        Command::Discriminate { alphabet, model: m } => {
            let protocol = protocol(s, alphabet)?;
            let m = model(m.as_deref().or(s.config.model.as_deref()), ChannelModel::Dctc)?;
            let report = discriminate(&protocol, m, &s.solver)?;
            Ok(emit_report(&[Report::Discrimination(report)], s.format)?)
        }
        Command::Signal => {
            let reports = signaling_suite(s.seed, &signaling_options(s))?;
            Ok(emit_report(&reports.into_iter().map(Report::Signaling).collect::<Vec<_>>(), s.format)?)
        }
        Command::Equivalence { model: m, decorrelation } => {
            let models = match m.as_deref().or(s.config.model.as_deref()) {
                None => vec![ChannelModel::Linear, ChannelModel::Dctc],
                Some(name) => match model(Some(name), ChannelModel::Dctc)? {
                    ChannelModel::Pctc => {
                        return Err(Failure::Invalid("the equivalence comparison has linear and dctc rows only".into()))
                    }
                    m => vec![m],
                },
            };
            let mut reports = vec![Report::Equivalence {
                models,
                report: preparation_equivalence(&s.solver)?,
            }];
            if decorrelation {
                reports.push(Report::Decorrelation(decorrelation_comparison(&s.solver)?));
            }
            Ok(emit_report(&reports, s.format)?)
        }
        Command::Pctc { unitary, input } => {
            if unitary.is_none() && input.is_none() && s.config.unitary.is_none() && s.config.input.is_none() {
                let protocol = protocol(s, None)?;
                let opts = signaling_options(s);
                let mut reports = vec![Report::Discrimination(discriminate(&protocol, ChannelModel::Pctc, &s.solver)?)];
                for frame in FrameLabel::ALL {
                    reports.push(Report::Signaling(signaling_experiment_with(
                        &protocol,
                        frame,
                        ChannelModel::Pctc,
                        s.seed,
                        &opts,
                    )?));
                }
                return Ok(emit_report(&reports, s.format)?);
            }
            let (u, d_ctc, input) = unitary_and_input(s, unitary, input, Some("brun4"))?;
            let inst = PctcInstance::new(u, DimensionSplit::bipartite(input.dim(), d_ctc))?;
            let c = pctc_operator(&inst);
            let out = pctc_map(&c, &input)?;
            let weight = c
                .matmul(input.matrix())
                .and_then(|m| m.matmul(&ctclab_core::qmat::dagger(&c)))?
                .trace()
                .re;

            #[derive(Serialize)]
            struct Leg<'a> {
                operator: &'a ComplexMatrix,
                unnormalized_weight: f64,
                output: &'a ComplexMatrix,
            }
            let table = [
                ("unnormalized_weight", weight.to_string()),
                ("output_entropy_bits", out.entropy_bits()?.to_string()),
            ];
            render(
                &Leg {
                    operator: &c,
                    unnormalized_weight: weight,
                    output: out.matrix(),
                },
                s.format,
                &table,
            )
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CTCLAB_LOG")).init();
    let cli = Cli::parse();
    let result = settings(cli.common).and_then(|s| {
        let text = run(cli.command, &s)?;
        write_output(s.out.as_ref(), &text)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (code, kind, msg) = match failure {
                Failure::Invalid(m) => (EXIT_INVALID, "invalid configuration", m),
                Failure::Solver(m) => (EXIT_SOLVER, "solver failure", m),
                Failure::Io(m) => (EXIT_IO, "i/o error", m),
            };
            eprintln!("ctclab: {kind}: {}", msg.replace('\n', " "));
            ExitCode::from(code)
        }
    }
}
