use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::{
    ChannelModel, DecorrelationReport, DiscriminationReport, FrameLabel, JointTable, PreparationReport,
    SignalingReport,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Report {
    Signaling(SignalingReport),
    /// The preparation comparison; `models` selects which rows are shown.
    Equivalence {
        models: Vec<ChannelModel>,
        #[serde(flatten)]
        report: PreparationReport,
    },
    Decorrelation(DecorrelationReport),
    Discrimination(DiscriminationReport),
}

/// `|MI(proper, dctc) − MI(improper, dctc)|` when both runs are present.
pub fn frame_inconsistency_gap(reports: &[Report]) -> Option<f64> {
    let mi = |frame: FrameLabel| {
        reports.iter().find_map(|r| match r {
            Report::Signaling(s) if s.frame == frame && s.model == ChannelModel::Dctc => Some(s.mutual_information_bits),
            _ => None,
        })
    };
    Some((mi(FrameLabel::ProperFrame)? - mi(FrameLabel::ImproperFrame)?).abs())
}

pub fn emit_report(reports: &[Report], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => emit_json(reports),
        ReportFormat::Csv => Ok(emit_csv(reports)),
        ReportFormat::Markdown => Ok(emit_markdown(reports)),
    }
}

fn emit_json(reports: &[Report]) -> Result<String> {
    #[derive(Serialize)]
    struct Document<'a> {
        reports: &'a [Report],
        frame_inconsistency_gap_bits: Option<f64>,
    }
    let mut out = serde_json::to_string_pretty(&Document {
        reports,
        frame_inconsistency_gap_bits: frame_inconsistency_gap(reports),
    })?;
    out.push('\n');
    Ok(out)
}

struct Row {
    experiment: &'static str,
    frame: String,
    model: String,
    mutual_information: Option<f64>,
    mc_mutual_information: Option<f64>,
    mean_success: Option<f64>,
    distance: Option<f64>,
}

fn rows(reports: &[Report]) -> Vec<Row> {
    let mut out = Vec::new();
    for r in reports {
        match r {
            Report::Signaling(s) => out.push(Row {
                experiment: "signaling",
                frame: s.frame.to_string(),
                model: s.model.to_string(),
                mutual_information: Some(s.mutual_information_bits),
                mc_mutual_information: s.monte_carlo.as_ref().map(|m| m.mutual_information_bits),
                mean_success: Some(s.mean_success()),
                distance: None,
            }),
            Report::Equivalence { models, report } => {
                for model in models {
                    let distance = match model {
                        ChannelModel::Linear => report.trace_distance_linear,
                        _ => report.dctc_distance,
                    };
                    out.push(Row {
                        experiment: "equivalence",
                        frame: String::new(),
                        model: model.to_string(),
                        mutual_information: None,
                        mc_mutual_information: None,
                        mean_success: None,
                        distance: Some(distance),
                    });
                }
            }
            Report::Decorrelation(d) => out.push(Row {
                experiment: "decorrelation",
                frame: String::new(),
                model: ChannelModel::Dctc.to_string(),
                mutual_information: None,
                mc_mutual_information: None,
                mean_success: None,
                distance: Some(d.distance),
            }),
            Report::Discrimination(d) => out.push(Row {
                experiment: "discrimination",
                frame: String::new(),
                model: d.model.to_string(),
                mutual_information: None,
                mc_mutual_information: None,
                mean_success: Some(d.mean_success),
                distance: None,
            }),
        }
    }
    out
}

fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn emit_csv(reports: &[Report]) -> String {
    let mut out =
        String::from("experiment,frame,model,mutual_information_bits,mc_mutual_information_bits,mean_success,distance\n");
    for r in rows(reports) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.experiment,
            r.frame,
            r.model,
            num(r.mutual_information),
            num(r.mc_mutual_information),
            num(r.mean_success),
            num(r.distance)
        );
    }
    out
}

fn fixed(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

fn joint_markdown(out: &mut String, t: &JointTable) {
    let _ = writeln!(out, "| Alice \\ Bob | {} |", t.cols().join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(t.cols().len()));
    for (label, row) in t.rows().iter().zip(t.probabilities()) {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.6}")).collect();
        let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
    }
}

fn emit_markdown(reports: &[Report]) -> String {
    let mut out = String::from("# ctclab report\n\n");
    out.push_str("| experiment | frame | model | MI (bits) | MI sampled | mean success | distance |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for r in rows(reports) {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            r.experiment,
            if r.frame.is_empty() { "-" } else { &r.frame },
            r.model,
            fixed(r.mutual_information),
            fixed(r.mc_mutual_information),
            fixed(r.mean_success),
            fixed(r.distance)
        );
    }
    if let Some(gap) = frame_inconsistency_gap(reports) {
        let _ = writeln!(out, "\nFrame-inconsistency gap (dctc, proper vs improper): **{gap:.6} bits**");
    }

    for r in reports {
        match r {
            Report::Signaling(s) => {
                let _ = writeln!(out, "\n## Joint table: {} / {}\n", s.frame, s.model);
                joint_markdown(&mut out, &s.joint);
                if let Some(mc) = &s.monte_carlo {
                    let _ = writeln!(out, "\nSampled ({} runs, seed {}):\n", mc.samples, mc.seed);
                    joint_markdown(&mut out, &mc.joint);
                }
                let _ = writeln!(out, "\n{}", s.notes);
            }
            Report::Discrimination(d) => {
                let _ = writeln!(out, "\n## Discrimination: {}\n", d.model);
                out.push_str("| symbol | success | fixed-space dim |\n|---|---|---|\n");
                for row in &d.rows {
                    let dim = row.fixed_space_dim.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
                    let _ = writeln!(out, "| {} | {:.6} | {dim} |", row.symbol, row.success);
                }
                for (i, j) in &d.indistinguishable_pairs {
                    let _ = writeln!(out, "\nSymbols {i} and {j} produce identical outputs.");
                }
            }
            Report::Equivalence { .. } | Report::Decorrelation(_) => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{signaling_experiment, signaling_suite, SignalingOptions};

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!(matches!("xml".parse::<ReportFormat>(), Err(Error::UnsupportedFormat(f)) if f == "xml"));
    }

    #[test]
    fn empty_documents_are_valid() {
        let csv = emit_report(&[], ReportFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 1);
        let json: serde_json::Value = serde_json::from_str(&emit_report(&[], ReportFormat::Json).unwrap()).unwrap();
        assert_eq!(json["reports"].as_array().unwrap().len(), 0);
        assert!(json["frame_inconsistency_gap_bits"].is_null());
        assert!(emit_report(&[], ReportFormat::Markdown).unwrap().contains("| experiment |"));
    }

    #[test]
    fn one_signaling_report_is_one_csv_row() {
        let r = signaling_experiment(FrameLabel::ProperFrame, ChannelModel::Dctc, 0).unwrap();
        let csv = emit_report(&[Report::Signaling(r)], ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(&fields[..3], &["signaling", "proper_frame", "dctc"]);
        assert!((fields[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn suite_document_carries_the_four_values_and_the_gap() {
        let reports: Vec<Report> = signaling_suite(0, &SignalingOptions::default())
            .unwrap()
            .into_iter()
            .map(Report::Signaling)
            .collect();
        let json: serde_json::Value = serde_json::from_str(&emit_report(&reports, ReportFormat::Json).unwrap()).unwrap();
        let entries = json["reports"].as_array().unwrap();
        for (frame, model) in [
            ("proper_frame", "dctc"),
            ("improper_frame", "dctc"),
            ("proper_frame", "pctc"),
            ("improper_frame", "pctc"),
        ] {
            assert!(entries.iter().any(|e| e["frame"] == frame && e["model"] == model && e["mutual_information_bits"].is_number()));
        }
        assert!(json["frame_inconsistency_gap_bits"].as_f64().unwrap() > 0.9);
        let md = emit_report(&reports, ReportFormat::Markdown).unwrap();
        assert!(md.contains("Frame-inconsistency gap"));
        assert_eq!(emit_report(&reports, ReportFormat::Csv).unwrap().lines().count(), 6);
    }
}
