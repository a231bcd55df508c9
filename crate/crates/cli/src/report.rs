//! Simulation reports: the canonical JSON form and the table / CSV views
//! derived from it.

use serde::{Deserialize, Serialize};

use scorebounds_core::experiment::{BoundsRow, ClassRow, Rule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: String,
    pub experiment: String,
    pub settings: serde_json::Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundsRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classification: Vec<ClassRow>,
    /// Run-dependent facts kept apart so the rest is reproducible byte for
    /// byte.
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub runtime_secs: f64,
    pub threads: usize,
}

fn rule_name(rule: Rule) -> &'static str {
    match rule {
        Rule::Abstain => "abstain",
        Rule::Random => "random",
        Rule::SampleFrequency => "sample-frequency",
    }
}

fn bounds_cells(r: &BoundsRow) -> Vec<String> {
    vec![
        r.n.to_string(),
        r.reps.to_string(),
        format!("{:.3}", r.mean_lower),
        format!("{:.3}", r.mean_upper),
        format!("{:.3}", r.std_lower),
        format!("{:.3}", r.std_upper),
        format!("{:.3}", r.coverage),
        format!("{:.3}", r.g0_coverage),
        r.infeasible.to_string(),
    ]
}

const BOUNDS_HEADER: [&str; 9] =
    ["n", "reps", "mean_lower", "mean_upper", "std_lower", "std_upper", "coverage", "g0_coverage", "infeasible"];

fn class_cells(r: &ClassRow) -> Vec<String> {
    vec![
        rule_name(r.rule).to_string(),
        r.n.to_string(),
        r.reps.to_string(),
        format!("{:.3}", r.avg_pointwise),
        format!("{:.3}", r.uniform),
        r.infeasible.to_string(),
    ]
}

const CLASS_HEADER: [&str; 6] = ["rule", "n", "reps", "avg_pointwise", "uniform", "infeasible"];

fn rows(report: &SimulationReport) -> (Vec<&'static str>, Vec<Vec<String>>) {
    if report.classification.is_empty() {
        (BOUNDS_HEADER.to_vec(), report.bounds.iter().map(bounds_cells).collect())
    } else {
        (CLASS_HEADER.to_vec(), report.classification.iter().map(class_cells).collect())
    }
}

/// Right-aligned text table.
pub fn render_table(report: &SimulationReport) -> String {
    let (header, body) = rows(report);
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line =
        |cells: Vec<&str>| cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ");
    let mut out = format!("# {} {}\n", report.scenario, report.experiment);
    out.push_str(&line(header.clone()));
    out.push('\n');
    for row in &body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

pub fn render_csv(report: &SimulationReport) -> String {
    let (header, body) = rows(report);
    let mut out = header.join(",");
    out.push('\n');
    for row in body {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
