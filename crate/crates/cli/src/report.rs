//! Report rendering in csv, json and table form.

use std::fmt::Write as _;

use dirbias_core::dataset::Part;
use dirbias_core::metrics::{self, EvalReport};
use serde::{Deserialize, Serialize};

use crate::config::{ReportFormat, RunConfig};
use crate::pipeline::{range_len, Summary};

/// One evaluated model and the split it was scored on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(flatten)]
    pub report: EvalReport,
    pub split: Part,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRows {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// Run context carried in json reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub securities_code: u32,
    pub master_seed: u64,
    pub rows: SplitRows,
    pub note: String,
}

pub const NOTE: &str = "All models are trained and scored on one shared chronological split.";

impl Meta {
    pub fn new(config: &RunConfig, summary: &Summary) -> Self {
        Meta {
            securities_code: summary.securities_code,
            master_seed: config.master_seed,
            rows: SplitRows {
                train: range_len(&summary.split.train),
                validation: range_len(&summary.split.validation),
                test: range_len(&summary.split.test),
            },
            note: NOTE.into(),
        }
    }
}

/// Json report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonReport {
    pub models: Vec<ReportRow>,
    #[serde(flatten)]
    pub meta: Meta,
}

pub const CSV_HEADER: &str = "model,split,accuracy,f1,tp,fp,tn,fn,loss";

pub fn render(rows: &[ReportRow], format: ReportFormat, meta: &Meta) -> String {
    match format {
        ReportFormat::Csv => render_csv(rows),
        ReportFormat::Json => crate::pipeline::to_json(&JsonReport {
            models: rows.to_vec(),
            meta: meta.clone(),
        }),
        ReportFormat::Table => render_table(rows),
    }
}

/// The metrics CSV with the split inserted after the model name.
fn render_csv(rows: &[ReportRow]) -> String {
    let reports: Vec<EvalReport> = rows.iter().map(|r| r.report.clone()).collect();
    let body = metrics::render_csv(&reports);
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (line, row) in body.lines().skip(1).zip(rows) {
        let (model, rest) = line.split_once(',').expect("csv rows have a model cell");
        let _ = writeln!(out, "{model},{},{rest}", row.split.as_str());
    }
    out
}

fn render_table(rows: &[ReportRow]) -> String {
    let reports: Vec<EvalReport> = rows.iter().map(|r| r.report.clone()).collect();
    let mut out = metrics::render_table(&reports);
    let splits: Vec<String> = rows
        .iter()
        .map(|r| format!("{} on {}", r.report.model, r.split.as_str()))
        .collect();
    let _ = writeln!(out, "\nEvaluated: {}", splits.join(", "));
    out
}
