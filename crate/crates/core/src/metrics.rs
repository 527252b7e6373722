//! Confusion counts, accuracy and F1 for binary predictions, plus the
//! comparison report in CSV, JSON-ready and text-table form.

use std::fmt::Write as _;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    #[serde(rename = "tp")]
    pub true_pos: usize,
    #[serde(rename = "fp")]
    pub false_pos: usize,
    #[serde(rename = "tn")]
    pub true_neg: usize,
    #[serde(rename = "fn")]
    pub false_neg: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: Self) -> Self {
        ConfusionMatrix {
            true_pos: self.true_pos + o.true_pos,
            false_pos: self.false_pos + o.false_pos,
            true_neg: self.true_neg + o.true_neg,
            false_neg: self.false_neg + o.false_neg,
        }
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Empty("confusion matrix of zero samples"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == 1, p == 1) {
            (true, true) => cm.true_pos += 1,
            (false, true) => cm.false_pos += 1,
            (false, false) => cm.true_neg += 1,
            (true, false) => cm.false_neg += 1,
        }
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::Empty("accuracy of zero samples")),
        n => Ok((cm.true_pos + cm.true_neg) as f64 / n as f64),
    }
}

/// Binary F1 of the positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1 {
    pub value: f64,
    /// Set when `2tp + fp + fn = 0`, i.e. no positives predicted or present.
    pub degenerate: bool,
}

pub fn f1(cm: &ConfusionMatrix) -> F1 {
    let denom = 2 * cm.true_pos + cm.false_pos + cm.false_neg;
    if denom == 0 {
        F1 {
            value: 0.0,
            degenerate: true,
        }
    } else {
        F1 {
            value: (2 * cm.true_pos) as f64 / denom as f64,
            degenerate: false,
        }
    }
}

/// One row of a comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub accuracy: f64,
    pub f1: f64,
    #[serde(flatten)]
    pub confusion: ConfusionMatrix,
    /// Cross-entropy on the evaluated rows, for probabilistic models.
    pub loss: Option<f64>,
}

impl EvalReport {
    pub fn new(
        model: impl Into<String>,
        y_true: &[u8],
        y_pred: &[u8],
        loss: Option<f64>,
    ) -> Result<Self> {
        let cm = confusion(y_true, y_pred)?;
        Ok(EvalReport {
            model: model.into(),
            accuracy: accuracy(&cm)?,
            f1: f1(&cm).value,
            confusion: cm,
            loss,
        })
    }
}

/// Rounds half away from zero at two decimals, nudging values that sit a
/// rounding error below an exact half.
pub fn round2(x: f64) -> f64 {
    ((x * 100.0) + 0.5 + 1e-9).floor() / 100.0
}

pub const CSV_HEADER: &str = "model,accuracy,f1,tp,fp,tn,fn,loss";

/// `model,accuracy,f1,tp,fp,tn,fn,loss` with full-precision numbers and an
/// empty loss cell when there is none.
pub fn render_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let c = &r.confusion;
        let loss = r.loss.map(|l| l.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.model, r.accuracy, r.f1, c.true_pos, c.false_pos, c.true_neg, c.false_neg, loss
        );
    }
    out
}

/// Aligned text table: Model, Accuracy, F1 Score, then the confusion counts
/// and loss. Scores are rounded half-up to two decimals.
pub fn render_table(reports: &[EvalReport]) -> String {
    let header = [
        "Model", "Accuracy", "F1 Score", "TP", "FP", "TN", "FN", "Loss",
    ];
    let rows: Vec<[String; 8]> = reports
        .iter()
        .map(|r| {
            let c = &r.confusion;
            [
                r.model.clone(),
                format!("{:.2}", round2(r.accuracy)),
                format!("{:.2}", round2(r.f1)),
                c.true_pos.to_string(),
                c.false_pos.to_string(),
                c.true_neg.to_string(),
                c.false_neg.to_string(),
                r.loss
                    .map(|l| format!("{l:.4}"))
                    .unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "  {cell:>w$}");
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(&header);
    let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        out.push_str(&line(&cells));
    }
    out
}
