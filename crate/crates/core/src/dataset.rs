//! Candle ingestion, next-day labeling, chronological splitting and feature
//! standardization.
//!
//! Input files follow the JPX `stock_prices.csv` layout: a header row with at
//! least `Date, SecuritiesCode, Open, High, Low, Close, Volume`; any other
//! columns are ignored. Only one security is kept per dataset.

use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, FEATURE_ORDER, N_FEATURES};

/// Column indices into the feature matrix.
pub mod col {
    pub const CLOSE: usize = 0;
    pub const VOLUME: usize = 1;
    pub const OPEN: usize = 2;
    pub const HIGH: usize = 3;
    pub const LOW: usize = 4;
}

const DATE_FORMAT: &str = "%Y-%m-%d";

/// One trading day of one security.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub date: NaiveDate,
    pub securities_code: u32,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Candle {
    /// Prices and volume finite and non-negative, and the high/low bracket
    /// both open and close.
    pub fn is_well_formed(&self) -> bool {
        let vals = [self.open, self.high, self.low, self.close, self.volume];
        vals.iter().all(|v| v.is_finite() && *v >= 0.0)
            && self.low <= self.open.min(self.close)
            && self.high >= self.open.max(self.close)
    }

    /// Features in matrix order.
    pub fn features(&self) -> [f64; N_FEATURES] {
        [self.close, self.volume, self.open, self.high, self.low]
    }
}

/// Result of [`ingest_csv`]: the kept records plus what was thrown away.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Ingested {
    pub records: Vec<Candle>,
    /// Rows of other securities.
    pub filtered_out: usize,
    /// Rows with an empty, unparsable or non-finite required field.
    pub dropped_missing: usize,
    /// Rows whose high/low do not bracket open/close.
    pub rejected_malformed: usize,
    /// Later rows repeating an already seen date.
    pub duplicate_dates: usize,
}

/// Reads the candles of security `code` from a JPX-style CSV file.
pub fn ingest_csv(path: impl AsRef<Path>, code: u32) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, code)
}

/// Same as [`ingest_csv`] for any reader.
pub fn ingest_reader<R: Read>(reader: R, code: u32) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(Error::MissingColumn(name))
    };
    let i_date = find("Date")?;
    let i_code = find("SecuritiesCode")?;
    let i_open = find("Open")?;
    let i_high = find("High")?;
    let i_low = find("Low")?;
    let i_close = find("Close")?;
    let i_volume = find("Volume")?;

    let mut out = Ingested::default();
    for row in rdr.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        match field(i_code).parse::<u32>() {
            Ok(c) if c == code => {}
            Ok(_) => {
                out.filtered_out += 1;
                continue;
            }
            Err(_) => {
                out.dropped_missing += 1;
                continue;
            }
        }
        let num = |i: usize| field(i).parse::<f64>().ok().filter(|v| v.is_finite());
        let parsed = (|| {
            Some(Candle {
                date: NaiveDate::parse_from_str(field(i_date), DATE_FORMAT).ok()?,
                securities_code: code,
                open: num(i_open)?,
                high: num(i_high)?,
                low: num(i_low)?,
                close: num(i_close)?,
                volume: num(i_volume)?,
            })
        })();
        match parsed {
            None => out.dropped_missing += 1,
            Some(c) if !c.is_well_formed() => out.rejected_malformed += 1,
            Some(c) => out.records.push(c),
        }
    }

    out.records.sort_by_key(|c| c.date);
    let before = out.records.len();
    out.records.dedup_by_key(|c| c.date);
    out.duplicate_dates = before - out.records.len();

    if out.records.is_empty() {
        return Err(Error::NoRows { code });
    }
    Ok(out)
}

/// Writes records back out in the JPX column layout accepted by
/// [`ingest_reader`].
pub fn write_records_csv<W: Write>(records: &[Candle], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "Date",
        "SecuritiesCode",
        "Open",
        "High",
        "Low",
        "Close",
        "Volume",
    ])?;
    for c in records {
        w.write_record([
            c.date.format(DATE_FORMAT).to_string(),
            c.securities_code.to_string(),
            c.open.to_string(),
            c.high.to_string(),
            c.low.to_string(),
            c.close.to_string(),
            c.volume.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Contiguous, time-ordered train/validation/test row ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

/// Names one of the three split ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Train,
    Validation,
    Test,
}

impl Part {
    pub fn as_str(self) -> &'static str {
        match self {
            Part::Train => "train",
            Part::Validation => "validation",
            Part::Test => "test",
        }
    }
}

impl std::str::FromStr for Part {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Part::Train),
            "validation" | "val" => Ok(Part::Validation),
            "test" => Ok(Part::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

impl Split {
    pub fn range(&self, part: Part) -> Range<usize> {
        match part {
            Part::Train => self.train.clone(),
            Part::Validation => self.validation.clone(),
            Part::Test => self.test.clone(),
        }
    }
}

/// A single security's labeled daily rows.
///
/// `targets[i]` is 1 exactly when `next_close[i]` is strictly above the close
/// in `features[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub dates: Vec<NaiveDate>,
    /// N×5 in [`FEATURE_ORDER`].
    pub features: Array2<f64>,
    pub next_close: Vec<f64>,
    pub targets: Vec<u8>,
    pub split: Option<Split>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn split(&self) -> Result<&Split> {
        self.split.as_ref().ok_or(Error::NotSplit)
    }

    /// Features and targets of one split range.
    pub fn part(&self, part: Part) -> Result<(ArrayView2<'_, f64>, &[u8])> {
        let r = self.split()?.range(part);
        Ok((
            self.features.slice(ndarray::s![r.clone(), ..]),
            &self.targets[r],
        ))
    }

    /// Fraction of targets equal to 1.
    pub fn prevalence(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.targets.iter().filter(|&&t| t == 1).count() as f64 / self.len() as f64
    }
}

/// Labels each day by comparing the next day's close with its own.
///
/// The last record has no successor and is dropped, so the result has one row
/// fewer than the input. Equal closes label 0.
pub fn label(records: &[Candle]) -> Result<LabeledDataset> {
    if records.len() < 2 {
        return Err(Error::TooFewRecords(records.len()));
    }
    let n = records.len() - 1;
    let mut features = Array2::zeros((n, N_FEATURES));
    let mut dates = Vec::with_capacity(n);
    let mut next_close = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for (i, pair) in records.windows(2).enumerate() {
        let (today, tomorrow) = (&pair[0], &pair[1]);
        for (j, v) in today.features().into_iter().enumerate() {
            features[[i, j]] = v;
        }
        dates.push(today.date);
        next_close.push(tomorrow.close);
        targets.push(u8::from(tomorrow.close > today.close));
    }
    Ok(LabeledDataset {
        dates,
        features,
        next_close,
        targets,
        split: None,
    })
}

/// Assigns the earliest `⌊N·train_frac⌋` rows to train, the next
/// `⌊N·val_frac⌋` to validation and the rest to test.
pub fn split_chronological(
    mut ds: LabeledDataset,
    train_frac: f64,
    val_frac: f64,
) -> Result<LabeledDataset> {
    let valid = |f: f64| f.is_finite() && f > 0.0;
    if !valid(train_frac) || !valid(val_frac) || train_frac + val_frac >= 1.0 {
        return Err(Error::InvalidFractions {
            train: train_frac,
            validation: val_frac,
        });
    }
    let n = ds.len();
    let n_train = (n as f64 * train_frac).floor() as usize;
    let n_val = (n as f64 * val_frac).floor() as usize;
    let split = Split {
        train: 0..n_train,
        validation: n_train..(n_train + n_val).min(n),
        test: (n_train + n_val).min(n)..n,
    };
    for part in [Part::Train, Part::Validation, Part::Test] {
        if split.range(part).is_empty() {
            return Err(Error::EmptySplit {
                n,
                range: part.as_str(),
            });
        }
    }
    ds.split = Some(split);
    Ok(ds)
}

/// Per-column z-score parameters fitted on the training range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl Standardizer {
    pub fn identity() -> Self {
        Standardizer {
            mean: vec![0.0; N_FEATURES],
            stddev: vec![1.0; N_FEATURES],
        }
    }

    /// Population mean and standard deviation of each column of `x`.
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Empty("standardizer fit on zero rows"));
        }
        if x.ncols() != N_FEATURES {
            return Err(Error::ShapeMismatch(format!(
                "expected {N_FEATURES} columns, got {}",
                x.ncols()
            )));
        }
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(N_FEATURES);
        let mut stddev = Vec::with_capacity(N_FEATURES);
        for (j, column) in x.axis_iter(Axis(1)).enumerate() {
            let m = column.sum() / n;
            let var = column.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !sd.is_finite() {
                return Err(Error::ConstantColumn(FEATURE_ORDER[j]));
            }
            mean.push(m);
            stddev.push(sd);
        }
        Ok(Standardizer { mean, stddev })
    }

    fn check(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.mean.len() || self.mean.len() != self.stddev.len() {
            return Err(Error::ShapeMismatch(format!(
                "standardizer has {} columns, input has {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let mut out = x.to_owned();
        for (j, mut column) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.stddev[j]);
            column.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn invert(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(&z)?;
        let mut out = z.to_owned();
        for (j, mut column) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.stddev[j]);
            column.mapv_inplace(|v| v * s + m);
        }
        Ok(out)
    }
}

/// Fits a [`Standardizer`] on the training rows of a split dataset.
pub fn fit_standardizer(ds: &LabeledDataset) -> Result<Standardizer> {
    let (x, _) = ds.part(Part::Train)?;
    Standardizer::fit(x)
}

const LABELED_HEADER: [&str; 8] = [
    "Date", "Open", "High", "Low", "Close", "Volume", "Next", "Target",
];

/// Writes `Date,Open,High,Low,Close,Volume,Next,Target` rows.
pub fn write_labeled_csv<W: Write>(ds: &LabeledDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LABELED_HEADER)?;
    for i in 0..ds.len() {
        let f = ds.features.row(i);
        w.write_record([
            ds.dates[i].format(DATE_FORMAT).to_string(),
            f[col::OPEN].to_string(),
            f[col::HIGH].to_string(),
            f[col::LOW].to_string(),
            f[col::CLOSE].to_string(),
            f[col::VOLUME].to_string(),
            ds.next_close[i].to_string(),
            ds.targets[i].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Reads a file produced by [`write_labeled_csv`]. The result is unsplit.
///
/// Rows are checked against the labeling rule and date ordering.
pub fn read_labeled_csv<R: Read>(reader: R) -> Result<LabeledDataset> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(LABELED_HEADER.iter().copied()) {
        return Err(Error::Malformed(format!(
            "header `{}` is not `{}`",
            headers.iter().collect::<Vec<_>>().join(","),
            LABELED_HEADER.join(",")
        )));
    }
    let mut dates = Vec::new();
    let mut flat = Vec::new();
    let mut next_close = Vec::new();
    let mut targets = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::Malformed(format!("row {}: bad {what}", line + 1));
        let num = |i: usize, what: &str| {
            row[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(what))
        };
        let date = NaiveDate::parse_from_str(&row[0], DATE_FORMAT).map_err(|_| bad("Date"))?;
        let (open, high, low, close, volume) = (
            num(1, "Open")?,
            num(2, "High")?,
            num(3, "Low")?,
            num(4, "Close")?,
            num(5, "Volume")?,
        );
        let next = num(6, "Next")?;
        let target = match &row[7] {
            "0" => 0u8,
            "1" => 1u8,
            _ => return Err(bad("Target")),
        };
        if target != u8::from(next > close) {
            return Err(bad("Target (disagrees with Next > Close)"));
        }
        if dates.last().is_some_and(|d| *d >= date) {
            return Err(bad("Date ordering"));
        }
        dates.push(date);
        flat.extend_from_slice(&[close, volume, open, high, low]);
        next_close.push(next);
        targets.push(target);
    }
    let n = dates.len();
    if n == 0 {
        return Err(Error::Empty("labeled csv has no rows"));
    }
    let features = Array2::from_shape_vec((n, N_FEATURES), flat)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    Ok(LabeledDataset {
        dates,
        features,
        next_close,
        targets,
        split: None,
    })
}
