//! The four commands: prepare, train, evaluate and compare.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use dirbias_core::dataset::{self, LabeledDataset, Part, Split};
use dirbias_core::logistic;
use dirbias_core::math::binary_cross_entropy;
use dirbias_core::metrics::EvalReport;
use dirbias_core::neural::{self, TrainConfig};
use dirbias_core::seed::{self, stream};
use dirbias_core::trees::{self, TreeModel};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SplitFractions};
use crate::error::{io_err, CliError, CliResult};
use crate::model::{feature_order, DtFile, FnnFile, LrFile, ModelFile, ModelKind, RfFile};
use crate::report::{self, ReportRow};

pub const LABELED_FILE: &str = "labeled.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// What `prepare` kept and dropped, written next to the labeled CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub securities_code: u32,
    pub source: String,
    pub records: usize,
    pub rows: usize,
    pub filtered_out: usize,
    pub dropped_missing: usize,
    pub rejected_malformed: usize,
    pub duplicate_dates: usize,
    /// The last record, which has no next close to label against.
    pub dropped_no_successor: usize,
    pub positives: usize,
    pub negatives: usize,
    pub prevalence: f64,
    pub first_date: String,
    pub last_date: String,
    pub fractions: SplitFractions,
    pub split: Split,
    pub feature_order: Vec<String>,
}

/// Seeds handed to the stochastic learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedSeeds {
    pub forest: u64,
    pub network_init: u64,
    pub network_shuffle: u64,
}

impl DerivedSeeds {
    pub fn from_master(master: u64) -> Self {
        let net = seed::mix(master, stream::NETWORK);
        DerivedSeeds {
            forest: seed::mix(master, stream::FOREST),
            network_init: seed::mix(net, 0),
            network_shuffle: seed::mix(net, 1),
        }
    }
}

/// Ingests, labels and splits a raw price CSV.
pub fn prepare(config: &RunConfig, raw: &Path) -> CliResult<(LabeledDataset, Summary)> {
    let ing = dataset::ingest_csv(raw, config.securities_code)
        .map_err(|e| CliError::from(e).context(raw.display()))?;
    let records = ing.records.len();
    let labeled = dataset::label(&ing.records)?;
    let ds = dataset::split_chronological(labeled, config.split.train, config.split.validation)?;
    let positives = ds.targets.iter().filter(|&&t| t == 1).count();
    let summary = Summary {
        securities_code: config.securities_code,
        source: raw
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        records,
        rows: ds.len(),
        filtered_out: ing.filtered_out,
        dropped_missing: ing.dropped_missing,
        rejected_malformed: ing.rejected_malformed,
        duplicate_dates: ing.duplicate_dates,
        dropped_no_successor: records - ds.len(),
        positives,
        negatives: ds.len() - positives,
        prevalence: ds.prevalence(),
        first_date: ds.dates[0].to_string(),
        last_date: ds.dates[ds.len() - 1].to_string(),
        fractions: config.split,
        split: ds.split()?.clone(),
        feature_order: feature_order(),
    };
    Ok((ds, summary))
}

/// Writes `labeled.csv` and `summary.json` into `config.out_dir`.
pub fn cmd_prepare(config: &RunConfig) -> CliResult<Summary> {
    let raw = config.raw_data_path()?;
    let (ds, summary) = prepare(config, &raw)?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut csv = Vec::new();
    dataset::write_labeled_csv(&ds, &mut csv)?;
    write_file(&dir.join(LABELED_FILE), &csv)?;
    write_file(&dir.join(SUMMARY_FILE), to_json(&summary).as_bytes())?;
    Ok(summary)
}

/// Loads a directory written by [`cmd_prepare`], restoring its split.
pub fn load_prepared(dir: &Path) -> CliResult<(LabeledDataset, Summary)> {
    let summary_path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&summary_path).map_err(|e| io_err(&summary_path, e))?;
    let summary: Summary = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", summary_path.display())))?;
    let labeled_path = dir.join(LABELED_FILE);
    let file = fs::File::open(&labeled_path).map_err(|e| io_err(&labeled_path, e))?;
    let mut ds = dataset::read_labeled_csv(file)
        .map_err(|e| CliError::from(e).context(labeled_path.display()))?;
    let s = &summary.split;
    let contiguous =
        s.train.start == 0 && s.train.end == s.validation.start && s.validation.end == s.test.start;
    if ds.len() != summary.rows || !contiguous || s.test.end != ds.len() {
        return Err(CliError::Data(format!(
            "{} disagrees with {} ({} rows)",
            summary_path.display(),
            labeled_path.display(),
            ds.len()
        )));
    }
    if summary.feature_order != feature_order() {
        return Err(CliError::Data(format!(
            "{}: unexpected feature order",
            summary_path.display()
        )));
    }
    for part in [Part::Train, Part::Validation, Part::Test] {
        if s.range(part).is_empty() {
            return Err(CliError::Data(format!("{} split is empty", part.as_str())));
        }
    }
    ds.split = Some(summary.split.clone());
    Ok((ds, summary))
}

/// A prepared directory keeps its recorded split; a raw CSV is prepared in
/// memory with the configured one.
pub fn load_dataset(config: &RunConfig) -> CliResult<(LabeledDataset, Summary)> {
    let path = match &config.data_path {
        Some(p) => p.clone(),
        None if std::env::var_os(crate::config::DATA_DIR_ENV).is_some() => {
            config.raw_data_path()?
        }
        None => config.out_dir.clone(),
    };
    if path.is_dir() {
        load_prepared(&path)
    } else {
        prepare(config, &path)
    }
}

/// A trained model plus its per-epoch history as CSV, where it has one.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub file: ModelFile,
    pub history: Option<(String, String)>,
}

/// Trains `kind` on the training range of `ds`.
pub fn train_model(kind: ModelKind, ds: &LabeledDataset, config: &RunConfig) -> CliResult<Trained> {
    let (x, y) = ds.part(Part::Train)?;
    let seeds = DerivedSeeds::from_master(config.master_seed);
    let order = feature_order();
    let ctx =
        |e: dirbias_core::Error| CliError::from(e).context(format!("training {}", kind.as_str()));
    Ok(match kind {
        ModelKind::Lr => {
            let standardizer = dataset::fit_standardizer(ds)?;
            let z = standardizer.apply(x)?;
            let model = logistic::train(z.view(), y, config.logistic.alpha, config.logistic.epochs)
                .map_err(ctx)?;
            let mut csv = String::from("epoch,cost\n");
            for (i, c) in model.cost_history.iter().enumerate() {
                csv.push_str(&format!("{},{c}\n", i + 1));
            }
            Trained {
                file: ModelFile::Lr(LrFile {
                    feature_order: order,
                    model,
                    standardizer,
                }),
                history: Some(("lr_cost_history.csv".into(), csv)),
            }
        }
        ModelKind::Dt => Trained {
            file: ModelFile::Dt(DtFile {
                feature_order: order,
                model: TreeModel::fit(x, y, config.tree).map_err(ctx)?,
            }),
            history: None,
        },
        ModelKind::Rf => {
            let mut model =
                trees::fit_forest(x, y, config.forest.n_estimators, config.tree, seeds.forest)
                    .map_err(ctx)?;
            model.oob_error = match trees::oob_error(&model, x, y) {
                Ok(e) => Some(e),
                Err(dirbias_core::Error::NoOobSamples) => None,
                Err(e) => return Err(ctx(e)),
            };
            Trained {
                file: ModelFile::Rf(RfFile {
                    feature_order: order,
                    model,
                }),
                history: None,
            }
        }
        ModelKind::Fnn => {
            let standardizer = dataset::fit_standardizer(ds)?;
            let z = standardizer.apply(x)?;
            let train_config = TrainConfig {
                epochs: config.network.epochs,
                batch_size: config.network.batch_size,
                validation_fraction: config.network.validation_fraction,
                shuffle_seed: seeds.network_shuffle,
            };
            let (model, losses) =
                neural::train_network(z.view(), y, &train_config, seeds.network_init)
                    .map_err(ctx)?;
            let mut csv = String::from("epoch,train_loss,val_loss\n");
            for l in &losses {
                let val = l.val_loss.map(|v| v.to_string()).unwrap_or_default();
                csv.push_str(&format!("{},{},{val}\n", l.epoch, l.train_loss));
            }
            Trained {
                file: ModelFile::Fnn(FnnFile {
                    feature_order: order,
                    model,
                    config: train_config,
                    standardizer,
                }),
                history: Some(("fnn_loss_history.csv".into(), csv)),
            }
        }
    })
}

/// Class-1 probabilities of `file` on raw feature rows.
pub fn predict_proba(file: &ModelFile, x: ArrayView2<'_, f64>) -> CliResult<Vec<f64>> {
    Ok(match file {
        ModelFile::Lr(f) => f.model.predict_proba(f.standardizer.apply(x)?.view())?,
        ModelFile::Dt(f) => f.model.predict_proba(x),
        ModelFile::Rf(f) => f.model.predict_proba(x),
        ModelFile::Fnn(f) => f.model.predict_proba(f.standardizer.apply(x)?.view())?,
    })
}

/// Scores `file` on one split range. Loss is reported for LR and FNN.
pub fn evaluate_model(file: &ModelFile, ds: &LabeledDataset, part: Part) -> CliResult<EvalReport> {
    file.check_compatible()?;
    let (x, y) = ds.part(part)?;
    if y.is_empty() {
        return Err(CliError::Data(format!("{} split is empty", part.as_str())));
    }
    let p = predict_proba(file, x)?;
    let pred = logistic::threshold(&p);
    let loss = match file.kind() {
        ModelKind::Lr | ModelKind::Fnn => Some(binary_cross_entropy(&p, y)?),
        ModelKind::Dt | ModelKind::Rf => None,
    };
    Ok(EvalReport::new(file.kind().label(), y, &pred, loss)?)
}

/// Trains `kind` and writes its model file and history into `out_dir`.
pub fn cmd_train(config: &RunConfig, kind: ModelKind) -> CliResult<PathBuf> {
    let (ds, _) = load_dataset(config)?;
    let trained = train_model(kind, &ds, config)?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(kind.file_name());
    write_file(&path, trained.file.to_json().as_bytes())?;
    if let Some((name, csv)) = &trained.history {
        write_file(&dir.join(name), csv.as_bytes())?;
    }
    Ok(path)
}

/// Evaluates a saved model and renders the one-row report.
pub fn cmd_evaluate(config: &RunConfig, model_path: &Path, part: Part) -> CliResult<String> {
    let file = ModelFile::load(model_path)?;
    let (ds, summary) = load_dataset(config)?;
    let report = evaluate_model(&file, &ds, part)?;
    let rows = [ReportRow {
        split: part,
        report,
    }];
    Ok(report::render(
        &rows,
        config.format,
        &report::Meta::new(config, &summary),
    ))
}

/// Split each model is scored on in [`cmd_compare`].
pub fn compare_split(kind: ModelKind, all_on_test: bool) -> Part {
    if all_on_test || kind == ModelKind::Fnn {
        Part::Test
    } else {
        Part::Validation
    }
}

/// Rendered comparison plus the rows behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ReportRow>,
    pub rendered: String,
}

/// Trains all four models on one split and reports them in LR, DT, RF, FNN
/// order.
pub fn compare(config: &RunConfig) -> CliResult<(Vec<ReportRow>, Summary)> {
    let (ds, summary) = load_dataset(config)?;
    let mut rows = Vec::with_capacity(ModelKind::ALL.len());
    for kind in ModelKind::ALL {
        let trained = train_model(kind, &ds, config)?;
        let split = compare_split(kind, config.evaluate_all_on_test);
        let report = evaluate_model(&trained.file, &ds, split)?;
        rows.push(ReportRow { split, report });
    }
    Ok((rows, summary))
}

/// Runs [`compare`], rendering in the configured format. With an explicit
/// output directory all three formats are also written there.
pub fn cmd_compare(config: &RunConfig, write_out: bool) -> CliResult<Comparison> {
    let (rows, summary) = compare(config)?;
    let meta = report::Meta::new(config, &summary);
    if write_out {
        let dir = &config.out_dir;
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for format in [
            crate::config::ReportFormat::Csv,
            crate::config::ReportFormat::Json,
            crate::config::ReportFormat::Table,
        ] {
            let path = dir.join(format!("compare.{}", format.extension()));
            write_file(&path, report::render(&rows, format, &meta).as_bytes())?;
        }
    }
    let rendered = report::render(&rows, config.format, &meta);
    Ok(Comparison { rows, rendered })
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Row counts of each split range.
pub fn range_len(r: &Range<usize>) -> usize {
    r.end - r.start
}
