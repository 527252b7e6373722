//! Browser bindings: train the classifiers on a synthetic candle series and
//! return curves as JSON strings for plotting.

use dirbias_core::dataset::{self, LabeledDataset, Part};
use dirbias_core::logistic;
use dirbias_core::math::binary_cross_entropy;
use dirbias_core::metrics::EvalReport;
use dirbias_core::neural::{self, TrainConfig};
use dirbias_core::seed::{self, stream};
use dirbias_core::synthetic::{self, WalkConfig};
use dirbias_core::trees::{self, ForestConfig, ForestModel, TreeParams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Synthetic series shared by every demo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Series {
    pub seed: u32,
    pub n_days: u32,
    pub momentum: f64,
}

impl Series {
    pub fn dataset(&self) -> dirbias_core::Result<LabeledDataset> {
        let candles = synthetic::candles(&WalkConfig {
            n_days: self.n_days as usize,
            body_momentum: self.momentum,
            seed: u64::from(self.seed),
            ..WalkConfig::default()
        });
        dataset::split_chronological(dataset::label(&candles)?, 0.70, 0.15)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Score {
    pub accuracy: f64,
    pub f1: f64,
    pub loss: Option<f64>,
}

impl From<EvalReport> for Score {
    fn from(r: EvalReport) -> Self {
        Score {
            accuracy: r.accuracy,
            f1: r.f1,
            loss: r.loss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticCurve {
    pub cost: Vec<f64>,
    pub validation: Score,
    pub prevalence: f64,
}

pub fn logistic_curve_of(
    series: Series,
    alpha: f64,
    epochs: usize,
) -> dirbias_core::Result<LogisticCurve> {
    let ds = series.dataset()?;
    let st = dataset::fit_standardizer(&ds)?;
    let (x, y) = ds.part(Part::Train)?;
    let model = logistic::train(st.apply(x)?.view(), y, alpha, epochs)?;
    let (xv, yv) = ds.part(Part::Validation)?;
    let p = model.predict_proba(st.apply(xv)?.view())?;
    let report = EvalReport::new(
        "LR",
        yv,
        &logistic::threshold(&p),
        Some(binary_cross_entropy(&p, yv)?),
    )?;
    Ok(LogisticCurve {
        cost: model.cost_history,
        validation: report.into(),
        prevalence: ds.prevalence(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkCurve {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub test: Score,
}

pub fn network_curve_of(series: Series, epochs: usize) -> dirbias_core::Result<NetworkCurve> {
    let ds = series.dataset()?;
    let st = dataset::fit_standardizer(&ds)?;
    let (x, y) = ds.part(Part::Train)?;
    let net_seed = seed::mix(u64::from(series.seed), stream::NETWORK);
    let config = TrainConfig {
        epochs,
        shuffle_seed: seed::mix(net_seed, 1),
        ..TrainConfig::default()
    };
    let (net, history) =
        neural::train_network(st.apply(x)?.view(), y, &config, seed::mix(net_seed, 0))?;
    let (xt, yt) = ds.part(Part::Test)?;
    let p = net.predict_proba(st.apply(xt)?.view())?;
    let report = EvalReport::new(
        "FNN",
        yt,
        &logistic::threshold(&p),
        Some(binary_cross_entropy(&p, yt)?),
    )?;
    Ok(NetworkCurve {
        train_loss: history.iter().map(|e| e.train_loss).collect(),
        val_loss: history.iter().filter_map(|e| e.val_loss).collect(),
        test: report.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestSweep {
    pub n_trees: Vec<usize>,
    pub oob_error: Vec<f64>,
    pub validation_error: Vec<f64>,
}

/// The first `k` trees of `forest`, as if it had been grown with `k`.
fn prefix(forest: &ForestModel, k: usize) -> ForestModel {
    ForestModel {
        n_estimators: k,
        trees: forest.trees[..k].to_vec(),
        bootstrap_indices: forest.bootstrap_indices[..k].to_vec(),
        ..forest.clone()
    }
}

pub fn forest_sweep_of(
    series: Series,
    max_trees: usize,
    max_features: usize,
) -> dirbias_core::Result<ForestSweep> {
    let ds = series.dataset()?;
    let (x, y) = ds.part(Part::Train)?;
    let (xv, yv) = ds.part(Part::Validation)?;
    let forest = trees::fit_forest_with(
        x,
        y,
        &ForestConfig {
            n_estimators: max_trees,
            params: TreeParams {
                min_samples_split: 20,
                max_features,
                ..TreeParams::default()
            },
            seed: seed::mix(u64::from(series.seed), stream::FOREST),
            parallel: false,
            ..ForestConfig::default()
        },
    )?;
    let mut sweep = ForestSweep {
        n_trees: Vec::new(),
        oob_error: Vec::new(),
        validation_error: Vec::new(),
    };
    for k in 1..=max_trees {
        let f = prefix(&forest, k);
        let oob = match trees::oob_error(&f, x, y) {
            Ok(e) => e,
            Err(dirbias_core::Error::NoOobSamples) => continue,
            Err(e) => return Err(e),
        };
        let report = EvalReport::new("RF", yv, &f.predict(xv), None)?;
        sweep.n_trees.push(k);
        sweep.oob_error.push(oob);
        sweep.validation_error.push(1.0 - report.accuracy);
    }
    Ok(sweep)
}

fn to_json<T: Serialize>(result: dirbias_core::Result<T>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).expect("plain data serializes"),
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

/// Logistic regression cost per epoch and its validation score.
#[wasm_bindgen]
pub fn logistic_curve(seed: u32, n_days: u32, momentum: f64, alpha: f64, epochs: u32) -> String {
    to_json(logistic_curve_of(
        Series {
            seed,
            n_days,
            momentum,
        },
        alpha,
        epochs as usize,
    ))
}

/// Network train and validation loss per epoch and its test score.
#[wasm_bindgen]
pub fn network_curve(seed: u32, n_days: u32, momentum: f64, epochs: u32) -> String {
    to_json(network_curve_of(
        Series {
            seed,
            n_days,
            momentum,
        },
        epochs as usize,
    ))
}

/// Out-of-bag and validation error of a forest as trees are added.
#[wasm_bindgen]
pub fn forest_sweep(
    seed: u32,
    n_days: u32,
    momentum: f64,
    max_trees: u32,
    max_features: u32,
) -> String {
    to_json(forest_sweep_of(
        Series {
            seed,
            n_days,
            momentum,
        },
        max_trees as usize,
        max_features as usize,
    ))
}
