//! Binary up/down classifiers for daily OHLCV candles.
//!
//! The crate is organised as a small pipeline:
//!
//! * [`dataset`] reads JPX-style price CSVs, labels each day by whether the
//!   next close is higher, splits chronologically and standardizes features.
//! * [`logistic`] is full-batch gradient-descent logistic regression.
//! * [`trees`] holds the entropy decision tree and the bootstrap forest.
//! * [`neural`] is a small dense network trained with Adam.
//! * [`metrics`] computes confusion matrices, accuracy and F1 and renders
//!   comparison reports.

pub mod dataset;
pub mod error;
pub mod logistic;
pub mod math;
pub mod metrics;
pub mod neural;
pub mod seed;
pub mod synthetic;
pub mod trees;

pub use error::{Error, Result};

/// Number of model input features.
pub const N_FEATURES: usize = 5;

/// Column names of the feature matrix, in matrix order.
pub const FEATURE_ORDER: [&str; N_FEATURES] = ["Close", "Volume", "Open", "High", "Low"];
