//! Command pipeline behind the `dirbias` binary: prepare a security's labeled
//! price history, train and evaluate the four classifiers, compare them.

pub mod config;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod report;

pub use config::{ReportFormat, RunConfig};
pub use error::{CliError, CliResult};
pub use model::{ModelFile, ModelKind};
pub use pipeline::{
    cmd_compare, cmd_evaluate, cmd_prepare, cmd_train, load_dataset, load_prepared,
};
