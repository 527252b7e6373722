//! On-disk model documents, tagged by `"model"`.

use std::path::Path;

use dirbias_core::dataset::Standardizer;
use dirbias_core::logistic::LogisticModel;
use dirbias_core::neural::{Network, TrainConfig};
use dirbias_core::trees::{ForestModel, TreeModel};
use dirbias_core::{FEATURE_ORDER, N_FEATURES};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, CliResult};

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Dt,
    Rf,
    Fnn,
}

impl ModelKind {
    /// Report order.
    pub const ALL: [ModelKind; 4] = [ModelKind::Lr, ModelKind::Dt, ModelKind::Rf, ModelKind::Fnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Fnn => "fnn",
        }
    }

    /// Name shown in reports.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lr => "LR",
            ModelKind::Dt => "DT",
            ModelKind::Rf => "RF",
            ModelKind::Fnn => "FNN",
        }
    }

    pub fn file_name(self) -> String {
        format!("model_{}.json", self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrFile {
    pub feature_order: Vec<String>,
    #[serde(flatten)]
    pub model: LogisticModel,
    pub standardizer: Standardizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtFile {
    pub feature_order: Vec<String>,
    #[serde(flatten)]
    pub model: TreeModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfFile {
    pub feature_order: Vec<String>,
    #[serde(flatten)]
    pub model: ForestModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnFile {
    pub feature_order: Vec<String>,
    #[serde(flatten)]
    pub model: Network,
    pub config: TrainConfig,
    pub standardizer: Standardizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelFile {
    Lr(LrFile),
    Dt(DtFile),
    Rf(RfFile),
    Fnn(FnnFile),
}

pub fn feature_order() -> Vec<String> {
    FEATURE_ORDER.iter().map(|s| s.to_string()).collect()
}

impl ModelFile {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelFile::Lr(_) => ModelKind::Lr,
            ModelFile::Dt(_) => ModelKind::Dt,
            ModelFile::Rf(_) => ModelKind::Rf,
            ModelFile::Fnn(_) => ModelKind::Fnn,
        }
    }

    pub fn feature_order(&self) -> &[String] {
        match self {
            ModelFile::Lr(f) => &f.feature_order,
            ModelFile::Dt(f) => &f.feature_order,
            ModelFile::Rf(f) => &f.feature_order,
            ModelFile::Fnn(f) => &f.feature_order,
        }
    }

    /// Rejects files whose features or shapes disagree with the dataset layout.
    pub fn check_compatible(&self) -> CliResult<()> {
        if self.feature_order().iter().ne(FEATURE_ORDER.iter()) {
            return Err(CliError::Data(format!(
                "model feature order {:?} does not match dataset order {:?}",
                self.feature_order(),
                FEATURE_ORDER
            )));
        }
        let standardizer_ok =
            |s: &Standardizer| s.mean.len() == N_FEATURES && s.stddev.len() == N_FEATURES;
        let ok = match self {
            ModelFile::Lr(f) => {
                f.model.theta.len() == N_FEATURES + 1 && standardizer_ok(&f.standardizer)
            }
            ModelFile::Fnn(f) => {
                f.model.layer_dims.first() == Some(&N_FEATURES) && standardizer_ok(&f.standardizer)
            }
            ModelFile::Dt(_) | ModelFile::Rf(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::Data(format!(
                "{} model shape does not match {N_FEATURES} features",
                self.kind().as_str()
            )))
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model documents serialize");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        file.check_compatible()?;
        Ok(file)
    }
}
