//! Run configuration: a JSON file whose every field is optional, overridden
//! by command-line flags.

use std::path::{Path, PathBuf};

use dirbias_core::trees::TreeParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable naming the directory that holds `stock_prices.csv`.
pub const DATA_DIR_ENV: &str = "DIRBIAS_DATA_DIR";

/// File name looked up inside [`DATA_DIR_ENV`] when `--data` is absent.
pub const DEFAULT_PRICES_FILE: &str = "stock_prices.csv";

/// JPX code of Sony Group.
pub const SONY: u32 = 6758;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.70,
            validation: 0.15,
        }
    }
}

impl std::str::FromStr for SplitFractions {
    type Err = String;

    /// `"0.7,0.15"`: train then validation fraction; test takes the rest.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [train, validation] = parts[..] else {
            return Err(format!("expected TRAIN,VALIDATION fractions, got `{s}`"));
        };
        let parse = |v: &str| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        let f = SplitFractions {
            train: parse(train)?,
            validation: parse(validation)?,
        };
        f.validate()?;
        Ok(f)
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<(), String> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.train) && ok(self.validation) && self.train + self.validation < 1.0 {
            Ok(())
        } else {
            Err(format!(
                "split fractions {}/{} must be positive and sum below 1",
                self.train, self.validation
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub alpha: f64,
    pub epochs: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            alpha: dirbias_core::logistic::DEFAULT_ALPHA,
            epochs: dirbias_core::logistic::DEFAULT_EPOCHS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_estimators: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: dirbias_core::trees::DEFAULT_N_ESTIMATORS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let d = dirbias_core::neural::TrainConfig::default();
        NetworkConfig {
            epochs: d.epochs,
            batch_size: d.batch_size,
            validation_fraction: d.validation_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    #[default]
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "table" => Ok(ReportFormat::Table),
            other => Err(format!("unknown format `{other}` (csv, json, table)")),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Table => "txt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Raw price CSV, or a prepared directory for `train`/`evaluate`.
    pub data_path: Option<PathBuf>,
    pub securities_code: u32,
    pub split: SplitFractions,
    pub master_seed: u64,
    pub logistic: LogisticConfig,
    /// Shared by the decision tree and the forest's trees.
    pub tree: TreeParams,
    pub forest: ForestConfig,
    pub network: NetworkConfig,
    pub out_dir: PathBuf,
    pub format: ReportFormat,
    /// Evaluate LR, DT and RF on the test range instead of validation.
    pub evaluate_all_on_test: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_path: None,
            securities_code: SONY,
            split: SplitFractions::default(),
            master_seed: 42,
            logistic: LogisticConfig::default(),
            tree: TreeParams::default(),
            forest: ForestConfig::default(),
            network: NetworkConfig::default(),
            out_dir: PathBuf::from("out"),
            format: ReportFormat::Table,
            evaluate_all_on_test: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.split.validate().map_err(CliError::Usage)?;
        let bad = |m: String| Err(CliError::Usage(m));
        if !(self.logistic.alpha > 0.0 && self.logistic.alpha.is_finite()) {
            return bad(format!(
                "logistic.alpha {} must be positive",
                self.logistic.alpha
            ));
        }
        if self.forest.n_estimators == 0 {
            return bad("forest.n_estimators must be positive".into());
        }
        let t = &self.tree;
        if t.max_depth == 0 || t.min_samples_split == 0 || !(1..=5).contains(&t.max_features) {
            return bad(format!("tree params {t:?} out of range"));
        }
        let n = &self.network;
        if n.batch_size == 0 || !(0.0..1.0).contains(&n.validation_fraction) {
            return bad(format!("network params {n:?} out of range"));
        }
        Ok(())
    }

    /// `data_path`, else `$DIRBIAS_DATA_DIR/stock_prices.csv`.
    pub fn raw_data_path(&self) -> CliResult<PathBuf> {
        if let Some(p) = &self.data_path {
            return Ok(p.clone());
        }
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => Ok(PathBuf::from(dir).join(DEFAULT_PRICES_FILE)),
            None => Err(CliError::Usage(format!(
                "no --data given and {DATA_DIR_ENV} is not set"
            ))),
        }
    }

    /// `data_path`, else the output directory.
    pub fn prepared_dir(&self) -> PathBuf {
        self.data_path
            .clone()
            .unwrap_or_else(|| self.out_dir.clone())
    }
}
