use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dirbias_cli::config::SplitFractions;
use dirbias_cli::{CliResult, ModelKind, ReportFormat, RunConfig};
use dirbias_core::dataset::Part;

/// Next-day direction classifiers for one JPX security.
#[derive(Debug, Parser)]
#[command(name = "dirbias", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Raw price CSV or prepared directory. Defaults to
    /// $DIRBIAS_DATA_DIR/stock_prices.csv.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Securities code to keep.
    #[arg(long, global = true)]
    code: Option<u32>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format: csv, json or table.
    #[arg(long, global = true)]
    format: Option<ReportFormat>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter, label and split a raw price CSV.
    Prepare {
        /// Train and validation fractions, e.g. 0.7,0.15.
        #[arg(long)]
        split: Option<SplitFractions>,
    },
    /// Train one model on the training split.
    Train {
        #[arg(long, value_enum)]
        model: ModelKind,
    },
    /// Score a saved model on one split.
    Evaluate {
        /// Model JSON written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// validation or test.
        #[arg(long, default_value = "validation")]
        split: Part,
    },
    /// Train and score all four models.
    Compare {
        /// Train and validation fractions, used when --data is a raw CSV.
        #[arg(long)]
        split: Option<SplitFractions>,
        /// Score LR, DT and RF on test instead of validation.
        #[arg(long)]
        all_on_test: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dirbias: {e}");
            e.exit_code()
        }
    }
}

fn build_config(common: &Common, split: Option<SplitFractions>) -> CliResult<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &common.data {
        config.data_path = Some(d.clone());
    }
    if let Some(c) = common.code {
        config.securities_code = c;
    }
    if let Some(s) = common.seed {
        config.master_seed = s;
    }
    if let Some(f) = common.format {
        config.format = f;
    }
    if let Some(o) = &common.out {
        config.out_dir = o.clone();
    }
    if let Some(s) = split {
        config.split = s;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> CliResult<()> {
    let common = &cli.common;
    match cli.command {
        Command::Prepare { split } => {
            let config = build_config(common, split)?;
            let s = dirbias_cli::cmd_prepare(&config)?;
            println!(
                "prepared {} rows ({} records, {} other codes, {} missing, {} malformed, {} duplicate dates) into {}",
                s.rows,
                s.records,
                s.filtered_out,
                s.dropped_missing,
                s.rejected_malformed,
                s.duplicate_dates,
                config.out_dir.display()
            );
        }
        Command::Train { model } => {
            let config = build_config(common, None)?;
            let path = dirbias_cli::cmd_train(&config, model)?;
            println!("wrote {}", path.display());
        }
        Command::Evaluate { model, split } => {
            let config = build_config(common, None)?;
            print!("{}", dirbias_cli::cmd_evaluate(&config, &model, split)?);
        }
        Command::Compare { split, all_on_test } => {
            let mut config = build_config(common, split)?;
            config.evaluate_all_on_test |= all_on_test;
            let out = dirbias_cli::cmd_compare(&config, common.out.is_some())?;
            print!("{}", out.rendered);
        }
    }
    Ok(())
}
