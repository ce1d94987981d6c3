mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::CliConfig;
use crate::error::CliError;

const FILES_HELP: &str = "\
Output files (comma-delimited, header row, UTF-8, LF endings):
  denoised.csv            index,observed,denoised
  components.csv          component,singular_value,index,value
  trace_h<H>.csv          epoch,loss
  predictions_h<H>.csv    index,actual,predicted   (index is 0-based in the test segment)
  metrics.csv, report.csv site,model,horizon,mae,mape_pct,rmse
  manifest_<command>.toml resolved config plus a [run] section; pass it back with --config to rerun

Exit codes: 0 success, 1 data or model error, 2 usage error.";

#[derive(Debug, Parser)]
#[command(name = "windcast", version, about = "P-SSA denoising and TCN-GRU wind speed forecasting", after_help = FILES_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file; every key is optional.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Training seed (overrides train.seed).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Denoising mode: paper (whole series) or causal (overrides pssa.mode).
    #[arg(long, global = true, value_name = "paper|causal")]
    mode: Option<String>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Forecast horizons, e.g. 1,2,3 (overrides window.horizons).
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    horizons: Option<Vec<usize>>,

    /// Input CSV (overrides data.path).
    #[arg(long, global = true, value_name = "PATH")]
    data: Option<PathBuf>,

    /// Model kind: tcn_gru, gru, rnn or mlp (overrides model.kind).
    #[arg(long, global = true, value_name = "KIND")]
    kind: Option<String>,

    /// Parameter file for predict (overrides predict.model).
    #[arg(long, global = true, value_name = "PATH")]
    model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Write the bundled synthetic series to synthetic.csv.
    GenData,
    /// P-SSA denoise the series; writes denoised.csv and components.csv.
    Denoise,
    /// Train one model per horizon; writes model.bin and trace_h<H>.csv.
    Train,
    /// Forecast the test segment with a saved model; writes predictions_h<H>.csv.
    Predict,
    /// Score predictions_h<H>.csv against their actuals; writes metrics.csv.
    Evaluate,
    /// Run every configured model on every site; writes report.csv, report_wide.csv, report.txt.
    Experiment,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::GenData => "gen-data",
            Command::Denoise => "denoise",
            Command::Train => "train",
            Command::Predict => "predict",
            Command::Evaluate => "evaluate",
            Command::Experiment => "experiment",
        }
    }
}

fn effective_config(cli: &Cli) -> Result<CliConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    cfg.run = None;
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    if let Some(m) = &cli.mode {
        cfg.pssa.mode = m.clone();
    }
    if let Some(h) = &cli.horizons {
        cfg.window.horizons = h.clone();
    }
    if let Some(d) = &cli.data {
        cfg.data.path = Some(d.clone());
    }
    if let Some(k) = &cli.kind {
        cfg.model.kind = k.clone();
    }
    if let Some(m) = &cli.model {
        cfg.predict.model = Some(m.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    let resolved = cfg.resolve()?;
    let ctx = commands::Context {
        cfg: &cfg,
        resolved: &resolved,
        out: &cli.out,
        command: cli.command.name(),
    };
    match cli.command {
        Command::GenData => commands::gen_data(&ctx),
        Command::Denoise => commands::denoise(&ctx),
        Command::Train => commands::train(&ctx),
        Command::Predict => commands::predict(&ctx),
        Command::Evaluate => commands::evaluate(&ctx),
        Command::Experiment => commands::experiment(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("windcast {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
