use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pricecast::cli::{
    cmd_analyze, cmd_backtest, cmd_fit_arima, cmd_sweep, cmd_train_lstm, RunConfig,
    SweepDimension,
};

/// Daily price forecasting toolkit: Box-Jenkins ARIMA vs a stacked LSTM
/// over a shared ingestion, windowing, and backtesting harness.
#[derive(Parser)]
#[command(name = "pricecast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed (overrides the config's seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict the run to one configured ticker
    #[arg(long)]
    ticker: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Stationarity diagnostics: ADF report, differenced series, ACF/PACF,
    /// criterion heatmap
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Fit ARIMA models (grid search or explicit orders) with diagnostics
    FitArima {
        #[command(flatten)]
        common: Common,
    },
    /// Train the stacked LSTM and write the best-validation checkpoint
    TrainLstm {
        #[command(flatten)]
        common: Common,
    },
    /// Train one model per hyperparameter value and emit the score table
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dimension to sweep: dropout, layers, or units
        #[arg(long)]
        dimension: String,
        /// Comma-separated values, e.g. 0.1,0.2,0.5
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Head-to-head ARIMA vs LSTM backtest over the shared test window
    Backtest {
        #[command(flatten)]
        common: Common,
        /// Fit and train in-process instead of loading checkpoints
        #[arg(long)]
        end_to_end: bool,
    },
}

type Runner = Box<dyn FnOnce(&RunConfig) -> pricecast::Result<Vec<PathBuf>>>;

fn run() -> pricecast::Result<Vec<PathBuf>> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code for usage errors is 2; the contract here
            // is 1 for usage/config problems
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };

    let (common, runner): (&Common, Runner) = match &cli.command {
        Command::Analyze { common } => {
            let ticker = common.ticker.clone();
            (common, Box::new(move |c| cmd_analyze(c, ticker.as_deref())))
        }
        Command::FitArima { common } => {
            let ticker = common.ticker.clone();
            (common, Box::new(move |c| cmd_fit_arima(c, ticker.as_deref())))
        }
        Command::TrainLstm { common } => {
            let ticker = common.ticker.clone();
            (common, Box::new(move |c| cmd_train_lstm(c, ticker.as_deref())))
        }
        Command::Sweep {
            common,
            dimension,
            values,
        } => {
            let ticker = common.ticker.clone();
            let dimension: SweepDimension = dimension.parse()?;
            let values = values.clone();
            (
                common,
                Box::new(move |c| cmd_sweep(c, dimension, &values, ticker.as_deref())),
            )
        }
        Command::Backtest { common, end_to_end } => {
            let ticker = common.ticker.clone();
            let end_to_end = *end_to_end;
            (
                common,
                Box::new(move |c| cmd_backtest(c, end_to_end, ticker.as_deref())),
            )
        }
    };

    let config = RunConfig::load(&common.config, common.seed, common.out.as_deref())?;
    runner(&config)
}

fn main() -> ExitCode {
    match run() {
        Ok(paths) => {
            for path in paths {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
