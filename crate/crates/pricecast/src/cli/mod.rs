//! Config-driven command layer behind the `pricecast` binary.

mod commands;
mod config;

pub use commands::{
    cmd_analyze, cmd_backtest, cmd_fit_arima, cmd_sweep, cmd_train_lstm, SweepDimension,
};
pub use config::{ArimaSettings, DSetting, LstmSettings, RunConfig};
