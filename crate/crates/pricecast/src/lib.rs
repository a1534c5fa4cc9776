//! Daily price forecasting toolkit comparing a Box-Jenkins ARIMA pipeline
//! against a from-scratch stacked LSTM regressor over a shared ingestion,
//! windowing, and backtesting harness.
//!
//! The crate is organized around six areas:
//!
//! - [`dataset`]: CSV ingestion, date splits, min-max scaling, windowing
//! - [`stationarity`]: differencing, ADF testing, ACF/PACF
//! - [`arima`]: CSS estimation, order selection, diagnostics, forecasting
//! - [`lstm`]: stacked LSTM with BPTT, dropout, Adam, seeded training
//! - [`evaluate`]: MAE/MSE/RMSE, model comparison, report emission
//! - [`cli`]: config-driven commands behind the `pricecast` binary
//!
//! See the crate examples for runnable walkthroughs of each capability.

pub mod arima;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod lstm;
pub mod sim;
pub mod stationarity;

mod linalg;
mod optim;

pub mod cli;

pub use error::{Error, Result};
