//! The five commands behind the `pricecast` binary: analyze, fit-arima,
//! train-lstm, sweep, and backtest. Every command renders its artifacts in
//! memory first and only then writes them under the output directory, so a
//! failing run does not leave partial files behind. All artifacts embed the
//! config fingerprint; artifact reuse checks it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::arima::{
    self, fit, grid_search, rolling_forecast, ArimaModel, ArimaOrder, GridSearchResult,
};
use crate::cli::config::{DSetting, LstmSettings, RunConfig};
use crate::dataset::{self, fit_scaler, normalize, partitioned_windows, split, PriceSeries};
use crate::error::{Error, Result};
use crate::evaluate::{compare, emit_report, ModelTrace, TracePoint};
use crate::lstm::{
    checkpoint_from_text, checkpoint_to_text, dataset_mse, multi_sequence_predict, train,
    LstmStack,
};
use crate::stationarity::{acf, difference, pacf, select_d, AdfResult};

/// Dimension swept by `cmd_sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDimension {
    Dropout,
    Layers,
    Units,
}

impl SweepDimension {
    pub fn label(&self) -> &'static str {
        match self {
            SweepDimension::Dropout => "dropout",
            SweepDimension::Layers => "layers",
            SweepDimension::Units => "units",
        }
    }

    fn row_label(&self) -> &'static str {
        match self {
            SweepDimension::Dropout => "Dropout",
            SweepDimension::Layers => "Layers",
            SweepDimension::Units => "Units",
        }
    }
}

impl std::str::FromStr for SweepDimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dropout" => Ok(SweepDimension::Dropout),
            "layers" => Ok(SweepDimension::Layers),
            "units" => Ok(SweepDimension::Units),
            other => Err(Error::Config(format!(
                "unknown sweep dimension {other:?}; expected dropout, layers, or units"
            ))),
        }
    }
}

/// Buffered artifact set: rendered fully before anything touches disk.
struct Artifacts {
    out_dir: PathBuf,
    files: Vec<(PathBuf, String)>,
}

impl Artifacts {
    fn new(out_dir: &Path) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn push(&mut self, name: String, content: String) {
        self.files.push((self.out_dir.join(name), content));
    }

    fn write_all(self) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (path, content) in self.files {
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn load_ticker(config: &RunConfig, ticker: &str, path: &Path) -> Result<PriceSeries> {
    let series = dataset::load_csv(path, &config.value_column)?;
    PriceSeries::new(ticker, series.dates().to_vec(), series.values().to_vec())
}

fn fingerprint_comment(config: &RunConfig) -> String {
    format!("# config_fingerprint={}\n", config.fingerprint)
}

fn resolve_d(config: &RunConfig, train_values: &[f64]) -> Result<(usize, Vec<AdfResult>)> {
    match config.arima.d {
        DSetting::Fixed(d) => {
            let report = crate::stationarity::adf_test(&difference(train_values, d)?, None)?;
            Ok((d, vec![report]))
        }
        DSetting::Auto => select_d(train_values, 2),
    }
}

fn adf_report_text(config: &RunConfig, ticker: &str, d: usize, reports: &[AdfResult]) -> String {
    let mut out = fingerprint_comment(config);
    let _ = writeln!(out, "ticker = {ticker}");
    let _ = writeln!(out, "recommended_d = {d}");
    for (level, report) in reports.iter().enumerate() {
        let _ = writeln!(out, "\n[d = {level}]");
        out.push_str(&report.to_text());
    }
    out
}

fn series_csv(config: &RunConfig, series: &PriceSeries, skip: usize, values: &[f64]) -> String {
    let mut out = fingerprint_comment(config);
    out.push_str("date,value\n");
    for (date, value) in series.dates().iter().skip(skip).zip(values) {
        let _ = writeln!(out, "{date},{value}");
    }
    out
}

fn heatmap_svg(config: &RunConfig, ticker: &str, grid: &GridSearchResult) -> String {
    const CELL: f64 = 70.0;
    const MARGIN: f64 = 60.0;
    let rows = grid.matrix.len();
    let cols = grid.matrix.first().map_or(0, |r| r.len());
    let width = MARGIN + cols as f64 * CELL + 20.0;
    let height = MARGIN + rows as f64 * CELL + 20.0;

    let present: Vec<f64> = grid.matrix.iter().flatten().flatten().cloned().collect();
    let lo = present.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = present.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(out, "<!-- config_fingerprint={} -->", config.fingerprint);
    let _ = writeln!(
        out,
        "<text x=\"{MARGIN}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{ticker}: {} over (p, q); darker is better</text>",
        grid.criterion.label()
    );
    for (p, row) in grid.matrix.iter().enumerate() {
        for (q, cell) in row.iter().enumerate() {
            let x = MARGIN + q as f64 * CELL;
            let y = MARGIN + p as f64 * CELL;
            let (fill, label) = match cell {
                Some(v) => {
                    // best value darkest
                    let t = 1.0 - (v - lo) / span;
                    let shade = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
                    (
                        format!(
                            "#{:02x}{:02x}{:02x}",
                            shade(247.0, 8.0),
                            shade(251.0, 48.0),
                            shade(255.0, 107.0)
                        ),
                        format!("{v:.1}"),
                    )
                }
                None => ("#cccccc".to_string(), "n/a".to_string()),
            };
            let _ = writeln!(
                out,
                "<rect x=\"{x:.0}\" y=\"{y:.0}\" width=\"{CELL:.0}\" height=\"{CELL:.0}\" fill=\"{fill}\" stroke=\"#444\"/>"
            );
            let text_fill = if cell.is_some_and(|v| 1.0 - (v - lo) / span > 0.5) {
                "#ffffff"
            } else {
                "#111111"
            };
            let _ = writeln!(
                out,
                "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"11\" fill=\"{text_fill}\" text-anchor=\"middle\">{label}</text>",
                x + CELL / 2.0,
                y + CELL / 2.0 + 4.0
            );
        }
    }
    for q in 0..cols {
        let _ = writeln!(
            out,
            "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">q={q}</text>",
            MARGIN + q as f64 * CELL + CELL / 2.0,
            MARGIN - 10.0
        );
    }
    for p in 0..rows {
        let _ = writeln!(
            out,
            "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">p={p}</text>",
            MARGIN - 8.0,
            MARGIN + p as f64 * CELL + CELL / 2.0 + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Stationarity diagnostics and order-selection artifacts: ADF report with
/// the recommended differencing order, differenced-series CSVs, ACF/PACF
/// correlograms, and the criterion heatmap over the (p, q) grid.
pub fn cmd_analyze(config: &RunConfig, ticker_filter: Option<&str>) -> Result<Vec<PathBuf>> {
    let tickers = config.select_tickers(ticker_filter)?;
    let mut artifacts = Artifacts::new(&config.out_dir);

    for (ticker, path) in &tickers {
        let series = load_ticker(config, ticker, path)?;
        let values = series.values();

        let (d, reports) = resolve_d(config, values)?;
        artifacts.push(
            format!("adf_{ticker}.txt"),
            adf_report_text(config, ticker, d, &reports),
        );

        for order in [1usize, 2] {
            let diffed = difference(values, order)?;
            artifacts.push(
                format!("diff{order}_{ticker}.csv"),
                series_csv(config, &series, order, &diffed),
            );
        }

        let working = difference(values, d)?;
        let max_lag = 40.min(working.len() / 4);
        let acf_result = acf(&working, max_lag)?;
        let pacf_result = pacf(&working, max_lag)?;
        artifacts.push(
            format!("acf_{ticker}.csv"),
            format!("{}{}", fingerprint_comment(config), acf_result.to_csv()),
        );
        artifacts.push(
            format!("pacf_{ticker}.csv"),
            format!("{}{}", fingerprint_comment(config), pacf_result.to_csv()),
        );

        let grid = grid_search(
            values,
            config.arima.p_max,
            config.arima.q_max,
            d,
            config.arima.criterion,
        )?;
        artifacts.push(
            format!("bic_matrix_{ticker}.csv"),
            format!("{}{}", fingerprint_comment(config), grid.to_csv()),
        );
        artifacts.push(
            format!("bic_heatmap_{ticker}.svg"),
            heatmap_svg(config, ticker, &grid),
        );
    }
    artifacts.write_all()
}

fn model_id(order: ArimaOrder) -> String {
    format!("arima_{}_{}_{}", order.p, order.d, order.q)
}

/// Fit the configured ARIMA models on a training segment: explicit orders
/// when given, otherwise the grid-search best. Returns the fitted models
/// and the grid result when a grid ran.
fn resolve_arima_models(
    config: &RunConfig,
    train_values: &[f64],
) -> Result<(Vec<(String, ArimaModel)>, Option<GridSearchResult>)> {
    if config.arima.orders.is_empty() {
        let (d, _) = resolve_d(config, train_values)?;
        let grid = grid_search(
            train_values,
            config.arima.p_max,
            config.arima.q_max,
            d,
            config.arima.criterion,
        )?;
        let model = fit(train_values, grid.best_order)?;
        Ok((vec![("arima_best".to_string(), model)], Some(grid)))
    } else {
        let mut models = Vec::with_capacity(config.arima.orders.len());
        for &order in &config.arima.orders {
            models.push((model_id(order), fit(train_values, order)?));
        }
        Ok((models, None))
    }
}

fn arima_diagnostics_text(
    config: &RunConfig,
    model: &ArimaModel,
    train_values: &[f64],
) -> Result<String> {
    let mut out = fingerprint_comment(config);
    let _ = writeln!(out, "order = {}", model.order);
    let _ = writeln!(out, "stationary = {}", model.stationary);
    let _ = writeln!(out, "invertible = {}", model.invertible);
    let _ = writeln!(out, "sigma2 = {}", model.sigma2);
    let _ = writeln!(out, "loglik = {}", model.loglik);
    let _ = writeln!(out, "aic = {}", arima::aic(model));
    let _ = writeln!(out, "bic = {}", arima::bic(model));
    match arima::t_test(model) {
        Ok(tests) => {
            let _ = writeln!(
                out,
                "\n{:<12} {:>12} {:>12} {:>10} {:>6}",
                "coefficient", "estimate", "stderr", "t_stat", "sig5%"
            );
            for t in tests {
                let _ = writeln!(
                    out,
                    "{:<12} {:>12.6} {:>12.6} {:>10.4} {:>6}",
                    t.name, t.estimate, t.stderr, t.t_stat, t.significant_at_5pct
                );
            }
        }
        Err(e) => {
            let _ = writeln!(out, "\nt_test = unavailable ({e})");
        }
    }
    let (correlogram, pass) = arima::residual_diagnostics(model, train_values, 20)?;
    let _ = writeln!(out, "\nresidual_acf_within_band = {:.3}", correlogram.fraction_in_band());
    let _ = writeln!(out, "residual_check_pass = {pass}");
    Ok(out)
}

/// Grid search (or explicit orders), CSS fit, significance tests, residual
/// diagnostics, and model checkpoints per ticker.
pub fn cmd_fit_arima(config: &RunConfig, ticker_filter: Option<&str>) -> Result<Vec<PathBuf>> {
    let tickers = config.select_tickers(ticker_filter)?;
    let mut artifacts = Artifacts::new(&config.out_dir);

    for (ticker, path) in &tickers {
        let series = load_ticker(config, ticker, path)?;
        let parts = split(&series, &config.arima_split)?;
        let train_values = parts.train.values();

        let (models, grid) = resolve_arima_models(config, train_values)?;
        if let Some(grid) = &grid {
            artifacts.push(
                format!("grid_{ticker}.csv"),
                format!("{}{}", fingerprint_comment(config), grid.to_csv()),
            );
        }
        for (name, model) in &models {
            artifacts.push(
                format!("{name}_{ticker}.model"),
                model.to_text(&config.fingerprint),
            );
            artifacts.push(
                format!("{name}_{ticker}_diagnostics.txt"),
                arima_diagnostics_text(config, model, train_values)?,
            );
            let (correlogram, _) = arima::residual_diagnostics(model, train_values, 20)?;
            artifacts.push(
                format!("{name}_{ticker}_residual_acf.csv"),
                format!("{}{}", fingerprint_comment(config), correlogram.to_csv()),
            );
        }
    }
    artifacts.write_all()
}

/// Everything the LSTM leg needs for one ticker: normalized windows per
/// partition plus the de-normalization scaler and the test-segment levels.
struct LstmData {
    scaler: crate::dataset::Scaler,
    train: crate::dataset::WindowedDataset,
    val: crate::dataset::WindowedDataset,
    test: crate::dataset::WindowedDataset,
    test_dates: Vec<chrono::NaiveDate>,
    test_levels: Vec<f64>,
}

fn prepare_lstm_data(config: &RunConfig, settings: &LstmSettings, series: &PriceSeries) -> Result<LstmData> {
    let parts = split(series, &config.lstm_split)?;
    let scaler = fit_scaler(&parts.train)?;
    let normalized = normalize(series.values(), &scaler);
    let (train, val, test, test_dates) = partitioned_windows(
        &normalized,
        series.dates(),
        settings.window,
        &config.lstm_split,
    )?;
    if val.is_empty() {
        return Err(Error::EmptyPartition { part: "val" });
    }
    if test.len() != parts.test.len() {
        return Err(Error::LengthMismatch {
            left: test.len(),
            right: parts.test.len(),
        });
    }
    Ok(LstmData {
        scaler,
        train,
        val,
        test,
        test_dates,
        test_levels: parts.test.values().to_vec(),
    })
}

fn history_csv(config: &RunConfig, history: &[crate::lstm::EpochStats]) -> String {
    let mut out = fingerprint_comment(config);
    out.push_str("epoch,train_mse,val_mse\n");
    for row in history {
        let _ = writeln!(out, "{},{},{}", row.epoch, row.train_mse, row.val_mse);
    }
    out
}

fn train_lstm_once(
    settings: &LstmSettings,
    data: &LstmData,
) -> Result<(LstmStack, Vec<crate::lstm::EpochStats>)> {
    let stack = LstmStack::new(
        1,
        &settings.layer_units(),
        &settings.dropout_rates(),
        settings.train.seed,
    )?;
    train(stack, &data.train, &data.val, &settings.train)
}

/// Full LSTM pipeline per ticker: load, split, scale on train only, window,
/// train, and write the best-validation checkpoint plus the loss history.
pub fn cmd_train_lstm(config: &RunConfig, ticker_filter: Option<&str>) -> Result<Vec<PathBuf>> {
    let tickers = config.select_tickers(ticker_filter)?;
    let mut artifacts = Artifacts::new(&config.out_dir);

    for (ticker, path) in &tickers {
        let series = load_ticker(config, ticker, path)?;
        let data = prepare_lstm_data(config, &config.lstm, &series)?;
        let (stack, history) = train_lstm_once(&config.lstm, &data)?;
        artifacts.push(
            format!("lstm_{ticker}.ckpt"),
            checkpoint_to_text(&stack, Some(&config.lstm.train), &config.fingerprint),
        );
        artifacts.push(format!("lstm_{ticker}_history.csv"), history_csv(config, &history));
    }
    artifacts.write_all()
}

/// One model per sweep value with a shared seed; emits the train/val/test
/// score table. Per-value failures are recorded and the sweep continues.
pub fn cmd_sweep(
    config: &RunConfig,
    dimension: SweepDimension,
    values: &[f64],
    ticker_filter: Option<&str>,
) -> Result<Vec<PathBuf>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".to_string()));
    }
    let tickers = config.select_tickers(ticker_filter)?;
    let (ticker, path) = tickers.iter().next().expect("config has tickers");
    let series = load_ticker(config, ticker, path)?;

    struct Row {
        value: f64,
        outcome: Result<(f64, f64, f64)>,
    }

    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let outcome = (|| -> Result<(f64, f64, f64)> {
            let mut settings = config.lstm.clone();
            match dimension {
                SweepDimension::Dropout => {
                    if !(0.0..1.0).contains(&value) {
                        return Err(Error::Config(format!("dropout {value} outside [0, 1)")));
                    }
                    settings.dropout = value;
                }
                SweepDimension::Layers => {
                    if value.fract() != 0.0 || value < 1.0 {
                        return Err(Error::Config(format!("layer count {value} must be a positive integer")));
                    }
                    settings.layers = value as usize;
                }
                SweepDimension::Units => {
                    if value.fract() != 0.0 || value < 1.0 {
                        return Err(Error::Config(format!("unit count {value} must be a positive integer")));
                    }
                    settings.units = value as usize;
                }
            }
            let data = prepare_lstm_data(config, &settings, &series)?;
            let (stack, _) = train_lstm_once(&settings, &data)?;
            Ok((
                dataset_mse(&stack, &data.train)?,
                dataset_mse(&stack, &data.val)?,
                dataset_mse(&stack, &data.test)?,
            ))
        })();
        rows.push(Row { value, outcome });
    }

    let mut csv = fingerprint_comment(config);
    csv.push_str("value,train_score,val_score,test_score,status\n");
    let mut text = fingerprint_comment(config);
    let _ = writeln!(
        text,
        "{:<16} {:>24} {:>24} {:>24}",
        "", "Train Score", "Validation Score", "Test Score"
    );
    for row in &rows {
        match &row.outcome {
            Ok((tr, va, te)) => {
                let _ = writeln!(csv, "{},{tr},{va},{te},ok", row.value);
                let _ = writeln!(
                    text,
                    "{:<16} {:>24} {:>24} {:>24}",
                    format!("{} = {}", dimension.row_label(), row.value),
                    tr,
                    va,
                    te
                );
            }
            Err(e) => {
                let reason = e.to_string().replace(',', ";");
                let _ = writeln!(csv, "{},,,,error: {reason}", row.value);
                let _ = writeln!(
                    text,
                    "{:<16} error: {reason}",
                    format!("{} = {}", dimension.row_label(), row.value)
                );
            }
        }
    }

    let mut artifacts = Artifacts::new(&config.out_dir);
    artifacts.push(format!("sweep_{}_{ticker}.csv", dimension.label()), csv);
    artifacts.push(format!("sweep_{}_{ticker}.txt", dimension.label()), text);
    artifacts.write_all()
}

fn load_arima_checkpoint(config: &RunConfig, name: &str, ticker: &str) -> Result<ArimaModel> {
    let path = config.out_dir.join(format!("{name}_{ticker}.model"));
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let (model, fingerprint) = ArimaModel::from_text(&text)?;
    if fingerprint != config.fingerprint {
        return Err(Error::FingerprintMismatch {
            artifact: fingerprint,
            current: config.fingerprint.clone(),
        });
    }
    Ok(model)
}

fn load_lstm_checkpoint(config: &RunConfig, ticker: &str) -> Result<LstmStack> {
    let path = config.out_dir.join(format!("lstm_{ticker}.ckpt"));
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let checkpoint = checkpoint_from_text(&text)?;
    if checkpoint.fingerprint != config.fingerprint {
        return Err(Error::FingerprintMismatch {
            artifact: checkpoint.fingerprint,
            current: config.fingerprint.clone(),
        });
    }
    Ok(checkpoint.stack)
}

/// Head-to-head backtest over the shared test window: ARIMA rolling
/// one-step forecasts against LSTM multi-sequence prediction, metrics on
/// the original price scale, full report files.
///
/// With `end_to_end` set the models are fit/trained in-process; otherwise
/// checkpoints written by `fit-arima` / `train-lstm` are loaded and their
/// fingerprints checked.
pub fn cmd_backtest(
    config: &RunConfig,
    end_to_end: bool,
    ticker_filter: Option<&str>,
) -> Result<Vec<PathBuf>> {
    let tickers = config.select_tickers(ticker_filter)?;

    // tickers are independent; run them in parallel and keep the merge
    // order fixed by collecting per-ticker trace lists
    let ticker_list: Vec<(&String, &PathBuf)> = tickers.iter().collect();
    let per_ticker: Vec<Vec<ModelTrace>> = ticker_list
        .par_iter()
        .map(|(ticker, path)| backtest_one_ticker(config, end_to_end, ticker, path))
        .collect::<Result<Vec<_>>>()?;
    let traces: Vec<ModelTrace> = per_ticker.into_iter().flatten().collect();

    let report = compare(&traces, &config.fingerprint)?;
    emit_report(&report, &config.out_dir)
}

fn backtest_one_ticker(
    config: &RunConfig,
    end_to_end: bool,
    ticker: &str,
    path: &Path,
) -> Result<Vec<ModelTrace>> {
    let mut traces: Vec<ModelTrace> = Vec::new();
    {
        let series = load_ticker(config, ticker, path)?;

        // ARIMA leg
        let parts = split(&series, &config.arima_split)?;
        let models: Vec<(String, ArimaModel)> = if end_to_end {
            resolve_arima_models(config, parts.train.values())?.0
        } else if config.arima.orders.is_empty() {
            vec![(
                "arima_best".to_string(),
                load_arima_checkpoint(config, "arima_best", ticker)?,
            )]
        } else {
            config
                .arima
                .orders
                .iter()
                .map(|&order| {
                    let name = model_id(order);
                    load_arima_checkpoint(config, &name, ticker).map(|m| (name, m))
                })
                .collect::<Result<Vec<_>>>()?
        };
        for (name, model) in &models {
            let predictions = rolling_forecast(
                model,
                parts.train.values(),
                parts.test.values(),
                config.arima.refit_every,
            )?;
            traces.push(ModelTrace {
                ticker: ticker.to_string(),
                model: name.clone(),
                points: parts
                    .test
                    .dates()
                    .iter()
                    .zip(parts.test.values())
                    .zip(&predictions)
                    .map(|((date, actual), predicted)| TracePoint {
                        date: *date,
                        actual: *actual,
                        predicted: *predicted,
                    })
                    .collect(),
            });
        }

        // LSTM leg
        let data = prepare_lstm_data(config, &config.lstm, &series)?;
        let stack = if end_to_end {
            train_lstm_once(&config.lstm, &data)?.0
        } else {
            load_lstm_checkpoint(config, ticker)?
        };
        let normalized_predictions =
            multi_sequence_predict(&stack, &data.test.inputs[0], &data.test.targets)?;
        let predictions = crate::dataset::denormalize(&normalized_predictions, &data.scaler);
        traces.push(ModelTrace {
            ticker: ticker.to_string(),
            model: "lstm".to_string(),
            points: data
                .test_dates
                .iter()
                .zip(&data.test_levels)
                .zip(&predictions)
                .map(|((date, actual), predicted)| TracePoint {
                    date: *date,
                    actual: *actual,
                    predicted: *predicted,
                })
                .collect(),
        });
    }
    Ok(traces)
}
