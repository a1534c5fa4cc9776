//! MAE/MSE/RMSE metrics, head-to-head model comparison, and report
//! emission: a metrics table (CSV plus aligned text), per-ticker prediction
//! traces, and SVG line plots. Metrics are computed on the original price
//! scale so both model families are comparable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Mean absolute error, mean squared error, and its square root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub n: usize,
}

/// One aligned observation in a prediction trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
}

/// A model's prediction trace for one ticker over the shared test window.
#[derive(Debug, Clone)]
pub struct ModelTrace {
    pub ticker: String,
    pub model: String,
    pub points: Vec<TracePoint>,
}

/// Metrics plus the trace they were computed from.
#[derive(Debug, Clone)]
pub struct ReportEntry {
    pub ticker: String,
    pub model: String,
    pub metrics: Metrics,
    pub points: Vec<TracePoint>,
}

/// Which model wins one metric for one ticker; `None` marks a tie.
#[derive(Debug, Clone, PartialEq)]
pub struct WinnerFlag {
    pub ticker: String,
    pub metric: &'static str,
    pub winner: Option<String>,
}

/// Full comparison report: per-(ticker, model) entries, pooled per-model
/// metrics over the concatenated traces, and per-ticker winner flags.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub entries: Vec<ReportEntry>,
    pub pooled: Vec<(String, Metrics)>,
    pub winners: Vec<WinnerFlag>,
    pub fingerprint: String,
}

/// MAE, MSE, and RMSE between aligned prediction and actual sequences.
pub fn compute_metrics(predicted: &[f64], actual: &[f64]) -> Result<Metrics> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::Empty("metric inputs"));
    }
    if predicted.iter().chain(actual).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric inputs"));
    }
    let n = predicted.len();
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    for (p, a) in predicted.iter().zip(actual) {
        let e = p - a;
        abs_sum += e.abs();
        sq_sum += e * e;
    }
    let mae = abs_sum / n as f64;
    let mse = sq_sum / n as f64;
    Ok(Metrics {
        mae,
        mse,
        rmse: mse.sqrt(),
        n,
    })
}

const METRIC_NAMES: [&str; 3] = ["mae", "mse", "rmse"];

fn metric_value(metrics: &Metrics, name: &str) -> f64 {
    match name {
        "mae" => metrics.mae,
        "mse" => metrics.mse,
        _ => metrics.rmse,
    }
}

/// Assemble the per-ticker, per-model metric grid from aligned traces.
/// Traces for the same ticker must cover identical test dates.
pub fn compare(traces: &[ModelTrace], fingerprint: &str) -> Result<EvalReport> {
    if traces.is_empty() {
        return Err(Error::Empty("model traces"));
    }

    let mut sorted: Vec<&ModelTrace> = traces.iter().collect();
    sorted.sort_by(|a, b| (&a.ticker, &a.model).cmp(&(&b.ticker, &b.model)));

    // alignment check within each ticker
    for window in sorted.windows(2) {
        if window[0].ticker == window[1].ticker {
            let dates_a: Vec<NaiveDate> = window[0].points.iter().map(|p| p.date).collect();
            let dates_b: Vec<NaiveDate> = window[1].points.iter().map(|p| p.date).collect();
            if dates_a != dates_b {
                return Err(Error::LengthMismatch {
                    left: dates_a.len(),
                    right: dates_b.len(),
                });
            }
        }
    }

    let mut entries = Vec::with_capacity(sorted.len());
    for trace in &sorted {
        let predicted: Vec<f64> = trace.points.iter().map(|p| p.predicted).collect();
        let actual: Vec<f64> = trace.points.iter().map(|p| p.actual).collect();
        entries.push(ReportEntry {
            ticker: trace.ticker.clone(),
            model: trace.model.clone(),
            metrics: compute_metrics(&predicted, &actual)?,
            points: trace.points.clone(),
        });
    }

    // winner flags per ticker per metric
    let mut tickers: Vec<String> = entries.iter().map(|e| e.ticker.clone()).collect();
    tickers.dedup();
    let mut winners = Vec::new();
    for ticker in &tickers {
        let group: Vec<&ReportEntry> = entries.iter().filter(|e| &e.ticker == ticker).collect();
        for metric in METRIC_NAMES {
            let best = group
                .iter()
                .map(|e| metric_value(&e.metrics, metric))
                .fold(f64::INFINITY, f64::min);
            let winners_here: Vec<&&ReportEntry> = group
                .iter()
                .filter(|e| metric_value(&e.metrics, metric) == best)
                .collect();
            winners.push(WinnerFlag {
                ticker: ticker.clone(),
                metric,
                winner: if winners_here.len() == 1 {
                    Some(winners_here[0].model.clone())
                } else {
                    None
                },
            });
        }
    }

    // pooled metrics per model over concatenated traces
    let mut models: Vec<String> = entries.iter().map(|e| e.model.clone()).collect();
    models.sort();
    models.dedup();
    let mut pooled = Vec::with_capacity(models.len());
    for model in models {
        let mut predicted = Vec::new();
        let mut actual = Vec::new();
        for entry in entries.iter().filter(|e| e.model == model) {
            predicted.extend(entry.points.iter().map(|p| p.predicted));
            actual.extend(entry.points.iter().map(|p| p.actual));
        }
        pooled.push((model, compute_metrics(&predicted, &actual)?));
    }

    Ok(EvalReport {
        entries,
        pooled,
        winners,
        fingerprint: fingerprint.to_string(),
    })
}

fn metrics_csv(report: &EvalReport) -> String {
    let mut out = format!("# config_fingerprint={}\n", report.fingerprint);
    out.push_str("ticker,model,mae,mse,rmse,n\n");
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.ticker, e.model, e.metrics.mae, e.metrics.mse, e.metrics.rmse, e.metrics.n
        );
    }
    for (model, m) in &report.pooled {
        let _ = writeln!(out, "POOLED,{model},{},{},{},{}", m.mae, m.mse, m.rmse, m.n);
    }
    out
}

fn metrics_text(report: &EvalReport) -> String {
    let mut out = format!("# config_fingerprint={}\n", report.fingerprint);
    let _ = writeln!(
        out,
        "{:<10} {:<16} {:>12} {:>12} {:>12} {:>8}",
        "ticker", "model", "mae", "mse", "rmse", "n"
    );
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{:<10} {:<16} {:>12.6} {:>12.6} {:>12.6} {:>8}",
            e.ticker, e.model, e.metrics.mae, e.metrics.mse, e.metrics.rmse, e.metrics.n
        );
    }
    for (model, m) in &report.pooled {
        let _ = writeln!(
            out,
            "{:<10} {:<16} {:>12.6} {:>12.6} {:>12.6} {:>8}",
            "POOLED", model, m.mae, m.mse, m.rmse, m.n
        );
    }
    out.push('\n');
    for flag in &report.winners {
        let _ = writeln!(
            out,
            "winner {:<10} {:<5} = {}",
            flag.ticker,
            flag.metric,
            flag.winner.as_deref().unwrap_or("(tie)")
        );
    }
    out
}

fn trace_csv(report: &EvalReport, entry: &ReportEntry) -> String {
    let mut out = format!("# config_fingerprint={}\n", report.fingerprint);
    out.push_str("date,actual,predicted\n");
    for p in &entry.points {
        let _ = writeln!(out, "{},{},{}", p.date, p.actual, p.predicted);
    }
    out
}

fn plot_svg(report: &EvalReport, entry: &ReportEntry) -> String {
    const W: f64 = 800.0;
    const H: f64 = 400.0;
    const MARGIN: f64 = 50.0;

    let values: Vec<f64> = entry
        .points
        .iter()
        .flat_map(|p| [p.actual, p.predicted])
        .collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9);
    let n = entry.points.len();
    let x_at = |i: usize| {
        if n == 1 {
            W / 2.0
        } else {
            MARGIN + (W - 2.0 * MARGIN) * i as f64 / (n - 1) as f64
        }
    };
    let y_at = |v: f64| H - MARGIN - (H - 2.0 * MARGIN) * (v - lo) / span;
    let polyline = |pick: &dyn Fn(&TracePoint) -> f64| -> String {
        entry
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{:.2},{:.2}", x_at(i), y_at(pick(p))))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(out, "<!-- config_fingerprint={} -->", report.fingerprint);
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{} / {}: actual vs predicted</text>",
        MARGIN, entry.ticker, entry.model
    );
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#999\"/>",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"#333333\" stroke-width=\"1\" points=\"{}\"/>",
        polyline(&|p| p.actual)
    );
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"{}\"/>",
        polyline(&|p| p.predicted)
    );
    let first = entry.points.first().expect("nonempty trace");
    let last = entry.points.last().expect("nonempty trace");
    let _ = writeln!(
        out,
        "<text x=\"{MARGIN}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        H - MARGIN + 16.0,
        first.date
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{}</text>",
        W - MARGIN,
        H - MARGIN + 16.0,
        last.date
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\">min {lo:.2} / max {hi:.2}</text>",
        MARGIN,
        MARGIN - 8.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"24\" font-family=\"monospace\" font-size=\"11\" fill=\"#333333\" text-anchor=\"end\">actual</text>",
        W - MARGIN - 70.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"24\" font-family=\"monospace\" font-size=\"11\" fill=\"#1f77b4\" text-anchor=\"end\">predicted</text>",
        W - MARGIN
    );
    out.push_str("</svg>\n");
    out
}

/// Write the report files: `metrics.csv`, `metrics.txt`, one
/// `trace_<ticker>_<model>.csv` and one `plot_<ticker>_<model>.svg` per
/// entry. Output bytes are deterministic for identical reports. Nothing is
/// written for an empty report.
pub fn emit_report(report: &EvalReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if report.entries.is_empty() {
        return Err(Error::Empty("report"));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    // render everything before touching the filesystem
    let mut files: Vec<(PathBuf, String)> = vec![
        (out_dir.join("metrics.csv"), metrics_csv(report)),
        (out_dir.join("metrics.txt"), metrics_text(report)),
    ];
    for entry in &report.entries {
        files.push((
            out_dir.join(format!("trace_{}_{}.csv", entry.ticker, entry.model)),
            trace_csv(report, entry),
        ));
        files.push((
            out_dir.join(format!("plot_{}_{}.svg", entry.ticker, entry.model)),
            plot_svg(report, entry),
        ));
    }

    let mut written = Vec::with_capacity(files.len());
    for (path, content) in files {
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
