//! CSV ingestion, date-bounded splits, min-max scaling, and sliding-window
//! sample construction shared by both model families.
//!
//! All operations are pure functions over immutable values; there is no
//! shared mutable state.

use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Date-indexed sequence of daily prices for one ticker.
///
/// Dates are strictly increasing, values are finite, and both vectors have
/// the same nonzero length. Constructors enforce the invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    ticker: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl PriceSeries {
    /// Build a series from parallel date/value vectors, validating the
    /// invariants: equal nonzero lengths, strictly increasing dates, finite
    /// values.
    pub fn new(ticker: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: values.len(),
            });
        }
        if dates.is_empty() {
            return Err(Error::Empty("price series"));
        }
        for pair in dates.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::DuplicateDate(pair[1]));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("price series values"));
        }
        Ok(Self {
            ticker: ticker.into(),
            dates,
            values,
        })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    /// Sub-series with dates in `(after, through]`. Empty result is an error
    /// only for callers that require it; here it returns `None`.
    fn slice_between(&self, after: Option<NaiveDate>, through: NaiveDate) -> Option<PriceSeries> {
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for (d, v) in self.dates.iter().zip(&self.values) {
            if let Some(a) = after {
                if *d <= a {
                    continue;
                }
            }
            if *d > through {
                break;
            }
            dates.push(*d);
            values.push(*v);
        }
        if dates.is_empty() {
            None
        } else {
            Some(PriceSeries {
                ticker: self.ticker.clone(),
                dates,
                values,
            })
        }
    }
}

/// Date boundaries for a train/validation/test partition.
///
/// `train_end < val_end (when present) < test_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_end: NaiveDate,
    pub val_end: Option<NaiveDate>,
    pub test_end: NaiveDate,
}

impl SplitSpec {
    pub fn new(train_end: NaiveDate, val_end: Option<NaiveDate>, test_end: NaiveDate) -> Result<Self> {
        if let Some(v) = val_end {
            if v <= train_end || test_end <= v {
                return Err(Error::Config(format!(
                    "split dates must satisfy train_end < val_end < test_end, got {train_end} / {v} / {test_end}"
                )));
            }
        } else if test_end <= train_end {
            return Err(Error::Config(format!(
                "split dates must satisfy train_end < test_end, got {train_end} / {test_end}"
            )));
        }
        Ok(Self {
            train_end,
            val_end,
            test_end,
        })
    }
}

/// Result of partitioning a series by a [`SplitSpec`].
#[derive(Debug, Clone)]
pub struct SplitSeries {
    pub train: PriceSeries,
    pub val: Option<PriceSeries>,
    pub test: PriceSeries,
}

/// Per-series min/max pair for min-max scaling. `max > min` strictly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    min: f64,
    max: f64,
}

impl Scaler {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::NonFinite("scaler bounds"));
        }
        if max <= min {
            return Err(Error::ConstantSeries);
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

/// Sliding-window samples: `inputs[i]` holds `window` consecutive values and
/// `targets[i]` the value immediately after them.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub window: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Load a price series from a CSV file in Yahoo Finance export layout:
/// a header row with a `Date` column (ISO-8601) plus named numeric columns.
///
/// Rows are sorted by date ascending. Rows whose value cell is empty or
/// `"null"` are dropped; ticker is taken from the file stem.
pub fn load_csv(path: impl AsRef<Path>, column: &str) -> Result<PriceSeries> {
    let path = path.as_ref();
    let ticker = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "UNKNOWN".to_string());

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::Csv(e.to_string()),
        })?;

    let headers = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
    let date_idx = headers
        .iter()
        .position(|h| h.trim() == "Date")
        .ok_or_else(|| Error::MissingColumn("Date".to_string()))?;
    let value_idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::MissingColumn(column.to_string()))?;

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let date_cell = record.get(date_idx).unwrap_or("").trim();
        let value_cell = record.get(value_idx).unwrap_or("").trim();
        if value_cell.is_empty() || value_cell.eq_ignore_ascii_case("null") {
            dropped += 1;
            continue;
        }
        let date = NaiveDate::parse_from_str(date_cell, "%Y-%m-%d")
            .map_err(|_| Error::UnparseableDate(date_cell.to_string()))?;
        let value: f64 = value_cell
            .parse()
            .map_err(|_| Error::Csv(format!("unparseable value {value_cell:?} on {date}")))?;
        rows.push((date, value));
    }

    if rows.is_empty() {
        return Err(Error::ZeroUsableRows { dropped });
    }
    rows.sort_by_key(|(d, _)| *d);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::DuplicateDate(pair[0].0));
        }
    }

    let (dates, values) = rows.into_iter().unzip();
    PriceSeries::new(ticker, dates, values)
}

/// Partition a series by date: train is `dates <= train_end`, val is
/// `(train_end, val_end]` when a val boundary is present, test is
/// `(val_end or train_end, test_end]`.
///
/// Errors when the train or test partition comes out empty.
pub fn split(series: &PriceSeries, spec: &SplitSpec) -> Result<SplitSeries> {
    let train = series
        .slice_between(None, spec.train_end)
        .ok_or(Error::EmptyPartition { part: "train" })?;
    let val = match spec.val_end {
        Some(val_end) => Some(
            series
                .slice_between(Some(spec.train_end), val_end)
                .ok_or(Error::EmptyPartition { part: "val" })?,
        ),
        None => None,
    };
    let test_after = spec.val_end.unwrap_or(spec.train_end);
    let test = series
        .slice_between(Some(test_after), spec.test_end)
        .ok_or(Error::EmptyPartition { part: "test" })?;
    Ok(SplitSeries { train, val, test })
}

/// Fit a min-max scaler on a series. Errors on constant input.
pub fn fit_scaler(series: &PriceSeries) -> Result<Scaler> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            need: 1,
            got: series.len(),
        });
    }
    let min = series.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = series
        .values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    Scaler::new(min, max)
}

/// Map each value to `(x - min) / (max - min)`. Values outside `[min, max]`
/// map outside `[0, 1]`; that is intentional when the scaler was fit on the
/// training partition only.
pub fn normalize(values: &[f64], scaler: &Scaler) -> Vec<f64> {
    let range = scaler.max - scaler.min;
    values.iter().map(|x| (x - scaler.min) / range).collect()
}

/// Exact inverse of [`normalize`]: `u * (max - min) + min`.
pub fn denormalize(values: &[f64], scaler: &Scaler) -> Vec<f64> {
    let range = scaler.max - scaler.min;
    values.iter().map(|u| u * range + scaler.min).collect()
}

/// Build sliding-window samples: sample `i` has input `values[i..i+window)`
/// and target `values[i+window]`. Requires `values.len() > window`.
pub fn make_windows(values: &[f64], window: usize) -> Result<WindowedDataset> {
    if window == 0 {
        return Err(Error::Config("window must be positive".to_string()));
    }
    if values.len() <= window {
        return Err(Error::TooShort {
            need: window,
            got: values.len(),
        });
    }
    let count = values.len() - window;
    let mut inputs = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    for i in 0..count {
        inputs.push(values[i..i + window].to_vec());
        targets.push(values[i + window]);
    }
    Ok(WindowedDataset {
        window,
        inputs,
        targets,
    })
}

/// Sliding windows over a full (normalized) series, with each sample
/// assigned to the partition that contains its **target** date. Inputs may
/// reach back into the preceding partition, which only ever exposes past
/// data to the model.
///
/// Returns `(train, val, test)` windowed datasets plus the target dates of
/// the test samples, in order.
pub fn partitioned_windows(
    values: &[f64],
    dates: &[NaiveDate],
    window: usize,
    spec: &SplitSpec,
) -> Result<(WindowedDataset, WindowedDataset, WindowedDataset, Vec<NaiveDate>)> {
    if values.len() != dates.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: dates.len(),
        });
    }
    let all = make_windows(values, window)?;
    let mut parts: [WindowedDataset; 3] = std::array::from_fn(|_| WindowedDataset {
        window,
        inputs: Vec::new(),
        targets: Vec::new(),
    });
    let mut test_dates = Vec::new();
    let val_end = spec.val_end.unwrap_or(spec.train_end);
    for (i, (input, target)) in all.inputs.into_iter().zip(all.targets).enumerate() {
        let target_date = dates[i + window];
        if target_date > spec.test_end {
            break;
        }
        let slot = if target_date <= spec.train_end {
            0
        } else if target_date <= val_end {
            1
        } else {
            test_dates.push(target_date);
            2
        };
        parts[slot].inputs.push(input);
        parts[slot].targets.push(target);
    }
    let [train, val, test] = parts;
    if train.is_empty() {
        return Err(Error::EmptyPartition { part: "train" });
    }
    if test.is_empty() {
        return Err(Error::EmptyPartition { part: "test" });
    }
    Ok((train, val, test, test_dates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn series(dates: &[&str], values: &[f64]) -> PriceSeries {
        PriceSeries::new(
            "TEST",
            dates.iter().map(|d| date(d)).collect(),
            values.to_vec(),
        )
        .unwrap()
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_csv_parses_two_rows() {
        let f = write_csv("Date,High\n2018-01-02,10.0\n2018-01-03,11.0\n");
        let s = load_csv(f.path(), "High").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.values(), &[10.0, 11.0]);
        assert_eq!(s.dates()[0], date("2018-01-02"));
    }

    #[test]
    fn load_csv_sorts_reversed_rows() {
        let fwd = write_csv("Date,High\n2018-01-02,10.0\n2018-01-03,11.0\n");
        let rev = write_csv("Date,High\n2018-01-03,11.0\n2018-01-02,10.0\n");
        let a = load_csv(fwd.path(), "High").unwrap();
        let b = load_csv(rev.path(), "High").unwrap();
        assert_eq!(a.dates(), b.dates());
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn load_csv_all_null_is_error() {
        let f = write_csv("Date,High\n2018-01-02,null\n2018-01-03,null\n");
        match load_csv(f.path(), "High") {
            Err(Error::ZeroUsableRows { dropped }) => assert_eq!(dropped, 2),
            other => panic!("expected ZeroUsableRows, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_missing_file_and_column() {
        assert!(matches!(
            load_csv("/nonexistent/x.csv", "High"),
            Err(Error::Io { .. })
        ));
        let f = write_csv("Date,Low\n2018-01-02,1.0\n");
        assert!(matches!(
            load_csv(f.path(), "High"),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn load_csv_rejects_duplicate_dates_and_bad_dates() {
        let f = write_csv("Date,High\n2018-01-02,1.0\n2018-01-02,2.0\n");
        assert!(matches!(
            load_csv(f.path(), "High"),
            Err(Error::DuplicateDate(_))
        ));
        let f = write_csv("Date,High\n02/01/2018,1.0\n");
        assert!(matches!(
            load_csv(f.path(), "High"),
            Err(Error::UnparseableDate(_))
        ));
    }

    #[test]
    fn split_three_way_covers_paper_layout() {
        // Daily series spanning 2010..2018, LSTM-style boundaries.
        let dates: Vec<NaiveDate> = (0..3287)
            .map(|i| date("2010-01-01") + chrono::Duration::days(i))
            .collect();
        let values: Vec<f64> = (0..dates.len()).map(|i| 100.0 + i as f64 * 0.01).collect();
        let s = PriceSeries::new("T", dates, values).unwrap();
        let spec = SplitSpec::new(
            date("2015-12-31"),
            Some(date("2017-12-31")),
            date("2018-12-31"),
        )
        .unwrap();
        let parts = split(&s, &spec).unwrap();
        let val = parts.val.as_ref().unwrap();
        assert_eq!(parts.train.last_date(), date("2015-12-31"));
        assert_eq!(val.first_date(), date("2016-01-01"));
        assert_eq!(val.last_date(), date("2017-12-31"));
        assert_eq!(parts.test.first_date(), date("2018-01-01"));
        assert_eq!(parts.test.last_date(), date("2018-12-31"));
        let total = parts.train.len() + val.len() + parts.test.len();
        assert_eq!(total, s.len());
    }

    #[test]
    fn split_two_way_without_val() {
        let dates: Vec<NaiveDate> = (0..1096)
            .map(|i| date("2016-01-01") + chrono::Duration::days(i))
            .collect();
        let values: Vec<f64> = (0..dates.len()).map(|i| i as f64).collect();
        let s = PriceSeries::new("T", dates, values).unwrap();
        let spec = SplitSpec::new(date("2017-12-31"), None, date("2018-12-31")).unwrap();
        let parts = split(&s, &spec).unwrap();
        assert!(parts.val.is_none());
        assert_eq!(parts.train.last_date(), date("2017-12-31"));
        assert_eq!(parts.test.first_date(), date("2018-01-01"));
    }

    #[test]
    fn split_empty_train_is_error() {
        let s = series(&["2018-05-01", "2018-05-02"], &[1.0, 2.0]);
        let spec = SplitSpec::new(date("2018-01-31"), None, date("2018-12-31")).unwrap();
        assert!(matches!(
            split(&s, &spec),
            Err(Error::EmptyPartition { part: "train" })
        ));
    }

    #[test]
    fn fit_scaler_examples() {
        let s = series(&["2018-01-01", "2018-01-02", "2018-01-03"], &[1.0, 2.0, 3.0]);
        let sc = fit_scaler(&s).unwrap();
        assert_eq!((sc.min(), sc.max()), (1.0, 3.0));

        let s = series(&["2018-01-01", "2018-01-02", "2018-01-03"], &[5.0, 5.0, 5.0]);
        assert!(matches!(fit_scaler(&s), Err(Error::ConstantSeries)));

        let s = series(&["2018-01-01", "2018-01-02", "2018-01-03"], &[-2.0, 0.0, 4.0]);
        let sc = fit_scaler(&s).unwrap();
        assert_eq!((sc.min(), sc.max()), (-2.0, 4.0));
    }

    #[test]
    fn normalize_endpoints_and_linearity() {
        let sc = Scaler::new(1.0, 3.0).unwrap();
        assert_eq!(normalize(&[1.0, 2.0, 3.0], &sc), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize(&[4.0], &sc), vec![1.5]);
    }

    #[test]
    fn denormalize_endpoints() {
        let sc = Scaler::new(10.0, 20.0).unwrap();
        assert_eq!(denormalize(&[0.0, 1.0], &sc), vec![10.0, 20.0]);
        let sc = Scaler::new(0.0, 4.0).unwrap();
        assert_eq!(denormalize(&[0.5], &sc), vec![2.0]);
    }

    #[test]
    fn make_windows_enumeration() {
        let w = make_windows(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(w.inputs, vec![vec![1.0, 2.0], vec![2.0, 3.0]]);
        assert_eq!(w.targets, vec![3.0, 4.0]);
    }

    #[test]
    fn make_windows_count_and_too_short() {
        let values: Vec<f64> = (0..61).map(|i| i as f64).collect();
        let w = make_windows(&values, 60).unwrap();
        assert_eq!(w.len(), 1);
        let values: Vec<f64> = (0..60).map(|i| i as f64).collect();
        assert!(matches!(
            make_windows(&values, 60),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn partitioned_windows_targets_respect_boundaries() {
        let dates: Vec<NaiveDate> = (0..200)
            .map(|i| date("2018-01-01") + chrono::Duration::days(i))
            .collect();
        let values: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let spec = SplitSpec::new(
            date("2018-04-10"), // day 99
            Some(date("2018-05-30")), // day 149
            date("2018-07-19"), // day 199
        )
        .unwrap();
        let (train, val, test, test_dates) =
            partitioned_windows(&values, &dates, 10, &spec).unwrap();
        // targets: indices 10..=99 train, 100..=149 val, 150..=199 test
        assert_eq!(train.len(), 90);
        assert_eq!(val.len(), 50);
        assert_eq!(test.len(), 50);
        assert_eq!(test_dates.len(), 50);
        assert_eq!(train.targets[0], 10.0);
        assert_eq!(val.targets[0], 100.0);
        assert_eq!(test.targets[0], 150.0);
        // first test input reaches back into the validation partition
        assert_eq!(test.inputs[0][0], 140.0);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 10usize..120, a in 1usize..100, b in 1usize..100) {
            let dates: Vec<NaiveDate> = (0..n as i64)
                .map(|i| date("2015-01-01") + chrono::Duration::days(i))
                .collect();
            let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let s = PriceSeries::new("T", dates.clone(), values).unwrap();
            let i = a.min(n - 2).max(0);
            let j = (i + 1 + b).min(n - 1);
            let spec = SplitSpec::new(dates[i], None, dates[j]).unwrap();
            let parts = split(&s, &spec).unwrap();
            let mut joined: Vec<NaiveDate> = parts.train.dates().to_vec();
            joined.extend_from_slice(parts.test.dates());
            let expected: Vec<NaiveDate> = dates.iter().cloned().filter(|d| *d <= dates[j]).collect();
            prop_assert_eq!(joined, expected);
        }

        #[test]
        fn normalize_denormalize_roundtrip(values in prop::collection::vec(-1e4f64..1e4, 1..50),
                                           lo in -1e3f64..0.0, span in 1e-3f64..1e3) {
            let sc = Scaler::new(lo, lo + span).unwrap();
            let back = denormalize(&normalize(&values, &sc), &sc);
            for (x, y) in values.iter().zip(&back) {
                prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
            let fwd = normalize(&denormalize(&values, &sc), &sc);
            for (x, y) in values.iter().zip(&fwd) {
                prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }

        #[test]
        fn normalize_is_strictly_monotone(x in -1e4f64..1e4, gap in 1e-6f64..1e3,
                                          lo in -1e3f64..0.0, span in 1e-3f64..1e3) {
            let sc = Scaler::new(lo, lo + span).unwrap();
            let out = normalize(&[x, x + gap], &sc);
            prop_assert!(out[0] < out[1]);
        }

        #[test]
        fn window_count_formula(len in 2usize..200, window in 1usize..100) {
            prop_assume!(len > window);
            let values: Vec<f64> = (0..len).map(|i| i as f64).collect();
            let w = make_windows(&values, window).unwrap();
            prop_assert_eq!(w.len(), len - window);
            for input in &w.inputs {
                prop_assert_eq!(input.len(), window);
            }
        }
    }
}
