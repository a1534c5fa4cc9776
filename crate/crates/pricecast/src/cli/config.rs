//! Declarative run configuration: a single TOML file bundling data sources,
//! split dates, ARIMA settings, LSTM settings, output directory, and the
//! global seed. Every key has a default where the experimental protocol
//! defines one; ticker CSV paths are resolved relative to the config file
//! and must exist at load time.
//!
//! ```toml
//! seed = 42
//! out_dir = "out"
//! value_column = "High"
//!
//! [tickers]
//! ALFA = "ALFA.csv"
//!
//! [split.lstm]
//! train_end = "2015-12-31"
//! val_end = "2017-12-31"
//! test_end = "2018-12-31"
//!
//! [split.arima]
//! train_end = "2017-12-31"
//! test_end = "2018-12-31"
//!
//! [arima]
//! d = "auto"            # or 0 | 1 | 2
//! p_max = 3
//! q_max = 3
//! criterion = "bic"     # or "aic"
//! orders = [[1, 0, 1]]  # explicit orders; empty -> grid-search best
//! refit_every = 0       # 0 = fit once on train
//!
//! [lstm]
//! layers = 3
//! units = 100
//! dropout = 0.1
//! window = 60
//! epochs = 50
//! batch_size = 32
//! learning_rate = 0.001
//! beta1 = 0.9
//! beta2 = 0.999
//! epsilon = 1e-8
//! shuffle = true
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::arima::{ArimaOrder, Criterion};
use crate::dataset::SplitSpec;
use crate::error::{Error, Result};
use crate::lstm::TrainConfig;

fn default_seed() -> u64 {
    42
}
fn default_out_dir() -> String {
    "out".to_string()
}
fn default_value_column() -> String {
    "High".to_string()
}
fn default_lstm_train_end() -> String {
    "2015-12-31".to_string()
}
fn default_val_end() -> Option<String> {
    Some("2017-12-31".to_string())
}
fn default_arima_train_end() -> String {
    "2017-12-31".to_string()
}
fn default_test_end() -> String {
    "2018-12-31".to_string()
}
fn default_d() -> toml::Value {
    toml::Value::String("auto".to_string())
}
fn default_grid_max() -> usize {
    3
}
fn default_criterion() -> String {
    "bic".to_string()
}
fn default_layers() -> usize {
    3
}
fn default_units() -> usize {
    100
}
fn default_dropout() -> f64 {
    0.1
}
fn default_window() -> usize {
    60
}
fn default_epochs() -> usize {
    50
}
fn default_batch_size() -> usize {
    32
}
fn default_learning_rate() -> f64 {
    0.001
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_shuffle() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    train_end: String,
    val_end: Option<String>,
    test_end: String,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSplits {
    lstm: Option<RawSplit>,
    arima: Option<RawSplit>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawArima {
    d: toml::Value,
    p_max: usize,
    q_max: usize,
    criterion: String,
    orders: Vec<[usize; 3]>,
    refit_every: usize,
}

impl Default for RawArima {
    fn default() -> Self {
        Self {
            d: default_d(),
            p_max: default_grid_max(),
            q_max: default_grid_max(),
            criterion: default_criterion(),
            orders: Vec::new(),
            refit_every: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawLstm {
    layers: usize,
    units: usize,
    dropout: f64,
    window: usize,
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    shuffle: bool,
}

impl Default for RawLstm {
    fn default() -> Self {
        Self {
            layers: default_layers(),
            units: default_units(),
            dropout: default_dropout(),
            window: default_window(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
            shuffle: default_shuffle(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_out_dir")]
    out_dir: String,
    #[serde(default = "default_value_column")]
    value_column: String,
    tickers: BTreeMap<String, String>,
    #[serde(default)]
    split: RawSplits,
    #[serde(default)]
    arima: RawArima,
    #[serde(default)]
    lstm: RawLstm,
}

/// Differencing order: fixed, or selected by the ADF walk-up procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DSetting {
    Auto,
    Fixed(usize),
}

/// Resolved ARIMA settings.
#[derive(Debug, Clone)]
pub struct ArimaSettings {
    pub d: DSetting,
    pub p_max: usize,
    pub q_max: usize,
    pub criterion: Criterion,
    /// Explicit orders to fit and backtest; empty means "use the grid-search
    /// best order".
    pub orders: Vec<ArimaOrder>,
    /// Refit interval for rolling forecasts; `None` fits once on train.
    pub refit_every: Option<usize>,
}

/// Resolved LSTM settings.
#[derive(Debug, Clone)]
pub struct LstmSettings {
    pub layers: usize,
    pub units: usize,
    pub dropout: f64,
    pub window: usize,
    pub train: TrainConfig,
}

impl LstmSettings {
    pub fn layer_units(&self) -> Vec<usize> {
        vec![self.units; self.layers]
    }

    pub fn dropout_rates(&self) -> Vec<f64> {
        vec![self.dropout; self.layers]
    }
}

/// Fully resolved and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub value_column: String,
    /// Ticker -> CSV path, resolved against the config file's directory.
    pub tickers: BTreeMap<String, PathBuf>,
    pub lstm_split: SplitSpec,
    pub arima_split: SplitSpec,
    pub arima: ArimaSettings,
    pub lstm: LstmSettings,
    /// Hash of the effective configuration (excluding the output directory),
    /// embedded in every artifact and checked when artifacts are reused.
    pub fingerprint: String,
}

fn parse_date(s: &str, key: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| Error::Config(format!("{key}: bad date {s:?}, expected YYYY-MM-DD")))
}

fn parse_split(raw: Option<RawSplit>, defaults: RawSplit, key: &str) -> Result<SplitSpec> {
    let raw = raw.unwrap_or(defaults);
    let train_end = parse_date(&raw.train_end, key)?;
    let val_end = raw
        .val_end
        .as_deref()
        .map(|s| parse_date(s, key))
        .transpose()?;
    let test_end = parse_date(&raw.test_end, key)?;
    SplitSpec::new(train_end, val_end, test_end)
}

impl RunConfig {
    /// Parse, apply CLI overrides, fingerprint, resolve paths, validate.
    pub fn load(
        path: &Path,
        seed_override: Option<u64>,
        out_override: Option<&Path>,
    ) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut raw: RawConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(seed) = seed_override {
            raw.seed = seed;
        }
        if raw.tickers.is_empty() {
            return Err(Error::Config("no tickers configured".to_string()));
        }

        let config_dir = path.parent().unwrap_or(Path::new("."));
        let out_dir = match out_override {
            Some(p) => p.to_path_buf(),
            None => config_dir.join(&raw.out_dir),
        };

        let d = match &raw.arima.d {
            toml::Value::String(s) if s == "auto" => DSetting::Auto,
            toml::Value::Integer(v) if (0..=2).contains(v) => DSetting::Fixed(*v as usize),
            other => {
                return Err(Error::Config(format!(
                    "arima.d must be \"auto\" or an integer 0..=2, got {other}"
                )))
            }
        };
        let criterion = match raw.arima.criterion.to_ascii_lowercase().as_str() {
            "aic" => Criterion::Aic,
            "bic" => Criterion::Bic,
            other => {
                return Err(Error::Config(format!(
                    "arima.criterion must be \"aic\" or \"bic\", got {other:?}"
                )))
            }
        };
        if raw.arima.p_max > 5 || raw.arima.q_max > 5 {
            return Err(Error::Config(
                "arima grid bounds p_max/q_max are capped at 5".to_string(),
            ));
        }
        let orders = raw
            .arima
            .orders
            .iter()
            .map(|&[p, d, q]| ArimaOrder::new(p, d, q))
            .collect::<Result<Vec<_>>>()?;

        if raw.lstm.layers == 0 || raw.lstm.units == 0 || raw.lstm.window == 0 {
            return Err(Error::Config(
                "lstm layers, units, and window must be positive".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&raw.lstm.dropout) {
            return Err(Error::Config("lstm.dropout must lie in [0, 1)".to_string()));
        }

        let lstm_split = parse_split(
            raw.split.lstm.clone(),
            RawSplit {
                train_end: default_lstm_train_end(),
                val_end: default_val_end(),
                test_end: default_test_end(),
            },
            "split.lstm",
        )?;
        if lstm_split.val_end.is_none() {
            return Err(Error::Config(
                "split.lstm.val_end is required (the LSTM protocol uses a validation set)"
                    .to_string(),
            ));
        }
        let arima_split = parse_split(
            raw.split.arima.clone(),
            RawSplit {
                train_end: default_arima_train_end(),
                val_end: None,
                test_end: default_test_end(),
            },
            "split.arima",
        )?;

        let mut tickers = BTreeMap::new();
        for (ticker, rel) in &raw.tickers {
            let resolved = config_dir.join(rel);
            if !resolved.is_file() {
                return Err(Error::Config(format!(
                    "ticker {ticker}: data file {} not found",
                    resolved.display()
                )));
            }
            tickers.insert(ticker.clone(), resolved);
        }

        let fingerprint = fingerprint(&raw);
        let train = TrainConfig {
            epochs: raw.lstm.epochs,
            batch_size: raw.lstm.batch_size,
            learning_rate: raw.lstm.learning_rate,
            beta1: raw.lstm.beta1,
            beta2: raw.lstm.beta2,
            epsilon: raw.lstm.epsilon,
            seed: raw.seed,
            shuffle: raw.lstm.shuffle,
        };
        train.validate()?;

        Ok(RunConfig {
            seed: raw.seed,
            out_dir,
            value_column: raw.value_column,
            tickers,
            lstm_split,
            arima_split,
            arima: ArimaSettings {
                d,
                p_max: raw.arima.p_max,
                q_max: raw.arima.q_max,
                criterion,
                orders,
                refit_every: match raw.arima.refit_every {
                    0 => None,
                    k => Some(k),
                },
            },
            lstm: LstmSettings {
                layers: raw.lstm.layers,
                units: raw.lstm.units,
                dropout: raw.lstm.dropout,
                window: raw.lstm.window,
                train,
            },
            fingerprint,
        })
    }

    /// Restrict to one ticker; errors when the name is unknown.
    pub fn select_tickers(&self, only: Option<&str>) -> Result<BTreeMap<String, PathBuf>> {
        match only {
            None => Ok(self.tickers.clone()),
            Some(name) => {
                let path = self.tickers.get(name).ok_or_else(|| {
                    Error::Config(format!("ticker {name:?} is not in the config"))
                })?;
                let mut map = BTreeMap::new();
                map.insert(name.to_string(), path.clone());
                Ok(map)
            }
        }
    }
}

/// Canonical rendering of the effective configuration, hashed into the
/// fingerprint. The output directory and any runtime ticker filter are
/// excluded: they change where artifacts live, not what they contain.
fn fingerprint(raw: &RawConfig) -> String {
    let mut canon = String::new();
    let _ = writeln!(canon, "seed={}", raw.seed);
    let _ = writeln!(canon, "value_column={}", raw.value_column);
    for (ticker, path) in &raw.tickers {
        let _ = writeln!(canon, "ticker.{ticker}={path}");
    }
    let render_split = |canon: &mut String, name: &str, split: &Option<RawSplit>| {
        if let Some(s) = split {
            let _ = writeln!(
                canon,
                "split.{name}={}/{}/{}",
                s.train_end,
                s.val_end.as_deref().unwrap_or("-"),
                s.test_end
            );
        } else {
            let _ = writeln!(canon, "split.{name}=default");
        }
    };
    render_split(&mut canon, "lstm", &raw.split.lstm);
    render_split(&mut canon, "arima", &raw.split.arima);
    let _ = writeln!(canon, "arima.d={}", raw.arima.d);
    let _ = writeln!(canon, "arima.p_max={}", raw.arima.p_max);
    let _ = writeln!(canon, "arima.q_max={}", raw.arima.q_max);
    let _ = writeln!(canon, "arima.criterion={}", raw.arima.criterion);
    let _ = writeln!(canon, "arima.orders={:?}", raw.arima.orders);
    let _ = writeln!(canon, "arima.refit_every={}", raw.arima.refit_every);
    let _ = writeln!(
        canon,
        "lstm={}/{}/{}/{}/{}/{}/{}/{}/{}/{}/{}",
        raw.lstm.layers,
        raw.lstm.units,
        raw.lstm.dropout,
        raw.lstm.window,
        raw.lstm.epochs,
        raw.lstm.batch_size,
        raw.lstm.learning_rate,
        raw.lstm.beta1,
        raw.lstm.beta2,
        raw.lstm.epsilon,
        raw.lstm.shuffle
    );

    let digest = Sha256::digest(canon.as_bytes());
    let mut hex = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_fixture_csv(dir: &Path, name: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "Date,High").unwrap();
        writeln!(f, "2018-01-02,10.0").unwrap();
        writeln!(f, "2018-01-03,11.0").unwrap();
        path
    }

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("run.toml");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn defaults_follow_the_experimental_protocol() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture_csv(dir.path(), "ALFA.csv");
        let path = write_config(dir.path(), "[tickers]\nALFA = \"ALFA.csv\"\n");
        let config = RunConfig::load(&path, None, None).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.value_column, "High");
        assert_eq!(
            config.lstm_split.train_end,
            NaiveDate::from_ymd_opt(2015, 12, 31).unwrap()
        );
        assert_eq!(
            config.lstm_split.val_end,
            Some(NaiveDate::from_ymd_opt(2017, 12, 31).unwrap())
        );
        assert_eq!(
            config.arima_split.train_end,
            NaiveDate::from_ymd_opt(2017, 12, 31).unwrap()
        );
        assert_eq!(config.lstm.layers, 3);
        assert_eq!(config.lstm.units, 100);
        assert_eq!(config.lstm.dropout, 0.1);
        assert_eq!(config.lstm.window, 60);
        assert_eq!(config.arima.d, DSetting::Auto);
        assert!(config.arima.refit_every.is_none());
    }

    #[test]
    fn missing_data_file_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), "[tickers]\nGONE = \"missing.csv\"\n");
        assert!(matches!(
            RunConfig::load(&path, None, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn overrides_change_fingerprint_only_for_seed() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture_csv(dir.path(), "ALFA.csv");
        let path = write_config(dir.path(), "[tickers]\nALFA = \"ALFA.csv\"\n");
        let base = RunConfig::load(&path, None, None).unwrap();
        let same_out = RunConfig::load(&path, None, Some(Path::new("/tmp/elsewhere"))).unwrap();
        assert_eq!(base.fingerprint, same_out.fingerprint);
        let other_seed = RunConfig::load(&path, Some(7), None).unwrap();
        assert_ne!(base.fingerprint, other_seed.fingerprint);
    }

    #[test]
    fn bad_d_and_bad_criterion_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture_csv(dir.path(), "ALFA.csv");
        let path = write_config(
            dir.path(),
            "[tickers]\nALFA = \"ALFA.csv\"\n[arima]\nd = 3\n",
        );
        assert!(matches!(
            RunConfig::load(&path, None, None),
            Err(Error::Config(_))
        ));
        let path = write_config(
            dir.path(),
            "[tickers]\nALFA = \"ALFA.csv\"\n[arima]\ncriterion = \"hqic\"\n",
        );
        assert!(matches!(
            RunConfig::load(&path, None, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ticker_filter_validates_names() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture_csv(dir.path(), "ALFA.csv");
        let path = write_config(dir.path(), "[tickers]\nALFA = \"ALFA.csv\"\n");
        let config = RunConfig::load(&path, None, None).unwrap();
        assert_eq!(config.select_tickers(Some("ALFA")).unwrap().len(), 1);
        assert!(config.select_tickers(Some("NOPE")).is_err());
        assert_eq!(config.select_tickers(None).unwrap().len(), 1);
    }
}
