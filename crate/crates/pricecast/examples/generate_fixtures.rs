//! Regenerates the CSV fixtures under `fixtures/`: four synthetic daily
//! price series shaped like Yahoo Finance exports, a noiseless sine series,
//! and the default run configuration. Deterministic; run it after changing
//! the generator parameters.
//!
//! ```bash
//! cargo run -p pricecast --example generate_fixtures
//! ```

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use pricecast::sim::{self, PricePathParams};

fn weekdays(from: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut dates = Vec::with_capacity(count);
    let mut day = from;
    while dates.len() < count {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(day);
        }
        day = day.succ_opt().expect("date range");
    }
    dates
}

fn weekdays_between(from: NaiveDate, through: NaiveDate) -> Vec<NaiveDate> {
    let mut dates = Vec::new();
    let mut day = from;
    while day <= through {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(day);
        }
        day = day.succ_opt().expect("date range");
    }
    dates
}

fn ohlc_csv(dates: &[NaiveDate], highs: &[f64], seed: u64) -> String {
    let mut rng = sim::seeded_rng(sim::derive_seed(seed, 9));
    let mut out = String::from("Date,Open,High,Low,Close,Adj Close,Volume\n");
    for (date, &high) in dates.iter().zip(highs) {
        let low = high * (1.0 - sim::uniform(&mut rng, 0.004, 0.02));
        let open = low + (high - low) * sim::uniform(&mut rng, 0.0, 1.0);
        let close = low + (high - low) * sim::uniform(&mut rng, 0.0, 1.0);
        let volume = (1.0e6 * sim::uniform(&mut rng, 0.6, 1.8)).round() as u64;
        let _ = writeln!(
            out,
            "{date},{open:.6},{high:.6},{low:.6},{close:.6},{close:.6},{volume}"
        );
    }
    out
}

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&fixtures).expect("create fixtures dir");

    let start = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
    let end = NaiveDate::from_ymd_opt(2018, 12, 31).unwrap();
    let dates = weekdays_between(start, end);
    println!("{} trading days from {start} to {end}", dates.len());

    let tickers: [(&str, u64, PricePathParams); 4] = [
        (
            "ALFA",
            101,
            PricePathParams {
                base: 120.0,
                ..PricePathParams::default()
            },
        ),
        (
            "BRVO",
            202,
            PricePathParams {
                base: 80.0,
                drift_up: 0.1,
                drift_down: -0.08,
                regime_min: 170,
                regime_max: 380,
                noise_sigma: 0.4,
                pull_strength: 1.8,
                ..PricePathParams::default()
            },
        ),
        (
            "CHLO",
            303,
            PricePathParams {
                base: 150.0,
                drift_up: 0.16,
                drift_down: -0.14,
                regime_min: 150,
                regime_max: 360,
                noise_sigma: 0.6,
                pull_strength: 2.6,
                ..PricePathParams::default()
            },
        ),
        (
            "DLTA",
            404,
            PricePathParams {
                base: 60.0,
                drift_up: 0.08,
                drift_down: -0.065,
                regime_min: 160,
                regime_max: 420,
                noise_sigma: 0.32,
                pull_strength: 1.4,
                ..PricePathParams::default()
            },
        ),
    ];

    for (ticker, seed, params) in &tickers {
        let highs = sim::price_path(dates.len(), params, *seed);
        let path = fixtures.join(format!("{ticker}.csv"));
        std::fs::write(&path, ohlc_csv(&dates, &highs, *seed)).expect("write fixture");
        println!("wrote {}", path.display());
    }

    // noiseless sine series for learnability checks
    let sine_dates = weekdays(start, 2000);
    let sine = sim::sine(2000, 50.0, 30.0, 100.0);
    let path = fixtures.join("SINE.csv");
    std::fs::write(&path, ohlc_csv(&sine_dates, &sine, 777)).expect("write sine fixture");
    println!("wrote {}", path.display());

    let desk = r#"# Default run configuration over the shipped synthetic fixtures.
# Dates follow the reference protocol; the LSTM architecture matches the
# 3x100 stack with dropout 0.1 after each layer.

seed = 42
out_dir = "../out"
value_column = "High"

[tickers]
ALFA = "ALFA.csv"
BRVO = "BRVO.csv"
CHLO = "CHLO.csv"
DLTA = "DLTA.csv"

[split.lstm]
train_end = "2015-12-31"
val_end = "2017-12-31"
test_end = "2018-12-31"

[split.arima]
train_end = "2017-12-31"
test_end = "2018-12-31"

[arima]
d = "auto"
p_max = 3
q_max = 3
criterion = "bic"
orders = []     # empty: backtest the grid-search best order
refit_every = 0

[lstm]
layers = 3
units = 100
dropout = 0.1
window = 60
epochs = 50
batch_size = 32
learning_rate = 0.001
beta1 = 0.9
beta2 = 0.999
epsilon = 1e-8
shuffle = true
"#;
    let path = fixtures.join("desk.toml");
    std::fs::write(&path, desk).expect("write config");
    println!("wrote {}", path.display());

    // small config for quick smoke runs: one ticker, desk-scale network
    let quick = r#"# Desk-scale smoke configuration: one ticker, small network.

seed = 42
out_dir = "../out-quick"
value_column = "High"

[tickers]
ALFA = "ALFA.csv"

[arima]
d = "auto"
p_max = 2
q_max = 2
criterion = "bic"

[lstm]
layers = 2
units = 12
dropout = 0.1
window = 60
epochs = 6
batch_size = 32
learning_rate = 0.005
"#;
    let path = fixtures.join("quick.toml");
    std::fs::write(&path, quick).expect("write config");
    println!("wrote {}", path.display());
}
