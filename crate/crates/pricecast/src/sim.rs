//! Seeded generators for synthetic series: white noise, random walks, ARMA
//! processes, and the trend-plus-noise price paths used by the shipped
//! fixtures. Everything here is deterministic per seed.
//!
//! ARMA simulation follows the same sign convention as the estimator:
//! `x_t = c + sum(phi_i * x_{t-i}) + a_t + sum(theta_j * a_{t-j})`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Stable sub-seed derivation (SplitMix64 finalizer) so independent random
/// streams never depend on call order.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian white noise with standard deviation `sigma`.
pub fn white_noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// Pure random walk: cumulative sum of Gaussian innovations.
pub fn random_walk(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut level = 0.0;
    white_noise(n, sigma, seed)
        .into_iter()
        .map(|e| {
            level += e;
            level
        })
        .collect()
}

/// General ARMA process with intercept, discarding a 200-step burn-in.
pub fn arma(phi: &[f64], theta: &[f64], intercept: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
    let burn = 200;
    let total = n + burn;
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut x = Vec::with_capacity(total);
    let mut a = Vec::with_capacity(total);
    for t in 0..total {
        let shock: f64 = normal.sample(&mut rng);
        let mut value = intercept + shock;
        for (i, &p) in phi.iter().enumerate() {
            if t > i {
                value += p * x[t - 1 - i];
            }
        }
        for (j, &q) in theta.iter().enumerate() {
            if t > j {
                value += q * a[t - 1 - j];
            }
        }
        x.push(value);
        a.push(shock);
    }
    x.split_off(burn)
}

/// Zero-mean AR(1) with coefficient `phi`.
pub fn ar1(n: usize, phi: f64, sigma: f64, seed: u64) -> Vec<f64> {
    arma(&[phi], &[], 0.0, sigma, n, seed)
}

/// Noiseless sine wave.
pub fn sine(n: usize, period: f64, amplitude: f64, offset: f64) -> Vec<f64> {
    (0..n)
        .map(|t| offset + amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin())
        .collect()
}

/// Parameters for a synthetic daily price path built from three stylized
/// effects:
///
/// - drift that switches between bull and bear regimes of seeded
///   multi-month length (a piecewise trend),
/// - AR(1) noise increments whose coefficient depends on the regime
///   (momentum in bull markets, reversion in bear markets),
/// - range reversion near the trailing high/low: once the level leaves a
///   dead zone around the middle of its trailing window, it gets pulled
///   back in proportion to the excursion.
///
/// The level carries a unit root, like real prices, while the increments
/// keep structure that a single linear model averages away.
#[derive(Debug, Clone, Copy)]
pub struct PricePathParams {
    pub base: f64,
    /// Per-day drift during bull regimes.
    pub drift_up: f64,
    /// Per-day drift during bear regimes (typically negative).
    pub drift_down: f64,
    /// Regime length bounds in days.
    pub regime_min: usize,
    pub regime_max: usize,
    /// AR coefficient of the noise increments during bull regimes.
    pub bull_phi: f64,
    /// AR coefficient during bear regimes.
    pub bear_phi: f64,
    pub noise_sigma: f64,
    /// Lookback of the trailing high/low range.
    pub trailing_window: usize,
    /// Fraction of the half-range with no reversion pull.
    pub dead_zone: f64,
    /// Strength of the pull, in price units per unit of excursion beyond
    /// the dead zone.
    pub pull_strength: f64,
}

impl Default for PricePathParams {
    fn default() -> Self {
        Self {
            base: 120.0,
            drift_up: 0.12,
            drift_down: -0.1,
            regime_min: 140,
            regime_max: 350,
            bull_phi: 0.45,
            bear_phi: -0.3,
            noise_sigma: 0.45,
            trailing_window: 50,
            dead_zone: 0.3,
            pull_strength: 2.0,
        }
    }
}

/// Synthetic "highest price" path used by the shipped ticker fixtures.
pub fn price_path(n: usize, params: &PricePathParams, seed: u64) -> Vec<f64> {
    let shocks = white_noise(n, params.noise_sigma, seed);
    let mut regime_rng = seeded_rng(derive_seed(seed, 7));
    let mut bull = true;
    let mut days_left = regime_rng.random_range(params.regime_min..=params.regime_max);
    let mut noise = 0.0;
    let mut levels: Vec<f64> = Vec::with_capacity(n);
    let mut level = params.base;
    for shock in shocks {
        if days_left == 0 {
            bull = !bull;
            days_left = regime_rng.random_range(params.regime_min..=params.regime_max);
        }
        days_left -= 1;
        let (drift, phi) = if bull {
            (params.drift_up, params.bull_phi)
        } else {
            (params.drift_down, params.bear_phi)
        };

        let pull = if levels.len() >= params.trailing_window {
            let window = &levels[levels.len() - params.trailing_window..];
            let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
            let half = ((hi - lo) / 2.0).max(1e-9);
            let position = ((level - (hi + lo) / 2.0) / half).clamp(-2.0, 2.0);
            let excess = position.abs() - params.dead_zone;
            if excess > 0.0 {
                -params.pull_strength * excess * position.signum()
            } else {
                0.0
            }
        } else {
            0.0
        };

        noise = phi * noise + shock;
        level += drift + pull + noise;
        level = level.max(1.0);
        levels.push(level);
    }
    levels
}

/// Uniform draw in `[lo, hi)`, used for plausible OHLC padding columns.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}
