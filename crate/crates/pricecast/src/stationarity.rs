//! Differencing, augmented Dickey-Fuller testing, and ACF/PACF estimation
//! supporting Box-Jenkins order selection.
//!
//! The ADF regression is constant-only (no trend): differenced prices carry
//! no deterministic trend. Critical values come from the asymptotic
//! Dickey-Fuller table for that regression form; p-values are bracketed
//! qualitatively rather than interpolated.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg;

/// Asymptotic Dickey-Fuller critical values, constant-only regression.
pub const ADF_CRITICAL_1PCT: f64 = -3.43;
pub const ADF_CRITICAL_5PCT: f64 = -2.86;
pub const ADF_CRITICAL_10PCT: f64 = -2.57;

/// Significance levels the ADF result reports on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Significance {
    OnePercent,
    FivePercent,
    TenPercent,
}

impl Significance {
    pub const ALL: [Significance; 3] = [
        Significance::OnePercent,
        Significance::FivePercent,
        Significance::TenPercent,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Significance::OnePercent => "1%",
            Significance::FivePercent => "5%",
            Significance::TenPercent => "10%",
        }
    }
}

/// Outcome of an augmented Dickey-Fuller unit-root test.
#[derive(Debug, Clone)]
pub struct AdfResult {
    /// t-ratio on the lagged-level coefficient.
    pub statistic: f64,
    /// Number of lagged-difference terms chosen by AIC.
    pub lags_used: usize,
    /// Effective regression sample size.
    pub n_effective: usize,
}

impl AdfResult {
    pub fn critical_value(&self, level: Significance) -> f64 {
        match level {
            Significance::OnePercent => ADF_CRITICAL_1PCT,
            Significance::FivePercent => ADF_CRITICAL_5PCT,
            Significance::TenPercent => ADF_CRITICAL_10PCT,
        }
    }

    /// Reject the unit-root null at `level` iff the statistic falls below
    /// the critical value.
    pub fn reject_at(&self, level: Significance) -> bool {
        self.statistic < self.critical_value(level)
    }

    /// Qualitative p-value bracket for reporting.
    pub fn p_value_bracket(&self) -> &'static str {
        if self.reject_at(Significance::OnePercent) {
            "< 0.01"
        } else if self.reject_at(Significance::FivePercent) {
            "< 0.05"
        } else if self.reject_at(Significance::TenPercent) {
            "< 0.10"
        } else {
            ">= 0.10"
        }
    }

    /// Keyed text report.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "statistic = {}", self.statistic);
        let _ = writeln!(out, "lags_used = {}", self.lags_used);
        let _ = writeln!(out, "n_effective = {}", self.n_effective);
        let _ = writeln!(out, "p_value = {}", self.p_value_bracket());
        for level in Significance::ALL {
            let _ = writeln!(
                out,
                "critical_{} = {}",
                level.label().trim_end_matches('%'),
                self.critical_value(level)
            );
            let _ = writeln!(
                out,
                "reject_{} = {}",
                level.label().trim_end_matches('%'),
                self.reject_at(level)
            );
        }
        out
    }
}

/// Sample (partial) autocorrelations for lags `0..=max_lag`, with the
/// white-noise 95% confidence band `1.96 / sqrt(n)`.
#[derive(Debug, Clone)]
pub struct CorrelogramResult {
    pub coefficients: Vec<f64>,
    pub confidence_band: f64,
}

impl CorrelogramResult {
    pub fn max_lag(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// CSV rows `lag,coefficient,band` for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag,coefficient,band\n");
        for (lag, c) in self.coefficients.iter().enumerate() {
            let _ = writeln!(out, "{lag},{c},{}", self.confidence_band);
        }
        out
    }

    /// Fraction of lags `1..=max_lag` inside the confidence band.
    pub fn fraction_in_band(&self) -> f64 {
        let k = self.max_lag();
        if k == 0 {
            return 1.0;
        }
        let inside = self.coefficients[1..]
            .iter()
            .filter(|c| c.abs() <= self.confidence_band)
            .count();
        inside as f64 / k as f64
    }
}

/// Apply `d` rounds of first differencing. Output length is `len - d`.
pub fn difference(values: &[f64], d: usize) -> Result<Vec<f64>> {
    if values.len() <= d {
        return Err(Error::TooShort {
            need: d,
            got: values.len(),
        });
    }
    let mut out = values.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Default ADF lag bound: `floor(12 * (n/100)^(1/4))`.
pub fn default_adf_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Augmented Dickey-Fuller test with constant, no trend.
///
/// Estimates `dy_t = alpha + gamma*y_{t-1} + sum(beta_j * dy_{t-j}) + e_t`
/// by OLS; the statistic is the t-ratio on `gamma`. The lag order is chosen
/// by AIC over `0..=max_lag` on a common sample, then the chosen regression
/// is refit on the longest sample it allows.
pub fn adf_test(values: &[f64], max_lag: Option<usize>) -> Result<AdfResult> {
    let n = values.len();
    if n < 20 {
        return Err(Error::TooShort { need: 20, got: n });
    }
    let max_lag = max_lag.unwrap_or_else(|| default_adf_max_lag(n));
    // keep enough rows for the widest regression
    let max_lag = max_lag.min(n.saturating_sub(10) / 2);

    let dy: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();

    // regression rows for lag k, with t starting at `start` in level index
    let build = |k: usize, start: usize| -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for t in start..n {
            let mut row = Vec::with_capacity(k + 2);
            row.push(1.0);
            row.push(values[t - 1]);
            for j in 1..=k {
                row.push(dy[t - 1 - j]);
            }
            x.push(row);
            y.push(dy[t - 1]);
        }
        (x, y)
    };

    // lag selection on the common sample fixed by max_lag
    let common_start = max_lag + 1;
    let mut best: Option<(usize, f64)> = None;
    for k in 0..=max_lag {
        let (x, y) = build(k, common_start);
        let fit = match linalg::ols(&x, &y, "adf lag selection") {
            Ok(f) => f,
            Err(_) => continue,
        };
        let n_c = fit.n as f64;
        let aic = n_c * (fit.rss / n_c).max(1e-300).ln() + 2.0 * (k as f64 + 2.0);
        if best.map_or(true, |(_, b)| aic < b) {
            best = Some((k, aic));
        }
    }
    let (k, _) = best.ok_or(Error::SingularMatrix("adf lag selection"))?;

    // final regression on the longest sample for the chosen lag
    let (x, y) = build(k, k + 1);
    let fit = linalg::ols(&x, &y, "adf regression")?;
    let gamma = fit.coefficients[1];
    let se = fit.stderrs[1];
    if se <= 0.0 || !se.is_finite() {
        return Err(Error::SingularMatrix("adf regression"));
    }
    Ok(AdfResult {
        statistic: gamma / se,
        lags_used: k,
        n_effective: fit.n,
    })
}

/// Walk the differencing order up from 0 until the ADF test rejects at 5%,
/// capped at `max_d`. Returns the selected `d` and the per-level results;
/// when nothing rejects, the cap is returned.
pub fn select_d(values: &[f64], max_d: usize) -> Result<(usize, Vec<AdfResult>)> {
    let mut results = Vec::new();
    for d in 0..=max_d {
        let diffed = difference(values, d)?;
        let res = adf_test(&diffed, None)?;
        let reject = res.reject_at(Significance::FivePercent);
        results.push(res);
        if reject {
            return Ok((d, results));
        }
    }
    Ok((max_d, results))
}

fn demeaned(values: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let var: f64 = centered.iter().map(|v| v * v).sum();
    if var <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok((centered, var))
}

/// Sample autocorrelation function with the biased (1/n) denominator.
/// Lag 0 is exactly 1.
pub fn acf(values: &[f64], max_lag: usize) -> Result<CorrelogramResult> {
    let n = values.len();
    if n <= max_lag {
        return Err(Error::TooShort {
            need: max_lag,
            got: n,
        });
    }
    let (centered, var) = demeaned(values)?;
    let mut coefficients = Vec::with_capacity(max_lag + 1);
    coefficients.push(1.0);
    for k in 1..=max_lag {
        let mut s = 0.0;
        for t in 0..n - k {
            s += centered[t] * centered[t + k];
        }
        coefficients.push(s / var);
    }
    Ok(CorrelogramResult {
        coefficients,
        confidence_band: 1.96 / (n as f64).sqrt(),
    })
}

/// Partial autocorrelations by Durbin-Levinson recursion on the sample ACF.
/// Lag 0 is reported as 1; lag 1 equals the lag-1 autocorrelation.
pub fn pacf(values: &[f64], max_lag: usize) -> Result<CorrelogramResult> {
    let sample_acf = acf(values, max_lag)?;
    let r = &sample_acf.coefficients;
    let mut coefficients = vec![1.0];
    let mut prev: Vec<f64> = Vec::new();
    let mut err = 1.0_f64;
    for k in 1..=max_lag {
        let mut num = r[k];
        for j in 1..k {
            num -= prev[j - 1] * r[k - j];
        }
        let lambda = if err.abs() < 1e-15 { 0.0 } else { num / err };
        let mut next = vec![0.0; k];
        for j in 1..k {
            next[j - 1] = prev[j - 1] - lambda * prev[k - j - 1];
        }
        next[k - 1] = lambda;
        coefficients.push(lambda);
        err *= 1.0 - lambda * lambda;
        prev = next;
    }
    Ok(CorrelogramResult {
        coefficients,
        confidence_band: sample_acf.confidence_band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim;
    use proptest::prelude::*;

    #[test]
    fn difference_examples() {
        assert_eq!(difference(&[1.0, 3.0, 6.0], 1).unwrap(), vec![2.0, 3.0]);
        let x = [4.0, 7.0, 2.0];
        assert_eq!(difference(&x, 0).unwrap(), x.to_vec());
        assert_eq!(
            difference(&[2.0, 4.0, 6.0, 8.0], 1).unwrap(),
            vec![2.0, 2.0, 2.0]
        );
        assert_eq!(difference(&[2.0, 4.0, 6.0, 8.0], 2).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            difference(&[1.0, 2.0], 2),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn adf_rejects_on_differenced_price_series() {
        let prices = sim::price_path(800, &sim::PricePathParams::default(), 11);
        let diffed = difference(&prices, 1).unwrap();
        let res = adf_test(&diffed, None).unwrap();
        assert!(
            res.statistic < ADF_CRITICAL_1PCT,
            "statistic {} should reject strongly",
            res.statistic
        );
        assert!(res.reject_at(Significance::OnePercent));
    }

    #[test]
    fn adf_single_seed_calibration() {
        let walk = sim::random_walk(1000, 1.0, 3);
        let res = adf_test(&walk, None).unwrap();
        assert!(
            !res.reject_at(Significance::FivePercent),
            "random walk should not reject, statistic {}",
            res.statistic
        );

        let noise = sim::white_noise(1000, 1.0, 3);
        let res = adf_test(&noise, None).unwrap();
        assert!(
            res.reject_at(Significance::OnePercent),
            "white noise should reject at 1%, statistic {}",
            res.statistic
        );
    }

    #[test]
    fn adf_affine_invariance() {
        let x = sim::ar1(500, 0.5, 1.0, 21);
        let base = adf_test(&x, Some(4)).unwrap();
        let transformed: Vec<f64> = x.iter().map(|v| 3.5 * v + 11.0).collect();
        let shifted = adf_test(&transformed, Some(4)).unwrap();
        assert_eq!(base.lags_used, shifted.lags_used);
        assert!(
            (base.statistic - shifted.statistic).abs() < 1e-6,
            "{} vs {}",
            base.statistic,
            shifted.statistic
        );
    }

    #[test]
    fn adf_critical_values_are_increasing() {
        assert!(ADF_CRITICAL_1PCT < ADF_CRITICAL_5PCT);
        assert!(ADF_CRITICAL_5PCT < ADF_CRITICAL_10PCT);
    }

    #[test]
    fn adf_reject_flags_consistent_with_statistic() {
        let res = adf_test(&sim::white_noise(200, 1.0, 5), None).unwrap();
        for level in Significance::ALL {
            assert_eq!(
                res.reject_at(level),
                res.statistic < res.critical_value(level)
            );
        }
    }

    #[test]
    fn select_d_recommends_one_for_random_walk() {
        let walk = sim::random_walk(1000, 1.0, 17);
        let (d, reports) = select_d(&walk, 2).unwrap();
        assert_eq!(d, 1);
        assert_eq!(reports.len(), 2);
        assert!(!reports[0].reject_at(Significance::FivePercent));
        assert!(reports[1].reject_at(Significance::FivePercent));
    }

    #[test]
    fn acf_lag0_is_one() {
        let res = acf(&[1.0, 4.0, 2.0, 8.0, 5.0], 3).unwrap();
        assert_eq!(res.coefficients[0], 1.0);
        assert!(matches!(acf(&[3.0, 3.0, 3.0], 2), Err(Error::ConstantSeries)));
    }

    #[test]
    fn acf_matches_ar1_closed_form() {
        let phi: f64 = 0.8;
        let x = sim::ar1(5000, phi, 1.0, 101);
        let res = acf(&x, 5).unwrap();
        for k in 1..=5 {
            let expected = phi.powi(k as i32);
            assert!(
                (res.coefficients[k] - expected).abs() < 0.05,
                "lag {k}: {} vs {expected}",
                res.coefficients[k]
            );
        }
    }

    #[test]
    fn acf_of_white_noise_stays_in_band() {
        let x = sim::white_noise(1000, 1.0, 55);
        let res = acf(&x, 20).unwrap();
        let inside = res.coefficients[1..]
            .iter()
            .filter(|c| c.abs() <= res.confidence_band)
            .count();
        assert!(inside >= 18, "only {inside}/20 lags inside the band");
    }

    #[test]
    fn pacf_lag1_equals_acf_lag1() {
        let x = sim::arma(&[0.4], &[0.3], 0.5, 1.0, 400, 77);
        let a = acf(&x, 10).unwrap();
        let p = pacf(&x, 10).unwrap();
        assert!((a.coefficients[1] - p.coefficients[1]).abs() < 1e-12);
        assert_eq!(p.coefficients[0], 1.0);
    }

    #[test]
    fn pacf_cuts_off_for_ar1() {
        let x = sim::ar1(5000, 0.7, 1.0, 31);
        let p = pacf(&x, 10).unwrap();
        assert!((p.coefficients[1] - 0.7).abs() < 0.05, "{}", p.coefficients[1]);
        let inside = p.coefficients[2..=10]
            .iter()
            .filter(|c| c.abs() <= p.confidence_band)
            .count();
        assert!(inside >= 8, "only {inside}/9 tail lags inside the band");
    }

    #[test]
    fn ma1_acf_cuts_off_while_pacf_decays() {
        let x = sim::arma(&[], &[0.6], 0.0, 1.0, 5000, 41);
        let a = acf(&x, 10).unwrap();
        let p = pacf(&x, 10).unwrap();
        let inside = a.coefficients[2..=10]
            .iter()
            .filter(|c| c.abs() <= a.confidence_band)
            .count();
        assert!(inside >= 8, "ACF tail: only {inside}/9 inside the band");
        assert!(p.coefficients[1].abs() > p.confidence_band);
        assert!(p.coefficients[2].abs() > p.confidence_band);
        assert!(p.coefficients[2].abs() < p.coefficients[1].abs());
    }

    #[test]
    fn correlogram_csv_has_band_column() {
        let res = acf(&sim::white_noise(100, 1.0, 1), 3).unwrap();
        let csv = res.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "lag,coefficient,band");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,1,"));
    }

    proptest! {
        #[test]
        fn differencing_composes(values in prop::collection::vec(-100.0f64..100.0, 6..40),
                                 d1 in 0usize..3, d2 in 0usize..3) {
            prop_assume!(values.len() > d1 + d2);
            let once = difference(&values, d1 + d2).unwrap();
            let twice = difference(&difference(&values, d1).unwrap(), d2).unwrap();
            prop_assert_eq!(once.len(), twice.len());
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
