//! ARMA/ARIMA estimation by conditional sum of squares, information-criterion
//! order selection, model diagnostics, and rolling one-step forecasting.
//!
//! The model uses the additive MA sign convention:
//!
//! ```text
//! x_t = c + phi_1*x_{t-1} + ... + phi_p*x_{t-p}
//!         + a_t + theta_1*a_{t-1} + ... + theta_q*a_{t-q}
//! ```
//!
//! where `x` is the series after `d` rounds of differencing. Estimation
//! minimizes the conditional sum of squared one-step residuals with
//! pre-sample innovations fixed at zero, via derivative-free simplex search
//! restarted from three seeded initial points. The Gaussian CSS likelihood
//! backs AIC/BIC; standard errors come from the numerical Hessian of the
//! CSS objective.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::optim::{self, NelderMeadConfig};
use crate::stationarity::{self, CorrelogramResult};

/// Model orders (p, d, q). Differencing is capped at 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        if d > 2 {
            return Err(Error::Config(format!(
                "differencing order d={d} exceeds the cap of 2"
            )));
        }
        Ok(Self { p, d, q })
    }

    /// Parameters counted by the information criteria: AR and MA
    /// coefficients plus intercept and innovation variance.
    pub fn criterion_params(&self) -> usize {
        self.p + self.q + 2
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

/// A fitted ARIMA model.
#[derive(Debug, Clone, PartialEq)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub intercept: f64,
    pub sigma2: f64,
    /// Residual count backing sigma2 and the criteria: differenced length
    /// minus p.
    pub n_effective: usize,
    pub loglik: f64,
    /// Standard errors for [phi.., theta.., intercept], when the Hessian
    /// inverted cleanly.
    pub stderrs: Option<Vec<f64>>,
    /// AR polynomial roots outside the unit circle.
    pub stationary: bool,
    /// MA polynomial roots outside the unit circle.
    pub invertible: bool,
}

/// Which information criterion drives a grid search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Aic,
    Bic,
}

impl Criterion {
    pub fn value(&self, model: &ArimaModel) -> f64 {
        match self {
            Criterion::Aic => aic(model),
            Criterion::Bic => bic(model),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
        }
    }
}

/// Criterion values over a (p, q) grid; cells that failed to fit are absent.
#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub matrix: Vec<Vec<Option<f64>>>,
    pub best_order: ArimaOrder,
    pub best_value: f64,
    pub criterion: Criterion,
}

impl GridSearchResult {
    /// CSV layout for heatmap rendering: one row per p, one column per q.
    pub fn to_csv(&self) -> String {
        let q_max = self.matrix.first().map_or(0, |row| row.len());
        let mut out = String::from("p\\q");
        for q in 0..q_max {
            let _ = write!(out, ",{q}");
        }
        out.push('\n');
        for (p, row) in self.matrix.iter().enumerate() {
            let _ = write!(out, "{p}");
            for cell in row {
                match cell {
                    Some(v) => {
                        let _ = write!(out, ",{v}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Akaike information criterion: `2k - 2*loglik`.
pub fn aic(model: &ArimaModel) -> f64 {
    aic_value(model.loglik, model.order.criterion_params())
}

pub fn aic_value(loglik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

/// Bayesian information criterion: `k*ln(n) - 2*loglik`.
pub fn bic(model: &ArimaModel) -> f64 {
    bic_value(model.loglik, model.order.criterion_params(), model.n_effective as f64)
}

pub fn bic_value(loglik: f64, k: usize, n_effective: f64) -> f64 {
    k as f64 * n_effective.ln() - 2.0 * loglik
}

/// One-step residual recursion on an already-differenced series. Entries
/// before index p are zero (pre-sample innovations at their mean).
fn residuals_on_diffed(phi: &[f64], theta: &[f64], intercept: f64, diffed: &[f64]) -> Vec<f64> {
    let p = phi.len();
    let n = diffed.len();
    let mut a = vec![0.0; n];
    for t in p..n {
        let mut pred = intercept;
        for (i, &coef) in phi.iter().enumerate() {
            pred += coef * diffed[t - 1 - i];
        }
        for (j, &coef) in theta.iter().enumerate() {
            if t >= p + 1 + j {
                pred += coef * a[t - 1 - j];
            }
        }
        a[t] = diffed[t] - pred;
    }
    a
}

/// Conditional-sum-of-squares residuals of a model on a level series.
/// Applies the model's differencing first; the residual count equals the
/// differenced length minus p.
pub fn css_residuals(model: &ArimaModel, values: &[f64]) -> Result<Vec<f64>> {
    let diffed = stationarity::difference(values, model.order.d)?;
    let need = model.order.p + model.order.q;
    if diffed.len() <= need {
        return Err(Error::TooShort {
            need,
            got: diffed.len(),
        });
    }
    let a = residuals_on_diffed(&model.phi, &model.theta, model.intercept, &diffed);
    Ok(a[model.order.p..].to_vec())
}

fn sum_of_squares(phi: &[f64], theta: &[f64], intercept: f64, diffed: &[f64]) -> f64 {
    let p = phi.len();
    let a = residuals_on_diffed(phi, theta, intercept, diffed);
    let ssr: f64 = a[p..].iter().map(|v| v * v).sum();
    if ssr.is_finite() {
        ssr
    } else {
        1e300
    }
}

fn unpack(params: &[f64], p: usize, q: usize) -> (&[f64], &[f64], f64) {
    (&params[..p], &params[p..p + q], params[p + q])
}

/// Reflection coefficients via the reverse Levinson-Durbin recursion: the
/// polynomial `1 - c_1 z - ... - c_m z^m` has all roots outside the unit
/// circle iff every reflection coefficient has modulus below one.
fn roots_outside_unit_circle(coefficients: &[f64]) -> bool {
    let mut a = coefficients.to_vec();
    while let Some(&k) = a.last() {
        if !k.is_finite() || k.abs() >= 1.0 {
            return false;
        }
        let m = a.len();
        if m == 1 {
            break;
        }
        let denom = 1.0 - k * k;
        let prev: Vec<f64> = (0..m - 1).map(|i| (a[i] + k * a[m - 2 - i]) / denom).collect();
        a = prev;
    }
    true
}

/// Yule-Walker AR(p) start values from the sample ACF (Durbin-Levinson).
fn yule_walker_start(diffed: &[f64], p: usize) -> Vec<f64> {
    if p == 0 {
        return Vec::new();
    }
    let acf = match stationarity::acf(diffed, p) {
        Ok(r) => r.coefficients,
        Err(_) => return vec![0.0; p],
    };
    let mut a: Vec<f64> = Vec::new();
    let mut err = 1.0_f64;
    for k in 1..=p {
        let mut num = acf[k];
        for j in 1..k {
            num -= a[j - 1] * acf[k - j];
        }
        let lambda = if err.abs() < 1e-15 { 0.0 } else { num / err };
        let mut next = vec![0.0; k];
        for j in 1..k {
            next[j - 1] = a[j - 1] - lambda * a[k - j - 1];
        }
        next[k - 1] = lambda;
        err *= 1.0 - lambda * lambda;
        a = next;
    }
    if a.iter().all(|v| v.is_finite()) {
        a
    } else {
        vec![0.0; p]
    }
}

/// Fit an ARIMA model by conditional sum of squares.
pub fn fit(values: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    let diffed = stationarity::difference(values, order.d)?;
    let (p, q) = (order.p, order.q);
    let min_len = 10 * (p + q + 1);
    if diffed.len() < min_len {
        return Err(Error::TooShort {
            need: min_len,
            got: diffed.len(),
        });
    }
    let n = diffed.len();
    let mean = diffed.iter().sum::<f64>() / n as f64;

    let (params, ssr) = if p == 0 && q == 0 {
        let ssr = sum_of_squares(&[], &[], mean, &diffed);
        (vec![mean], ssr)
    } else {
        let dim = p + q + 1;
        let objective = |params: &[f64]| {
            let (phi, theta, intercept) = unpack(params, p, q);
            sum_of_squares(phi, theta, intercept, &diffed)
        };

        let yw = yule_walker_start(&diffed, p);
        let yw_intercept = mean * (1.0 - yw.iter().sum::<f64>());
        let mut starts: Vec<Vec<f64>> = Vec::with_capacity(3);
        let mut zeros = vec![0.0; dim];
        zeros[dim - 1] = mean;
        starts.push(zeros);
        let mut yw_start = vec![0.0; dim];
        yw_start[..p].copy_from_slice(&yw);
        yw_start[dim - 1] = yw_intercept;
        starts.push(yw_start.clone());
        let mut rng = crate::sim::seeded_rng(0x5EED);
        let perturbed: Vec<f64> = yw_start
            .iter()
            .map(|v| v + rng.random_range(-0.05..0.05))
            .collect();
        starts.push(perturbed);

        let config = NelderMeadConfig {
            max_iterations: 2000,
            tolerance: 1e-8,
            initial_step: 0.1,
        };
        let mut best: Option<optim::NelderMeadResult> = None;
        for start in &starts {
            let run = optim::nelder_mead(objective, start, &config);
            if best.as_ref().map_or(true, |b| run.value < b.value) {
                best = Some(run);
            }
        }
        let best = best.unwrap();
        if !best.converged {
            return Err(Error::NonConvergence {
                iterations: best.iterations,
                objective: best.value,
            });
        }
        (best.point, best.value)
    };

    let n_effective = n - p;
    let sigma2 = ssr / n_effective as f64;
    if sigma2 <= 1e-300 || !sigma2.is_finite() {
        return Err(Error::ConstantSeries);
    }
    // loglik is scaled by the full differenced length so criterion values
    // stay comparable across orders that condition on different p
    let loglik = -0.5 * n as f64 * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0);

    let (phi, theta, intercept) = unpack(&params, p, q);
    let phi = phi.to_vec();
    let theta = theta.to_vec();

    let objective = |candidate: &[f64]| {
        let (phi, theta, intercept) = unpack(candidate, p, q);
        sum_of_squares(phi, theta, intercept, &diffed)
    };
    let stderrs = optim::css_stderrs(objective, &params, sigma2).ok();

    let neg_theta: Vec<f64> = theta.iter().map(|v| -v).collect();
    Ok(ArimaModel {
        order,
        stationary: roots_outside_unit_circle(&phi),
        invertible: roots_outside_unit_circle(&neg_theta),
        phi,
        theta,
        intercept,
        sigma2,
        n_effective,
        loglik,
        stderrs,
    })
}

/// Fit every (p, q) cell up to the given bounds and pick the order that
/// minimizes the criterion. Ties within 1e-9 prefer smaller p+q, then
/// smaller p.
pub fn grid_search(
    values: &[f64],
    p_max: usize,
    q_max: usize,
    d: usize,
    criterion: Criterion,
) -> Result<GridSearchResult> {
    if p_max > 5 || q_max > 5 {
        return Err(Error::Config(format!(
            "grid bounds p_max={p_max}, q_max={q_max} exceed the cap of 5"
        )));
    }
    let mut matrix = vec![vec![None; q_max + 1]; p_max + 1];
    let mut best: Option<(ArimaOrder, f64)> = None;
    for p in 0..=p_max {
        for q in 0..=q_max {
            let order = ArimaOrder::new(p, d, q)?;
            let value = match fit(values, order) {
                Ok(model) => criterion.value(&model),
                Err(_) => continue,
            };
            matrix[p][q] = Some(value);
            let better = match &best {
                None => true,
                Some((b_order, b_value)) => {
                    if value < b_value - 1e-9 {
                        true
                    } else if (value - b_value).abs() <= 1e-9 {
                        let (total, b_total) = (p + q, b_order.p + b_order.q);
                        total < b_total || (total == b_total && p < b_order.p)
                    } else {
                        false
                    }
                }
            };
            if better {
                best = Some((order, value));
            }
        }
    }
    let (best_order, best_value) = best.ok_or(Error::AllCellsFailed {
        cells: (p_max + 1) * (q_max + 1),
    })?;
    Ok(GridSearchResult {
        matrix,
        best_order,
        best_value,
        criterion,
    })
}

/// Per-coefficient significance test.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTest {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub t_stat: f64,
    pub significant_at_5pct: bool,
}

/// t-ratios for every estimated coefficient, in [phi.., theta.., intercept]
/// order. Significance is |t| > 1.96.
pub fn t_test(model: &ArimaModel) -> Result<Vec<CoefficientTest>> {
    let stderrs = model
        .stderrs
        .as_ref()
        .ok_or(Error::MissingStderrs("hessian did not converge"))?;
    let mut names: Vec<String> = Vec::new();
    let mut estimates: Vec<f64> = Vec::new();
    for (i, &v) in model.phi.iter().enumerate() {
        names.push(format!("phi{}", i + 1));
        estimates.push(v);
    }
    for (j, &v) in model.theta.iter().enumerate() {
        names.push(format!("theta{}", j + 1));
        estimates.push(v);
    }
    names.push("intercept".to_string());
    estimates.push(model.intercept);
    if stderrs.len() != estimates.len() {
        return Err(Error::MissingStderrs("stderr vector has wrong length"));
    }
    Ok(names
        .into_iter()
        .zip(estimates)
        .zip(stderrs)
        .map(|((name, estimate), &stderr)| {
            let t_stat = if stderr > 0.0 { estimate / stderr } else { 0.0 };
            CoefficientTest {
                name,
                estimate,
                stderr,
                t_stat,
                significant_at_5pct: t_stat.abs() > 1.96,
            }
        })
        .collect())
}

/// Residual randomness check: ACF of the CSS residuals with white-noise
/// bands. Passes when at least 90% of lags 1..=max_lag stay inside.
pub fn residual_diagnostics(
    model: &ArimaModel,
    values: &[f64],
    max_lag: usize,
) -> Result<(CorrelogramResult, bool)> {
    let residuals = css_residuals(model, values)?;
    let correlogram = stationarity::acf(&residuals, max_lag)?;
    let pass = correlogram.fraction_in_band() >= 0.9;
    Ok((correlogram, pass))
}

/// One-step-ahead conditional expectation given the level history, with the
/// `d` integrations undone.
pub fn forecast_one_step(model: &ArimaModel, history: &[f64]) -> Result<f64> {
    let (p, d) = (model.order.p, model.order.d);
    if history.len() < p + d + 1 {
        return Err(Error::TooShort {
            need: p + d,
            got: history.len(),
        });
    }
    let diffed = stationarity::difference(history, d)?;
    let n = diffed.len();
    if n < p {
        return Err(Error::TooShort { need: p, got: n });
    }
    let a = residuals_on_diffed(&model.phi, &model.theta, model.intercept, &diffed);

    let mut pred = model.intercept;
    for (i, &coef) in model.phi.iter().enumerate() {
        pred += coef * diffed[n - 1 - i];
    }
    for (j, &coef) in model.theta.iter().enumerate() {
        if n >= p + 1 + j {
            pred += coef * a[n - 1 - j];
        }
    }

    // undo differencing: f_{k-1} = f_k + last value of the (k-1)-diff series
    let mut level = pred;
    for k in (0..d).rev() {
        let series_k = stationarity::difference(history, k)?;
        level += series_k[series_k.len() - 1];
    }
    Ok(level)
}

/// Rolling one-step forecasts over a test segment: each step conditions on
/// all actuals observed so far (train plus preceding test actuals). With
/// `refit_every = Some(k)` the coefficients are re-estimated every k steps;
/// `None` keeps the parameters fixed, matching the single-model protocol.
pub fn rolling_forecast(
    model: &ArimaModel,
    train: &[f64],
    test: &[f64],
    refit_every: Option<usize>,
) -> Result<Vec<f64>> {
    let mut current = model.clone();
    let mut history = train.to_vec();
    let mut predictions = Vec::with_capacity(test.len());
    for (idx, &actual) in test.iter().enumerate() {
        if let Some(k) = refit_every {
            if k > 0 && idx > 0 && idx % k == 0 {
                current = fit(&history, current.order)?;
            }
        }
        predictions.push(forecast_one_step(&current, &history)?);
        history.push(actual);
    }
    Ok(predictions)
}

fn format_coefficients(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_coefficients(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Checkpoint(format!("bad coefficient {t:?}")))
        })
        .collect()
}

impl ArimaModel {
    /// Keyed text checkpoint, stable byte-for-byte for identical models.
    pub fn to_text(&self, fingerprint: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format = arima-model-v1");
        let _ = writeln!(out, "fingerprint = {fingerprint}");
        let _ = writeln!(out, "p = {}", self.order.p);
        let _ = writeln!(out, "d = {}", self.order.d);
        let _ = writeln!(out, "q = {}", self.order.q);
        let _ = writeln!(out, "phi = {}", format_coefficients(&self.phi));
        let _ = writeln!(out, "theta = {}", format_coefficients(&self.theta));
        let _ = writeln!(out, "intercept = {}", self.intercept);
        let _ = writeln!(out, "sigma2 = {}", self.sigma2);
        let _ = writeln!(out, "n_effective = {}", self.n_effective);
        let _ = writeln!(out, "loglik = {}", self.loglik);
        let _ = writeln!(
            out,
            "stderrs = {}",
            self.stderrs.as_deref().map(format_coefficients).unwrap_or_default()
        );
        let _ = writeln!(out, "stationary = {}", self.stationary);
        let _ = writeln!(out, "invertible = {}", self.invertible);
        out
    }

    /// Parse a checkpoint produced by [`ArimaModel::to_text`]. Returns the
    /// model and the fingerprint it was written under.
    pub fn from_text(text: &str) -> Result<(ArimaModel, String)> {
        let mut map = std::collections::BTreeMap::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Checkpoint(format!("bad line {line:?}")))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |key: &str| -> Result<&String> {
            map.get(key)
                .ok_or_else(|| Error::Checkpoint(format!("missing key {key:?}")))
        };
        if get("format")? != "arima-model-v1" {
            return Err(Error::Checkpoint(format!(
                "unsupported format {:?}",
                get("format")?
            )));
        }
        let parse_usize = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad integer for {key:?}")))
        };
        let parse_f64 = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad number for {key:?}")))
        };
        let parse_bool = |key: &str| -> Result<bool> {
            get(key)?
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad boolean for {key:?}")))
        };
        let order = ArimaOrder::new(parse_usize("p")?, parse_usize("d")?, parse_usize("q")?)?;
        let stderr_text = get("stderrs")?;
        let stderrs = if stderr_text.is_empty() {
            None
        } else {
            Some(parse_coefficients(stderr_text)?)
        };
        let model = ArimaModel {
            order,
            phi: parse_coefficients(get("phi")?)?,
            theta: parse_coefficients(get("theta")?)?,
            intercept: parse_f64("intercept")?,
            sigma2: parse_f64("sigma2")?,
            n_effective: parse_usize("n_effective")?,
            loglik: parse_f64("loglik")?,
            stderrs,
            stationary: parse_bool("stationary")?,
            invertible: parse_bool("invertible")?,
        };
        if model.phi.len() != model.order.p || model.theta.len() != model.order.q {
            return Err(Error::Checkpoint(
                "coefficient counts disagree with the stated order".to_string(),
            ));
        }
        Ok((model, get("fingerprint")?.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim;

    fn order(p: usize, d: usize, q: usize) -> ArimaOrder {
        ArimaOrder::new(p, d, q).unwrap()
    }

    fn bare_model(ord: ArimaOrder, phi: Vec<f64>, theta: Vec<f64>, intercept: f64) -> ArimaModel {
        ArimaModel {
            order: ord,
            phi,
            theta,
            intercept,
            sigma2: 1.0,
            n_effective: 100,
            loglik: 0.0,
            stderrs: None,
            stationary: true,
            invertible: true,
        }
    }

    #[test]
    fn css_residuals_mean_model_demeans() {
        let values = [1.0, 2.0, 6.0, 3.0];
        let mean = values.iter().sum::<f64>() / 4.0;
        let model = bare_model(order(0, 0, 0), vec![], vec![], mean);
        let res = css_residuals(&model, &values).unwrap();
        let expected: Vec<f64> = values.iter().map(|v| v - mean).collect();
        assert_eq!(res, expected);
    }

    #[test]
    fn css_residuals_ar1_with_zero_phi_shifts_by_one() {
        let values = [1.0, 2.0, 6.0, 3.0];
        let mean = 3.0;
        let model = bare_model(order(1, 0, 0), vec![0.0], vec![], mean);
        let res = css_residuals(&model, &values).unwrap();
        let expected: Vec<f64> = values[1..].iter().map(|v| v - mean).collect();
        assert_eq!(res, expected);
        assert_eq!(res.len(), values.len() - 1);
    }

    #[test]
    fn css_residuals_ar1_matches_hand_unrolled_recursion() {
        // demeaned [1,2,3] = [-1,0,1]; a1 = 0 - 0.5*(-1) = 0.5; a2 = 1 - 0.5*0 = 1
        let model = bare_model(order(1, 0, 0), vec![0.5], vec![], 0.0);
        let res = css_residuals(&model, &[-1.0, 0.0, 1.0]).unwrap();
        assert!((res[0] - 0.5).abs() < 1e-12);
        assert!((res[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_mean_model_closed_form() {
        let values = sim::white_noise(500, 2.0, 4);
        let model = fit(&values, order(0, 0, 0)).unwrap();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        assert!((model.intercept - mean).abs() < 1e-12);
        assert!((model.sigma2 - var).abs() < 1e-9);
    }

    #[test]
    fn fit_recovers_ar1_coefficient() {
        let values = sim::ar1(2000, 0.7, 1.0, 42);
        let model = fit(&values, order(1, 0, 0)).unwrap();
        assert!(
            model.phi[0] > 0.62 && model.phi[0] < 0.78,
            "phi = {}",
            model.phi[0]
        );
        assert!(model.stationary);
    }

    #[test]
    fn fit_recovers_arma11_coefficients() {
        let values = sim::arma(&[0.5], &[0.4], 0.0, 1.0, 4000, 7);
        let model = fit(&values, order(1, 0, 1)).unwrap();
        assert!(
            model.phi[0] > 0.4 && model.phi[0] < 0.6,
            "phi = {}",
            model.phi[0]
        );
        assert!(
            model.theta[0] > 0.3 && model.theta[0] < 0.5,
            "theta = {}",
            model.theta[0]
        );
    }

    #[test]
    fn aic_bic_plug_in_values() {
        let mut model = bare_model(order(1, 0, 0), vec![0.5], vec![], 0.0);
        model.loglik = 0.0;
        // k = p + q + 2 = 3
        assert_eq!(aic(&model), 6.0);
        assert!((bic_value(0.0, 3, std::f64::consts::E.powi(2)) - 6.0).abs() < 1e-12);

        let mut larger = bare_model(order(2, 0, 0), vec![0.1, 0.1], vec![], 0.0);
        larger.loglik = 0.0;
        assert_eq!(aic(&larger) - aic(&model), 2.0);
    }

    #[test]
    fn bic_penalizes_harder_than_aic_past_e_squared() {
        let mut model = bare_model(order(1, 0, 1), vec![0.2], vec![0.1], 0.0);
        model.loglik = -50.0;
        model.n_effective = 8; // > e^2
        assert!(bic(&model) > aic(&model));
        model.n_effective = 7; // < e^2
        assert!(bic(&model) < aic(&model));
    }

    #[test]
    fn aic_prefers_white_noise_over_ar3_overfit() {
        let mut wins = 0;
        for seed in 0..50 {
            let values = sim::white_noise(400, 1.0, 1000 + seed);
            let white = fit(&values, order(0, 0, 0)).unwrap();
            let over = fit(&values, order(3, 0, 0)).unwrap();
            if aic(&white) < aic(&over) {
                wins += 1;
            }
        }
        assert!(wins >= 40, "white noise won only {wins}/50");
    }

    #[test]
    fn grid_matrix_dimensions_and_best_cell() {
        let values = sim::ar1(600, 0.6, 1.0, 12);
        let result = grid_search(&values, 2, 2, 0, Criterion::Bic).unwrap();
        assert_eq!(result.matrix.len(), 3);
        assert!(result.matrix.iter().all(|row| row.len() == 3));
        let min = result
            .matrix
            .iter()
            .flatten()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!((result.best_value - min).abs() < 1e-12);
        assert!(result.to_csv().starts_with("p\\q,0,1,2\n"));
    }

    #[test]
    fn grid_selects_ar1_on_ar1_data() {
        let values = sim::ar1(3000, 0.7, 1.0, 3);
        let result = grid_search(&values, 3, 3, 0, Criterion::Bic).unwrap();
        assert_eq!((result.best_order.p, result.best_order.q), (1, 0));
    }

    #[test]
    fn grid_rejects_oversized_bounds() {
        assert!(matches!(
            grid_search(&[0.0; 100], 6, 2, 0, Criterion::Bic),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn t_test_plug_in_cases() {
        let mut model = bare_model(order(1, 0, 0), vec![1.0], vec![], 0.0);
        model.stderrs = Some(vec![0.5, 1.0]);
        let tests = t_test(&model).unwrap();
        assert_eq!(tests[0].name, "phi1");
        assert_eq!(tests[0].t_stat, 2.0);
        assert!(tests[0].significant_at_5pct);
        assert_eq!(tests[1].name, "intercept");
        assert_eq!(tests[1].t_stat, 0.0);
        assert!(!tests[1].significant_at_5pct);

        model.stderrs = None;
        assert!(matches!(t_test(&model), Err(Error::MissingStderrs(_))));
    }

    #[test]
    fn t_test_flags_ar1_coefficient_significant() {
        let mut significant = 0;
        for seed in 0..50 {
            let values = sim::ar1(2000, 0.7, 1.0, 2000 + seed);
            let model = fit(&values, order(1, 0, 0)).unwrap();
            let tests = t_test(&model).unwrap();
            if tests[0].significant_at_5pct {
                significant += 1;
            }
        }
        assert!(significant >= 48, "phi significant in only {significant}/50");
    }

    #[test]
    fn residual_diagnostics_pass_and_fail() {
        let mut passes = 0;
        let mut fails = 0;
        for seed in 0..50 {
            let values = sim::ar1(800, 0.9, 1.0, 3000 + seed);
            let good = fit(&values, order(1, 0, 0)).unwrap();
            if residual_diagnostics(&good, &values, 20).unwrap().1 {
                passes += 1;
            }
            let bad = fit(&values, order(0, 0, 0)).unwrap();
            if !residual_diagnostics(&bad, &values, 20).unwrap().1 {
                fails += 1;
            }
        }
        assert!(passes >= 45, "well-specified fit passed only {passes}/50");
        assert!(fails >= 45, "misspecified fit failed only {fails}/50");
    }

    #[test]
    fn residual_acf_lag0_is_one() {
        let values = sim::ar1(500, 0.5, 1.0, 9);
        let model = fit(&values, order(1, 0, 0)).unwrap();
        let (correlogram, _) = residual_diagnostics(&model, &values, 10).unwrap();
        assert_eq!(correlogram.coefficients[0], 1.0);
    }

    #[test]
    fn forecast_constant_model_returns_intercept() {
        let model = bare_model(order(0, 0, 0), vec![], vec![], 4.25);
        let f = forecast_one_step(&model, &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(f, 4.25);
    }

    #[test]
    fn forecast_random_walk_persists_last_level() {
        let model = bare_model(order(0, 1, 0), vec![], vec![], 0.0);
        let f = forecast_one_step(&model, &[5.0, 7.0, 11.0]).unwrap();
        assert_eq!(f, 11.0);
    }

    #[test]
    fn forecast_ar1_matches_hand_recursion() {
        let model = bare_model(order(1, 0, 0), vec![0.6], vec![], 1.0);
        let history = [2.0, 3.0, 5.0];
        // prediction = c + phi * x_{n-1}
        let expected = 1.0 + 0.6 * 5.0;
        let f = forecast_one_step(&model, &history).unwrap();
        assert!((f - expected).abs() < 1e-12);
    }

    #[test]
    fn rolling_forecast_length_and_persistence() {
        let model = bare_model(order(0, 1, 0), vec![], vec![], 0.0);
        let train = [1.0, 2.0, 3.0];
        let test = [4.0, 6.0, 5.0, 8.0];
        let preds = rolling_forecast(&model, &train, &test, None).unwrap();
        assert_eq!(preds.len(), test.len());
        assert_eq!(preds, vec![3.0, 4.0, 6.0, 5.0]);
    }

    #[test]
    fn rolling_forecast_rmse_near_innovation_sd() {
        let mut sq_sum = 0.0;
        let mut count = 0usize;
        for seed in 0..50 {
            let series = sim::ar1(1200, 0.7, 1.0, 4000 + seed);
            let (train, test) = series.split_at(1000);
            let model = fit(train, order(1, 0, 0)).unwrap();
            let preds = rolling_forecast(&model, train, test, None).unwrap();
            for (p, a) in preds.iter().zip(test) {
                sq_sum += (p - a).powi(2);
                count += 1;
            }
        }
        let rmse = (sq_sum / count as f64).sqrt();
        assert!((rmse - 1.0).abs() < 0.1, "pooled rmse {rmse}");
    }

    #[test]
    fn stationarity_flag_detects_explosive_ar() {
        assert!(roots_outside_unit_circle(&[0.5]));
        assert!(!roots_outside_unit_circle(&[1.2]));
        assert!(roots_outside_unit_circle(&[0.4, 0.3]));
        assert!(!roots_outside_unit_circle(&[0.9, 0.3]));
        assert!(roots_outside_unit_circle(&[]));
    }

    #[test]
    fn checkpoint_round_trips() {
        let values = sim::arma(&[0.4], &[0.2], 0.5, 1.0, 800, 15);
        let model = fit(&values, order(1, 0, 1)).unwrap();
        let text = model.to_text("cafe1234");
        let (parsed, fingerprint) = ArimaModel::from_text(&text).unwrap();
        assert_eq!(fingerprint, "cafe1234");
        assert_eq!(parsed, model);
        assert_eq!(parsed.to_text("cafe1234"), text);
    }
}
