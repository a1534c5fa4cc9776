//! Nelder-Mead simplex minimization and a central-difference Hessian,
//! used by the CSS estimator. Standard reflection/expansion/contraction
//! coefficients (1, 2, 0.5, 0.5).

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy)]
pub(crate) struct NelderMeadConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NelderMeadResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0` with an orthogonal initial simplex.
pub(crate) fn nelder_mead<F>(mut f: F, x0: &[f64], config: &NelderMeadConfig) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    if dim == 0 {
        let value = f(x0);
        return NelderMeadResult {
            point: Vec::new(),
            value,
            iterations: 0,
            converged: true,
        };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = f(x0);
    simplex.push((x0.to_vec(), v0));
    for i in 0..dim {
        let mut p = x0.to_vec();
        let step = if p[i].abs() > 1.0 {
            config.initial_step * p[i].abs()
        } else {
            config.initial_step
        };
        p[i] += step;
        let v = f(&p);
        simplex.push((p, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        // relative spread so large-magnitude objectives can converge
        let spread = simplex[dim].1 - simplex[0].1;
        if spread.abs() < config.tolerance * (simplex[0].1.abs() + config.tolerance) {
            converged = true;
            break;
        }

        // centroid of all points but the worst
        let mut centroid = vec![0.0; dim];
        for (p, _) in simplex.iter().take(dim) {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / dim as f64;
            }
        }

        let worst = simplex[dim].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + (c - w))
            .collect();
        let v_reflect = f(&reflect);

        if v_reflect < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let v_expand = f(&expand);
            simplex[dim] = if v_expand < v_reflect {
                (expand, v_expand)
            } else {
                (reflect, v_reflect)
            };
            continue;
        }
        if v_reflect < simplex[dim - 1].1 {
            simplex[dim] = (reflect, v_reflect);
            continue;
        }

        let contract: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + 0.5 * (w - c))
            .collect();
        let v_contract = f(&contract);
        if v_contract < worst.1 {
            simplex[dim] = (contract, v_contract);
            continue;
        }

        // shrink toward the best point
        let best = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let p: Vec<f64> = best
                .iter()
                .zip(&entry.0)
                .map(|(b, x)| b + 0.5 * (x - b))
                .collect();
            let v = f(&p);
            *entry = (p, v);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = simplex.swap_remove(0);
    NelderMeadResult {
        point,
        value,
        iterations,
        converged,
    }
}

/// Central-difference Hessian of `f` at `x`.
pub(crate) fn numerical_hessian<F>(mut f: F, x: &[f64], step: f64) -> Vec<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x.len();
    let mut h = vec![vec![0.0; dim]; dim];
    let f0 = f(x);
    let mut probe = x.to_vec();
    for i in 0..dim {
        for j in i..dim {
            let value = if i == j {
                probe[i] = x[i] + step;
                let fp = f(&probe);
                probe[i] = x[i] - step;
                let fm = f(&probe);
                probe[i] = x[i];
                (fp - 2.0 * f0 + fm) / (step * step)
            } else {
                probe[i] = x[i] + step;
                probe[j] = x[j] + step;
                let fpp = f(&probe);
                probe[j] = x[j] - step;
                let fpm = f(&probe);
                probe[i] = x[i] - step;
                probe[j] = x[j] + step;
                let fmp = f(&probe);
                probe[j] = x[j] - step;
                let fmm = f(&probe);
                probe[i] = x[i];
                probe[j] = x[j];
                (fpp - fpm - fmp + fmm) / (4.0 * step * step)
            };
            h[i][j] = value;
            h[j][i] = value;
        }
    }
    h
}

/// Standard errors of a sum-of-squares minimizer: `sqrt(diag(2*sigma2*H^-1))`
/// with `H` the Hessian of the SSR objective at the optimum.
pub(crate) fn css_stderrs<F>(f: F, x: &[f64], sigma2: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let h = numerical_hessian(f, x, 1e-4);
    let inv = linalg::invert(&h, "css hessian")?;
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let v = 2.0 * sigma2 * inv[i][i];
        if !v.is_finite() || v < 0.0 {
            return Err(Error::MissingStderrs("hessian not positive definite"));
        }
        out.push(v.sqrt());
    }
    Ok(out)
}
