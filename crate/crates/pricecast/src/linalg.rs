//! Small dense solvers used by the ADF regression and the CSS standard
//! errors. Dimensions here are tiny (a handful of coefficients), so plain
//! Gauss-Jordan with partial pivoting is enough.

use crate::error::{Error, Result};

/// Solve `a * x = b` in place via Gauss-Jordan with partial pivoting.
pub(crate) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, context: &'static str) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::SingularMatrix(context));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        for j in col..n {
            a[col][j] /= diag;
        }
        b[col] /= diag;
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row][j] -= factor * a[col][j];
            }
            b[row] -= factor * b[col];
        }
    }
    Ok(b)
}

/// Invert a small symmetric matrix by solving against unit vectors.
pub(crate) fn invert(a: &[Vec<f64>], context: &'static str) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve(a.to_vec(), e, context)?;
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Ok(inv)
}

/// Ordinary least squares fit of `y` on row-major design matrix `x`.
///
/// Returns coefficients, their standard errors, and the residual sum of
/// squares. Standard errors use `sigma2 = rss / (n - k)`.
pub(crate) struct OlsFit {
    pub coefficients: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub rss: f64,
    pub n: usize,
}

pub(crate) fn ols(x: &[Vec<f64>], y: &[f64], context: &'static str) -> Result<OlsFit> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let k = x[0].len();
    if n <= k {
        return Err(Error::TooShort { need: k, got: n });
    }

    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..k {
            xty[i] += row[i] * yi;
            for j in i..k {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[i][j] = xtx[j][i];
        }
    }

    let coefficients = solve(xtx.clone(), xty, context)?;
    let mut rss = 0.0;
    for (row, &yi) in x.iter().zip(y) {
        let fitted: f64 = row.iter().zip(&coefficients).map(|(a, b)| a * b).sum();
        let e = yi - fitted;
        rss += e * e;
    }
    let sigma2 = rss / (n - k) as f64;
    let xtx_inv = invert(&xtx, context)?;
    let stderrs = (0..k)
        .map(|i| (sigma2 * xtx_inv[i][i]).max(0.0).sqrt())
        .collect();
    Ok(OlsFit {
        coefficients,
        stderrs,
        rss,
        n,
    })
}
