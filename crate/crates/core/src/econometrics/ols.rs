//! Ordinary least squares via QR, with HC1 sandwich standard errors.

use nalgebra::{DMatrix, DVector};

use crate::econometrics::RegressionFit;
use crate::error::{Error, Result};
use crate::events::DesignMatrix;

/// Fit `y = X b` by QR; robust covariance is the HC1 sandwich
/// `(n/(n-p)) (X'X)^-1 X' diag(e^2) X (X'X)^-1`.
///
/// BIC uses the concentrated-Gaussian convention `n ln(RSS/n) + p ln(n)`.
pub fn ols_fit(y: &[f64], names: &[String], columns: &[Vec<f64>]) -> Result<RegressionFit> {
    let n = y.len();
    let p = columns.len();
    if p == 0 {
        return Err(Error::invalid("no regressors"));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::invalid("regressor columns must match y in length"));
    }
    {
        let mut seen = std::collections::HashSet::new();
        for name in names {
            if !seen.insert(name) {
                return Err(Error::invalid(format!("duplicate column name '{name}'")));
            }
        }
    }
    if n <= p {
        return Err(Error::invalid(format!("n = {n} must exceed p = {p}")));
    }

    let x = DMatrix::from_fn(n, p, |i, j| columns[j][i]);
    let yv = DVector::from_column_slice(y);

    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();

    // tolerance-based rank check on the R diagonal
    let diag_max = (0..p).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
    for i in 0..p {
        if r[(i, i)].abs() <= 1e-10 * diag_max.max(1e-300) {
            return Err(Error::Estimation(format!(
                "design matrix is rank deficient (column '{}' is collinear)",
                names.get(i).map(String::as_str).unwrap_or("?")
            )));
        }
    }

    let qty = q.transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::estimation("triangular solve failed"))?;

    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| yv[i] - fitted[i]).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();

    // bread: (X'X)^-1 = R^-1 R^-T
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::estimation("R inversion failed"))?;
    let bread = &r_inv * r_inv.transpose();

    // meat: X' diag(omega) X with HC1 weights
    let scale = n as f64 / (n - p) as f64;
    let mut meat = DMatrix::zeros(p, p);
    for i in 0..n {
        let w = scale * residuals[i] * residuals[i];
        for a in 0..p {
            let xa = x[(i, a)];
            for b in 0..p {
                meat[(a, b)] += w * xa * x[(i, b)];
            }
        }
    }
    let cov = &bread * &meat * &bread;
    let robust_se: Vec<f64> = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();

    let sigma2 = rss / n as f64;
    let loglik = if sigma2 > 0.0 {
        -0.5 * n as f64 * ((std::f64::consts::TAU * sigma2).ln() + 1.0)
    } else {
        f64::INFINITY
    };
    let bic = n as f64 * sigma2.ln() + p as f64 * (n as f64).ln();

    Ok(RegressionFit {
        names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        robust_se,
        loglik,
        bic: Some(bic),
        n,
        converged: true,
        alpha: None,
        poisson_limit: false,
        residuals,
    })
}

/// Fit a design matrix produced by `events::build_regressors`.
pub fn ols_fit_design(dm: &DesignMatrix) -> Result<RegressionFit> {
    ols_fit(&dm.y, &dm.names, &dm.columns)
}
