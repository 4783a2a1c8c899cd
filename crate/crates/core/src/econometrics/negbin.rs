//! NB2 negative-binomial regression with an exposure offset.
//!
//! Mean model: `mu_i = exposure_i * exp(x_i' b)`, i.e. the offset
//! `ln(exposure_i)` enters with coefficient fixed at 1. Variance is
//! `mu + alpha mu^2`. Estimation alternates Fisher-scoring steps for `b`
//! (with step halving on the log likelihood) and golden-section maximization
//! of the profile likelihood in `ln(alpha)`. Standard errors are the
//! score-based sandwich `H^-1 (sum s s') H^-1` with `alpha` held at its
//! estimate.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::econometrics::RegressionFit;
use crate::error::{Error, Result};

const ETA_CLAMP: f64 = 30.0;
/// Below this the dispersion optimum is treated as the Poisson boundary.
const POISSON_ALPHA: f64 = 1e-7;

pub fn negbin_fit(
    counts: &[u64],
    names: &[String],
    columns: &[Vec<f64>],
    exposure: &[f64],
) -> Result<RegressionFit> {
    let n = counts.len();
    let p = columns.len();
    if p == 0 {
        return Err(Error::invalid("no regressors"));
    }
    if columns.iter().any(|c| c.len() != n) || exposure.len() != n {
        return Err(Error::invalid(
            "counts, columns, and exposure must share length",
        ));
    }
    if n <= p {
        return Err(Error::invalid(format!("n = {n} must exceed p = {p}")));
    }
    if exposure.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(Error::invalid("exposure must be strictly positive"));
    }

    let x = DMatrix::from_fn(n, p, |i, j| columns[j][i]);
    let y: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let offset: Vec<f64> = exposure.iter().map(|e| e.ln()).collect();

    // Poisson start for beta
    let mut beta = poisson_irls(&x, &y, &offset, names, 100, 1e-10)?;
    let mu0 = mean_vector(&x, &beta, &offset);
    let mut alpha = {
        let num: f64 = y
            .iter()
            .zip(&mu0)
            .map(|(yi, m)| (yi - m) * (yi - m) - m)
            .sum();
        let den: f64 = mu0.iter().map(|m| m * m).sum();
        (num / den).clamp(1e-4, 100.0)
    };

    let mut loglik = nb2_loglik(&y, &mean_vector(&x, &beta, &offset), alpha);
    let mut stalled = 0;
    let mut converged = false;
    for _ in 0..300 {
        // beta step: Fisher scoring with step halving
        let mu = mean_vector(&x, &beta, &offset);
        let grad = score_beta(&x, &y, &mu, alpha);
        let info = fisher_info(&x, &mu, alpha);
        let delta = solve_spd(&info, &grad)?;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand = &beta + step * &delta;
            let ll = nb2_loglik(&y, &mean_vector(&x, &cand, &offset), alpha);
            if ll > loglik {
                beta = cand;
                loglik = ll;
                improved = true;
                break;
            }
            step *= 0.5;
        }

        // alpha step: profile likelihood in ln(alpha)
        let mu = mean_vector(&x, &beta, &offset);
        let (new_alpha, ll_alpha) = maximize_alpha(&y, &mu);
        let alpha_moved = (new_alpha.ln() - alpha.ln()).abs() > 1e-12;
        if ll_alpha >= loglik {
            alpha = new_alpha;
            loglik = ll_alpha;
        }

        let grad_now = score_beta(&x, &y, &mu, alpha);
        let grad_scale = (0..p)
            .map(|j| (0..n).map(|i| (x[(i, j)] * y[i]).abs()).sum::<f64>())
            .fold(1.0_f64, f64::max);
        let grad_small = grad_now.amax() <= 1e-9 * grad_scale;
        if !improved && !alpha_moved && grad_small {
            converged = true;
            break;
        }
        if !improved && !alpha_moved {
            stalled += 1;
            if stalled >= 5 {
                break;
            }
        } else {
            stalled = 0;
        }
    }
    // final gradient check decides convergence when the loop ran out
    if !converged {
        let mu = mean_vector(&x, &beta, &offset);
        let g = score_beta(&x, &y, &mu, alpha);
        let scale = y.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if g.amax() > 1e-6 * scale {
            return Err(Error::NonConvergence(format!(
                "negative binomial fit: gradient norm {:.3e} after iteration cap",
                g.amax()
            )));
        }
    }

    let poisson_limit = alpha <= POISSON_ALPHA;
    if poisson_limit {
        // refit at the boundary and report the Poisson-limit likelihood
        beta = poisson_irls(&x, &y, &offset, names, 200, 1e-12)?;
        alpha = 0.0;
        let mu = mean_vector(&x, &beta, &offset);
        loglik = poisson_loglik(&y, &mu);
    }

    let mu = mean_vector(&x, &beta, &offset);
    let robust_se = sandwich_se(&x, &y, &mu, alpha)?;
    let residuals: Vec<f64> = y.iter().zip(&mu).map(|(yi, m)| yi - m).collect();

    Ok(RegressionFit {
        names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        robust_se,
        loglik,
        bic: None,
        n,
        converged: true,
        alpha: Some(alpha),
        poisson_limit,
        residuals,
    })
}

/// Predicted counts `exposure * exp(x' b)` on a covariate grid.
///
/// `names` labels the entries of each grid row and must cover exactly the
/// fitted coefficient names (any order).
pub fn predict_counts(
    fit: &RegressionFit,
    names: &[String],
    grid: &[Vec<f64>],
    exposure: f64,
) -> Result<Vec<f64>> {
    if exposure.is_nan() || exposure <= 0.0 {
        return Err(Error::invalid("exposure must be positive"));
    }
    if names.len() != fit.names.len() {
        return Err(Error::invalid(format!(
            "grid has {} columns, fit has {} coefficients",
            names.len(),
            fit.names.len()
        )));
    }
    let mut coef_for = Vec::with_capacity(names.len());
    for name in names {
        match fit.names.iter().position(|n| n == name) {
            Some(i) => coef_for.push(fit.coefficients[i]),
            None => {
                return Err(Error::invalid(format!(
                    "grid column '{name}' does not match any fitted coefficient"
                )))
            }
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    for (r, row) in grid.iter().enumerate() {
        if row.len() != names.len() {
            return Err(Error::invalid(format!("grid row {r} has wrong width")));
        }
        let eta: f64 = row.iter().zip(&coef_for).map(|(v, b)| v * b).sum();
        out.push(exposure * eta.exp());
    }
    Ok(out)
}

fn mean_vector(x: &DMatrix<f64>, beta: &DVector<f64>, offset: &[f64]) -> Vec<f64> {
    let eta = x * beta;
    eta.iter()
        .zip(offset)
        .map(|(e, o)| (e + o).clamp(-ETA_CLAMP, ETA_CLAMP).exp())
        .collect()
}

/// NB2 log likelihood with `a = 1/alpha`.
pub fn nb2_loglik(y: &[f64], mu: &[f64], alpha: f64) -> f64 {
    if alpha <= POISSON_ALPHA {
        return poisson_loglik(y, mu);
    }
    let a = 1.0 / alpha;
    y.iter()
        .zip(mu)
        .map(|(yi, m)| {
            ln_gamma(yi + a) - ln_gamma(a) - ln_gamma(yi + 1.0)
                + a * (a / (a + m)).ln()
                + yi * (m / (a + m)).ln()
        })
        .sum()
}

pub fn poisson_loglik(y: &[f64], mu: &[f64]) -> f64 {
    y.iter()
        .zip(mu)
        .map(|(yi, m)| yi * m.ln() - m - ln_gamma(yi + 1.0))
        .sum()
}

fn score_beta(x: &DMatrix<f64>, y: &[f64], mu: &[f64], alpha: f64) -> DVector<f64> {
    let n = x.nrows();
    let p = x.ncols();
    let mut g = DVector::zeros(p);
    for i in 0..n {
        let s = (y[i] - mu[i]) / (1.0 + alpha * mu[i]);
        for j in 0..p {
            g[j] += x[(i, j)] * s;
        }
    }
    g
}

fn fisher_info(x: &DMatrix<f64>, mu: &[f64], alpha: f64) -> DMatrix<f64> {
    let n = x.nrows();
    let p = x.ncols();
    let mut h = DMatrix::zeros(p, p);
    for i in 0..n {
        let w = mu[i] / (1.0 + alpha * mu[i]);
        for a in 0..p {
            let xa = x[(i, a)];
            for b in 0..p {
                h[(a, b)] += w * xa * x[(i, b)];
            }
        }
    }
    h
}

fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    m.clone()
        .cholesky()
        .map(|ch| ch.solve(b))
        .or_else(|| {
            let svd = m.clone().svd(true, true);
            let eps = svd.singular_values.max() * 1e-13;
            svd.solve(b, eps).ok()
        })
        .ok_or_else(|| Error::estimation("information matrix is singular"))
}

/// Golden-section maximization of the likelihood over `ln(alpha)`.
fn maximize_alpha(y: &[f64], mu: &[f64]) -> (f64, f64) {
    let f = |t: f64| nb2_loglik(y, mu, t.exp());
    let (mut lo, mut hi) = ((1e-9_f64).ln(), (1e4_f64).ln());
    const PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - PHI * (hi - lo);
    let mut d = lo + PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > 1e-13 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + PHI * (hi - lo);
            fd = f(d);
        }
    }
    let t = 0.5 * (lo + hi);
    (t.exp(), f(t))
}

fn poisson_irls(
    x: &DMatrix<f64>,
    y: &[f64],
    offset: &[f64],
    names: &[String],
    max_iter: usize,
    tol: f64,
) -> Result<DVector<f64>> {
    let n = x.nrows();
    let p = x.ncols();
    let mut beta = DVector::zeros(p);
    // start the intercept at the marginal log rate when present
    if let Some(c) = names.iter().position(|n| n == "const") {
        let total_y: f64 = y.iter().sum();
        let total_e: f64 = offset.iter().map(|o| o.exp()).sum();
        if total_y > 0.0 && total_e > 0.0 {
            beta[c] = (total_y / total_e).ln();
        }
    }
    for _ in 0..max_iter {
        let mu = mean_vector(x, &beta, offset);
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        for i in 0..n {
            let r = y[i] - mu[i];
            for a in 0..p {
                g[a] += x[(i, a)] * r;
                for b in 0..p {
                    h[(a, b)] += mu[i] * x[(i, a)] * x[(i, b)];
                }
            }
        }
        let delta = solve_spd(&h, &g)?;
        beta += &delta;
        if delta.amax() < tol {
            break;
        }
    }
    Ok(beta)
}

fn sandwich_se(x: &DMatrix<f64>, y: &[f64], mu: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let n = x.nrows();
    let p = x.ncols();
    let bread_inv = fisher_info(x, mu, alpha);
    let bread = bread_inv
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&DMatrix::identity(p, p)))
        .or_else(|| {
            let svd = bread_inv.clone().svd(true, true);
            let eps = svd.singular_values.max() * 1e-13;
            svd.solve(&DMatrix::identity(p, p), eps).ok()
        })
        .ok_or_else(|| Error::estimation("information matrix is singular"))?;
    let mut meat = DMatrix::zeros(p, p);
    for i in 0..n {
        let s = (y[i] - mu[i]) / (1.0 + alpha * mu[i]);
        for a in 0..p {
            for b in 0..p {
                meat[(a, b)] += s * s * x[(i, a)] * x[(i, b)];
            }
        }
    }
    let cov = &bread * &meat * &bread;
    Ok((0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn constant_rate_poisson_degenerate() {
        // counts = round(exposure * e^2) with no covariates
        let exposure: Vec<f64> = (1..=25).map(|i| 0.5 + i as f64 * 0.3).collect();
        let counts: Vec<u64> = exposure
            .iter()
            .map(|e| (e * (2.0_f64).exp()).round() as u64)
            .collect();
        let cols = vec![vec![1.0; 25]];
        let fit = negbin_fit(&counts, &names(&["const"]), &cols, &exposure).unwrap();
        assert!(
            (fit.coefficients[0] - 2.0).abs() < 0.05,
            "intercept {}",
            fit.coefficients[0]
        );
        assert!(fit.poisson_limit, "alpha = {:?}", fit.alpha);
        assert_eq!(fit.alpha, Some(0.0));
    }

    #[test]
    fn doubling_exposure_shifts_only_intercept() {
        // synthetic overdispersed counts
        let n = 60;
        let xcov: Vec<f64> = (0..n).map(|i| (i as f64) / n as f64).collect();
        let exposure: Vec<f64> = (0..n).map(|i| 1.0 + (i % 5) as f64).collect();
        let counts: Vec<u64> = (0..n)
            .map(|i| {
                let mu = exposure[i] * (1.0 + 0.8 * xcov[i]).exp();
                // deterministic "noise" with variance growing in mu
                let bump = ((i * 2654435761) % 7) as f64 - 3.0;
                (mu + bump * (mu * 0.3).sqrt()).max(0.0).round() as u64
            })
            .collect();
        let cols = vec![vec![1.0; n], xcov];
        let nm = names(&["const", "x"]);
        let fit1 = negbin_fit(&counts, &nm, &cols, &exposure).unwrap();
        let scaled: Vec<f64> = exposure.iter().map(|e| e * 2.0).collect();
        let fit2 = negbin_fit(&counts, &nm, &cols, &scaled).unwrap();
        assert!(
            (fit1.coefficients[0] - fit2.coefficients[0] - (2.0_f64).ln()).abs() < 1e-6,
            "intercepts {} vs {}",
            fit1.coefficients[0],
            fit2.coefficients[0]
        );
        assert!((fit1.coefficients[1] - fit2.coefficients[1]).abs() < 1e-6);
    }

    #[test]
    fn prediction_basics() {
        let fit = RegressionFit {
            names: names(&["const", "x"]),
            coefficients: vec![0.7, -1.2],
            robust_se: vec![0.1, 0.2],
            loglik: 0.0,
            bic: None,
            n: 10,
            converged: true,
            alpha: Some(0.3),
            poisson_limit: false,
            residuals: vec![],
        };
        let nm = names(&["const", "x"]);
        // all covariates zero, exposure 1 -> exp(intercept)
        let base = predict_counts(&fit, &nm, &[vec![1.0, 0.0]], 1.0).unwrap();
        assert!((base[0] - 0.7_f64.exp()).abs() < 1e-12);
        // doubling exposure doubles the prediction
        let twice = predict_counts(&fit, &nm, &[vec![1.0, 0.0]], 2.0).unwrap();
        assert!((twice[0] - 2.0 * base[0]).abs() < 1e-12);
        // name mismatch is an error
        assert!(predict_counts(&fit, &names(&["const", "z"]), &[vec![1.0, 0.0]], 1.0).is_err());
    }

    #[test]
    fn reference_coefficient_prediction_ratio() {
        // with these fixed benchmark coefficients the predicted
        // count ratio between sentiment 0.20 and 0.10 is exp(-0.8451)
        let fit = RegressionFit {
            names: names(&["const", "sentiment"]),
            coefficients: vec![2.610, -8.451],
            robust_se: vec![0.845, 1.933],
            loglik: 0.0,
            bic: None,
            n: 61,
            converged: true,
            alpha: Some(0.5),
            poisson_limit: false,
            residuals: vec![],
        };
        let nm = names(&["const", "sentiment"]);
        let preds = predict_counts(&fit, &nm, &[vec![1.0, 0.10], vec![1.0, 0.20]], 1.0).unwrap();
        let ratio = preds[1] / preds[0];
        assert!((ratio - (-0.8451_f64).exp()).abs() < 1e-12);
        assert!((ratio - 0.4295).abs() < 1e-4);
        assert!(ratio < 0.5, "decreases by more than half");
    }
}
