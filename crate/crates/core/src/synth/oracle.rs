//! Brute-force reference solvers.
//!
//! These share no code with the estimators they check: the
//! simplex oracle scans an explicit grid of mixtures and the count-model
//! oracle scans a parameter box, each recomputing its objective from scratch.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quantifier::ProfileMatrix;

/// Grid minimizer output for the simplex least-squares problem.
#[derive(Debug, Clone)]
pub struct GridSolution {
    /// Mixture weights aligned with the matrix's category order.
    pub beta: Vec<f64>,
    pub objective: f64,
}

/// Exhaustive simplex grid minimizer of `||y - Pm b||^2` with spacing `step`.
///
/// Tractable only for up to 3 categories; `step` must be at most 1e-3.
pub fn oracle_simplex_ls(y: &[f64], pm: &ProfileMatrix, step: f64) -> Result<GridSolution> {
    let k = pm.n_categories();
    let m = pm.n_rows();
    if k > 3 {
        return Err(Error::config("grid oracle supports at most 3 categories"));
    }
    if !(step > 0.0 && step <= 1e-3) {
        return Err(Error::config("grid step must lie in (0, 1e-3]"));
    }
    if y.len() != m {
        return Err(Error::invalid(
            "frequency vector does not match matrix rows",
        ));
    }
    let total: f64 = y.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::invalid("frequencies must have positive total"));
    }
    let y: Vec<f64> = y.iter().map(|v| v / total).collect();
    let a = |r: usize, j: usize| pm.value(r, j);
    let n_steps = (1.0 / step).round() as usize;
    let h = 1.0 / n_steps as f64;

    match k {
        1 => {
            let objective = (0..m).map(|r| (y[r] - a(r, 0)).powi(2)).sum();
            Ok(GridSolution {
                beta: vec![1.0],
                objective,
            })
        }
        2 => {
            let mut best = (f64::INFINITY, 0usize);
            for i in 0..=n_steps {
                let b0 = i as f64 * h;
                let b1 = 1.0 - b0;
                let obj: f64 = (0..m)
                    .map(|r| (y[r] - a(r, 0) * b0 - a(r, 1) * b1).powi(2))
                    .sum();
                if obj < best.0 {
                    best = (obj, i);
                }
            }
            let b0 = best.1 as f64 * h;
            Ok(GridSolution {
                beta: vec![b0, 1.0 - b0],
                objective: best.0,
            })
        }
        _ => {
            // residual along the inner loop updates by a constant decrement,
            // so each candidate costs O(m) additions; the common m <= 4 case
            // runs on fixed-width arrays (padding rows contribute zero)
            let best = if m <= 4 {
                let mut av = [[0.0f64; 3]; 4];
                let mut yv = [0.0f64; 4];
                for r in 0..m {
                    for j in 0..3 {
                        av[r][j] = a(r, j);
                    }
                    yv[r] = y[r];
                }
                let d = [
                    (av[0][1] - av[0][2]) * h,
                    (av[1][1] - av[1][2]) * h,
                    (av[2][1] - av[2][2]) * h,
                    (av[3][1] - av[3][2]) * h,
                ];
                let mut best = (f64::INFINITY, 0usize, 0usize);
                for i in 0..=n_steps {
                    let b0 = i as f64 * h;
                    let mut res = [
                        yv[0] - av[0][0] * b0 - av[0][2] * (1.0 - b0),
                        yv[1] - av[1][0] * b0 - av[1][2] * (1.0 - b0),
                        yv[2] - av[2][0] * b0 - av[2][2] * (1.0 - b0),
                        yv[3] - av[3][0] * b0 - av[3][2] * (1.0 - b0),
                    ];
                    for j in 0..=(n_steps - i) {
                        let obj =
                            res[0] * res[0] + res[1] * res[1] + res[2] * res[2] + res[3] * res[3];
                        if obj < best.0 {
                            best = (obj, i, j);
                        }
                        res[0] -= d[0];
                        res[1] -= d[1];
                        res[2] -= d[2];
                        res[3] -= d[3];
                    }
                }
                best
            } else {
                let d: Vec<f64> = (0..m).map(|r| (a(r, 1) - a(r, 2)) * h).collect();
                let mut res = vec![0.0; m];
                let mut best = (f64::INFINITY, 0usize, 0usize);
                for i in 0..=n_steps {
                    let b0 = i as f64 * h;
                    for r in 0..m {
                        // j = 0 start: b1 = 0, b2 = 1 - b0
                        res[r] = y[r] - a(r, 0) * b0 - a(r, 2) * (1.0 - b0);
                    }
                    for j in 0..=(n_steps - i) {
                        let mut obj = 0.0;
                        for r in 0..m {
                            obj += res[r] * res[r];
                        }
                        if obj < best.0 {
                            best = (obj, i, j);
                        }
                        for r in 0..m {
                            res[r] -= d[r];
                        }
                    }
                }
                best
            };
            let b0 = best.1 as f64 * h;
            let b1 = best.2 as f64 * h;
            let beta = vec![b0, b1, 1.0 - b0 - b1];
            // recompute the winning objective without incremental drift
            let objective = (0..m)
                .map(|r| (y[r] - a(r, 0) * beta[0] - a(r, 1) * beta[1] - a(r, 2) * beta[2]).powi(2))
                .sum();
            Ok(GridSolution { beta, objective })
        }
    }
}

/// Grid maximizer output for the NB2 likelihood.
#[derive(Debug, Clone)]
pub struct NegbinGridSolution {
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub loglik: f64,
}

/// Exhaustive coarse grid over `(beta, alpha)` followed by one local
/// refinement pass at resolution `step` around the coarse optimum.
///
/// `beta_bounds` covers the intercept and at most two covariates. An optimum
/// on a beta bound or on the upper alpha bound means the box was too small
/// (widen-bounds error); the lower alpha bound is the legitimate Poisson
/// limit and is allowed.
pub fn oracle_negbin_grid(
    counts: &[u64],
    covariates: &[Vec<f64>],
    exposure: &[f64],
    beta_bounds: &[(f64, f64)],
    alpha_bounds: (f64, f64),
    step: f64,
) -> Result<NegbinGridSolution> {
    let n = counts.len();
    let p = beta_bounds.len();
    if covariates.len() + 1 != p || p > 3 {
        return Err(Error::config(
            "oracle takes an intercept bound plus bounds for at most 2 covariates",
        ));
    }
    if covariates.iter().any(|c| c.len() != n) || exposure.len() != n || n == 0 {
        return Err(Error::invalid(
            "counts, covariates, exposure must share length",
        ));
    }
    if step.is_nan() || step <= 0.0 || alpha_bounds.0 <= 0.0 || alpha_bounds.0 >= alpha_bounds.1 {
        return Err(Error::config("bad step or alpha bounds"));
    }

    let y: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let coarse = step * 100.0;

    let coarse_axes: Vec<Vec<f64>> = beta_bounds
        .iter()
        .map(|(lo, hi)| axis(*lo, *hi, coarse))
        .chain(std::iter::once(axis(
            alpha_bounds.0,
            alpha_bounds.1,
            coarse,
        )))
        .collect();
    let best = scan(&y, covariates, exposure, &coarse_axes);

    // reject a coarse optimum on the outer box (alpha lower bound excepted)
    for (dim, axis_vals) in coarse_axes.iter().enumerate() {
        let v = best.0[dim];
        let on_low = v <= axis_vals[0] + 1e-12;
        let on_high = v >= axis_vals[axis_vals.len() - 1] - 1e-12;
        let alpha_dim = dim == p;
        if (on_low && !alpha_dim) || on_high {
            return Err(Error::estimation(format!(
                "grid optimum sits on the bounds in dimension {dim}; widen the box"
            )));
        }
    }

    // one refinement pass: +-1 coarse cell around the winner, at `step`
    let fine_axes: Vec<Vec<f64>> = best
        .0
        .iter()
        .enumerate()
        .map(|(dim, center)| {
            let (outer_lo, outer_hi) = if dim < p {
                beta_bounds[dim]
            } else {
                alpha_bounds
            };
            axis(
                (center - coarse).max(outer_lo),
                (center + coarse).min(outer_hi),
                step,
            )
        })
        .collect();
    let refined = scan(&y, covariates, exposure, &fine_axes);

    Ok(NegbinGridSolution {
        beta: refined.0[..p].to_vec(),
        alpha: refined.0[p],
        loglik: refined.1,
    })
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n.max(1)).map(|i| lo + i as f64 * step).collect()
}

/// Scan the cartesian product of up to 3 beta axes and the alpha axis,
/// returning the maximizing point and its log likelihood.
fn scan(
    y: &[f64],
    covariates: &[Vec<f64>],
    exposure: &[f64],
    axes: &[Vec<f64>],
) -> (Vec<f64>, f64) {
    let n = y.len();
    let p = axes.len() - 1; // beta dimensions
    let alpha_axis = &axes[p];

    // per-alpha constants: sum over i of lnG(y+a) - lnG(a) - lnG(y+1) + a ln a
    let alpha_consts: Vec<(f64, f64)> = alpha_axis
        .iter()
        .map(|alpha| {
            let a = 1.0 / alpha;
            let c: f64 = y
                .iter()
                .map(|yi| ln_gamma(yi + a) - ln_gamma(a) - ln_gamma(yi + 1.0) + a * a.ln())
                .sum();
            (a, c)
        })
        .collect();

    let mut best_point = Vec::new();
    let mut best_ll = f64::NEG_INFINITY;
    let mut eta_cov = vec![0.0; n];

    // iterate covariate axes outermost so their linear predictor is reused
    let cov_axes: Vec<&[f64]> = (1..p).map(|d| axes[d].as_slice()).collect();
    let mut cov_index = vec![0usize; cov_axes.len()];
    loop {
        for i in 0..n {
            eta_cov[i] = 0.0;
            for (d, &ci) in cov_index.iter().enumerate() {
                eta_cov[i] += cov_axes[d][ci] * covariates[d][i];
            }
        }
        for &b0 in &axes[0] {
            // mu and ln(mu) for this beta point
            let mut mu = Vec::with_capacity(n);
            let mut ln_mu = Vec::with_capacity(n);
            for i in 0..n {
                let eta = (b0 + eta_cov[i] + exposure[i].ln()).clamp(-60.0, 60.0);
                ln_mu.push(eta);
                mu.push(eta.exp());
            }
            for (ai, (a, c)) in alpha_consts.iter().enumerate() {
                let mut ll = *c;
                for i in 0..n {
                    ll += -(a + y[i]) * (a + mu[i]).ln() + y[i] * ln_mu[i];
                }
                if ll > best_ll {
                    best_ll = ll;
                    best_point = cov_index
                        .iter()
                        .enumerate()
                        .map(|(d, &ci)| cov_axes[d][ci])
                        .collect();
                    best_point.insert(0, b0);
                    best_point.push(alpha_axis[ai]);
                }
            }
        }
        // advance the covariate multi-index
        let mut dim = 0;
        loop {
            if dim == cov_axes.len() {
                return (best_point, best_ll);
            }
            cov_index[dim] += 1;
            if cov_index[dim] < cov_axes[dim].len() {
                break;
            }
            cov_index[dim] = 0;
            dim += 1;
        }
    }
}
