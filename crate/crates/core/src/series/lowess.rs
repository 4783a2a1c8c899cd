//! Locally weighted scatterplot smoothing (tricube weights, local linear fit,
//! bisquare robustness reweighting).

use crate::error::{Error, Result};

/// Robustness iterations applied after the initial fit.
const ROBUSTNESS_ITERS: usize = 2;

/// Smooth `points` with window fraction `frac`, returning the smoothed value
/// at every input point (input order preserved).
///
/// The window at each point holds the `max(2, ceil(frac * n))` nearest
/// neighbors by distance in `t`. Collinear data reproduces exactly.
pub fn lowess(points: &[(f64, f64)], frac: f64) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::invalid("lowess needs at least 3 points"));
    }
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::config(format!("lowess frac {frac} outside (0, 1]")));
    }
    let window = (frac * n as f64).ceil() as usize;
    let window = window.clamp(2, n);

    // sort by t, remembering the original positions
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(a.cmp(&b)));
    let xs: Vec<f64> = order.iter().map(|&i| points[i].0).collect();
    let ys: Vec<f64> = order.iter().map(|&i| points[i].1).collect();

    let mut robust_w = vec![1.0; n];
    let mut fit = vec![0.0; n];
    for iter in 0..=ROBUSTNESS_ITERS {
        for i in 0..n {
            fit[i] = fit_at(&xs, &ys, &robust_w, i, window);
        }
        if iter == ROBUSTNESS_ITERS {
            break;
        }
        // bisquare weights from residuals, scaled by 6 * median |r|
        let mut abs_res: Vec<f64> = ys.iter().zip(&fit).map(|(y, f)| (y - f).abs()).collect();
        let mut sorted = abs_res.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[n / 2];
        let cutoff = 6.0 * median;
        if cutoff <= 1e-12 * sorted[n - 1].max(1.0) {
            break; // residuals effectively zero
        }
        for (w, r) in robust_w.iter_mut().zip(abs_res.drain(..)) {
            let u = r / cutoff;
            *w = if u >= 1.0 {
                0.0
            } else {
                (1.0 - u * u) * (1.0 - u * u)
            };
        }
    }

    let mut out = vec![0.0; n];
    for (sorted_pos, &orig) in order.iter().enumerate() {
        out[orig] = fit[sorted_pos];
    }
    Ok(out)
}

fn fit_at(xs: &[f64], ys: &[f64], robust_w: &[f64], i: usize, window: usize) -> f64 {
    let n = xs.len();
    let x0 = xs[i];

    // nearest `window` points form a contiguous span of the sorted xs
    let mut lo = i;
    let mut hi = i;
    while hi - lo + 1 < window {
        let extend_left = lo > 0 && (hi + 1 >= n || x0 - xs[lo - 1] <= xs[hi + 1] - x0);
        if extend_left {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    let dmax = (x0 - xs[lo]).max(xs[hi] - x0);

    let mut sw = 0.0;
    let mut swx = 0.0;
    let mut swy = 0.0;
    let mut swxx = 0.0;
    let mut swxy = 0.0;
    for j in lo..=hi {
        let w = if dmax > 0.0 {
            let u = (xs[j] - x0).abs() / dmax;
            if u >= 1.0 {
                0.0
            } else {
                let t = 1.0 - u * u * u;
                t * t * t
            }
        } else {
            1.0
        } * robust_w[j];
        sw += w;
        swx += w * xs[j];
        swy += w * ys[j];
        swxx += w * xs[j] * xs[j];
        swxy += w * xs[j] * ys[j];
    }
    if sw <= 0.0 {
        return ys[i];
    }
    let denom = sw * swxx - swx * swx;
    let spread = (swxx / sw - (swx / sw) * (swx / sw)).max(0.0);
    if denom.abs() <= 1e-12 * sw * sw * spread.max(1e-30) || spread <= 0.0 {
        return swy / sw; // no usable spread in x: weighted mean
    }
    let slope = (sw * swxy - swx * swy) / denom;
    let intercept = (swy - slope * swx) / sw;
    intercept + slope * x0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_data_reproduced_exactly() {
        for frac in [0.2, 0.5, 1.0] {
            let pts: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
            let sm = lowess(&pts, frac).unwrap();
            for (s, (_, y)) in sm.iter().zip(&pts) {
                assert!((s - y).abs() < 1e-9, "frac {frac}: {s} vs {y}");
            }
        }
    }

    #[test]
    fn constant_series_stays_constant() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.5)).collect();
        let sm = lowess(&pts, 0.4).unwrap();
        assert!(sm.iter().all(|s| (s - 3.5).abs() < 1e-12));
    }

    #[test]
    fn shift_equivariance() {
        let pts: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                (
                    i as f64,
                    (i as f64 * 0.4).sin() + 0.05 * ((i * 7 % 13) as f64),
                )
            })
            .collect();
        let shifted: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (*x, y + 10.0)).collect();
        let a = lowess(&pts, 0.3).unwrap();
        let b = lowess(&shifted, 0.3).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((v - u - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn smooths_noise_toward_the_signal() {
        // deterministic pseudo-noise on a sine; smoothing must beat raw data
        let n = 120;
        let noise = |i: usize| {
            let v = crate::rng::splitmix64(i as u64 ^ 0xbeef) as f64 / u64::MAX as f64;
            (v - 0.5) * 0.6
        };
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let t = i as f64 / 20.0;
                (t, t.sin() + noise(i))
            })
            .collect();
        let sm = lowess(&pts, 0.3).unwrap();
        let rmse = |vals: &dyn Fn(usize) -> f64| {
            let s: f64 = (0..n)
                .map(|i| {
                    let t = i as f64 / 20.0;
                    (vals(i) - t.sin()).powi(2)
                })
                .sum();
            (s / n as f64).sqrt()
        };
        let raw_rmse = rmse(&|i| pts[i].1);
        let smooth_rmse = rmse(&|i| sm[i]);
        assert!(
            smooth_rmse < raw_rmse,
            "lowess rmse {smooth_rmse} not below raw {raw_rmse}"
        );
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(lowess(&[(0.0, 1.0), (1.0, 2.0)], 0.5).is_err());
    }
}
