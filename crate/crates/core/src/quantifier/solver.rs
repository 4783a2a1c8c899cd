//! Exact least squares on the probability simplex.
//!
//! Minimizes `||y - A b||^2` subject to `b >= 0`, `sum(b) = 1` with a primal
//! active-set method. The simplex constraint is enforced during optimization,
//! never by post-hoc clipping: each iteration solves the equality-constrained
//! problem on the current face and either releases a bound whose multiplier
//! is negative or blocks on the first coordinate that would leave the face.

use nalgebra::{DMatrix, DVector};

use crate::quantifier::matrix::ProfileMatrix;

#[derive(Debug, Clone)]
pub struct SimplexLsSolution {
    pub beta: Vec<f64>,
    /// `||y - A beta||^2` at the returned point.
    pub objective: f64,
    /// True when some simplex direction leaves `A b` unchanged (for example,
    /// identical columns); the minimizer is then not unique.
    pub non_identified: bool,
}

/// Solve on a profile matrix; `y` must have one entry per matrix row.
pub fn solve_simplex_ls(pm: &ProfileMatrix, y: &[f64]) -> SimplexLsSolution {
    let m = pm.n_rows();
    let k = pm.n_categories();
    let a = DMatrix::from_fn(m, k, |r, j| pm.value(r, j));
    let yv = DVector::from_column_slice(y);
    solve_simplex_ls_raw(&a, &yv)
}

pub fn solve_simplex_ls_raw(a: &DMatrix<f64>, y: &DVector<f64>) -> SimplexLsSolution {
    let k = a.ncols();
    assert!(k >= 1, "need at least one column");
    assert_eq!(a.nrows(), y.len(), "y length must match row count");

    let non_identified = !simplex_identified(a);
    if k == 1 {
        let beta = vec![1.0];
        let objective = (y - a * DVector::from_element(1, 1.0)).norm_squared();
        return SimplexLsSolution {
            beta,
            objective,
            non_identified,
        };
    }

    let q = a.transpose() * a;
    let c = a.transpose() * y;

    let mut beta = vec![1.0 / k as f64; k];
    let mut active = vec![false; k];
    let mut best_beta = beta.clone();
    let mut best_obj = objective(a, y, &beta);

    let max_iter = 30 * k + 100;
    for _ in 0..max_iter {
        let free: Vec<usize> = (0..k).filter(|i| !active[*i]).collect();
        let f = free.len();

        // KKT system on the current face: [Q_FF 1; 1' 0] [b_F; l] = [c_F; 1]
        let mut kkt = DMatrix::zeros(f + 1, f + 1);
        let mut rhs = DVector::zeros(f + 1);
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                kkt[(r, s)] = q[(i, j)];
            }
            kkt[(r, f)] = 1.0;
            kkt[(f, r)] = 1.0;
            rhs[r] = c[i];
        }
        rhs[f] = 1.0;

        let svd = kkt.clone().svd(true, true);
        let eps = svd.singular_values.max() * 1e-13;
        let sol = match svd.solve(&rhs, eps) {
            Ok(s) => s,
            Err(_) => break,
        };
        let lambda = sol[f];
        let mut cand = vec![0.0; k];
        for (r, &i) in free.iter().enumerate() {
            cand[i] = sol[r];
        }

        let feasible = free.iter().all(|&i| cand[i] >= -1e-12);
        if feasible {
            for &i in &free {
                beta[i] = cand[i].max(0.0);
            }
            let obj = objective(a, y, &beta);
            if obj < best_obj {
                best_obj = obj;
                best_beta = beta.clone();
            }
            // dual feasibility of the bound constraints still active
            let bv = DVector::from_column_slice(&beta);
            let grad = &q * bv - &c;
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..k {
                if active[i] {
                    let mu = grad[i] - lambda;
                    if worst.map(|(_, w)| mu < w).unwrap_or(true) {
                        worst = Some((i, mu));
                    }
                }
            }
            match worst {
                Some((i, mu)) if mu < -1e-10 => {
                    active[i] = false;
                }
                _ => break, // KKT conditions hold
            }
        } else {
            // step toward the face solution until a coordinate hits zero
            let mut alpha = 1.0;
            let mut blocker = None;
            for &i in &free {
                if cand[i] < beta[i] {
                    let denom = beta[i] - cand[i];
                    if denom > 0.0 && cand[i] < 0.0 {
                        let step = beta[i] / denom;
                        if step < alpha {
                            alpha = step;
                            blocker = Some(i);
                        }
                    }
                }
            }
            for &i in &free {
                beta[i] += alpha * (cand[i] - beta[i]);
            }
            match blocker {
                Some(b) => {
                    beta[b] = 0.0;
                    active[b] = true;
                }
                None => break, // cannot happen unless numerics degenerate
            }
            let obj = objective(a, y, &beta);
            if obj < best_obj {
                best_obj = obj;
                best_beta = beta.clone();
            }
        }
    }

    // exact renormalization against accumulated rounding
    let total: f64 = best_beta.iter().sum();
    if total > 0.0 {
        for b in &mut best_beta {
            *b /= total;
        }
    }
    let objective = objective(a, y, &best_beta);
    SimplexLsSolution {
        beta: best_beta,
        objective,
        non_identified,
    }
}

/// `||y - A b||^2` for a candidate mixture.
pub fn objective(a: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64]) -> f64 {
    let bv = DVector::from_column_slice(beta);
    (y - a * bv).norm_squared()
}

/// True when every direction inside the simplex moves `A b`: the smallest
/// singular value of `A N` (N spanning the sum-zero subspace) is bounded away
/// from zero relative to the largest.
fn simplex_identified(a: &DMatrix<f64>) -> bool {
    let k = a.ncols();
    if k <= 1 {
        return true;
    }
    let m = a.nrows();
    if m < k - 1 {
        // fewer rows than simplex directions: the null space is nonempty
        return false;
    }
    let mut d = DMatrix::zeros(m, k - 1);
    for j in 0..k - 1 {
        for r in 0..m {
            d[(r, j)] = a[(r, j)] - a[(r, k - 1)];
        }
    }
    let sv = d.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    smin > 1e-10 * smax.max(1.0)
}
