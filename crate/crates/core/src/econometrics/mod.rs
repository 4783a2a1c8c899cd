//! Regression machinery: OLS with heteroskedasticity-robust standard errors
//! and BIC, and NB2 negative-binomial count models with an exposure offset
//! and sandwich standard errors.

pub mod negbin;
pub mod ols;
pub mod panel;

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

pub use negbin::{negbin_fit, predict_counts};
pub use ols::{ols_fit, ols_fit_design};
pub use panel::{ff_model_fit, read_country_panel_csv, CountryPanelRow, FfModel};

/// A fitted regression: coefficients with robust standard errors plus the
/// model-level diagnostics each estimator reports.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub robust_se: Vec<f64>,
    /// Gaussian log likelihood (OLS) or NB log pseudolikelihood.
    pub loglik: f64,
    /// `n ln(RSS/n) + p ln(n)`; OLS only.
    pub bic: Option<f64>,
    pub n: usize,
    pub converged: bool,
    /// NB2 dispersion; `None` for OLS.
    pub alpha: Option<f64>,
    /// Set when the dispersion optimum sat on the Poisson boundary.
    pub poisson_limit: bool,
    pub residuals: Vec<f64>,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.position(name).map(|i| self.coefficients[i])
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        self.position(name).map(|i| self.robust_se[i])
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Two-sided p-value for coefficient `j`: Student t with `n - p` degrees
    /// of freedom for OLS, standard normal for the count models.
    pub fn p_value(&self, j: usize) -> f64 {
        let se = self.robust_se[j];
        if se <= 0.0 {
            return if self.coefficients[j] == 0.0 {
                1.0
            } else {
                0.0
            };
        }
        let z = (self.coefficients[j] / se).abs();
        if self.alpha.is_some() {
            let norm = Normal::new(0.0, 1.0).unwrap();
            2.0 * (1.0 - norm.cdf(z))
        } else {
            let df = (self.n.saturating_sub(self.names.len())).max(1) as f64;
            let t = StudentsT::new(0.0, 1.0, df).unwrap();
            2.0 * (1.0 - t.cdf(z))
        }
    }

    /// 95% confidence interval for coefficient `j` under the same reference
    /// distribution as [`RegressionFit::p_value`].
    pub fn ci95(&self, j: usize) -> (f64, f64) {
        let crit = if self.alpha.is_some() {
            Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.975)
        } else {
            let df = (self.n.saturating_sub(self.names.len())).max(1) as f64;
            StudentsT::new(0.0, 1.0, df).unwrap().inverse_cdf(0.975)
        };
        let half = crit * self.robust_se[j];
        (self.coefficients[j] - half, self.coefficients[j] + half)
    }
}

/// Significance stars in the usual social-science convention.
pub fn stars_for_p(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else if p < 0.10 {
        "+"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_thresholds() {
        assert_eq!(stars_for_p(0.0005), "***");
        assert_eq!(stars_for_p(0.005), "**");
        assert_eq!(stars_for_p(0.02), "*");
        assert_eq!(stars_for_p(0.07), "+");
        assert_eq!(stars_for_p(0.5), "");
    }
}
