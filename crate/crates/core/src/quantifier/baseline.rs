//! Classify-and-count baseline.
//!
//! Per-document max-posterior assignment under a naive word-presence model,
//! then counting. Kept only as the comparison method: its class priors come
//! from the training set, so it inherits the training mix under prior shift
//! where direct quantification does not.

use crate::corpus::{Category, TokenProfile};
use crate::error::{Error, Result};
use crate::quantifier::{CategoryDistribution, LabeledProfiles};

/// Naive Bayes over word-presence bits with add-1/2 smoothing.
#[derive(Debug, Clone)]
pub struct NaiveBayesModel {
    categories: Vec<Category>,
    ln_prior: Vec<f64>,
    /// log odds contribution of a present word: ln p - ln (1 - p)
    ln_odds: Vec<Vec<f64>>,
    /// per-category score of the empty profile: sum_j ln (1 - p_cj)
    base: Vec<f64>,
}

impl NaiveBayesModel {
    pub fn fit(train: &LabeledProfiles) -> Result<NaiveBayesModel> {
        let categories = train.categories();
        if categories.is_empty() {
            return Err(Error::invalid("training set has no categories"));
        }
        let k = categories.len();
        let v = train.vocab_len;
        let mut n_per_cat = vec![0usize; k];
        let mut present = vec![vec![0usize; v]; k];
        for (p, label) in train.profiles.iter().zip(&train.labels) {
            let j = categories.iter().position(|c| c == label).unwrap();
            n_per_cat[j] += 1;
            for &b in p.bits() {
                present[j][b as usize] += 1;
            }
        }
        let n_total: usize = n_per_cat.iter().sum();
        let mut ln_prior = Vec::with_capacity(k);
        let mut ln_odds = Vec::with_capacity(k);
        let mut base = Vec::with_capacity(k);
        for j in 0..k {
            ln_prior.push((n_per_cat[j] as f64 / n_total as f64).ln());
            let mut odds = Vec::with_capacity(v);
            let mut b = 0.0;
            for w in 0..v {
                let p = (present[j][w] as f64 + 0.5) / (n_per_cat[j] as f64 + 1.0);
                odds.push(p.ln() - (1.0 - p).ln());
                b += (1.0 - p).ln();
            }
            ln_odds.push(odds);
            base.push(b);
        }
        Ok(NaiveBayesModel {
            categories,
            ln_prior,
            ln_odds,
            base,
        })
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    /// Max-posterior category; ties break toward the canonical order.
    pub fn classify(&self, profile: &TokenProfile) -> Category {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for j in 0..self.categories.len() {
            let mut score = self.ln_prior[j] + self.base[j];
            for &b in profile.bits() {
                score += self.ln_odds[j][b as usize];
            }
            if score > best_score {
                best_score = score;
                best = j;
            }
        }
        self.categories[best]
    }
}

/// Classify every test document, then count.
pub fn classify_and_count(
    test: &[TokenProfile],
    train: &LabeledProfiles,
) -> Result<CategoryDistribution> {
    if test.is_empty() {
        return Err(Error::estimation("empty test corpus"));
    }
    let model = NaiveBayesModel::fit(train)?;
    let k = model.categories.len();
    let mut counts = vec![0usize; k];
    for p in test {
        let c = model.classify(p);
        let j = model.categories.iter().position(|x| *x == c).unwrap();
        counts[j] += 1;
    }
    let n = test.len() as f64;
    let probs = model
        .categories
        .iter()
        .zip(&counts)
        .map(|(c, cnt)| (*c, *cnt as f64 / n))
        .collect();
    CategoryDistribution::new(probs)
}
