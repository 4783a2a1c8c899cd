//! Direct estimation of category proportions in an unlabeled corpus.
//!
//! The estimator inverts the mixture `y = Pm * beta` on the probability
//! simplex, where `y` holds observed test-profile frequencies and `Pm` the
//! training-estimated conditional profile distributions per category. It
//! needs no per-document classification and tolerates training sets whose
//! category mix differs from the population's, as long as the language used
//! per category is shared. A classify-and-count baseline is included for
//! comparison only.

pub mod baseline;
pub mod ensemble;
pub mod matrix;
pub mod solver;

use std::collections::BTreeMap;

use crate::corpus::normalize_tokens;
use crate::corpus::{profile, Category, NormConfig, TokenProfile, TrainingSet, Vocabulary};
use crate::error::{Error, Result};

pub use baseline::{classify_and_count, NaiveBayesModel};
pub use ensemble::{bootstrap_ci, quantify_ensemble, CategoryInterval, EnsembleModel};
pub use matrix::{estimate_conditional_matrix, quantify, quantify_freq, Pattern, ProfileMatrix};
pub use solver::solve_simplex_ls;

/// A probability vector over categories.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryDistribution {
    probs: BTreeMap<Category, f64>,
}

impl CategoryDistribution {
    /// Validates entries in `[0,1]` and a total of 1 within 1e-9.
    pub fn new(probs: BTreeMap<Category, f64>) -> Result<CategoryDistribution> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution over zero categories"));
        }
        let mut sum = 0.0;
        for (c, p) in &probs {
            if !p.is_finite() || *p < -1e-12 || *p > 1.0 + 1e-9 {
                return Err(Error::invalid(format!(
                    "probability {p} for {c} out of range"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(CategoryDistribution { probs })
    }

    pub fn from_pairs(pairs: &[(Category, f64)]) -> Result<CategoryDistribution> {
        CategoryDistribution::new(pairs.iter().copied().collect())
    }

    /// Probability of a category; 0 for categories not estimated.
    pub fn get(&self, c: Category) -> f64 {
        self.probs.get(&c).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &BTreeMap<Category, f64> {
        &self.probs
    }

    pub fn categories(&self) -> impl Iterator<Item = Category> + '_ {
        self.probs.keys().copied()
    }
}

/// A quantification result plus identification diagnostics.
#[derive(Debug, Clone)]
pub struct Quantification {
    pub distribution: CategoryDistribution,
    /// Set when the conditional matrix cannot distinguish the categories
    /// (for example, all columns identical); the point estimate is then
    /// one of many minimizers.
    pub non_identified: bool,
}

/// Ensemble and bootstrap configuration.
#[derive(Debug, Clone)]
pub struct QuantifyConfig {
    /// Number of random word subsets averaged by the ensemble.
    pub n_subsets: usize,
    /// Words drawn per subset.
    pub words_per_subset: usize,
    /// Bootstrap replicates for interval estimation.
    pub bootstrap_reps: usize,
    /// Root seed; all randomness derives from it.
    pub rng_seed: u64,
}

impl Default for QuantifyConfig {
    /// 50 subsets of 5 words. Small subsets keep many training documents
    /// behind every observed pattern (with 2^5 candidate patterns a
    /// 1,600-document training set averages ~50 documents per row), which is
    /// what keeps the conditional estimates, and hence the mixture solve,
    /// well calibrated.
    fn default() -> Self {
        QuantifyConfig {
            n_subsets: 50,
            words_per_subset: 5,
            bootstrap_reps: 200,
            rng_seed: 0,
        }
    }
}

impl QuantifyConfig {
    pub fn validate(&self, vocab_len: usize) -> Result<()> {
        if self.n_subsets < 1 || self.words_per_subset < 1 || self.bootstrap_reps < 1 {
            return Err(Error::config("all quantifier counts must be >= 1"));
        }
        if self.words_per_subset > vocab_len {
            return Err(Error::config(format!(
                "words_per_subset {} exceeds vocabulary size {vocab_len}",
                self.words_per_subset
            )));
        }
        Ok(())
    }
}

/// Default add-alpha smoothing over observed profile rows.
pub const DEFAULT_SMOOTHING: f64 = 0.5;

/// Training documents reduced to word-presence profiles.
#[derive(Debug, Clone)]
pub struct LabeledProfiles {
    pub profiles: Vec<TokenProfile>,
    pub labels: Vec<Category>,
    pub vocab_len: usize,
}

impl LabeledProfiles {
    pub fn from_training(
        train: &TrainingSet,
        vocab: &Vocabulary,
        cfg: &NormConfig,
    ) -> LabeledProfiles {
        let mut profiles = Vec::with_capacity(train.len());
        let mut labels = Vec::with_capacity(train.len());
        for item in train.items() {
            let tokens = normalize_tokens(&item.doc.text, cfg);
            profiles.push(profile(&tokens, vocab));
            labels.push(item.category);
        }
        LabeledProfiles {
            profiles,
            labels,
            vocab_len: vocab.len(),
        }
    }

    pub fn new(
        profiles: Vec<TokenProfile>,
        labels: Vec<Category>,
        vocab_len: usize,
    ) -> Result<Self> {
        if profiles.len() != labels.len() {
            return Err(Error::invalid("profiles and labels differ in length"));
        }
        if profiles.is_empty() {
            return Err(Error::invalid("no training profiles"));
        }
        Ok(LabeledProfiles {
            profiles,
            labels,
            vocab_len,
        })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Distinct categories present, in canonical order.
    pub fn categories(&self) -> Vec<Category> {
        Category::ALL
            .iter()
            .copied()
            .filter(|c| self.labels.contains(c))
            .collect()
    }
}

/// Positive share among opinionated mass: `Positive / (Positive + Negative)`.
/// Neutral and OffTopic mass is ignored by construction.
pub fn sentiment_ratio(d: &CategoryDistribution) -> Result<f64> {
    let pos = d.get(Category::Positive);
    let neg = d.get(Category::Negative);
    let denom = pos + neg;
    if denom <= 1e-12 {
        return Err(Error::estimation(
            "sentiment ratio undefined: no positive or negative mass",
        ));
    }
    Ok(pos / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(Category, f64)]) -> CategoryDistribution {
        CategoryDistribution::from_pairs(pairs).unwrap()
    }

    #[test]
    fn ratio_ignores_neutral() {
        let d = dist(&[
            (Category::Positive, 0.10),
            (Category::Negative, 0.30),
            (Category::Neutral, 0.60),
        ]);
        assert!((sentiment_ratio(&d).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ratio_symmetric_point() {
        let d = dist(&[
            (Category::Positive, 0.2),
            (Category::Negative, 0.2),
            (Category::Neutral, 0.6),
        ]);
        assert!((sentiment_ratio(&d).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ratio_neutral_invariant() {
        let base = dist(&[(Category::Positive, 0.25), (Category::Negative, 0.75)]);
        // add neutral mass and renormalize the whole distribution
        let with_neutral = dist(&[
            (Category::Positive, 0.25 * 0.5),
            (Category::Negative, 0.75 * 0.5),
            (Category::Neutral, 0.5),
        ]);
        let r0 = sentiment_ratio(&base).unwrap();
        let r1 = sentiment_ratio(&with_neutral).unwrap();
        assert!((r0 - r1).abs() < 1e-12);
    }

    #[test]
    fn ratio_zero_denominator_errors() {
        let d = dist(&[
            (Category::Neutral, 1.0),
            (Category::Positive, 0.0),
            (Category::Negative, 0.0),
        ]);
        assert!(sentiment_ratio(&d).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(CategoryDistribution::from_pairs(&[(Category::Positive, 0.7)]).is_err());
        assert!(CategoryDistribution::from_pairs(&[
            (Category::Positive, 0.7),
            (Category::Negative, 0.3)
        ])
        .is_ok());
    }
}
