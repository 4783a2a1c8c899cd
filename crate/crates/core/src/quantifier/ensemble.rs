//! Random-subspace ensembling and bootstrap intervals.
//!
//! A single profile matrix over the full vocabulary would index 2^V patterns;
//! averaging the estimator over many small random word subsets keeps the row
//! space tractable while still spanning the vocabulary.

use rayon::prelude::*;

use crate::corpus::{Category, TokenProfile};
use crate::error::{Error, Result};
use crate::quantifier::matrix::{estimate_conditional_matrix, quantify_freq, ProfileMatrix};
use crate::quantifier::{
    CategoryDistribution, LabeledProfiles, Quantification, QuantifyConfig, DEFAULT_SMOOTHING,
};
use crate::rng::{gen_index, sample_without_replacement, substream, tag};

/// A fitted ensemble: immutable after construction and shareable across
/// threads. Fitting draws `n_subsets` word subsets deterministically from
/// the config seed.
#[derive(Debug, Clone)]
pub struct EnsembleModel {
    matrices: Vec<ProfileMatrix>,
    categories: Vec<Category>,
}

impl EnsembleModel {
    pub fn fit(train: &LabeledProfiles, cfg: &QuantifyConfig) -> Result<EnsembleModel> {
        cfg.validate(train.vocab_len)?;
        let categories = train.categories();
        if categories.is_empty() {
            return Err(Error::invalid("training set has no categories"));
        }
        let matrices = (0..cfg.n_subsets)
            .into_par_iter()
            .map(|s| {
                let mut rng = substream(cfg.rng_seed, tag::SUBSET, s as u64);
                let subset =
                    sample_without_replacement(&mut rng, train.vocab_len, cfg.words_per_subset);
                estimate_conditional_matrix(train, &subset, DEFAULT_SMOOTHING, &categories)?
                    .with_unseen_row()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EnsembleModel {
            matrices,
            categories,
        })
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn n_subsets(&self) -> usize {
        self.matrices.len()
    }

    /// Row index of every test profile under every subset matrix.
    /// Precomputing this makes bootstrap replicates cheap.
    pub fn assign_rows(&self, test: &[TokenProfile]) -> Result<RowAssignments> {
        if test.is_empty() {
            return Err(Error::estimation("empty test corpus"));
        }
        let per_subset: Vec<Vec<u32>> = self
            .matrices
            .par_iter()
            .map(|pm| {
                test.iter()
                    .map(|p| pm.row_of(p).expect("trained matrix has an unseen row") as u32)
                    .collect()
            })
            .collect();
        Ok(RowAssignments {
            per_subset,
            n_docs: test.len(),
        })
    }

    /// Quantify an assigned test corpus; `weights` (bootstrap resample
    /// multiplicities) defaults to one per document.
    pub fn quantify_assigned(
        &self,
        asg: &RowAssignments,
        weights: Option<&[u32]>,
    ) -> Result<Quantification> {
        let results: Vec<Quantification> = self
            .matrices
            .par_iter()
            .zip(&asg.per_subset)
            .map(|(pm, rows)| {
                let mut y = vec![0.0; pm.n_rows()];
                match weights {
                    None => {
                        for &r in rows {
                            y[r as usize] += 1.0;
                        }
                    }
                    Some(w) => {
                        for (&r, &wi) in rows.iter().zip(w) {
                            y[r as usize] += wi as f64;
                        }
                    }
                }
                quantify_freq(&y, pm)
            })
            .collect::<Result<Vec<_>>>()?;

        // deterministic sequential reduction over the ordered subset results
        let k = self.categories.len();
        let mut mean = vec![0.0; k];
        let mut flagged = 0usize;
        for q in &results {
            for (j, c) in self.categories.iter().enumerate() {
                mean[j] += q.distribution.get(*c);
            }
            if q.non_identified {
                flagged += 1;
            }
        }
        let total: f64 = mean.iter().sum();
        let probs = self
            .categories
            .iter()
            .zip(&mean)
            .map(|(c, m)| (*c, m / total))
            .collect();
        Ok(Quantification {
            distribution: CategoryDistribution::new(probs)?,
            non_identified: flagged == results.len(),
        })
    }

    pub fn quantify(&self, test: &[TokenProfile]) -> Result<Quantification> {
        let asg = self.assign_rows(test)?;
        self.quantify_assigned(&asg, None)
    }
}

/// Precomputed per-subset row indices for a fixed test corpus.
#[derive(Debug, Clone)]
pub struct RowAssignments {
    per_subset: Vec<Vec<u32>>,
    n_docs: usize,
}

impl RowAssignments {
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

/// Mean of per-subset estimates over random word subsets, renormalized.
/// Deterministic given `cfg.rng_seed`, regardless of parallelism.
pub fn quantify_ensemble(
    test: &[TokenProfile],
    train: &LabeledProfiles,
    cfg: &QuantifyConfig,
) -> Result<Quantification> {
    EnsembleModel::fit(train, cfg)?.quantify(test)
}

/// 95% percentile interval for one category.
#[derive(Debug, Clone)]
pub struct CategoryInterval {
    pub category: Category,
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
}

/// Percentile bootstrap over test documents resampled with replacement.
///
/// Intervals are widened, when necessary, to contain the point estimate.
pub fn bootstrap_ci(
    test: &[TokenProfile],
    train: &LabeledProfiles,
    cfg: &QuantifyConfig,
) -> Result<Vec<CategoryInterval>> {
    if cfg.bootstrap_reps < 2 {
        return Err(Error::config("bootstrap needs at least 2 replicates"));
    }
    let model = EnsembleModel::fit(train, cfg)?;
    let asg = model.assign_rows(test)?;
    let point = model.quantify_assigned(&asg, None)?;
    let n = asg.n_docs();

    let replicates: Vec<CategoryDistribution> = (0..cfg.bootstrap_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(cfg.rng_seed, tag::BOOTSTRAP, rep as u64);
            let mut weights = vec![0u32; n];
            for _ in 0..n {
                weights[gen_index(&mut rng, n)] += 1;
            }
            model
                .quantify_assigned(&asg, Some(&weights))
                .map(|q| q.distribution)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(model.categories().len());
    for c in model.categories() {
        let mut values: Vec<f64> = replicates.iter().map(|d| d.get(*c)).collect();
        values.sort_by(|a, b| a.total_cmp(b));
        let est = point.distribution.get(*c);
        let low = percentile(&values, 0.025).min(est);
        let high = percentile(&values, 0.975).max(est);
        out.push(CategoryInterval {
            category: *c,
            estimate: est,
            low,
            high,
        });
    }
    Ok(out)
}

/// Empirical quantile with linear interpolation on a sorted slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}
