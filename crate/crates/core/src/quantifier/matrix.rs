//! Conditional profile matrices and the core quantification step.

use std::collections::HashMap;

use crate::corpus::{Category, TokenProfile};
use crate::error::{Error, Result};
use crate::quantifier::solver::solve_simplex_ls;
use crate::quantifier::{CategoryDistribution, Quantification};

/// A word-presence pattern restricted to a vocabulary subset.
///
/// Subsets of at most 64 words pack into a bitmask; wider subsets fall back
/// to a sorted index list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    Bits(u64),
    Wide(Box<[u32]>),
}

/// Estimated `P(profile | category)` per category, over the profile patterns
/// observed in a training set, optionally extended with one pooled row for
/// patterns unseen in training.
#[derive(Debug, Clone)]
pub struct ProfileMatrix {
    categories: Vec<Category>,
    /// Sorted vocabulary indices the patterns are restricted to; empty for
    /// raw matrices built directly from numbers.
    subset: Vec<u32>,
    patterns: Vec<Pattern>,
    pattern_index: HashMap<Pattern, usize>,
    /// Row-major, `n_rows x n_categories`. Each column sums to 1.
    values: Vec<f64>,
    n_rows: usize,
    /// Index of the pooled unseen-pattern row, when present (always last).
    unseen_row: Option<usize>,
    /// Leave-one-out estimate of P(unseen pattern | category), kept so the
    /// unseen row can be attached after estimation.
    unseen_estimate: Vec<f64>,
}

impl ProfileMatrix {
    /// Build a matrix directly from per-category probability columns
    /// (used by tests, oracles, and foreign callers). No pattern mapping.
    pub fn from_columns(
        categories: Vec<Category>,
        columns: Vec<Vec<f64>>,
    ) -> Result<ProfileMatrix> {
        if categories.is_empty() || columns.len() != categories.len() {
            return Err(Error::invalid("need one column per category"));
        }
        let n_rows = columns[0].len();
        if n_rows == 0 {
            return Err(Error::invalid("profile matrix needs at least one row"));
        }
        for (c, col) in categories.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::invalid("ragged profile matrix"));
            }
            let sum: f64 = col.iter().sum();
            if col.iter().any(|v| *v < -1e-12 || !v.is_finite()) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "column for {c} is not a probability vector (sum {sum})"
                )));
            }
        }
        let mut values = vec![0.0; n_rows * categories.len()];
        for (j, col) in columns.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                values[r * categories.len() + j] = *v;
            }
        }
        Ok(ProfileMatrix {
            categories,
            subset: Vec::new(),
            patterns: Vec::new(),
            pattern_index: HashMap::new(),
            values,
            n_rows,
            unseen_row: None,
            unseen_estimate: Vec::new(),
        })
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn value(&self, row: usize, cat: usize) -> f64 {
        self.values[row * self.categories.len() + cat]
    }

    pub fn column(&self, cat: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.value(r, cat)).collect()
    }

    pub fn unseen_row(&self) -> Option<usize> {
        self.unseen_row
    }

    /// Restrict a full-vocabulary profile to this matrix's subset.
    pub fn pattern_of(&self, profile: &TokenProfile) -> Pattern {
        pattern_of(profile, &self.subset)
    }

    /// Row index of a test profile: its observed row, or the unseen row.
    pub fn row_of(&self, profile: &TokenProfile) -> Option<usize> {
        if self.subset.is_empty() && self.patterns.is_empty() {
            return None;
        }
        match self.pattern_index.get(&self.pattern_of(profile)) {
            Some(&r) => Some(r),
            None => self.unseen_row,
        }
    }

    /// Attach the pooled unseen-pattern row: observed rows are rescaled by
    /// `1 - u_c` and the new final row carries the leave-one-out estimate
    /// `u_c` per category, so columns still sum to 1.
    pub fn with_unseen_row(mut self) -> Result<ProfileMatrix> {
        if self.unseen_row.is_some() {
            return Ok(self);
        }
        if self.unseen_estimate.is_empty() {
            return Err(Error::invalid(
                "matrix was not estimated from training data; no unseen-row estimate",
            ));
        }
        let k = self.categories.len();
        for r in 0..self.n_rows {
            for (j, u) in self.unseen_estimate.iter().enumerate() {
                self.values[r * k + j] *= 1.0 - u;
            }
        }
        self.values.extend_from_slice(&self.unseen_estimate);
        self.unseen_row = Some(self.n_rows);
        self.n_rows += 1;
        Ok(self)
    }

    /// Column-stochastic sanity check used by tests and debug assertions.
    pub fn check_invariants(&self) -> Result<()> {
        for (j, c) in self.categories.iter().enumerate() {
            let sum: f64 = (0..self.n_rows).map(|r| self.value(r, j)).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("column {c} sums to {sum}")));
            }
            if (0..self.n_rows).any(|r| self.value(r, j) < 0.0) {
                return Err(Error::invalid(format!("column {c} has negative entries")));
            }
        }
        Ok(())
    }
}

fn pattern_of(profile: &TokenProfile, subset: &[u32]) -> Pattern {
    if subset.len() <= 64 {
        let mut mask = 0u64;
        let bits = profile.bits();
        let mut i = 0;
        for (slot, idx) in subset.iter().enumerate() {
            while i < bits.len() && bits[i] < *idx {
                i += 1;
            }
            if i < bits.len() && bits[i] == *idx {
                mask |= 1 << slot;
            }
        }
        Pattern::Bits(mask)
    } else {
        let slots: Vec<u32> = subset
            .iter()
            .enumerate()
            .filter(|(_, idx)| profile.contains(**idx))
            .map(|(slot, _)| slot as u32)
            .collect();
        Pattern::Wide(slots.into_boxed_slice())
    }
}

/// Estimate the conditional profile matrix on a vocabulary subset.
///
/// Column `c` is the empirical distribution of observed patterns among
/// training documents labeled `c`, with add-`alpha` smoothing over the
/// observed rows: `(count + alpha) / (n_c + alpha * n_rows)`.
pub fn estimate_conditional_matrix(
    train: &crate::quantifier::LabeledProfiles,
    vocab_subset: &[u32],
    alpha: f64,
    categories: &[Category],
) -> Result<ProfileMatrix> {
    if categories.is_empty() {
        return Err(Error::invalid("no categories to estimate"));
    }
    if vocab_subset.is_empty() {
        return Err(Error::invalid("empty vocabulary subset"));
    }
    if alpha < 0.0 {
        return Err(Error::invalid("smoothing alpha must be >= 0"));
    }
    let mut subset: Vec<u32> = vocab_subset.to_vec();
    subset.sort_unstable();
    subset.dedup();

    let k = categories.len();
    let cat_slot: HashMap<Category, usize> = categories
        .iter()
        .enumerate()
        .map(|(i, c)| (*c, i))
        .collect();
    let mut n_per_cat = vec![0usize; k];

    // count (pattern, category) occurrences over the training set
    let mut counts: HashMap<Pattern, Vec<u32>> = HashMap::new();
    for (p, label) in train.profiles.iter().zip(&train.labels) {
        let Some(&slot) = cat_slot.get(label) else {
            continue; // training doc for a category we are not estimating
        };
        n_per_cat[slot] += 1;
        let pat = pattern_of(p, &subset);
        counts.entry(pat).or_insert_with(|| vec![0; k])[slot] += 1;
    }
    for (c, n) in categories.iter().zip(&n_per_cat) {
        if *n == 0 {
            return Err(Error::estimation(format!(
                "category {c} has zero training documents"
            )));
        }
    }

    let mut patterns: Vec<Pattern> = counts.keys().cloned().collect();
    patterns.sort();
    let n_rows = patterns.len();

    // leave-one-out unseen estimate: fraction of category docs whose pattern
    // is a singleton in the whole training set
    let mut singleton = vec![0usize; k];
    for per_cat in counts.values() {
        let total: u32 = per_cat.iter().sum();
        if total == 1 {
            let j = per_cat.iter().position(|&c| c == 1).unwrap();
            singleton[j] += 1;
        }
    }
    let unseen_estimate: Vec<f64> = singleton
        .iter()
        .zip(&n_per_cat)
        .map(|(s, n)| *s as f64 / *n as f64)
        .collect();

    let mut values = vec![0.0; n_rows * k];
    let mut pattern_index = HashMap::with_capacity(n_rows);
    for (r, pat) in patterns.iter().enumerate() {
        let per_cat = &counts[pat];
        for j in 0..k {
            values[r * k + j] =
                (per_cat[j] as f64 + alpha) / (n_per_cat[j] as f64 + alpha * n_rows as f64);
        }
        pattern_index.insert(pat.clone(), r);
    }

    Ok(ProfileMatrix {
        categories: categories.to_vec(),
        subset,
        patterns,
        pattern_index,
        values,
        n_rows,
        unseen_row: None,
        unseen_estimate,
    })
}

/// Quantify from an explicit test-profile frequency vector over the matrix's
/// row support. `y` is normalized to sum 1 before solving.
pub fn quantify_freq(y: &[f64], pm: &ProfileMatrix) -> Result<Quantification> {
    if y.len() != pm.n_rows() {
        return Err(Error::invalid(format!(
            "frequency vector has {} entries, matrix has {} rows",
            y.len(),
            pm.n_rows()
        )));
    }
    let total: f64 = y.iter().sum();
    if total.is_nan() || total <= 0.0 || y.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::estimation(
            "test frequencies must be nonnegative with positive total",
        ));
    }
    let y: Vec<f64> = y.iter().map(|v| v / total).collect();

    let solution = solve_simplex_ls(pm, &y);
    let mut probs = std::collections::BTreeMap::new();
    let norm: f64 = solution.beta.iter().map(|b| b.max(0.0)).sum();
    for (c, b) in pm.categories().iter().zip(&solution.beta) {
        probs.insert(*c, b.max(0.0) / norm);
    }
    Ok(Quantification {
        distribution: CategoryDistribution::new(probs)?,
        non_identified: solution.non_identified,
    })
}

/// Quantify a test corpus given as full-vocabulary profiles. Patterns unseen
/// in training pool into the matrix's unseen row.
pub fn quantify(test_profiles: &[TokenProfile], pm: &ProfileMatrix) -> Result<Quantification> {
    if test_profiles.is_empty() {
        return Err(Error::estimation("empty test corpus"));
    }
    let mut y = vec![0.0; pm.n_rows()];
    for p in test_profiles {
        match pm.row_of(p) {
            Some(r) => y[r] += 1.0,
            None => {
                return Err(Error::estimation(
                    "test profile outside matrix support and no unseen row present",
                ))
            }
        }
    }
    quantify_freq(&y, pm)
}
