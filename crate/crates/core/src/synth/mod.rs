//! Synthetic corpora with known ground truth, plus brute-force reference
//! solvers. These stand in for the unavailable production stream in every
//! verification: each generator returns its truth alongside the data so no
//! test ever re-estimates its own ground truth.

pub mod oracle;

use std::collections::BTreeMap;

use chrono::{NaiveDate, TimeZone, Utc};
use rayon::prelude::*;

use crate::corpus::{Category, Document, TrainingItem, TrainingSet};
use crate::error::{Error, Result};
use crate::events::{EventCalendar, EventKind};
use crate::quantifier::CategoryDistribution;
use crate::rng::{gen_normal, substream, tag, CategoricalSampler};

pub use oracle::{oracle_negbin_grid, oracle_simplex_ls, GridSolution, NegbinGridSolution};

/// Language model for one category: token-draw probabilities over the
/// synthetic vocabulary. Train and test share these conditionals.
#[derive(Debug, Clone)]
pub struct CategoryModel {
    pub category: Category,
    pub token_probs: Vec<f64>,
}

/// Specification of a synthetic corpus.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub categories: Vec<CategoryModel>,
    pub train_priors: Vec<f64>,
    pub test_priors: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub vocab_size: usize,
    /// Documents draw a truncated-geometric length with this mean.
    pub mean_doc_len: f64,
    pub max_doc_len: usize,
    pub rng_seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(Error::config("generator needs categories"));
        }
        for m in &self.categories {
            if m.token_probs.len() != self.vocab_size {
                return Err(Error::config("token_probs length must equal vocab_size"));
            }
            let s: f64 = m.token_probs.iter().sum();
            if s.is_nan() || s <= 0.0 {
                return Err(Error::config(format!(
                    "category {} has a zero-mass language model",
                    m.category
                )));
            }
            if m.token_probs.iter().any(|p| *p < 0.0) {
                return Err(Error::config("negative token probability"));
            }
        }
        for (name, priors) in [("train", &self.train_priors), ("test", &self.test_priors)] {
            if priors.len() != self.categories.len() {
                return Err(Error::config(format!("{name} priors length mismatch")));
            }
            let s: f64 = priors.iter().sum();
            if (s - 1.0).abs() > 1e-9 || priors.iter().any(|p| *p < 0.0) {
                return Err(Error::config(format!(
                    "{name} priors must lie on the simplex"
                )));
            }
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::config("need n_train >= 1 and n_test >= 1"));
        }
        if self.mean_doc_len.is_nan() || self.mean_doc_len < 1.0 || self.max_doc_len < 1 {
            return Err(Error::config("document length spec invalid"));
        }
        Ok(())
    }

    /// Convenience builder: signature tokens per category over a shared bulk.
    ///
    /// Each category concentrates `signal_mass` on its own block of
    /// `vocab_size / n_categories` words and spreads the rest uniformly, so
    /// categories overlap but stay identifiable.
    pub fn block_structure(
        categories: &[Category],
        vocab_size: usize,
        signal_mass: f64,
        train_priors: Vec<f64>,
        test_priors: Vec<f64>,
        n_train: usize,
        n_test: usize,
        rng_seed: u64,
    ) -> GeneratorSpec {
        let k = categories.len();
        let block = vocab_size / k;
        let models = categories
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let mut probs = vec![(1.0 - signal_mass) / vocab_size as f64; vocab_size];
                let lo = j * block;
                let hi = if j == k - 1 { vocab_size } else { lo + block };
                for slot in probs.iter_mut().take(hi).skip(lo) {
                    *slot += signal_mass / (hi - lo) as f64;
                }
                CategoryModel {
                    category: *c,
                    token_probs: probs,
                }
            })
            .collect();
        GeneratorSpec {
            categories: models,
            train_priors,
            test_priors,
            n_train,
            n_test,
            vocab_size,
            mean_doc_len: 12.0,
            max_doc_len: 60,
            rng_seed,
        }
    }
}

/// A generated corpus: labeled training set, unlabeled stream, and the truth.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub train: TrainingSet,
    pub stream: Vec<Document>,
    /// Realized test label frequencies (not the nominal priors).
    pub truth: CategoryDistribution,
    pub test_labels: Vec<Category>,
}

/// Draw a corpus: training documents from `train_priors`, test documents from
/// `test_priors`, both from the same per-category conditionals.
pub fn gen_corpus(spec: &GeneratorSpec) -> Result<GeneratedCorpus> {
    spec.validate()?;
    let samplers: Vec<CategoricalSampler> = spec
        .categories
        .iter()
        .map(|m| CategoricalSampler::new(&m.token_probs))
        .collect();
    let train_prior = CategoricalSampler::new(&spec.train_priors);
    let test_prior = CategoricalSampler::new(&spec.test_priors);
    let base = Utc.with_ymd_and_hms(2014, 7, 1, 0, 0, 0).unwrap();

    let mut items = Vec::with_capacity(spec.n_train);
    {
        let mut rng = substream(spec.rng_seed, tag::TRAIN, 0);
        for i in 0..spec.n_train {
            let cat_idx = train_prior.sample(&mut rng);
            let text = draw_text(spec, &samplers[cat_idx], &mut rng);
            items.push(TrainingItem {
                doc: Document {
                    id: format!("train-{i}"),
                    timestamp: base + chrono::Duration::seconds(i as i64),
                    text,
                    lang: None,
                    geo: None,
                    user_location: None,
                    utc_offset: None,
                },
                category: spec.categories[cat_idx].category,
                coder_id: None,
            });
        }
    }

    let mut stream = Vec::with_capacity(spec.n_test);
    let mut test_labels = Vec::with_capacity(spec.n_test);
    {
        let mut rng = substream(spec.rng_seed, tag::TEST, 0);
        for i in 0..spec.n_test {
            let cat_idx = test_prior.sample(&mut rng);
            let text = draw_text(spec, &samplers[cat_idx], &mut rng);
            test_labels.push(spec.categories[cat_idx].category);
            stream.push(Document {
                id: format!("test-{i}"),
                timestamp: base + chrono::Duration::seconds(i as i64),
                text,
                lang: None,
                geo: None,
                user_location: None,
                utc_offset: None,
            });
        }
    }

    let truth = realized_distribution(&test_labels, &spec.categories)?;
    Ok(GeneratedCorpus {
        train: TrainingSet::new(items)?,
        stream,
        truth,
        test_labels,
    })
}

fn realized_distribution(
    labels: &[Category],
    models: &[CategoryModel],
) -> Result<CategoryDistribution> {
    let n = labels.len() as f64;
    let probs: BTreeMap<Category, f64> = models
        .iter()
        .map(|m| {
            let count = labels.iter().filter(|l| **l == m.category).count();
            (m.category, count as f64 / n)
        })
        .collect();
    CategoryDistribution::new(probs)
}

fn draw_text(
    spec: &GeneratorSpec,
    sampler: &CategoricalSampler,
    rng: &mut impl rand::RngCore,
) -> String {
    // truncated geometric length with the requested mean
    let continue_p = 1.0 - 1.0 / spec.mean_doc_len;
    let threshold = (continue_p * (1u64 << 53) as f64) as u64;
    let mut len = 1usize;
    while len < spec.max_doc_len && (rng.next_u64() >> 11) < threshold {
        len += 1;
    }
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        words.push(format!("w{}", sampler.sample(rng)));
    }
    words.join(" ")
}

/// Spec of daily event effects on sentiment. Effects are additive on the
/// day's positive share; defaults carry the published Model 1 magnitudes.
#[derive(Debug, Clone)]
pub struct EventEffectSpec {
    pub baseline_sentiment: f64,
    pub effects: BTreeMap<EventKind, f64>,
    pub noise_sd: f64,
    pub calendar: EventCalendar,
}

impl EventEffectSpec {
    pub fn default_effects() -> BTreeMap<EventKind, f64> {
        BTreeMap::from([
            (EventKind::MosqueImamAttack, -0.046),
            (EventKind::MilitaryVictory, -0.047),
            (EventKind::MilitaryDefeat, -0.007),
            (EventKind::BeheadingWestern, 0.116),
            (EventKind::BeheadingNonWestern, -0.049),
            (EventKind::MuslimUnitySpeech, -0.043),
            (EventKind::CharlieHebdo, -0.117),
        ])
    }

    pub fn new(baseline_sentiment: f64, noise_sd: f64, calendar: EventCalendar) -> EventEffectSpec {
        EventEffectSpec {
            baseline_sentiment,
            effects: Self::default_effects(),
            noise_sd,
            calendar,
        }
    }
}

/// A generated daily stream plus the target sentiment series it was built to
/// follow.
#[derive(Debug, Clone)]
pub struct EventStream {
    pub docs: Vec<Document>,
    /// Per-day target sentiment (baseline + active effects + noise, clamped).
    pub truth: Vec<(NaiveDate, f64)>,
    pub clamped_days: usize,
}

/// Generate `docs_per_day` documents for every day in `window` (inclusive).
///
/// Day `d`'s positive share is `baseline + sum(active event effects) + noise`,
/// clamped to `[0.01, 0.99]`; specs that clamp more than 5% of days are
/// rejected. The Positive/Negative split of `quant.test_priors` is re-balanced
/// per day to hit the target; other categories keep their prior mass.
pub fn gen_event_stream(
    spec: &EventEffectSpec,
    quant: &GeneratorSpec,
    window: (NaiveDate, NaiveDate),
    docs_per_day: usize,
) -> Result<EventStream> {
    quant.validate()?;
    let (start, end) = window;
    if start > end || docs_per_day == 0 {
        return Err(Error::config("empty window or zero documents per day"));
    }
    for (d, _) in &spec.calendar.entries {
        if *d < start || *d > end {
            return Err(Error::config(format!(
                "calendar event on {d} outside the window"
            )));
        }
    }
    let pos_idx = quant
        .categories
        .iter()
        .position(|m| m.category == Category::Positive)
        .ok_or_else(|| Error::config("event stream needs a Positive category"))?;
    let neg_idx = quant
        .categories
        .iter()
        .position(|m| m.category == Category::Negative)
        .ok_or_else(|| Error::config("event stream needs a Negative category"))?;
    let opinion_mass = quant.test_priors[pos_idx] + quant.test_priors[neg_idx];
    if opinion_mass.is_nan() || opinion_mass <= 0.0 {
        return Err(Error::config("test priors carry no Positive/Negative mass"));
    }

    let n_days = (end - start).num_days() as usize + 1;
    let samplers: Vec<CategoricalSampler> = quant
        .categories
        .iter()
        .map(|m| CategoricalSampler::new(&m.token_probs))
        .collect();

    // target sentiment per day
    let mut truth = Vec::with_capacity(n_days);
    let mut clamped_days = 0usize;
    for i in 0..n_days {
        let date = start + chrono::Duration::days(i as i64);
        let mut s = spec.baseline_sentiment;
        for (d, kind) in &spec.calendar.entries {
            if *d == date {
                if let Some(e) = spec.effects.get(kind) {
                    s += e;
                }
            }
        }
        if spec.noise_sd > 0.0 {
            let mut rng = substream(quant.rng_seed, tag::NOISE, i as u64);
            s += spec.noise_sd * gen_normal(&mut rng);
        }
        let clamped = s.clamp(0.01, 0.99);
        if clamped != s {
            clamped_days += 1;
        }
        truth.push((date, clamped));
    }
    if clamped_days * 20 > n_days {
        return Err(Error::config(format!(
            "{clamped_days} of {n_days} days clamped; effect spec is out of range"
        )));
    }

    let per_day: Vec<Vec<Document>> = (0..n_days)
        .into_par_iter()
        .map(|i| {
            let date = truth[i].0;
            let target = truth[i].1;
            let mut priors = quant.test_priors.clone();
            priors[pos_idx] = target * opinion_mass;
            priors[neg_idx] = (1.0 - target) * opinion_mass;
            let prior_sampler = CategoricalSampler::new(&priors);
            let mut rng = substream(quant.rng_seed, tag::DAY, i as u64);
            let midnight = date.and_hms_opt(0, 0, 0).unwrap().and_utc();
            (0..docs_per_day)
                .map(|j| {
                    let cat_idx = prior_sampler.sample(&mut rng);
                    let text = draw_text(quant, &samplers[cat_idx], &mut rng);
                    Document {
                        id: format!("d{i}-{j}"),
                        timestamp: midnight + chrono::Duration::seconds(j as i64 % 86_400),
                        text,
                        lang: None,
                        geo: None,
                        user_location: None,
                        utc_offset: None,
                    }
                })
                .collect()
        })
        .collect();

    Ok(EventStream {
        docs: per_day.into_iter().flatten().collect(),
        truth,
        clamped_days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_cat_spec(seed: u64) -> GeneratorSpec {
        GeneratorSpec::block_structure(
            &[Category::Positive, Category::Negative, Category::Neutral],
            30,
            0.5,
            vec![0.5, 0.3, 0.2],
            vec![0.2, 0.3, 0.5],
            400,
            2_000,
            seed,
        )
    }

    #[test]
    fn truth_is_realized_frequencies() {
        let spec = three_cat_spec(9);
        let corpus = gen_corpus(&spec).unwrap();
        let n = corpus.test_labels.len() as f64;
        for m in &spec.categories {
            let realized = corpus
                .test_labels
                .iter()
                .filter(|l| **l == m.category)
                .count() as f64
                / n;
            assert_eq!(corpus.truth.get(m.category), realized);
        }
    }

    #[test]
    fn degenerate_prior_gives_indicator_truth() {
        let mut spec = three_cat_spec(4);
        spec.test_priors = vec![0.0, 0.0, 1.0];
        let corpus = gen_corpus(&spec).unwrap();
        assert_eq!(corpus.truth.get(Category::Neutral), 1.0);
        assert_eq!(corpus.truth.get(Category::Positive), 0.0);
    }

    #[test]
    fn shifted_priors_realize_within_binomial_bound() {
        // priors (0.9, 0.1) -> (0.2, 0.8): realized truth within 4 binomial sd
        let spec = GeneratorSpec::block_structure(
            &[Category::Positive, Category::Negative],
            20,
            0.5,
            vec![0.9, 0.1],
            vec![0.2, 0.8],
            200,
            100_000,
            11,
        );
        let corpus = gen_corpus(&spec).unwrap();
        let sd = (0.2_f64 * 0.8 / 100_000.0).sqrt();
        assert!((corpus.truth.get(Category::Positive) - 0.2).abs() < 4.0 * sd);
    }

    #[test]
    fn byte_identical_across_runs() {
        let spec = three_cat_spec(77);
        let a = gen_corpus(&spec).unwrap();
        let b = gen_corpus(&spec).unwrap();
        assert_eq!(a.stream.len(), b.stream.len());
        for (x, y) in a.stream.iter().zip(&b.stream) {
            assert_eq!(x.text, y.text);
        }
    }

    #[test]
    fn zero_mass_category_rejected() {
        let mut spec = three_cat_spec(1);
        spec.categories[0].token_probs = vec![0.0; 30];
        assert!(gen_corpus(&spec).is_err());
    }

    #[test]
    fn event_stream_truth_dips_by_injected_effect() {
        let window: (NaiveDate, NaiveDate) =
            ("2014-08-01".parse().unwrap(), "2014-08-10".parse().unwrap());
        let event_day: NaiveDate = "2014-08-05".parse().unwrap();
        let cal = EventCalendar::new(vec![(event_day, EventKind::MosqueImamAttack)]);
        let spec = EventEffectSpec::new(0.25, 0.0, cal);
        let quant = three_cat_spec(3);
        let stream = gen_event_stream(&spec, &quant, window, 50).unwrap();
        for (d, s) in &stream.truth {
            let expect = if *d == event_day { 0.25 - 0.046 } else { 0.25 };
            assert!((s - expect).abs() < 1e-12, "{d}: {s}");
        }
        assert_eq!(stream.docs.len(), 500);
    }

    #[test]
    fn constant_truth_with_zero_noise_and_no_events() {
        let window: (NaiveDate, NaiveDate) =
            ("2014-08-01".parse().unwrap(), "2014-08-05".parse().unwrap());
        let spec = EventEffectSpec::new(0.3, 0.0, EventCalendar::default());
        let quant = three_cat_spec(3);
        let stream = gen_event_stream(&spec, &quant, window, 10).unwrap();
        assert!(stream.truth.iter().all(|(_, s)| (*s - 0.3).abs() < 1e-12));
        assert_eq!(stream.clamped_days, 0);
    }

    #[test]
    fn heavy_clamping_rejected() {
        let window: (NaiveDate, NaiveDate) =
            ("2014-08-01".parse().unwrap(), "2014-08-20".parse().unwrap());
        let spec = EventEffectSpec::new(1.2, 0.0, EventCalendar::default());
        let quant = three_cat_spec(3);
        assert!(gen_event_stream(&spec, &quant, window, 10).is_err());
    }
}
