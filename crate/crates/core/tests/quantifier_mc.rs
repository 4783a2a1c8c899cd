//! Monte-Carlo studies of the quantifier against generator ground truth.
//!
//! These are the simulation oracles for the estimator's headline behavior:
//! robustness to prior shift where classify-and-count is biased, agreement
//! between the two methods when priors match, the value of ensembling, and
//! bootstrap interval coverage.

use aggsent::corpus::{normalize_tokens, profile, Category, NormConfig, TokenProfile, Vocabulary};
use aggsent::quantifier::{
    bootstrap_ci, classify_and_count, quantify_ensemble, CategoryDistribution, EnsembleModel,
    LabeledProfiles, QuantifyConfig,
};
use aggsent::rng::splitmix64;
use aggsent::synth::{gen_corpus, GeneratorSpec};

struct Prepared {
    labeled: LabeledProfiles,
    test: Vec<TokenProfile>,
    truth: CategoryDistribution,
}

fn prepare(spec: &GeneratorSpec) -> Prepared {
    let norm = NormConfig::default();
    let corpus = gen_corpus(spec).unwrap();
    let token_lists: Vec<Vec<String>> = corpus
        .train
        .items()
        .iter()
        .map(|it| normalize_tokens(&it.doc.text, &norm))
        .collect();
    let vocab = Vocabulary::build(&token_lists, 2, 2000);
    let labeled = LabeledProfiles::from_training(&corpus.train, &vocab, &norm);
    let test = corpus
        .stream
        .iter()
        .map(|d| profile(&normalize_tokens(&d.text, &norm), &vocab))
        .collect();
    Prepared {
        labeled,
        test,
        truth: corpus.truth,
    }
}

fn max_abs_err(d: &CategoryDistribution, t: &CategoryDistribution, cats: &[Category]) -> f64 {
    cats.iter()
        .map(|c| (d.get(*c) - t.get(*c)).abs())
        .fold(0.0, f64::max)
}

/// Training drawn at priors (0.9, 0.1), test at (0.2, 0.8), shared
/// conditionals: direct quantification tracks the test mix while
/// classify-and-count drags toward the training mix.
#[test]
fn prior_shift_two_categories_fifty_seeds() {
    let cats = [Category::Positive, Category::Negative];
    let mut quant_errs = Vec::new();
    let mut quant_wins = 0;
    for s in 0..50u64 {
        let spec = GeneratorSpec::block_structure(
            &cats,
            40,
            0.65,
            vec![0.9, 0.1],
            vec![0.2, 0.8],
            1600,
            100_000,
            splitmix64(0x2CA7 ^ s),
        );
        let p = prepare(&spec);
        let cfg = QuantifyConfig {
            rng_seed: splitmix64(s),
            ..Default::default()
        };
        let est = quantify_ensemble(&p.test, &p.labeled, &cfg).unwrap();
        let cc = classify_and_count(&p.test, &p.labeled).unwrap();
        let qe = max_abs_err(&est.distribution, &p.truth, &cats);
        let ce = max_abs_err(&cc, &p.truth, &cats);
        quant_errs.push(qe);
        if ce > qe {
            quant_wins += 1;
        }
    }
    let mean_err = quant_errs.iter().sum::<f64>() / quant_errs.len() as f64;
    println!("prior shift: mean max error {mean_err:.4}, quantifier wins {quant_wins}/50");
    assert!(
        mean_err <= 0.02,
        "quantifier should track the shifted prior: mean max error {mean_err:.4}"
    );
    assert!(
        quant_wins >= 45,
        "classify-and-count should lose under prior shift in >= 90% of seeds, won {} of 50",
        50 - quant_wins
    );
}

/// With matched priors and separable-enough categories the two methods agree
/// within sampling noise.
#[test]
fn matched_priors_methods_agree() {
    let cats = [Category::Positive, Category::Negative];
    for s in 0..10u64 {
        let spec = GeneratorSpec::block_structure(
            &cats,
            30,
            0.8,
            vec![0.4, 0.6],
            vec![0.4, 0.6],
            1200,
            20_000,
            splitmix64(0x3A ^ s),
        );
        let p = prepare(&spec);
        let cfg = QuantifyConfig {
            rng_seed: s,
            ..Default::default()
        };
        let est = quantify_ensemble(&p.test, &p.labeled, &cfg).unwrap();
        let cc = classify_and_count(&p.test, &p.labeled).unwrap();
        for c in cats {
            assert!(
                (est.distribution.get(c) - cc.get(c)).abs() <= 0.02,
                "seed {s}, {c}: {} vs {}",
                est.distribution.get(c),
                cc.get(c)
            );
        }
    }
}

/// Averaging over random word subsets must not hurt: ensemble MAE at or
/// below the single-subset MAE on average.
#[test]
fn ensemble_beats_single_subset_on_average() {
    let cats = [Category::Positive, Category::Negative, Category::Neutral];
    let mut ens_total = 0.0;
    let mut single_total = 0.0;
    for s in 0..50u64 {
        let spec = GeneratorSpec::block_structure(
            &cats,
            36,
            0.55,
            vec![0.3, 0.4, 0.3],
            vec![0.25, 0.35, 0.40],
            1200,
            10_000,
            splitmix64(0xE25 ^ s),
        );
        let p = prepare(&spec);
        let mae = |d: &CategoryDistribution| {
            cats.iter()
                .map(|c| (d.get(*c) - p.truth.get(*c)).abs())
                .sum::<f64>()
                / 3.0
        };
        let ens = quantify_ensemble(
            &p.test,
            &p.labeled,
            &QuantifyConfig {
                rng_seed: s,
                ..Default::default()
            },
        )
        .unwrap();
        let single = quantify_ensemble(
            &p.test,
            &p.labeled,
            &QuantifyConfig {
                n_subsets: 1,
                rng_seed: s,
                ..Default::default()
            },
        )
        .unwrap();
        ens_total += mae(&ens.distribution);
        single_total += mae(&single.distribution);
    }
    assert!(
        ens_total <= single_total,
        "ensemble MAE {:.4} should not exceed single-subset MAE {:.4}",
        ens_total / 50.0,
        single_total / 50.0
    );
}

/// Percentile-bootstrap coverage at truth 0.5/0.5 with 10,000 documents.
///
/// The bootstrap resamples test documents, so it quantifies test-sampling
/// uncertainty conditional on the fitted model; the fixture uses a large,
/// high-signal training set so model noise stays negligible next to the
/// sampling noise the interval is supposed to cover.
#[test]
fn bootstrap_interval_coverage() {
    let cats = [Category::Positive, Category::Negative];
    let mut covered = 0;
    for s in 0..100u64 {
        let spec = GeneratorSpec::block_structure(
            &cats,
            24,
            0.85,
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            3_000,
            10_000,
            splitmix64(0xB007 ^ s),
        );
        let p = prepare(&spec);
        let cfg = QuantifyConfig {
            n_subsets: 50,
            bootstrap_reps: 100,
            rng_seed: s,
            ..Default::default()
        };
        let cis = bootstrap_ci(&p.test, &p.labeled, &cfg).unwrap();
        let pos = cis
            .iter()
            .find(|ci| ci.category == Category::Positive)
            .unwrap();
        let truth = p.truth.get(Category::Positive);
        if pos.low <= truth && truth <= pos.high {
            covered += 1;
        }
        assert!(pos.low <= pos.estimate && pos.estimate <= pos.high);
    }
    println!("bootstrap coverage: {covered}/100");
    assert!(
        covered >= 90,
        "interval covered the truth in only {covered}/100 runs"
    );
}

/// Relabeling categories permutes the estimate identically.
#[test]
fn permutation_equivariance() {
    let forward = [Category::Positive, Category::Negative, Category::Neutral];
    let spec = GeneratorSpec::block_structure(
        &forward,
        30,
        0.6,
        vec![0.5, 0.3, 0.2],
        vec![0.2, 0.3, 0.5],
        900,
        9_000,
        123,
    );
    let p = prepare(&spec);
    let cfg = QuantifyConfig {
        rng_seed: 5,
        ..Default::default()
    };
    let base = quantify_ensemble(&p.test, &p.labeled, &cfg).unwrap();

    // swap the Positive and Neutral labels on the same data
    let swapped_labels: Vec<Category> = p
        .labeled
        .labels
        .iter()
        .map(|c| match c {
            Category::Positive => Category::Neutral,
            Category::Neutral => Category::Positive,
            other => *other,
        })
        .collect();
    let swapped = LabeledProfiles::new(
        p.labeled.profiles.clone(),
        swapped_labels,
        p.labeled.vocab_len,
    )
    .unwrap();
    let est = quantify_ensemble(&p.test, &swapped, &cfg).unwrap();
    assert!(
        (est.distribution.get(Category::Neutral) - base.distribution.get(Category::Positive)).abs()
            < 1e-12
    );
    assert!(
        (est.distribution.get(Category::Positive) - base.distribution.get(Category::Neutral)).abs()
            < 1e-12
    );
    assert!(
        (est.distribution.get(Category::Negative) - base.distribution.get(Category::Negative))
            .abs()
            < 1e-12
    );
}

/// A fitted ensemble is immutable and shareable; quantifying the same corpus
/// from several threads gives identical results.
#[test]
fn shared_model_parallel_reads() {
    let cats = [Category::Positive, Category::Negative];
    let spec = GeneratorSpec::block_structure(
        &cats,
        20,
        0.6,
        vec![0.5, 0.5],
        vec![0.3, 0.7],
        400,
        3_000,
        9,
    );
    let p = prepare(&spec);
    let cfg = QuantifyConfig {
        n_subsets: 10,
        rng_seed: 1,
        ..Default::default()
    };
    let model = EnsembleModel::fit(&p.labeled, &cfg).unwrap();
    let baseline = model.quantify(&p.test).unwrap().distribution;
    std::thread::scope(|scope| {
        for _ in 0..4 {
            let model = &model;
            let test = &p.test;
            let baseline = &baseline;
            scope.spawn(move || {
                let d = model.quantify(test).unwrap().distribution;
                assert_eq!(d.get(Category::Positive), baseline.get(Category::Positive));
            });
        }
    });
}
