//! Property tests for the spec-level invariants.

use aggsent::corpus::Category;
use aggsent::corpus::{match_query, normalize_tokens, profile, NormConfig, QuerySpec, Vocabulary};
use aggsent::quantifier::{quantify_freq, ProfileMatrix};
use proptest::prelude::*;

fn token_strategy() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "isis",
        "isil",
        "topic",
        "word",
        "داعش",
        "الدولة",
        "hello",
        "w1",
        "w2",
        "#tag",
        "@user",
        "http://x.co",
    ])
    .prop_map(str::to_string)
}

proptest! {
    /// Adding a term to a query never shrinks the matched set.
    #[test]
    fn query_monotonicity(
        texts in prop::collection::vec(prop::collection::vec(token_strategy(), 1..8), 1..20),
        base_terms in prop::collection::vec(token_strategy(), 1..4),
        extra in token_strategy(),
    ) {
        let texts: Vec<String> = texts.iter().map(|t| t.join(" ")).collect();
        let base = QuerySpec::new(base_terms.clone()).unwrap();
        let mut wider_terms = base_terms;
        wider_terms.push(extra);
        let wider = QuerySpec::new(wider_terms).unwrap();
        for text in &texts {
            if match_query(text, &base) {
                prop_assert!(match_query(text, &wider));
            }
        }
    }

    /// normalize(join(normalize(t))) == normalize(t), the idempotence law.
    #[test]
    fn normalization_idempotence(raw in "\\PC{0,60}") {
        let cfg = NormConfig::default();
        let once = normalize_tokens(&raw, &cfg);
        let twice = normalize_tokens(&once.join(" "), &cfg);
        prop_assert_eq!(once, twice);
    }

    /// Profile bit `i` is set exactly when `vocab[i]` occurs in the tokens.
    #[test]
    fn profile_soundness(tokens in prop::collection::vec(token_strategy(), 0..12)) {
        let vocab = Vocabulary::from_terms(
            ["isis", "topic", "word", "داعش", "w1"].iter().map(|s| s.to_string()),
        );
        let p = profile(&tokens, &vocab);
        for i in 0..vocab.len() as u32 {
            let term = vocab.term(i);
            let expect = tokens.iter().any(|t| t == term);
            prop_assert_eq!(p.contains(i), expect, "bit {} ({})", i, term);
        }
    }

    /// The solver's output is always a probability vector, whatever the data.
    #[test]
    fn quantify_output_on_simplex(
        k in 2usize..4,
        m in 1usize..6,
        raw_cols in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 1..6), 2..4),
        raw_y in prop::collection::vec(0.0f64..1.0, 1..6),
    ) {
        let k = k.min(raw_cols.len());
        let cols: Vec<Vec<f64>> = raw_cols[..k]
            .iter()
            .map(|c| {
                let mut col: Vec<f64> = c.iter().copied().cycle().take(m).collect();
                let s: f64 = col.iter().sum();
                col.iter_mut().for_each(|v| *v /= s);
                col
            })
            .collect();
        let y: Vec<f64> = raw_y.iter().copied().cycle().take(m).collect();
        prop_assume!(y.iter().sum::<f64>() > 0.0);
        let pm = ProfileMatrix::from_columns(Category::ALL[..k].to_vec(), cols).unwrap();
        let q = quantify_freq(&y, &pm).unwrap();
        let total: f64 = Category::ALL[..k].iter().map(|c| q.distribution.get(*c)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for c in &Category::ALL[..k] {
            let v = q.distribution.get(*c);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }

    /// Exact recovery: when y is a column of an identified matrix, the solver
    /// returns that vertex.
    #[test]
    fn exact_vertex_recovery(j in 0usize..2) {
        let cols = vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]];
        let y = cols[j].clone();
        let pm = ProfileMatrix::from_columns(Category::ALL[..2].to_vec(), cols).unwrap();
        let q = quantify_freq(&y, &pm).unwrap();
        prop_assert!(!q.non_identified);
        prop_assert!((q.distribution.get(Category::ALL[j]) - 1.0).abs() < 1e-8);
    }
}
