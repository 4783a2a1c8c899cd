//! Daily time series: per-day quantification, deviations from the window
//! mean, lowess trends, and volume-conditioned summaries.

pub mod lowess;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::corpus::{
    normalize_tokens, profile, Document, NormConfig, TokenProfile, TrainingSet, Vocabulary,
};
use crate::error::{Error, Result};
use crate::quantifier::{sentiment_ratio, EnsembleModel, LabeledProfiles, QuantifyConfig};

pub use lowess::lowess;

/// One day of the aggregated series.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeriesRow {
    pub date: NaiveDate,
    /// All tweets that day, neutral and off-topic included.
    pub n_tweets: u64,
    /// Positive share of the opinionated mass that day.
    pub sentiment: f64,
    /// `sentiment - mean(sentiment)` over the retained window.
    pub sentiment_deviation: f64,
    /// `n_tweets - mean(n_tweets)` over the retained window.
    pub attention_deviation: f64,
}

/// Outcome of [`daily_aggregate`]: retained rows plus the days that were
/// dropped and why (no tweets, undefined sentiment, estimator failure).
#[derive(Debug, Clone)]
pub struct DailyAggregate {
    pub rows: Vec<DailySeriesRow>,
    pub skipped: Vec<(NaiveDate, String)>,
}

/// Quantify one day at a time over `window` (inclusive), then center the
/// sentiment and volume series on their window means.
///
/// Days are UTC calendar days. Days with zero tweets are omitted and logged;
/// per-day estimator errors are recorded and the day skipped, never zeroed.
/// Day order in the stream does not matter.
pub fn daily_aggregate(
    stream: &[Document],
    train: &TrainingSet,
    norm: &NormConfig,
    cfg: &QuantifyConfig,
    window: (NaiveDate, NaiveDate),
) -> Result<DailyAggregate> {
    let (start, end) = window;
    if start > end {
        return Err(Error::config("empty analysis window"));
    }
    let vocab = Vocabulary::build(
        &train
            .items()
            .iter()
            .map(|it| normalize_tokens(&it.doc.text, norm))
            .collect::<Vec<_>>(),
        crate::corpus::vocab::DEFAULT_MIN_COUNT,
        crate::corpus::vocab::DEFAULT_MAX_SIZE,
    );
    let labeled = LabeledProfiles::from_training(train, &vocab, norm);
    let model = EnsembleModel::fit(&labeled, cfg)?;

    // bucket the stream by UTC day
    let n_days = (end - start).num_days() as usize + 1;
    let mut buckets: Vec<Vec<&Document>> = vec![Vec::new(); n_days];
    for doc in stream {
        let d = doc.utc_date();
        if d < start || d > end {
            continue;
        }
        buckets[(d - start).num_days() as usize].push(doc);
    }

    let per_day: Vec<(NaiveDate, std::result::Result<(u64, f64), String>)> = buckets
        .par_iter()
        .enumerate()
        .map(|(i, docs)| {
            let date = start + chrono::Duration::days(i as i64);
            if docs.is_empty() {
                return (date, Err("no tweets".to_string()));
            }
            let profiles: Vec<TokenProfile> = docs
                .iter()
                .map(|d| profile(&normalize_tokens(&d.text, norm), &vocab))
                .collect();
            let outcome = model
                .quantify(&profiles)
                .and_then(|q| sentiment_ratio(&q.distribution))
                .map(|s| (docs.len() as u64, s))
                .map_err(|e| e.to_string());
            (date, outcome)
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (date, outcome) in per_day {
        match outcome {
            Ok((n_tweets, sentiment)) => rows.push(DailySeriesRow {
                date,
                n_tweets,
                sentiment,
                sentiment_deviation: 0.0,
                attention_deviation: 0.0,
            }),
            Err(reason) => skipped.push((date, reason)),
        }
    }
    if rows.is_empty() {
        return Err(Error::estimation(
            "no day in the window produced an estimate",
        ));
    }

    let mean_sent = rows.iter().map(|r| r.sentiment).sum::<f64>() / rows.len() as f64;
    let mean_vol = rows.iter().map(|r| r.n_tweets as f64).sum::<f64>() / rows.len() as f64;
    for r in &mut rows {
        r.sentiment_deviation = r.sentiment - mean_sent;
        r.attention_deviation = r.n_tweets as f64 - mean_vol;
    }
    Ok(DailyAggregate { rows, skipped })
}

/// Subtract the mean: the output sums to zero.
pub fn center(series: &[f64]) -> Vec<f64> {
    if series.is_empty() {
        return Vec::new();
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    series.iter().map(|x| x - mean).collect()
}

/// Volume-weighted mean sentiment over the rows.
pub fn weighted_mean_sentiment(rows: &[DailySeriesRow]) -> Result<f64> {
    let total: f64 = rows.iter().map(|r| r.n_tweets as f64).sum();
    if rows.is_empty() || total <= 0.0 {
        return Err(Error::estimation("no rows with volume"));
    }
    Ok(rows
        .iter()
        .map(|r| r.sentiment * r.n_tweets as f64)
        .sum::<f64>()
        / total)
}

/// Mean sentiment over days with volume strictly above `volume_threshold`.
pub fn conditioned_mean(rows: &[DailySeriesRow], volume_threshold: u64) -> Result<f64> {
    let qualifying: Vec<&DailySeriesRow> = rows
        .iter()
        .filter(|r| r.n_tweets > volume_threshold)
        .collect();
    if qualifying.is_empty() {
        return Err(Error::estimation(format!(
            "no day has more than {volume_threshold} tweets"
        )));
    }
    Ok(qualifying.iter().map(|r| r.sentiment).sum::<f64>() / qualifying.len() as f64)
}

/// Empirical quantile of daily volume (linear interpolation), mapping a
/// percentile like 0.90 to its tweet-count threshold.
pub fn volume_quantile(rows: &[DailySeriesRow], q: f64) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::estimation("no rows"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::config(format!("quantile {q} outside [0, 1]")));
    }
    let mut vols: Vec<f64> = rows.iter().map(|r| r.n_tweets as f64).collect();
    vols.sort_by(f64::total_cmp);
    Ok(crate::quantifier::ensemble::percentile(&vols, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(date: &str, n: u64, s: f64) -> DailySeriesRow {
        DailySeriesRow {
            date: date.parse().unwrap(),
            n_tweets: n,
            sentiment: s,
            sentiment_deviation: 0.0,
            attention_deviation: 0.0,
        }
    }

    #[test]
    fn center_examples() {
        let c = center(&[0.20, 0.30, 0.25]);
        assert!((c[0] + 0.05).abs() < 1e-12);
        assert!((c[1] - 0.05).abs() < 1e-12);
        assert!(c[2].abs() < 1e-12);

        assert!(center(&[2.0, 2.0, 2.0]).iter().all(|v| v.abs() < 1e-12));

        let x = [1.0, 5.0, -3.0, 0.5];
        let once = center(&x);
        let twice = center(&once);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn centered_series_sums_to_zero() {
        let x: Vec<f64> = (0..57).map(|i| (i as f64 * 1.37).fract() * 100.0).collect();
        let c = center(&x);
        let sum: f64 = c.iter().sum();
        assert!(sum.abs() < 1e-9 * x.len() as f64);
    }

    #[test]
    fn weighted_mean_hand_example() {
        let rows = [row("2014-07-01", 1, 0.3), row("2014-07-02", 3, 0.1)];
        assert!((weighted_mean_sentiment(&rows).unwrap() - 0.15).abs() < 1e-12);

        let equal = [row("2014-07-01", 5, 0.3), row("2014-07-02", 5, 0.1)];
        assert!((weighted_mean_sentiment(&equal).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn conditioned_mean_boundaries() {
        let rows = [
            row("2014-07-01", 100, 0.3),
            row("2014-07-02", 200, 0.2),
            row("2014-07-03", 300, 0.1),
        ];
        // threshold below the minimum volume: every row qualifies
        let all = conditioned_mean(&rows, 50).unwrap();
        assert!((all - 0.2).abs() < 1e-12);
        // threshold at the maximum: nothing strictly above
        assert!(conditioned_mean(&rows, 300).is_err());
        // strictly-above semantics
        let top = conditioned_mean(&rows, 200).unwrap();
        assert!((top - 0.1).abs() < 1e-12);
    }

    #[test]
    fn volume_quantile_interpolates() {
        let rows = [
            row("2014-07-01", 100, 0.3),
            row("2014-07-02", 200, 0.2),
            row("2014-07-03", 300, 0.1),
        ];
        assert!((volume_quantile(&rows, 0.0).unwrap() - 100.0).abs() < 1e-12);
        assert!((volume_quantile(&rows, 0.5).unwrap() - 200.0).abs() < 1e-12);
        assert!((volume_quantile(&rows, 0.75).unwrap() - 250.0).abs() < 1e-12);
    }
}
