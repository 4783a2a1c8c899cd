//! Command-line entry point.
//!
//! Every subcommand parses and validates all of its inputs before any
//! computation starts, computes in memory, and writes its output atomically.
//! All randomness flows from `--seed`; `--threads` changes only wall time,
//! never bytes.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use crate::corpus::{read_documents_jsonl, read_labels_csv, NormConfig, QuerySpec, TrainingSet};
use crate::econometrics::{ff_model_fit, ols_fit_design, stars_for_p, FfModel, RegressionFit};
use crate::error::{Error, Result};
use crate::events::{build_regressors, EventCalendar, EventModel};
use crate::geo::{country_panel, Gazetteer, TimeZoneTable};
use crate::io::{atomic_write, csv_with_comment, fmt_f64, header_comment};
use crate::quantifier::{bootstrap_ci, LabeledProfiles, QuantifyConfig};
use crate::series::{daily_aggregate, lowess};
use crate::validate;

const FILE_FORMATS_HELP: &str = "\
File formats (first line of each example is the required header):

  Stream (JSON lines, one document per line; unknown fields ignored):
    {\"id\":\"t1\",\"timestamp\":\"2014-07-01T10:00:00Z\",\"text\":\"...\",\"user_location\":\"Cairo\",\"utc_offset\":120}
    {\"id\":\"t2\",\"timestamp\":\"2014-07-01T11:30:00Z\",\"text\":\"...\",\"geo\":{\"lat\":30.0,\"lon\":31.2}}
    {\"id\":\"t3\",\"timestamp\":\"2014-07-02T09:00:00Z\",\"text\":\"...\"}

  Training labels (CSV):            Query file (one OR-term per line):
    doc_id,category[,coder_id]        ISIS
    t1,positive,coder_a               ISIL
    t1,negative,coder_b               \u{062f}\u{0627}\u{0639}\u{0634}

  Quantifier config (key = value):  Event calendar (CSV):
    n_subsets = 50                    date,kind
    words_per_subset = 12             2014-08-19,beheading_western
    bootstrap_reps = 200              2015-01-07,charlie_hebdo

  News series (CSV):                Gazetteer names (CSV):
    date,article_count                normalized_name,iso2
    2014-07-01,737                    cairo,EG
    2014-07-02,612                    \u{0627}\u{0644}\u{0631}\u{064a}\u{0627}\u{0636},SA

  Country boxes (CSV):              Time-zone table (CSV):
    iso2,min_lat,min_lon,max_lat,max_lon   offset_minutes_or_name,iso2
    EG,22.0,24.7,31.7,36.9                 120,EG
    SA,16.0,34.5,32.2,55.7                 60,FR

  Country panel (CSV):
    country,sentiment,n_tweets,foreign_fighters,active_terror_group,borders_isis,pct_shia,democracy,pct_broadband,pct_muslim[,foreign_fighters_alt,justify_attacks]
    TN,0.18,52000,3000,1,0,0.5,-4,4.2,99.8,,
    SA,0.31,480000,2500,1,1,10.0,-10,8.1,97.1,3244,14
";

#[derive(Parser)]
#[command(
    name = "aggsent",
    about = "Aggregated sentiment quantification and downstream analyses",
    after_long_help = FILE_FORMATS_HELP,
    version
)]
struct Cli {
    /// Root seed; all randomness derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: available cores). Output bytes do not depend
    /// on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate category proportions for a stream, with bootstrap intervals.
    Quantify(QuantifyArgs),
    /// Build the daily sentiment / attention deviation series.
    DailySeries(DailySeriesArgs),
    /// Fit the daily event-study regression (models 1-3).
    EventRegress(EventRegressArgs),
    /// Fit a cross-country foreign-fighter count model (models 1-5).
    FfModel(FfModelArgs),
    /// Attribute countries to a stream and build the per-country panel.
    GeoAttribute(GeoAttributeArgs),
    /// Run the synthetic verification suite and print one line per criterion.
    SynthValidate(SynthValidateArgs),
}

#[derive(Args)]
struct QuantifyArgs {
    /// Labeled training CSV (doc_id,category[,coder_id]).
    #[arg(long)]
    training: PathBuf,
    /// Document stream, JSON lines.
    #[arg(long)]
    stream: PathBuf,
    /// Keyword query file (one term per line); filters the stream.
    #[arg(long)]
    query: Option<PathBuf>,
    /// Quantifier config file (key = value).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DailySeriesArgs {
    #[arg(long)]
    training: PathBuf,
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    query: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// First day of the analysis window (UTC), e.g. 2014-07-01.
    #[arg(long)]
    window_start: NaiveDate,
    /// Last day of the analysis window (UTC), inclusive.
    #[arg(long)]
    window_end: NaiveDate,
    /// Lowess window fraction for the trend columns.
    #[arg(long, default_value_t = 0.25)]
    lowess_frac: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EventRegressArgs {
    /// Daily series CSV, as written by `daily-series`.
    #[arg(long)]
    series: PathBuf,
    /// Event calendar CSV (date,kind).
    #[arg(long)]
    calendar: PathBuf,
    /// Online-news series CSV (date,article_count); required for model 3.
    #[arg(long)]
    news: Option<PathBuf>,
    /// Specification: 1, 2, or 3.
    #[arg(long)]
    model: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FfModelArgs {
    /// Country panel CSV.
    #[arg(long)]
    panel: PathBuf,
    /// Specification: 1 to 5.
    #[arg(long)]
    model: u32,
    /// Exposure column (the offset enters as its log).
    #[arg(long, default_value = "pct_muslim")]
    exposure_col: String,
    /// Drop countries geolocated to the US (model 3 always does).
    #[arg(long)]
    drop_us: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GeoAttributeArgs {
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    training: PathBuf,
    /// Gazetteer names CSV (normalized_name,iso2).
    #[arg(long)]
    gazetteer: PathBuf,
    /// Country bounding boxes CSV (iso2,min_lat,min_lon,max_lat,max_lon).
    #[arg(long)]
    boxes: PathBuf,
    /// Time-zone table CSV (offset_minutes_or_name,iso2).
    #[arg(long)]
    tz: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep countries with at least this many attributed tweets.
    #[arg(long, default_value_t = 1000)]
    min_tweets: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthValidateArgs {
    /// Also write the report file here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Run the CLI; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage text
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let outcome = pool.install(|| dispatch(&cli));
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Quantify(args) => {
            let csv = pipeline::quantify_csv(
                &args.training,
                &args.stream,
                args.query.as_deref(),
                args.config.as_deref(),
                cli.seed,
            )?;
            atomic_write(&args.out, csv.as_bytes())?;
            Ok(0)
        }
        Command::DailySeries(args) => {
            let csv = pipeline::daily_series_csv(
                &args.training,
                &args.stream,
                args.query.as_deref(),
                args.config.as_deref(),
                (args.window_start, args.window_end),
                args.lowess_frac,
                cli.seed,
            )?;
            atomic_write(&args.out, csv.as_bytes())?;
            Ok(0)
        }
        Command::EventRegress(args) => {
            let csv = pipeline::event_regress_csv(
                &args.series,
                &args.calendar,
                args.news.as_deref(),
                args.model,
                cli.seed,
            )?;
            atomic_write(&args.out, csv.as_bytes())?;
            Ok(0)
        }
        Command::FfModel(args) => {
            let csv = pipeline::ff_model_csv(
                &args.panel,
                args.model,
                &args.exposure_col,
                args.drop_us,
                cli.seed,
            )?;
            atomic_write(&args.out, csv.as_bytes())?;
            Ok(0)
        }
        Command::GeoAttribute(args) => {
            let csv = pipeline::geo_attribute_csv(
                &args.stream,
                &args.training,
                &args.gazetteer,
                &args.boxes,
                &args.tz,
                args.config.as_deref(),
                args.min_tweets,
                cli.seed,
            )?;
            atomic_write(&args.out, csv.as_bytes())?;
            Ok(0)
        }
        Command::SynthValidate(args) => {
            let results = validate::run_all(cli.seed);
            let (report, all_pass) = validate::report(&results, cli.seed);
            print!("{report}");
            // timings go to stderr so the report stays byte-identical
            for r in &results {
                match r.budget_seconds {
                    Some(b) => eprintln!("criterion {}: {:.1}s (budget {b:.0}s)", r.id, r.seconds),
                    None => eprintln!("criterion {}: {:.1}s", r.id, r.seconds),
                }
            }
            if let Some(out) = &args.out {
                atomic_write(out, report.as_bytes())?;
            }
            Ok(if all_pass { 0 } else { 1 })
        }
    }
}

/// The subcommand bodies as pure functions from inputs to output bytes.
/// `synth-validate` replays these under different thread pools to check that
/// parallelism never changes results.
pub mod pipeline {
    use super::*;

    fn load_quantify_cfg(config: Option<&Path>, seed: u64) -> Result<QuantifyConfig> {
        match config {
            Some(path) => crate::io::read_quantify_config(path, seed),
            None => Ok(QuantifyConfig {
                rng_seed: seed,
                ..Default::default()
            }),
        }
    }

    fn load_training(path: &Path, docs: &[crate::corpus::Document]) -> Result<TrainingSet> {
        let labels = read_labels_csv(path)?;
        TrainingSet::assemble(docs, &labels)
    }

    /// Load a training CSV whose doc_ids refer to the stream file itself.
    fn load_stream_and_training(
        training: &Path,
        stream: &Path,
        query: Option<&Path>,
    ) -> Result<(Vec<crate::corpus::Document>, TrainingSet, Option<QuerySpec>)> {
        let query = query.map(QuerySpec::from_file).transpose()?;
        let all_docs = read_documents_jsonl(stream, None, None)?;
        let train = load_training(training, &all_docs)?;
        let stream_docs = match &query {
            Some(q) => all_docs
                .into_iter()
                .filter(|d| q.matches(&d.text))
                .collect(),
            None => all_docs,
        };
        Ok((stream_docs, train, query))
    }

    pub fn quantify_csv(
        training: &Path,
        stream: &Path,
        query: Option<&Path>,
        config: Option<&Path>,
        seed: u64,
    ) -> Result<String> {
        let cfg = load_quantify_cfg(config, seed)?;
        let (docs, train, _) = load_stream_and_training(training, stream, query)?;
        if docs.is_empty() {
            return Err(Error::estimation("no stream documents after filtering"));
        }
        let norm = NormConfig::default();
        let vocab = crate::corpus::Vocabulary::build(
            &train
                .items()
                .iter()
                .map(|it| crate::corpus::normalize_tokens(&it.doc.text, &norm))
                .collect::<Vec<_>>(),
            crate::corpus::vocab::DEFAULT_MIN_COUNT,
            crate::corpus::vocab::DEFAULT_MAX_SIZE,
        );
        let labeled = LabeledProfiles::from_training(&train, &vocab, &norm);
        let profiles: Vec<_> = docs
            .iter()
            .map(|d| {
                crate::corpus::profile(&crate::corpus::normalize_tokens(&d.text, &norm), &vocab)
            })
            .collect();
        let intervals = bootstrap_ci(&profiles, &labeled, &cfg)?;

        let comment = header_comment(
            "quantify",
            seed,
            &format!(
                "training={training:?};stream={stream:?};n_subsets={};words_per_subset={};bootstrap_reps={}",
                cfg.n_subsets, cfg.words_per_subset, cfg.bootstrap_reps
            ),
        );
        let rows: Vec<Vec<String>> = intervals
            .iter()
            .map(|ci| {
                vec![
                    ci.category.to_string(),
                    fmt_f64(ci.estimate),
                    fmt_f64(ci.low),
                    fmt_f64(ci.high),
                ]
            })
            .collect();
        csv_with_comment(
            &comment,
            &["category", "estimate", "ci_low", "ci_high"],
            &rows,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn daily_series_csv(
        training: &Path,
        stream: &Path,
        query: Option<&Path>,
        config: Option<&Path>,
        window: (NaiveDate, NaiveDate),
        lowess_frac: f64,
        seed: u64,
    ) -> Result<String> {
        let cfg = load_quantify_cfg(config, seed)?;
        let (docs, train, _) = load_stream_and_training(training, stream, query)?;
        let norm = NormConfig::default();
        let agg = daily_aggregate(&docs, &train, &norm, &cfg, window)?;

        let points_s: Vec<(f64, f64)> = agg
            .rows
            .iter()
            .map(|r| ((r.date - window.0).num_days() as f64, r.sentiment_deviation))
            .collect();
        let points_a: Vec<(f64, f64)> = agg
            .rows
            .iter()
            .map(|r| ((r.date - window.0).num_days() as f64, r.attention_deviation))
            .collect();
        let (lo_s, lo_a) = if agg.rows.len() >= 3 {
            (
                lowess(&points_s, lowess_frac)?,
                lowess(&points_a, lowess_frac)?,
            )
        } else {
            (
                points_s.iter().map(|p| p.1).collect(),
                points_a.iter().map(|p| p.1).collect(),
            )
        };

        let mut comment = header_comment(
            "daily-series",
            seed,
            &format!(
                "training={training:?};stream={stream:?};window={}..{};lowess_frac={lowess_frac};n_subsets={}",
                window.0, window.1, cfg.n_subsets
            ),
        );
        for (date, reason) in &agg.skipped {
            comment.push_str(&format!("# skipped {date}: {reason}\n"));
        }
        let rows: Vec<Vec<String>> = agg
            .rows
            .iter()
            .zip(lo_s.iter().zip(&lo_a))
            .map(|(r, (ls, la))| {
                vec![
                    r.date.to_string(),
                    r.n_tweets.to_string(),
                    fmt_f64(r.sentiment),
                    fmt_f64(r.sentiment_deviation),
                    fmt_f64(r.attention_deviation),
                    fmt_f64(*ls),
                    fmt_f64(*la),
                ]
            })
            .collect();
        csv_with_comment(
            &comment,
            &[
                "date",
                "n_tweets",
                "sentiment",
                "sentiment_deviation",
                "attention_deviation",
                "lowess_sentiment",
                "lowess_attention",
            ],
            &rows,
        )
    }

    pub fn event_regress_csv(
        series: &Path,
        calendar: &Path,
        news: Option<&Path>,
        model: u32,
        seed: u64,
    ) -> Result<String> {
        let model = match model {
            1 => EventModel::M1,
            2 => EventModel::M2,
            3 => EventModel::M3,
            other => {
                return Err(Error::config(format!(
                    "event model must be 1..=3, got {other}"
                )))
            }
        };
        let rows = crate::io::read_series_csv(series)?;
        let cal = EventCalendar::from_csv(calendar)?;
        let news = news.map(crate::io::read_news_csv).transpose()?;
        let dm = build_regressors(&cal, &rows, news.as_deref(), model)?;
        let fit = ols_fit_design(&dm)?;

        let mut comment = header_comment(
            "event-regress",
            seed,
            &format!("series={series:?};calendar={calendar:?};model={model:?}"),
        );
        comment.push_str(&format!("# n={}\n", fit.n));
        if let Some(bic) = fit.bic {
            comment.push_str(&format!("# bic={}\n", fmt_f64(bic)));
        }
        comment.push_str(&format!("# loglik={}\n", fmt_f64(fit.loglik)));
        coefficient_table(&comment, &fit)
    }

    pub fn ff_model_csv(
        panel: &Path,
        model: u32,
        exposure_col: &str,
        drop_us: bool,
        seed: u64,
    ) -> Result<String> {
        if exposure_col != "pct_muslim" {
            return Err(Error::config(format!(
                "unsupported exposure column '{exposure_col}' (the panel schema defines pct_muslim as the exposure base)"
            )));
        }
        let model = FfModel::from_index(model)?;
        let rows = crate::econometrics::read_country_panel_csv(panel)?;
        let fit = ff_model_fit(&rows, model, drop_us)?;

        let mut comment = header_comment(
            "ff-model",
            seed,
            &format!("panel={panel:?};model={model:?};drop_us={drop_us};exposure={exposure_col}"),
        );
        comment.push_str(&format!("# n={}\n", fit.n));
        comment.push_str(&format!("# log_pseudolikelihood={}\n", fmt_f64(fit.loglik)));
        if let Some(alpha) = fit.alpha {
            comment.push_str(&format!("# alpha={}\n", fmt_f64(alpha)));
        }
        if fit.poisson_limit {
            comment.push_str("# poisson_limit=true\n");
        }
        coefficient_table(&comment, &fit)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn geo_attribute_csv(
        stream: &Path,
        training: &Path,
        gazetteer: &Path,
        boxes: &Path,
        tz: &Path,
        config: Option<&Path>,
        min_tweets: u64,
        seed: u64,
    ) -> Result<String> {
        let cfg = load_quantify_cfg(config, seed)?;
        let gz = Gazetteer::from_files(gazetteer, boxes)?;
        let tz = TimeZoneTable::from_csv(tz)?;
        let (docs, train, _) = load_stream_and_training(training, stream, None)?;
        let norm = NormConfig::default();
        let report = country_panel(&docs, &train, &norm, &cfg, &gz, &tz, min_tweets)?;

        let mut comment = header_comment(
            "geo-attribute",
            seed,
            &format!("stream={stream:?};gazetteer={gazetteer:?};min_tweets={min_tweets}"),
        );
        comment.push_str(&format!(
            "# attribution_rate={}\n",
            fmt_f64(report.attribution_rate)
        ));
        for (tier, count) in &report.tier_counts {
            comment.push_str(&format!("# tier_{tier}={count}\n"));
        }
        for (country, reason) in &report.skipped {
            comment.push_str(&format!("# skipped {country}: {reason}\n"));
        }
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.country.clone(),
                    r.n_tweets.to_string(),
                    fmt_f64(r.sentiment),
                    (r.us_flagged as u8).to_string(),
                ]
            })
            .collect();
        csv_with_comment(
            &comment,
            &["country", "n_tweets", "sentiment", "us_flagged"],
            &rows,
        )
    }

    fn coefficient_table(comment: &str, fit: &RegressionFit) -> Result<String> {
        let rows: Vec<Vec<String>> = fit
            .names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                vec![
                    name.clone(),
                    fmt_f64(fit.coefficients[j]),
                    fmt_f64(fit.robust_se[j]),
                    stars_for_p(fit.p_value(j)).to_string(),
                ]
            })
            .collect();
        csv_with_comment(comment, &["name", "coef", "robust_se", "stars"], &rows)
    }
}
