//! Event calendar and construction of the event-study regressor matrix.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::series::DailySeriesRow;

/// Closed set of event kinds tracked by the daily regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    BeheadingWestern,
    BeheadingNonWestern,
    MilitaryVictory,
    MilitaryDefeat,
    MosqueImamAttack,
    MuslimUnitySpeech,
    CharlieHebdo,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::BeheadingWestern,
        EventKind::BeheadingNonWestern,
        EventKind::MilitaryVictory,
        EventKind::MilitaryDefeat,
        EventKind::MosqueImamAttack,
        EventKind::MuslimUnitySpeech,
        EventKind::CharlieHebdo,
    ];

    /// The six kinds entering Model 1 (Charlie Hebdo enters only in M2/M3).
    pub const MODEL1: [EventKind; 6] = [
        EventKind::MosqueImamAttack,
        EventKind::MilitaryVictory,
        EventKind::MilitaryDefeat,
        EventKind::BeheadingWestern,
        EventKind::BeheadingNonWestern,
        EventKind::MuslimUnitySpeech,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::BeheadingWestern => "beheading_western",
            EventKind::BeheadingNonWestern => "beheading_nonwestern",
            EventKind::MilitaryVictory => "military_victory",
            EventKind::MilitaryDefeat => "military_defeat",
            EventKind::MosqueImamAttack => "mosque_imam_attack",
            EventKind::MuslimUnitySpeech => "muslim_unity_speech",
            EventKind::CharlieHebdo => "charlie_hebdo",
        }
    }

    pub fn parse(s: &str) -> Result<EventKind> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        EventKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown event kind '{s}'")))
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dated events feeding the dummy regressors.
#[derive(Debug, Clone, Default)]
pub struct EventCalendar {
    pub entries: Vec<(NaiveDate, EventKind)>,
}

impl EventCalendar {
    pub fn new(entries: Vec<(NaiveDate, EventKind)>) -> EventCalendar {
        EventCalendar { entries }
    }

    /// Read `date,kind` rows (header required).
    pub fn from_csv(path: &Path) -> Result<EventCalendar> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let lineno = i + 2;
            let record = record.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            let date: NaiveDate = record
                .get(0)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|e| Error::parse(path, lineno, format!("bad date: {e}")))?;
            let kind = EventKind::parse(record.get(1).unwrap_or(""))
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            entries.push((date, kind));
        }
        Ok(EventCalendar { entries })
    }

    pub fn occurs(&self, date: NaiveDate, kind: EventKind) -> bool {
        self.entries.iter().any(|(d, k)| *d == date && *k == kind)
    }
}

/// Which Table-2 specification to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventModel {
    M1,
    M2,
    M3,
}

/// Named regressor columns plus the lag-trimmed response.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    /// Column-major, aligned with `names`; no missing cells.
    pub columns: Vec<Vec<f64>>,
    /// SENTIMENT DEVIATION on the retained days.
    pub y: Vec<f64>,
}

impl DesignMatrix {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

pub const ATTENTION_SCALE: f64 = 10_000.0;

/// Assemble the regressor matrix for one model.
///
/// M1: intercept, one-day lag of the dependent variable, six event dummies.
/// M2: adds ATTENTION DEVIATION / 10000 and the Charlie Hebdo dummy.
/// M3: adds the one-day lag of the daily online-news article count.
///
/// Dummies are 1 on event dates and 0 elsewhere (multiple same-kind events on
/// one day still give 1). Lags are a pure one-day shift on the retained panel,
/// and the first row is dropped.
pub fn build_regressors(
    cal: &EventCalendar,
    rows: &[DailySeriesRow],
    news: Option<&[(NaiveDate, f64)]>,
    model: EventModel,
) -> Result<DesignMatrix> {
    if rows.len() < 2 {
        return Err(Error::invalid(
            "need at least 2 days to build a lagged panel",
        ));
    }
    for w in rows.windows(2) {
        if w[1].date <= w[0].date {
            return Err(Error::invalid(
                "daily rows must be strictly increasing in date",
            ));
        }
    }
    let first = rows[0].date;
    let last = rows[rows.len() - 1].date;
    for (d, k) in &cal.entries {
        if *d < first || *d > last {
            return Err(Error::invalid(format!(
                "event {k} on {d} falls outside the panel window {first}..{last}"
            )));
        }
    }
    let news_map: Option<BTreeMap<NaiveDate, f64>> = news.map(|n| n.iter().copied().collect());
    if model == EventModel::M3 && news_map.is_none() {
        return Err(Error::config("model 3 requires the online-news series"));
    }

    // first row is consumed by the lag
    let retained = &rows[1..];
    let n = retained.len();
    let mut names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();

    names.push("const".into());
    columns.push(vec![1.0; n]);

    names.push("sentiment_deviation_lag".into());
    columns.push(
        rows[..rows.len() - 1]
            .iter()
            .map(|r| r.sentiment_deviation)
            .collect(),
    );

    for kind in EventKind::MODEL1 {
        names.push(kind.as_str().into());
        columns.push(
            retained
                .iter()
                .map(|r| if cal.occurs(r.date, kind) { 1.0 } else { 0.0 })
                .collect(),
        );
    }

    if model == EventModel::M2 || model == EventModel::M3 {
        names.push("attention_deviation_10k".into());
        columns.push(
            retained
                .iter()
                .map(|r| r.attention_deviation / ATTENTION_SCALE)
                .collect(),
        );
        names.push("charlie_hebdo".into());
        columns.push(
            retained
                .iter()
                .map(|r| {
                    if cal.occurs(r.date, EventKind::CharlieHebdo) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        );
    }

    if model == EventModel::M3 {
        let news_map = news_map.as_ref().unwrap();
        let mut col = Vec::with_capacity(n);
        for t in 1..rows.len() {
            let prev = rows[t - 1].date;
            match news_map.get(&prev) {
                Some(v) => col.push(*v),
                None => {
                    return Err(Error::invalid(format!(
                        "news series is missing {prev}, needed for the lag"
                    )))
                }
            }
        }
        names.push("news_online_lag".into());
        columns.push(col);
    }

    Ok(DesignMatrix {
        dates: retained.iter().map(|r| r.date).collect(),
        names,
        columns,
        y: retained.iter().map(|r| r.sentiment_deviation).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize) -> Vec<DailySeriesRow> {
        let start: NaiveDate = "2014-08-01".parse().unwrap();
        (0..n)
            .map(|i| {
                let s = 0.25 + 0.01 * ((i % 5) as f64) - 0.02;
                DailySeriesRow {
                    date: start + chrono::Duration::days(i as i64),
                    n_tweets: 1000 + 100 * (i as u64 % 7),
                    sentiment: s,
                    sentiment_deviation: s - 0.25,
                    attention_deviation: 100.0 * (i as f64 % 7.0) - 300.0,
                }
            })
            .collect()
    }

    #[test]
    fn dummy_is_one_only_on_event_date() {
        let rs = rows(30);
        let event_date: NaiveDate = "2014-08-19".parse().unwrap();
        let cal = EventCalendar::new(vec![(event_date, EventKind::BeheadingWestern)]);
        let dm = build_regressors(&cal, &rs, None, EventModel::M1).unwrap();
        let col = dm.column("beheading_western").unwrap();
        for (d, v) in dm.dates.iter().zip(col) {
            assert_eq!(*v, if *d == event_date { 1.0 } else { 0.0 });
        }
        assert_eq!(col.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn empty_calendar_gives_zero_event_columns_and_correct_lag() {
        let rs = rows(10);
        let dm = build_regressors(&EventCalendar::default(), &rs, None, EventModel::M1).unwrap();
        for kind in EventKind::MODEL1 {
            assert!(dm.column(kind.as_str()).unwrap().iter().all(|v| *v == 0.0));
        }
        let lag = dm.column("sentiment_deviation_lag").unwrap();
        for (t, v) in lag.iter().enumerate() {
            assert_eq!(*v, rs[t].sentiment_deviation, "lag[t] = y[t-1]");
        }
        assert_eq!(dm.y.len(), rs.len() - 1);
    }

    #[test]
    fn attention_scaling_by_ten_thousand() {
        let mut rs = rows(5);
        rs[2].attention_deviation = 100_000.0;
        let dm = build_regressors(&EventCalendar::default(), &rs, None, EventModel::M2).unwrap();
        let col = dm.column("attention_deviation_10k").unwrap();
        assert_eq!(col[1], 10.0); // row for day index 2 sits at position 1 after trimming
    }

    #[test]
    fn duplicate_same_day_events_stay_binary() {
        let rs = rows(6);
        let d = rs[3].date;
        let cal = EventCalendar::new(vec![
            (d, EventKind::MilitaryVictory),
            (d, EventKind::MilitaryVictory),
        ]);
        let dm = build_regressors(&cal, &rs, None, EventModel::M1).unwrap();
        assert_eq!(
            dm.column("military_victory").unwrap().iter().sum::<f64>(),
            1.0
        );
    }

    #[test]
    fn model_nesting() {
        let rs = rows(12);
        let news: Vec<(NaiveDate, f64)> = rs.iter().map(|r| (r.date, 700.0)).collect();
        let m1 = build_regressors(&EventCalendar::default(), &rs, None, EventModel::M1).unwrap();
        let m2 = build_regressors(&EventCalendar::default(), &rs, None, EventModel::M2).unwrap();
        let m3 =
            build_regressors(&EventCalendar::default(), &rs, Some(&news), EventModel::M3).unwrap();
        for n in &m1.names {
            assert!(m2.names.contains(n));
        }
        for n in &m2.names {
            assert!(m3.names.contains(n));
        }
    }

    #[test]
    fn event_outside_window_rejected() {
        let rs = rows(5);
        let cal = EventCalendar::new(vec![(
            "2015-03-01".parse().unwrap(),
            EventKind::MilitaryDefeat,
        )]);
        assert!(build_regressors(&cal, &rs, None, EventModel::M1).is_err());
    }

    #[test]
    fn missing_news_rejected_for_m3() {
        let rs = rows(5);
        assert!(build_regressors(&EventCalendar::default(), &rs, None, EventModel::M3).is_err());
        let partial: Vec<(NaiveDate, f64)> = rs[..2].iter().map(|r| (r.date, 1.0)).collect();
        assert!(build_regressors(
            &EventCalendar::default(),
            &rs,
            Some(&partial),
            EventModel::M3
        )
        .is_err());
    }
}
