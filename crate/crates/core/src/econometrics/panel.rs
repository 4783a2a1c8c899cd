//! Country panel ingestion and the cross-country count-model family.

use std::path::Path;

use crate::econometrics::{negbin_fit, RegressionFit};
use crate::error::{Error, Result};

/// One country of the cross-sectional panel.
#[derive(Debug, Clone)]
pub struct CountryPanelRow {
    pub country: String,
    pub sentiment: f64,
    /// Attributed tweet volume; drives the Model 2 filter.
    pub n_tweets: u64,
    pub foreign_fighters: u64,
    /// Later-vintage fighter counts used by Model 4.
    pub foreign_fighters_alt: Option<u64>,
    pub active_terror_group: f64,
    pub borders_isis: f64,
    pub pct_shia: f64,
    pub democracy: f64,
    pub pct_broadband: f64,
    /// Exposure base; must be positive so its log exists.
    pub pct_muslim: f64,
    pub justify_attacks: Option<f64>,
}

impl CountryPanelRow {
    fn validate(&self, path: &Path, lineno: usize) -> Result<()> {
        let err = |msg: String| Err(Error::parse(path, lineno, msg));
        if self.country.is_empty() {
            return err("empty country code".into());
        }
        if !(0.0..=1.0).contains(&self.sentiment) {
            return err(format!("sentiment {} outside [0,1]", self.sentiment));
        }
        for (name, v) in [
            ("pct_shia", self.pct_shia),
            ("pct_broadband", self.pct_broadband),
            ("pct_muslim", self.pct_muslim),
        ] {
            if !(0.0..=100.0).contains(&v) {
                return err(format!("{name} = {v} outside [0,100]"));
            }
        }
        if self.pct_muslim.is_nan() || self.pct_muslim <= 0.0 {
            return err("pct_muslim must be positive (log exposure)".into());
        }
        if let Some(j) = self.justify_attacks {
            if !(0.0..=100.0).contains(&j) {
                return err(format!("justify_attacks = {j} outside [0,100]"));
            }
        }
        for (name, v) in [
            ("active_terror_group", self.active_terror_group),
            ("borders_isis", self.borders_isis),
        ] {
            if v != 0.0 && v != 1.0 {
                return err(format!("{name} must be 0 or 1, got {v}"));
            }
        }
        Ok(())
    }
}

/// Read a country panel CSV. Required columns: `country, sentiment, n_tweets,
/// foreign_fighters, active_terror_group, borders_isis, pct_shia, democracy,
/// pct_broadband, pct_muslim`. Optional: `foreign_fighters_alt,
/// justify_attacks` (empty cells allowed).
pub fn read_country_panel_csv(path: &Path) -> Result<Vec<CountryPanelRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::parse(path, 1, format!("missing '{name}' column")))
    };
    let opt_col = |name: &str| headers.iter().position(|h| h.trim() == name);

    let c_country = col("country")?;
    let c_sent = col("sentiment")?;
    let c_vol = col("n_tweets")?;
    let c_ff = col("foreign_fighters")?;
    let c_terror = col("active_terror_group")?;
    let c_border = col("borders_isis")?;
    let c_shia = col("pct_shia")?;
    let c_dem = col("democracy")?;
    let c_broad = col("pct_broadband")?;
    let c_muslim = col("pct_muslim")?;
    let c_ff_alt = opt_col("foreign_fighters_alt");
    let c_justify = opt_col("justify_attacks");

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let lineno = i + 2;
        let record = record.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let get = |c: usize| record.get(c).unwrap_or("").trim();
        let num = |c: usize, name: &str| -> Result<f64> {
            get(c)
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad {name} '{}'", get(c))))
        };
        let int = |c: usize, name: &str| -> Result<u64> {
            get(c)
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad {name} '{}'", get(c))))
        };
        let opt_num = |c: Option<usize>| -> Result<Option<f64>> {
            match c.map(get) {
                None | Some("") => Ok(None),
                Some(s) => s
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::parse(path, lineno, format!("bad value '{s}'"))),
            }
        };
        let row = CountryPanelRow {
            country: get(c_country).to_uppercase(),
            sentiment: num(c_sent, "sentiment")?,
            n_tweets: int(c_vol, "n_tweets")?,
            foreign_fighters: int(c_ff, "foreign_fighters")?,
            foreign_fighters_alt: match c_ff_alt.map(get) {
                None | Some("") => None,
                Some(s) => Some(s.parse().map_err(|_| {
                    Error::parse(path, lineno, format!("bad foreign_fighters_alt '{s}'"))
                })?),
            },
            active_terror_group: num(c_terror, "active_terror_group")?,
            borders_isis: num(c_border, "borders_isis")?,
            pct_shia: num(c_shia, "pct_shia")?,
            democracy: num(c_dem, "democracy")?,
            pct_broadband: num(c_broad, "pct_broadband")?,
            pct_muslim: num(c_muslim, "pct_muslim")?,
            justify_attacks: opt_num(c_justify)?,
        };
        row.validate(path, lineno)?;
        rows.push(row);
    }
    Ok(rows)
}

/// The five count-model specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfModel {
    /// Benchmark: all countries, full covariate set.
    M1,
    /// Countries with at least 15,000 attributed tweets.
    M2,
    /// Drops the United States.
    M3,
    /// Later-vintage foreign-fighter counts as the dependent variable.
    M4,
    /// `justify_attacks` survey share as the lone covariate.
    M5,
}

impl FfModel {
    pub fn from_index(i: u32) -> Result<FfModel> {
        match i {
            1 => Ok(FfModel::M1),
            2 => Ok(FfModel::M2),
            3 => Ok(FfModel::M3),
            4 => Ok(FfModel::M4),
            5 => Ok(FfModel::M5),
            _ => Err(Error::config(format!("ff model must be 1..=5, got {i}"))),
        }
    }
}

pub const M2_MIN_TWEETS: u64 = 15_000;

/// Fit one panel model: negative binomial with exposure `pct_muslim`.
pub fn ff_model_fit(
    rows: &[CountryPanelRow],
    model: FfModel,
    drop_us: bool,
) -> Result<RegressionFit> {
    let drop_us = drop_us || model == FfModel::M3;
    let selected: Vec<&CountryPanelRow> = rows
        .iter()
        .filter(|r| !(drop_us && r.country == "US"))
        .filter(|r| model != FfModel::M2 || r.n_tweets >= M2_MIN_TWEETS)
        .filter(|r| model != FfModel::M5 || r.justify_attacks.is_some())
        .filter(|r| model != FfModel::M4 || r.foreign_fighters_alt.is_some())
        .collect();
    if selected.is_empty() {
        return Err(Error::estimation("no countries left after model filters"));
    }

    let counts: Vec<u64> = selected
        .iter()
        .map(|r| match model {
            FfModel::M4 => r.foreign_fighters_alt.unwrap(),
            _ => r.foreign_fighters,
        })
        .collect();
    let exposure: Vec<f64> = selected.iter().map(|r| r.pct_muslim).collect();

    let (names, columns): (Vec<String>, Vec<Vec<f64>>) = if model == FfModel::M5 {
        (
            vec!["const".into(), "justify_attacks".into()],
            vec![
                vec![1.0; selected.len()],
                selected
                    .iter()
                    .map(|r| r.justify_attacks.unwrap())
                    .collect(),
            ],
        )
    } else {
        (
            vec![
                "const".into(),
                "sentiment".into(),
                "active_terror_group".into(),
                "borders_isis".into(),
                "pct_shia".into(),
                "democracy".into(),
                "pct_broadband".into(),
            ],
            vec![
                vec![1.0; selected.len()],
                selected.iter().map(|r| r.sentiment).collect(),
                selected.iter().map(|r| r.active_terror_group).collect(),
                selected.iter().map(|r| r.borders_isis).collect(),
                selected.iter().map(|r| r.pct_shia).collect(),
                selected.iter().map(|r| r.democracy).collect(),
                selected.iter().map(|r| r.pct_broadband).collect(),
            ],
        )
    };
    negbin_fit(&counts, &names, &columns, &exposure)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_panel(n: usize) -> Vec<CountryPanelRow> {
        (0..n)
            .map(|i| {
                let sentiment = 0.05 + 0.35 * ((i * 37 % 11) as f64 / 10.0);
                let pct_muslim = 5.0 + (i * 13 % 90) as f64;
                let mu = pct_muslim * (2.0 - 6.0 * sentiment).exp();
                let bump = ((i * 2654435761) % 9) as f64 - 4.0;
                CountryPanelRow {
                    country: if i == 0 { "US".into() } else { format!("C{i}") },
                    sentiment,
                    n_tweets: 1_000 + (i as u64 * 3_917) % 40_000,
                    foreign_fighters: (mu + bump * (mu * 0.5).sqrt()).max(0.0).round() as u64,
                    foreign_fighters_alt: Some(((mu * 1.4) as u64).max(1)),
                    active_terror_group: (i % 3 == 0) as u8 as f64,
                    borders_isis: (i % 4 == 0) as u8 as f64,
                    pct_shia: (i * 7 % 50) as f64,
                    democracy: -8.0 + (i % 17) as f64,
                    pct_broadband: (i * 11 % 60) as f64,
                    pct_muslim,
                    justify_attacks: if i % 2 == 0 {
                        Some((i * 5 % 40) as f64)
                    } else {
                        None
                    },
                }
            })
            .collect()
    }

    #[test]
    fn model_filters_shape_the_sample() {
        let panel = synthetic_panel(40);
        let m1 = ff_model_fit(&panel, FfModel::M1, false).unwrap();
        assert_eq!(m1.n, 40);

        let m2 = ff_model_fit(&panel, FfModel::M2, false).unwrap();
        let expect_m2 = panel.iter().filter(|r| r.n_tweets >= 15_000).count();
        assert_eq!(m2.n, expect_m2);
        assert!(m2.n < m1.n);

        let m3 = ff_model_fit(&panel, FfModel::M3, false).unwrap();
        assert_eq!(m3.n, 39, "US dropped");

        let m5 = ff_model_fit(&panel, FfModel::M5, false).unwrap();
        assert_eq!(
            m5.n,
            panel.iter().filter(|r| r.justify_attacks.is_some()).count()
        );
        assert_eq!(
            m5.names,
            vec!["const".to_string(), "justify_attacks".to_string()]
        );
    }

    #[test]
    fn sentiment_effect_recovered_in_sign() {
        let panel = synthetic_panel(50);
        let fit = ff_model_fit(&panel, FfModel::M1, false).unwrap();
        let s = fit.coefficient("sentiment").unwrap();
        assert!(s < 0.0, "injected negative sentiment effect, got {s}");
    }
}
