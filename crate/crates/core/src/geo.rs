//! Country attribution: coordinates, then profile location, then time zone.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{
    fold_arabic, normalize_tokens, profile, Document, NormConfig, TokenProfile, TrainingSet,
    Vocabulary,
};
use crate::error::{Error, Result};
use crate::quantifier::{sentiment_ratio, EnsembleModel, LabeledProfiles, QuantifyConfig};

/// Axis-aligned bounding box for one country. Containment checks walk the
/// boxes in file order and the first hit wins; that fixed order is the tie
/// rule for overlapping boxes.
#[derive(Debug, Clone)]
pub struct CountryBox {
    pub iso2: String,
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl CountryBox {
    fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.min_lat && lat <= self.max_lat && lon >= self.min_lon && lon <= self.max_lon
    }
}

/// Place-name lookup plus country bounding boxes.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    names: HashMap<String, String>,
    boxes: Vec<CountryBox>,
}

impl Gazetteer {
    pub fn new(names: HashMap<String, String>, boxes: Vec<CountryBox>) -> Gazetteer {
        Gazetteer { names, boxes }
    }

    /// Read `normalized_name,iso2` rows (header required). Names are
    /// re-normalized on load so lookups stay consistent.
    pub fn read_names_csv(path: &Path) -> Result<HashMap<String, String>> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let mut names = HashMap::new();
        for (i, record) in reader.records().enumerate() {
            let lineno = i + 2;
            let record = record.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            let name = normalize_place(record.get(0).unwrap_or(""));
            let iso2 = record.get(1).unwrap_or("").trim().to_uppercase();
            if name.is_empty() || iso2.is_empty() {
                return Err(Error::parse(path, lineno, "empty name or country code"));
            }
            names.insert(name, iso2);
        }
        Ok(names)
    }

    /// Read `iso2,min_lat,min_lon,max_lat,max_lon` rows (header required).
    pub fn read_boxes_csv(path: &Path) -> Result<Vec<CountryBox>> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let mut boxes = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let lineno = i + 2;
            let record = record.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            let num = |c: usize| -> Result<f64> {
                record
                    .get(c)
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, "bad coordinate"))
            };
            let b = CountryBox {
                iso2: record.get(0).unwrap_or("").trim().to_uppercase(),
                min_lat: num(1)?,
                min_lon: num(2)?,
                max_lat: num(3)?,
                max_lon: num(4)?,
            };
            if b.iso2.is_empty() || b.min_lat > b.max_lat || b.min_lon > b.max_lon {
                return Err(Error::parse(path, lineno, "degenerate bounding box"));
            }
            boxes.push(b);
        }
        Ok(boxes)
    }

    pub fn from_files(names_path: &Path, boxes_path: &Path) -> Result<Gazetteer> {
        Ok(Gazetteer {
            names: Self::read_names_csv(names_path)?,
            boxes: Self::read_boxes_csv(boxes_path)?,
        })
    }

    fn country_of_point(&self, lat: f64, lon: f64) -> Option<&str> {
        self.boxes
            .iter()
            .find(|b| b.contains(lat, lon))
            .map(|b| b.iso2.as_str())
    }

    /// Countries reachable from the free-text location by exact normalized
    /// token/phrase match (no fuzzy matching).
    fn countries_of_place(&self, place: &str) -> BTreeSet<&str> {
        let norm = normalize_place(place);
        let mut out = BTreeSet::new();
        if norm.is_empty() {
            return out;
        }
        if let Some(c) = self.names.get(&norm) {
            out.insert(c.as_str());
        }
        let tokens: Vec<&str> = norm.split(' ').collect();
        for start in 0..tokens.len() {
            for end in start + 1..=tokens.len() {
                let phrase = tokens[start..end].join(" ");
                if let Some(c) = self.names.get(&phrase) {
                    out.insert(c.as_str());
                }
            }
        }
        out
    }
}

/// Normalized key form for place strings: NFC, lowercase, Arabic folding,
/// punctuation treated as whitespace, runs collapsed.
pub fn normalize_place(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    let lowered = fold_arabic(&nfc.to_lowercase());
    let cleaned: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// UTC-offset (or zone-name) to candidate-country table. A key resolves only
/// when it maps to exactly one country.
#[derive(Debug, Clone, Default)]
pub struct TimeZoneTable {
    map: HashMap<String, BTreeSet<String>>,
}

impl TimeZoneTable {
    pub fn new(entries: &[(&str, &str)]) -> TimeZoneTable {
        let mut map: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (key, iso2) in entries {
            map.entry(key.trim().to_string())
                .or_default()
                .insert(iso2.trim().to_uppercase());
        }
        TimeZoneTable { map }
    }

    /// Read `offset_minutes_or_name,iso2` rows (header required).
    pub fn from_csv(path: &Path) -> Result<TimeZoneTable> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let mut map: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (i, record) in reader.records().enumerate() {
            let lineno = i + 2;
            let record = record.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            let key = record.get(0).unwrap_or("").trim().to_string();
            let iso2 = record.get(1).unwrap_or("").trim().to_uppercase();
            if key.is_empty() || iso2.is_empty() {
                return Err(Error::parse(path, lineno, "empty key or country code"));
            }
            map.entry(key).or_default().insert(iso2);
        }
        Ok(TimeZoneTable { map })
    }

    fn unique_country(&self, offset_minutes: i32) -> Option<&str> {
        let candidates = self.map.get(&offset_minutes.to_string())?;
        if candidates.len() == 1 {
            candidates.iter().next().map(String::as_str)
        } else {
            None
        }
    }
}

/// How a document's country was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AttributionTier {
    Coordinates,
    ProfileLocation,
    TimeZone,
    Unresolved,
}

impl AttributionTier {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributionTier::Coordinates => "coordinates",
            AttributionTier::ProfileLocation => "profile_location",
            AttributionTier::TimeZone => "time_zone",
            AttributionTier::Unresolved => "unresolved",
        }
    }
}

/// Attribution outcome; `country` is present exactly when the tier is not
/// `Unresolved`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribution {
    pub country: Option<String>,
    pub tier: AttributionTier,
}

/// Resolve a document's country with strict tier precedence
/// coordinates > profile location > time zone. A tier is used only when it
/// yields a unique country; otherwise the cascade falls through.
pub fn attribute_country(doc: &Document, gz: &Gazetteer, tz: &TimeZoneTable) -> Attribution {
    if let Some(geo) = &doc.geo {
        if let Some(c) = gz.country_of_point(geo.lat, geo.lon) {
            return Attribution {
                country: Some(c.to_string()),
                tier: AttributionTier::Coordinates,
            };
        }
    }
    if let Some(loc) = &doc.user_location {
        let candidates = gz.countries_of_place(loc);
        if candidates.len() == 1 {
            return Attribution {
                country: Some(candidates.into_iter().next().unwrap().to_string()),
                tier: AttributionTier::ProfileLocation,
            };
        }
    }
    if let Some(offset) = doc.utc_offset {
        if let Some(c) = tz.unique_country(offset) {
            return Attribution {
                country: Some(c.to_string()),
                tier: AttributionTier::TimeZone,
            };
        }
    }
    Attribution {
        country: None,
        tier: AttributionTier::Unresolved,
    }
}

/// Per-country sentiment estimates over the attributed stream.
#[derive(Debug, Clone)]
pub struct CountrySentiment {
    pub country: String,
    pub n_tweets: u64,
    pub sentiment: f64,
    /// Flagged rather than dropped; discussion geolocated to the US needs
    /// extra care and can be excluded downstream.
    pub us_flagged: bool,
}

#[derive(Debug, Clone)]
pub struct CountryPanelReport {
    pub rows: Vec<CountrySentiment>,
    /// Share of stream documents whose country resolved.
    pub attribution_rate: f64,
    pub tier_counts: BTreeMap<&'static str, u64>,
    /// Countries that met the volume threshold but produced no sentiment
    /// estimate, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Attribute every document, quantify per country, and keep countries with
/// at least `min_tweets` attributed documents.
pub fn country_panel(
    stream: &[Document],
    train: &TrainingSet,
    norm: &NormConfig,
    cfg: &QuantifyConfig,
    gz: &Gazetteer,
    tz: &TimeZoneTable,
    min_tweets: u64,
) -> Result<CountryPanelReport> {
    if min_tweets < 1 {
        return Err(Error::config("min_tweets must be >= 1"));
    }
    if stream.is_empty() {
        return Err(Error::estimation("empty stream"));
    }

    let attributions: Vec<Attribution> = stream
        .par_iter()
        .map(|d| attribute_country(d, gz, tz))
        .collect();

    let mut tier_counts: BTreeMap<&'static str, u64> = BTreeMap::new();
    let mut by_country: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut resolved = 0u64;
    for (i, att) in attributions.iter().enumerate() {
        *tier_counts.entry(att.tier.as_str()).or_insert(0) += 1;
        if let Some(c) = &att.country {
            resolved += 1;
            by_country.entry(c.as_str()).or_default().push(i);
        }
    }
    let attribution_rate = resolved as f64 / stream.len() as f64;

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

    let qualifying: Vec<(&str, &Vec<usize>)> = by_country
        .iter()
        .filter(|(_, idx)| idx.len() as u64 >= min_tweets)
        .map(|(c, idx)| (*c, idx))
        .collect();
    if qualifying.is_empty() {
        return Err(Error::estimation(format!(
            "no country reaches the {min_tweets}-tweet threshold"
        )));
    }

    let estimates: Vec<(String, u64, std::result::Result<f64, String>)> = qualifying
        .par_iter()
        .map(|(country, idx)| {
            let profiles: Vec<TokenProfile> = idx
                .iter()
                .map(|&i| profile(&normalize_tokens(&stream[i].text, norm), &vocab))
                .collect();
            let outcome = model
                .quantify(&profiles)
                .and_then(|q| sentiment_ratio(&q.distribution))
                .map_err(|e| e.to_string());
            (country.to_string(), idx.len() as u64, outcome)
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (country, n, outcome) in estimates {
        match outcome {
            Ok(sentiment) => {
                let us_flagged = country == "US";
                rows.push(CountrySentiment {
                    country,
                    n_tweets: n,
                    sentiment,
                    us_flagged,
                });
            }
            Err(reason) => skipped.push((country, reason)),
        }
    }
    if rows.is_empty() {
        return Err(Error::estimation(
            "no country produced a sentiment estimate",
        ));
    }
    Ok(CountryPanelReport {
        rows,
        attribution_rate,
        tier_counts,
        skipped,
    })
}
