//! Document ingestion, labeling, and training-set assembly.

pub mod normalize;
pub mod query;
pub mod vocab;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use normalize::{fold_arabic, normalize_tokens, NormConfig};
pub use query::{match_query, QuerySpec};
pub use vocab::{profile, TokenProfile, Vocabulary};

/// Opinion category. `OffTopic` is a first-class category during
/// quantification and is excluded only at the sentiment-ratio stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Positive,
    Negative,
    Neutral,
    OffTopic,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Positive,
        Category::Negative,
        Category::Neutral,
        Category::OffTopic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Positive => "positive",
            Category::Negative => "negative",
            Category::Neutral => "neutral",
            Category::OffTopic => "offtopic",
        }
    }

    pub fn parse(s: &str) -> Result<Category> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" => Ok(Category::Positive),
            "negative" | "neg" => Ok(Category::Negative),
            "neutral" | "neu" => Ok(Category::Neutral),
            "offtopic" | "off_topic" | "off-topic" => Ok(Category::OffTopic),
            other => Err(Error::invalid(format!("unknown category '{other}'"))),
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A label is exactly one category.
pub type Label = Category;

/// Geographic point attached to a document.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

/// One ingested social-media record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_location: Option<String>,
    /// Signed UTC offset in minutes, when the platform attached one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utc_offset: Option<i32>,
}

impl Document {
    pub fn utc_date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("document id must be nonempty".into());
        }
        if let Some(geo) = &self.geo {
            if !(-90.0..=90.0).contains(&geo.lat) {
                return Err(format!("latitude {} out of range", geo.lat));
            }
            if !(-180.0..=180.0).contains(&geo.lon) {
                return Err(format!("longitude {} out of range", geo.lon));
            }
        }
        Ok(())
    }
}

/// Read a JSONL document stream. One `Document` per line; unknown fields are
/// ignored. Optionally filters by keyword query and an inclusive UTC date
/// window. Ids must be unique within the stream.
pub fn read_documents_jsonl(
    path: &Path,
    query: Option<&QuerySpec>,
    window: Option<(NaiveDate, NaiveDate)>,
) -> Result<Vec<Document>> {
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let reader = BufReader::new(file);
    let mut docs = Vec::new();
    let mut seen_ids: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        doc.validate()
            .map_err(|msg| Error::parse(path, lineno, msg))?;
        if let Some(prev) = seen_ids.insert(doc.id.clone(), lineno) {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "duplicate document id '{}' (first seen on line {prev})",
                    doc.id
                ),
            ));
        }
        if let Some((lo, hi)) = window {
            let d = doc.utc_date();
            if d < lo || d > hi {
                continue;
            }
        }
        if let Some(q) = query {
            if !q.matches(&doc.text) {
                continue;
            }
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// One raw coder label as read from the labels CSV.
#[derive(Debug, Clone)]
pub struct LabelRecord {
    pub doc_id: String,
    pub category: Category,
    pub coder_id: Option<String>,
}

/// Read `doc_id,category[,coder_id]` label rows (header row required).
pub fn read_labels_csv(path: &Path) -> Result<Vec<LabelRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("doc_id")
        .ok_or_else(|| Error::parse(path, 1, "missing 'doc_id' column".to_string()))?;
    let cat_col = col("category")
        .ok_or_else(|| Error::parse(path, 1, "missing 'category' column".to_string()))?;
    let coder_col = col("coder_id");

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let lineno = i + 2;
        let record = record.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let doc_id = record
            .get(id_col)
            .ok_or_else(|| Error::parse(path, lineno, "missing doc_id field"))?
            .trim()
            .to_string();
        if doc_id.is_empty() {
            return Err(Error::parse(path, lineno, "empty doc_id"));
        }
        let category = record
            .get(cat_col)
            .ok_or_else(|| Error::parse(path, lineno, "missing category field"))
            .and_then(|s| {
                Category::parse(s).map_err(|e| Error::parse(path, lineno, e.to_string()))
            })?;
        let coder_id = coder_col
            .and_then(|c| record.get(c))
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        out.push(LabelRecord {
            doc_id,
            category,
            coder_id,
        });
    }
    Ok(out)
}

/// Merge per-coder labels into one label per document: the unique modal
/// category wins; documents whose votes tie are dropped.
pub fn merge_coder_labels(records: &[LabelRecord]) -> Vec<(String, Category)> {
    let mut by_doc: Vec<(&str, Vec<Category>)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in records {
        match index.get(r.doc_id.as_str()) {
            Some(&i) => by_doc[i].1.push(r.category),
            None => {
                index.insert(&r.doc_id, by_doc.len());
                by_doc.push((&r.doc_id, vec![r.category]));
            }
        }
    }
    let mut out = Vec::new();
    for (doc_id, votes) in by_doc {
        let mut counts = [0usize; 4];
        for v in &votes {
            counts[*v as usize] += 1;
        }
        let max = *counts.iter().max().unwrap();
        let winners: Vec<Category> = Category::ALL
            .iter()
            .copied()
            .filter(|c| counts[*c as usize] == max)
            .collect();
        if winners.len() == 1 {
            out.push((doc_id.to_string(), winners[0]));
        }
    }
    out
}

/// One labeled training document.
#[derive(Debug, Clone)]
pub struct TrainingItem {
    pub doc: Document,
    pub category: Category,
    pub coder_id: Option<String>,
}

/// Labeled documents used to fit the quantifier.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    items: Vec<TrainingItem>,
}

impl TrainingSet {
    pub fn new(items: Vec<TrainingItem>) -> Result<TrainingSet> {
        if items.is_empty() {
            return Err(Error::invalid("training set is empty"));
        }
        let set = TrainingSet { items };
        let n_cats = set.categories().len();
        if set.items.len() < n_cats {
            return Err(Error::invalid(format!(
                "training set has {} items but {} categories",
                set.items.len(),
                n_cats
            )));
        }
        Ok(set)
    }

    /// Join a document stream with merged labels on document id.
    /// Label rows whose id is not in the stream are an error.
    pub fn assemble(docs: &[Document], labels: &[LabelRecord]) -> Result<TrainingSet> {
        let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
        let merged = merge_coder_labels(labels);
        let mut items = Vec::with_capacity(merged.len());
        for (doc_id, category) in merged {
            let doc = by_id.get(doc_id.as_str()).ok_or_else(|| {
                Error::invalid(format!("label refers to unknown document id '{doc_id}'"))
            })?;
            items.push(TrainingItem {
                doc: (*doc).clone(),
                category,
                coder_id: None,
            });
        }
        TrainingSet::new(items)
    }

    pub fn items(&self) -> &[TrainingItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Distinct categories present, in canonical order.
    pub fn categories(&self) -> Vec<Category> {
        Category::ALL
            .iter()
            .copied()
            .filter(|c| self.items.iter().any(|it| it.category == *c))
            .collect()
    }
}

/// Fraction of positions on which two coders assigned the same category.
pub fn compute_agreement(labels_a: &[Category], labels_b: &[Category]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::invalid(format!(
            "label lists differ in length ({} vs {})",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::invalid("label lists are empty"));
    }
    let same = labels_a
        .iter()
        .zip(labels_b)
        .filter(|(a, b)| a == b)
        .count();
    Ok(same as f64 / labels_a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agreement_fraction() {
        // 200 items, 186 identical -> 0.93
        let mut a = vec![Category::Positive; 200];
        let b = vec![Category::Positive; 200];
        for slot in a.iter_mut().take(14) {
            *slot = Category::Negative;
        }
        let agr = compute_agreement(&a, &b).unwrap();
        assert!((agr - 0.93).abs() < 1e-12);

        assert_eq!(compute_agreement(&b, &b).unwrap(), 1.0);

        let a4 = [
            Category::Positive,
            Category::Negative,
            Category::Neutral,
            Category::OffTopic,
        ];
        let b4 = [
            Category::Positive,
            Category::OffTopic,
            Category::Negative,
            Category::Neutral,
        ];
        assert_eq!(compute_agreement(&a4, &b4).unwrap(), 0.25);
    }

    #[test]
    fn agreement_length_mismatch() {
        let a = [Category::Positive];
        let b = [Category::Positive, Category::Negative];
        assert!(compute_agreement(&a, &b).is_err());
    }

    #[test]
    fn majority_merge_drops_ties() {
        let rec = |id: &str, cat, coder: &str| LabelRecord {
            doc_id: id.into(),
            category: cat,
            coder_id: Some(coder.into()),
        };
        let records = vec![
            rec("d1", Category::Positive, "a"),
            rec("d1", Category::Positive, "b"),
            rec("d1", Category::Negative, "c"),
            rec("d2", Category::Positive, "a"),
            rec("d2", Category::Negative, "b"),
            rec("d3", Category::Neutral, "a"),
        ];
        let merged = merge_coder_labels(&records);
        assert_eq!(
            merged,
            vec![
                ("d1".to_string(), Category::Positive),
                ("d3".to_string(), Category::Neutral)
            ]
        );
    }

    #[test]
    fn jsonl_roundtrip_and_validation() {
        let dir = std::env::temp_dir().join(format!("aggsent-corpus-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("stream.jsonl");
        std::fs::write(
            &path,
            concat!(
                r#"{"id":"a","timestamp":"2014-07-01T10:00:00Z","text":"about ISIS","extra":1}"#,
                "\n",
                r#"{"id":"b","timestamp":"2014-07-02T10:00:00Z","text":"hello world"}"#,
                "\n",
            ),
        )
        .unwrap();
        let all = read_documents_jsonl(&path, None, None).unwrap();
        assert_eq!(all.len(), 2);

        let q = QuerySpec::new(["isis"]).unwrap();
        let filtered = read_documents_jsonl(&path, Some(&q), None).unwrap();
        assert_eq!(filtered.len(), 1);
        assert_eq!(filtered[0].id, "a");

        let window = ("2014-07-02".parse().unwrap(), "2014-07-31".parse().unwrap());
        let windowed = read_documents_jsonl(&path, None, Some(window)).unwrap();
        assert_eq!(windowed.len(), 1);
        assert_eq!(windowed[0].id, "b");

        std::fs::write(
            &path,
            r#"{"id":"","timestamp":"2014-07-01T10:00:00Z","text":"x"}"#,
        )
        .unwrap();
        assert!(read_documents_jsonl(&path, None, None).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
