//! Keyword query matching over normalized text.

use std::fs;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// An OR-disjunction of literal terms; each term may be multi-word.
#[derive(Debug, Clone)]
pub struct QuerySpec {
    terms: Vec<String>,
}

impl QuerySpec {
    /// Build a query from raw terms. Terms are normalized once up front.
    pub fn new<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms: Vec<String> = terms
            .into_iter()
            .map(|t| normalize_for_match(t.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        if terms.is_empty() {
            return Err(Error::config("query must contain at least one term"));
        }
        Ok(QuerySpec { terms })
    }

    /// Load a query file: UTF-8, one term per line, blank lines ignored.
    pub fn from_file(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path)?;
        QuerySpec::new(body.lines().map(str::trim).filter(|l| !l.is_empty()))
            .map_err(|_| Error::config(format!("query file {} has no terms", path.display())))
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn matches(&self, text: &str) -> bool {
        match_query(text, self)
    }
}

/// True iff any query term occurs as a substring of the normalized text.
///
/// Matching happens after NFC normalization and Unicode lowercasing, with
/// whitespace runs collapsed so multi-word terms match across line breaks.
pub fn match_query(text: &str, query: &QuerySpec) -> bool {
    let haystack = normalize_for_match(text);
    query.terms.iter().any(|t| haystack.contains(t))
}

fn normalize_for_match(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    let lowered = nfc.to_lowercase();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}
