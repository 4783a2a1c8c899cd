//! Vocabulary construction and word-presence profiles.

use std::collections::HashMap;

/// Fixed ordered term list built from a training corpus.
///
/// Inclusion rule: tokens occurring at least `min_count` times in total,
/// ranked by descending document frequency (ties broken lexicographically)
/// and capped at `max_size`.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
}

pub const DEFAULT_MIN_COUNT: usize = 2;
pub const DEFAULT_MAX_SIZE: usize = 2000;

impl Vocabulary {
    pub fn build<T: AsRef<str>>(docs: &[Vec<T>], min_count: usize, max_size: usize) -> Vocabulary {
        let mut total: HashMap<&str, usize> = HashMap::new();
        let mut doc_freq: HashMap<&str, usize> = HashMap::new();
        for toks in docs {
            let mut seen: Vec<&str> = Vec::new();
            for t in toks {
                let t = t.as_ref();
                *total.entry(t).or_insert(0) += 1;
                if !seen.contains(&t) {
                    seen.push(t);
                }
            }
            for t in seen {
                *doc_freq.entry(t).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = total
            .iter()
            .filter(|(_, &c)| c >= min_count)
            .map(|(&t, _)| (t, doc_freq[t]))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size);
        Vocabulary::from_terms(ranked.into_iter().map(|(t, _)| t.to_string()))
    }

    /// A vocabulary with an explicit term order (used by tests and fixtures).
    pub fn from_terms<I: IntoIterator<Item = String>>(terms: I) -> Vocabulary {
        let terms: Vec<String> = terms.into_iter().collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: u32) -> &str {
        &self.terms[i as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Word-presence profile: the set of vocabulary indices present in a document.
///
/// Presence, not counts; indices are sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenProfile {
    bits: Vec<u32>,
}

impl TokenProfile {
    pub fn from_bits(mut bits: Vec<u32>) -> TokenProfile {
        bits.sort_unstable();
        bits.dedup();
        TokenProfile { bits }
    }

    pub fn bits(&self) -> &[u32] {
        &self.bits
    }

    pub fn contains(&self, idx: u32) -> bool {
        self.bits.binary_search(&idx).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Project a token list onto a vocabulary; out-of-vocabulary tokens are ignored.
pub fn profile<T: AsRef<str>>(tokens: &[T], vocab: &Vocabulary) -> TokenProfile {
    let bits = tokens
        .iter()
        .filter_map(|t| vocab.get(t.as_ref()))
        .collect();
    TokenProfile::from_bits(bits)
}
