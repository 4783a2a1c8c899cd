//! Text normalization and tokenization.
//!
//! The pipeline: NFC, whitespace tokenization, URL and
//! mention removal, hashtag-mark stripping, Unicode lowercasing and optional
//! Arabic letter folding. No stemming is applied at any configuration.

use unicode_normalization::UnicodeNormalization;

/// Tokenizer configuration.
#[derive(Debug, Clone)]
pub struct NormConfig {
    /// Drop tokens that look like URLs (`http://`, `https://`, `www.`).
    pub strip_urls: bool,
    /// Drop `@mention` tokens.
    pub strip_mentions: bool,
    /// Strip leading `#` marks but keep the hashtag body.
    pub strip_hashtag_marks: bool,
    /// Fold alef variants to plain alef, ta-marbuta to ha, and remove tashkeel.
    pub arabic_folding: bool,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            strip_urls: true,
            strip_mentions: true,
            strip_hashtag_marks: true,
            arabic_folding: true,
        }
    }
}

/// Tokenize `text` under `cfg`. Total on valid Unicode; empty text gives `[]`.
///
/// Duplicates are preserved: this is a token list, not a set.
pub fn normalize_tokens(text: &str, cfg: &NormConfig) -> Vec<String> {
    let nfc: String = text.nfc().collect();
    let mut out = Vec::new();
    for raw in nfc.split_whitespace() {
        let mut tok = raw;
        if cfg.strip_hashtag_marks {
            tok = tok.trim_start_matches('#');
        }
        if tok.is_empty() {
            continue;
        }
        let mut tok = tok.to_lowercase();
        if cfg.strip_urls && is_url(&tok) {
            continue;
        }
        if cfg.strip_mentions && tok.starts_with('@') {
            continue;
        }
        if cfg.arabic_folding {
            tok = fold_arabic(&tok);
        }
        if !tok.is_empty() {
            out.push(tok);
        }
    }
    out
}

fn is_url(tok: &str) -> bool {
    tok.starts_with("http://") || tok.starts_with("https://") || tok.starts_with("www.")
}

/// Fold Arabic orthographic variants: alef forms to bare alef (ا), ta-marbuta
/// (ة) to ha (ه), and drop tashkeel diacritics (U+064B..U+065F, U+0670).
pub fn fold_arabic(s: &str) -> String {
    s.chars()
        .filter_map(|c| match c {
            '\u{0622}' | '\u{0623}' | '\u{0625}' | '\u{0671}' => Some('\u{0627}'),
            '\u{0629}' => Some('\u{0647}'),
            '\u{064B}'..='\u{065F}' | '\u{0670}' => None,
            _ => Some(c),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arabic_folding_example() {
        // alef-hamza + fatha folds to bare alef; hashtag mark stripped; URL dropped
        let toks = normalize_tokens("أَحب #داعش http://x.co", &NormConfig::default());
        assert_eq!(toks, vec!["احب".to_string(), "داعش".to_string()]);
    }

    #[test]
    fn empty_text() {
        assert!(normalize_tokens("", &NormConfig::default()).is_empty());
    }

    #[test]
    fn lowering_preserves_duplicates() {
        let toks = normalize_tokens("ISIS ISIS", &NormConfig::default());
        assert_eq!(toks, vec!["isis".to_string(), "isis".to_string()]);
    }

    #[test]
    fn mentions_and_hash_bodies() {
        let toks = normalize_tokens("@user #Topic plain", &NormConfig::default());
        assert_eq!(toks, vec!["topic".to_string(), "plain".to_string()]);
    }

    #[test]
    fn ta_marbuta_folds_to_ha() {
        assert_eq!(fold_arabic("الدولة"), "الدوله");
    }

    #[test]
    fn idempotent_on_rejoined_output() {
        let cfg = NormConfig::default();
        let once = normalize_tokens("أَحب #داعش @x http://a.b ISIS", &cfg);
        let twice = normalize_tokens(&once.join(" "), &cfg);
        assert_eq!(once, twice);
    }
}
