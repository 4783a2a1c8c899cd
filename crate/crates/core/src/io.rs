//! Output writing and shared readers.
//!
//! Every output CSV starts with a comment line carrying the subcommand, the
//! seed, and a hash of the resolved configuration, so results are traceable
//! to their run. Files are written atomically (temp file + rename); a failed
//! run leaves no partial output.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::series::DailySeriesRow;

/// FNV-1a, 64-bit. Stable across platforms; used for config fingerprints.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The traceability comment placed at the top of every output CSV.
pub fn header_comment(subcommand: &str, seed: u64, config_repr: &str) -> String {
    format!(
        "# aggsent-{subcommand} seed={seed} config_hash={:016x}\n",
        fnv64(config_repr.as_bytes())
    )
}

/// Write atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(dir)?;
    }
    let tmp: PathBuf = {
        let mut name = path
            .file_name()
            .ok_or_else(|| Error::config(format!("bad output path {}", path.display())))?
            .to_os_string();
        name.push(".tmp");
        dir.join(name)
    };
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(e)
    })?;
    Ok(())
}

/// Serialize rows into RFC-4180 CSV (with header row) behind a comment line.
pub fn csv_with_comment(comment: &str, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| Error::invalid(e.to_string()))?;
    for row in rows {
        w.write_record(row)
            .map_err(|e| Error::invalid(e.to_string()))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
        .map_err(|e| Error::invalid(e.to_string()))?;
    Ok(format!("{comment}{body}"))
}

/// Render a float with full round-trip precision (deterministic output).
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Read back a `daily-series` CSV (comment lines ignored).
pub fn read_series_csv(path: &Path) -> Result<Vec<DailySeriesRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
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
    let c_date = col("date")?;
    let c_n = col("n_tweets")?;
    let c_s = col("sentiment")?;
    let c_sd = col("sentiment_deviation")?;
    let c_ad = col("attention_deviation")?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let lineno = i + 2;
        let record = record.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let get = |c: usize| record.get(c).unwrap_or("").trim();
        let date: NaiveDate = get(c_date)
            .parse()
            .map_err(|e| Error::parse(path, lineno, format!("bad date: {e}")))?;
        let parse_f = |c: usize, name: &str| -> Result<f64> {
            get(c)
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad {name} '{}'", get(c))))
        };
        rows.push(DailySeriesRow {
            date,
            n_tweets: get(c_n)
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad n_tweets '{}'", get(c_n))))?,
            sentiment: parse_f(c_s, "sentiment")?,
            sentiment_deviation: parse_f(c_sd, "sentiment_deviation")?,
            attention_deviation: parse_f(c_ad, "attention_deviation")?,
        });
    }
    Ok(rows)
}

/// Read a `date,article_count` news series (header required).
pub fn read_news_csv(path: &Path) -> Result<Vec<(NaiveDate, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let lineno = i + 2;
        let record = record.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let date: NaiveDate = record
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| Error::parse(path, lineno, format!("bad date: {e}")))?;
        let count: f64 = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, "bad article_count"))?;
        out.push((date, count));
    }
    Ok(out)
}

/// Parse a `key = value` config file into quantifier settings. Unknown keys
/// are an error (fail fast). The seed comes exclusively from `--seed`.
pub fn read_quantify_config(path: &Path, seed: u64) -> Result<crate::quantifier::QuantifyConfig> {
    let body =
        fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    let mut cfg = crate::quantifier::QuantifyConfig {
        rng_seed: seed,
        ..Default::default()
    };
    for (i, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, i + 1, "expected key = value"))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad value '{}'", value.trim())))?;
        match key.trim() {
            "n_subsets" => cfg.n_subsets = value,
            "words_per_subset" => cfg.words_per_subset = value,
            "bootstrap_reps" => cfg.bootstrap_reps = value,
            other => {
                return Err(Error::parse(path, i + 1, format!("unknown key '{other}'")));
            }
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("aggsent-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert!(!dir.join("out.csv.tmp").exists());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn series_roundtrip() {
        let dir = std::env::temp_dir().join(format!("aggsent-io2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("series.csv");
        let content = "# aggsent-daily-series seed=1 config_hash=0000000000000000\n\
                       date,n_tweets,sentiment,sentiment_deviation,attention_deviation,lowess_sentiment,lowess_attention\n\
                       2014-07-01,100,0.25,0.01,-3.5,0.009,-2.0\n";
        std::fs::write(&path, content).unwrap();
        let rows = read_series_csv(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_tweets, 100);
        assert!((rows[0].sentiment - 0.25).abs() < 1e-12);
        std::fs::remove_dir_all(&dir).ok();
    }
}
