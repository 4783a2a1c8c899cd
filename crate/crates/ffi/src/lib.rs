//! C ABI for the aggsent quantifier.
//!
//! The surface is small: fit a model from a stream file and a
//! labels file, quantify further streams with it, and solve the simplex
//! least-squares problem directly from numeric buffers. Handles are opaque;
//! every call returns a status code and the last error message is retrievable
//! per thread via `aggsent_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use aggsent::corpus::{
    normalize_tokens, profile, read_documents_jsonl, read_labels_csv, NormConfig, TrainingSet,
    Vocabulary,
};
use aggsent::quantifier::{
    quantify_freq, sentiment_ratio, CategoryDistribution, EnsembleModel, LabeledProfiles,
    ProfileMatrix, QuantifyConfig,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggsentStatus {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    EstimationError = 3,
    IoError = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().filter(|b| *b != 0).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &aggsent::Error) -> AggsentStatus {
    match err {
        aggsent::Error::Config(_) | aggsent::Error::Invalid(_) => AggsentStatus::InvalidArgument,
        aggsent::Error::Parse { .. } => AggsentStatus::ParseError,
        aggsent::Error::Estimation(_) | aggsent::Error::NonConvergence(_) => {
            AggsentStatus::EstimationError
        }
        aggsent::Error::Io(_) => AggsentStatus::IoError,
    }
}

fn guard(body: impl FnOnce() -> Result<AggsentStatus, aggsent::Error>) -> AggsentStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            AggsentStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, aggsent::Error> {
    if ptr.is_null() {
        return Err(aggsent::Error::Invalid("null path".into()));
    }
    let s = unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| aggsent::Error::Invalid("path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

/// A fitted quantification model: vocabulary, training profiles, and the
/// per-subset conditional matrices. Immutable after `aggsent_model_fit`.
pub struct AggsentModel {
    vocab: Vocabulary,
    norm: NormConfig,
    ensemble: EnsembleModel,
}

/// Copy the last error message for the calling thread into `buf` (NUL
/// terminated, truncated to `cap`). Returns the full message length.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be null (query).
#[no_mangle]
pub unsafe extern "C" fn aggsent_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len() - 1
    })
}

/// Fit a model from a JSONL stream file and a `doc_id,category[,coder_id]`
/// labels CSV (ids refer into the stream). On success writes a handle to
/// `out_model`; free it with `aggsent_model_free`.
///
/// # Safety
/// `stream_path` and `labels_path` must be NUL-terminated strings and
/// `out_model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aggsent_model_fit(
    stream_path: *const c_char,
    labels_path: *const c_char,
    seed: u64,
    n_subsets: usize,
    words_per_subset: usize,
    out_model: *mut *mut AggsentModel,
) -> AggsentStatus {
    guard(|| {
        if out_model.is_null() {
            return Err(aggsent::Error::Invalid("null output pointer".into()));
        }
        let stream = unsafe { path_arg(stream_path) }?;
        let labels_path = unsafe { path_arg(labels_path) }?;
        let docs = read_documents_jsonl(stream, None, None)?;
        let labels = read_labels_csv(labels_path)?;
        let train = TrainingSet::assemble(&docs, &labels)?;
        let norm = NormConfig::default();
        let vocab = Vocabulary::build(
            &train
                .items()
                .iter()
                .map(|it| normalize_tokens(&it.doc.text, &norm))
                .collect::<Vec<_>>(),
            aggsent::corpus::vocab::DEFAULT_MIN_COUNT,
            aggsent::corpus::vocab::DEFAULT_MAX_SIZE,
        );
        let labeled = LabeledProfiles::from_training(&train, &vocab, &norm);
        let cfg = QuantifyConfig {
            n_subsets,
            words_per_subset: words_per_subset.min(vocab.len().max(1)),
            bootstrap_reps: 2,
            rng_seed: seed,
        };
        let ensemble = EnsembleModel::fit(&labeled, &cfg)?;
        let model = Box::new(AggsentModel {
            vocab,
            norm,
            ensemble,
        });
        unsafe { *out_model = Box::into_raw(model) };
        Ok(AggsentStatus::Ok)
    })
}

/// Release a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be a handle from `aggsent_model_fit`, passed at most once.
#[no_mangle]
pub unsafe extern "C" fn aggsent_model_free(model: *mut AggsentModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Number of categories the model estimates.
///
/// # Safety
/// `model` must be a live handle from `aggsent_model_fit`.
#[no_mangle]
pub unsafe extern "C" fn aggsent_model_n_categories(model: *const AggsentModel) -> usize {
    if model.is_null() {
        return 0;
    }
    unsafe { &*model }.ensemble.categories().len()
}

/// Static name of category `index` ("positive", "negative", ...), or null.
///
/// # Safety
/// `model` must be a live handle from `aggsent_model_fit`.
#[no_mangle]
pub unsafe extern "C" fn aggsent_model_category_name(
    model: *const AggsentModel,
    index: usize,
) -> *const c_char {
    if model.is_null() {
        return std::ptr::null();
    }
    let cats = unsafe { &*model }.ensemble.categories();
    match cats.get(index) {
        Some(aggsent::corpus::Category::Positive) => c"positive".as_ptr(),
        Some(aggsent::corpus::Category::Negative) => c"negative".as_ptr(),
        Some(aggsent::corpus::Category::Neutral) => c"neutral".as_ptr(),
        Some(aggsent::corpus::Category::OffTopic) => c"offtopic".as_ptr(),
        None => std::ptr::null(),
    }
}

/// Quantify a JSONL stream file. Writes one estimate per category (model
/// category order) into `out_estimates`; `cap` is its capacity.
///
/// # Safety
/// `model` must be a live handle; `out_estimates` must point to at least
/// `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn aggsent_model_quantify_file(
    model: *const AggsentModel,
    stream_path: *const c_char,
    out_estimates: *mut f64,
    cap: usize,
) -> AggsentStatus {
    guard(|| {
        if model.is_null() || out_estimates.is_null() {
            return Err(aggsent::Error::Invalid("null argument".into()));
        }
        let model = unsafe { &*model };
        let k = model.ensemble.categories().len();
        if cap < k {
            set_error("estimate buffer too small");
            return Ok(AggsentStatus::BufferTooSmall);
        }
        let stream = unsafe { path_arg(stream_path) }?;
        let docs = read_documents_jsonl(stream, None, None)?;
        let profiles: Vec<_> = docs
            .iter()
            .map(|d| profile(&normalize_tokens(&d.text, &model.norm), &model.vocab))
            .collect();
        let q = model.ensemble.quantify(&profiles)?;
        for (j, c) in model.ensemble.categories().iter().enumerate() {
            unsafe { *out_estimates.add(j) = q.distribution.get(*c) };
        }
        Ok(AggsentStatus::Ok)
    })
}

/// Solve `min ||y - Pm b||^2` on the probability simplex from raw buffers.
/// `pm` is row-major with `n_rows x n_categories` entries and column sums 1;
/// `out_beta` receives `n_categories` weights summing to 1.
///
/// # Safety
/// `y`, `pm`, `out_beta` must point to buffers of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn aggsent_quantify_simplex(
    y: *const f64,
    n_rows: usize,
    pm: *const f64,
    n_categories: usize,
    out_beta: *mut f64,
) -> AggsentStatus {
    guard(|| {
        if y.is_null() || pm.is_null() || out_beta.is_null() {
            return Err(aggsent::Error::Invalid("null argument".into()));
        }
        if n_rows == 0 || n_categories == 0 || n_categories > 4 {
            return Err(aggsent::Error::Invalid(
                "need 1..=4 categories and at least one row".into(),
            ));
        }
        let yv = unsafe { std::slice::from_raw_parts(y, n_rows) };
        let pmv = unsafe { std::slice::from_raw_parts(pm, n_rows * n_categories) };
        // categories are positional here; names do not matter for the solve
        let cats = aggsent::corpus::Category::ALL[..n_categories].to_vec();
        let columns: Vec<Vec<f64>> = (0..n_categories)
            .map(|j| (0..n_rows).map(|r| pmv[r * n_categories + j]).collect())
            .collect();
        let matrix = ProfileMatrix::from_columns(cats.clone(), columns)?;
        let q = quantify_freq(yv, &matrix)?;
        for (j, c) in cats.iter().enumerate() {
            unsafe { *out_beta.add(j) = q.distribution.get(*c) };
        }
        Ok(AggsentStatus::Ok)
    })
}

/// Positive share of the opinionated mass: `positive / (positive + negative)`.
///
/// # Safety
/// `out_ratio` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aggsent_sentiment_ratio(
    positive: f64,
    negative: f64,
    out_ratio: *mut f64,
) -> AggsentStatus {
    guard(|| {
        if out_ratio.is_null() {
            return Err(aggsent::Error::Invalid("null output pointer".into()));
        }
        if !(0.0..=1.0).contains(&positive) || !(0.0..=1.0).contains(&negative) {
            return Err(aggsent::Error::Invalid("masses must lie in [0, 1]".into()));
        }
        let d = CategoryDistribution::from_pairs(&[
            (aggsent::corpus::Category::Positive, positive),
            (aggsent::corpus::Category::Negative, negative),
            (
                aggsent::corpus::Category::Neutral,
                (1.0 - positive - negative).max(0.0),
            ),
        ])?;
        unsafe { *out_ratio = sentiment_ratio(&d)? };
        Ok(AggsentStatus::Ok)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn write_fixtures(dir: &Path) -> (CString, CString, CString) {
        std::fs::create_dir_all(dir).unwrap();
        let mut jsonl = String::new();
        let mut labels = String::from("doc_id,category\n");
        for i in 0..60 {
            let (text, cat) = if i % 2 == 0 {
                ("good good topic", "positive")
            } else {
                ("bad bad topic", "negative")
            };
            jsonl.push_str(&format!(
                "{{\"id\":\"tr{i}\",\"timestamp\":\"2014-07-01T00:00:{:02}Z\",\"text\":\"{text}\"}}\n",
                i % 60
            ));
            labels.push_str(&format!("tr{i},{cat}\n"));
        }
        let mut test_jsonl = String::new();
        for i in 0..90 {
            let text = if i % 3 == 0 {
                "good good topic"
            } else {
                "bad topic"
            };
            test_jsonl.push_str(&format!(
                "{{\"id\":\"te{i}\",\"timestamp\":\"2014-07-02T00:00:{:02}Z\",\"text\":\"{text}\"}}\n",
                i % 60
            ));
        }
        let stream = dir.join("stream.jsonl");
        let labels_path = dir.join("labels.csv");
        let test_path = dir.join("test.jsonl");
        std::fs::write(&stream, jsonl).unwrap();
        std::fs::write(&labels_path, labels).unwrap();
        std::fs::write(&test_path, test_jsonl).unwrap();
        (
            CString::new(stream.to_str().unwrap()).unwrap(),
            CString::new(labels_path.to_str().unwrap()).unwrap(),
            CString::new(test_path.to_str().unwrap()).unwrap(),
        )
    }

    #[test]
    fn fit_quantify_free_roundtrip() {
        let dir = std::env::temp_dir().join(format!("aggsent-ffi-{}", std::process::id()));
        let (stream, labels, test) = write_fixtures(&dir);
        unsafe {
            let mut model: *mut AggsentModel = std::ptr::null_mut();
            let st = aggsent_model_fit(stream.as_ptr(), labels.as_ptr(), 7, 10, 2, &mut model);
            assert_eq!(st, AggsentStatus::Ok);
            assert!(!model.is_null());
            let k = aggsent_model_n_categories(model);
            assert_eq!(k, 2);
            let name = aggsent_model_category_name(model, 0);
            assert_eq!(CStr::from_ptr(name).to_str().unwrap(), "positive");

            let mut est = vec![0.0f64; k];
            let st = aggsent_model_quantify_file(model, test.as_ptr(), est.as_mut_ptr(), k);
            assert_eq!(st, AggsentStatus::Ok);
            let total: f64 = est.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            // ~one third of the test stream is positive-language
            assert!((est[0] - 1.0 / 3.0).abs() < 0.1, "{est:?}");
            aggsent_model_free(model);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn error_reporting_via_last_error() {
        unsafe {
            let mut model: *mut AggsentModel = std::ptr::null_mut();
            let missing = CString::new("/nonexistent/stream.jsonl").unwrap();
            let labels = CString::new("/nonexistent/labels.csv").unwrap();
            let st = aggsent_model_fit(missing.as_ptr(), labels.as_ptr(), 0, 1, 1, &mut model);
            assert_ne!(st, AggsentStatus::Ok);
            let mut buf = vec![0i8; 256];
            let len = aggsent_last_error(buf.as_mut_ptr(), buf.len());
            assert!(len > 0);
        }
    }

    #[test]
    fn simplex_solver_from_buffers() {
        // rows x cats, row-major: the 2x2 hand case
        let pm = [0.8, 0.3, 0.2, 0.7];
        let y = [0.55, 0.45];
        let mut beta = [0.0f64; 2];
        let st =
            unsafe { aggsent_quantify_simplex(y.as_ptr(), 2, pm.as_ptr(), 2, beta.as_mut_ptr()) };
        assert_eq!(st, AggsentStatus::Ok);
        assert!((beta[0] - 0.5).abs() < 1e-8);
        assert!((beta[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn ratio_helper() {
        let mut r = 0.0f64;
        let st = unsafe { aggsent_sentiment_ratio(0.1, 0.3, &mut r) };
        assert_eq!(st, AggsentStatus::Ok);
        assert!((r - 0.25).abs() < 1e-12);
        let st = unsafe { aggsent_sentiment_ratio(0.0, 0.0, &mut r) };
        assert_eq!(st, AggsentStatus::EstimationError);
    }
}
