//! C ABI over `afs-core`.
//!
//! Every fallible function returns an [`AfsStatus`]; on failure a message is
//! available from [`afs_last_error_message`] on the same thread. Objects are
//! passed as opaque handles created by `*_new`/`*_load`/`*_fit` functions and
//! released with the matching `*_free`. Strings returned through `char **`
//! out-parameters are owned by the caller and released with
//! [`afs_string_free`].
//!
//! Token sequences are passed as whitespace-separated UTF-8 strings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use afs_core::corpus::{parse_conllu, ParsedSentence};
use afs_core::features::{
    dep_overlap, ngram_cosine, rouge_l, rouge_n, rouge_s, rouge_su, rouge_w, CategoryLexicon, EmbeddingTable,
    LexicalizedSide, OverlapNorm, RougeScore,
};
use afs_core::ml::{
    fit_model, layout_fingerprint, paired_ttest, pearson_r, rmse, t_cdf, HyperParams, RegressionModel, SmoOptions,
};
use afs_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Config = 4,
    Undefined = 5,
    MissingResource = 6,
    LayoutMismatch = 7,
    Io = 8,
    Parse = 9,
    Internal = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfsLexicalizedSide {
    Governor = 0,
    Both = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfsOverlapNorm {
    SumOfLengths = 0,
    MeanOfLengths = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AfsRougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AfsTTestResult {
    pub t: f64,
    pub df: usize,
    /// Two-sided p-value.
    pub p: f64,
}

/// Fitted regression model.
pub struct AfsModel {
    inner: RegressionModel,
}

/// Word category lexicon.
pub struct AfsLexicon {
    inner: CategoryLexicon,
}

/// Word embedding table.
pub struct AfsEmbeddings {
    inner: EmbeddingTable,
}

struct FfiError {
    status: AfsStatus,
    message: String,
}

impl FfiError {
    fn new(status: AfsStatus, message: impl Into<String>) -> Self {
        FfiError {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for FfiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Record { .. } | Error::Csv(_) | Error::Json(_) => AfsStatus::Parse,
            Error::Input(_) => AfsStatus::InvalidInput,
            Error::Config(_) => AfsStatus::Config,
            Error::Undefined(_) => AfsStatus::Undefined,
            Error::MissingResource(_) => AfsStatus::MissingResource,
            Error::LayoutMismatch { .. } => AfsStatus::LayoutMismatch,
            Error::Io { .. } => AfsStatus::Io,
            Error::Internal(_) => AfsStatus::Internal,
        };
        FfiError::new(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, FfiError>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> AfsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AfsStatus::Ok
        }
        Ok(Err(e)) => {
            set_last_error(&e.message);
            e.status
        }
        Err(_) => {
            set_last_error("panic inside afs");
            AfsStatus::Panic
        }
    }
}

unsafe fn f64_slice<'a>(p: *const f64, n: usize, what: &str) -> FfiResult<&'a [f64]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(FfiError::new(AfsStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(FfiError::new(AfsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| FfiError::new(AfsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| FfiError::new(AfsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| FfiError::new(AfsStatus::NullPointer, format!("{what} is null")))
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| FfiError::new(AfsStatus::Internal, "string contains an interior NUL"))
}

fn rows(x: &[f64], n_rows: usize, n_cols: usize) -> Vec<Vec<f64>> {
    if n_cols == 0 {
        return vec![Vec::new(); n_rows];
    }
    x.chunks(n_cols).map(<[f64]>::to_vec).collect()
}

fn generic_fingerprint(n_cols: usize) -> String {
    let names: Vec<String> = (0..n_cols).map(|i| format!("x{i}")).collect();
    layout_fingerprint(&names)
}

fn one_sentence(text: &str, what: &str) -> FfiResult<ParsedSentence> {
    let mut parse = parse_conllu(text);
    if let Some(e) = parse.errors.pop() {
        return Err(e.into());
    }
    match parse.sentences.len() {
        1 => Ok(parse.sentences.remove(0)),
        n => Err(FfiError::new(
            AfsStatus::InvalidInput,
            format!("{what} must hold exactly one CoNLL-U sentence, got {n}"),
        )),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn afs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next afs call on the same thread.
#[no_mangle]
pub extern "C" fn afs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn afs_status_name(status: AfsStatus) -> *const c_char {
    let s: &'static str = match status {
        AfsStatus::Ok => "ok\0",
        AfsStatus::NullPointer => "null pointer\0",
        AfsStatus::InvalidUtf8 => "invalid utf-8\0",
        AfsStatus::InvalidInput => "invalid input\0",
        AfsStatus::Config => "invalid configuration\0",
        AfsStatus::Undefined => "undefined result\0",
        AfsStatus::MissingResource => "missing resource\0",
        AfsStatus::LayoutMismatch => "feature layout mismatch\0",
        AfsStatus::Io => "i/o error\0",
        AfsStatus::Parse => "parse error\0",
        AfsStatus::Internal => "internal error\0",
        AfsStatus::Panic => "panic\0",
    };
    s.as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn afs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `a` and `b` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_pearson_r(a: *const f64, b: *const f64, n: usize, out: *mut f64) -> AfsStatus {
    guard(|| {
        let r = pearson_r(f64_slice(a, n, "a")?, f64_slice(b, n, "b")?)?;
        *out_ref(out, "out")? = r;
        Ok(())
    })
}

/// # Safety
/// `a` and `b` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_rmse(a: *const f64, b: *const f64, n: usize, out: *mut f64) -> AfsStatus {
    guard(|| {
        let r = rmse(f64_slice(a, n, "a")?, f64_slice(b, n, "b")?)?;
        *out_ref(out, "out")? = r;
        Ok(())
    })
}

/// Student t cumulative distribution function.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_t_cdf(t: f64, df: f64, out: *mut f64) -> AfsStatus {
    guard(|| {
        *out_ref(out, "out")? = t_cdf(t, df)?;
        Ok(())
    })
}

/// Paired t-test of `a` against `b`.
///
/// # Safety
/// `a` and `b` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_paired_ttest(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut AfsTTestResult,
) -> AfsStatus {
    guard(|| {
        let r = paired_ttest(f64_slice(a, n, "a")?, f64_slice(b, n, "b")?)?;
        *out_ref(out, "out")? = AfsTTestResult {
            t: r.t,
            df: r.df,
            p: r.p,
        };
        Ok(())
    })
}

fn rouge_out(s: RougeScore) -> AfsRougeScore {
    AfsRougeScore {
        precision: s.precision,
        recall: s.recall,
        f: s.f,
    }
}

unsafe fn rouge_with(
    reference: *const c_char,
    candidate: *const c_char,
    out: *mut AfsRougeScore,
    f: impl FnOnce(&[String], &[String]) -> RougeScore,
) -> AfsStatus {
    guard(|| {
        let r = tokens(str_arg(reference, "reference")?);
        let c = tokens(str_arg(candidate, "candidate")?);
        *out_ref(out, "out")? = rouge_out(f(&r, &c));
        Ok(())
    })
}

/// ROUGE-N of `candidate` against `reference`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_rouge_n(
    reference: *const c_char,
    candidate: *const c_char,
    n: usize,
    beta: f64,
    out: *mut AfsRougeScore,
) -> AfsStatus {
    if n == 0 {
        set_last_error("ROUGE-N needs n >= 1");
        return AfsStatus::InvalidInput;
    }
    rouge_with(reference, candidate, out, |r, c| rouge_n(r, c, n, beta))
}

/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_rouge_l(
    reference: *const c_char,
    candidate: *const c_char,
    beta: f64,
    out: *mut AfsRougeScore,
) -> AfsStatus {
    rouge_with(reference, candidate, out, |r, c| rouge_l(r, c, beta))
}

/// ROUGE-W with weighting function `k^w`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_rouge_w(
    reference: *const c_char,
    candidate: *const c_char,
    w: f64,
    beta: f64,
    out: *mut AfsRougeScore,
) -> AfsStatus {
    if !(w >= 1.0) {
        set_last_error("ROUGE-W weight must be at least 1");
        return AfsStatus::InvalidInput;
    }
    rouge_with(reference, candidate, out, |r, c| rouge_w(r, c, w, beta))
}

/// ROUGE-S* (skip-bigrams, unlimited gap).
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_rouge_s(
    reference: *const c_char,
    candidate: *const c_char,
    beta: f64,
    out: *mut AfsRougeScore,
) -> AfsStatus {
    rouge_with(reference, candidate, out, |r, c| rouge_s(r, c, beta))
}

/// ROUGE-SU* (skip-bigrams plus unigrams).
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_rouge_su(
    reference: *const c_char,
    candidate: *const c_char,
    beta: f64,
    out: *mut AfsRougeScore,
) -> AfsStatus {
    rouge_with(reference, candidate, out, |r, c| rouge_su(r, c, beta))
}

/// Cosine of n-gram count vectors for orders 1..=max_order.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_ngram_cosine(
    a: *const c_char,
    b: *const c_char,
    max_order: usize,
    out: *mut f64,
) -> AfsStatus {
    guard(|| {
        if max_order == 0 {
            return Err(FfiError::new(AfsStatus::InvalidInput, "max_order must be at least 1"));
        }
        let ta = tokens(str_arg(a, "a")?);
        let tb = tokens(str_arg(b, "b")?);
        *out_ref(out, "out")? = ngram_cosine(&ta, &tb, max_order);
        Ok(())
    })
}

/// Parses a lexicon in `%`-header dictionary format.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_lexicon_parse(text: *const c_char, out: *mut *mut AfsLexicon) -> AfsStatus {
    guard(|| {
        let lex = CategoryLexicon::parse(str_arg(text, "text")?)?;
        *out_ref(out, "out")? = Box::into_raw(Box::new(AfsLexicon { inner: lex }));
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_lexicon_load(path: *const c_char, out: *mut *mut AfsLexicon) -> AfsStatus {
    guard(|| {
        let lex = CategoryLexicon::load(Path::new(str_arg(path, "path")?))?;
        *out_ref(out, "out")? = Box::into_raw(Box::new(AfsLexicon { inner: lex }));
        Ok(())
    })
}

/// Newline-separated category names of `word`, including ancestors, in
/// category id order. Free the result with `afs_string_free`.
///
/// # Safety
/// `lexicon` must be a live handle; `word` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn afs_lexicon_categories(
    lexicon: *const AfsLexicon,
    word: *const c_char,
    out: *mut *mut c_char,
) -> AfsStatus {
    guard(|| {
        let lex = &handle(lexicon, "lexicon")?.inner;
        let names: Vec<&str> = lex
            .lookup(str_arg(word, "word")?)
            .into_iter()
            .filter_map(|id| lex.category(id).map(|c| c.name.as_str()))
            .collect();
        *out_ref(out, "out")? = c_string(names.join("\n"))?;
        Ok(())
    })
}

/// # Safety
/// `lexicon` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn afs_lexicon_free(lexicon: *mut AfsLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Generalized dependency overlap of two single-sentence CoNLL-U strings.
///
/// # Safety
/// `lexicon` must be a live handle; strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn afs_dep_overlap(
    lexicon: *const AfsLexicon,
    conllu_a: *const c_char,
    conllu_b: *const c_char,
    side: AfsLexicalizedSide,
    norm: AfsOverlapNorm,
    out: *mut f64,
) -> AfsStatus {
    guard(|| {
        let lex = &handle(lexicon, "lexicon")?.inner;
        let a = one_sentence(str_arg(conllu_a, "conllu_a")?, "conllu_a")?;
        let b = one_sentence(str_arg(conllu_b, "conllu_b")?, "conllu_b")?;
        let side = match side {
            AfsLexicalizedSide::Governor => LexicalizedSide::Governor,
            AfsLexicalizedSide::Both => LexicalizedSide::Both,
        };
        let norm = match norm {
            AfsOverlapNorm::SumOfLengths => OverlapNorm::SumOfLengths,
            AfsOverlapNorm::MeanOfLengths => OverlapNorm::MeanOfLengths,
        };
        *out_ref(out, "out")? = dep_overlap(&a, &b, lex, side, norm)?;
        Ok(())
    })
}

/// Loads a word2vec text or binary file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_embeddings_load(path: *const c_char, out: *mut *mut AfsEmbeddings) -> AfsStatus {
    guard(|| {
        let t = EmbeddingTable::load(Path::new(str_arg(path, "path")?))?;
        *out_ref(out, "out")? = Box::into_raw(Box::new(AfsEmbeddings { inner: t }));
        Ok(())
    })
}

/// # Safety
/// `table` must be a live handle; `dim` and `vocab_size` writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn afs_embeddings_shape(
    table: *const AfsEmbeddings,
    dim: *mut usize,
    vocab_size: *mut usize,
) -> AfsStatus {
    guard(|| {
        let t = &handle(table, "table")?.inner;
        if let Some(d) = dim.as_mut() {
            *d = t.dim();
        }
        if let Some(v) = vocab_size.as_mut() {
            *v = t.vocab_size();
        }
        Ok(())
    })
}

/// Copies the vector of `word` into `out` (length `len`, which must equal
/// the table dimension). `found` is set to false for unknown words, in
/// which case `out` is left untouched.
///
/// # Safety
/// `table` must be a live handle; `word` NUL-terminated; `out` must hold
/// `len` floats; `found` writable.
#[no_mangle]
pub unsafe extern "C" fn afs_embeddings_lookup(
    table: *const AfsEmbeddings,
    word: *const c_char,
    out: *mut f32,
    len: usize,
    found: *mut bool,
) -> AfsStatus {
    guard(|| {
        let t = &handle(table, "table")?.inner;
        if len != t.dim() {
            return Err(FfiError::new(
                AfsStatus::InvalidInput,
                format!("buffer length {len} differs from dimension {}", t.dim()),
            ));
        }
        let found = out_ref(found, "found")?;
        match t.lookup(str_arg(word, "word")?) {
            Some(v) => {
                if out.is_null() {
                    return Err(FfiError::new(AfsStatus::NullPointer, "out is null"));
                }
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(v);
                *found = true;
            }
            None => *found = false,
        }
        Ok(())
    })
}

/// # Safety
/// `table` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn afs_embeddings_free(table: *mut AfsEmbeddings) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

unsafe fn fit(
    params: HyperParams,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    y: *const f64,
    out: *mut *mut AfsModel,
) -> AfsStatus {
    guard(|| {
        let cells = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| FfiError::new(AfsStatus::InvalidInput, "matrix size overflows"))?;
        let xs = rows(f64_slice(x, cells, "x")?, n_rows, n_cols);
        let ys = f64_slice(y, n_rows, "y")?;
        let m = fit_model(params, &xs, ys, &generic_fingerprint(n_cols), SmoOptions::default())?;
        *out_ref(out, "out")? = Box::into_raw(Box::new(AfsModel { inner: m }));
        Ok(())
    })
}

/// Standardizes the row-major `n_rows x n_cols` matrix `x` and fits ridge
/// regression.
///
/// # Safety
/// `x` must hold `n_rows * n_cols` doubles, `y` `n_rows`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn afs_model_fit_ridge(
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    y: *const f64,
    alpha: f64,
    out: *mut *mut AfsModel,
) -> AfsStatus {
    fit(HyperParams::Ridge { alpha }, x, n_rows, n_cols, y, out)
}

/// Standardizes `x` and fits epsilon-SVR with an RBF kernel.
///
/// # Safety
/// `x` must hold `n_rows * n_cols` doubles, `y` `n_rows`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn afs_model_fit_svr(
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    y: *const f64,
    c: f64,
    gamma: f64,
    epsilon: f64,
    out: *mut *mut AfsModel,
) -> AfsStatus {
    fit(HyperParams::Svr { c, gamma, epsilon }, x, n_rows, n_cols, y, out)
}

/// Reads a model saved by `afs train` or [`afs_model_to_json`].
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_model_from_json(json: *const c_char, out: *mut *mut AfsModel) -> AfsStatus {
    guard(|| {
        let m = RegressionModel::from_json(str_arg(json, "json")?)?;
        *out_ref(out, "out")? = Box::into_raw(Box::new(AfsModel { inner: m }));
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_model_load(path: *const c_char, out: *mut *mut AfsModel) -> AfsStatus {
    guard(|| {
        let m = RegressionModel::load(Path::new(str_arg(path, "path")?))?;
        *out_ref(out, "out")? = Box::into_raw(Box::new(AfsModel { inner: m }));
        Ok(())
    })
}

/// Serializes the model; free the result with `afs_string_free`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_model_to_json(model: *const AfsModel, out: *mut *mut c_char) -> AfsStatus {
    guard(|| {
        let json = handle(model, "model")?.inner.to_json()?;
        *out_ref(out, "out")? = c_string(json)?;
        Ok(())
    })
}

/// Number of input columns the model expects.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn afs_model_n_features(model: *const AfsModel, out: *mut usize) -> AfsStatus {
    guard(|| {
        let m = &handle(model, "model")?.inner;
        *out_ref(out, "out")? = m
            .n_features()
            .ok_or_else(|| FfiError::new(AfsStatus::Internal, "model width is unknown"))?;
        Ok(())
    })
}

/// Predicts the row-major `n_rows x n_cols` matrix `x` into `out`.
///
/// # Safety
/// `model` must be a live handle; `x` must hold `n_rows * n_cols` doubles
/// and `out` room for `n_rows`.
#[no_mangle]
pub unsafe extern "C" fn afs_model_predict(
    model: *const AfsModel,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
) -> AfsStatus {
    guard(|| {
        let m = &handle(model, "model")?.inner;
        if let Some(w) = m.n_features() {
            if w != n_cols {
                return Err(FfiError::new(
                    AfsStatus::LayoutMismatch,
                    format!("model expects {w} columns, got {n_cols}"),
                ));
            }
        }
        let cells = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| FfiError::new(AfsStatus::InvalidInput, "matrix size overflows"))?;
        let xs = rows(f64_slice(x, cells, "x")?, n_rows, n_cols);
        let pred = m.predict(&xs, &m.fingerprint)?;
        if n_rows > 0 {
            if out.is_null() {
                return Err(FfiError::new(AfsStatus::NullPointer, "out is null"));
            }
            std::slice::from_raw_parts_mut(out, n_rows).copy_from_slice(&pred);
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn afs_model_free(model: *mut AfsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs the `afs` command line with `argv[0..argc]` and returns its exit
/// code (0 success, 1 input error, 2 internal failure).
///
/// # Safety
/// `argv` must point to `argc` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn afs_cli_run(argc: c_int, argv: *const *const c_char) -> c_int {
    let mut args = Vec::new();
    if argc > 0 {
        if argv.is_null() {
            set_last_error("argv is null");
            return 1;
        }
        for i in 0..argc as usize {
            match str_arg(*argv.add(i), "argv entry") {
                Ok(s) => args.push(s.to_string()),
                Err(e) => {
                    set_last_error(&e.message);
                    return 1;
                }
            }
        }
    } else {
        args.push("afs".to_string());
    }
    afs_core::cli::run(args)
}
