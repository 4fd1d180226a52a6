//! C ABI over the sumbench toolkit.
//!
//! Handles (`SbCorpus`, `SbIndex`) are opaque; every function returns an
//! `SbStatus` code and writes results through out-pointers. String results
//! are heap-allocated and must be released with `sb_string_free`. After a
//! non-OK status, `sb_last_error_message` returns a thread-local
//! description valid until the next failing call on the same thread.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::{CStr, CString};
use std::path::Path;

use libc::c_char;

use sumbench::corpus::MethodRecord;
use sumbench::facts::{tokenize_code, SemanticFacts};
use sumbench::gateway::{build_prompt, AsapContext, RunLog};
use sumbench::metrics::{bleu_cn, bleu_dc, meteor, normalize_summary, rouge_l};
use sumbench::pipeline::mine_corpus;
use sumbench::prompt::PromptStrategy;
use sumbench::retrieval::{build_index, Bm25Index};
use sumbench::stats::{ks_test_one_sided, t_test_one_sided};

/// Result codes. Anything other than `Ok` leaves a message retrievable via
/// `sb_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    NotFound = 5,
    Compute = 6,
}

/// Mined method corpus (opaque).
pub struct SbCorpus {
    records: Vec<MethodRecord>,
}

/// BM25 exemplar index over a corpus (opaque).
pub struct SbIndex {
    index: Bm25Index,
    by_id: BTreeMap<String, MethodRecord>,
}

/// N-gram metric scores for one (candidate, reference) pair.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbMetricScores {
    pub bleu: f64,
    pub bleu_dc: f64,
    pub meteor: f64,
    pub rouge_prec: f64,
    pub rouge_rec: f64,
}

/// Statistic and p-value of a one-sided test.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbTestResult {
    pub statistic: f64,
    pub p_value: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

fn fail(status: SbStatus, message: impl Into<String>) -> SbStatus {
    set_error(message);
    status
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn sb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Crate version as a static string; do not free.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, SbStatus> {
    if ptr.is_null() {
        return Err(fail(SbStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(SbStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn string_out(value: String, out: *mut *mut c_char) -> SbStatus {
    match CString::new(value) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            SbStatus::Ok
        }
        Err(_) => fail(SbStatus::Compute, "result contained interior NUL"),
    }
}

/// Release a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `ptr` must have been returned by a `sb_*` function of this library and
/// not freed before.
#[no_mangle]
pub unsafe extern "C" fn sb_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(CString::from_raw(ptr));
    }
}

// ---------------------------------------------------------------------------
// Corpus handles
// ---------------------------------------------------------------------------

/// Mine a Java source tree into a corpus handle.
///
/// # Safety
/// `root` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn sb_corpus_extract(
    root: *const c_char,
    require_javadoc: bool,
    out: *mut *mut SbCorpus,
) -> SbStatus {
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    let root = match cstr_arg(root, "root") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match mine_corpus(Path::new(root), &[], &[], require_javadoc) {
        Ok(outcome) => {
            *out = Box::into_raw(Box::new(SbCorpus {
                records: outcome.records,
            }));
            SbStatus::Ok
        }
        Err(e) => fail(SbStatus::Io, e.to_string()),
    }
}

/// Load a corpus from a JSONL file written by the CLI.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sb_corpus_load(path: *const c_char, out: *mut *mut SbCorpus) -> SbStatus {
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    let path = match cstr_arg(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match sumbench::jsonl::read_jsonl::<MethodRecord>(Path::new(path)) {
        Ok(records) => {
            *out = Box::into_raw(Box::new(SbCorpus { records }));
            SbStatus::Ok
        }
        Err(e) => fail(SbStatus::Io, e.to_string()),
    }
}

/// Number of methods in the corpus; 0 for NULL.
///
/// # Safety
/// `corpus` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sb_corpus_len(corpus: *const SbCorpus) -> usize {
    corpus.as_ref().map(|c| c.records.len()).unwrap_or(0)
}

/// JSON array of the method ids in corpus order (free with `sb_string_free`).
///
/// # Safety
/// `corpus` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sb_corpus_method_ids(
    corpus: *const SbCorpus,
    out: *mut *mut c_char,
) -> SbStatus {
    let Some(corpus) = corpus.as_ref() else {
        return fail(SbStatus::NullArgument, "corpus is null");
    };
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    let ids: Vec<&str> = corpus.records.iter().map(|r| r.id.as_str()).collect();
    string_out(serde_json::to_string(&ids).expect("ids serialize"), out)
}

/// Release a corpus handle. NULL is a no-op.
///
/// # Safety
/// `corpus` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sb_corpus_free(corpus: *mut SbCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

/// Build a BM25 index over the corpus (the training partition).
///
/// # Safety
/// `corpus` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sb_index_build(
    corpus: *const SbCorpus,
    out: *mut *mut SbIndex,
) -> SbStatus {
    let Some(corpus) = corpus.as_ref() else {
        return fail(SbStatus::NullArgument, "corpus is null");
    };
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    match build_index(&corpus.records) {
        Ok(index) => {
            let by_id = corpus
                .records
                .iter()
                .map(|r| (r.id.clone(), r.clone()))
                .collect();
            *out = Box::into_raw(Box::new(SbIndex { index, by_id }));
            SbStatus::Ok
        }
        Err(e) => fail(SbStatus::Compute, e.to_string()),
    }
}

/// Top-k most similar indexed methods for a code snippet, as a JSON array
/// of {"method_id", "score", "rank"} (free with `sb_string_free`).
/// `exclude_id` may be NULL.
///
/// # Safety
/// `index` must be a live handle; `query_code` a valid string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sb_index_top_k(
    index: *const SbIndex,
    query_code: *const c_char,
    k: usize,
    exclude_id: *const c_char,
    out: *mut *mut c_char,
) -> SbStatus {
    let Some(handle) = index.as_ref() else {
        return fail(SbStatus::NullArgument, "index is null");
    };
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    let query = match cstr_arg(query_code, "query_code") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let mut exclude = BTreeSet::new();
    if !exclude_id.is_null() {
        match cstr_arg(exclude_id, "exclude_id") {
            Ok(s) => {
                exclude.insert(s.to_string());
            }
            Err(status) => return status,
        }
    }
    let top = handle.index.top_k(&tokenize_code(query), k, &exclude);
    string_out(serde_json::to_string(&top).expect("exemplars serialize"), out)
}

/// Release an index handle. NULL is a no-op.
///
/// # Safety
/// `index` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sb_index_free(index: *mut SbIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

/// Render a prompt for the method with `method_id` in `corpus`. `strategy`
/// is one of simple, wordrestrict, summarizeexplanation, ignoreexception,
/// asap; the asap strategy requires `index`. Free the result with
/// `sb_string_free`.
///
/// # Safety
/// All handle/string arguments must be valid (index may be NULL for
/// non-asap strategies); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sb_render_prompt(
    corpus: *const SbCorpus,
    index: *const SbIndex,
    method_id: *const c_char,
    strategy: *const c_char,
    masked: bool,
    out: *mut *mut c_char,
) -> SbStatus {
    let Some(corpus) = corpus.as_ref() else {
        return fail(SbStatus::NullArgument, "corpus is null");
    };
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    let method_id = match cstr_arg(method_id, "method_id") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let strategy_name = match cstr_arg(strategy, "strategy") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let Some(strategy) = PromptStrategy::parse(strategy_name) else {
        return fail(SbStatus::NotFound, format!("unknown strategy {strategy_name:?}"));
    };
    let Some(method) = corpus.records.iter().find(|r| r.id == method_id) else {
        return fail(SbStatus::NotFound, format!("unknown method id {method_id:?}"));
    };

    let log = RunLog::default();
    let prompt = if strategy == PromptStrategy::Asap {
        let Some(handle) = index.as_ref() else {
            return fail(SbStatus::NullArgument, "asap strategy requires an index");
        };
        let context = AsapContext {
            index: &handle.index,
            train_by_id: &handle.by_id,
            exemplar_count: 3,
        };
        build_prompt(method, strategy, masked, Some(&context), &log)
    } else {
        build_prompt(method, strategy, masked, None, &log)
    };
    string_out(prompt.text, out)
}

// ---------------------------------------------------------------------------
// Metrics and statistics
// ---------------------------------------------------------------------------

/// Score a candidate summary against a reference on the n-gram metrics.
///
/// # Safety
/// `candidate` and `reference` must be valid strings; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sb_score_pair(
    candidate: *const c_char,
    reference: *const c_char,
    out: *mut SbMetricScores,
) -> SbStatus {
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    let candidate = match cstr_arg(candidate, "candidate") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let reference = match cstr_arg(reference, "reference") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let cand = normalize_summary(candidate);
    let reference = normalize_summary(reference);
    let (bleu, dc) = match (bleu_cn(&cand, &reference), bleu_dc(&cand, &reference)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(SbStatus::Compute, e.to_string()),
    };
    let (rouge_prec, rouge_rec) = rouge_l(&cand, &reference);
    *out = SbMetricScores {
        bleu,
        bleu_dc: dc,
        meteor: meteor(&cand, &reference),
        rouge_prec,
        rouge_rec,
    };
    SbStatus::Ok
}

/// Extract the semantic-facts block (identifiers + def-use) for a method.
/// Free the result with `sb_string_free`.
///
/// # Safety
/// `corpus` must be a live handle; `method_id` a valid string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sb_semantic_facts(
    corpus: *const SbCorpus,
    method_id: *const c_char,
    out: *mut *mut c_char,
) -> SbStatus {
    let Some(corpus) = corpus.as_ref() else {
        return fail(SbStatus::NullArgument, "corpus is null");
    };
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    let method_id = match cstr_arg(method_id, "method_id") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let Some(method) = corpus.records.iter().find(|r| r.id == method_id) else {
        return fail(SbStatus::NotFound, format!("unknown method id {method_id:?}"));
    };
    match SemanticFacts::extract(method) {
        Ok(facts) => string_out(facts.render(), out),
        Err(e) => fail(SbStatus::Parse, e.to_string()),
    }
}

unsafe fn slice_arg<'a>(
    ptr: *const f64,
    len: usize,
    name: &str,
) -> Result<&'a [f64], SbStatus> {
    if ptr.is_null() {
        return Err(fail(SbStatus::NullArgument, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// One-sided Welch t-test (alternative: mean of `a` is higher).
///
/// # Safety
/// `a` and `b` must point to `a_len`/`b_len` readable doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sb_t_test_one_sided(
    a: *const f64,
    a_len: usize,
    b: *const f64,
    b_len: usize,
    out: *mut SbTestResult,
) -> SbStatus {
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    let a = match slice_arg(a, a_len, "a") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let b = match slice_arg(b, b_len, "b") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match t_test_one_sided(a, b) {
        Ok(result) => {
            *out = SbTestResult {
                statistic: result.statistic,
                p_value: result.p_value,
            };
            SbStatus::Ok
        }
        Err(e) => fail(SbStatus::Compute, e.to_string()),
    }
}

/// One-sided two-sample KS test (alternative: `a` stochastically greater).
///
/// # Safety
/// `a` and `b` must point to `a_len`/`b_len` readable doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sb_ks_test_one_sided(
    a: *const f64,
    a_len: usize,
    b: *const f64,
    b_len: usize,
    out: *mut SbTestResult,
) -> SbStatus {
    if out.is_null() {
        return fail(SbStatus::NullArgument, "out is null");
    }
    let a = match slice_arg(a, a_len, "a") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let b = match slice_arg(b, b_len, "b") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match ks_test_one_sided(a, b) {
        Ok(result) => {
            *out = SbTestResult {
                statistic: result.statistic,
                p_value: result.p_value,
            };
            SbStatus::Ok
        }
        Err(e) => fail(SbStatus::Compute, e.to_string()),
    }
}
