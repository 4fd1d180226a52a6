//! Corpus mining: scan a Java tree, extract methods with leading Javadoc,
//! derive ground-truth summaries, and build the train/eval partition and
//! evaluation subset.

mod extract;
mod javadoc;
mod scan;

pub use extract::{extract_methods, method_id};
pub use javadoc::extract_ground_truth;
pub use scan::scan_project;

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One scanned file. `parse_ok` is false for unreadable or non-UTF-8 files;
/// such files flow through the pipeline without aborting it.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: PathBuf,
    pub content: String,
    pub parse_ok: bool,
}

/// One extracted Java method with its ground-truth summary.
///
/// `id` is a stable content hash of `(file_path, signature, body_text)`.
/// `loc` counts non-blank lines from the declaration line through the
/// closing brace, inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub id: String,
    pub file_path: String,
    pub class_name: String,
    pub simple_name: String,
    pub signature: String,
    pub param_names: Vec<String>,
    pub body_text: String,
    pub start_line: usize,
    pub end_line: usize,
    pub loc: usize,
    pub javadoc_raw: String,
    pub ground_truth_summary: String,
}

/// Seeded 80:20-style split of a corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusPartition {
    pub train: Vec<MethodRecord>,
    pub eval: Vec<MethodRecord>,
    pub seed: u64,
    pub ratio: f64,
}

/// Counters behind the subject-details table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub loc_total: usize,
    pub class_count: usize,
    pub method_count: usize,
    pub with_javadoc_count: usize,
}

/// In-place Fisher-Yates with a portable ChaCha8 stream, so the same seed
/// produces the same permutation on every machine and toolchain.
fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// Split records into train/eval. Records are ordered by id first, then
/// permuted by the seed, so the partition is independent of input order;
/// the first `ceil(ratio * n)` records become the train set.
pub fn split_corpus(records: Vec<MethodRecord>, ratio: f64, seed: u64) -> Result<CorpusPartition> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "split ratio must be in (0,1), got {ratio}"
        )));
    }
    if records.is_empty() {
        return Err(Error::Config("cannot split an empty corpus".into()));
    }
    let mut records = records;
    records.sort_by(|a, b| a.id.cmp(&b.id));
    seeded_shuffle(&mut records, seed);
    let train_len = (ratio * records.len() as f64).ceil() as usize;
    let eval = records.split_off(train_len.min(records.len()));
    Ok(CorpusPartition {
        train: records,
        eval,
        seed,
        ratio,
    })
}

/// Filter the eval partition down to non-trivial methods (`loc >= min_loc`),
/// sample up to `sample_size` of them without replacement, and return the
/// sample sorted by LOC descending (ties by id ascending).
pub fn select_eval_set(
    records: Vec<MethodRecord>,
    min_loc: usize,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<MethodRecord>> {
    let mut survivors: Vec<MethodRecord> =
        records.into_iter().filter(|r| r.loc >= min_loc).collect();
    if survivors.is_empty() {
        return Err(Error::EmptySelection { min_loc });
    }
    survivors.sort_by(|a, b| a.id.cmp(&b.id));
    seeded_shuffle(&mut survivors, seed);
    survivors.truncate(sample_size.min(survivors.len()));
    survivors.sort_by(|a, b| b.loc.cmp(&a.loc).then(a.id.cmp(&b.id)));
    Ok(survivors)
}

/// Totals over a record set; `class_count` is the number of distinct
/// class names.
pub fn corpus_stats(records: &[MethodRecord]) -> CorpusStats {
    let classes: BTreeSet<&str> = records.iter().map(|r| r.class_name.as_str()).collect();
    CorpusStats {
        loc_total: records.iter().map(|r| r.loc).sum(),
        class_count: classes.len(),
        method_count: records.len(),
        with_javadoc_count: records.iter().filter(|r| !r.javadoc_raw.is_empty()).count(),
    }
}
