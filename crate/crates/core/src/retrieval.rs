//! Okapi BM25 index over the training corpus, used to pick the three
//! most similar commented methods as few-shot exemplars.
//!
//! The idf uses the +1-inside-log variant, ln((N - df + 0.5)/(df + 0.5) + 1),
//! which never goes negative on tiny corpora. Defaults are k1 = 1.2,
//! b = 0.75. Documents are the sub-token streams of method bodies.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::MethodRecord;
use crate::error::{Error, Result};
use crate::facts::{tokenize_code, TokenStream};

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;
/// Exemplar count used by the ASAP prompt.
pub const DEFAULT_EXEMPLARS: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bm25Index {
    doc_ids: Vec<String>,
    doc_lengths: Vec<usize>,
    avg_doc_length: f64,
    doc_frequency: BTreeMap<String, usize>,
    term_frequency: Vec<BTreeMap<String, usize>>,
    k1: f64,
    b: f64,
    /// Hash of the indexed corpus, for sidecar cache validation.
    corpus_hash: String,
    #[serde(skip)]
    id_to_idx: BTreeMap<String, usize>,
}

/// One retrieved exemplar. Ranks are 1-based and scores non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExemplar {
    pub method_id: String,
    pub score: f64,
    pub rank: usize,
}

fn corpus_hash(train: &[MethodRecord]) -> String {
    let mut hasher = Sha256::new();
    for record in train {
        hasher.update(record.id.as_bytes());
        hasher.update([0]);
    }
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Build the index over `tokenize_code(body_text)` of each training record.
pub fn build_index(train: &[MethodRecord]) -> Result<Bm25Index> {
    build_index_with(train, DEFAULT_K1, DEFAULT_B)
}

pub fn build_index_with(train: &[MethodRecord], k1: f64, b: f64) -> Result<Bm25Index> {
    if train.is_empty() {
        return Err(Error::Config("cannot build BM25 index over an empty train corpus".into()));
    }
    let mut doc_ids = Vec::with_capacity(train.len());
    let mut doc_lengths = Vec::with_capacity(train.len());
    let mut doc_frequency: BTreeMap<String, usize> = BTreeMap::new();
    let mut term_frequency = Vec::with_capacity(train.len());

    for record in train {
        let tokens = tokenize_code(&record.body_text).tokens;
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        for token in &tokens {
            *tf.entry(token.clone()).or_insert(0) += 1;
        }
        for term in tf.keys() {
            *doc_frequency.entry(term.clone()).or_insert(0) += 1;
        }
        doc_ids.push(record.id.clone());
        doc_lengths.push(tokens.len());
        term_frequency.push(tf);
    }

    let avg_doc_length = doc_lengths.iter().sum::<usize>() as f64 / doc_lengths.len() as f64;
    let id_to_idx = doc_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();

    Ok(Bm25Index {
        doc_ids,
        doc_lengths,
        avg_doc_length,
        doc_frequency,
        term_frequency,
        k1,
        b,
        corpus_hash: corpus_hash(train),
        id_to_idx,
    })
}

impl Bm25Index {
    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<usize> {
        self.id_to_idx.get(doc_id).map(|&i| self.doc_lengths[i])
    }

    pub fn doc_frequency(&self, term: &str) -> usize {
        self.doc_frequency.get(term).copied().unwrap_or(0)
    }

    pub fn corpus_hash(&self) -> &str {
        &self.corpus_hash
    }

    /// The token stream BM25 queries are built from: signature plus body.
    pub fn query_of(method: &MethodRecord) -> TokenStream {
        tokenize_code(&format!("{} {}", method.signature, method.body_text))
    }

    /// BM25 score of `doc_id` for `query`; 0.0 when no query term occurs.
    pub fn score(&self, query: &TokenStream, doc_id: &str) -> Result<f64> {
        let &idx = self
            .id_to_idx
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDoc(doc_id.to_string()))?;
        let tf_map = &self.term_frequency[idx];
        let len = self.doc_lengths[idx] as f64;
        let n = self.doc_ids.len() as f64;

        let unique: BTreeSet<&str> = query.tokens.iter().map(|t| t.as_str()).collect();
        let mut total = 0.0;
        for term in unique {
            let tf = tf_map.get(term).copied().unwrap_or(0) as f64;
            if tf == 0.0 {
                continue;
            }
            let df = self.doc_frequency.get(term).copied().unwrap_or(0) as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            let norm = tf + self.k1 * (1.0 - self.b + self.b * len / self.avg_doc_length);
            total += idf * tf * (self.k1 + 1.0) / norm;
        }
        Ok(total)
    }

    /// The `k` highest-scoring documents not in `exclude`, ties broken by
    /// ascending doc id. Callers retrieving exemplars for a method must put
    /// that method's own id in `exclude`.
    pub fn top_k(&self, query: &TokenStream, k: usize, exclude: &BTreeSet<String>) -> Vec<ScoredExemplar> {
        let mut scored: Vec<(f64, &str)> = self
            .doc_ids
            .iter()
            .filter(|id| !exclude.contains(id.as_str()))
            .map(|id| {
                let s = self.score(query, id).expect("own ids are known");
                (s, id.as_str())
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.1.cmp(b.1))
        });
        scored
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (score, id))| ScoredExemplar {
                method_id: id.to_string(),
                score,
                rank: i + 1,
            })
            .collect()
    }

    /// Persist to a JSON sidecar keyed by the corpus hash.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Load a sidecar; fails if it was built from a different corpus.
    pub fn load(path: &std::path::Path, expected: &[MethodRecord]) -> Result<Bm25Index> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut index: Bm25Index = serde_json::from_str(&json)?;
        if index.corpus_hash != corpus_hash(expected) {
            return Err(Error::Data(format!(
                "index sidecar {} was built from a different corpus",
                path.display()
            )));
        }
        index.id_to_idx = index
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(index)
    }
}
