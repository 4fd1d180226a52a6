//! Embedding providers for sentence similarity and the external scoring
//! adapter for BERTScore / BLEU-RT.
//!
//! The artifact does not ship neural models; the web providers forward
//! pairs to whatever service hosts them, and a deterministic hash-based
//! stub stands in for offline runs and tests.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http::{json_path, post_json};
use crate::metrics::ExternalScores;

/// Fixed-dimension embedding; entries are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
    fn model_name(&self) -> &str;
}

/// Cosine similarity; zero-norm vectors yield 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Deterministic offline stub: the text is hashed into a fixed-dimension
/// vector, so identical texts always embed identically.
pub struct HashEmbedder {
    pub dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: 16 }
    }
}

use crate::hash::{fnv1a64, splitmix64};

impl Embedder for HashEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let mut state = fnv1a64(text.as_bytes());
        let values = (0..self.dim)
            .map(|_| {
                let bits = splitmix64(&mut state);
                // 53 uniform bits mapped to [-1, 1).
                (bits >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect();
        Ok(EmbeddingVector { values })
    }

    fn model_name(&self) -> &str {
        "hash-stub"
    }
}

/// Web embedding endpoint: POST {"model", "input"} and read the vector at
/// `response_path`.
pub struct HttpEmbedder {
    pub url: String,
    pub model: String,
    pub auth_token: Option<String>,
    pub response_path: String,
    pub timeout: Duration,
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let body = serde_json::json!({ "model": self.model, "input": text });
        let response = post_json(&self.url, self.auth_token.as_deref(), &body, self.timeout)
            .map_err(|e| Error::Data(format!("embedder: {e}")))?;
        let values = json_path(&response, &self.response_path)
            .and_then(|v| v.as_array())
            .ok_or_else(|| {
                Error::Data(format!("embedder response missing {}", self.response_path))
            })?
            .iter()
            .map(|v| v.as_f64().unwrap_or(f64::NAN))
            .collect::<Vec<f64>>();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("embedder returned non-finite entries".into()));
        }
        Ok(EmbeddingVector { values })
    }

    fn model_name(&self) -> &str {
        &self.model
    }
}

/// External scoring service: POST {"candidate", "reference"}, read
/// {"bert_score", "bleu_rt"} from the response. Absent fields stay absent.
pub struct ExternalScorer {
    pub url: String,
    pub auth_token: Option<String>,
    pub timeout: Duration,
}

impl ExternalScorer {
    pub fn score(&self, candidate: &str, reference: &str) -> Result<ExternalScores> {
        let body = serde_json::json!({ "candidate": candidate, "reference": reference });
        let response = post_json(&self.url, self.auth_token.as_deref(), &body, self.timeout)
            .map_err(|e| Error::Data(format!("scorer: {e}")))?;
        let field = |name: &str| response.get(name).and_then(|v| v.as_f64());
        let scores = ExternalScores {
            bert_score: field("bert_score"),
            bleu_rt: field("bleu_rt"),
        };
        if scores.bert_score.is_none() && scores.bleu_rt.is_none() {
            return Err(Error::Data("scorer response carried no scores".into()));
        }
        Ok(scores)
    }
}
