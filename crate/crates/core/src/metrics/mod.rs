//! Similarity metrics between candidate and ground-truth summaries:
//! sentence BLEU with Laplace smoothing (reported as `bleu`), BLEU with
//! geometric-sequence smoothing (`bleu_dc`), exact-match METEOR, ROUGE-L
//! precision/recall, embedding cosine similarity, and adapter-mediated
//! BERTScore / BLEU-RT.

pub mod embed;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{GenerationRecord, RunStatus};

pub use embed::{
    cosine, Embedder, EmbeddingVector, ExternalScorer, HashEmbedder, HttpEmbedder,
};

const MAX_ORDER: usize = 4;
/// METEOR alignment parameters: F-mean weight, penalty weight, penalty power.
const METEOR_ALPHA: f64 = 0.9;
const METEOR_GAMMA: f64 = 0.5;
const METEOR_BETA: f64 = 3.0;
/// Search budget for the chunk-minimizing alignment; exploration order is
/// deterministic so a budget cut cannot introduce nondeterminism.
const CHUNK_SEARCH_BUDGET: usize = 500_000;

/// Word tokens shared by all n-gram metrics: lowercased, punctuation split
/// off as separate tokens, whitespace-delimited.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryTokens {
    pub tokens: Vec<String>,
}

pub fn normalize_summary(text: &str) -> SummaryTokens {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    SummaryTokens { tokens }
}

impl SummaryTokens {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Clipped n-gram matches and candidate n-gram total for one order.
fn clipped_matches(cand: &[String], reference: &[String], n: usize) -> (usize, usize) {
    if cand.len() < n {
        return (0, 0);
    }
    let total = cand.len() - n + 1;
    let mut ref_counts: std::collections::BTreeMap<&[String], usize> = Default::default();
    if reference.len() >= n {
        for gram in reference.windows(n) {
            *ref_counts.entry(gram).or_insert(0) += 1;
        }
    }
    let mut cand_counts: std::collections::BTreeMap<&[String], usize> = Default::default();
    for gram in cand.windows(n) {
        *cand_counts.entry(gram).or_insert(0) += 1;
    }
    let matches = cand_counts
        .iter()
        .map(|(gram, &count)| count.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    (matches, total)
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    (1.0f64).min((1.0 - ref_len as f64 / cand_len as f64).exp())
}

/// Sentence BLEU with modified Laplace smoothing: p1 unsmoothed, higher
/// orders (matches+1)/(total+1), geometric mean over orders 1..4, times the
/// brevity penalty. An empty candidate scores 0.
pub fn bleu_cn(candidate: &SummaryTokens, reference: &SummaryTokens) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let mut product = 1.0f64;
    for n in 1..=MAX_ORDER {
        let (matches, total) = clipped_matches(&candidate.tokens, &reference.tokens, n);
        let p = if n == 1 {
            matches as f64 / total as f64
        } else {
            (matches as f64 + 1.0) / (total as f64 + 1.0)
        };
        product *= p;
    }
    let gm = product.powf(1.0 / MAX_ORDER as f64);
    Ok(gm * brevity_penalty(candidate.len(), reference.len()))
}

/// Sentence BLEU with geometric-sequence smoothing: the z-th zero-match
/// order is replaced by 1/(2^z * total), geometric mean over orders 1..4,
/// times the brevity penalty.
pub fn bleu_dc(candidate: &SummaryTokens, reference: &SummaryTokens) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let mut product = 1.0f64;
    let mut zeros_seen = 0u32;
    for n in 1..=MAX_ORDER {
        let (matches, total) = clipped_matches(&candidate.tokens, &reference.tokens, n);
        let p = if matches == 0 {
            zeros_seen += 1;
            1.0 / (2f64.powi(zeros_seen as i32) * total.max(1) as f64)
        } else {
            matches as f64 / total as f64
        };
        product *= p;
    }
    let gm = product.powf(1.0 / MAX_ORDER as f64);
    Ok(gm * brevity_penalty(candidate.len(), reference.len()))
}

/// ROUGE-L precision and recall: LCS length over the token sequences,
/// divided by candidate and reference lengths. Empty side yields (0, 0).
pub fn rouge_l(candidate: &SummaryTokens, reference: &SummaryTokens) -> (f64, f64) {
    if candidate.is_empty() || reference.is_empty() {
        return (0.0, 0.0);
    }
    let l = lcs_length(&candidate.tokens, &reference.tokens) as f64;
    (l / candidate.len() as f64, l / reference.len() as f64)
}

pub(crate) fn lcs_length(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for item_a in a {
        for (j, item_b) in b.iter().enumerate() {
            row[j + 1] = if item_a == item_b {
                prev[j] + 1
            } else {
                row[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// Exact-match METEOR: unigram alignment maximizing matches then minimizing
/// chunks; F-mean with alpha = 0.9 and fragmentation penalty
/// gamma * (chunks/matches)^beta. No matches yields 0.
pub fn meteor(candidate: &SummaryTokens, reference: &SummaryTokens) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let m = max_matches(&candidate.tokens, &reference.tokens);
    if m == 0 {
        return 0.0;
    }
    let chunks = min_chunks(&candidate.tokens, &reference.tokens) as f64;
    let m = m as f64;
    let precision = m / candidate.len() as f64;
    let recall = m / reference.len() as f64;
    let f_mean =
        precision * recall / (METEOR_ALPHA * precision + (1.0 - METEOR_ALPHA) * recall);
    let penalty = METEOR_GAMMA * (chunks / m).powf(METEOR_BETA);
    f_mean * (1.0 - penalty)
}

/// Maximum alignment size for exact matching: per token type, the smaller
/// occurrence count of the two sides.
fn max_matches(cand: &[String], reference: &[String]) -> usize {
    let mut counts: std::collections::BTreeMap<&str, (usize, usize)> = Default::default();
    for t in cand {
        counts.entry(t).or_default().0 += 1;
    }
    for t in reference {
        counts.entry(t).or_default().1 += 1;
    }
    counts.values().map(|(c, r)| c.min(r)).sum()
}

/// Minimum chunk count over all maximum alignments, by deterministic
/// branch-and-bound over candidate positions (reference choices explored in
/// ascending order; greedy alignment seeds the bound).
fn min_chunks(cand: &[String], reference: &[String]) -> usize {
    let mut search = ChunkSearch {
        cand,
        reference,
        ref_used: vec![false; reference.len()],
        // Occurrences of each candidate token still required / still ahead.
        need: type_needs(cand, reference),
        ahead: type_counts(cand),
        best: greedy_chunks(cand, reference),
        budget: CHUNK_SEARCH_BUDGET,
    };
    search.descend(0, None, 0);
    search.best
}

fn type_counts(tokens: &[String]) -> std::collections::BTreeMap<String, usize> {
    let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
    for t in tokens {
        *counts.entry(t.clone()).or_insert(0) += 1;
    }
    counts
}

fn type_needs(
    cand: &[String],
    reference: &[String],
) -> std::collections::BTreeMap<String, usize> {
    let ref_counts = type_counts(reference);
    let mut needs = type_counts(cand);
    for (token, need) in needs.iter_mut() {
        *need = (*need).min(ref_counts.get(token).copied().unwrap_or(0));
    }
    needs
}

/// First-available in-order alignment; reaches maximum matches for exact
/// matching and provides the initial upper bound on chunks.
fn greedy_chunks(cand: &[String], reference: &[String]) -> usize {
    let mut used = vec![false; reference.len()];
    let mut chunks = 0usize;
    let mut prev: Option<usize> = None;
    for token in cand {
        let matched = (0..reference.len()).find(|&j| !used[j] && &reference[j] == token);
        match matched {
            Some(j) => {
                used[j] = true;
                let continues = j > 0 && prev == Some(j - 1);
                if !continues {
                    chunks += 1;
                }
                prev = Some(j);
            }
            None => prev = None,
        }
    }
    chunks
}

struct ChunkSearch<'a> {
    cand: &'a [String],
    reference: &'a [String],
    ref_used: Vec<bool>,
    need: std::collections::BTreeMap<String, usize>,
    ahead: std::collections::BTreeMap<String, usize>,
    best: usize,
    budget: usize,
}

impl ChunkSearch<'_> {
    fn descend(&mut self, i: usize, prev_ref: Option<usize>, chunks: usize) {
        if chunks >= self.best {
            return;
        }
        if self.budget == 0 {
            return;
        }
        self.budget -= 1;
        if i == self.cand.len() {
            self.best = chunks; // all needs met, chunks < best
            return;
        }
        let token = &self.cand[i];
        let need = self.need.get(token).copied().unwrap_or(0);
        let ahead = self.ahead[token];
        self.ahead.insert(token.clone(), ahead - 1);

        if need > 0 {
            // Try continuing the current chunk first: it is the only move
            // that does not raise the chunk count.
            let continuation = prev_ref.map(|p| p + 1);
            let candidates: Vec<usize> = (0..self.reference.len())
                .filter(|&j| !self.ref_used[j] && &self.reference[j] == token)
                .collect();
            let ordered = candidates.iter().copied().filter(|&j| Some(j) == continuation).chain(
                candidates.iter().copied().filter(|&j| Some(j) != continuation),
            );
            for j in ordered {
                let next_chunks = if Some(j) == continuation { chunks } else { chunks + 1 };
                self.ref_used[j] = true;
                *self.need.get_mut(token).unwrap() -= 1;
                self.descend(i + 1, Some(j), next_chunks);
                *self.need.get_mut(token).unwrap() += 1;
                self.ref_used[j] = false;
            }
        }
        // Leaving position i unmatched is legal when later occurrences can
        // still satisfy the remaining need.
        if ahead > need {
            self.descend(i + 1, None, chunks);
        }

        self.ahead.insert(token.clone(), ahead);
    }
}

/// Eight-score vector for one (candidate, reference) pair. Field names and
/// order follow the report table headers; adapter-backed fields are absent
/// when their service is not configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bert_score: Option<f64>,
    pub bleu_dc: f64,
    pub bleu: f64,
    #[serde(rename = "bleu-rt", skip_serializing_if = "Option::is_none")]
    pub bleu_rt: Option<f64>,
    pub meteor: f64,
    pub rouge_prec: f64,
    pub rouge_rec: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sent_sim: Option<f64>,
}

pub const METRIC_NAMES: [&str; 8] = [
    "bert_score",
    "bleu_dc",
    "bleu",
    "bleu-rt",
    "meteor",
    "rouge_prec",
    "rouge_rec",
    "sent_sim",
];

impl MetricVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "bert_score" => self.bert_score,
            "bleu_dc" => Some(self.bleu_dc),
            "bleu" => Some(self.bleu),
            "bleu-rt" => self.bleu_rt,
            "meteor" => Some(self.meteor),
            "rouge_prec" => Some(self.rouge_prec),
            "rouge_rec" => Some(self.rouge_rec),
            "sent_sim" => self.sent_sim,
            _ => None,
        }
    }
}

/// External-adapter scores for one pair.
#[derive(Debug, Clone, Default)]
pub struct ExternalScores {
    pub bert_score: Option<f64>,
    pub bleu_rt: Option<f64>,
}

/// Counters for conditions that do not stop a scoring run.
#[derive(Debug, Default, Clone)]
pub struct ScoreWarnings {
    pub skipped_failed: usize,
    pub empty_sides: usize,
    pub embedder_failures: usize,
    pub scorer_failures: usize,
    pub clamped_values: usize,
}

/// Pluggable providers for the neural metrics; both optional.
#[derive(Default)]
pub struct ScoreProviders<'a> {
    pub embedder: Option<&'a dyn Embedder>,
    pub scorer: Option<&'a ExternalScorer>,
}

/// Cosine similarity of the two texts under the configured embedder.
pub fn sentence_similarity(
    candidate: &str,
    reference: &str,
    embedder: &dyn Embedder,
) -> Result<f64> {
    let a = embedder.embed(candidate)?;
    let b = embedder.embed(reference)?;
    Ok(cosine(&a.values, &b.values))
}

/// Forward the pair to the external scoring service. Failures leave fields
/// absent; out-of-range values are clamped to [0,1] with a warning.
pub fn external_score(
    candidate: &str,
    reference: &str,
    scorer: &ExternalScorer,
    warnings: &mut ScoreWarnings,
) -> ExternalScores {
    match scorer.score(candidate, reference) {
        Ok(raw) => {
            let mut clamp = |v: Option<f64>| {
                v.map(|x| {
                    if !(0.0..=1.0).contains(&x) {
                        warnings.clamped_values += 1;
                        x.clamp(0.0, 1.0)
                    } else {
                        x
                    }
                })
            };
            ExternalScores {
                bert_score: clamp(raw.bert_score),
                bleu_rt: clamp(raw.bleu_rt),
            }
        }
        Err(_) => {
            warnings.scorer_failures += 1;
            ExternalScores::default()
        }
    }
}

/// Score one ok generation against the ground truth, populating every
/// computable field. Failed records are an error the caller counts.
pub fn score_record(
    gen: &GenerationRecord,
    truth: &str,
    providers: &ScoreProviders<'_>,
    warnings: &mut ScoreWarnings,
) -> Result<MetricVector> {
    if gen.status != RunStatus::Ok {
        warnings.skipped_failed += 1;
        return Err(Error::Data(format!(
            "record {} is failed and cannot be scored",
            gen.method_id
        )));
    }
    let candidate = normalize_summary(&gen.candidate_summary);
    let reference = normalize_summary(truth);
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    if candidate.is_empty() {
        warnings.empty_sides += 1;
    }

    let (rouge_prec, rouge_rec) = rouge_l(&candidate, &reference);
    let external = providers
        .scorer
        .map(|s| external_score(&gen.candidate_summary, truth, s, warnings))
        .unwrap_or_default();
    let sent_sim = match providers.embedder {
        Some(embedder) => match sentence_similarity(&gen.candidate_summary, truth, embedder) {
            Ok(v) => Some(v.clamp(-1.0, 1.0)),
            Err(_) => {
                warnings.embedder_failures += 1;
                None
            }
        },
        None => None,
    };

    Ok(MetricVector {
        bert_score: external.bert_score,
        bleu_dc: bleu_dc(&candidate, &reference)?,
        bleu: bleu_cn(&candidate, &reference)?,
        bleu_rt: external.bleu_rt,
        meteor: meteor(&candidate, &reference),
        rouge_prec,
        rouge_rec,
        sent_sim,
    })
}

/// One line of the scores file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub method_id: String,
    pub strategy: crate::prompt::PromptStrategy,
    pub masked: bool,
    #[serde(flatten)]
    pub metrics: MetricVector,
}

impl ScoreRow {
    pub fn prompt_key(&self) -> String {
        self.strategy.prompt_key(self.masked)
    }
}

#[cfg(test)]
mod tests;
