//! Prompt dispatch: a provider abstraction over chat/completion endpoints,
//! the two-stage SummarizeExplanation flow, output post-processing, and the
//! bounded-concurrency sweep runner.
//!
//! This is the only concurrent component: up to `concurrency` requests are
//! in flight at once, and records are emitted in deterministic
//! (method, strategy, masked) order regardless of completion order.

pub mod provider;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::MethodRecord;
use crate::error::{Error, Result};
use crate::facts::SemanticFacts;
use crate::prompt::{
    render_stage1, render_summarize_stage2, PromptStrategy, RenderedPrompt,
};
use crate::retrieval::Bm25Index;

pub use provider::{
    Completion, CompletionProvider, FieldMapping, HttpProvider, MockProvider, RecordingProvider,
    ReplayProvider,
};

/// One request to a completion endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt_text: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    #[serde(with = "millis")]
    pub timeout: Duration,
    pub retries: u32,
}

/// Request knobs shared by every prompt in a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RequestSettings {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    #[serde(with = "millis")]
    pub timeout: Duration,
    pub retries: u32,
}

impl Default for RequestSettings {
    fn default() -> Self {
        RequestSettings {
            model_name: "mock".into(),
            temperature: 0.0,
            max_tokens: 256,
            stop_sequences: Vec::new(),
            timeout: Duration::from_secs(60),
            retries: 2,
        }
    }
}

impl RequestSettings {
    fn request(&self, prompt_text: String) -> GenerationRequest {
        GenerationRequest {
            prompt_text,
            model_name: self.model_name.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            stop_sequences: self.stop_sequences.clone(),
            timeout: self.timeout,
            retries: self.retries,
        }
    }
}

mod millis {
    use super::Duration;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One generation with provenance; `candidate_summary` is non-empty iff
/// status is ok.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub method_id: String,
    pub strategy: PromptStrategy,
    pub masked: bool,
    pub model_name: String,
    pub raw_output: String,
    pub candidate_summary: String,
    pub stage1_output: String,
    pub latency_ms: u64,
    pub attempt_count: u32,
    pub status: RunStatus,
}

/// Run-level warning counters, shared across worker threads.
#[derive(Debug, Default)]
pub struct RunLog {
    pub facts_fallbacks: AtomicUsize,
    pub zero_exemplar_prompts: AtomicUsize,
    pub failed_records: AtomicUsize,
}

/// Retrieval context for the ASAP strategy.
pub struct AsapContext<'a> {
    pub index: &'a Bm25Index,
    pub train_by_id: &'a BTreeMap<String, MethodRecord>,
    pub exemplar_count: usize,
}

pub struct StrategyDeps<'a> {
    pub provider: &'a dyn CompletionProvider,
    pub settings: &'a RequestSettings,
    pub asap: Option<&'a AsapContext<'a>>,
    pub log: &'a RunLog,
}

/// Facts for a method; on parse failure the prompt falls back to code-only
/// and the run log records it.
fn facts_or_fallback(method: &MethodRecord, log: &RunLog) -> SemanticFacts {
    match SemanticFacts::extract(method) {
        Ok(facts) => facts,
        Err(_) => {
            log.facts_fallbacks.fetch_add(1, Ordering::Relaxed);
            SemanticFacts::default()
        }
    }
}

/// Render the stage-1 prompt for (method, strategy, masked), retrieving
/// exemplars for ASAP. Retrieval queries use the unmasked method; masking
/// is applied when the query method is placed into the prompt.
pub fn build_prompt(
    method: &MethodRecord,
    strategy: PromptStrategy,
    masked: bool,
    asap: Option<&AsapContext<'_>>,
    log: &RunLog,
) -> RenderedPrompt {
    if strategy != PromptStrategy::Asap {
        return render_stage1(strategy, method, masked, None);
    }
    let context = asap.expect("asap strategy requires a retrieval context");
    let query = Bm25Index::query_of(method);
    let exclude: std::collections::BTreeSet<String> = [method.id.clone()].into();
    let top = context.index.top_k(&query, context.exemplar_count, &exclude);
    if top.is_empty() {
        log.zero_exemplar_prompts.fetch_add(1, Ordering::Relaxed);
    }
    let exemplars: Vec<(MethodRecord, SemanticFacts)> = top
        .iter()
        .filter_map(|scored| context.train_by_id.get(&scored.method_id))
        .map(|record| (record.clone(), facts_or_fallback(record, log)))
        .collect();
    let target = if masked {
        crate::prompt::mask_method(method)
    } else {
        method.clone()
    };
    let target_facts = facts_or_fallback(&target, log);
    render_stage1(strategy, method, masked, Some((&exemplars, &target_facts)))
}

/// Strip code fences, comment delimiters, gutters, leading labels, and
/// `@`-tag lines; collapse whitespace. The full remaining text is kept, no
/// sentence truncation. Idempotent.
pub fn postprocess_summary(raw: &str) -> String {
    let mut kept = Vec::new();
    for line in raw.lines() {
        let mut line = line.trim();
        if line.starts_with("```") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("/**") {
            line = rest.trim();
        }
        if let Some(rest) = line.strip_suffix("*/") {
            line = rest.trim();
        }
        line = line.trim_start_matches('*').trim();
        if line.starts_with('@') {
            continue;
        }
        if !line.is_empty() {
            kept.push(line);
        }
    }
    let mut text = kept.join(" ");
    loop {
        let lowered = text.to_lowercase();
        let Some(label) = ["summary:", "javadoc:", "comment:"]
            .iter()
            .find(|l| lowered.starts_with(**l))
        else {
            break;
        };
        text = text[label.len()..].trim_start().to_string();
    }
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Run one (method, strategy, masked) cell: a single completion for most
/// strategies, two chained completions for SummarizeExplanation. Transport
/// failures produce a failed record; configuration errors (bad auth) abort.
pub fn run_strategy(
    method: &MethodRecord,
    strategy: PromptStrategy,
    masked: bool,
    deps: &StrategyDeps<'_>,
) -> Result<GenerationRecord> {
    let prompt = build_prompt(method, strategy, masked, deps.asap, deps.log);

    let mut record = GenerationRecord {
        method_id: method.id.clone(),
        strategy,
        masked,
        model_name: deps.settings.model_name.clone(),
        raw_output: String::new(),
        candidate_summary: String::new(),
        stage1_output: String::new(),
        latency_ms: 0,
        attempt_count: 0,
        status: RunStatus::Failed,
    };

    let stage1 = match deps.provider.complete(&deps.settings.request(prompt.text)) {
        Ok(completion) => completion,
        Err(Error::Config(msg)) => return Err(Error::Config(msg)),
        Err(Error::Generation { attempts, .. }) => {
            record.attempt_count = attempts;
            deps.log.failed_records.fetch_add(1, Ordering::Relaxed);
            return Ok(record);
        }
        Err(other) => {
            deps.log.failed_records.fetch_add(1, Ordering::Relaxed);
            let _ = other;
            return Ok(record);
        }
    };
    record.attempt_count = stage1.attempts;
    record.latency_ms = stage1.latency.as_millis() as u64;

    let final_raw = if strategy == PromptStrategy::SummarizeExplanation {
        record.stage1_output = stage1.text.clone();
        let stage2_prompt = match render_summarize_stage2(&method.id, masked, &stage1.text) {
            Ok(p) => p,
            Err(_) => {
                deps.log.failed_records.fetch_add(1, Ordering::Relaxed);
                return Ok(record);
            }
        };
        match deps.provider.complete(&deps.settings.request(stage2_prompt.text)) {
            Ok(completion) => {
                record.attempt_count += completion.attempts;
                record.latency_ms += completion.latency.as_millis() as u64;
                completion.text
            }
            Err(Error::Config(msg)) => return Err(Error::Config(msg)),
            Err(_) => {
                deps.log.failed_records.fetch_add(1, Ordering::Relaxed);
                return Ok(record);
            }
        }
    } else {
        stage1.text
    };

    record.raw_output = final_raw;
    record.candidate_summary = postprocess_summary(&record.raw_output);
    if record.candidate_summary.is_empty() {
        deps.log.failed_records.fetch_add(1, Ordering::Relaxed);
        record.status = RunStatus::Failed;
    } else {
        record.status = RunStatus::Ok;
    }
    Ok(record)
}

/// Cells of a sweep in deterministic order: methods outermost, then
/// strategies, then unmasked before masked.
pub fn sweep_cells(
    methods: &[MethodRecord],
    strategies: &[PromptStrategy],
    masked_modes: &[bool],
) -> Vec<(usize, PromptStrategy, bool)> {
    let mut cells = Vec::new();
    for (i, _) in methods.iter().enumerate() {
        for &strategy in strategies {
            for &masked in masked_modes {
                cells.push((i, strategy, masked));
            }
        }
    }
    cells
}

/// Which cells a sweep covers and how many requests may be in flight.
#[derive(Debug, Clone)]
pub struct SweepPlan<'a> {
    pub strategies: &'a [PromptStrategy],
    pub masked_modes: &'a [bool],
    pub concurrency: usize,
}

/// Execute a sweep with at most `plan.concurrency` in-flight requests.
/// Output order equals `sweep_cells` order regardless of completion order;
/// the first configuration error aborts the run.
pub fn run_sweep(
    methods: &[MethodRecord],
    plan: &SweepPlan<'_>,
    provider: &dyn CompletionProvider,
    settings: &RequestSettings,
    asap: Option<&AsapContext<'_>>,
    log: &RunLog,
) -> Result<Vec<GenerationRecord>> {
    let cells = sweep_cells(methods, plan.strategies, plan.masked_modes);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<GenerationRecord>>> = Mutex::new(vec![None; cells.len()]);
    let fatal: Mutex<Option<Error>> = Mutex::new(None);
    let workers = plan.concurrency.max(1).min(cells.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if fatal.lock().unwrap().is_some() {
                    return;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    return;
                }
                let (method_idx, strategy, masked) = cells[i];
                let deps = StrategyDeps {
                    provider,
                    settings,
                    asap,
                    log,
                };
                match run_strategy(&methods[method_idx], strategy, masked, &deps) {
                    Ok(record) => {
                        results.lock().unwrap()[i] = Some(record);
                    }
                    Err(e) => {
                        let mut slot = fatal.lock().unwrap();
                        if slot.is_none() {
                            *slot = Some(e);
                        }
                        return;
                    }
                }
            });
        }
    });

    if let Some(e) = fatal.into_inner().unwrap() {
        return Err(e);
    }
    Ok(results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every cell completed"))
        .collect())
}
