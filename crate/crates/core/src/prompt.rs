//! The five prompt strategies, method-name masking, and ASAP few-shot
//! prompt assembly.
//!
//! Instruction wording is frozen; the rendered layouts are locked by golden
//! tests. Masking rewrites every whole-identifier occurrence of the method
//! name (declaration and recursive self-calls) with `MASKED`, leaving
//! longer identifiers that merely contain the name untouched.

use serde::{Deserialize, Serialize};

use crate::corpus::MethodRecord;
use crate::error::{Error, Result};
use crate::facts::SemanticFacts;
use crate::java::{is_ident_char, is_ident_start};

pub const SIMPLE_INSTRUCTION: &str =
    "Please generate a Javadoc summary comment for the Java method below";
pub const WORD_RESTRICT_INSTRUCTION: &str =
    "Please generate a Javadoc summary comment for the Java method below. Please do not use more than 20 words.";
pub const SUMMARIZE_INSTRUCTION: &str =
    "Given the following JAVADOC indicated by JAVADOC: create a shorter summarized version of the JAVADOC. Keep the summary under 20 words.";
pub const IGNORE_EXCEPTION_INSTRUCTION: &str =
    "Please generate a Javadoc summary comment for the Java method below. While generating summary, please ignore:\n1. exception handling (e.g. catch block)\n2. resource cleanup (e.g. finally block)\n3. logging statements (e.g. log)";
pub const ASAP_INSTRUCTION: &str = "Write down the original comment written by the developer.";

pub const MASK_TOKEN: &str = "MASKED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStrategy {
    Simple,
    WordRestrict,
    SummarizeExplanation,
    IgnoreException,
    Asap,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 5] = [
        PromptStrategy::Simple,
        PromptStrategy::WordRestrict,
        PromptStrategy::SummarizeExplanation,
        PromptStrategy::IgnoreException,
        PromptStrategy::Asap,
    ];

    /// Stable serialized name, also used as the CLI spelling.
    pub fn key(&self) -> &'static str {
        match self {
            PromptStrategy::Simple => "simple",
            PromptStrategy::WordRestrict => "wordrestrict",
            PromptStrategy::SummarizeExplanation => "summarizeexplanation",
            PromptStrategy::IgnoreException => "ignoreexception",
            PromptStrategy::Asap => "asap",
        }
    }

    pub fn parse(s: &str) -> Option<PromptStrategy> {
        Self::ALL.iter().copied().find(|p| p.key() == s)
    }

    /// Group key for aggregation tables: strategy name, `_masked` suffixed
    /// for the ablation variant.
    pub fn prompt_key(&self, masked: bool) -> String {
        if masked {
            format!("{}_masked", self.key())
        } else {
            self.key().to_string()
        }
    }
}

impl std::fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// A strategy-tagged prompt ready for dispatch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub strategy: PromptStrategy,
    pub masked: bool,
    pub stage: u8,
    pub text: String,
    pub method_id: String,
    pub exemplar_ids: Vec<String>,
}

/// Replace whole-identifier occurrences of `name` in `text`.
fn replace_identifier(text: &str, name: &str, replacement: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if is_ident_start(chars[i]) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let ident: String = chars[start..i].iter().collect();
            if ident == name {
                out.push_str(replacement);
            } else {
                out.push_str(&ident);
            }
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// Copy of the record with the method name replaced by `MASKED` in the
/// name, signature, and body (including recursive self-calls). Idempotent.
pub fn mask_method(method: &MethodRecord) -> MethodRecord {
    let mut masked = method.clone();
    masked.signature = replace_identifier(&method.signature, &method.simple_name, MASK_TOKEN);
    masked.body_text = replace_identifier(&method.body_text, &method.simple_name, MASK_TOKEN);
    masked.simple_name = MASK_TOKEN.to_string();
    masked
}

fn code_block(method: &MethodRecord) -> String {
    format!("{} {}", method.signature, method.body_text)
}

fn render_single(
    strategy: PromptStrategy,
    instruction: &str,
    method: &MethodRecord,
    masked: bool,
) -> RenderedPrompt {
    let shown;
    let method_shown = if masked {
        shown = mask_method(method);
        &shown
    } else {
        method
    };
    RenderedPrompt {
        strategy,
        masked,
        stage: 1,
        text: format!("{}\n\n{}", instruction, code_block(method_shown)),
        method_id: method.id.clone(),
        exemplar_ids: Vec::new(),
    }
}

pub fn render_simple(method: &MethodRecord, masked: bool) -> RenderedPrompt {
    render_single(PromptStrategy::Simple, SIMPLE_INSTRUCTION, method, masked)
}

pub fn render_word_restrict(method: &MethodRecord, masked: bool) -> RenderedPrompt {
    render_single(
        PromptStrategy::WordRestrict,
        WORD_RESTRICT_INSTRUCTION,
        method,
        masked,
    )
}

pub fn render_ignore_exception(method: &MethodRecord, masked: bool) -> RenderedPrompt {
    render_single(
        PromptStrategy::IgnoreException,
        IGNORE_EXCEPTION_INSTRUCTION,
        method,
        masked,
    )
}

/// Stage 1 of SummarizeExplanation is the Simple prompt; its verbose
/// output becomes the stage-2 context.
pub fn render_summarize_stage1(method: &MethodRecord, masked: bool) -> RenderedPrompt {
    let mut prompt = render_single(
        PromptStrategy::SummarizeExplanation,
        SIMPLE_INSTRUCTION,
        method,
        masked,
    );
    prompt.stage = 1;
    prompt
}

/// Stage 2 wraps the stage-1 explanation behind a `JAVADOC:` marker.
pub fn render_summarize_stage2(
    method_id: &str,
    masked: bool,
    stage1_output: &str,
) -> Result<RenderedPrompt> {
    if stage1_output.trim().is_empty() {
        return Err(Error::EmptyStageOne);
    }
    Ok(RenderedPrompt {
        strategy: PromptStrategy::SummarizeExplanation,
        masked,
        stage: 2,
        text: format!("{}\n\nJAVADOC: {}", SUMMARIZE_INSTRUCTION, stage1_output),
        method_id: method_id.to_string(),
        exemplar_ids: Vec::new(),
    })
}

/// Assemble the ASAP prompt: for each exemplar in rank order its facts
/// block, code, and `Comment: <developer summary>`; then the target facts
/// and code (masked variant masks the target only), the instruction, and a
/// trailing unanswered `Comment:`.
pub fn render_asap(
    method: &MethodRecord,
    exemplars: &[(MethodRecord, SemanticFacts)],
    target_facts: &SemanticFacts,
    masked: bool,
) -> RenderedPrompt {
    let shown;
    let target = if masked {
        shown = mask_method(method);
        &shown
    } else {
        method
    };

    let mut text = String::new();
    for (exemplar, facts) in exemplars {
        let block = facts.render();
        if !block.is_empty() {
            text.push_str(&block);
        }
        text.push_str(&code_block(exemplar));
        text.push_str(&format!("\nComment: {}\n\n", exemplar.ground_truth_summary));
    }
    let target_block = target_facts.render();
    if !target_block.is_empty() {
        text.push_str(&target_block);
    }
    text.push_str(&code_block(target));
    text.push('\n');
    text.push_str(ASAP_INSTRUCTION);
    text.push_str("\nComment:");

    RenderedPrompt {
        strategy: PromptStrategy::Asap,
        masked,
        stage: 1,
        text,
        method_id: method.id.clone(),
        exemplar_ids: exemplars.iter().map(|(m, _)| m.id.clone()).collect(),
    }
}

/// Stage-1 prompt for any strategy; used by the prompt dump and by the
/// gateway before dispatch.
pub fn render_stage1(
    strategy: PromptStrategy,
    method: &MethodRecord,
    masked: bool,
    asap_parts: Option<(&[(MethodRecord, SemanticFacts)], &SemanticFacts)>,
) -> RenderedPrompt {
    match strategy {
        PromptStrategy::Simple => render_simple(method, masked),
        PromptStrategy::WordRestrict => render_word_restrict(method, masked),
        PromptStrategy::IgnoreException => render_ignore_exception(method, masked),
        PromptStrategy::SummarizeExplanation => render_summarize_stage1(method, masked),
        PromptStrategy::Asap => {
            let (exemplars, facts) = asap_parts.expect("asap rendering requires retrieval parts");
            render_asap(method, exemplars, facts, masked)
        }
    }
}
