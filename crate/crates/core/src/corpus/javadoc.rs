//! Ground-truth extraction from leading Javadoc blocks.

use crate::error::{Error, Result};

/// Javadoc block tags that terminate the summary sentence.
const BLOCK_TAGS: [&str; 13] = [
    "@param",
    "@return",
    "@throws",
    "@see",
    "@exception",
    "@since",
    "@author",
    "@version",
    "@deprecated",
    "@serial",
    "@hidden",
    "@uses",
    "@provides",
];

/// Derive the ground-truth summary from a `/** ... */` block: strip the
/// delimiters and `*` gutters, cut at the first block tag or the first `.`
/// followed by whitespace/end (whichever comes first), replace inline
/// `{@code X}`/`{@link X}` tags by their content, and collapse whitespace.
///
/// The function is idempotent on its own output (delimiters are stripped
/// only when present), and rejects blocks whose summary is empty.
pub fn extract_ground_truth(javadoc_raw: &str) -> Result<String> {
    let inner = javadoc_raw
        .trim()
        .strip_prefix("/**")
        .map(|s| s.strip_suffix("*/").unwrap_or(s))
        .unwrap_or(javadoc_raw.trim());

    // Drop per-line `*` gutters, join into one text.
    let mut text = String::new();
    for line in inner.lines() {
        let stripped = line.trim_start().trim_start_matches('*').trim();
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(stripped);
    }

    // Cut at the first block tag.
    let mut cut = text.len();
    for (pos, word) in word_positions(&text) {
        if BLOCK_TAGS.contains(&word) {
            cut = pos;
            break;
        }
    }
    let mut text = text[..cut].to_string();

    text = replace_inline_tags(&text);

    // Cut at the first sentence terminator: '.' followed by whitespace or end.
    let chars: Vec<char> = text.chars().collect();
    let mut end = chars.len();
    for i in 0..chars.len() {
        if chars[i] == '.' && chars.get(i + 1).map(|c| c.is_whitespace()).unwrap_or(true) {
            end = i + 1;
            break;
        }
    }
    let sentence: String = chars[..end].iter().collect();

    let normalized = sentence.split_whitespace().collect::<Vec<_>>().join(" ");
    if normalized.is_empty() {
        return Err(Error::EmptySummary);
    }
    Ok(normalized)
}

/// Byte offsets of whitespace-delimited words.
fn word_positions(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &text[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

/// `{@code X}` / `{@link X}` (and any other inline `{@tag ...}`) become
/// their content; tags without content vanish.
fn replace_inline_tags(text: &str) -> String {
    let mut out = String::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' && i + 1 < bytes.len() && bytes[i + 1] == b'@' {
            if let Some(close) = text[i..].find('}') {
                let inner = &text[i + 2..i + close];
                // Skip the tag name, keep the payload.
                let payload = inner
                    .split_once(char::is_whitespace)
                    .map(|(_, rest)| rest.trim())
                    .unwrap_or("");
                out.push_str(payload);
                i += close + 1;
                continue;
            }
        }
        let c = text[i..].chars().next().unwrap();
        out.push(c);
        i += c.len_utf8();
    }
    out
}
