//! End-to-end orchestration shared by the CLI and the acceptance suite:
//! mining, scoring, report assembly, and run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{extract_methods, scan_project, MethodRecord};
use crate::error::{Error, Result};
use crate::gateway::GenerationRecord;
use crate::metrics::{score_record, ScoreProviders, ScoreRow, ScoreWarnings, METRIC_NAMES};
use crate::report::Report;
use crate::stats::{aggregate, compare_prompts, masking_effect, winner_distribution};

/// Mining results plus file-level counters for the run log.
#[derive(Debug, Clone)]
pub struct MiningOutcome {
    pub records: Vec<MethodRecord>,
    pub files_total: usize,
    /// Unreadable or non-UTF-8 files carried through with parse_ok = false.
    pub files_unreadable: usize,
    /// Files whose syntax tree could not be built; skipped with a warning.
    pub files_skipped: usize,
}

/// Scan and extract in one pass; records arrive in deterministic
/// (path, position) order so corpus files are byte-stable.
pub fn mine_corpus(
    root: &Path,
    include_globs: &[String],
    exclude_globs: &[String],
    require_javadoc: bool,
) -> Result<MiningOutcome> {
    let files = scan_project(root, include_globs, exclude_globs)?;
    let mut outcome = MiningOutcome {
        records: Vec::new(),
        files_total: files.len(),
        files_unreadable: 0,
        files_skipped: 0,
    };
    for file in &files {
        if !file.parse_ok {
            outcome.files_unreadable += 1;
            continue;
        }
        match extract_methods(file, require_javadoc) {
            Ok(records) => outcome.records.extend(records),
            Err(_) => outcome.files_skipped += 1,
        }
    }
    Ok(outcome)
}

pub fn records_by_id(records: &[MethodRecord]) -> BTreeMap<String, MethodRecord> {
    records
        .iter()
        .map(|r| (r.id.clone(), r.clone()))
        .collect()
}

/// Score every ok generation against its method's ground truth. Failed
/// records and records with unknown method ids are counted and skipped.
pub fn score_generations(
    generations: &[GenerationRecord],
    truth_by_id: &BTreeMap<String, MethodRecord>,
    providers: &ScoreProviders<'_>,
) -> (Vec<ScoreRow>, ScoreWarnings, usize) {
    let mut rows = Vec::new();
    let mut warnings = ScoreWarnings::default();
    let mut unknown_methods = 0usize;
    for gen in generations {
        let Some(method) = truth_by_id.get(&gen.method_id) else {
            unknown_methods += 1;
            continue;
        };
        match score_record(gen, &method.ground_truth_summary, providers, &mut warnings) {
            Ok(metrics) => rows.push(ScoreRow {
                method_id: gen.method_id.clone(),
                strategy: gen.strategy,
                masked: gen.masked,
                metrics,
            }),
            Err(_) => {
                // score_record already counted the reason.
            }
        }
    }
    (rows, warnings, unknown_methods)
}

/// Aggregate tables, winner distributions over every computable metric,
/// the masking grid, and (when both keys exist) the candidate-vs-baseline
/// comparison.
pub fn build_report(rows: &[ScoreRow], baseline: Option<&str>, candidate: Option<&str>) -> Report {
    let aggregates = aggregate(rows);
    let present: Vec<&str> = METRIC_NAMES
        .iter()
        .copied()
        .filter(|m| aggregates.iter().any(|r| r.metric_name == *m))
        .collect();
    let winners = present
        .iter()
        .filter_map(|m| winner_distribution(rows, m).ok())
        .collect();
    let comparisons = match (baseline, candidate) {
        (Some(b), Some(c)) => compare_prompts(rows, b, c).unwrap_or_default(),
        _ => Vec::new(),
    };
    Report {
        aggregates,
        comparisons,
        winners,
        masking: masking_effect(rows),
    }
}

/// Manifest written beside every produced file: what ran, over which
/// inputs (content-hashed), with which tool version. No timestamps, so
/// reruns are byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub input_hashes: BTreeMap<String, String>,
    pub tool_version: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Hash of a directory's file contents in path order.
pub fn tree_hash(root: &Path) -> Result<String> {
    let files = scan_project(root, &["**/*".to_string()], &[])?;
    let mut hasher = Sha256::new();
    for file in files {
        hasher.update(file.path.to_string_lossy().as_bytes());
        hasher.update([0]);
        hasher.update(file.content.as_bytes());
        hasher.update([0]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

pub fn write_manifest(
    out_path: &Path,
    command: &str,
    config_repr: &str,
    inputs: &[(&str, String)],
) -> Result<PathBuf> {
    let manifest = RunManifest {
        command: command.to_string(),
        config_hash: sha256_hex(config_repr.as_bytes()),
        input_hashes: inputs
            .iter()
            .map(|(name, hash)| (name.to_string(), hash.clone()))
            .collect(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let path = out_path.with_extension(match out_path.extension() {
        Some(ext) => format!("{}.manifest.json", ext.to_string_lossy()),
        None => "manifest.json".to_string(),
    });
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn mining_counts_unreadable_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("Good.java"),
            "class G {\n  /** Runs. */\n  void run() { work(); }\n}",
        )
        .unwrap();
        fs::write(dir.path().join("Bad.java"), [0xff, 0xfe]).unwrap();
        let outcome = mine_corpus(dir.path(), &[], &[], true).unwrap();
        assert_eq!(outcome.files_total, 2);
        assert_eq!(outcome.files_unreadable, 1);
        assert_eq!(outcome.records.len(), 1);
    }

    #[test]
    fn mining_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("A.java"),
            "class A {\n  /** First. */\n  void first() { a(); }\n  /** Second. */\n  void second() { b(); }\n}",
        )
        .unwrap();
        let a = mine_corpus(dir.path(), &[], &[], true).unwrap();
        let b = mine_corpus(dir.path(), &[], &[], true).unwrap();
        let to_json = |records: &[MethodRecord]| {
            records
                .iter()
                .map(|r| serde_json::to_string(r).unwrap())
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(to_json(&a.records), to_json(&b.records));
    }

    #[test]
    fn manifest_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("corpus.jsonl");
        fs::write(&out, "{}\n").unwrap();
        let hash = file_hash(&out).unwrap();
        let a = write_manifest(&out, "extract", "cfg", &[("corpus", hash.clone())]).unwrap();
        let first = fs::read_to_string(&a).unwrap();
        let b = write_manifest(&out, "extract", "cfg", &[("corpus", hash)]).unwrap();
        assert_eq!(first, fs::read_to_string(&b).unwrap());
        assert!(a.to_string_lossy().ends_with("corpus.jsonl.manifest.json"));
    }
}
