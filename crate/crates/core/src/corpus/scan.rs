//! Project tree scanning.

use std::path::Path;

use globset::{Glob, GlobSet, GlobSetBuilder};
use walkdir::WalkDir;

use crate::error::{Error, Result};

use super::SourceFile;

fn build_globset(patterns: &[String]) -> Result<GlobSet> {
    let mut builder = GlobSetBuilder::new();
    for pattern in patterns {
        let glob = Glob::new(pattern)
            .map_err(|e| Error::Config(format!("bad glob pattern {pattern:?}: {e}")))?;
        builder.add(glob);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("glob set: {e}")))
}

/// Collect files under `root` matching the include globs (default
/// `**/*.java`) and not matching the exclude globs, in lexicographic order
/// of their root-relative path. Unreadable or non-UTF-8 files are returned
/// with `parse_ok = false` so mining can continue past them.
pub fn scan_project(
    root: &Path,
    include_globs: &[String],
    exclude_globs: &[String],
) -> Result<Vec<SourceFile>> {
    if !root.is_dir() {
        return Err(Error::Config(format!(
            "source root {} does not exist or is not a directory",
            root.display()
        )));
    }
    let default_include = vec!["**/*.java".to_string()];
    let includes = build_globset(if include_globs.is_empty() {
        &default_include
    } else {
        include_globs
    })?;
    let excludes = build_globset(exclude_globs)?;

    let mut paths = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        let entry = match entry {
            Ok(e) => e,
            Err(_) => continue, // unreadable directory entries are skipped
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .unwrap_or(entry.path())
            .to_path_buf();
        if includes.is_match(&rel) && !excludes.is_match(&rel) {
            paths.push((rel, entry.into_path()));
        }
    }
    paths.sort_by(|a, b| a.0.cmp(&b.0));

    let mut files = Vec::with_capacity(paths.len());
    for (rel, abs) in paths {
        // Empty files carry nothing to mine; parse_ok stays false so the
        // invariant "parse_ok implies non-empty content" holds.
        let content = std::fs::read(&abs)
            .ok()
            .and_then(|bytes| String::from_utf8(bytes).ok())
            .filter(|content| !content.is_empty());
        match content {
            Some(content) => files.push(SourceFile {
                path: rel,
                content,
                parse_ok: true,
            }),
            None => files.push(SourceFile {
                path: rel,
                content: String::new(),
                parse_ok: false,
            }),
        }
    }
    Ok(files)
}
