//! Method extraction from parsed Java sources.

use sha2::{Digest, Sha256};
use tree_sitter::Node;

use crate::error::{Error, Result};
use crate::java::{parse_java, walk_preorder};

use super::{extract_ground_truth, MethodRecord, SourceFile};

/// Stable content hash: 128 bits of SHA-256 over the identifying triple.
pub fn method_id(file_path: &str, signature: &str, body_text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(file_path.as_bytes());
    hasher.update([0]);
    hasher.update(signature.as_bytes());
    hasher.update([0]);
    hasher.update(body_text.as_bytes());
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Extract one record per method declaration in `file`. Constructors and
/// bodyless methods (interface/abstract members) are excluded. When
/// `require_javadoc` is set, a method is kept only if its immediately
/// preceding sibling is a `/** ... */` block comment whose derived summary
/// is non-empty.
pub fn extract_methods(file: &SourceFile, require_javadoc: bool) -> Result<Vec<MethodRecord>> {
    if !file.parse_ok {
        return Err(Error::Parse(file.path.clone()));
    }
    let tree = parse_java(&file.content).ok_or_else(|| Error::Parse(file.path.clone()))?;
    let root = tree.root_node();
    if root.kind() == "ERROR" {
        return Err(Error::Parse(file.path.clone()));
    }

    let src = file.content.as_bytes();
    let lines: Vec<&str> = file.content.lines().collect();
    let file_path = file.path.to_string_lossy().to_string();

    let mut nodes = Vec::new();
    walk_preorder(root, |node| {
        if node.kind() == "method_declaration" {
            nodes.push(node);
        }
    });

    let mut records = Vec::new();
    for node in nodes {
        let Some(record) = method_record(node, src, &lines, &file_path, require_javadoc) else {
            continue;
        };
        records.push(record);
    }
    Ok(records)
}

fn method_record(
    node: Node<'_>,
    src: &[u8],
    lines: &[&str],
    file_path: &str,
    require_javadoc: bool,
) -> Option<MethodRecord> {
    let body = node.child_by_field_name("body")?; // bodyless members excluded
    let name_node = node.child_by_field_name("name")?;
    let params_node = node.child_by_field_name("parameters")?;

    let simple_name = name_node.utf8_text(src).ok()?.to_string();
    let signature = std::str::from_utf8(&src[node.start_byte()..params_node.end_byte()])
        .ok()?
        .to_string();
    let body_text = body.utf8_text(src).ok()?.to_string();

    let mut param_names = Vec::new();
    let mut cursor = params_node.walk();
    for child in params_node.children(&mut cursor) {
        if child.kind() == "formal_parameter" || child.kind() == "spread_parameter" {
            if let Some(name) = child.child_by_field_name("name") {
                if let Ok(text) = name.utf8_text(src) {
                    param_names.push(text.to_string());
                }
            } else if child.kind() == "spread_parameter" {
                // Grammar exposes the spread variable through a declarator.
                if let Some(decl) = (0..child.child_count())
                    .filter_map(|i| child.child(i))
                    .find(|c| c.kind() == "variable_declarator")
                {
                    if let Some(name) = decl.child_by_field_name("name") {
                        if let Ok(text) = name.utf8_text(src) {
                            param_names.push(text.to_string());
                        }
                    }
                }
            }
        }
    }

    let javadoc_raw = leading_javadoc(node, src).unwrap_or_default();
    let ground_truth_summary = if javadoc_raw.is_empty() {
        String::new()
    } else {
        extract_ground_truth(&javadoc_raw).unwrap_or_default()
    };
    if require_javadoc && ground_truth_summary.is_empty() {
        return None;
    }

    let start_line = node.start_position().row + 1;
    let end_line = body.end_position().row + 1;
    let loc = lines[start_line - 1..end_line.min(lines.len())]
        .iter()
        .filter(|l| !l.trim().is_empty())
        .count()
        .max(1);

    Some(MethodRecord {
        id: method_id(file_path, &signature, &body_text),
        file_path: file_path.to_string(),
        class_name: enclosing_class_name(node, src).unwrap_or_default(),
        simple_name,
        signature,
        param_names,
        body_text,
        start_line,
        end_line,
        loc,
        javadoc_raw,
        ground_truth_summary,
    })
}

/// The `/** ... */` block immediately preceding the declaration, if any.
/// A line comment or anything else in between disqualifies it.
fn leading_javadoc(node: Node<'_>, src: &[u8]) -> Option<String> {
    let prev = node.prev_sibling()?;
    if prev.kind() != "block_comment" {
        return None;
    }
    let text = prev.utf8_text(src).ok()?;
    if text.starts_with("/**") {
        Some(text.to_string())
    } else {
        None
    }
}

/// Nearest enclosing named type declaration; anonymous-class methods are
/// attributed to their lexical enclosing class.
fn enclosing_class_name(node: Node<'_>, src: &[u8]) -> Option<String> {
    let mut current = node.parent();
    while let Some(n) = current {
        match n.kind() {
            "class_declaration"
            | "interface_declaration"
            | "enum_declaration"
            | "record_declaration"
            | "annotation_type_declaration" => {
                if let Some(name) = n.child_by_field_name("name") {
                    return name.utf8_text(src).ok().map(|s| s.to_string());
                }
            }
            _ => {}
        }
        current = n.parent();
    }
    None
}
