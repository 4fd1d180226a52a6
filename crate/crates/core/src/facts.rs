//! Semantic facts for prompt augmentation: tagged identifiers and def-use
//! chains extracted from a method body, plus the sub-token code tokenizer
//! shared with exemplar retrieval.
//!
//! The def-use analysis is lexical and path-insensitive: it walks the syntax
//! tree in source order and, for every definition site of a parameter or
//! local (declaration with initializer, or assignment), records subsequent
//! read occurrences of that name until the next re-definition. Fields and
//! method names are not tracked.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use crate::corpus::MethodRecord;
use crate::error::{Error, Result};
use crate::java::{parse_java, walk_preorder};

/// Parameters and locals of one method, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifierFacts {
    pub params: Vec<String>,
    pub locals: Vec<String>,
}

/// One definition site of a variable and the reads it reaches.
///
/// Lines are relative to the first line of the method declaration (the
/// signature line is 0, so parameters are defined at line 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefUseFact {
    pub var: String,
    pub def_line: usize,
    pub use_lines: Vec<usize>,
}

/// Identifier facts and def-use chains bundled for prompt rendering.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticFacts {
    pub identifiers: IdentifierFacts,
    pub def_use: Vec<DefUseFact>,
}

impl SemanticFacts {
    pub fn extract(method: &MethodRecord) -> Result<SemanticFacts> {
        let identifiers = extract_identifiers(method)?;
        let def_use = extract_def_use(method)?;
        Ok(SemanticFacts {
            identifiers,
            def_use,
        })
    }

    pub fn render(&self) -> String {
        render_semantic_facts(&self.identifiers, &self.def_use)
    }
}

/// Lowercase sub-token stream of a code snippet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
}

/// Split code into lowercase sub-tokens: non-alphanumerics separate tokens,
/// camelCase/PascalCase humps and letter-digit boundaries split, empty
/// tokens dropped. Tokens are ASCII `[a-z0-9]+`.
pub fn tokenize_code(text: &str) -> TokenStream {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.chars().collect();
    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            tokens.push(std::mem::take(current).to_ascii_lowercase());
        }
    };
    for i in 0..chars.len() {
        let c = chars[i];
        if !c.is_ascii_alphanumeric() {
            flush(&mut current, &mut tokens);
            continue;
        }
        if !current.is_empty() {
            let prev = chars[i - 1];
            let next = chars.get(i + 1).copied();
            let hump = prev.is_ascii_lowercase() && c.is_ascii_uppercase();
            // Acronym boundary: "HTTPClient" splits before the 'C' of "Client".
            let acronym_end = prev.is_ascii_uppercase()
                && c.is_ascii_uppercase()
                && next.map(|n| n.is_ascii_lowercase()).unwrap_or(false);
            let digit_boundary = prev.is_ascii_digit() != c.is_ascii_digit();
            if hump || acronym_end || digit_boundary {
                flush(&mut current, &mut tokens);
            }
        }
        current.push(c);
    }
    flush(&mut current, &mut tokens);
    TokenStream { tokens }
}

/// Wrap the method snippet in a dummy class and reparse it so facts can be
/// derived from a record alone. Line 0 of the snippet is the signature line.
fn parse_method_snippet(method: &MethodRecord) -> Result<(tree_sitter::Tree, String, usize)> {
    let snippet = format!("{} {}", method.signature, method.body_text);
    let wrapped = format!("class __FactsWrapper__ {{\n{}\n}}", snippet);
    let tree = parse_java(&wrapped)
        .ok_or_else(|| Error::Parse(std::path::PathBuf::from(&method.file_path)))?;
    // The wrapper adds one line above the method; subtract it when
    // converting rows to method-relative lines.
    Ok((tree, wrapped, 1))
}

fn find_method_node<'a>(root: Node<'a>) -> Option<Node<'a>> {
    let mut found = None;
    walk_preorder(root, |n| {
        if found.is_none() && n.kind() == "method_declaration" {
            found = Some(n);
        }
    });
    found
}

/// Parameters from the record, locals from a source-order walk of the body.
pub fn extract_identifiers(method: &MethodRecord) -> Result<IdentifierFacts> {
    let (tree, wrapped, _) = parse_method_snippet(method)?;
    let method_node = find_method_node(tree.root_node())
        .ok_or_else(|| Error::Parse(std::path::PathBuf::from(&method.file_path)))?;
    if method_node.has_error() {
        return Err(Error::Parse(std::path::PathBuf::from(&method.file_path)));
    }
    let src = wrapped.as_bytes();

    let mut locals = Vec::new();
    let mut seen = BTreeSet::new();
    walk_preorder(method_node, |node| {
        if let Some(name) = local_declaration_name(node, src) {
            if seen.insert(name.clone()) {
                locals.push(name);
            }
        }
    });
    // Params may shadow nothing but a local may share a param name in
    // malformed code; keep lists disjoint.
    locals.retain(|l| !method.param_names.contains(l));

    Ok(IdentifierFacts {
        params: method.param_names.clone(),
        locals,
    })
}

/// Name introduced by a local-variable-like declaration node, if any.
/// Covers plain declarations, classic `for` inits, enhanced-`for` variables,
/// catch parameters, and try-with-resources.
fn local_declaration_name(node: Node<'_>, src: &[u8]) -> Option<String> {
    match node.kind() {
        "variable_declarator" | "resource" => {
            // Declarators appear under local_variable_declaration; field
            // declarations cannot occur inside a method body.
            let name = node.child_by_field_name("name")?;
            if name.kind() != "identifier" {
                return None;
            }
            Some(name.utf8_text(src).ok()?.to_string())
        }
        "enhanced_for_statement" => {
            let name = node.child_by_field_name("name")?;
            Some(name.utf8_text(src).ok()?.to_string())
        }
        "catch_formal_parameter" => {
            let name = node.child_by_field_name("name").or_else(|| {
                // Older grammar versions expose the identifier as a bare child.
                (0..node.child_count())
                    .filter_map(|i| node.child(i))
                    .find(|c| c.kind() == "identifier")
            })?;
            Some(name.utf8_text(src).ok()?.to_string())
        }
        _ => None,
    }
}

/// What an identifier occurrence does to its variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Occurrence {
    Read,
    Define,
    /// Compound assignment or increment/decrement: a read of the current
    /// definition followed by a new definition at the same line.
    ReadThenDefine,
    /// Declaration without initializer, or a non-variable position
    /// (method name, field name, type, label); not an event.
    Ignore,
}

fn classify_identifier(node: Node<'_>) -> Occurrence {
    let Some(parent) = node.parent() else {
        return Occurrence::Ignore;
    };
    match parent.kind() {
        "variable_declarator" | "resource" => {
            if parent.child_by_field_name("name") == Some(node) {
                if parent.child_by_field_name("value").is_some() {
                    Occurrence::Define
                } else {
                    Occurrence::Ignore
                }
            } else {
                Occurrence::Read
            }
        }
        "assignment_expression" => {
            if parent.child_by_field_name("left") == Some(node) {
                let op = parent
                    .child_by_field_name("operator")
                    .map(|o| o.kind().to_string())
                    .unwrap_or_default();
                if op == "=" {
                    Occurrence::Define
                } else {
                    Occurrence::ReadThenDefine
                }
            } else {
                Occurrence::Read
            }
        }
        "update_expression" => Occurrence::ReadThenDefine,
        "enhanced_for_statement" => {
            if parent.child_by_field_name("name") == Some(node) {
                Occurrence::Define
            } else {
                Occurrence::Read
            }
        }
        "catch_formal_parameter" | "formal_parameter" => {
            if parent.child_by_field_name("name") == Some(node) {
                Occurrence::Define
            } else {
                Occurrence::Read
            }
        }
        // The `name` part of a call or field access is not a variable; the
        // `object`/arguments are ordinary reads.
        "method_invocation" | "field_access" | "method_reference" => {
            if parent.child_by_field_name("name") == Some(node)
                || parent.child_by_field_name("field") == Some(node)
            {
                Occurrence::Ignore
            } else {
                Occurrence::Read
            }
        }
        "labeled_statement" | "break_statement" | "continue_statement" => Occurrence::Ignore,
        _ => Occurrence::Read,
    }
}

#[derive(Debug)]
struct VarEvent {
    /// Byte position at which the event takes effect. Defines arising from
    /// assignments and initialized declarators take effect at the end of
    /// the enclosing expression, so in `x = x + 1` the right-hand side
    /// still reads the prior chain.
    effective_pos: usize,
    line: usize,
    name: String,
    is_define: bool,
}

/// Def-use chains over the method body, ordered by definition line then
/// variable name. Use lines are sorted and duplicate-free.
pub fn extract_def_use(method: &MethodRecord) -> Result<Vec<DefUseFact>> {
    let identifiers = extract_identifiers(method)?;
    let (tree, wrapped, line_shift) = parse_method_snippet(method)?;
    let method_node = find_method_node(tree.root_node())
        .ok_or_else(|| Error::Parse(std::path::PathBuf::from(&method.file_path)))?;
    let src = wrapped.as_bytes();

    let tracked: BTreeSet<&str> = identifiers
        .params
        .iter()
        .chain(identifiers.locals.iter())
        .map(|s| s.as_str())
        .collect();

    let mut events: Vec<VarEvent> = Vec::new();
    walk_preorder(method_node, |node| {
        if node.kind() != "identifier" {
            return;
        }
        let Ok(text) = node.utf8_text(src) else {
            return;
        };
        if !tracked.contains(text) {
            return;
        }
        // Parameter identifiers in the formal list become definitions at
        // line 0 below.
        if node
            .parent()
            .map(|p| p.kind() == "formal_parameter" || p.kind() == "spread_parameter")
            .unwrap_or(false)
        {
            return;
        }
        let line = node.start_position().row.saturating_sub(line_shift);
        // Only assignments and initialized declarators defer the define
        // past their right-hand side; loop/catch/resource bindings take
        // effect where they stand.
        let define_pos = match node.parent() {
            Some(p)
                if matches!(
                    p.kind(),
                    "assignment_expression" | "variable_declarator" | "resource"
                ) =>
            {
                p.end_byte()
            }
            _ => node.start_byte(),
        };
        match classify_identifier(node) {
            Occurrence::Read => events.push(VarEvent {
                effective_pos: node.start_byte(),
                line,
                name: text.to_string(),
                is_define: false,
            }),
            Occurrence::Define => events.push(VarEvent {
                effective_pos: define_pos,
                line,
                name: text.to_string(),
                is_define: true,
            }),
            Occurrence::ReadThenDefine => {
                events.push(VarEvent {
                    effective_pos: node.start_byte(),
                    line,
                    name: text.to_string(),
                    is_define: false,
                });
                events.push(VarEvent {
                    effective_pos: define_pos,
                    line,
                    name: text.to_string(),
                    is_define: true,
                });
            }
            Occurrence::Ignore => {}
        }
    });
    events.sort_by_key(|e| e.effective_pos);

    let mut facts: Vec<DefUseFact> = Vec::new();
    let mut open: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();
    // Parameters are defined on the signature line.
    for param in &identifiers.params {
        facts.push(DefUseFact {
            var: param.clone(),
            def_line: 0,
            use_lines: Vec::new(),
        });
        open.insert(param.clone(), facts.len() - 1);
    }
    for event in events {
        if event.is_define {
            facts.push(DefUseFact {
                var: event.name.clone(),
                def_line: event.line,
                use_lines: Vec::new(),
            });
            open.insert(event.name, facts.len() - 1);
        } else if let Some(&idx) = open.get(&event.name) {
            if !facts[idx].use_lines.contains(&event.line) {
                facts[idx].use_lines.push(event.line);
            }
        }
    }

    for fact in &mut facts {
        fact.use_lines.sort_unstable();
        fact.use_lines.dedup();
    }
    facts.sort_by(|a, b| a.def_line.cmp(&b.def_line).then(a.var.cmp(&b.var)));
    Ok(facts)
}

/// Deterministic text block embedded into ASAP prompts. Empty sections are
/// omitted; an empty fact set renders as the empty string.
pub fn render_semantic_facts(idf: &IdentifierFacts, dfg: &[DefUseFact]) -> String {
    let mut out = String::new();
    let names: Vec<&str> = idf
        .params
        .iter()
        .chain(idf.locals.iter())
        .map(|s| s.as_str())
        .collect();
    if !names.is_empty() {
        out.push_str("Identifiers: ");
        out.push_str(&names.join(", "));
        out.push('\n');
    }
    for fact in dfg {
        let uses: Vec<String> = fact.use_lines.iter().map(|l| l.to_string()).collect();
        out.push_str(&format!(
            "DataFlow: {} defined@{} used@{}\n",
            fact.var,
            fact.def_line,
            uses.join(",")
        ));
    }
    out
}
