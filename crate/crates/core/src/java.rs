//! Shared tree-sitter plumbing for Java sources.

use tree_sitter::{Node, Parser, Tree};

/// Parse Java source text. Returns `None` only if the parser itself bails
/// (tree-sitter otherwise produces a tree, possibly containing error nodes).
pub(crate) fn parse_java(source: &str) -> Option<Tree> {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .expect("java grammar is compatible with the linked tree-sitter");
    parser.parse(source, None)
}

/// First character of a Java identifier.
pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

/// Continuation character of a Java identifier.
pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// True when `text` contains `name` as a whole identifier token, i.e. not as
/// a substring of a longer identifier. Used by masking and its tests.
pub fn contains_identifier(text: &str, name: &str) -> bool {
    if name.is_empty() {
        return false;
    }
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if is_ident_start(chars[i]) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            if chars[start..i].iter().collect::<String>() == name {
                return true;
            }
        } else {
            i += 1;
        }
    }
    false
}

/// Walk `node` and every descendant in document order.
pub(crate) fn walk_preorder<'a>(root: Node<'a>, mut visit: impl FnMut(Node<'a>)) {
    let mut cursor = root.walk();
    let mut done = false;
    while !done {
        visit(cursor.node());
        if cursor.goto_first_child() {
            continue;
        }
        loop {
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                done = true;
                break;
            }
        }
    }
}
