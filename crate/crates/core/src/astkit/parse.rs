use std::cell::RefCell;

use serde::{Deserialize, Serialize};
use tree_sitter::{Node, Parser};

use super::tree::{SyntaxNode, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageHint {
    #[default]
    C,
    Cpp,
}

impl std::fmt::Display for LanguageHint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LanguageHint::C => "c",
            LanguageHint::Cpp => "cpp",
        })
    }
}

impl std::str::FromStr for LanguageHint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c" => Ok(LanguageHint::C),
            "cpp" | "c++" => Ok(LanguageHint::Cpp),
            other => Err(format!("unknown language hint {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("source is empty")]
    EmptySource,
    #[error("grammar initialisation failed: {0}")]
    Grammar(String),
    #[error("no recognizable function structure")]
    NoStructure,
}

thread_local! {
    static C_PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
    static CPP_PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
}

fn with_parser<R>(
    hint: LanguageHint,
    f: impl FnOnce(&mut Parser) -> R,
) -> Result<R, ParseError> {
    let slot = match hint {
        LanguageHint::C => &C_PARSER,
        LanguageHint::Cpp => &CPP_PARSER,
    };
    slot.with(|cell| {
        let mut guard = cell.borrow_mut();
        if guard.is_none() {
            let mut parser = Parser::new();
            let language = match hint {
                LanguageHint::C => tree_sitter_c::LANGUAGE.into(),
                LanguageHint::Cpp => tree_sitter_cpp::LANGUAGE.into(),
            };
            parser
                .set_language(&language)
                .map_err(|e| ParseError::Grammar(e.to_string()))?;
            *guard = Some(parser);
        }
        Ok(f(guard.as_mut().expect("parser initialised above")))
    })
}

/// Raw tree-sitter parse, for callers that need field names.
pub(crate) fn parse_raw(source: &str, hint: LanguageHint) -> Result<tree_sitter::Tree, ParseError> {
    with_parser(hint, |p| p.parse(source, None))?.ok_or(ParseError::NoStructure)
}

/// Parses one function into a [`SyntaxTree`].
///
/// Comments and other grammar extras are dropped. Error-recovery nodes are
/// kept and flagged; the parse only fails when nothing but error nodes is
/// produced.
pub fn parse_function(source: &str, hint: LanguageHint) -> Result<SyntaxTree, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::EmptySource);
    }
    let ts_tree = with_parser(hint, |p| p.parse(source, None))?.ok_or(ParseError::NoStructure)?;
    let root = ts_tree.root_node();
    let mut cursor = root.walk();
    let structural = root
        .children(&mut cursor)
        .filter(|c| !c.is_extra())
        .any(|c| !c.is_error());
    if root.is_error() || !structural {
        return Err(ParseError::NoStructure);
    }

    let mut nodes = Vec::new();
    convert(root, source, None, &mut nodes);
    // conversion preserves pre-order and spans, so shape checks cannot fail
    SyntaxTree::from_nodes(nodes).map_err(|_| ParseError::NoStructure)
}

fn convert(node: Node<'_>, source: &str, parent: Option<usize>, out: &mut Vec<SyntaxNode>) {
    let id = out.len();
    out.push(SyntaxNode {
        kind: node.kind().to_string(),
        text: String::new(),
        children: Vec::new(),
        parent,
        span: (node.start_byte(), node.end_byte()),
        is_error: node.is_error() || node.is_missing(),
    });
    let mut cursor = node.walk();
    let kids: Vec<Node<'_>> = node.children(&mut cursor).filter(|c| !c.is_extra()).collect();
    if kids.is_empty() {
        out[id].text = source[node.byte_range()].to_string();
        return;
    }
    for child in kids {
        let child_id = out.len();
        out[id].children.push(child_id);
        convert(child, source, Some(id), out);
    }
}
