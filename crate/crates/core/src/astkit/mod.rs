//! C/C++ function parsing into language-neutral ordered labeled trees.

pub(crate) mod parse;
mod sexpr;
mod tree;

pub use parse::{parse_function, LanguageHint, ParseError};
pub use sexpr::{from_sexpr, to_sexpr, SexprError};
pub use tree::{node_label, node_multiset, Label, LabelMultiset, SyntaxNode, SyntaxTree, TreeShapeError};
