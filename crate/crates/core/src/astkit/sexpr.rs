//! Deterministic S-expression form of a [`SyntaxTree`].
//!
//! Internal nodes print as `(kind child...)`, leaves as `(kind "text")` or
//! `(kind)` when the token text is empty. Kinds that are not plain
//! identifiers (anonymous tokens such as `(` or `->`) are quoted.

use std::fmt::Write as _;

use super::tree::{SyntaxNode, SyntaxTree, TreeShapeError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SexprError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected character {found:?} at byte {at}")]
    Unexpected { found: char, at: usize },
    #[error("bad escape at byte {0}")]
    BadEscape(usize),
    #[error("trailing input at byte {0}")]
    Trailing(usize),
    #[error(transparent)]
    Shape(#[from] TreeShapeError),
}

fn is_bare(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '#'))
}

fn write_quoted(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_atom(out: &mut String, s: &str) {
    if is_bare(s) {
        out.push_str(s);
    } else {
        write_quoted(out, s);
    }
}

pub fn to_sexpr(tree: &SyntaxTree) -> String {
    let mut out = String::new();
    write_node(tree, 0, &mut out);
    out
}

fn write_node(tree: &SyntaxTree, id: usize, out: &mut String) {
    let node = tree.node(id);
    out.push('(');
    write_atom(out, &node.kind);
    if node.is_leaf() {
        if !node.text.is_empty() {
            out.push(' ');
            write_quoted(out, &node.text);
        }
    } else {
        for &c in &node.children {
            out.push(' ');
            write_node(tree, c, out);
        }
    }
    out.push(')');
}

/// Parses the S-expression form back into a tree. Spans are not encoded, so
/// every node of the result carries the empty span `(0, 0)`.
pub fn from_sexpr(input: &str) -> Result<SyntaxTree, SexprError> {
    let mut p = Reader { src: input, pos: 0 };
    let mut nodes = Vec::new();
    p.skip_ws();
    p.node(&mut nodes)?;
    p.skip_ws();
    if p.pos != input.len() {
        return Err(SexprError::Trailing(p.pos));
    }
    Ok(SyntaxTree::from_nodes(nodes)?)
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl Reader<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn expect(&mut self, want: char) -> Result<(), SexprError> {
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => Err(SexprError::Unexpected { found: c, at: self.pos - c.len_utf8() }),
            None => Err(SexprError::Eof),
        }
    }

    fn node(&mut self, nodes: &mut Vec<SyntaxNode>) -> Result<usize, SexprError> {
        self.expect('(')?;
        self.skip_ws();
        let kind = self.atom()?;
        let id = nodes.len();
        nodes.push(SyntaxNode {
            kind,
            text: String::new(),
            children: Vec::new(),
            parent: None,
            span: (0, 0),
            is_error: false,
        });
        nodes[id].is_error = nodes[id].kind == "ERROR";
        self.skip_ws();
        match self.peek() {
            Some('"') => {
                nodes[id].text = self.quoted()?;
                self.skip_ws();
            }
            Some('(') => {
                while self.peek() == Some('(') {
                    let child = self.node(nodes)?;
                    nodes[id].children.push(child);
                    self.skip_ws();
                }
            }
            _ => {}
        }
        self.expect(')')?;
        Ok(id)
    }

    fn atom(&mut self) -> Result<String, SexprError> {
        if self.peek() == Some('"') {
            return self.quoted();
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if !c.is_whitespace() && c != '(' && c != ')' && c != '"')
        {
            self.bump();
        }
        if start == self.pos {
            return match self.peek() {
                Some(c) => Err(SexprError::Unexpected { found: c, at: self.pos }),
                None => Err(SexprError::Eof),
            };
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn quoted(&mut self) -> Result<String, SexprError> {
        self.expect('"')?;
        let mut out = String::new();
        loop {
            let at = self.pos;
            match self.bump().ok_or(SexprError::Eof)? {
                '"' => return Ok(out),
                '\\' => match self.bump().ok_or(SexprError::Eof)? {
                    '"' => out.push('"'),
                    '\\' => out.push('\\'),
                    'n' => out.push('\n'),
                    't' => out.push('\t'),
                    'r' => out.push('\r'),
                    'u' => {
                        self.expect('{').map_err(|_| SexprError::BadEscape(at))?;
                        let start = self.pos;
                        while matches!(self.peek(), Some(c) if c.is_ascii_hexdigit()) {
                            self.bump();
                        }
                        let code = u32::from_str_radix(&self.src[start..self.pos], 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or(SexprError::BadEscape(at))?;
                        self.expect('}').map_err(|_| SexprError::BadEscape(at))?;
                        out.push(code);
                    }
                    _ => return Err(SexprError::BadEscape(at)),
                },
                c => out.push(c),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_mixed_kinds() {
        let src = r#"(call_expression (identifier "f") (argument_list ("(" "(") (identifier "x\n\"y") (")" ")")))"#;
        let tree = from_sexpr(src).unwrap();
        assert_eq!(tree.node_count(), 6);
        assert_eq!(to_sexpr(&tree), src);
    }

    #[test]
    fn empty_leaf() {
        let tree = from_sexpr("(A (B) (C))").unwrap();
        assert_eq!(tree.node_count(), 3);
        assert!(tree.node(1).is_leaf());
        assert_eq!(to_sexpr(&tree), "(A (B) (C))");
    }

    #[test]
    fn rejects_garbage() {
        assert!(from_sexpr("(A").is_err());
        assert!(from_sexpr("(A) (B)").is_err());
        assert!(from_sexpr("A").is_err());
    }
}
