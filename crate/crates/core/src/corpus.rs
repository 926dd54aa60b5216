//! Line-delimited JSON corpora of vulnerable/benign function pairs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::astkit::{LanguageHint, SyntaxTree};

/// One vulnerable function and its patched counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionPair {
    pub pair_id: String,
    pub vuln_source: String,
    pub benign_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cve_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project: Option<String>,
    #[serde(default)]
    pub language_hint: LanguageHint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFilterConfig {
    pub max_ast_nodes: usize,
    pub require_parse_success: bool,
}

impl Default for CorpusFilterConfig {
    fn default() -> Self {
        CorpusFilterConfig { max_ast_nodes: 350, require_parse_success: true }
    }
}

impl CorpusFilterConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.max_ast_nodes == 0 {
            return Err(CorpusError::Config("max_ast_nodes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate pair_id {pair_id:?}")]
    Duplicate { line: usize, pair_id: String },
    #[error("invalid filter config: {0}")]
    Config(String),
}

/// Reads a corpus, one JSON record per non-blank line, in file order.
pub fn load_corpus(path: &Path) -> Result<Vec<FunctionPair>, CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let file = fs::File::open(path).map_err(io_err)?;
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let pair = parse_record(&line, line_no)?;
        if !seen.insert(pair.pair_id.clone()) {
            return Err(CorpusError::Duplicate { line: line_no, pair_id: pair.pair_id });
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

fn parse_record(line: &str, line_no: usize) -> Result<FunctionPair, CorpusError> {
    let pair: FunctionPair = serde_json::from_str(line)
        .map_err(|e| CorpusError::Parse { line: line_no, message: e.to_string() })?;
    let empty = |field: &str| CorpusError::Parse { line: line_no, message: format!("{field} is empty") };
    if pair.pair_id.is_empty() {
        return Err(empty("pair_id"));
    }
    if pair.vuln_source.is_empty() {
        return Err(empty("vuln_source"));
    }
    if pair.benign_source.is_empty() {
        return Err(empty("benign_source"));
    }
    Ok(pair)
}

pub fn write_corpus(path: &Path, pairs: &[FunctionPair]) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for pair in pairs {
        let line = serde_json::to_string(pair).expect("pair serializes");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Parsed trees for one pair, or the reason parsing failed.
pub type ParsedPair = Result<(SyntaxTree, SyntaxTree), String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DropReason {
    Size,
    Parse,
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DropReason::Size => "size",
            DropReason::Parse => "parse",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<FunctionPair>,
    pub dropped: Vec<(String, DropReason)>,
}

/// Splits pairs into kept and dropped by tree size and parse status.
///
/// A pair missing from `trees` counts as a parse failure. When parse success
/// is not required, parse failures are kept.
pub fn filter_pairs(
    pairs: &[FunctionPair],
    trees: &HashMap<String, ParsedPair>,
    cfg: &CorpusFilterConfig,
) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for pair in pairs {
        match trees.get(&pair.pair_id) {
            Some(Ok((tv, tb))) => {
                if tv.node_count() > cfg.max_ast_nodes || tb.node_count() > cfg.max_ast_nodes {
                    out.dropped.push((pair.pair_id.clone(), DropReason::Size));
                } else {
                    out.kept.push(pair.clone());
                }
            }
            Some(Err(_)) | None => {
                if cfg.require_parse_success {
                    out.dropped.push((pair.pair_id.clone(), DropReason::Parse));
                } else {
                    out.kept.push(pair.clone());
                }
            }
        }
    }
    out
}

/// Summary numbers printed by `rrs corpus stats`.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusStats {
    pub pairs: usize,
    pub by_language: BTreeMap<String, usize>,
    pub with_cve: usize,
    pub projects: usize,
    pub mean_vuln_bytes: f64,
    pub mean_benign_bytes: f64,
    pub identical_pairs: usize,
}

pub fn corpus_stats(pairs: &[FunctionPair]) -> CorpusStats {
    let n = pairs.len();
    let mut by_language = BTreeMap::new();
    for p in pairs {
        *by_language.entry(p.language_hint.to_string()).or_insert(0) += 1;
    }
    let projects: HashSet<&str> = pairs.iter().filter_map(|p| p.project.as_deref()).collect();
    let mean = |f: fn(&FunctionPair) -> usize| {
        if n == 0 {
            0.0
        } else {
            pairs.iter().map(f).sum::<usize>() as f64 / n as f64
        }
    };
    CorpusStats {
        pairs: n,
        by_language,
        with_cve: pairs.iter().filter(|p| p.cve_id.is_some()).count(),
        projects: projects.len(),
        mean_vuln_bytes: mean(|p| p.vuln_source.len()),
        mean_benign_bytes: mean(|p| p.benign_source.len()),
        identical_pairs: pairs.iter().filter(|p| p.vuln_source == p.benign_source).count(),
    }
}
