//! Spawning analyzers on synthesized translation units.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::parsers::{parse_clang_tidy, parse_cppcheck_xml, parse_infer_json};
use super::{synthesize_preamble, Finding, RawFinding, Taxonomy, Tool, UNCATEGORIZED};
use crate::astkit::LanguageHint;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyzerError {
    #[error("{tool} is not available: {reason}")]
    Unavailable { tool: Tool, reason: String },
    #[error("{tool} exceeded {secs}s")]
    Timeout { tool: Tool, secs: u64 },
    #[error("{tool} failed: {reason}")]
    Failed { tool: Tool, reason: String },
}

/// Per-tool result for one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ToolOutcome {
    Findings { findings: Vec<Finding> },
    Unavailable { reason: String },
    Timeout,
    Failed { reason: String },
}

impl ToolOutcome {
    pub fn findings(&self) -> Option<&[Finding]> {
        match self {
            ToolOutcome::Findings { findings } => Some(findings),
            _ => None,
        }
    }
}

impl From<Result<Vec<Finding>, AnalyzerError>> for ToolOutcome {
    fn from(r: Result<Vec<Finding>, AnalyzerError>) -> Self {
        match r {
            Ok(findings) => ToolOutcome::Findings { findings },
            Err(AnalyzerError::Unavailable { reason, .. }) => ToolOutcome::Unavailable { reason },
            Err(AnalyzerError::Timeout { .. }) => ToolOutcome::Timeout,
            Err(AnalyzerError::Failed { reason, .. }) => ToolOutcome::Failed { reason },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairValidation {
    pub pair_id: String,
    pub outcomes: BTreeMap<Tool, ToolOutcome>,
}

/// Finds the executable: the tool's env override first, then `PATH`.
pub fn resolve_tool(tool: Tool) -> Result<PathBuf, AnalyzerError> {
    let unavailable = |reason: String| AnalyzerError::Unavailable { tool, reason };
    if let Some(custom) = std::env::var_os(tool.env_var()).filter(|v| !v.is_empty()) {
        let p = PathBuf::from(custom);
        return if p.is_file() {
            Ok(p)
        } else {
            Err(unavailable(format!("{} points to missing {}", tool.env_var(), p.display())))
        };
    }
    let path = std::env::var_os("PATH").unwrap_or_default();
    std::env::split_paths(&path)
        .map(|dir| dir.join(tool.name()))
        .find(|p| p.is_file())
        .ok_or_else(|| unavailable(format!("{} not found on PATH", tool.name())))
}

struct Captured {
    stdout: String,
    stderr: String,
}

fn run_with_timeout(tool: Tool, mut cmd: Command, timeout: Duration) -> Result<Captured, AnalyzerError> {
    let failed = |reason: String| AnalyzerError::Failed { tool, reason };
    let mut child = cmd
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                AnalyzerError::Unavailable { tool, reason: e.to_string() }
            }
            _ => failed(e.to_string()),
        })?;
    // drain pipes on their own threads so a chatty tool cannot block
    let mut out_pipe = child.stdout.take().expect("piped");
    let mut err_pipe = child.stderr.take().expect("piped");
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = out_pipe.read_to_string(&mut s);
        s
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = err_pipe.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    loop {
        match child.try_wait().map_err(|e| failed(e.to_string()))? {
            Some(_) => break,
            None if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(AnalyzerError::Timeout { tool, secs: timeout.as_secs() });
            }
            None => std::thread::sleep(Duration::from_millis(20)),
        }
    }
    Ok(Captured {
        stdout: out_reader.join().unwrap_or_default(),
        stderr: err_reader.join().unwrap_or_default(),
    })
}

fn invoke(tool: Tool, bin: &Path, file: &Path, dir: &Path, hint: LanguageHint, timeout: Duration) -> Result<Vec<RawFinding>, AnalyzerError> {
    let failed = |reason: String| AnalyzerError::Failed { tool, reason };
    match tool {
        Tool::Cppcheck => {
            let mut cmd = Command::new(bin);
            cmd.arg("--enable=warning,style,performance,portability")
                .arg("--inconclusive")
                .arg("--xml")
                .arg("--xml-version=2")
                .arg("--quiet")
                .arg(format!("--language={}", if hint == LanguageHint::Cpp { "c++" } else { "c" }))
                .arg(file);
            let out = run_with_timeout(tool, cmd, timeout)?;
            parse_cppcheck_xml(&out.stderr).map_err(|e| failed(e.to_string()))
        }
        Tool::ClangTidy => {
            let mut cmd = Command::new(bin);
            cmd.arg("--quiet")
                .arg(concat!(
                    "--checks=-*,clang-analyzer-*,bugprone-*,-bugprone-easily-swappable-parameters,cert-err33-c,",
                    "cppcoreguidelines-init-variables,cppcoreguidelines-narrowing-conversions,",
                    "hicpp-multiway-paths-covered,misc-redundant-expression"
                ))
                .arg(file)
                .arg("--")
                .arg(if hint == LanguageHint::Cpp { "-std=c++17" } else { "-std=gnu11" });
            let out = run_with_timeout(tool, cmd, timeout)?;
            Ok(parse_clang_tidy(&out.stdout))
        }
        Tool::Infer => {
            let results = dir.join("infer-out");
            let mut cmd = Command::new(bin);
            cmd.arg("run")
                .arg("--results-dir")
                .arg(&results)
                .arg("--")
                .arg("clang")
                .arg("-c")
                .arg(file)
                .arg("-o")
                .arg(dir.join("unit.o"))
                .current_dir(dir);
            run_with_timeout(tool, cmd, timeout)?;
            let report = std::fs::read_to_string(results.join("report.json"))
                .map_err(|e| failed(format!("no report.json: {e}")))?;
            parse_infer_json(&report).map_err(|e| failed(e.to_string()))
        }
    }
}

/// Runs one analyzer on a function. The function is written with its
/// synthesized preamble to a private temporary directory; findings located
/// in the preamble are dropped and the rest are renumbered relative to the
/// original function.
pub fn run_analyzer(
    tool: Tool,
    source: &str,
    hint: LanguageHint,
    taxonomy: &Taxonomy,
    timeout: Duration,
) -> Result<Vec<Finding>, AnalyzerError> {
    if timeout.is_zero() {
        return Err(AnalyzerError::Failed { tool, reason: "timeout must be positive".into() });
    }
    let bin = resolve_tool(tool)?;
    let failed = |reason: String| AnalyzerError::Failed { tool, reason };
    let preamble = synthesize_preamble(source, hint).map_err(|e| failed(e.to_string()))?;
    let dir = tempfile::tempdir().map_err(|e| failed(e.to_string()))?;
    let file = dir.path().join(if hint == LanguageHint::Cpp { "unit.cpp" } else { "unit.c" });
    std::fs::write(&file, &preamble.source_with_preamble).map_err(|e| failed(e.to_string()))?;
    let raw = invoke(tool, &bin, &file, dir.path(), hint, timeout)?;
    Ok(normalize(raw, preamble.preamble_lines as u32, taxonomy))
}

/// Turns raw tool output into findings on the original function: drops
/// anything located in the first `preamble_lines` lines, renumbers the
/// rest, categorizes, and discards style-class diagnostics the taxonomy
/// does not recognize.
pub fn normalize(raw: Vec<RawFinding>, preamble_lines: u32, taxonomy: &Taxonomy) -> Vec<Finding> {
    raw.into_iter()
        .filter(|r| r.line == 0 || r.line > preamble_lines)
        .filter_map(|mut r| {
            r.line = r.line.saturating_sub(preamble_lines);
            let advisory = r.advisory;
            let f = taxonomy.categorize(r);
            (!advisory || f.category != UNCATEGORIZED).then_some(f)
        })
        .collect()
}

/// Runs every tool on every function on a bounded pool (one worker per
/// processor, at most 8). Output order follows input order.
pub fn validate_pairs(
    items: &[(String, String, LanguageHint)],
    tools: &[Tool],
    taxonomy: &Taxonomy,
    timeout: Duration,
) -> Vec<PairValidation> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let run = || {
        items
            .par_iter()
            .map(|(pair_id, source, hint)| {
                let outcomes = tools
                    .iter()
                    .map(|&t| (t, ToolOutcome::from(run_analyzer(t, source, *hint, taxonomy, timeout))))
                    .collect();
                PairValidation { pair_id: pair_id.clone(), outcomes }
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}
