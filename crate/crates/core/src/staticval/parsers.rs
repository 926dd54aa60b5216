//! Readers for the three analyzers' machine-readable output.

use serde::Deserialize;

use super::{RawFinding, Severity, Tool};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cppcheck XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("cppcheck XML: {0}")]
    XmlShape(String),
    #[error("infer report: {0}")]
    Json(#[from] serde_json::Error),
}

/// Parses `cppcheck --xml --xml-version=2` output. `information` entries
/// (missing includes, checker reports) are not findings and are skipped.
pub fn parse_cppcheck_xml(text: &str) -> Result<Vec<RawFinding>, ReportError> {
    let doc = roxmltree::Document::parse(text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "results" {
        return Err(ReportError::XmlShape(format!("root element is <{}>", root.tag_name().name())));
    }
    let mut out = Vec::new();
    for err in root.descendants().filter(|n| n.has_tag_name("error")) {
        let level = err.attribute("severity").unwrap_or("");
        let severity = match level {
            "information" | "none" | "debug" => continue,
            "error" => Severity::Error,
            _ => Severity::Warning,
        };
        let line = err
            .children()
            .find(|n| n.has_tag_name("location"))
            .and_then(|l| l.attribute("line"))
            .and_then(|l| l.parse().ok())
            .unwrap_or(0);
        out.push(RawFinding {
            tool: Tool::Cppcheck,
            raw_id: err.attribute("id").unwrap_or_default().to_string(),
            severity,
            line,
            message: err.attribute("msg").unwrap_or_default().to_string(),
            advisory: matches!(level, "style" | "performance" | "portability"),
        });
    }
    Ok(out)
}

/// Parses clang-tidy's diagnostic lines,
/// `file:line:col: warning|error: message [check-name]`. Notes and the
/// source/caret echo lines are ignored.
pub fn parse_clang_tidy(text: &str) -> Vec<RawFinding> {
    let mut out = Vec::new();
    for line in text.lines() {
        let (head, severity, rest) = if let Some((h, r)) = line.split_once(": warning: ") {
            (h, Severity::Warning, r)
        } else if let Some((h, r)) = line.split_once(": error: ") {
            (h, Severity::Error, r)
        } else {
            continue;
        };
        // head is file:line:col; file names may themselves contain ':'
        let mut parts = head.rsplitn(3, ':');
        let (Some(_col), Some(line_no), Some(_file)) = (parts.next(), parts.next(), parts.next()) else {
            continue;
        };
        let Ok(line_no) = line_no.parse::<u32>() else { continue };
        let (message, raw_id) = match rest.rfind(" [") {
            Some(i) if rest.ends_with(']') => {
                let checks = &rest[i + 2..rest.len() - 1];
                (&rest[..i], checks.split(',').next().unwrap_or(checks))
            }
            _ => (rest, ""),
        };
        out.push(RawFinding {
            tool: Tool::ClangTidy,
            raw_id: raw_id.to_string(),
            severity,
            line: line_no,
            message: message.to_string(),
            advisory: false,
        });
    }
    out
}

#[derive(Deserialize)]
struct InferIssue {
    bug_type: String,
    #[serde(default)]
    qualifier: String,
    #[serde(default)]
    severity: String,
    #[serde(default)]
    line: i64,
}

/// Parses infer's `report.json`; only ERROR and WARNING issues count.
pub fn parse_infer_json(text: &str) -> Result<Vec<RawFinding>, ReportError> {
    let issues: Vec<InferIssue> = serde_json::from_str(text)?;
    Ok(issues
        .into_iter()
        .filter_map(|i| {
            let severity = match i.severity.as_str() {
                "ERROR" => Severity::Error,
                "WARNING" => Severity::Warning,
                _ => return None,
            };
            Some(RawFinding {
                tool: Tool::Infer,
                raw_id: i.bug_type,
                severity,
                line: u32::try_from(i.line).unwrap_or(0),
                message: i.qualifier,
                advisory: false,
            })
        })
        .collect())
}
