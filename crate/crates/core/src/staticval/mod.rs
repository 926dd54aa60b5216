//! Static-analyzer validation of high-risk benign functions.

mod parsers;
mod preamble;
mod runner;
mod summary;
mod taxonomy;

use serde::{Deserialize, Serialize};

pub use parsers::{parse_clang_tidy, parse_cppcheck_xml, parse_infer_json, ReportError};
pub use preamble::{synthesize_preamble, HelperPreamble};
pub use runner::{normalize, resolve_tool, run_analyzer, validate_pairs, AnalyzerError, PairValidation, ToolOutcome};
pub use summary::{summarize, Agreement, CategoryCount, SummaryError, ValidationSummary};
pub use taxonomy::{MatchKind, Rule, Taxonomy, TaxonomyError, DEFAULT_CATEGORIES, UNCATEGORIZED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tool {
    Cppcheck,
    ClangTidy,
    Infer,
}

impl Tool {
    pub const ALL: [Tool; 3] = [Tool::Cppcheck, Tool::ClangTidy, Tool::Infer];

    pub fn name(&self) -> &'static str {
        match self {
            Tool::Cppcheck => "cppcheck",
            Tool::ClangTidy => "clang-tidy",
            Tool::Infer => "infer",
        }
    }

    /// Environment variable that overrides executable discovery.
    pub fn env_var(&self) -> &'static str {
        match self {
            Tool::Cppcheck => "RRS_CPPCHECK_BIN",
            Tool::ClangTidy => "RRS_CLANG_TIDY_BIN",
            Tool::Infer => "RRS_INFER_BIN",
        }
    }
}

impl std::fmt::Display for Tool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Tool {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "cppcheck" => Ok(Tool::Cppcheck),
            "clang-tidy" | "clang_tidy" => Ok(Tool::ClangTidy),
            "infer" => Ok(Tool::Infer),
            other => Err(format!("unknown tool {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

impl std::str::FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "warning" => Ok(Severity::Warning),
            "error" => Ok(Severity::Error),
            other => Err(format!("unknown severity {other:?}")),
        }
    }
}

/// A tool diagnostic before categorization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawFinding {
    pub tool: Tool,
    pub raw_id: String,
    pub severity: Severity,
    pub line: u32,
    pub message: String,
    /// Style-class diagnostic (cppcheck style/performance/portability).
    /// Kept only if the taxonomy recognizes it.
    #[serde(default)]
    pub advisory: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub tool: Tool,
    pub raw_id: String,
    pub category: String,
    pub severity: Severity,
    pub line: u32,
    pub message: String,
}
