//! Mapping from tool check ids and messages to residual-risk categories.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Finding, RawFinding};

pub const UNCATEGORIZED: &str = "uncategorized";

pub const DEFAULT_CATEGORIES: [&str; 13] = [
    "uninitialized-variable",
    "dead-store",
    "unsafe-realloc",
    "null-pointer-dereference",
    "invalid-pointer",
    "resource-leak",
    "memory-leak",
    "uninitialized-value",
    "return-misuse",
    "missing-default",
    "integer-truncation",
    "allocation-overflow",
    "control-flow-issue",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    /// Case-sensitive substring of the tool's check id.
    CheckId,
    /// Case-insensitive substring of the message.
    Keyword,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub category: String,
    pub match_kind: MatchKind,
    pub patterns: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("pattern {pattern:?} maps to both {first:?} and {second:?}")]
    Ambiguous { pattern: String, first: String, second: String },
    #[error("rule for {0:?} has no patterns")]
    EmptyRule(String),
}

/// Ordered rules; the first match wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Taxonomy {
    rules: Vec<Rule>,
}

fn rule(category: &str, kind: MatchKind, patterns: &[&str]) -> Rule {
    Rule { category: category.into(), match_kind: kind, patterns: patterns.iter().map(|p| p.to_string()).collect() }
}

impl Default for Taxonomy {
    fn default() -> Self {
        use MatchKind::{CheckId, Keyword};
        // Message rules first: a few checks (clang's unix.Malloc, infer's
        // PULSE family) cover several categories under one id.
        let rules = vec![
            rule("unsafe-realloc", Keyword, &["common realloc mistake"]),
            rule("invalid-pointer", Keyword, &["use of memory after it is freed", "after it is deallocated", "dangling", "attempt to free released memory"]),
            rule("memory-leak", Keyword, &["potential leak of memory", "potential memory leak"]),
            rule("unsafe-realloc", CheckId, &["memleakOnRealloc", "suspicious-realloc-usage"]),
            rule("null-pointer-dereference", CheckId, &["nullPointer", "ctunullpointer", "NullDereference", "NonNullParamChecker", "NULL_DEREFERENCE", "NULLPTR_DEREFERENCE"]),
            rule("invalid-pointer", CheckId, &["deallocuse", "deallocret", "doubleFree", "invalidLifetime", "danglingLifetime", "returnDanglingLifetime", "autoVariables", "StackAddressEscape", "USE_AFTER_FREE", "USE_AFTER_DELETE", "USE_AFTER_LIFETIME", "invalidPointerCast"]),
            rule("resource-leak", CheckId, &["resourceLeak", "RESOURCE_LEAK", "unix.Stream"]),
            rule("memory-leak", CheckId, &["memleak", "MEMORY_LEAK", "leakReturnValNotUsed"]),
            rule("uninitialized-value", CheckId, &["core.uninitialized", "core.CallAndMessage", "UNINITIALIZED_VALUE", "PULSE_UNINITIALIZED_VALUE"]),
            rule("uninitialized-variable", CheckId, &["uninitvar", "uninitdata", "uninitStructMember", "legacyUninitvar", "init-variables"]),
            rule("dead-store", CheckId, &["DeadStores", "DEAD_STORE", "unreadVariable", "redundantAssignment", "redundantInitialization"]),
            rule("return-misuse", CheckId, &["ignoredReturnValue", "unused-return-value", "err33-c", "missingReturn", "CHECKERS_RETURN"]),
            rule("missing-default", CheckId, &["switch-missing-default-case", "multiway-paths-covered", "missingDefault"]),
            rule("integer-truncation", CheckId, &["narrowing-conversions", "truncLongCast"]),
            rule("allocation-overflow", CheckId, &["implicit-widening-of-multiplication-result", "MallocSizeof", "INFERBO_ALLOC", "allocaCalled"]),
            rule("control-flow-issue", CheckId, &["knownConditionTrueFalse", "duplicateCondition", "duplicateExpression", "identicalConditionAfterEarlyExit", "duplicateBranch", "unreachableCode", "branch-clone", "redundant-expression", "UnreachableCode", "CONDITION_ALWAYS", "UNREACHABLE_CODE"]),
        ];
        Taxonomy::new(rules).expect("built-in taxonomy is unambiguous")
    }
}

impl Taxonomy {
    /// Validates that no pattern (per match kind) names two categories.
    pub fn new(rules: Vec<Rule>) -> Result<Self, TaxonomyError> {
        let mut seen: HashMap<(MatchKind, String), &str> = HashMap::new();
        for r in &rules {
            if r.patterns.is_empty() {
                return Err(TaxonomyError::EmptyRule(r.category.clone()));
            }
            for p in &r.patterns {
                let key = match r.match_kind {
                    MatchKind::CheckId => p.clone(),
                    MatchKind::Keyword => p.to_lowercase(),
                };
                if let Some(prev) = seen.insert((r.match_kind, key), &r.category) {
                    if prev != r.category {
                        return Err(TaxonomyError::Ambiguous {
                            pattern: p.clone(),
                            first: prev.to_string(),
                            second: r.category.clone(),
                        });
                    }
                }
            }
        }
        Ok(Taxonomy { rules })
    }

    /// Loads a JSON list of `{category, match_kind, patterns}`.
    pub fn from_file(path: &Path) -> Result<Self, TaxonomyError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| TaxonomyError::Io { path: shown.clone(), source })?;
        let rules: Vec<Rule> = serde_json::from_str(&text).map_err(|source| TaxonomyError::Json { path: shown, source })?;
        Self::new(rules)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Distinct categories in rule order.
    pub fn categories(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rules {
            if !out.contains(&r.category.as_str()) {
                out.push(&r.category);
            }
        }
        out
    }

    pub fn category_of(&self, raw_id: &str, message: &str) -> &str {
        let lower = message.to_lowercase();
        for r in &self.rules {
            let hit = match r.match_kind {
                MatchKind::CheckId => r.patterns.iter().any(|p| raw_id.contains(p.as_str())),
                MatchKind::Keyword => r.patterns.iter().any(|p| lower.contains(&p.to_lowercase())),
            };
            if hit {
                return &r.category;
            }
        }
        UNCATEGORIZED
    }

    pub fn categorize(&self, raw: RawFinding) -> Finding {
        let category = self.category_of(&raw.raw_id, &raw.message).to_string();
        Finding { tool: raw.tool, raw_id: raw.raw_id, category, severity: raw.severity, line: raw.line, message: raw.message }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staticval::{Severity, Tool};

    #[test]
    fn default_covers_all_categories() {
        let t = Taxonomy::default();
        let mut cats = t.categories();
        cats.sort();
        let mut expected = DEFAULT_CATEGORIES.to_vec();
        expected.sort();
        assert_eq!(cats, expected);
    }

    #[test]
    fn examples() {
        let t = Taxonomy::default();
        assert_eq!(t.category_of("nullPointer", "Null pointer dereference: p"), "null-pointer-dereference");
        assert_eq!(t.category_of("clang-analyzer-deadcode.DeadStores", "Value stored to 'x' is never read"), "dead-store");
        assert_eq!(t.category_of("xyz.custom", "something"), UNCATEGORIZED);
        assert_eq!(t.category_of("clang-analyzer-unix.Malloc", "Potential leak of memory pointed to by 'p'"), "memory-leak");
        assert_eq!(t.category_of("memleakOnRealloc", "Common realloc mistake: 'buf' nulled but not freed upon failure"), "unsafe-realloc");
    }

    #[test]
    fn ambiguity_rejected() {
        let rules = vec![
            rule("a", MatchKind::Keyword, &["Leak"]),
            rule("b", MatchKind::Keyword, &["leak"]),
        ];
        assert!(matches!(Taxonomy::new(rules), Err(TaxonomyError::Ambiguous { .. })));
        // same pattern under different kinds is fine
        let rules = vec![rule("a", MatchKind::Keyword, &["leak"]), rule("b", MatchKind::CheckId, &["leak"])];
        assert!(Taxonomy::new(rules).is_ok());
    }

    #[test]
    fn loads_mapping_file() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), r#"[{"category":"custom","match_kind":"check_id","patterns":["xyz."]}]"#).unwrap();
        let t = Taxonomy::from_file(f.path()).unwrap();
        let raw = RawFinding { tool: Tool::Infer, raw_id: "xyz.custom".into(), severity: Severity::Error, line: 3, message: "m".into(), advisory: false };
        assert_eq!(t.categorize(raw).category, "custom");
    }
}
