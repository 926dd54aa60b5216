use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{PairValidation, Severity, Tool, ToolOutcome, UNCATEGORIZED};

/// Per-pair tool agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Agreement {
    /// Every requested tool ran and all share at least one category.
    Full,
    /// Some tool flagged the pair, short of full agreement.
    Partial,
    /// No tool flagged the pair.
    None,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CategoryCount {
    pub findings: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub tools: Vec<Tool>,
    pub min_severity: Severity,
    pub n_selected: usize,
    /// Pairs where at least one tool produced a result.
    pub n_analyzed: usize,
    /// Pairs left out because no tool could run on them.
    pub n_excluded: usize,
    pub pct_flagged_any: f64,
    pub pct_flagged_two: f64,
    pub pct_flagged_all: f64,
    pub pct_clean: f64,
    pub per_category: BTreeMap<String, CategoryCount>,
    pub per_pair: BTreeMap<String, Agreement>,
    /// Per tool, how many analyzed pairs it could not produce a result for.
    pub tool_gaps: BTreeMap<Tool, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SummaryError {
    #[error("no pairs selected for validation")]
    Empty,
}

/// Agreement statistics over analyzed pairs. "Flagged by two" counts pairs
/// flagged by at least two distinct tools regardless of category; "all"
/// requires every requested tool to have run and flagged the pair, so it
/// nests inside "two" whenever two or more tools are requested.
pub fn summarize(pairs: &[PairValidation], tools: &[Tool], min_severity: Severity) -> Result<ValidationSummary, SummaryError> {
    if pairs.is_empty() {
        return Err(SummaryError::Empty);
    }
    let mut per_category: BTreeMap<String, CategoryCount> = BTreeMap::new();
    let mut per_pair = BTreeMap::new();
    let mut tool_gaps: BTreeMap<Tool, usize> = tools.iter().map(|&t| (t, 0)).collect();
    let (mut analyzed, mut any, mut two, mut all) = (0usize, 0usize, 0usize, 0usize);

    for p in pairs {
        let ran: Vec<(Tool, Vec<&super::Finding>)> = tools
            .iter()
            .filter_map(|t| match p.outcomes.get(t) {
                Some(ToolOutcome::Findings { findings }) => {
                    Some((*t, findings.iter().filter(|f| f.severity >= min_severity).collect()))
                }
                _ => None,
            })
            .collect();
        if ran.is_empty() {
            continue;
        }
        analyzed += 1;
        for t in tools {
            if !ran.iter().any(|(r, _)| r == t) {
                *tool_gaps.entry(*t).or_default() += 1;
            }
        }

        let flagged = ran.iter().filter(|(_, f)| !f.is_empty()).count();
        any += usize::from(flagged >= 1);
        two += usize::from(flagged >= 2);
        let every = ran.len() == tools.len() && flagged == tools.len();
        all += usize::from(every);

        let mut pair_cats = BTreeSet::new();
        for (_, fs) in &ran {
            for f in fs {
                per_category.entry(f.category.clone()).or_default().findings += 1;
                pair_cats.insert(f.category.clone());
            }
        }
        for c in pair_cats {
            per_category.entry(c).or_default().pairs += 1;
        }

        let shared = every && {
            let mut sets = ran.iter().map(|(_, fs)| {
                fs.iter().map(|f| f.category.as_str()).filter(|c| *c != UNCATEGORIZED).collect::<BTreeSet<_>>()
            });
            let first = sets.next().unwrap_or_default();
            sets.fold(first, |acc, s| acc.intersection(&s).copied().collect()).into_iter().next().is_some()
        };
        let agreement = if shared {
            Agreement::Full
        } else if flagged > 0 {
            Agreement::Partial
        } else {
            Agreement::None
        };
        per_pair.insert(p.pair_id.clone(), agreement);
    }

    let pct = |k: usize| if analyzed == 0 { 0.0 } else { 100.0 * k as f64 / analyzed as f64 };
    Ok(ValidationSummary {
        tools: tools.to_vec(),
        min_severity,
        n_selected: pairs.len(),
        n_analyzed: analyzed,
        n_excluded: pairs.len() - analyzed,
        pct_flagged_any: pct(any),
        pct_flagged_two: pct(two),
        pct_flagged_all: pct(all),
        pct_clean: if analyzed == 0 { 0.0 } else { 100.0 - pct(any) },
        per_category,
        per_pair,
        tool_gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staticval::Finding;

    fn f(tool: Tool, cat: &str) -> Finding {
        Finding { tool, raw_id: "x".into(), category: cat.into(), severity: Severity::Warning, line: 1, message: "m".into() }
    }

    fn pair(id: &str, per_tool: [Option<&[&str]>; 3]) -> PairValidation {
        let outcomes = Tool::ALL
            .iter()
            .zip(per_tool)
            .map(|(&t, cats)| {
                let o = match cats {
                    Some(cs) => ToolOutcome::Findings { findings: cs.iter().map(|c| f(t, c)).collect() },
                    None => ToolOutcome::Unavailable { reason: "missing".into() },
                };
                (t, o)
            })
            .collect();
        PairValidation { pair_id: id.into(), outcomes }
    }

    #[test]
    fn agreement_levels() {
        let np = "null-pointer-dereference";
        let pairs = vec![
            pair("full", [Some(&[np]), Some(&[np]), Some(&[np])]),
            pair("two", [Some(&["uninitialized-variable"]), Some(&[]), Some(&["uninitialized-variable"])]),
            pair("one", [Some(&[]), Some(&["return-misuse"]), Some(&[])]),
            pair("clean", [Some(&[]), Some(&[]), Some(&[])]),
            pair("mixed", [Some(&[np]), Some(&["dead-store"]), Some(&[np])]),
        ];
        let s = summarize(&pairs, &Tool::ALL, Severity::Warning).unwrap();
        assert_eq!(s.per_pair["full"], Agreement::Full);
        assert_eq!(s.per_pair["two"], Agreement::Partial);
        assert_eq!(s.per_pair["one"], Agreement::Partial);
        assert_eq!(s.per_pair["clean"], Agreement::None);
        assert_eq!(s.per_pair["mixed"], Agreement::Partial);
        assert_eq!((s.pct_flagged_any, s.pct_flagged_two, s.pct_flagged_all, s.pct_clean), (80.0, 60.0, 40.0, 20.0));
        assert_eq!(s.per_category[np], CategoryCount { findings: 5, pairs: 2 });
    }

    #[test]
    fn unavailable_tools_are_gaps_not_clean() {
        let pairs = vec![
            pair("a", [Some(&["dead-store"]), Some(&["dead-store"]), None]),
            pair("b", [None, None, None]),
        ];
        let s = summarize(&pairs, &Tool::ALL, Severity::Warning).unwrap();
        assert_eq!((s.n_analyzed, s.n_excluded), (1, 1));
        assert_eq!(s.tool_gaps[&Tool::Infer], 1);
        assert_eq!(s.per_pair["a"], Agreement::Partial);
        assert_eq!(s.pct_flagged_all, 0.0);
        assert_eq!(s.pct_flagged_two, 100.0);
    }

    #[test]
    fn severity_filter() {
        let pairs = vec![pair("a", [Some(&["dead-store"]), Some(&[]), Some(&[])])];
        let s = summarize(&pairs, &Tool::ALL, Severity::Error).unwrap();
        assert_eq!(s.pct_clean, 100.0);
    }

    #[test]
    fn empty_selection() {
        assert_eq!(summarize(&[], &Tool::ALL, Severity::Warning).unwrap_err(), SummaryError::Empty);
    }
}
