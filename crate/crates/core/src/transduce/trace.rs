use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::catalog::RuleCatalog;
use super::TransduceError;
use crate::tree::ParseTree;
use crate::treequery::{
    apply_edits, compile_pattern, find_all, parse_edit_script, EditError, MatchBinding, PatternError,
};

/// One rule application: which binding of `pattern` was used and the
/// edit script, with placeholders already filled in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub rule: String,
    pub pattern: String,
    pub match_index: usize,
    pub edits: String,
}

/// The sequence of rule applications that turned a clause into a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTrace {
    pub rule_id: String,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("step {step}: {source}")]
    Pattern {
        step: usize,
        #[source]
        source: PatternError,
    },
    #[error("step {step}: {source}")]
    Edit {
        step: usize,
        #[source]
        source: EditError,
    },
    #[error("step {step}: pattern has {found} matches, trace uses match {index}")]
    NoMatch { step: usize, index: usize, found: usize },
}

impl RuleTrace {
    /// Re-applies every step to `source`, which must be the clause the
    /// trace was recorded on.
    pub fn replay(&self, source: &ParseTree) -> Result<ParseTree, ReplayError> {
        let mut tree = source.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let pattern = compile_pattern(&step.pattern).map_err(|source| ReplayError::Pattern { step: i, source })?;
            let script = parse_edit_script(&step.edits).map_err(|source| ReplayError::Edit { step: i, source })?;
            let matches = find_all(&tree, &pattern);
            let binding = matches.get(step.match_index).ok_or(ReplayError::NoMatch {
                step: i,
                index: step.match_index,
                found: matches.len(),
            })?;
            tree = apply_edits(&tree, &script, binding).map_err(|source| ReplayError::Edit { step: i, source })?;
        }
        Ok(tree)
    }
}

/// Applies catalog rules to a working tree while recording the trace.
pub(crate) struct Tracer<'c> {
    catalog: &'c RuleCatalog,
    pub(crate) tree: ParseTree,
    steps: Vec<TraceStep>,
}

impl<'c> Tracer<'c> {
    pub(crate) fn new(catalog: &'c RuleCatalog, tree: ParseTree) -> Self {
        Tracer {
            catalog,
            tree,
            steps: Vec::new(),
        }
    }

    /// Applies `rule` using the first binding accepted by `select`.
    pub(crate) fn apply(
        &mut self,
        rule: &str,
        select: impl Fn(&MatchBinding) -> bool,
        vars: &[(&str, String)],
    ) -> Result<(), TransduceError> {
        let r = self
            .catalog
            .get(rule)
            .ok_or_else(|| TransduceError::MissingRule(rule.to_string()))?;
        let matches = find_all(&self.tree, &r.pattern);
        let match_index = matches
            .iter()
            .position(select)
            .ok_or_else(|| TransduceError::NoMatch(rule.to_string()))?;
        let (edits, script) = r.script(vars)?;
        self.tree = apply_edits(&self.tree, &script, &matches[match_index]).map_err(|source| {
            TransduceError::Edit {
                rule: rule.to_string(),
                source,
            }
        })?;
        self.steps.push(TraceStep {
            rule: rule.to_string(),
            pattern: r.pattern.source().to_string(),
            match_index,
            edits,
        });
        Ok(())
    }

    pub(crate) fn finish(self, rule_id: &str) -> (ParseTree, RuleTrace) {
        (
            self.tree,
            RuleTrace {
                rule_id: rule_id.to_string(),
                steps: self.steps,
            },
        )
    }
}
