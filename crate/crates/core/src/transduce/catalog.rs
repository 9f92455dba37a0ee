//! Named transformation rules: a tree query plus an edit-script template.
//!
//! Templates may contain `{var}` placeholders that are filled with bracketed
//! trees at application time, e.g. `insert {aux} before verb`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::treequery::{compile_pattern, parse_edit_script, EditError, EditScript, Pattern, PatternError};

const DEFAULT_CATALOG: &str = include_str!("../../rules/default_catalog.json");

/// Rules the transducer looks up by id.
pub const REQUIRED_RULES: [&str; 9] = [
    "decompose",
    "invert",
    "wh-substitute",
    "front",
    "drop-comma",
    "recase",
    "question-mark",
    "question-mark-append",
    "substitute-distractor",
];

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("rule catalog is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read rule catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("rule catalog lacks rule {0}")]
    MissingRule(String),
    #[error("rule {rule}: {source}")]
    Pattern {
        rule: String,
        #[source]
        source: PatternError,
    },
    #[error("rule {rule}: {source}")]
    Script {
        rule: String,
        #[source]
        source: EditError,
    },
    #[error("rule {rule}: edit script uses {name}, which the pattern does not capture")]
    UncapturedName { rule: String, name: String },
    #[error("rule {rule}: unterminated or unknown placeholder in {template:?}")]
    Placeholder { rule: String, template: String },
}

#[derive(Debug, Deserialize)]
struct RawRule {
    pattern: String,
    edits: String,
}

#[derive(Debug, Clone)]
pub struct CatalogRule {
    pub id: String,
    pub pattern: Pattern,
    pub edits: String,
}

impl CatalogRule {
    /// Fills placeholders and parses the resulting script.
    pub fn script(&self, vars: &[(&str, String)]) -> Result<(String, EditScript), CatalogError> {
        let text = fill(&self.id, &self.edits, vars)?;
        let script = parse_edit_script(&text).map_err(|source| CatalogError::Script {
            rule: self.id.clone(),
            source,
        })?;
        Ok((text, script))
    }

    pub fn placeholders(&self) -> Vec<String> {
        placeholders(&self.edits)
    }
}

fn placeholders(template: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else { break };
        out.push(rest[open + 1..open + close].to_string());
        rest = &rest[open + close + 1..];
    }
    out
}

fn fill(rule: &str, template: &str, vars: &[(&str, String)]) -> Result<String, CatalogError> {
    let mut out = template.to_string();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    if out.contains('{') || out.contains('}') {
        return Err(CatalogError::Placeholder {
            rule: rule.to_string(),
            template: template.to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RuleCatalog {
    rules: BTreeMap<String, CatalogRule>,
}

impl RuleCatalog {
    pub fn builtin() -> RuleCatalog {
        RuleCatalog::from_json(DEFAULT_CATALOG).expect("built-in rule catalog is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RuleCatalog, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RuleCatalog::from_json(&text)
    }

    /// Parses and checks a catalog: every required rule present, patterns
    /// compile, scripts parse with placeholders filled, and every name the
    /// script touches is captured by the pattern.
    pub fn from_json(text: &str) -> Result<RuleCatalog, CatalogError> {
        let raw: BTreeMap<String, RawRule> = serde_json::from_str(text)?;
        let mut rules = BTreeMap::new();
        for (id, r) in raw {
            let pattern = compile_pattern(&r.pattern).map_err(|source| CatalogError::Pattern {
                rule: id.clone(),
                source,
            })?;
            let rule = CatalogRule {
                id: id.clone(),
                pattern,
                edits: r.edits,
            };
            let dummy: Vec<(String, String)> = rule
                .placeholders()
                .into_iter()
                .map(|p| (p, "(X x)".to_string()))
                .collect();
            let dummy: Vec<(&str, String)> = dummy.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
            let (_, script) = rule.script(&dummy)?;
            for name in script.names() {
                if !rule.pattern.captures().iter().any(|c| c == name) {
                    return Err(CatalogError::UncapturedName {
                        rule: id.clone(),
                        name: name.to_string(),
                    });
                }
            }
            rules.insert(id, rule);
        }
        for id in REQUIRED_RULES {
            if !rules.contains_key(id) {
                return Err(CatalogError::MissingRule(id.to_string()));
            }
        }
        Ok(RuleCatalog { rules })
    }

    pub fn get(&self, id: &str) -> Option<&CatalogRule> {
        self.rules.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }
}

impl Default for RuleCatalog {
    fn default() -> Self {
        RuleCatalog::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads() {
        let c = RuleCatalog::builtin();
        assert_eq!(c.ids().count(), REQUIRED_RULES.len());
        let (text, script) = c
            .get("decompose")
            .unwrap()
            .script(&[("aux", "(VBZ does)".into()), ("base", "(VB show)".into())])
            .unwrap();
        assert_eq!(text, "insert (VBZ does) before verb; insert (VB show) before verb; delete verb");
        assert_eq!(script.commands.len(), 3);
    }

    #[test]
    fn rejects_bad_catalogs() {
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CATALOG).unwrap();
        v.as_object_mut().unwrap().remove("invert");
        assert!(matches!(
            RuleCatalog::from_json(&v.to_string()),
            Err(CatalogError::MissingRule(r)) if r == "invert"
        ));

        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CATALOG).unwrap();
        v["front"]["edits"] = "move nowhere first-child clause".into();
        assert!(matches!(
            RuleCatalog::from_json(&v.to_string()),
            Err(CatalogError::UncapturedName { .. })
        ));

        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CATALOG).unwrap();
        v["front"]["pattern"] = "S <? x".into();
        assert!(matches!(RuleCatalog::from_json(&v.to_string()), Err(CatalogError::Pattern { .. })));
    }

    #[test]
    fn unfilled_placeholder_is_error() {
        let c = RuleCatalog::builtin();
        assert!(matches!(
            c.get("recase").unwrap().script(&[]),
            Err(CatalogError::Placeholder { .. })
        ));
    }
}
