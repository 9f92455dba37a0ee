//! Splitting long caption sentences into short declarative clauses.
//!
//! Four rewrite rules run to a fixpoint, first applicable rule first:
//!
//! * `R1` clause coordination: `(S (S a) (CC and) (S b))` gives `a.` and `b.`
//! * `R2` non-restrictive subject relative: `NP , (SBAR (WHNP which) (S VP))`
//!   gives the clause without it plus `NP VP.`
//! * `R3` appositive: `NP , NP ,` gives the clause without it plus `NP is NP.`
//! * `R4` participial: `NP , (VP VBG ...)` or a clause-final `, (VP VBG ...)`
//!   gives the clause without it plus `NP is VBG ....`
//!
//! Sentences that trigger no rule pass through unchanged. Outputs of a rule
//! lose their clause-level punctuation and end in a period.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedSentence;
use crate::syntax::{clause_parts, copula_for, is_clause, is_participial_vp, is_punct, is_pronoun_np};
use crate::text::capitalize_first;
use crate::tree::{Node, NodeId, ParseTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplifyRule {
    Identity,
    CoordinationSplit,
    RelativeClause,
    Appositive,
    Participial,
}

impl SimplifyRule {
    /// Stable id recorded in QA provenance.
    pub fn id(self) -> &'static str {
        match self {
            SimplifyRule::Identity => "identity",
            SimplifyRule::CoordinationSplit => "R1",
            SimplifyRule::RelativeClause => "R2",
            SimplifyRule::Appositive => "R3",
            SimplifyRule::Participial => "R4",
        }
    }
}

impl fmt::Display for SimplifyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleSentence {
    pub tree: ParseTree,
    pub source_rule: SimplifyRule,
}

impl SimpleSentence {
    pub fn text(&self) -> String {
        crate::text::realize(&self.tree.words(self.tree.root()))
    }
}

/// Simplifies one annotated sentence. Sentences without a usable parse
/// yield nothing; fragments that are not clauses pass through as identity.
pub fn simplify(sentence: &AnnotatedSentence) -> Vec<SimpleSentence> {
    match sentence.tree() {
        Some(tree) => simplify_tree(&tree),
        None => Vec::new(),
    }
}

pub fn simplify_tree(tree: &ParseTree) -> Vec<SimpleSentence> {
    let content = tree.subtree(tree.content_root());
    let mut out = Vec::new();
    expand(content, SimplifyRule::Identity, 0, &mut out);
    out
}

const MAX_DEPTH: usize = 16;

fn expand(tree: ParseTree, rule: SimplifyRule, depth: usize, out: &mut Vec<SimpleSentence>) {
    if depth < MAX_DEPTH && tree.label(tree.root()) == "S" {
        if let Some((fired, parts)) = apply_first_rule(&tree) {
            for part in parts {
                expand(part, fired, depth + 1, out);
            }
            return;
        }
    }
    out.push(SimpleSentence {
        tree,
        source_rule: rule,
    });
}

fn apply_first_rule(tree: &ParseTree) -> Option<(SimplifyRule, Vec<ParseTree>)> {
    if let Some(parts) = coordination_split(tree) {
        return Some((SimplifyRule::CoordinationSplit, parts));
    }
    for id in tree.ids() {
        if tree.label(id) != "NP" {
            continue;
        }
        if let Some(parts) = relative_clause(tree, id) {
            return Some((SimplifyRule::RelativeClause, parts));
        }
        if let Some(parts) = appositive(tree, id) {
            return Some((SimplifyRule::Appositive, parts));
        }
        if let Some(parts) = nominal_participial(tree, id) {
            return Some((SimplifyRule::Participial, parts));
        }
    }
    clause_final_participial(tree).map(|parts| (SimplifyRule::Participial, parts))
}

fn content_kids(tree: &ParseTree, id: NodeId) -> Vec<NodeId> {
    tree.children(id)
        .iter()
        .copied()
        .filter(|&c| !is_punct(tree.label(c)))
        .collect()
}

/// Drops clause-level punctuation, appends a period and capitalizes the
/// first word.
fn finalize(node: Node) -> Option<ParseTree> {
    let mut children = match node {
        Node::Phrase { label, children } if label == "S" => children,
        _ => return None,
    };
    children.retain(|c| !is_punct(c.label()));
    children.push(Node::leaf(".", "."));
    let mut tree = ParseTree::from_node(Node::phrase("S", children));
    let first = *tree.leaves().first()?;
    let word = tree.nodes[first.0].word.clone().unwrap_or_default();
    tree.nodes[first.0].word = Some(capitalize_first(&word));
    Some(tree)
}

fn clause_node(subject: Node, vp: Node) -> Node {
    Node::phrase("S", vec![subject, vp])
}

fn copular_vp(tree: &ParseTree, subject: NodeId, predicate: Vec<Node>) -> Node {
    let (tag, word) = copula_for(tree, subject);
    let mut kids = vec![Node::leaf(tag, word)];
    kids.extend(predicate);
    Node::phrase("VP", kids)
}

fn coordination_split(tree: &ParseTree) -> Option<Vec<ParseTree>> {
    let root = tree.root();
    let kids = content_kids(tree, root);
    let clauses: Vec<NodeId> = kids.iter().copied().filter(|&k| tree.label(k) == "S").collect();
    let has_cc = kids.iter().any(|&k| tree.label(k) == "CC");
    let only_s_cc = kids.iter().all(|&k| matches!(tree.label(k), "S" | "CC"));
    if clauses.len() < 2 || !has_cc || !only_s_cc {
        return None;
    }
    if !clauses.iter().all(|&c| is_clause(tree, c)) {
        return None;
    }
    clauses
        .into_iter()
        .map(|c| finalize(tree.to_node(c)))
        .collect()
}

/// Main clause with `np` replaced by `replacement`, finalized.
fn main_clause(tree: &ParseTree, np: NodeId, replacement: Node) -> Option<ParseTree> {
    let rewritten = tree.rewrite(&[(np, Some(replacement))]).ok()?;
    finalize(rewritten.to_node(rewritten.root()))
}

/// Children of `np` as `[head NP, ",", X, optional ","]`.
fn np_comma_modifier(tree: &ParseTree, np: NodeId) -> Option<(NodeId, NodeId)> {
    let kids = tree.children(np);
    if !(kids.len() == 3 || kids.len() == 4) {
        return None;
    }
    if tree.label(kids[0]) != "NP" || tree.label(kids[1]) != "," {
        return None;
    }
    if kids.len() == 4 && tree.label(kids[3]) != "," {
        return None;
    }
    Some((kids[0], kids[2]))
}

fn relative_clause(tree: &ParseTree, np: NodeId) -> Option<Vec<ParseTree>> {
    let (head, sbar) = np_comma_modifier(tree, np)?;
    if tree.label(sbar) != "SBAR" || is_pronoun_np(tree, head) {
        return None;
    }
    let sbar_kids = tree.children(sbar);
    if sbar_kids.len() != 2 || tree.label(sbar_kids[0]) != "WHNP" || tree.label(sbar_kids[1]) != "S" {
        return None;
    }
    let rel = tree.words(sbar_kids[0]);
    if rel.len() != 1 || !matches!(rel[0].to_lowercase().as_str(), "which" | "who" | "that") {
        return None;
    }
    let inner = sbar_kids[1];
    let inner_kids = content_kids(tree, inner);
    if inner_kids.len() != 1 || tree.label(inner_kids[0]) != "VP" {
        return None;
    }
    let main = main_clause(tree, np, tree.to_node(head))?;
    let extra = finalize(clause_node(tree.to_node(head), tree.to_node(inner_kids[0])))?;
    Some(vec![main, extra])
}

fn appositive(tree: &ParseTree, np: NodeId) -> Option<Vec<ParseTree>> {
    let (head, appos) = np_comma_modifier(tree, np)?;
    if tree.label(appos) != "NP" || is_pronoun_np(tree, head) || is_pronoun_np(tree, appos) {
        return None;
    }
    let main = main_clause(tree, np, tree.to_node(head))?;
    let vp = copular_vp(tree, head, vec![tree.to_node(appos)]);
    let extra = finalize(clause_node(tree.to_node(head), vp))?;
    Some(vec![main, extra])
}

fn nominal_participial(tree: &ParseTree, np: NodeId) -> Option<Vec<ParseTree>> {
    let (head, vp) = np_comma_modifier(tree, np)?;
    if !is_participial_vp(tree, vp) || is_pronoun_np(tree, head) {
        return None;
    }
    let main = main_clause(tree, np, tree.to_node(head))?;
    let predicate = copular_vp(tree, head, tree.children(vp).iter().map(|&c| tree.to_node(c)).collect());
    let extra = finalize(clause_node(tree.to_node(head), predicate))?;
    Some(vec![main, extra])
}

fn clause_final_participial(tree: &ParseTree) -> Option<Vec<ParseTree>> {
    let (subject, vp) = clause_parts(tree, tree.root())?;
    if is_pronoun_np(tree, subject) {
        return None;
    }
    let kids = tree.children(vp);
    let last = *kids.last()?;
    if kids.len() < 3 || !is_participial_vp(tree, last) || tree.label(kids[kids.len() - 2]) != "," {
        return None;
    }
    let comma = kids[kids.len() - 2];
    let main = tree.rewrite(&[(comma, None), (last, None)]).ok()?;
    let main = finalize(main.to_node(main.root()))?;
    let predicate = copular_vp(
        tree,
        subject,
        tree.children(last).iter().map(|&c| tree.to_node(c)).collect(),
    );
    let extra = finalize(clause_node(tree.to_node(subject), predicate))?;
    Some(vec![main, extra])
}
