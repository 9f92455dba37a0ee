//! Tree queries over [`ParseTree`]s and tree-surgery edit scripts.
//!
//! Queries use a small dominance/precedence language in the style of
//! Tregex; see `docs/treequery.md` for the grammar. Edit scripts are applied
//! to a binding produced by [`find_all`] and always yield a new tree.

mod edit;
mod pattern;

use std::collections::BTreeMap;

pub use edit::{apply_edits, parse_edit_script, EditCommand, EditError, EditScript, Position};
pub use pattern::{compile_pattern, Pattern, PatternError, Relation};

use crate::tree::{NodeId, ParseTree};
use pattern::{Constraint, NodePattern};

/// One match of a pattern: the node matched by the pattern head and the
/// nodes bound to each capture name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchBinding {
    pub root: NodeId,
    pub captures: BTreeMap<String, NodeId>,
}

impl MatchBinding {
    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.captures.get(name).copied()
    }
}

/// Precomputed structural facts used while matching.
pub(crate) struct TreeIndex<'t> {
    tree: &'t ParseTree,
    spans: Vec<(usize, usize)>,
}

impl<'t> TreeIndex<'t> {
    pub(crate) fn new(tree: &'t ParseTree) -> Self {
        TreeIndex {
            tree,
            spans: tree.leaf_spans(),
        }
    }

    fn sisters(&self, a: NodeId) -> (&[NodeId], usize) {
        match self.tree.parent(a) {
            Some(p) => {
                let kids = self.tree.children(p);
                let pos = kids.iter().position(|&k| k == a).expect("child of parent");
                (kids, pos)
            }
            None => (&[], 0),
        }
    }

    /// Every node `b` such that `a REL b` holds, in document order.
    pub(crate) fn related(&self, a: NodeId, rel: Relation) -> Vec<NodeId> {
        let t = self.tree;
        match rel {
            Relation::Parent => t.children(a).to_vec(),
            Relation::Child => t.parent(a).into_iter().collect(),
            Relation::Dominates => t.descendants(a).into_iter().skip(1).collect(),
            Relation::DominatedBy => {
                let mut v = t.ancestors(a);
                v.reverse();
                v
            }
            Relation::Sister => {
                let (kids, pos) = self.sisters(a);
                kids.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != pos)
                    .map(|(_, &k)| k)
                    .collect()
            }
            Relation::ImmediateLeftSister => {
                let (kids, pos) = self.sisters(a);
                kids.get(pos + 1).copied().into_iter().collect()
            }
            Relation::ImmediateRightSister => {
                let (kids, pos) = self.sisters(a);
                if pos > 0 {
                    kids.get(pos - 1).copied().into_iter().collect()
                } else {
                    Vec::new()
                }
            }
            Relation::LeftSister => {
                let (kids, pos) = self.sisters(a);
                kids.iter().skip(pos + 1).copied().collect()
            }
            Relation::RightSister => {
                let (kids, pos) = self.sisters(a);
                kids[..pos.min(kids.len())].to_vec()
            }
            Relation::ImmediatelyPrecedes
            | Relation::ImmediatelyFollows
            | Relation::Precedes
            | Relation::Follows => t.ids().filter(|&b| self.holds(a, rel, b)).collect(),
        }
    }

    /// Direct evaluation of the relation definition.
    pub(crate) fn holds(&self, a: NodeId, rel: Relation, b: NodeId) -> bool {
        let (a_first, a_last) = self.spans[a.0];
        let (b_first, b_last) = self.spans[b.0];
        match rel {
            Relation::ImmediatelyPrecedes => a_last + 1 == b_first,
            Relation::ImmediatelyFollows => b_last + 1 == a_first,
            Relation::Precedes => a_last < b_first,
            Relation::Follows => b_last < a_first,
            other => self.related(a, other).contains(&b),
        }
    }
}

type Bindings = BTreeMap<String, NodeId>;

fn match_node(idx: &TreeIndex<'_>, node: NodeId, pat: &NodePattern, b: &Bindings) -> Vec<Bindings> {
    if !pat.label_matches(idx.tree.label(node)) {
        return Vec::new();
    }
    let mut start = b.clone();
    if let Some(name) = &pat.capture {
        start.insert(name.clone(), node);
    }
    satisfy(idx, node, &pat.constraint, start)
}

fn satisfy(idx: &TreeIndex<'_>, node: NodeId, c: &Constraint, b: Bindings) -> Vec<Bindings> {
    match c {
        Constraint::And(cs) => {
            let mut partial = vec![b];
            for c in cs {
                partial = partial
                    .into_iter()
                    .flat_map(|b| satisfy(idx, node, c, b))
                    .collect();
                if partial.is_empty() {
                    break;
                }
            }
            partial
        }
        Constraint::Or(cs) => cs
            .iter()
            .flat_map(|c| satisfy(idx, node, c, b.clone()))
            .collect(),
        Constraint::Rel {
            relation,
            negated,
            target,
        } => {
            let candidates = idx.related(node, *relation);
            if *negated {
                let any = candidates
                    .into_iter()
                    .any(|cand| !match_node(idx, cand, target, &b).is_empty());
                if any {
                    Vec::new()
                } else {
                    vec![b]
                }
            } else {
                candidates
                    .into_iter()
                    .flat_map(|cand| match_node(idx, cand, target, &b))
                    .collect()
            }
        }
    }
}

/// All bindings of `pattern` in `tree`, ordered by the preorder position of
/// the matched root and then by enumeration order of the captures.
pub fn find_all(tree: &ParseTree, pattern: &Pattern) -> Vec<MatchBinding> {
    let idx = TreeIndex::new(tree);
    let mut out = Vec::new();
    for node in tree.ids() {
        for captures in match_node(&idx, node, &pattern.root, &Bindings::new()) {
            out.push(MatchBinding {
                root: node,
                captures,
            });
        }
    }
    out
}

/// True when `pattern` matches anywhere in `tree`.
pub fn matches(tree: &ParseTree, pattern: &Pattern) -> bool {
    let idx = TreeIndex::new(tree);
    tree.ids()
        .any(|n| !match_node(&idx, n, &pattern.root, &Bindings::new()).is_empty())
}

/// Bindings whose matched root is `node`.
pub fn matches_at(tree: &ParseTree, pattern: &Pattern, node: NodeId) -> Vec<MatchBinding> {
    let idx = TreeIndex::new(tree);
    match_node(&idx, node, &pattern.root, &Bindings::new())
        .into_iter()
        .map(|captures| MatchBinding {
            root: node,
            captures,
        })
        .collect()
}
