//! Small structural queries over clause trees shared by the simplifier and
//! the question transducer.

use crate::tree::{NodeId, ParseTree};

pub(crate) fn is_punct(label: &str) -> bool {
    matches!(label, "," | "." | ":" | "``" | "''" | "HYPH" | "NFP")
}

pub(crate) fn is_finite_tag(label: &str) -> bool {
    matches!(label, "VBZ" | "VBD" | "VBP" | "MD")
}

pub(crate) fn is_noun_tag(label: &str) -> bool {
    label.starts_with("NN")
}

/// Subject NP and main VP of a clause: the first NP child followed (not
/// necessarily immediately) by a VP child.
pub(crate) fn clause_parts(tree: &ParseTree, s: NodeId) -> Option<(NodeId, NodeId)> {
    let kids = tree.children(s);
    for (i, &k) in kids.iter().enumerate() {
        if tree.label(k) == "NP" {
            let vp = kids[i + 1..].iter().copied().find(|&v| tree.label(v) == "VP")?;
            return Some((k, vp));
        }
        if tree.label(k) == "VP" {
            return None;
        }
    }
    None
}

/// First child of `vp` when it is a finite verb or modal.
pub(crate) fn finite_verb(tree: &ParseTree, vp: NodeId) -> Option<NodeId> {
    let first = *tree.children(vp).first()?;
    (tree.is_leaf(first) && is_finite_tag(tree.label(first))).then_some(first)
}

/// A clause root with a subject NP and a finite VP.
pub(crate) fn is_clause(tree: &ParseTree, s: NodeId) -> bool {
    tree.label(s) == "S"
        && clause_parts(tree, s).is_some_and(|(_, vp)| finite_verb(tree, vp).is_some())
}

/// VPs on the verbal spine starting at `vp`: the VP itself and every VP
/// reached by following VP children (auxiliary chains like "is expanded").
pub(crate) fn vp_spine(tree: &ParseTree, vp: NodeId) -> Vec<NodeId> {
    let mut out = vec![vp];
    let mut cur = vp;
    while let Some(&next) = tree.children(cur).iter().find(|&&c| tree.label(c) == "VP") {
        out.push(next);
        cur = next;
    }
    out
}

/// Head noun leaf of an NP: for "NP PP" and similar shapes, the head of the
/// first NP child; otherwise the rightmost noun among the leaf children.
pub(crate) fn head_noun(tree: &ParseTree, np: NodeId) -> Option<NodeId> {
    if tree.is_leaf(np) {
        return is_noun_tag(tree.label(np)).then_some(np);
    }
    let kids = tree.children(np);
    if let Some(&first) = kids.first() {
        if tree.label(first) == "NP" && !is_coordination(tree, np) {
            return head_noun(tree, first);
        }
    }
    kids.iter()
        .rev()
        .copied()
        .find(|&k| tree.is_leaf(k) && is_noun_tag(tree.label(k)))
}

pub(crate) fn is_coordination(tree: &ParseTree, np: NodeId) -> bool {
    tree.children(np).iter().any(|&c| tree.label(c) == "CC")
}

/// Whether an NP is grammatically plural.
pub(crate) fn is_plural(tree: &ParseTree, np: NodeId) -> bool {
    if is_coordination(tree, np) && tree.label(np) == "NP" {
        return true;
    }
    head_noun(tree, np).is_some_and(|h| matches!(tree.label(h), "NNS" | "NNPS"))
}

/// Copula agreeing with the subject NP, as `(tag, word)`.
pub(crate) fn copula_for(tree: &ParseTree, np: NodeId) -> (&'static str, &'static str) {
    if is_plural(tree, np) {
        ("VBP", "are")
    } else {
        ("VBZ", "is")
    }
}

/// A VP headed by a present or past participle ("showing ...", "composed of ...").
pub(crate) fn is_participial_vp(tree: &ParseTree, vp: NodeId) -> bool {
    tree.label(vp) == "VP"
        && tree
            .children(vp)
            .first()
            .is_some_and(|&v| tree.is_leaf(v) && matches!(tree.label(v), "VBG" | "VBN"))
}

/// A subject made only of a personal/demonstrative pronoun.
pub(crate) fn is_pronoun_np(tree: &ParseTree, np: NodeId) -> bool {
    let leaves = tree.leaves_under(np);
    leaves.len() == 1 && matches!(tree.label(leaves[0]), "PRP" | "DT" | "WDT" | "WP")
}

/// Lowercase first word unless it looks like a proper noun or acronym.
pub(crate) fn should_decapitalize(tag: &str, word: &str) -> bool {
    if matches!(tag, "NNP" | "NNPS") || word == "I" {
        return false;
    }
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    let upper = letters.iter().filter(|c| c.is_uppercase()).count();
    !(letters.len() > 1 && upper > 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_ptb;

    #[test]
    fn parts_and_heads() {
        let t = parse_ptb(
            "(S (PP (IN After) (NP (NN x))) (, ,) (NP (NP (DT The) (NN end)) (PP (IN of) (NP (NNS bones)))) (VP (VBZ is) (VP (VBN expanded))) (. .))",
        )
        .unwrap();
        let (subj, vp) = clause_parts(&t, t.root()).unwrap();
        assert_eq!(t.leaf_yield(subj).unwrap(), "The end of bones");
        assert_eq!(t.word(head_noun(&t, subj).unwrap()), Some("end"));
        assert_eq!(copula_for(&t, subj), ("VBZ", "is"));
        assert_eq!(vp_spine(&t, vp).len(), 2);
        assert!(is_clause(&t, t.root()));
    }

    #[test]
    fn coordination_is_plural() {
        let t = parse_ptb("(NP (NP (NN tumor)) (CC and) (NP (NN nucleus)))").unwrap();
        assert!(is_plural(&t, t.root()));
    }

    #[test]
    fn decapitalization() {
        assert!(should_decapitalize("NN", "Microscopy"));
        assert!(should_decapitalize("DT", "The"));
        assert!(!should_decapitalize("NNP", "Crohn"));
        assert!(!should_decapitalize("NN", "HE"));
        assert!(!should_decapitalize("NN", "CT"));
    }
}
