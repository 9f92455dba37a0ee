//! Noun phrases collected across the corpus for "no"-variant questions.

use std::collections::BTreeMap;

use crate::corpus::Corpus;
use crate::syntax::{head_noun, is_pronoun_np, should_decapitalize};
use crate::text::{lowercase_first, realize};
use crate::tree::{Node, NodeId, ParseTree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolPhrase {
    /// POS tag of the phrase's head noun.
    pub category: String,
    pub text: String,
    pub caption_id: String,
    pub node: Node,
}

/// Base noun phrases keyed by head-noun POS. Iteration order is sorted by
/// text and caption, so sampling depends only on the seed.
#[derive(Debug, Clone, Default)]
pub struct PhrasePool {
    by_category: BTreeMap<String, BTreeMap<(String, String), PoolPhrase>>,
}

impl PhrasePool {
    pub fn new() -> Self {
        PhrasePool::default()
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut pool = PhrasePool::new();
        for caption in &corpus.captions {
            for sentence in &caption.sentences {
                if let Some(tree) = sentence.tree() {
                    pool.add_tree(&caption.caption_id, &tree);
                }
            }
        }
        pool
    }

    /// Adds every base NP (an NP with no NP inside) that has a noun head
    /// and no number in it.
    pub fn add_tree(&mut self, caption_id: &str, tree: &ParseTree) {
        let first_leaf = tree.leaves().first().copied();
        for np in tree.ids().filter(|&n| tree.label(n) == "NP") {
            if tree.descendants(np).iter().skip(1).any(|&d| tree.label(d) == "NP") || is_pronoun_np(tree, np)
                || tree.descendants(np).iter().any(|&d| tree.label(d) == "CD")
            {
                continue;
            }
            let Some(head) = head_noun(tree, np) else { continue };
            let node = normalized_node(tree, np, first_leaf);
            let phrase_tree = ParseTree::from_node(node.clone());
            let text = realize(&phrase_tree.words(phrase_tree.root()));
            let category = tree.label(head).to_string();
            self.by_category.entry(category.clone()).or_default().insert(
                (text.clone(), caption_id.to_string()),
                PoolPhrase {
                    category,
                    text,
                    caption_id: caption_id.to_string(),
                    node,
                },
            );
        }
    }

    /// Phrases of `category` from other captions whose text differs from
    /// `exclude_text` (case-insensitively).
    pub fn candidates(&self, category: &str, exclude_caption: &str, exclude_text: &str) -> Vec<&PoolPhrase> {
        let exclude = exclude_text.to_lowercase();
        self.by_category
            .get(category)
            .map(|m| {
                m.values()
                    .filter(|p| p.caption_id != exclude_caption && p.text.to_lowercase() != exclude)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.by_category.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Copy of the phrase without source tokens, lowercased when it opened
/// its sentence.
fn normalized_node(tree: &ParseTree, np: NodeId, first_leaf: Option<NodeId>) -> Node {
    let mut sub = ParseTree::from_node(tree.to_node(np).without_tokens());
    let leaves = tree.leaves_under(np);
    if leaves.first().copied() == first_leaf {
        let l = sub.leaves()[0];
        let word = sub.nodes[l.0].word.clone().unwrap_or_default();
        if should_decapitalize(&sub.nodes[l.0].label, &word) {
            sub.nodes[l.0].word = Some(lowercase_first(&word));
        }
    }
    sub.to_node(sub.root())
}
