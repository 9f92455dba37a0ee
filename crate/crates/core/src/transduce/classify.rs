//! Choosing answer phrases and their question words.

use regex::Regex;
use std::sync::OnceLock;

use crate::corpus::{EntityLabel, EntitySpan, QuestionType};
use crate::syntax::{head_noun, is_noun_tag, is_participial_vp, is_pronoun_np};
use crate::tree::{Node, NodeId, ParseTree};

/// A constituent to be questioned, with the category it was assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerPhrase {
    pub node: NodeId,
    pub category: QuestionType,
    /// "What", "Where", "When", "Whose", "How", "How many" or "How much".
    pub question_phrase: String,
}

impl AnswerPhrase {
    fn new(node: NodeId, category: QuestionType, phrase: &str) -> Self {
        AnswerPhrase {
            node,
            category,
            question_phrase: phrase.to_string(),
        }
    }

    /// The wh-constituent that replaces the answer, in lowercase.
    pub fn wh_node(&self) -> Node {
        let lower = self.question_phrase.to_lowercase();
        match lower.as_str() {
            "what" => Node::phrase("WHNP", vec![Node::leaf("WP", "what")]),
            "whose" => Node::phrase("WHNP", vec![Node::leaf("WP$", "whose")]),
            "how many" | "how much" => Node::phrase(
                "WHADJP",
                vec![Node::leaf("WRB", "how"), Node::leaf("JJ", &lower[4..])],
            ),
            other => Node::phrase("WHADVP", vec![Node::leaf("WRB", other)]),
        }
    }
}

const UNITS: &[&str] = &[
    "%", "percent", "mg", "g", "kg", "ml", "l", "mm", "cm", "m", "µm", "um", "nm", "mmhg", "cc",
    "dl", "mmol", "units",
];

const SUBORDINATING_EXCLUDED: &[&str] = &["that", "whether"];

/// True for sentences with an adverbial clause or a comma-separated
/// participial adjunct; no questions are generated from those.
pub fn should_skip(tree: &ParseTree) -> bool {
    tree.ids().any(|n| {
        let kids = tree.children(n);
        match tree.label(n) {
            "SBAR" => kids.first().is_some_and(|&k| {
                tree.label(k) == "IN"
                    && !SUBORDINATING_EXCLUDED.contains(&tree.word(k).unwrap_or("").to_lowercase().as_str())
            }),
            "NP" | "VP" => kids
                .windows(2)
                .any(|w| tree.label(w[0]) == "," && is_participial_vp(tree, w[1])),
            _ => false,
        }
    })
}

fn first_word(tree: &ParseTree, n: NodeId) -> String {
    tree.words(n).first().map(|w| w.to_lowercase()).unwrap_or_default()
}

fn last_word(tree: &ParseTree, n: NodeId) -> String {
    tree.words(n).last().map(|w| w.to_lowercase()).unwrap_or_default()
}

/// Highest node whose leaves carry exactly the tokens `start..=end`.
fn node_for_span(tree: &ParseTree, start: usize, end: usize) -> Option<NodeId> {
    tree.ids().find(|&n| {
        let toks: Vec<Option<usize>> = tree.leaves_under(n).iter().map(|&l| tree.token(l)).collect();
        toks.len() == end + 1 - start && toks.iter().enumerate().all(|(i, t)| *t == Some(start + i))
    })
}

/// `(PP (IN x) node)` around an entity becomes the answer.
fn lift_to_pp(tree: &ParseTree, n: NodeId) -> NodeId {
    match tree.parent(n) {
        Some(p)
            if tree.label(p) == "PP"
                && tree.children(p).len() == 2
                && tree.children(p)[1] == n
                && matches!(tree.label(tree.children(p)[0]), "IN" | "TO") =>
        {
            p
        }
        _ => n,
    }
}

fn side_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^on (the )?(\S+ )?(right|left)\b").expect("valid regex"))
}

struct Claims<'t> {
    tree: &'t ParseTree,
    out: Vec<AnswerPhrase>,
}

impl Claims<'_> {
    /// Taken already, or inside a phrase of another category.
    fn blocked(&self, n: NodeId, category: QuestionType) -> bool {
        self.out
            .iter()
            .any(|a| a.node == n || (a.category != category && self.tree.dominates(a.node, n)))
    }

    fn claim(&mut self, n: NodeId, category: QuestionType, phrase: &str) {
        if !self.blocked(n, category) && !self.tree.words(n).is_empty() {
            self.out.push(AnswerPhrase::new(n, category, phrase));
        }
    }
}

/// Assigns question categories to phrases of a clause, in priority order
/// when, how much/many, whose, where, how, what. A phrase inside a phrase
/// claimed by an earlier category is left alone. Results are in preorder.
pub fn classify_answer_phrases(tree: &ParseTree, entities: &[EntitySpan]) -> Vec<AnswerPhrase> {
    let mut c = Claims {
        tree,
        out: Vec::new(),
    };
    let entity_nodes = |label: EntityLabel| -> Vec<NodeId> {
        entities
            .iter()
            .filter(|e| e.label == label)
            .filter_map(|e| node_for_span(tree, e.start_token, e.end_token))
            .collect()
    };

    // when
    for label in [EntityLabel::Date, EntityLabel::Time] {
        for n in entity_nodes(label) {
            c.claim(lift_to_pp(tree, n), QuestionType::When, "When");
        }
    }
    for n in tree.ids().filter(|&n| tree.label(n) == "PP") {
        let first = first_word(tree, n);
        let last = last_word(tree, n);
        let temporal = matches!(first.as_str(), "before" | "after")
            || (matches!(first.as_str(), "in" | "during")
                && matches!(last.as_str(), "stage" | "stages" | "period" | "periods"));
        if temporal {
            c.claim(n, QuestionType::When, "When");
        }
    }

    // how much / how many
    let mut numbers: Vec<NodeId> = tree.ids().filter(|&n| tree.label(n) == "CD").collect();
    numbers.extend(entity_nodes(EntityLabel::Number));
    for n in numbers {
        let n = match tree.parent(n) {
            Some(p) if tree.label(p) == "QP" => p,
            _ => n,
        };
        let np = tree.parent(n).filter(|&p| tree.label(p) == "NP" && p != n);
        let unit = np
            .and_then(|np| head_noun(tree, np))
            .and_then(|h| tree.word(h))
            .is_some_and(|w| UNITS.contains(&w.to_lowercase().as_str()));
        match (unit, np) {
            (true, Some(np)) => c.claim(np, QuestionType::HowMuchMany, "How much"),
            _ => c.claim(n, QuestionType::HowMuchMany, "How many"),
        }
    }

    // whose
    for n in tree.ids().filter(|&n| tree.label(n) == "PRP$") {
        c.claim(n, QuestionType::Whose, "Whose");
    }

    // where
    for n in entity_nodes(EntityLabel::Location) {
        c.claim(lift_to_pp(tree, n), QuestionType::Where, "Where");
    }
    for n in tree.ids().filter(|&n| tree.label(n) == "PP") {
        let first = first_word(tree, n);
        let text = tree.words(n).join(" ").to_lowercase();
        if matches!(first.as_str(), "within" | "inside" | "inner") || side_pattern().is_match(&text) {
            c.claim(n, QuestionType::Where, "Where");
        }
    }

    // how
    for n in tree.ids() {
        let label = tree.label(n);
        let outermost_adjp =
            label == "ADJP" && tree.parent(n).is_none_or(|p| tree.label(p) != "ADJP");
        let manner = matches!(label, "PP" | "VP" | "S")
            && n != tree.root()
            && matches!(first_word(tree, n).as_str(), "using" | "via" | "with" | "through");
        if outermost_adjp || manner {
            c.claim(n, QuestionType::How, "How");
        }
    }

    // what
    for n in tree.ids().filter(|&n| tree.label(n) == "NP") {
        let in_unary_np = tree
            .parent(n)
            .is_some_and(|p| tree.label(p) == "NP" && tree.children(p).len() == 1);
        let has_noun = tree
            .leaves_under(n)
            .iter()
            .any(|&l| is_noun_tag(tree.label(l)));
        if !in_unary_np && has_noun && !is_pronoun_np(tree, n) {
            c.claim(n, QuestionType::What, "What");
        }
    }

    let mut out = c.out;
    out.sort_by_key(|a| a.node);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_ptb;

    fn classify(ptb: &str) -> Vec<(String, QuestionType, String)> {
        let t = parse_ptb(ptb).unwrap();
        classify_answer_phrases(&t, &[])
            .into_iter()
            .map(|a| (t.leaf_yield(a.node).unwrap(), a.category, a.question_phrase))
            .collect()
    }

    #[test]
    fn temporal_prepositional_phrase() {
        let out = classify("(S (PP (IN After) (NP (NP (CD 1) (NN year)) (PP (IN of) (NP (NN abstinence))))) (, ,) (NP (JJS most) (NNS scars)) (VP (VBP are) (ADJP (VBN gone))) (. .))");
        assert!(out.contains(&("After 1 year of abstinence".into(), QuestionType::When, "When".into())));
        // the number inside the temporal phrase is not questioned separately
        assert!(!out.iter().any(|(t, _, _)| t == "1"));
    }

    #[test]
    fn cardinal_and_possessive() {
        let out = classify("(S (NP (CD Two) (JJ multi-faceted) (NNS gallstones)) (VP (VBP are) (ADJP (JJ present) (PP (IN in) (NP (DT the) (NN lumen))))) (. .))");
        assert_eq!(out[1], ("Two".into(), QuestionType::HowMuchMany, "How many".into()));
        let out = classify("(S (NP (NP (DT The) (NN tumor) (NNS cells)) (CC and) (NP (PRP$ their) (NNS nuclei))) (VP (VBP are) (ADJP (RB fairly) (JJ uniform))) (. .))");
        assert!(out.contains(&("their".into(), QuestionType::Whose, "Whose".into())));
    }

    #[test]
    fn units_ask_how_much() {
        let out = classify("(S (NP (DT The) (NN dose)) (VP (VBZ is) (NP (CD 5) (NN mg))) (. .))");
        assert!(out.contains(&("5 mg".into(), QuestionType::HowMuchMany, "How much".into())));
    }

    #[test]
    fn side_of_view_is_where() {
        let out = classify("(S (NP (DT The) (JJ left) (NN ventricle)) (VP (VBZ is) (PP (IN on) (NP (DT the) (JJR lower) (NN right))) (PP (IN in) (NP (DT this) (NN view)))) (. .))");
        assert!(out.contains(&("on the lower right".into(), QuestionType::Where, "Where".into())));
        assert!(!out.iter().any(|(t, _, _)| t == "the lower right"));
    }

    #[test]
    fn entities_map_to_constituents() {
        let t = parse_ptb("(S (NP (NNS Lesions)) (VP (VBD appeared) (PP (IN in) (NP (NNP March)))) (. .))").unwrap();
        let ents = [EntitySpan {
            start_token: 3,
            end_token: 3,
            label: EntityLabel::Date,
        }];
        let out = classify_answer_phrases(&t, &ents);
        let when: Vec<_> = out.iter().filter(|a| a.category == QuestionType::When).collect();
        assert_eq!(when.len(), 1);
        assert_eq!(t.leaf_yield(when[0].node).unwrap(), "in March");
    }

    #[test]
    fn manner_and_remaining_nouns() {
        let out = classify("(S (NP (NNS Cells)) (VP (VBP are) (VP (VBN stained) (PP (IN with) (NP (NN eosin))))) (. .))");
        assert!(out.contains(&("with eosin".into(), QuestionType::How, "How".into())));
        assert!(out.contains(&("Cells".into(), QuestionType::What, "What".into())));
        assert!(!out.iter().any(|(t, _, _)| t == "eosin"));
    }

    #[test]
    fn skip_filter() {
        let frag = parse_ptb("(NP (NP (JJ chronic) (NN inflammation)) (PP (IN in) (NP (DT the) (NN lung))) (, ,) (VP (VBG showing) (NP (DT all) (CD three) (JJ characteristic) (JJ histologic) (NNS features))))").unwrap();
        assert!(should_skip(&frag));
        let plain = parse_ptb("(S (NP (CD Two) (NNS gallstones)) (VP (VBP are) (ADJP (JJ present))) (. .))").unwrap();
        assert!(!should_skip(&plain));
        let adverbial = parse_ptb("(S (SBAR (IN When) (S (NP (PRP it)) (VP (VBZ bleeds)))) (, ,) (NP (NN pain)) (VP (VBZ occurs)) (. .))").unwrap();
        assert!(should_skip(&adverbial));
        let complement = parse_ptb("(S (NP (NN Biopsy)) (VP (VBZ shows) (SBAR (IN that) (S (NP (NNS cells)) (VP (VBP are) (ADJP (JJ atypical)))))) (. .))").unwrap();
        assert!(!should_skip(&complement));
    }

    #[test]
    fn wh_nodes() {
        let a = AnswerPhrase::new(NodeId(0), QuestionType::HowMuchMany, "How many");
        assert_eq!(
            ParseTree::from_node(a.wh_node()).render(),
            "(WHADJP (WRB how) (JJ many))"
        );
    }
}
