//! Question generation by tree transduction.
//!
//! Each simplified clause yields a yes/no question (main-verb decomposition
//! plus subject-auxiliary inversion), optionally a "no" variant with its
//! head noun phrase swapped for a phrase from another caption, and one open
//! question per answer phrase found by [`classify_answer_phrases`]. Every
//! transformation is a rule from the [`RuleCatalog`] and is recorded in a
//! [`RuleTrace`] that can be replayed on the source clause.

mod catalog;
mod classify;
mod morph;
mod pool;
mod trace;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use catalog::{CatalogError, CatalogRule, RuleCatalog, REQUIRED_RULES};
pub use classify::{classify_answer_phrases, should_skip, AnswerPhrase};
pub use morph::base_form;
pub use pool::{PhrasePool, PoolPhrase};
pub use trace::{ReplayError, RuleTrace, TraceStep};

use crate::corpus::{Corpus, EntitySpan, Provenance, QaPair, QuestionType, Replacement, ReviewStatus};
use crate::simplify::simplify;
use crate::syntax::{
    clause_parts, finite_verb, head_noun, is_clause, is_pronoun_np, should_decapitalize, vp_spine,
};
use crate::text::{capitalize_first, is_stopword, lowercase_first, realize, strip_leading_article};
use crate::tree::{Node, NodeId, ParseTree};
use crate::treequery::EditError;
use trace::Tracer;

#[derive(Debug, Error)]
pub enum TransduceError {
    #[error("tree is not a clause with a subject and a finite verb phrase")]
    NotAClause,
    #[error("no finite verb found")]
    NoFiniteVerb,
    #[error("rule catalog has no rule {0}")]
    MissingRule(String),
    #[error("rule {0} did not match where expected")]
    NoMatch(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("rule {rule}: {source}")]
    Edit {
        rule: String,
        #[source]
        source: EditError,
    },
}

/// A generated question with the tree it was realized from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub qtype: QuestionType,
    pub text: String,
    pub answer: String,
    pub tree: ParseTree,
    pub trace: RuleTrace,
    pub replacement: Option<Replacement>,
}

#[derive(Debug, Clone, Default)]
pub struct Transducer {
    catalog: RuleCatalog,
}

fn render(node: Node) -> String {
    ParseTree::from_node(node).render()
}

fn first_token(tree: &ParseTree) -> Option<usize> {
    tree.leaves().first().and_then(|&l| tree.token(l))
}

fn content_words(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty() && !is_stopword(w))
        .collect()
}

/// Leftmost innermost NP below `np`.
fn innermost_left(tree: &ParseTree, mut np: NodeId) -> NodeId {
    while let Some(&first) = tree.children(np).first() {
        if tree.label(first) != "NP" {
            break;
        }
        np = first;
    }
    np
}

/// Noun phrase swapped out in a "no" variant: the head of the first NP
/// complement on the verbal spine, or of the subject when there is none.
pub fn head_phrase(tree: &ParseTree) -> Option<NodeId> {
    let (subj, vp) = clause_parts(tree, tree.root())?;
    let object = vp_spine(tree, vp)
        .into_iter()
        .find_map(|v| tree.children(v).iter().copied().find(|&c| tree.label(c) == "NP"));
    let np = innermost_left(tree, object.unwrap_or(subj));
    head_noun(tree, np).map(|_| np)
}

/// Seed for one QA pair, from its provenance and the run seed.
pub fn derive_seed(key: &str, run_seed: u64) -> u64 {
    let digest = Sha256::digest(format!("{key}/{run_seed}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

impl Transducer {
    pub fn new(catalog: RuleCatalog) -> Self {
        Transducer { catalog }
    }

    pub fn catalog(&self) -> &RuleCatalog {
        &self.catalog
    }

    /// Splits a finite lexical verb into do-support plus base form
    /// ("shows" becomes "does show"). Copulas, modals and auxiliaries
    /// followed by a verb phrase are left alone.
    pub fn decompose_main_verb(&self, tree: &ParseTree) -> Result<ParseTree, TransduceError> {
        let mut tr = Tracer::new(&self.catalog, tree.clone());
        decompose(&mut tr)?;
        Ok(tr.tree)
    }

    /// Yes/no question with answer "yes".
    pub fn yes_no(&self, clause: &ParseTree) -> Result<Question, TransduceError> {
        let (tree, trace) = self.yes_no_tree(clause.clone(), None)?;
        Ok(question(QuestionType::YesNo, tree, trace, "yes".to_string(), None))
    }

    fn yes_no_tree(
        &self,
        clause: ParseTree,
        distractor: Option<(NodeId, Node)>,
    ) -> Result<(ParseTree, RuleTrace), TransduceError> {
        if !is_clause(&clause, clause.root()) {
            return Err(TransduceError::NotAClause);
        }
        let first = first_token(&clause);
        let mut tr = Tracer::new(&self.catalog, clause);
        let rule_id = match distractor {
            Some((head, phrase)) => {
                tr.apply(
                    "substitute-distractor",
                    |b| b.get("head") == Some(head),
                    &[("phrase", render(phrase))],
                )?;
                "yes_no_negated"
            }
            None => "yes_no",
        };
        decompose(&mut tr)?;
        invert(&mut tr)?;
        finish(&mut tr, first)?;
        Ok(tr.finish(rule_id))
    }

    /// "No" variant: the head phrase replaced by a same-category phrase
    /// drawn from `pool`. `None` when the pool has no usable phrase.
    pub fn no_variant(
        &self,
        clause: &ParseTree,
        pool: &PhrasePool,
        caption_id: &str,
        seed: u64,
    ) -> Result<Option<Question>, TransduceError> {
        let Some(head) = head_phrase(clause) else {
            return Ok(None);
        };
        let category = head_noun(clause, head).map(|h| clause.label(h)).unwrap_or("");
        let original = realize(&clause.words(head));
        let candidates = pool.candidates(category, caption_id, &original);
        if candidates.is_empty() {
            return Ok(None);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = candidates[rng.gen_range(0..candidates.len())];
        let (tree, trace) = self.yes_no_tree(clause.clone(), Some((head, pick.node.clone())))?;
        let replacement = Replacement {
            original,
            replacement: pick.text.clone(),
            source_caption_id: pick.caption_id.clone(),
        };
        Ok(Some(question(QuestionType::YesNo, tree, trace, "no".to_string(), Some(replacement))))
    }

    /// Open question for one answer phrase. `None` when the phrase cannot
    /// be fronted to the start of the question or the question would
    /// reveal its own answer.
    pub fn open(&self, clause: &ParseTree, phrase: &AnswerPhrase) -> Result<Option<Question>, TransduceError> {
        let root = clause.root();
        let (subj, _) = clause_parts(clause, root).ok_or(TransduceError::NotAClause)?;
        if !is_clause(clause, root) {
            return Err(TransduceError::NotAClause);
        }
        let answer = answer_text(clause, phrase.node);
        if answer.is_empty() {
            return Ok(None);
        }
        let in_subject = phrase.node == subj || clause.dominates(subj, phrase.node);
        let first = first_token(clause);
        let mut tr = Tracer::new(&self.catalog, clause.clone());
        tr.apply(
            "wh-substitute",
            |b| b.get("answer") == Some(phrase.node),
            &[("phrase", render(phrase.wh_node()))],
        )?;
        if !in_subject {
            decompose(&mut tr)?;
            invert(&mut tr)?;
            if !front(&mut tr)? {
                return Ok(None);
            }
        }
        finish(&mut tr, first)?;
        let rule_id = format!("open_{}", phrase.category.as_str());
        let (tree, trace) = tr.finish(&rule_id);
        let q = question(phrase.category, tree, trace, answer, None);
        if !content_words(&q.text).is_disjoint(&content_words(&q.answer)) {
            return Ok(None);
        }
        Ok(Some(q))
    }
}

fn question(
    qtype: QuestionType,
    tree: ParseTree,
    trace: RuleTrace,
    answer: String,
    replacement: Option<Replacement>,
) -> Question {
    Question {
        qtype,
        text: realize(&tree.words(tree.root())),
        answer,
        tree,
        trace,
        replacement,
    }
}

/// Yield of the answer phrase without a leading article; a sentence-initial
/// common word is lowercased.
fn answer_text(tree: &ParseTree, node: NodeId) -> String {
    let leaves = tree.leaves_under(node);
    let mut words: Vec<String> = leaves.iter().filter_map(|&l| tree.word(l)).map(str::to_string).collect();
    if let (Some(&first), Some(w)) = (leaves.first(), words.first_mut()) {
        if tree.leaves().first() == Some(&first) && should_decapitalize(tree.label(first), w) {
            *w = lowercase_first(w);
        }
    }
    strip_leading_article(&realize(&words))
}

fn decompose(tr: &mut Tracer<'_>) -> Result<(), TransduceError> {
    let t = &tr.tree;
    let (_, vp) = clause_parts(t, t.root()).ok_or(TransduceError::NotAClause)?;
    let verb = finite_verb(t, vp).ok_or(TransduceError::NoFiniteVerb)?;
    let tag = t.label(verb).to_string();
    if tag == "MD" {
        return Ok(());
    }
    let base = base_form(t.word(verb).unwrap_or(""), &tag);
    let has_verbal_complement = t
        .children(vp)
        .iter()
        .skip(1)
        .any(|&c| matches!(t.label(c), "VP" | "S"));
    if base == "be" || (matches!(base.as_str(), "have" | "do") && has_verbal_complement) {
        return Ok(());
    }
    let aux = match tag.as_str() {
        "VBZ" => "does",
        "VBD" => "did",
        _ => "do",
    };
    tr.apply(
        "decompose",
        |b| b.get("verb") == Some(verb),
        &[
            ("aux", render(Node::leaf(tag.clone(), aux))),
            ("base", render(Node::leaf("VB", base))),
        ],
    )
}

fn invert(tr: &mut Tracer<'_>) -> Result<(), TransduceError> {
    let t = &tr.tree;
    let (subj, vp) = clause_parts(t, t.root()).ok_or(TransduceError::NotAClause)?;
    let aux = finite_verb(t, vp).ok_or(TransduceError::NoFiniteVerb)?;
    tr.apply(
        "invert",
        |b| b.get("subj") == Some(subj) && b.get("aux") == Some(aux),
        &[],
    )
}

/// The inserted wh-constituent: the first WH phrase without source tokens.
fn wh_node(tree: &ParseTree) -> Option<NodeId> {
    tree.ids().find(|&n| {
        tree.label(n).starts_with("WH")
            && tree.leaves_under(n).iter().all(|&l| tree.token(l).is_none())
    })
}

/// Moves the clause constituent holding the wh-phrase to the front and
/// tidies commas. False when the wh-phrase would not start the question.
fn front(tr: &mut Tracer<'_>) -> Result<bool, TransduceError> {
    let t = &tr.tree;
    let root = t.root();
    let Some(wh) = wh_node(t) else { return Ok(false) };
    let spine = match clause_parts(t, root) {
        Some((_, vp)) => vp_spine(t, vp),
        None => Vec::new(),
    };
    let mut moved = wh;
    loop {
        let Some(p) = t.parent(moved) else { return Ok(false) };
        if p == root || spine.contains(&p) {
            break;
        }
        moved = p;
    }
    if t.leaves_under(moved).first() != t.leaves_under(wh).first() {
        return Ok(false);
    }
    if t.children(root).first() != Some(&moved) {
        let fronted = tr.apply(
            "front",
            |b| b.get("clause") == Some(root) && b.get("moved") == Some(moved),
            &[],
        );
        match fronted {
            // the phrase was the whole remaining verb phrase
            Err(TransduceError::Edit {
                source: EditError::Childless(_),
                ..
            }) => return Ok(false),
            other => other?,
        }
    }
    while let Some(comma) = stray_comma(&tr.tree) {
        tr.apply("drop-comma", |b| b.get("comma") == Some(comma), &[])?;
    }
    Ok(true)
}

/// A clause-level comma right after the fronted phrase, before the final
/// punctuation, at the end, or next to another comma.
fn stray_comma(t: &ParseTree) -> Option<NodeId> {
    let kids = t.children(t.root());
    kids.iter().enumerate().find_map(|(i, &k)| {
        if t.label(k) != "," {
            return None;
        }
        let next = kids.get(i + 1).map(|&n| t.label(n));
        let stray = i == 1 || matches!(next, None | Some(".") | Some(","));
        stray.then_some(k)
    })
}

/// Lowercases the old first word, sets the question mark and capitalizes
/// the new first word.
fn finish(tr: &mut Tracer<'_>, first: Option<usize>) -> Result<(), TransduceError> {
    let leaves = tr.tree.leaves();
    if let Some(old) = first.and_then(|tok| leaves.iter().copied().find(|&l| tr.tree.token(l) == Some(tok))) {
        if leaves.first() != Some(&old) {
            recase(tr, old, true)?;
        }
    }
    let root = tr.tree.root();
    match tr.tree.children(root).last().copied() {
        Some(stop) if tr.tree.label(stop) == "." => {
            tr.apply("question-mark", |b| b.get("stop") == Some(stop), &[])?;
        }
        _ => tr.apply("question-mark-append", |b| b.get("clause") == Some(root), &[])?,
    }
    if let Some(&lead) = tr.tree.leaves().first() {
        recase(tr, lead, false)?;
    }
    Ok(())
}

fn recase(tr: &mut Tracer<'_>, leaf: NodeId, lower: bool) -> Result<(), TransduceError> {
    let tag = tr.tree.label(leaf).to_string();
    let word = tr.tree.word(leaf).unwrap_or("").to_string();
    let new = if lower {
        if !should_decapitalize(&tag, &word) {
            return Ok(());
        }
        lowercase_first(&word)
    } else {
        capitalize_first(&word)
    };
    if new == word {
        return Ok(());
    }
    tr.apply(
        "recase",
        |b| b.get("word") == Some(leaf),
        &[("leaf", render(Node::leaf(tag.clone(), new)))],
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub seed: u64,
    /// Emit a "no" variant next to each yes/no question.
    pub negatives: bool,
    pub open_questions: bool,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            seed: 0,
            negatives: true,
            open_questions: true,
        }
    }
}

/// Counters describing what happened during generation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GenerateReport {
    pub sentences: usize,
    pub unparsed: usize,
    pub clauses: usize,
    pub skipped_adverbial: usize,
    pub skipped_pronoun: usize,
    pub not_clause: usize,
    pub yes_no: usize,
    pub negated: usize,
    pub no_distractor: usize,
    pub open: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedQuestion {
    pub pair: QaPair,
    pub trace: RuleTrace,
    /// The simplified clause the trace replays on.
    pub source: ParseTree,
}

struct ClauseCtx<'a> {
    caption_id: &'a str,
    image_id: &'a str,
    sentence_index: usize,
    clause_index: usize,
    simplification: &'a str,
}

impl ClauseCtx<'_> {
    fn pair(&self, q: Question, rule_id: &str, k: usize) -> QaPair {
        QaPair {
            qa_id: format!(
                "{}-{}-{}-{}-{}",
                self.caption_id, self.sentence_index, self.clause_index, rule_id, k
            ),
            image_id: self.image_id.to_string(),
            qtype: q.qtype,
            question: q.text,
            answer: q.answer,
            provenance: Provenance {
                caption_id: self.caption_id.to_string(),
                sentence_index: self.sentence_index,
                rule_id: rule_id.to_string(),
                simplification: self.simplification.to_string(),
                clause_index: self.clause_index,
                replacement: q.replacement,
            },
            status: ReviewStatus::Generated,
        }
    }

    fn seed_key(&self, rule_id: &str) -> String {
        format!(
            "{}/{}/{}/{}",
            self.caption_id, self.sentence_index, self.clause_index, rule_id
        )
    }
}

impl Transducer {
    /// All questions for one simplified clause.
    fn clause_questions(
        &self,
        ctx: &ClauseCtx<'_>,
        clause: &ParseTree,
        entities: &[EntitySpan],
        pool: &PhrasePool,
        config: &GenerateConfig,
        report: &mut GenerateReport,
        out: &mut Vec<GeneratedQuestion>,
    ) {
        if should_skip(clause) {
            report.skipped_adverbial += 1;
            return;
        }
        let Some((subj, _)) = clause_parts(clause, clause.root()).filter(|_| is_clause(clause, clause.root())) else {
            report.not_clause += 1;
            return;
        };
        if is_pronoun_np(clause, subj) {
            report.skipped_pronoun += 1;
            return;
        }
        let push = |q: Question, rule_id: &str, k: usize, out: &mut Vec<GeneratedQuestion>| {
            out.push(GeneratedQuestion {
                trace: q.trace.clone(),
                pair: ctx.pair(q, rule_id, k),
                source: clause.clone(),
            });
        };
        match self.yes_no(clause) {
            Ok(q) => {
                report.yes_no += 1;
                push(q, "yes_no", 0, out);
            }
            Err(_) => report.failed += 1,
        }
        if config.negatives {
            let seed = derive_seed(&ctx.seed_key("yes_no_negated"), config.seed);
            match self.no_variant(clause, pool, ctx.caption_id, seed) {
                Ok(Some(q)) => {
                    report.negated += 1;
                    push(q, "yes_no_negated", 0, out);
                }
                Ok(None) => report.no_distractor += 1,
                Err(_) => report.failed += 1,
            }
        }
        if config.open_questions {
            let mut per_type = std::collections::BTreeMap::<QuestionType, usize>::new();
            for phrase in classify_answer_phrases(clause, entities) {
                match self.open(clause, &phrase) {
                    Ok(Some(q)) => {
                        let k = per_type.entry(phrase.category).or_default();
                        let rule_id = format!("open_{}", phrase.category.as_str());
                        report.open += 1;
                        push(q, &rule_id, *k, out);
                        *k += 1;
                    }
                    Ok(None) => {}
                    Err(_) => report.failed += 1,
                }
            }
        }
    }

    /// Generates questions for every caption sentence of `corpus`, in
    /// corpus order. Output depends only on the corpus, the catalog and
    /// `config.seed`.
    pub fn generate(&self, corpus: &Corpus, config: &GenerateConfig) -> (Vec<GeneratedQuestion>, GenerateReport) {
        let pool = if config.negatives {
            PhrasePool::from_corpus(corpus)
        } else {
            PhrasePool::new()
        };
        let mut report = GenerateReport::default();
        let mut out = Vec::new();
        for caption in &corpus.captions {
            for (i, sentence) in caption.sentences.iter().enumerate() {
                report.sentences += 1;
                if sentence.tree().is_none() {
                    report.unparsed += 1;
                    continue;
                }
                for (j, simple) in simplify(sentence).into_iter().enumerate() {
                    report.clauses += 1;
                    let ctx = ClauseCtx {
                        caption_id: &caption.caption_id,
                        image_id: &caption.image_id,
                        sentence_index: i,
                        clause_index: j,
                        simplification: simple.source_rule.id(),
                    };
                    self.clause_questions(&ctx, &simple.tree, &sentence.entities, &pool, config, &mut report, &mut out);
                }
            }
        }
        (out, report)
    }
}
