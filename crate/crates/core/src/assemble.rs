//! Dataset assembly: cleaning, deduplication, yes/no balancing, image-level
//! splits and summary statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, DatasetSplit, QaPair, QuestionType, ReviewStatus};
use crate::text::{
    collapse_whitespace, remove_disallowed_symbols, strip_leading_article, tighten_punctuation, word_count,
};

#[derive(Debug, Error, PartialEq)]
pub enum AssembleError {
    #[error("split ratios must be three positive numbers summing to 1, got {0:?}")]
    Ratios(Vec<f64>),
    #[error("need at least {needed} images to split, have {have}")]
    TooFewImages { needed: usize, have: usize },
}

pub const DEFAULT_RATIOS: [f64; 3] = [0.5, 0.3, 0.2];

/// Questions that carry no information about the image beyond a bare
/// wh-word, compared after lowercasing.
pub const DEFAULT_VAGUE_QUESTIONS: &[&str] = &[
    "what is this?",
    "what is it?",
    "what is shown?",
    "what is seen?",
    "what are these?",
    "what is present?",
    "what does this show?",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    pub min_question_words: usize,
    pub vague_questions: Vec<String>,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            min_question_words: 3,
            vague_questions: DEFAULT_VAGUE_QUESTIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn clean_text(s: &str) -> String {
    tighten_punctuation(&collapse_whitespace(&remove_disallowed_symbols(s)))
}

fn strip_articles(s: &str) -> String {
    let mut cur = s.to_string();
    loop {
        let next = strip_leading_article(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Normalizes one pair, or drops it when the question is too short, vague
/// or the answer is empty. Idempotent.
pub fn clean_pair(pair: &QaPair, config: &CleanConfig) -> Option<QaPair> {
    let mut question = clean_text(&pair.question);
    while question.ends_with(['.', '!', ',', ';', ':']) {
        question.pop();
    }
    let question = question.trim_end();
    let question = if question.ends_with('?') {
        question.to_string()
    } else {
        format!("{question}?")
    };
    let answer = clean_text(&pair.answer);
    let answer = strip_articles(answer.trim_end_matches(['.', ',', ';', ':', '!', '?']).trim());
    let answer = if pair.qtype == QuestionType::YesNo {
        answer.to_lowercase()
    } else {
        answer
    };
    let vague = config
        .vague_questions
        .iter()
        .any(|v| v.eq_ignore_ascii_case(&question));
    if word_count(&question) < config.min_question_words || vague || answer.is_empty() {
        return None;
    }
    Some(QaPair {
        question,
        answer,
        ..pair.clone()
    })
}

pub fn clean_pairs(pairs: &[QaPair], config: &CleanConfig) -> Vec<QaPair> {
    pairs.iter().filter_map(|p| clean_pair(p, config)).collect()
}

fn question_key(p: &QaPair) -> (String, String) {
    (p.image_id.clone(), collapse_whitespace(&p.question).to_lowercase())
}

/// Drops pairs asking the same question about the same image, keeping the
/// one that comes first in provenance order. Survivors keep input order.
pub fn dedupe(pairs: Vec<QaPair>) -> Vec<QaPair> {
    let mut keep: HashMap<(String, String), usize> = HashMap::new();
    for (i, p) in pairs.iter().enumerate() {
        keep.entry(question_key(p))
            .and_modify(|k| {
                let cur = &pairs[*k];
                if (p.provenance.order_key(), &p.qa_id) < (cur.provenance.order_key(), &cur.qa_id) {
                    *k = i;
                }
            })
            .or_insert(i);
    }
    let winners: BTreeSet<usize> = keep.into_values().collect();
    pairs
        .into_iter()
        .enumerate()
        .filter(|(i, _)| winners.contains(i))
        .map(|(_, p)| p)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalancePolicy {
    /// Randomly drop pairs of the larger class.
    Subsample,
    /// Add pairs of the smaller class from a pool of spares.
    Augment,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    pub yes_before: usize,
    pub no_before: usize,
    pub yes_after: usize,
    pub no_after: usize,
    pub removed: Vec<String>,
    pub added: Vec<String>,
    pub balanced: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn yes_no_counts(pairs: &[QaPair]) -> (usize, usize) {
    let yn = pairs.iter().filter(|p| p.qtype == QuestionType::YesNo);
    let yes = yn.clone().filter(|p| p.answer == "yes").count();
    let no = yn.filter(|p| p.answer == "no").count();
    (yes, no)
}

/// Makes the smallest change that brings |#yes - #no| within `tolerance`.
/// `spares` supplies extra pairs for [`BalancePolicy::Augment`]; when too
/// few usable spares exist the input is returned unchanged and the report
/// says so.
pub fn balance_yesno(
    pairs: Vec<QaPair>,
    spares: &[QaPair],
    seed: u64,
    tolerance: usize,
    policy: BalancePolicy,
) -> (Vec<QaPair>, BalanceReport) {
    let (yes, no) = yes_no_counts(&pairs);
    let mut report = BalanceReport {
        yes_before: yes,
        no_before: no,
        yes_after: yes,
        no_after: no,
        balanced: yes.abs_diff(no) <= tolerance,
        ..BalanceReport::default()
    };
    if report.balanced {
        return (pairs, report);
    }
    let excess = yes.abs_diff(no) - tolerance;
    let (major, minor) = if yes > no { ("yes", "no") } else { ("no", "yes") };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match policy {
        BalancePolicy::Subsample => {
            let mut idx: Vec<usize> = pairs
                .iter()
                .enumerate()
                .filter(|(_, p)| p.qtype == QuestionType::YesNo && p.answer == major)
                .map(|(i, _)| i)
                .collect();
            idx.shuffle(&mut rng);
            let drop: BTreeSet<usize> = idx.into_iter().take(excess).collect();
            let mut kept = Vec::with_capacity(pairs.len() - drop.len());
            for (i, p) in pairs.into_iter().enumerate() {
                if drop.contains(&i) {
                    report.removed.push(p.qa_id);
                } else {
                    kept.push(p);
                }
            }
            report.removed.sort();
            finish_report(&mut report, &kept, tolerance);
            (kept, report)
        }
        BalancePolicy::Augment => {
            let taken: BTreeSet<(String, String)> = pairs.iter().map(question_key).collect();
            let ids: BTreeSet<&str> = pairs.iter().map(|p| p.qa_id.as_str()).collect();
            let mut usable: Vec<&QaPair> = spares
                .iter()
                .filter(|s| s.qtype == QuestionType::YesNo && s.answer == minor)
                .filter(|s| !ids.contains(s.qa_id.as_str()) && !taken.contains(&question_key(s)))
                .collect();
            usable.sort_by(|a, b| a.qa_id.cmp(&b.qa_id));
            usable.dedup_by(|a, b| question_key(a) == question_key(b));
            if usable.len() < excess {
                report.note = Some(format!(
                    "need {excess} extra \"{minor}\" pairs, only {} available; left unchanged",
                    usable.len()
                ));
                return (pairs, report);
            }
            usable.shuffle(&mut rng);
            let mut out = pairs;
            for s in usable.into_iter().take(excess) {
                report.added.push(s.qa_id.clone());
                out.push(s.clone());
            }
            report.added.sort();
            finish_report(&mut report, &out, tolerance);
            (out, report)
        }
    }
}

fn finish_report(report: &mut BalanceReport, pairs: &[QaPair], tolerance: usize) {
    let (yes, no) = yes_no_counts(pairs);
    report.yes_after = yes;
    report.no_after = no;
    report.balanced = yes.abs_diff(no) <= tolerance;
}

/// Part sizes by largest-remainder rounding; ties go to the earlier part.
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> Result<[usize; 3], AssembleError> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(*r > 0.0) || !r.is_finite()) || (sum - 1.0).abs() > 1e-9 {
        return Err(AssembleError::Ratios(ratios.to_vec()));
    }
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, e) in sizes.iter_mut().zip(&exact) {
        *s = e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).expect("finite").then(a.cmp(&b))
    });
    let assigned: usize = sizes.iter().sum();
    for &i in order.iter().take(n - assigned) {
        sizes[i] += 1;
    }
    Ok(sizes)
}

/// Shuffles the sorted, distinct image ids with a seeded RNG and cuts them
/// into train/val/test.
pub fn split_dataset(image_ids: &[String], seed: u64, ratios: [f64; 3]) -> Result<DatasetSplit, AssembleError> {
    let mut ids: Vec<String> = image_ids.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if ids.len() < 3 {
        return Err(AssembleError::TooFewImages {
            needed: 3,
            have: ids.len(),
        });
    }
    let [train, val, _] = split_sizes(ids.len(), ratios)?;
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut it = ids.into_iter();
    Ok(DatasetSplit {
        train: it.by_ref().take(train).collect(),
        val: it.by_ref().take(val).collect(),
        test: it.collect(),
    })
}

pub fn split_corpus(corpus: &Corpus, seed: u64, ratios: [f64; 3]) -> Result<DatasetSplit, AssembleError> {
    let ids: Vec<String> = corpus.images.iter().map(|i| i.image_id.clone()).collect();
    split_dataset(&ids, seed, ratios)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MinAvgMax {
    pub min: usize,
    pub avg: f64,
    pub max: usize,
}

impl MinAvgMax {
    fn of(values: &[usize]) -> MinAvgMax {
        if values.is_empty() {
            return MinAvgMax::default();
        }
        MinAvgMax {
            min: *values.iter().min().expect("non-empty"),
            avg: values.iter().sum::<usize>() as f64 / values.len() as f64,
            max: *values.iter().max().expect("non-empty"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeCount {
    pub qtype: QuestionType,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerCount {
    pub answer: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub images: usize,
    pub questions: usize,
    pub questions_per_image: MinAvgMax,
    pub words_per_question: MinAvgMax,
    pub words_per_answer: MinAvgMax,
    pub types: Vec<TypeCount>,
    pub yes: usize,
    pub no: usize,
    /// Answers of open-ended questions, most frequent first.
    pub answer_frequency: Vec<AnswerCount>,
}

/// Statistics over every image of the corpus and all pairs that were not
/// rejected in review.
pub fn compute_stats(corpus: &Corpus) -> StatsReport {
    let pairs: Vec<&QaPair> = corpus
        .qa_pairs
        .iter()
        .filter(|p| p.status != ReviewStatus::Rejected)
        .collect();
    let mut per_image: BTreeMap<&str, usize> = corpus.images.iter().map(|i| (i.image_id.as_str(), 0)).collect();
    for p in &pairs {
        *per_image.entry(p.image_id.as_str()).or_default() += 1;
    }
    let per_image: Vec<usize> = per_image.into_values().collect();
    let q_words: Vec<usize> = pairs.iter().map(|p| word_count(&p.question)).collect();
    let a_words: Vec<usize> = pairs.iter().map(|p| word_count(&p.answer)).collect();
    let types = QuestionType::ALL
        .iter()
        .map(|&t| {
            let count = pairs.iter().filter(|p| p.qtype == t).count();
            TypeCount {
                qtype: t,
                count,
                percent: if pairs.is_empty() {
                    0.0
                } else {
                    100.0 * count as f64 / pairs.len() as f64
                },
            }
        })
        .collect();
    let yes = pairs
        .iter()
        .filter(|p| p.qtype == QuestionType::YesNo && p.answer == "yes")
        .count();
    let no = pairs
        .iter()
        .filter(|p| p.qtype == QuestionType::YesNo && p.answer == "no")
        .count();
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for p in pairs.iter().filter(|p| p.qtype.is_open()) {
        *freq.entry(p.answer.to_lowercase()).or_default() += 1;
    }
    let mut answer_frequency: Vec<AnswerCount> = freq
        .into_iter()
        .map(|(answer, count)| AnswerCount { answer, count })
        .collect();
    answer_frequency.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.answer.cmp(&b.answer)));
    StatsReport {
        images: corpus.images.len(),
        questions: pairs.len(),
        questions_per_image: MinAvgMax::of(&per_image),
        words_per_question: MinAvgMax::of(&q_words),
        words_per_answer: MinAvgMax::of(&a_words),
        types,
        yes,
        no,
        answer_frequency,
    }
}

impl StatsReport {
    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24}{:>10}{:>10}{:>10}", "", "Maximum", "Average", "Minimum");
        for (name, m) in [
            ("# questions per image", self.questions_per_image),
            ("# words per question", self.words_per_question),
            ("# words per answer", self.words_per_answer),
        ] {
            let _ = writeln!(s, "{:<24}{:>10}{:>10.2}{:>10}", name, m.max, m.avg, m.min);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<16}{:>10}{:>10}", "Question type", "Count", "Percent");
        for t in &self.types {
            let _ = writeln!(s, "{:<16}{:>10}{:>9.1}%", t.qtype.as_str(), t.count, t.percent);
        }
        let _ = writeln!(s, "{:<16}{:>10}", "total", self.questions);
        let _ = writeln!(s);
        let _ = writeln!(s, "images: {}  yes: {}  no: {}", self.images, self.yes, self.no);
        s
    }

    /// Answer frequencies as CSV with columns rank, answer, count.
    pub fn answer_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "answer", "count"]).expect("in-memory write");
        for (i, a) in self.answer_frequency.iter().enumerate() {
            w.write_record([(i + 1).to_string(), a.answer.clone(), a.count.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}
