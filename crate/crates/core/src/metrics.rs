//! Answer scoring: yes/no accuracy, exact match, macro-averaged token F1
//! and corpus BLEU.
//!
//! Exact match and F1 compare answers after [`normalize_answer`]. BLEU
//! tokenizes by lowercasing and removing punctuation only, so articles
//! count as n-grams there. BLEU uses unsmoothed unigram precision and
//! add-one smoothing for n >= 2, with the usual brevity penalty.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{QaPair, QuestionType};
use crate::text::{collapse_whitespace, normalize_answer};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("empty evaluation set")]
    Empty,
    #[error("{preds} predictions for {golds} gold answers")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("BLEU order must be at least 1")]
    BleuOrder,
}

fn aligned<A, B>(preds: &[A], golds: &[B]) -> Result<(), MetricsError> {
    if preds.len() != golds.len() {
        return Err(MetricsError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if golds.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Fraction of pairs equal after normalization.
pub fn accuracy_yesno<S: AsRef<str>>(preds: &[S], golds: &[S]) -> Result<f64, MetricsError> {
    aligned(preds, golds)?;
    let hits = preds
        .iter()
        .zip(golds)
        .filter(|(p, g)| normalize_answer(p.as_ref()) == normalize_answer(g.as_ref()))
        .count();
    Ok(hits as f64 / golds.len() as f64)
}

/// Percentage of exact matches after normalization.
pub fn exact_match<S: AsRef<str>>(preds: &[S], golds: &[S]) -> Result<f64, MetricsError> {
    Ok(100.0 * accuracy_yesno(preds, golds)?)
}

/// Token-multiset F1 of one pair, in [0, 1]. Two empty answers score 1.
pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalize_answer(pred);
    let g = normalize_answer(gold);
    let p: Vec<&str> = p.split_whitespace().collect();
    let g: Vec<&str> = g.split_whitespace().collect();
    if p.is_empty() || g.is_empty() {
        return if p.is_empty() && g.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / p.len() as f64;
    let recall = overlap as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Mean per-pair F1, as a percentage.
pub fn macro_f1<S: AsRef<str>>(preds: &[S], golds: &[S]) -> Result<f64, MetricsError> {
    aligned(preds, golds)?;
    let total: f64 = preds
        .iter()
        .zip(golds)
        .map(|(p, g)| token_f1(p.as_ref(), g.as_ref()))
        .sum();
    Ok(100.0 * total / golds.len() as f64)
}

fn bleu_tokens(s: &str) -> Vec<String> {
    let cleaned: String = s
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_punctuation() { ' ' } else { c })
        .collect();
    collapse_whitespace(&cleaned)
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_default() += 1;
        }
    }
    m
}

/// Corpus-level BLEU with one reference per prediction, in [0, 1].
pub fn bleu<S: AsRef<str>>(preds: &[S], golds: &[S], max_n: usize) -> Result<f64, MetricsError> {
    if max_n < 1 {
        return Err(MetricsError::BleuOrder);
    }
    aligned(preds, golds)?;
    let pairs: Vec<(Vec<String>, Vec<String>)> = preds
        .iter()
        .zip(golds)
        .map(|(p, g)| (bleu_tokens(p.as_ref()), bleu_tokens(g.as_ref())))
        .collect();
    let c: usize = pairs.iter().map(|(p, _)| p.len()).sum();
    let r: usize = pairs.iter().map(|(_, g)| g.len()).sum();
    if c == 0 {
        return Ok(if r == 0 { 1.0 } else { 0.0 });
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let mut matched = 0usize;
        let mut total = 0usize;
        for (p, g) in &pairs {
            let pg = ngrams(p, n);
            let gg = ngrams(g, n);
            for (gram, count) in pg {
                total += count;
                matched += count.min(gg.get(gram).copied().unwrap_or(0));
            }
        }
        let precision = if n == 1 {
            if total == 0 || matched == 0 {
                return Ok(0.0);
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        log_sum += precision.ln();
    }
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    Ok(bp * (log_sum / max_n as f64).exp())
}

/// One model answer, as read from a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub qa_id: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    pub qtype: QuestionType,
    pub count: usize,
    /// Accuracy for yes/no, exact match for open types; percent.
    pub exact_match: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerScore {
    pub answer: String,
    pub count: usize,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub total: usize,
    /// Gold pairs with no prediction; scored as empty answers.
    pub missing: usize,
    /// Fraction in [0, 1]; absent when there are no yes/no pairs.
    pub accuracy_yesno: Option<f64>,
    /// Open-ended questions only, percent.
    pub exact_match: Option<f64>,
    pub macro_f1: Option<f64>,
    /// BLEU-1..4 on open-ended questions.
    pub bleu: BTreeMap<usize, f64>,
    pub per_type: Vec<TypeScore>,
    /// Mean F1 per normalized gold answer of open-ended questions, most
    /// frequent first.
    pub per_answer: Vec<AnswerScore>,
}

/// Scores predictions against gold pairs. Predictions for unknown ids are
/// ignored; later duplicates override earlier ones.
pub fn evaluate(golds: &[QaPair], predictions: &[Prediction]) -> Result<EvalResult, MetricsError> {
    if golds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let by_id: HashMap<&str, &str> = predictions
        .iter()
        .map(|p| (p.qa_id.as_str(), p.answer.as_str()))
        .collect();
    let missing = golds.iter().filter(|g| !by_id.contains_key(g.qa_id.as_str())).count();
    let pred_of = |g: &QaPair| by_id.get(g.qa_id.as_str()).copied().unwrap_or("").to_string();

    let split = |keep: &dyn Fn(&QaPair) -> bool| -> (Vec<String>, Vec<String>) {
        golds
            .iter()
            .filter(|g| keep(g))
            .map(|g| (pred_of(g), g.answer.clone()))
            .unzip()
    };
    let (yn_pred, yn_gold) = split(&|g| g.qtype == QuestionType::YesNo);
    let (op_pred, op_gold) = split(&|g| g.qtype.is_open());

    let accuracy_yesno = (!yn_gold.is_empty()).then(|| accuracy_yesno(&yn_pred, &yn_gold)).transpose()?;
    let (exact, f1, bleu_scores) = if op_gold.is_empty() {
        (None, None, BTreeMap::new())
    } else {
        let mut b = BTreeMap::new();
        for n in 1..=4 {
            b.insert(n, bleu(&op_pred, &op_gold, n)?);
        }
        (Some(exact_match(&op_pred, &op_gold)?), Some(macro_f1(&op_pred, &op_gold)?), b)
    };

    let mut per_type = Vec::new();
    for t in QuestionType::ALL {
        let (p, g) = split(&|q| q.qtype == t);
        if g.is_empty() {
            continue;
        }
        per_type.push(TypeScore {
            qtype: t,
            count: g.len(),
            exact_match: exact_match(&p, &g)?,
            macro_f1: macro_f1(&p, &g)?,
        });
    }

    let mut by_answer: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for (p, g) in op_pred.iter().zip(&op_gold) {
        let e = by_answer.entry(normalize_answer(g)).or_default();
        e.0 += 1;
        e.1 += token_f1(p, g);
    }
    let mut per_answer: Vec<AnswerScore> = by_answer
        .into_iter()
        .map(|(answer, (count, sum))| AnswerScore {
            answer,
            count,
            f1: sum / count as f64,
        })
        .collect();
    per_answer.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.answer.cmp(&b.answer)));

    Ok(EvalResult {
        total: golds.len(),
        missing,
        accuracy_yesno,
        exact_match: exact,
        macro_f1: f1,
        bleu: bleu_scores,
        per_type,
        per_answer,
    })
}

impl EvalResult {
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>10}{:>10}{:>10}{:>10}{:>12}{:>10}",
            "Accuracy", "BLEU-1", "BLEU-2", "BLEU-3", "Exact match", "F1"
        );
        let _ = writeln!(
            s,
            "{:>10}{:>10}{:>10}{:>10}{:>12}{:>10}",
            fmt(self.accuracy_yesno.map(|a| 100.0 * a)),
            fmt(self.bleu.get(&1).copied()),
            fmt(self.bleu.get(&2).copied()),
            fmt(self.bleu.get(&3).copied()),
            fmt(self.exact_match),
            fmt(self.macro_f1)
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<16}{:>8}{:>12}{:>10}", "Question type", "Count", "EM/Acc", "F1");
        for t in &self.per_type {
            let _ = writeln!(
                s,
                "{:<16}{:>8}{:>12.2}{:>10.2}",
                t.qtype.as_str(),
                t.count,
                t.exact_match,
                t.macro_f1
            );
        }
        if self.missing > 0 {
            let _ = writeln!(s, "\n{} of {} questions had no prediction", self.missing, self.total);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy_yesno(&["yes", "no"], &["yes", "no"]).unwrap(), 1.0);
        assert_eq!(accuracy_yesno(&["yes", "no"], &["yes", "yes"]).unwrap(), 0.5);
        let empty: [&str; 0] = [];
        assert_eq!(accuracy_yesno(&empty, &empty), Err(MetricsError::Empty));
        assert_eq!(
            accuracy_yesno(&["yes"], &["yes", "no"]),
            Err(MetricsError::LengthMismatch { preds: 1, golds: 2 })
        );
    }

    #[test]
    fn exact_match_normalizes() {
        assert_eq!(exact_match(&["The Lumen"], &["lumen"]).unwrap(), 100.0);
        assert_eq!(exact_match(&["necrosis"], &["fibrosis"]).unwrap(), 0.0);
    }

    #[test]
    fn f1_examples() {
        assert!((token_f1("coagulative necrosis", "necrosis") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(token_f1("a b", "c d"), 0.0);
        assert_eq!(token_f1("", ""), 1.0);
        assert_eq!(token_f1("x", ""), 0.0);
        assert_eq!(token_f1("x x y", "x y y"), 2.0 / 3.0);
    }

    #[test]
    fn bleu_examples() {
        let bp = (1.0f64 - 3.0 / 2.0).exp();
        assert!((bleu(&["the cat"], &["the cat sat"], 1).unwrap() - bp).abs() < 1e-9);
        assert!((bleu(&["the cat"], &["the cat sat"], 2).unwrap() - bp).abs() < 1e-9);
        assert_eq!(bleu(&["a b c"], &["a b c"], 1).unwrap(), 1.0);
        assert_eq!(bleu(&["x y"], &["a b"], 1).unwrap(), 0.0);
        assert_eq!(bleu(&["x"], &["x"], 0), Err(MetricsError::BleuOrder));
    }

    fn answers() -> impl Strategy<Value = Vec<(String, String)>> {
        prop::collection::vec(("[a-c]{1,2}( [a-c]{1,2}){0,3}", "[a-c]{1,2}( [a-c]{1,2}){0,3}"), 1..12)
    }

    proptest! {
        #[test]
        fn self_scores_are_perfect(pairs in answers()) {
            let x: Vec<String> = pairs.iter().map(|p| p.0.clone()).collect();
            prop_assert_eq!(exact_match(&x, &x).unwrap(), 100.0);
            prop_assert!((macro_f1(&x, &x).unwrap() - 100.0).abs() < 1e-9);
            for n in 1..=4 {
                prop_assert!((bleu(&x, &x, n).unwrap() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn em_bounded_by_f1(pairs in answers()) {
            let (p, g): (Vec<String>, Vec<String>) = pairs.into_iter().unzip();
            let em = exact_match(&p, &g).unwrap();
            let f1 = macro_f1(&p, &g).unwrap();
            prop_assert!(em <= f1 + 1e-9 && f1 <= 100.0 + 1e-9);
            for n in 1..=4 {
                let b = bleu(&p, &g, n).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
            }
        }

        #[test]
        fn order_does_not_matter(pairs in answers(), rot in 0usize..12) {
            let (p, g): (Vec<String>, Vec<String>) = pairs.iter().cloned().unzip();
            let k = rot % pairs.len();
            let mut rp = p.clone();
            let mut rg = g.clone();
            rp.rotate_left(k);
            rg.rotate_left(k);
            prop_assert!((macro_f1(&p, &g).unwrap() - macro_f1(&rp, &rg).unwrap()).abs() < 1e-9);
            prop_assert!((bleu(&p, &g, 3).unwrap() - bleu(&rp, &rg, 3).unwrap()).abs() < 1e-9);
            prop_assert_eq!(exact_match(&p, &g).unwrap(), exact_match(&rp, &rg).unwrap());
        }
    }
}
