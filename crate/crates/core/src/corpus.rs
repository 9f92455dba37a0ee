//! Interchange data model: images, annotated captions, QA pairs and splits.
//!
//! A corpus file is UTF-8 JSON with top-level keys `images`, `captions`,
//! and optionally `qa_pairs` and `splits`. See `docs/corpus.schema.json`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{parse_ptb, unescape_word, ParseTree};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invariant violated by {record}: {rule}")]
    Invariant { record: String, rule: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CorpusError {
    fn invariant(record: impl Into<String>, rule: impl Into<String>) -> Self {
        CorpusError::Invariant {
            record: record.into(),
            rule: rule.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageSource {
    Textbook,
    Web,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub image_id: String,
    pub source: ImageSource,
    pub uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub pos: String,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityLabel {
    Date,
    Time,
    Location,
    Number,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    /// Inclusive token index.
    pub start_token: usize,
    /// Inclusive token index.
    pub end_token: usize,
    pub label: EntityLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<Token>,
    #[serde(default)]
    pub entities: Vec<EntitySpan>,
    /// Penn-bracketed constituency parse. Absent when the annotator failed to
    /// parse the sentence; such sentences are skipped downstream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse: Option<String>,
    /// Dependency parse, carried through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependencies: Option<serde_json::Value>,
}

impl AnnotatedSentence {
    pub fn tree(&self) -> Option<ParseTree> {
        self.parse.as_deref().and_then(|p| parse_ptb(p).ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub caption_id: String,
    pub image_id: String,
    pub raw_text: String,
    pub sentences: Vec<AnnotatedSentence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    What,
    Where,
    When,
    Whose,
    How,
    HowMuchMany,
    YesNo,
}

impl QuestionType {
    pub const ALL: [QuestionType; 7] = [
        QuestionType::What,
        QuestionType::Where,
        QuestionType::When,
        QuestionType::Whose,
        QuestionType::How,
        QuestionType::HowMuchMany,
        QuestionType::YesNo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::What => "what",
            QuestionType::Where => "where",
            QuestionType::When => "when",
            QuestionType::Whose => "whose",
            QuestionType::How => "how",
            QuestionType::HowMuchMany => "how_much_many",
            QuestionType::YesNo => "yes_no",
        }
    }

    pub fn is_open(self) -> bool {
        self != QuestionType::YesNo
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    Generated,
    Accepted,
    Edited,
    Rejected,
}

impl ReviewStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ReviewStatus::Generated => "generated",
            ReviewStatus::Accepted => "accepted",
            ReviewStatus::Edited => "edited",
            ReviewStatus::Rejected => "rejected",
        }
    }
}

impl std::str::FromStr for ReviewStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "generated" => Ok(ReviewStatus::Generated),
            "accepted" => Ok(ReviewStatus::Accepted),
            "edited" => Ok(ReviewStatus::Edited),
            "rejected" => Ok(ReviewStatus::Rejected),
            other => Err(format!("unknown status {other}")),
        }
    }
}

/// Phrase substituted into a yes/no question to make its answer "no".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub original: String,
    pub replacement: String,
    pub source_caption_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub caption_id: String,
    pub sentence_index: usize,
    pub rule_id: String,
    /// Simplification rule that produced the clause ("identity", "R1".."R4").
    #[serde(default = "identity_rule")]
    pub simplification: String,
    /// Index of the clause among the simplified outputs of the sentence.
    #[serde(default)]
    pub clause_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<Replacement>,
}

fn identity_rule() -> String {
    "identity".to_string()
}

impl Provenance {
    /// Sort key used wherever QA pairs need a stable order.
    pub fn order_key(&self) -> (&str, usize, usize, &str) {
        (
            &self.caption_id,
            self.sentence_index,
            self.clause_index,
            &self.rule_id,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub qa_id: String,
    pub image_id: String,
    pub qtype: QuestionType,
    pub question: String,
    pub answer: String,
    pub provenance: Provenance,
    pub status: ReviewStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: BTreeSet<String>,
    pub val: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl DatasetSplit {
    pub fn part(&self, name: &str) -> Option<&BTreeSet<String>> {
        match name {
            "train" => Some(&self.train),
            "val" => Some(&self.val),
            "test" => Some(&self.test),
            _ => None,
        }
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.train.len(), self.val.len(), self.test.len()]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub images: Vec<ImageRef>,
    pub captions: Vec<CaptionRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qa_pairs: Vec<QaPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<DatasetSplit>,
}

impl Corpus {
    pub fn image(&self, image_id: &str) -> Option<&ImageRef> {
        self.images.iter().find(|i| i.image_id == image_id)
    }

    pub fn caption(&self, caption_id: &str) -> Option<&CaptionRecord> {
        self.captions.iter().find(|c| c.caption_id == caption_id)
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Corpus, CorpusError> {
        let corpus: Corpus = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serializes") + "\n"
    }

    /// Checks every type invariant and referential link.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut image_ids = HashSet::new();
        for img in &self.images {
            if !image_ids.insert(img.image_id.as_str()) {
                return Err(CorpusError::invariant(
                    format!("image {}", img.image_id),
                    "duplicate image_id",
                ));
            }
            match (img.source, img.page) {
                (ImageSource::Textbook, None) => {
                    return Err(CorpusError::invariant(
                        format!("image {}", img.image_id),
                        "textbook image requires page",
                    ))
                }
                (ImageSource::Textbook, Some(0)) => {
                    return Err(CorpusError::invariant(
                        format!("image {}", img.image_id),
                        "page must be positive",
                    ))
                }
                (ImageSource::Web, Some(_)) => {
                    return Err(CorpusError::invariant(
                        format!("image {}", img.image_id),
                        "page only allowed for textbook images",
                    ))
                }
                _ => {}
            }
        }

        let mut caption_ids = HashMap::new();
        for cap in &self.captions {
            let record = format!("caption {}", cap.caption_id);
            if caption_ids.insert(cap.caption_id.as_str(), cap).is_some() {
                return Err(CorpusError::invariant(record, "duplicate caption_id"));
            }
            if !image_ids.contains(cap.image_id.as_str()) {
                return Err(CorpusError::invariant(
                    record,
                    format!("dangling image reference {}", cap.image_id),
                ));
            }
            if cap.sentences.is_empty() {
                return Err(CorpusError::invariant(record, "caption has no sentences"));
            }
            for (i, s) in cap.sentences.iter().enumerate() {
                validate_sentence(s).map_err(|rule| {
                    CorpusError::invariant(format!("caption {} sentence {i}", cap.caption_id), rule)
                })?;
            }
        }

        let mut qa_ids = HashSet::new();
        for qa in &self.qa_pairs {
            let record = format!("qa {}", qa.qa_id);
            if !qa_ids.insert(qa.qa_id.as_str()) {
                return Err(CorpusError::invariant(record, "duplicate qa_id"));
            }
            if !image_ids.contains(qa.image_id.as_str()) {
                return Err(CorpusError::invariant(
                    record,
                    format!("dangling image reference {}", qa.image_id),
                ));
            }
            if !caption_ids.contains_key(qa.provenance.caption_id.as_str()) {
                return Err(CorpusError::invariant(
                    record,
                    format!("dangling caption reference {}", qa.provenance.caption_id),
                ));
            }
            if !qa.question.trim_end().ends_with('?') {
                return Err(CorpusError::invariant(record, "question must end with '?'"));
            }
            if qa.qtype == QuestionType::YesNo && qa.answer != "yes" && qa.answer != "no" {
                return Err(CorpusError::invariant(
                    record,
                    "yes_no answer must be \"yes\" or \"no\"",
                ));
            }
        }

        if let Some(split) = &self.splits {
            let parts = [&split.train, &split.val, &split.test];
            let mut seen = HashSet::new();
            for part in parts {
                for id in part {
                    if !seen.insert(id.as_str()) {
                        return Err(CorpusError::invariant(
                            format!("split image {id}"),
                            "image appears in two splits",
                        ));
                    }
                    if !image_ids.contains(id.as_str()) {
                        return Err(CorpusError::invariant(
                            format!("split image {id}"),
                            "dangling image reference",
                        ));
                    }
                }
            }
            if seen.len() != image_ids.len() {
                return Err(CorpusError::invariant(
                    "splits",
                    "splits do not cover every image",
                ));
            }
        }
        Ok(())
    }
}

fn validate_sentence(s: &AnnotatedSentence) -> Result<(), String> {
    let len = s.text.chars().count();
    let mut prev_end = 0;
    for (i, t) in s.tokens.iter().enumerate() {
        if t.char_start >= t.char_end {
            return Err(format!("token {i} has empty or inverted offsets"));
        }
        if i > 0 && t.char_start < prev_end {
            return Err(format!("token {i} overlaps the previous token"));
        }
        if t.char_end > len {
            return Err(format!("token {i} ends past the sentence text"));
        }
        prev_end = t.char_end;
    }
    for (i, e) in s.entities.iter().enumerate() {
        if e.start_token > e.end_token || e.end_token >= s.tokens.len() {
            return Err(format!("entity {i} has an invalid token span"));
        }
    }
    if let Some(parse) = &s.parse {
        let tree = parse_ptb(parse).map_err(|e| format!("unparseable tree: {e}"))?;
        let leaves = tree.words(tree.root());
        let tokens: Vec<&str> = s.tokens.iter().map(|t| unescape_word(&t.text)).collect();
        if leaves != tokens {
            return Err("parse leaves do not match token texts".to_string());
        }
    }
    Ok(())
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Corpus::from_json(&text, &path.display().to_string())
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    write_atomic(path, corpus.to_json().as_bytes()).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes through a sibling temporary file and renames it over `path`, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        io::Write::write_all(&mut f, bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token(text: &str, pos: &str, start: usize) -> Token {
        Token {
            text: text.into(),
            pos: pos.into(),
            char_start: start,
            char_end: start + text.chars().count(),
        }
    }

    pub(crate) fn fixture() -> Corpus {
        Corpus {
            images: vec![ImageRef {
                image_id: "img1".into(),
                source: ImageSource::Textbook,
                uri: "images/img1.png".into(),
                page: Some(12),
                figure_label: Some("Figure 12.3".into()),
            }],
            captions: vec![CaptionRecord {
                caption_id: "cap1".into(),
                image_id: "img1".into(),
                raw_text: "Gallstones are present. The lumen is wide.".into(),
                sentences: vec![
                    AnnotatedSentence {
                        text: "Gallstones are present.".into(),
                        tokens: vec![
                            token("Gallstones", "NNS", 0),
                            token("are", "VBP", 11),
                            token("present", "JJ", 15),
                            token(".", ".", 22),
                        ],
                        entities: vec![],
                        parse: Some(
                            "(ROOT (S (NP (NNS Gallstones)) (VP (VBP are) (ADJP (JJ present))) (. .)))"
                                .into(),
                        ),
                        dependencies: None,
                    },
                    AnnotatedSentence {
                        text: "The lumen is wide.".into(),
                        tokens: vec![
                            token("The", "DT", 0),
                            token("lumen", "NN", 4),
                            token("is", "VBZ", 10),
                            token("wide", "JJ", 13),
                            token(".", ".", 17),
                        ],
                        entities: vec![EntitySpan {
                            start_token: 1,
                            end_token: 1,
                            label: EntityLabel::Other,
                        }],
                        parse: Some(
                            "(S (NP (DT The) (NN lumen)) (VP (VBZ is) (ADJP (JJ wide))) (. .))".into(),
                        ),
                        dependencies: None,
                    },
                ],
            }],
            qa_pairs: vec![],
            splits: None,
        }
    }

    #[test]
    fn empty_corpus() {
        let c = Corpus::from_json(r#"{"images":[],"captions":[]}"#, "mem").unwrap();
        assert_eq!(c.images.len(), 0);
        assert_eq!(c.captions.len(), 0);
    }

    #[test]
    fn fixture_fields() {
        let json = fixture().to_json();
        let c = Corpus::from_json(&json, "mem").unwrap();
        assert_eq!(c.images.len(), 1);
        assert_eq!(c.captions.len(), 1);
        assert_eq!(c.captions[0].sentences.len(), 2);
        assert_eq!(c.images[0].page, Some(12));
        assert_eq!(c.images[0].figure_label.as_deref(), Some("Figure 12.3"));
        assert_eq!(c.captions[0].sentences[1].tokens[1].text, "lumen");
        assert_eq!(c.captions[0].sentences[1].entities[0].label, EntityLabel::Other);
    }

    #[test]
    fn dangling_image_reference() {
        let mut c = fixture();
        c.captions[0].image_id = "nope".into();
        let err = Corpus::from_json(&c.to_json(), "mem").unwrap_err();
        assert!(err.to_string().contains("dangling image reference"), "{err}");
        assert!(err.to_string().contains("caption cap1"));
    }

    #[test]
    fn parse_error_has_line() {
        let err = Corpus::from_json("{\n\"images\": [,]\n}", "bad.json").unwrap_err();
        match err {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invariant_violations() {
        let mut c = fixture();
        c.images[0].page = None;
        assert!(c.validate().unwrap_err().to_string().contains("requires page"));

        let mut c = fixture();
        c.captions[0].sentences[0].tokens[1].char_start = 5;
        assert!(c.validate().unwrap_err().to_string().contains("overlaps"));

        let mut c = fixture();
        c.captions[0].sentences[0].parse = Some("(S (NP (NNS Stones)) (VP (VBP are)))".into());
        assert!(c.validate().unwrap_err().to_string().contains("leaves"));

        let mut c = fixture();
        c.captions[0].sentences[1].entities[0].end_token = 9;
        assert!(c.validate().is_err());

        let mut c = fixture();
        c.captions[0].sentences.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn qa_invariants() {
        let mut c = fixture();
        c.qa_pairs.push(QaPair {
            qa_id: "q1".into(),
            image_id: "img1".into(),
            qtype: QuestionType::YesNo,
            question: "Are gallstones present?".into(),
            answer: "maybe".into(),
            provenance: Provenance {
                caption_id: "cap1".into(),
                sentence_index: 0,
                rule_id: "yes_no".into(),
                simplification: "identity".into(),
                clause_index: 0,
                replacement: None,
            },
            status: ReviewStatus::Generated,
        });
        assert!(c.validate().unwrap_err().to_string().contains("yes_no answer"));
        c.qa_pairs[0].answer = "yes".into();
        c.validate().unwrap();
        c.qa_pairs[0].question = "Are gallstones present".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn split_invariants() {
        let mut c = fixture();
        c.splits = Some(DatasetSplit {
            train: ["img1".to_string()].into(),
            ..Default::default()
        });
        c.validate().unwrap();
        c.splits.as_mut().unwrap().test.insert("img1".into());
        assert!(c.validate().is_err());
        c.splits = Some(DatasetSplit::default());
        assert!(c.validate().is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for c in [Corpus::default(), fixture()] {
            let path = dir.path().join("c.json");
            save_corpus(&c, &path).unwrap();
            assert_eq!(load_corpus(&path).unwrap(), c);
        }
    }

    #[test]
    fn unwritable_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("c.json");
        assert!(matches!(
            save_corpus(&Corpus::default(), &path),
            Err(CorpusError::Io { .. })
        ));
    }
}
