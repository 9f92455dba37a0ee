//! Review journal and the state it materializes.
//!
//! Decisions are appended as one JSON object per line. Loading replays
//! complete lines in timestamp order (file order for equal stamps); a
//! truncated final line is dropped with a warning.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemble::{clean_pair, CleanConfig};
use crate::corpus::{Corpus, QaPair, ReviewStatus};

pub const MAX_PAGE_SIZE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewAction {
    Accept,
    Reject,
    Edit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub qa_id: String,
    pub action: ReviewAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_answer: Option<String>,
    #[serde(default)]
    pub reviewer: String,
    /// UTC milliseconds since the epoch.
    #[serde(default)]
    pub timestamp_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("unknown qa_id {0}")]
    UnknownItem(String),
    #[error("edit of {0} changes neither question nor answer")]
    EmptyEdit(String),
    #[error("edited fields are only allowed on edit decisions ({0})")]
    UnexpectedEdit(String),
    #[error("edit of {0} leaves an empty or unusable question or answer")]
    MalformedEdit(String),
    #[error("page size must be between 1 and {MAX_PAGE_SIZE}")]
    InvalidPageSize,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: malformed journal entry: {source}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Non-fatal problem found while loading a journal or replaying it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReviewWarning {
    pub line: Option<usize>,
    pub message: String,
}

/// Conventional journal location next to a dataset file:
/// `qa.json` becomes `qa.review.jsonl`.
pub fn journal_path_for(dataset: &Path) -> PathBuf {
    let stem = dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    dataset.with_file_name(format!("{stem}.review.jsonl"))
}

/// Parses journal text. Complete lines must be valid; an unterminated
/// final line that fails to parse is reported and skipped.
pub fn parse_journal(text: &str, path: &Path) -> Result<(Vec<ReviewDecision>, Vec<ReviewWarning>), ReviewError> {
    let mut decisions = Vec::new();
    let mut warnings = Vec::new();
    let terminated = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ReviewDecision>(line) {
            Ok(d) => decisions.push(d),
            Err(e) if i + 1 == lines.len() && !terminated => warnings.push(ReviewWarning {
                line: Some(i + 1),
                message: format!("skipping truncated final journal line: {e}"),
            }),
            Err(source) => {
                return Err(ReviewError::Corrupt {
                    path: path.to_path_buf(),
                    line: i + 1,
                    source,
                })
            }
        }
    }
    Ok((decisions, warnings))
}

/// Reads a journal file. A missing file is an empty journal.
pub fn read_journal(path: &Path) -> Result<(Vec<ReviewDecision>, Vec<ReviewWarning>), ReviewError> {
    match fs::read_to_string(path) {
        Ok(text) => parse_journal(&text, path),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok((Vec::new(), Vec::new())),
        Err(source) => Err(ReviewError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// Append handle. Each decision is written as a single line and synced
/// before `append` returns.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
    last_timestamp: u64,
}

impl Journal {
    /// Opens (creating if needed) the journal and returns its existing
    /// decisions. A truncated tail is cut off so later appends start on a
    /// fresh line.
    pub fn open(path: &Path) -> Result<(Journal, Vec<ReviewDecision>, Vec<ReviewWarning>), ReviewError> {
        let io_err = |source| ReviewError::Io {
            path: path.to_path_buf(),
            source,
        };
        let (decisions, warnings) = read_journal(path)?;
        let file = OpenOptions::new().create(true).append(true).read(true).open(path).map_err(io_err)?;
        let text = fs::read(path).map_err(io_err)?;
        if !text.is_empty() && !text.ends_with(b"\n") {
            let keep = text.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
            let tail_ok = std::str::from_utf8(&text[keep..])
                .ok()
                .and_then(|t| serde_json::from_str::<ReviewDecision>(t).ok())
                .is_some();
            if tail_ok {
                (&file).write_all(b"\n").map_err(io_err)?;
            } else {
                file.set_len(keep as u64).map_err(io_err)?;
            }
        }
        let last_timestamp = decisions.iter().map(|d| d.timestamp_ms).max().unwrap_or(0);
        Ok((
            Journal {
                path: path.to_path_buf(),
                file,
                last_timestamp,
            },
            decisions,
            warnings,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes the decision, raising its timestamp to the last one written
    /// if the clock went backwards. Returns the decision as stored.
    pub fn append(&mut self, mut decision: ReviewDecision) -> Result<ReviewDecision, ReviewError> {
        decision.timestamp_ms = decision.timestamp_ms.max(self.last_timestamp);
        let mut line = serde_json::to_string(&decision).expect("decision serializes");
        line.push('\n');
        let io_err = |source| ReviewError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(line.as_bytes()).map_err(io_err)?;
        self.file.sync_data().map_err(io_err)?;
        self.last_timestamp = decision.timestamp_ms;
        Ok(decision)
    }
}

/// One queue row: the pair plus what a reviewer needs to judge it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueItem {
    #[serde(flatten)]
    pub pair: QaPair,
    pub image_uri: Option<String>,
    pub caption_text: Option<String>,
    pub sentence_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueuePage {
    pub items: Vec<QueueItem>,
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewProgress {
    pub total: usize,
    pub generated: usize,
    pub accepted: usize,
    pub edited: usize,
    pub rejected: usize,
}

/// A dataset with review decisions applied. Pairs keep their file order;
/// the queue lists them in provenance order.
#[derive(Debug, Clone)]
pub struct ReviewSession {
    corpus: Corpus,
    index: HashMap<String, usize>,
    queue_order: Vec<usize>,
    clean: CleanConfig,
}

impl ReviewSession {
    pub fn new(corpus: Corpus) -> ReviewSession {
        let pairs = &corpus.qa_pairs;
        let mut queue_order: Vec<usize> = (0..pairs.len()).collect();
        queue_order.sort_by(|&a, &b| {
            let (a, b) = (&pairs[a], &pairs[b]);
            a.provenance.order_key().cmp(&b.provenance.order_key()).then_with(|| a.qa_id.cmp(&b.qa_id))
        });
        let index = corpus
            .qa_pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.qa_id.clone(), i))
            .collect();
        ReviewSession {
            corpus,
            index,
            queue_order,
            clean: CleanConfig::default(),
        }
    }

    /// Applies `decisions` in timestamp order. Decisions that no longer fit
    /// the dataset are skipped with a warning.
    pub fn replay(corpus: Corpus, decisions: &[ReviewDecision]) -> (ReviewSession, Vec<ReviewWarning>) {
        let mut session = ReviewSession::new(corpus);
        let mut ordered: Vec<&ReviewDecision> = decisions.iter().collect();
        ordered.sort_by_key(|d| d.timestamp_ms);
        let mut warnings = Vec::new();
        for d in ordered {
            if let Err(e) = session.apply(d) {
                warnings.push(ReviewWarning {
                    line: None,
                    message: format!("skipping decision: {e}"),
                });
            }
        }
        (session, warnings)
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn pairs(&self) -> &[QaPair] {
        &self.corpus.qa_pairs
    }

    pub fn get(&self, qa_id: &str) -> Option<&QaPair> {
        self.index.get(qa_id).map(|&i| &self.corpus.qa_pairs[i])
    }

    /// The pair as it would be after `decision`, without changing state.
    pub fn preview(&self, decision: &ReviewDecision) -> Result<QaPair, ReviewError> {
        let current = self
            .get(&decision.qa_id)
            .ok_or_else(|| ReviewError::UnknownItem(decision.qa_id.clone()))?;
        let has_edit = decision.edited_question.is_some() || decision.edited_answer.is_some();
        let mut next = current.clone();
        match decision.action {
            ReviewAction::Accept | ReviewAction::Reject if has_edit => {
                return Err(ReviewError::UnexpectedEdit(decision.qa_id.clone()))
            }
            ReviewAction::Accept => next.status = ReviewStatus::Accepted,
            ReviewAction::Reject => next.status = ReviewStatus::Rejected,
            ReviewAction::Edit => {
                if !has_edit {
                    return Err(ReviewError::EmptyEdit(decision.qa_id.clone()));
                }
                if let Some(q) = &decision.edited_question {
                    next.question = q.clone();
                }
                if let Some(a) = &decision.edited_answer {
                    next.answer = a.clone();
                }
                next = clean_pair(&next, &self.clean).ok_or_else(|| ReviewError::MalformedEdit(decision.qa_id.clone()))?;
                next.status = ReviewStatus::Edited;
            }
        }
        Ok(next)
    }

    pub fn apply(&mut self, decision: &ReviewDecision) -> Result<&QaPair, ReviewError> {
        let next = self.preview(decision)?;
        let i = self.index[&decision.qa_id];
        self.corpus.qa_pairs[i] = next;
        Ok(&self.corpus.qa_pairs[i])
    }

    pub fn queue_item(&self, pair: &QaPair) -> QueueItem {
        let caption = self.corpus.caption(&pair.provenance.caption_id);
        QueueItem {
            pair: pair.clone(),
            image_uri: self.corpus.image(&pair.image_id).map(|i| i.uri.clone()),
            caption_text: caption.map(|c| c.raw_text.clone()),
            sentence_text: caption
                .and_then(|c| c.sentences.get(pair.provenance.sentence_index))
                .map(|s| s.text.clone()),
        }
    }

    /// Zero-based page of pairs with the given status (all when `None`).
    /// Pages past the end are empty.
    pub fn queue(&self, filter: Option<ReviewStatus>, page: usize, page_size: usize) -> Result<QueuePage, ReviewError> {
        if page_size == 0 || page_size > MAX_PAGE_SIZE {
            return Err(ReviewError::InvalidPageSize);
        }
        let matching: Vec<&QaPair> = self
            .queue_order
            .iter()
            .map(|&i| &self.corpus.qa_pairs[i])
            .filter(|p| filter.is_none_or(|s| p.status == s))
            .collect();
        let items = matching
            .iter()
            .skip(page.saturating_mul(page_size))
            .take(page_size)
            .map(|p| self.queue_item(p))
            .collect();
        Ok(QueuePage {
            items,
            total: matching.len(),
            page,
            page_size,
        })
    }

    pub fn progress(&self) -> ReviewProgress {
        let mut p = ReviewProgress {
            total: self.corpus.qa_pairs.len(),
            ..ReviewProgress::default()
        };
        for pair in &self.corpus.qa_pairs {
            match pair.status {
                ReviewStatus::Generated => p.generated += 1,
                ReviewStatus::Accepted => p.accepted += 1,
                ReviewStatus::Edited => p.edited += 1,
                ReviewStatus::Rejected => p.rejected += 1,
            }
        }
        p
    }

    /// The dataset restricted to pairs whose status is in `include`.
    pub fn export(&self, include: &BTreeSet<ReviewStatus>) -> Corpus {
        let mut out = self.corpus.clone();
        out.qa_pairs.retain(|p| include.contains(&p.status));
        out
    }
}

pub fn default_export_statuses() -> BTreeSet<ReviewStatus> {
    [ReviewStatus::Accepted, ReviewStatus::Edited].into_iter().collect()
}

/// Replays `decisions` over `corpus` and keeps pairs whose final status is
/// in `include`.
pub fn export_reviewed(corpus: &Corpus, decisions: &[ReviewDecision], include: &BTreeSet<ReviewStatus>) -> Corpus {
    ReviewSession::replay(corpus.clone(), decisions).0.export(include)
}
