use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use vqakit::assemble::{balance_yesno, clean_pairs, compute_stats, dedupe, split_corpus, split_sizes, CleanConfig};
use vqakit::corpus::{load_corpus, write_atomic, Corpus, CorpusError, QaPair, QuestionType, ReviewStatus};
use vqakit::metrics::{evaluate, Prediction};
use vqakit::review::{default_export_statuses, export_reviewed, journal_path_for, read_journal, ReviewSession};
use vqakit::simplify::simplify;
use vqakit::transduce::{GenerateConfig, RuleCatalog, Transducer};
use vqakit_review::{router, AppState, ServiceConfig, DEFAULT_PORT};

use crate::config::RunConfig;
use crate::{
    AssembleArgs, CliError, Command, EvalArgs, ExportArgs, GenerateArgs, IoArgs, Logger, ReviewArgs, SplitArgs,
    StatsArgs,
};

/// Paths written so far; removed by the caller if a later step fails.
type Written = Vec<PathBuf>;

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn write(path: &Path, bytes: &[u8], written: &mut Written) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
    written.push(path.to_path_buf());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T, written: &mut Written) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write(path, text.as_bytes(), written)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn run(command: Command, cfg: &RunConfig, log: &Logger, written: &mut Written) -> Result<(), CliError> {
    match command {
        Command::Validate { input } => validate(&input, log),
        Command::Simplify(a) => simplify_cmd(&a, log, written),
        Command::Generate(a) => generate(&a, cfg, log, written),
        Command::Assemble(a) => assemble(&a, cfg, log, written),
        Command::Split(a) => split(&a, cfg, log, written),
        Command::Stats(a) => stats(&a, log, written),
        Command::Eval(a) => eval(&a, log, written),
        Command::Review(a) => review(&a, cfg, log),
        Command::Export(a) => export(&a, log, written),
    }
}

fn validate(input: &Path, log: &Logger) -> Result<(), CliError> {
    let corpus = load_corpus(input)?;
    let sentences: usize = corpus.captions.iter().map(|c| c.sentences.len()).sum();
    let unparsed = corpus
        .captions
        .iter()
        .flat_map(|c| &c.sentences)
        .filter(|s| s.parse.is_none())
        .count();
    log.info(
        "validate",
        json!({
            "path": input.display().to_string(),
            "images": corpus.images.len(),
            "captions": corpus.captions.len(),
            "sentences": sentences,
            "unparsed_sentences": unparsed,
            "qa_pairs": corpus.qa_pairs.len(),
            "has_splits": corpus.splits.is_some(),
            "errors": 0,
        }),
    );
    Ok(())
}

#[derive(Serialize)]
struct SimplifiedClause {
    caption_id: String,
    sentence_index: usize,
    clause_index: usize,
    rule: String,
    text: String,
    parse: String,
}

fn simplify_cmd(a: &IoArgs, log: &Logger, written: &mut Written) -> Result<(), CliError> {
    let corpus = load_corpus(&a.input)?;
    let mut out = Vec::new();
    let mut per_rule: BTreeMap<String, usize> = BTreeMap::new();
    let mut sentences = 0;
    for cap in &corpus.captions {
        for (i, s) in cap.sentences.iter().enumerate() {
            sentences += 1;
            for (j, clause) in simplify(s).into_iter().enumerate() {
                *per_rule.entry(clause.source_rule.id().to_string()).or_default() += 1;
                out.push(SimplifiedClause {
                    caption_id: cap.caption_id.clone(),
                    sentence_index: i,
                    clause_index: j,
                    rule: clause.source_rule.id().to_string(),
                    text: clause.text(),
                    parse: clause.tree.render(),
                });
            }
        }
    }
    write_json(&a.out, &out, written)?;
    log.info(
        "simplify",
        json!({ "sentences_in": sentences, "clauses_out": out.len(), "rules": per_rule }),
    );
    Ok(())
}

#[derive(Serialize)]
struct TraceLine<'a> {
    qa_id: &'a str,
    source: String,
    trace: &'a vqakit::transduce::RuleTrace,
}

fn generate(a: &GenerateArgs, cfg: &RunConfig, log: &Logger, written: &mut Written) -> Result<(), CliError> {
    let mut corpus = load_corpus(&a.io.input)?;
    let catalog = match cfg.catalog(a.catalog.as_deref()) {
        Some(path) => RuleCatalog::load(&path).map_err(|e| CliError::Data(e.to_string()))?,
        None => RuleCatalog::builtin(),
    };
    let config = GenerateConfig {
        seed: cfg.seed(a.seed),
        negatives: !a.no_negatives && cfg.negatives.unwrap_or(true),
        open_questions: !a.no_open && cfg.open_questions.unwrap_or(true),
    };
    let (questions, report) = Transducer::new(catalog).generate(&corpus, &config);

    let mut step_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut question_rules: BTreeMap<&str, usize> = BTreeMap::new();
    let mut simplifications: BTreeMap<&str, usize> = BTreeMap::new();
    for q in &questions {
        *question_rules.entry(&q.pair.provenance.rule_id).or_default() += 1;
        *simplifications.entry(&q.pair.provenance.simplification).or_default() += 1;
        for step in &q.trace.steps {
            *step_counts.entry(&step.rule).or_default() += 1;
        }
    }
    let in_pairs = corpus.qa_pairs.len();
    corpus.qa_pairs = questions.iter().map(|q| q.pair.clone()).collect();
    if let Some(path) = &a.traces {
        let mut lines = String::new();
        for q in &questions {
            let line = TraceLine {
                qa_id: &q.pair.qa_id,
                source: q.source.render(),
                trace: &q.trace,
            };
            lines.push_str(&serde_json::to_string(&line).map_err(|e| CliError::Internal(e.to_string()))?);
            lines.push('\n');
        }
        write(path, lines.as_bytes(), written)?;
    }
    write(&a.io.out, corpus.to_json().as_bytes(), written)?;
    log.info(
        "generate",
        json!({
            "seed": config.seed,
            "captions_in": corpus.captions.len(),
            "replaced_pairs": in_pairs,
            "pairs_out": corpus.qa_pairs.len(),
            "report": report,
            "question_rules": question_rules,
            "simplification_rules": simplifications,
            "rule_firings": step_counts,
        }),
    );
    Ok(())
}

fn assemble(a: &AssembleArgs, cfg: &RunConfig, log: &Logger, written: &mut Written) -> Result<(), CliError> {
    let mut corpus = load_corpus(&a.io.input)?;
    let mut clean = CleanConfig::default();
    if let Some(n) = a.min_question_words.or(cfg.min_question_words) {
        clean.min_question_words = n;
    }
    if let Some(v) = &cfg.vague_questions {
        clean.vague_questions = v.clone();
    }
    let spares = match &a.spares {
        Some(p) => clean_pairs(&load_corpus(p)?.qa_pairs, &clean),
        None => Vec::new(),
    };
    let n_in = corpus.qa_pairs.len();
    let cleaned = clean_pairs(&corpus.qa_pairs, &clean);
    let n_clean = cleaned.len();
    let unique = dedupe(cleaned);
    let n_unique = unique.len();
    let balance = if a.balance || cfg.balance.unwrap_or(false) {
        let (pairs, report) = balance_yesno(
            unique,
            &spares,
            cfg.seed(a.seed),
            cfg.tolerance(a.tolerance),
            cfg.policy(a.policy),
        );
        if !report.balanced {
            log.warn("assemble.unbalanced", json!({ "balance": &report }));
        }
        corpus.qa_pairs = pairs;
        json!(report)
    } else {
        corpus.qa_pairs = unique;
        let answers = corpus.qa_pairs.iter().filter(|p| p.qtype == QuestionType::YesNo);
        let yes = answers.clone().filter(|p| p.answer == "yes").count();
        json!({ "skipped": true, "yes": yes, "no": answers.count() - yes })
    };
    corpus.validate()?;
    write(&a.io.out, corpus.to_json().as_bytes(), written)?;
    log.info(
        "assemble",
        json!({
            "pairs_in": n_in,
            "dropped_by_clean": n_in - n_clean,
            "dropped_as_duplicate": n_clean - n_unique,
            "balance": balance,
            "pairs_out": corpus.qa_pairs.len(),
        }),
    );
    Ok(())
}

fn split(a: &SplitArgs, cfg: &RunConfig, log: &Logger, written: &mut Written) -> Result<(), CliError> {
    let ratios = cfg.ratios(a.ratios.as_deref())?;
    split_sizes(0, ratios).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut corpus = load_corpus(&a.input)?;
    let seed = cfg.seed(a.seed);
    let split = split_corpus(&corpus, seed, ratios).map_err(|e| CliError::Data(e.to_string()))?;
    write_json(&a.out, &split, written)?;
    let [train, val, test] = split.counts();
    if let Some(path) = &a.corpus_out {
        corpus.splits = Some(split);
        write(path, corpus.to_json().as_bytes(), written)?;
    }
    log.info(
        "split",
        json!({ "images": corpus.images.len(), "seed": seed, "ratios": ratios, "train": train, "val": val, "test": test }),
    );
    Ok(())
}

fn stats(a: &StatsArgs, log: &Logger, written: &mut Written) -> Result<(), CliError> {
    let corpus = load_corpus(&a.input)?;
    let report = compute_stats(&corpus);
    write_json(&a.out, &report, written)?;
    match &a.table {
        Some(path) => write(path, report.to_table().as_bytes(), written)?,
        None => print!("{}", report.to_table()),
    }
    if let Some(path) = &a.answers_csv {
        write(path, report.answer_csv().as_bytes(), written)?;
    }
    log.info(
        "stats",
        json!({ "images": report.images, "questions": report.questions, "yes": report.yes, "no": report.no }),
    );
    Ok(())
}

fn load_gold(path: &Path, split: Option<&str>) -> Result<Vec<QaPair>, CliError> {
    let text = read_text(path)?;
    let origin = path.display().to_string();
    if text.trim_start().starts_with('[') {
        if split.is_some() {
            return Err(CliError::Usage("--split needs a corpus file as --gold".into()));
        }
        return serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{origin}: {e}")));
    }
    let corpus = Corpus::from_json(&text, &origin)?;
    let Some(part) = split else {
        return Ok(corpus.qa_pairs);
    };
    let images = corpus
        .splits
        .as_ref()
        .ok_or_else(|| CliError::Data(format!("{origin}: corpus has no splits")))?
        .part(part)
        .ok_or_else(|| CliError::Usage(format!("unknown split part {part} (train, val, test)")))?;
    Ok(corpus.qa_pairs.into_iter().filter(|p| images.contains(&p.image_id)).collect())
}

fn eval(a: &EvalArgs, log: &Logger, written: &mut Written) -> Result<(), CliError> {
    let gold: Vec<QaPair> = load_gold(&a.gold, a.split.as_deref())?
        .into_iter()
        .filter(|p| p.status != ReviewStatus::Rejected)
        .collect();
    let preds: Vec<Prediction> = serde_json::from_str(&read_text(&a.pred)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.pred.display())))?;
    let result = evaluate(&gold, &preds).map_err(|e| CliError::Data(e.to_string()))?;
    if result.missing > 0 {
        log.warn("eval.missing_predictions", json!({ "missing": result.missing, "total": result.total }));
    }
    write_json(&a.out, &result, written)?;
    match &a.table {
        Some(path) => write(path, result.to_table().as_bytes(), written)?,
        None => print!("{}", result.to_table()),
    }
    log.info(
        "eval",
        json!({ "gold": gold.len(), "predictions": preds.len(), "accuracy_yesno": result.accuracy_yesno, "exact_match": result.exact_match, "macro_f1": result.macro_f1 }),
    );
    Ok(())
}

fn review(a: &ReviewArgs, cfg: &RunConfig, log: &Logger) -> Result<(), CliError> {
    let mut config = ServiceConfig::new(&a.input);
    config.journal = a.journal.clone();
    config.image_root = a.images.clone().or_else(|| cfg.images.clone());
    config.static_dir = a.static_dir.clone().or_else(|| cfg.static_dir.clone());
    let host = a.host.clone().or_else(|| cfg.host.clone()).unwrap_or_else(|| "127.0.0.1".into());
    let ip: IpAddr = host
        .parse()
        .map_err(|_| CliError::Usage(format!("--host must be an IP address, got {host}")))?;
    let port = a.port.or(cfg.port).unwrap_or(DEFAULT_PORT);
    let (state, warnings) = AppState::load(&config).map_err(|e| CliError::Data(e.to_string()))?;
    for w in &warnings {
        log.warn("review.journal", json!({ "line": w.line, "message": w.message }));
    }
    if !ip.is_loopback() {
        log.warn("review.exposed", json!({ "host": host, "message": "service has no authentication" }));
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((ip, port))
            .await
            .map_err(|e| CliError::Internal(format!("bind {ip}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| CliError::Internal(e.to_string()))?;
        let progress = state.progress().await;
        log.info("review.listening", json!({ "address": format!("http://{addr}"), "progress": progress }));
        let app = router(state, config.static_dir.as_deref());
        vqakit_review::serve(listener, app)
            .await
            .map_err(|e| CliError::Internal(e.to_string()))
    })
}

fn export(a: &ExportArgs, log: &Logger, written: &mut Written) -> Result<(), CliError> {
    let corpus = load_corpus(&a.io.input)?;
    let journal = a.journal.clone().unwrap_or_else(|| journal_path_for(&a.io.input));
    let (decisions, mut warnings) = read_journal(&journal).map_err(|e| CliError::Data(e.to_string()))?;
    let include: BTreeSet<ReviewStatus> = match &a.include {
        Some(v) => v
            .iter()
            .map(|s| s.parse().map_err(CliError::Usage))
            .collect::<Result<_, _>>()?,
        None => default_export_statuses(),
    };
    warnings.extend(ReviewSession::replay(corpus.clone(), &decisions).1);
    for w in &warnings {
        log.warn("export.journal", json!({ "line": w.line, "message": w.message }));
    }
    let out = export_reviewed(&corpus, &decisions, &include);
    write(&a.io.out, out.to_json().as_bytes(), written)?;
    log.info(
        "export",
        json!({
            "pairs_in": corpus.qa_pairs.len(),
            "decisions": decisions.len(),
            "include": include,
            "pairs_out": out.qa_pairs.len(),
        }),
    );
    Ok(())
}
