//! Pattern grammar.
//!
//! ```text
//! pattern   := expr EOF
//! expr      := node relations
//! node      := '!'? ( '__' | LABEL | '/' REGEX '/' ) ( '=' NAME )?
//!            | '(' expr ')'
//! relations := conj ( '|' conj )*
//! conj      := clause*
//! clause    := '!'? REL node | '[' relations ']'
//! ```
//!
//! Relations chain on the head node: `A < B < C` means A has children B and
//! C. Parentheses bind a relation to an inner node: `A < (B < C)`.

use std::collections::BTreeSet;
use std::fmt;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown relation {relation} at offset {offset}")]
    UnknownRelation { offset: usize, relation: String },
    #[error("duplicate capture ={0}")]
    DuplicateCapture(String),
    #[error("invalid regex /{pattern}/: {message}")]
    Regex { pattern: String, message: String },
    #[error("capture ={0} inside a negated relation can never be bound")]
    NegatedCapture(String),
    #[error("alternatives of a disjunction bind different captures")]
    UnbalancedDisjunction,
}

/// Supported relations between a head node `A` and a target `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// `A < B`: A is the parent of B.
    Parent,
    /// `A > B`: A is a child of B.
    Child,
    /// `A << B`: A properly dominates B.
    Dominates,
    /// `A >> B`: A is properly dominated by B.
    DominatedBy,
    /// `A . B`: A's last leaf immediately precedes B's first leaf.
    ImmediatelyPrecedes,
    /// `A , B`: A's first leaf immediately follows B's last leaf.
    ImmediatelyFollows,
    /// `A .. B`: every leaf of A precedes every leaf of B.
    Precedes,
    /// `A ,, B`: every leaf of A follows every leaf of B.
    Follows,
    /// `A $ B`: A and B share a parent, A != B.
    Sister,
    /// `A $+ B`: B is the sister directly right of A.
    ImmediateLeftSister,
    /// `A $- B`: B is the sister directly left of A.
    ImmediateRightSister,
    /// `A $.. B`: B is a sister somewhere right of A.
    LeftSister,
    /// `A $,, B`: B is a sister somewhere left of A.
    RightSister,
}

impl Relation {
    pub const ALL: [Relation; 13] = [
        Relation::Parent,
        Relation::Child,
        Relation::Dominates,
        Relation::DominatedBy,
        Relation::ImmediatelyPrecedes,
        Relation::ImmediatelyFollows,
        Relation::Precedes,
        Relation::Follows,
        Relation::Sister,
        Relation::ImmediateLeftSister,
        Relation::ImmediateRightSister,
        Relation::LeftSister,
        Relation::RightSister,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Parent => "<",
            Relation::Child => ">",
            Relation::Dominates => "<<",
            Relation::DominatedBy => ">>",
            Relation::ImmediatelyPrecedes => ".",
            Relation::ImmediatelyFollows => ",",
            Relation::Precedes => "..",
            Relation::Follows => ",,",
            Relation::Sister => "$",
            Relation::ImmediateLeftSister => "$+",
            Relation::ImmediateRightSister => "$-",
            Relation::LeftSister => "$..",
            Relation::RightSister => "$,,",
        }
    }

    fn from_symbol(s: &str) -> Option<Relation> {
        Relation::ALL.into_iter().find(|r| r.symbol() == s)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone)]
pub enum LabelTest {
    Any,
    Exact(String),
    Regex(Regex),
}

impl LabelTest {
    pub fn matches(&self, label: &str) -> bool {
        match self {
            LabelTest::Any => true,
            LabelTest::Exact(l) => l == label,
            LabelTest::Regex(re) => re.is_match(label),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodePattern {
    pub test: LabelTest,
    pub negated: bool,
    pub capture: Option<String>,
    pub constraint: Constraint,
}

impl NodePattern {
    pub fn label_matches(&self, label: &str) -> bool {
        self.test.matches(label) != self.negated
    }
}

#[derive(Debug, Clone)]
pub enum Constraint {
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
    Rel {
        relation: Relation,
        negated: bool,
        target: Box<NodePattern>,
    },
}

impl Constraint {
    fn captures(&self, out: &mut Vec<String>) {
        match self {
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().for_each(|c| c.captures(out)),
            Constraint::Rel { target, .. } => target.captures(out),
        }
    }
}

impl NodePattern {
    fn captures(&self, out: &mut Vec<String>) {
        if let Some(c) = &self.capture {
            out.push(c.clone());
        }
        self.constraint.captures(out);
    }
}

/// A compiled tree query.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub(crate) root: NodePattern,
    source: String,
    captures: Vec<String>,
}

impl Pattern {
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Declared capture names in order of appearance.
    pub fn captures(&self) -> &[String] {
        &self.captures
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Pattern {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        compile_pattern(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    LBracket,
    RBracket,
    Bar,
    Bang,
    Eq,
    Wildcard,
    Label(String),
    Regex(String),
    Rel(Relation),
}

const REL_CHARS: &str = "<>.,$+-?#@:;&*^~%";

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, PatternError> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let (off, c) = bytes[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((off, Tok::Open));
                i += 1;
            }
            ')' => {
                out.push((off, Tok::Close));
                i += 1;
            }
            '[' => {
                out.push((off, Tok::LBracket));
                i += 1;
            }
            ']' => {
                out.push((off, Tok::RBracket));
                i += 1;
            }
            '|' => {
                out.push((off, Tok::Bar));
                i += 1;
            }
            '!' => {
                out.push((off, Tok::Bang));
                i += 1;
            }
            '=' => {
                out.push((off, Tok::Eq));
                i += 1;
            }
            '/' => {
                let mut j = i + 1;
                let mut body = String::new();
                loop {
                    match bytes.get(j) {
                        None => {
                            return Err(PatternError::Syntax {
                                offset: off,
                                message: "unterminated regex".into(),
                            })
                        }
                        Some((_, '\\')) if matches!(bytes.get(j + 1), Some((_, '/'))) => {
                            body.push('/');
                            j += 2;
                        }
                        Some((_, '/')) => break,
                        Some((_, ch)) => {
                            body.push(*ch);
                            j += 1;
                        }
                    }
                }
                out.push((off, Tok::Regex(body)));
                i = j + 1;
            }
            c if REL_CHARS.contains(c) => {
                let mut j = i;
                while j < bytes.len() && REL_CHARS.contains(bytes[j].1) {
                    j += 1;
                }
                let sym: String = bytes[i..j].iter().map(|(_, c)| *c).collect();
                match Relation::from_symbol(&sym) {
                    Some(r) => out.push((off, Tok::Rel(r))),
                    None => {
                        return Err(PatternError::UnknownRelation {
                            offset: off,
                            relation: sym,
                        })
                    }
                }
                i = j;
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut j = i;
                // '$' and '-' are allowed inside labels (PRP$, NP-SBJ) but not first.
                while j < bytes.len() {
                    let ch = bytes[j].1;
                    if ch.is_alphanumeric() || ch == '_' || ((ch == '$' || ch == '-') && j > i) {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let word: String = bytes[i..j].iter().map(|(_, c)| *c).collect();
                if word == "__" {
                    out.push((off, Tok::Wildcard));
                } else {
                    out.push((off, Tok::Label(word)));
                }
                i = j;
            }
            other => {
                return Err(PatternError::Syntax {
                    offset: off,
                    message: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, PatternError> {
        Err(PatternError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<NodePattern, PatternError> {
        let mut node = self.node()?;
        let rels = self.relations()?;
        node.constraint = merge(std::mem::replace(&mut node.constraint, Constraint::And(vec![])), rels);
        Ok(node)
    }

    fn node(&mut self) -> Result<NodePattern, PatternError> {
        if self.peek() == Some(&Tok::Open) {
            self.pos += 1;
            let inner = self.expr()?;
            if self.peek() != Some(&Tok::Close) {
                return self.syntax("expected ')'");
            }
            self.pos += 1;
            return Ok(inner);
        }
        let negated = if self.peek() == Some(&Tok::Bang) {
            self.pos += 1;
            true
        } else {
            false
        };
        let test = match self.peek().cloned() {
            Some(Tok::Wildcard) => LabelTest::Any,
            Some(Tok::Label(l)) => LabelTest::Exact(l),
            Some(Tok::Regex(r)) => LabelTest::Regex(Regex::new(&r).map_err(|e| {
                PatternError::Regex {
                    pattern: r.clone(),
                    message: e.to_string(),
                }
            })?),
            Some(_) => return self.syntax("expected node description"),
            None => return self.syntax("unexpected end of pattern"),
        };
        self.pos += 1;
        let capture = if self.peek() == Some(&Tok::Eq) {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Label(name)) => {
                    self.pos += 1;
                    Some(name)
                }
                _ => return self.syntax("expected capture name after '='"),
            }
        } else {
            None
        };
        Ok(NodePattern {
            test,
            negated,
            capture,
            constraint: Constraint::And(vec![]),
        })
    }

    fn relations(&mut self) -> Result<Constraint, PatternError> {
        let mut alts = vec![self.conj()?];
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            alts.push(self.conj()?);
        }
        Ok(if alts.len() == 1 {
            alts.pop().expect("one alternative")
        } else {
            Constraint::Or(alts)
        })
    }

    fn conj(&mut self) -> Result<Constraint, PatternError> {
        let mut clauses = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::LBracket) => {
                    self.pos += 1;
                    clauses.push(self.relations()?);
                    if self.peek() != Some(&Tok::RBracket) {
                        return self.syntax("expected ']'");
                    }
                    self.pos += 1;
                }
                Some(Tok::Bang) => {
                    let save = self.pos;
                    self.pos += 1;
                    match self.peek() {
                        Some(Tok::Rel(r)) => {
                            let relation = *r;
                            self.pos += 1;
                            let target = self.node()?;
                            clauses.push(Constraint::Rel {
                                relation,
                                negated: true,
                                target: Box::new(target),
                            });
                        }
                        _ => {
                            self.pos = save;
                            return self.syntax("'!' must precede a relation here");
                        }
                    }
                }
                Some(Tok::Rel(r)) => {
                    let relation = *r;
                    self.pos += 1;
                    let target = self.node()?;
                    clauses.push(Constraint::Rel {
                        relation,
                        negated: false,
                        target: Box::new(target),
                    });
                }
                Some(Tok::Label(_)) | Some(Tok::Regex(_)) | Some(Tok::Wildcard) => {
                    return self.syntax("expected relation before node description");
                }
                _ => break,
            }
        }
        Ok(Constraint::And(clauses))
    }
}

fn merge(a: Constraint, b: Constraint) -> Constraint {
    match (a, b) {
        (Constraint::And(mut x), Constraint::And(y)) => {
            x.extend(y);
            Constraint::And(x)
        }
        (Constraint::And(mut x), other) => {
            if x.is_empty() {
                other
            } else {
                x.push(other);
                Constraint::And(x)
            }
        }
        (a, b) => Constraint::And(vec![a, b]),
    }
}

fn check_negations(node: &NodePattern) -> Result<(), PatternError> {
    check_constraint(&node.constraint)
}

fn check_constraint(c: &Constraint) -> Result<(), PatternError> {
    match c {
        Constraint::And(cs) => cs.iter().try_for_each(check_constraint),
        Constraint::Or(cs) => {
            let sets: Vec<BTreeSet<String>> = cs
                .iter()
                .map(|c| {
                    let mut v = Vec::new();
                    c.captures(&mut v);
                    v.into_iter().collect()
                })
                .collect();
            if sets.windows(2).any(|w| w[0] != w[1]) {
                return Err(PatternError::UnbalancedDisjunction);
            }
            cs.iter().try_for_each(check_constraint)
        }
        Constraint::Rel {
            negated, target, ..
        } => {
            if *negated {
                let mut v = Vec::new();
                target.captures(&mut v);
                if let Some(name) = v.into_iter().next() {
                    return Err(PatternError::NegatedCapture(name));
                }
            }
            check_negations(target)
        }
    }
}

/// Compiles a pattern string.
pub fn compile_pattern(text: &str) -> Result<Pattern, PatternError> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    if parser.toks.is_empty() {
        return parser.syntax("empty pattern");
    }
    let root = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return parser.syntax("unexpected trailing input");
    }
    // The same name may appear once per disjunction branch.
    let mut captures: Vec<String> = Vec::new();
    dedupe_branch_captures(&root, &mut captures)?;
    check_negations(&root)?;
    Ok(Pattern {
        root,
        source: text.trim().to_string(),
        captures,
    })
}

/// Collects capture names, rejecting duplicates except across alternatives of
/// one disjunction.
fn dedupe_branch_captures(node: &NodePattern, seen: &mut Vec<String>) -> Result<(), PatternError> {
    if let Some(c) = &node.capture {
        if seen.contains(c) {
            return Err(PatternError::DuplicateCapture(c.clone()));
        }
        seen.push(c.clone());
    }
    constraint_captures(&node.constraint, seen)
}

fn constraint_captures(c: &Constraint, seen: &mut Vec<String>) -> Result<(), PatternError> {
    match c {
        Constraint::And(cs) => cs.iter().try_for_each(|c| constraint_captures(c, seen)),
        Constraint::Or(cs) => {
            let before = seen.clone();
            let mut merged = before.clone();
            for alt in cs {
                let mut branch = before.clone();
                constraint_captures(alt, &mut branch)?;
                for name in branch.into_iter().skip(before.len()) {
                    if !merged.contains(&name) {
                        merged.push(name);
                    }
                }
            }
            *seen = merged;
            Ok(())
        }
        Constraint::Rel { target, .. } => dedupe_branch_captures(target, seen),
    }
}
