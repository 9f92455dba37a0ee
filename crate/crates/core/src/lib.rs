//! Building visual question answering datasets from annotated image captions.
//!
//! The pipeline reads a corpus of images and parsed captions ([`corpus`]),
//! splits long caption sentences into simple clauses ([`simplify`]), turns
//! each clause into yes/no and open-ended questions by tree transduction
//! ([`transduce`], built on [`treequery`]), and then cleans, balances,
//! splits and summarizes the result ([`assemble`]). Answers predicted by a
//! model are scored with [`metrics`]; human review decisions are kept in an
//! append-only journal ([`review`]).

pub mod assemble;
pub mod corpus;
pub mod metrics;
pub mod review;
pub mod simplify;
mod syntax;
pub mod text;
pub mod transduce;
pub mod tree;
pub mod treequery;

pub use corpus::{Corpus, QaPair, QuestionType};
pub use tree::{parse_ptb, render_ptb, NodeId, ParseTree};
