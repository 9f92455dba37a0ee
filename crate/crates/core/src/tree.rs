//! Penn-bracketed constituency trees.
//!
//! A [`ParseTree`] is an arena of nodes addressed by [`NodeId`]. Preterminals
//! are leaves: a leaf carries its POS label and the word, so `(NP (DT the) (NN lumen))`
//! is a three-node tree. Node ids are always assigned in preorder, which makes
//! derived `PartialEq` a structural comparison.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("node {0} does not belong to this tree")]
    ForeignNode(usize),
}

/// Index of a node inside one [`ParseTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct NodeData {
    pub(crate) label: String,
    /// Present on leaves only.
    pub(crate) word: Option<String>,
    /// Index into the token list of the sentence this leaf came from. Leaves
    /// inserted by edits have none.
    pub(crate) token: Option<usize>,
    pub(crate) children: Vec<NodeId>,
    pub(crate) parent: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    pub(crate) nodes: Vec<NodeData>,
}

/// Bracket escapes used by treebanks for literal brackets inside words.
const ESCAPES: [(&str, &str); 6] = [
    ("-LRB-", "("),
    ("-RRB-", ")"),
    ("-LSB-", "["),
    ("-RSB-", "]"),
    ("-LCB-", "{"),
    ("-RCB-", "}"),
];

pub fn unescape_word(word: &str) -> &str {
    ESCAPES
        .iter()
        .find(|(esc, _)| *esc == word)
        .map(|(_, lit)| *lit)
        .unwrap_or(word)
}

fn escape_word(word: &str) -> String {
    match ESCAPES.iter().find(|(_, lit)| *lit == word) {
        Some((esc, _)) => (*esc).to_string(),
        None => word.replace('(', "-LRB-").replace(')', "-RRB-"),
    }
}

/// Builder-side description of a subtree, used to assemble new trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf {
        label: String,
        word: String,
        token: Option<usize>,
    },
    Phrase {
        label: String,
        children: Vec<Node>,
    },
}

impl Node {
    pub fn leaf(label: impl Into<String>, word: impl Into<String>) -> Node {
        Node::Leaf {
            label: label.into(),
            word: word.into(),
            token: None,
        }
    }

    pub fn phrase(label: impl Into<String>, children: Vec<Node>) -> Node {
        Node::Phrase {
            label: label.into(),
            children,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Node::Leaf { label, .. } | Node::Phrase { label, .. } => label,
        }
    }

    /// Clears source-token indices, for material that did not come from
    /// the sentence being edited.
    pub fn without_tokens(self) -> Node {
        match self {
            Node::Leaf { label, word, .. } => Node::Leaf {
                label,
                word,
                token: None,
            },
            Node::Phrase { label, children } => Node::Phrase {
                label,
                children: children.into_iter().map(Node::without_tokens).collect(),
            },
        }
    }
}

impl ParseTree {
    /// Builds a tree from a nested description. Panics if a phrase has no
    /// children; use [`ParseTree::try_from_node`] for untrusted input.
    pub fn from_node(node: Node) -> ParseTree {
        ParseTree::try_from_node(node).expect("phrase without children")
    }

    pub fn try_from_node(node: Node) -> Result<ParseTree, TreeError> {
        let mut nodes = Vec::new();
        push_node(&mut nodes, node, None)?;
        Ok(ParseTree { nodes })
    }

    /// Converts (a subtree of) this tree back into a builder description.
    pub fn to_node(&self, id: NodeId) -> Node {
        let data = &self.nodes[id.0];
        match &data.word {
            Some(word) => Node::Leaf {
                label: data.label.clone(),
                word: word.clone(),
                token: data.token,
            },
            None => Node::Phrase {
                label: data.label.clone(),
                children: data.children.iter().map(|&c| self.to_node(c)).collect(),
            },
        }
    }

    /// Copies the subtree rooted at `id` into a new tree.
    pub fn subtree(&self, id: NodeId) -> ParseTree {
        ParseTree::from_node(self.to_node(id))
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.0 < self.nodes.len()
    }

    fn check(&self, id: NodeId) -> Result<(), TreeError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(TreeError::ForeignNode(id.0))
        }
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.0].label
    }

    pub fn word(&self, id: NodeId) -> Option<&str> {
        self.nodes[id.0].word.as_deref()
    }

    pub fn token(&self, id: NodeId) -> Option<usize> {
        self.nodes[id.0].token
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id.0].word.is_some()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    /// All node ids in preorder.
    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Nodes of the subtree rooted at `id`, in preorder (including `id`).
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev());
        }
        out
    }

    /// Proper ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.parent(id);
        while let Some(p) = cur {
            out.push(p);
            cur = self.parent(p);
        }
        out
    }

    /// True when `ancestor` properly dominates `node`.
    pub fn dominates(&self, ancestor: NodeId, node: NodeId) -> bool {
        let mut cur = self.parent(node);
        while let Some(p) = cur {
            if p == ancestor {
                return true;
            }
            cur = self.parent(p);
        }
        false
    }

    /// Leaves of the subtree rooted at `id`, left to right.
    pub fn leaves_under(&self, id: NodeId) -> Vec<NodeId> {
        self.descendants(id)
            .into_iter()
            .filter(|&n| self.is_leaf(n))
            .collect()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.leaves_under(self.root())
    }

    /// Words of the subtree, left to right, with bracket escapes resolved.
    pub fn words(&self, id: NodeId) -> Vec<&str> {
        self.leaves_under(id)
            .into_iter()
            .filter_map(|l| self.word(l))
            .collect()
    }

    /// Space-joined words of the subtree rooted at `node`.
    pub fn leaf_yield(&self, node: NodeId) -> Result<String, TreeError> {
        self.check(node)?;
        Ok(self.words(node).join(" "))
    }

    /// Inclusive leaf-ordinal span `(first, last)` of every node.
    pub fn leaf_spans(&self) -> Vec<(usize, usize)> {
        let mut spans = vec![(0, 0); self.nodes.len()];
        let mut next = 0;
        self.fill_spans(self.root(), &mut spans, &mut next);
        spans
    }

    fn fill_spans(&self, id: NodeId, spans: &mut [(usize, usize)], next: &mut usize) {
        if self.is_leaf(id) {
            spans[id.0] = (*next, *next);
            *next += 1;
            return;
        }
        let first = *next;
        for &c in self.children(id) {
            self.fill_spans(c, spans, next);
        }
        spans[id.0] = (first, *next - 1);
    }

    /// Single-space normalized bracketing.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(self.root(), &mut out);
        out
    }

    pub fn render_node(&self, id: NodeId) -> String {
        let mut out = String::new();
        self.render_into(id, &mut out);
        out
    }

    fn render_into(&self, id: NodeId, out: &mut String) {
        let data = &self.nodes[id.0];
        out.push('(');
        out.push_str(&data.label);
        match &data.word {
            Some(word) => {
                out.push(' ');
                out.push_str(&escape_word(word));
            }
            None => {
                for &c in &data.children {
                    out.push(' ');
                    self.render_into(c, out);
                }
            }
        }
        out.push(')');
    }

    /// Builds a new tree in which each listed node is replaced by the given
    /// subtree, or removed when `None`. Phrases emptied by removals are
    /// dropped as well.
    pub fn rewrite(&self, edits: &[(NodeId, Option<Node>)]) -> Result<ParseTree, TreeError> {
        match self.rewrite_node(self.root(), edits) {
            Some(node) => ParseTree::try_from_node(node),
            None => Err(TreeError::Syntax {
                offset: 0,
                message: "rewrite removed every node".to_string(),
            }),
        }
    }

    fn rewrite_node(&self, id: NodeId, edits: &[(NodeId, Option<Node>)]) -> Option<Node> {
        if let Some((_, replacement)) = edits.iter().find(|(n, _)| *n == id) {
            return replacement.clone();
        }
        let data = &self.nodes[id.0];
        match &data.word {
            Some(word) => Some(Node::Leaf {
                label: data.label.clone(),
                word: word.clone(),
                token: data.token,
            }),
            None => {
                let children: Vec<Node> = data
                    .children
                    .iter()
                    .filter_map(|&c| self.rewrite_node(c, edits))
                    .collect();
                if children.is_empty() {
                    None
                } else {
                    Some(Node::Phrase {
                        label: data.label.clone(),
                        children,
                    })
                }
            }
        }
    }

    /// First phrase below any `ROOT`/unlabeled wrapper chain.
    pub fn content_root(&self) -> NodeId {
        let mut cur = self.root();
        while self.label(cur) == "ROOT" && self.children(cur).len() == 1 {
            cur = self.children(cur)[0];
        }
        cur
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::str::FromStr for ParseTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ptb(s)
    }
}

fn push_node(
    nodes: &mut Vec<NodeData>,
    node: Node,
    parent: Option<NodeId>,
) -> Result<NodeId, TreeError> {
    let id = NodeId(nodes.len());
    match node {
        Node::Leaf { label, word, token } => nodes.push(NodeData {
            label,
            word: Some(word),
            token,
            children: Vec::new(),
            parent,
        }),
        Node::Phrase { label, children } => {
            if children.is_empty() {
                return Err(TreeError::Syntax {
                    offset: 0,
                    message: format!("phrase {label} has no children"),
                });
            }
            nodes.push(NodeData {
                label,
                word: None,
                token: None,
                children: Vec::new(),
                parent,
            });
            for child in children {
                let c = push_node(nodes, child, Some(id))?;
                nodes[id.0].children.push(c);
            }
        }
    }
    Ok(id)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(text: &str) -> Vec<(usize, Tok<'_>)> {
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            '(' => {
                toks.push((i, Tok::Open));
                chars.next();
            }
            ')' => {
                toks.push((i, Tok::Close));
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let start = i;
                let mut end = text.len();
                while let Some(&(j, c)) = chars.peek() {
                    if c == '(' || c == ')' || c.is_whitespace() {
                        end = j;
                        break;
                    }
                    chars.next();
                }
                toks.push((start, Tok::Atom(&text[start..end])));
            }
        }
    }
    toks
}

struct Reader<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    end: usize,
    next_token: usize,
}

impl<'a> Reader<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, TreeError> {
        let offset = self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end);
        Err(TreeError::Syntax {
            offset,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    /// Reads a bracketed node; the opening bracket has not been consumed.
    fn node(&mut self) -> Result<Node, TreeError> {
        match self.peek() {
            Some(Tok::Open) => self.pos += 1,
            Some(_) => return self.err("expected '('"),
            None => return self.err("unexpected end of input"),
        }
        let label = match self.peek() {
            Some(Tok::Atom(a)) => {
                let a = a.to_string();
                self.pos += 1;
                Some(a)
            }
            Some(Tok::Open) => None,
            Some(Tok::Close) => return self.err("empty node"),
            None => return self.err("unexpected end of input"),
        };
        let mut children = Vec::new();
        let mut word: Option<String> = None;
        loop {
            match self.peek() {
                Some(Tok::Close) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Open) => {
                    if word.is_some() {
                        return self.err("word mixed with phrase children");
                    }
                    children.push(self.node()?);
                }
                Some(Tok::Atom(a)) => {
                    if word.is_some() || !children.is_empty() || label.is_none() {
                        return self.err(format!("unexpected word '{a}'"));
                    }
                    word = Some(unescape_word(a).to_string());
                    self.pos += 1;
                }
                None => return self.err("unexpected end of input"),
            }
        }
        match (label, word) {
            (Some(label), Some(word)) => {
                let token = Some(self.next_token);
                self.next_token += 1;
                Ok(Node::Leaf { label, word, token })
            }
            (Some(label), None) => {
                if children.is_empty() {
                    return self.err(format!("node {label} has no children"));
                }
                Ok(Node::Phrase { label, children })
            }
            // Unlabeled wrapper "( (S ...) )" as found in treebank files.
            (None, _) => {
                if children.len() != 1 {
                    return self.err("unlabeled bracket must wrap exactly one tree");
                }
                Ok(children.pop().expect("one child"))
            }
        }
    }
}

/// Parses a single Penn-bracketed tree.
pub fn parse_ptb(text: &str) -> Result<ParseTree, TreeError> {
    let mut reader = Reader {
        toks: lex(text),
        pos: 0,
        end: text.len(),
        next_token: 0,
    };
    if reader.toks.is_empty() {
        return reader.err("empty input");
    }
    let node = reader.node()?;
    if reader.pos != reader.toks.len() {
        return reader.err("trailing input after tree");
    }
    ParseTree::try_from_node(node)
}

pub fn render_ptb(tree: &ParseTree) -> String {
    tree.render()
}

pub fn leaf_yield(tree: &ParseTree, node: NodeId) -> Result<String, TreeError> {
    tree.leaf_yield(node)
}
