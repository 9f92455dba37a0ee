//! Tree-surgery scripts.
//!
//! Script syntax, one command per line or separated by `;`:
//!
//! ```text
//! delete NAME
//! prune NAME
//! relabel NAME LABEL
//! insert TREE POSITION NAME
//! move NAME POSITION NAME
//! ```
//!
//! `POSITION` is one of `before`, `after`, `first-child`, `last-child`, and
//! `TREE` is a bracketed subtree such as `(VBZ does)`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::MatchBinding;
use crate::tree::{parse_ptb, Node, NodeData, NodeId, ParseTree, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("edit script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("capture ={0} is not bound")]
    Unbound(String),
    #[error("command {command} references node ={name}, deleted by an earlier command")]
    Deleted { command: usize, name: String },
    #[error("command {command}: moving ={name} under its own subtree would create a cycle")]
    Cycle { command: usize, name: String },
    #[error("command {command}: {message}")]
    Invalid { command: usize, message: String },
    #[error("edit left node {0} without children")]
    Childless(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Before,
    After,
    FirstChild,
    LastChild,
}

impl Position {
    fn parse(s: &str) -> Option<Position> {
        match s {
            "before" => Some(Position::Before),
            "after" => Some(Position::After),
            "first-child" => Some(Position::FirstChild),
            "last-child" => Some(Position::LastChild),
            _ => None,
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            Position::Before => "before",
            Position::After => "after",
            Position::FirstChild => "first-child",
            Position::LastChild => "last-child",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditCommand {
    Delete(String),
    Prune(String),
    Relabel(String, String),
    Insert {
        tree: ParseTree,
        position: Position,
        anchor: String,
    },
    Move {
        node: String,
        position: Position,
        anchor: String,
    },
}

impl EditCommand {
    fn names(&self) -> Vec<&str> {
        match self {
            EditCommand::Delete(n) | EditCommand::Prune(n) | EditCommand::Relabel(n, _) => vec![n],
            EditCommand::Insert { anchor, .. } => vec![anchor],
            EditCommand::Move { node, anchor, .. } => vec![node, anchor],
        }
    }
}

impl fmt::Display for EditCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditCommand::Delete(n) => write!(f, "delete {n}"),
            EditCommand::Prune(n) => write!(f, "prune {n}"),
            EditCommand::Relabel(n, l) => write!(f, "relabel {n} {l}"),
            EditCommand::Insert {
                tree,
                position,
                anchor,
            } => write!(f, "insert {tree} {} {anchor}", position.keyword()),
            EditCommand::Move {
                node,
                position,
                anchor,
            } => write!(f, "move {node} {} {anchor}", position.keyword()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EditScript {
    pub commands: Vec<EditCommand>,
}

impl EditScript {
    /// Capture names referenced by the commands.
    pub fn names(&self) -> BTreeSet<&str> {
        self.commands.iter().flat_map(|c| c.names()).collect()
    }
}

impl fmt::Display for EditScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.commands.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for EditScript {
    type Err = EditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_edit_script(s)
    }
}

/// Splits `text` into commands on newlines and on `;` outside brackets.
fn split_commands(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    for c in text.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth -= 1;
                cur.push(c);
            }
            ';' | '\n' if depth <= 0 => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out.into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty() && !s.starts_with('#'))
        .collect()
}

pub fn parse_edit_script(text: &str) -> Result<EditScript, EditError> {
    let mut commands = Vec::new();
    for (i, line) in split_commands(text).into_iter().enumerate() {
        let line_no = i + 1;
        let err = |message: String| EditError::Script {
            line: line_no,
            message,
        };
        let (verb, rest) = line.split_once(char::is_whitespace).unwrap_or((&line, ""));
        let rest = rest.trim();
        let args: Vec<&str> = rest.split_whitespace().collect();
        let cmd = match verb {
            "delete" | "prune" => {
                if args.len() != 1 {
                    return Err(err(format!("{verb} takes one capture name")));
                }
                if verb == "delete" {
                    EditCommand::Delete(args[0].to_string())
                } else {
                    EditCommand::Prune(args[0].to_string())
                }
            }
            "relabel" => {
                if args.len() != 2 {
                    return Err(err("relabel takes a capture name and a label".into()));
                }
                EditCommand::Relabel(args[0].to_string(), args[1].to_string())
            }
            "insert" => {
                if !rest.starts_with('(') {
                    return Err(err("insert expects a bracketed tree".into()));
                }
                let close = matching_paren(rest)
                    .ok_or_else(|| err("unbalanced tree in insert".into()))?;
                let tree = parse_ptb(&rest[..=close]).map_err(|e| err(e.to_string()))?;
                let tail: Vec<&str> = rest[close + 1..].split_whitespace().collect();
                if tail.len() != 2 {
                    return Err(err("insert expects: TREE POSITION NAME".into()));
                }
                let position = Position::parse(tail[0])
                    .ok_or_else(|| err(format!("unknown position {}", tail[0])))?;
                EditCommand::Insert {
                    tree,
                    position,
                    anchor: tail[1].to_string(),
                }
            }
            "move" => {
                if args.len() != 3 {
                    return Err(err("move expects: NAME POSITION NAME".into()));
                }
                let position = Position::parse(args[1])
                    .ok_or_else(|| err(format!("unknown position {}", args[1])))?;
                EditCommand::Move {
                    node: args[0].to_string(),
                    position,
                    anchor: args[2].to_string(),
                }
            }
            other => return Err(err(format!("unknown command {other}"))),
        };
        commands.push(cmd);
    }
    Ok(EditScript { commands })
}

fn matching_paren(s: &str) -> Option<usize> {
    let mut depth = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Mutable arena used while a script runs. Node ids of the input tree stay
/// valid; inserted nodes are appended.
struct Work {
    nodes: Vec<NodeData>,
    alive: Vec<bool>,
}

impl Work {
    fn detach(&mut self, id: NodeId) {
        if let Some(p) = self.nodes[id.0].parent.take() {
            self.nodes[p.0].children.retain(|&c| c != id);
        }
    }

    fn kill(&mut self, id: NodeId) {
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            self.alive[n.0] = false;
            stack.extend(self.nodes[n.0].children.iter().copied());
        }
    }

    fn in_subtree(&self, root: NodeId, mut node: NodeId) -> bool {
        loop {
            if node == root {
                return true;
            }
            match self.nodes[node.0].parent {
                Some(p) => node = p,
                None => return false,
            }
        }
    }

    fn graft(&mut self, node: Node, parent: Option<NodeId>) -> NodeId {
        let id = NodeId(self.nodes.len());
        match node {
            Node::Leaf { label, word, token } => {
                self.nodes.push(NodeData {
                    label,
                    word: Some(word),
                    token,
                    children: Vec::new(),
                    parent,
                });
                self.alive.push(true);
            }
            Node::Phrase { label, children } => {
                self.nodes.push(NodeData {
                    label,
                    word: None,
                    token: None,
                    children: Vec::new(),
                    parent,
                });
                self.alive.push(true);
                for c in children {
                    let cid = self.graft(c, Some(id));
                    self.nodes[id.0].children.push(cid);
                }
            }
        }
        id
    }

    /// Attaches the detached node `id` relative to `anchor`.
    fn attach(&mut self, id: NodeId, position: Position, anchor: NodeId) -> Result<(), String> {
        match position {
            Position::Before | Position::After => {
                let parent = self.nodes[anchor.0]
                    .parent
                    .ok_or_else(|| "cannot place a sibling of the root".to_string())?;
                let kids = &mut self.nodes[parent.0].children;
                let pos = kids.iter().position(|&k| k == anchor).expect("anchor under parent");
                let at = if position == Position::Before { pos } else { pos + 1 };
                kids.insert(at, id);
                self.nodes[id.0].parent = Some(parent);
            }
            Position::FirstChild | Position::LastChild => {
                if self.nodes[anchor.0].word.is_some() {
                    return Err("cannot add children to a leaf".to_string());
                }
                let kids = &mut self.nodes[anchor.0].children;
                if position == Position::FirstChild {
                    kids.insert(0, id);
                } else {
                    kids.push(id);
                }
                self.nodes[id.0].parent = Some(anchor);
            }
        }
        Ok(())
    }

    fn compact(&self, root: NodeId) -> Result<ParseTree, EditError> {
        let node = self.to_node(root)?;
        ParseTree::try_from_node(node).map_err(|e| match e {
            TreeError::Syntax { message, .. } => EditError::Childless(message),
            other => EditError::Childless(other.to_string()),
        })
    }

    fn to_node(&self, id: NodeId) -> Result<Node, EditError> {
        let d = &self.nodes[id.0];
        match &d.word {
            Some(w) => Ok(Node::Leaf {
                label: d.label.clone(),
                word: w.clone(),
                token: d.token,
            }),
            None => {
                if d.children.is_empty() {
                    return Err(EditError::Childless(d.label.clone()));
                }
                Ok(Node::Phrase {
                    label: d.label.clone(),
                    children: d
                        .children
                        .iter()
                        .map(|&c| self.to_node(c))
                        .collect::<Result<_, _>>()?,
                })
            }
        }
    }
}

/// Applies `script` to a copy of `tree`, resolving capture names through
/// `binding`. Commands run in order and observe earlier edits.
pub fn apply_edits(
    tree: &ParseTree,
    script: &EditScript,
    binding: &MatchBinding,
) -> Result<ParseTree, EditError> {
    let mut w = Work {
        nodes: tree.nodes.clone(),
        alive: vec![true; tree.nodes.len()],
    };
    let root = tree.root();
    for (i, cmd) in script.commands.iter().enumerate() {
        let command = i + 1;
        let resolve = |name: &str, w: &Work| -> Result<NodeId, EditError> {
            let id = binding
                .get(name)
                .ok_or_else(|| EditError::Unbound(name.to_string()))?;
            if id.0 >= w.nodes.len() {
                return Err(EditError::Unbound(name.to_string()));
            }
            if !w.alive[id.0] {
                return Err(EditError::Deleted {
                    command,
                    name: name.to_string(),
                });
            }
            Ok(id)
        };
        let invalid = |message: &str| EditError::Invalid {
            command,
            message: message.to_string(),
        };
        match cmd {
            EditCommand::Delete(name) => {
                let id = resolve(name, &w)?;
                if id == root {
                    return Err(invalid("cannot delete the root"));
                }
                w.detach(id);
                w.kill(id);
            }
            EditCommand::Prune(name) => {
                let id = resolve(name, &w)?;
                if id == root {
                    return Err(invalid("cannot prune the root"));
                }
                let mut cur = id;
                loop {
                    let parent = w.nodes[cur.0].parent;
                    w.detach(cur);
                    w.kill(cur);
                    match parent {
                        Some(p) if w.nodes[p.0].children.is_empty() => {
                            if p == root {
                                return Err(invalid("pruning would empty the tree"));
                            }
                            cur = p;
                        }
                        _ => break,
                    }
                }
            }
            EditCommand::Relabel(name, label) => {
                let id = resolve(name, &w)?;
                w.nodes[id.0].label = label.clone();
            }
            EditCommand::Insert {
                tree: sub,
                position,
                anchor,
            } => {
                let anchor = resolve(anchor, &w)?;
                let new = w.graft(sub.to_node(sub.root()).without_tokens(), None);
                w.attach(new, *position, anchor).map_err(|m| invalid(&m))?;
            }
            EditCommand::Move {
                node,
                position,
                anchor,
            } => {
                let id = resolve(node, &w)?;
                let anchor_id = resolve(anchor, &w)?;
                if id == root {
                    return Err(invalid("cannot move the root"));
                }
                if w.in_subtree(id, anchor_id) {
                    return Err(EditError::Cycle {
                        command,
                        name: node.clone(),
                    });
                }
                if matches!(position, Position::Before | Position::After) && anchor_id == root {
                    return Err(invalid("cannot place a sibling of the root"));
                }
                w.detach(id);
                w.attach(id, *position, anchor_id).map_err(|m| invalid(&m))?;
            }
        }
    }
    w.compact(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treequery::{compile_pattern, find_all};

    fn bind(tree: &ParseTree, pattern: &str) -> MatchBinding {
        find_all(tree, &compile_pattern(pattern).unwrap())
            .into_iter()
            .next()
            .expect("pattern matches")
    }

    fn run(tree: &str, pattern: &str, script: &str) -> Result<String, EditError> {
        let t = parse_ptb(tree).unwrap();
        let b = bind(&t, pattern);
        apply_edits(&t, &parse_edit_script(script).unwrap(), &b).map(|t| t.render())
    }

    #[test]
    fn relabel_root() {
        assert_eq!(
            run("(NP (DT the) (NN lumen))", "NP=np", "relabel np WHNP").unwrap(),
            "(WHNP (DT the) (NN lumen))"
        );
    }

    #[test]
    fn delete_determiner() {
        assert_eq!(
            run("(NP (DT the) (NN lumen))", "NP < DT=d", "delete d").unwrap(),
            "(NP (NN lumen))"
        );
    }

    #[test]
    fn front_object() {
        let out = run(
            "(S (NP (NN microscopy)) (VP (VBZ shows) (NP (NN necrosis))))",
            "S=s < (VP < NP=obj)",
            "move obj first-child s",
        )
        .unwrap();
        let expected = parse_ptb("(S (NP (NN necrosis)) (NP (NN microscopy)) (VP (VBZ shows)))").unwrap();
        assert_eq!(parse_ptb(&out).unwrap(), expected);
    }

    #[test]
    fn move_adjp_before_vp() {
        let out = run(
            "(S (NP (NNS gallstones)) (VP (VBP are) (ADJP (JJ present))))",
            "S < (VP=vp < ADJP=a)",
            "move a before vp",
        )
        .unwrap();
        assert_eq!(out, "(S (NP (NNS gallstones)) (ADJP (JJ present)) (VP (VBP are)))");
    }

    #[test]
    fn input_unchanged() {
        let t = parse_ptb("(NP (DT the) (NN lumen))").unwrap();
        let before = t.clone();
        let b = bind(&t, "NP < DT=d");
        let _ = apply_edits(&t, &parse_edit_script("delete d").unwrap(), &b).unwrap();
        assert_eq!(t, before);
    }

    #[test]
    fn later_commands_see_earlier_edits() {
        let out = run(
            "(VP (VBZ shows) (NP (NN x)))",
            "VP=vp < VBZ=v",
            "insert (VBZ does) before v; insert (VB show) before v; delete v",
        )
        .unwrap();
        assert_eq!(out, "(VP (VBZ does) (VB show) (NP (NN x)))");
    }

    #[test]
    fn deleted_reference_is_error() {
        let err = run("(NP (DT the) (NN lumen))", "NP < DT=d", "delete d; relabel d X").unwrap_err();
        assert_eq!(
            err,
            EditError::Deleted {
                command: 2,
                name: "d".into()
            }
        );
    }

    #[test]
    fn child_of_deleted_is_error() {
        let err = run(
            "(S (NP (DT the) (NN x)) (VP (VBZ is)))",
            "S < (NP=np < DT=d)",
            "delete np; delete d",
        )
        .unwrap_err();
        assert!(matches!(err, EditError::Deleted { command: 2, .. }));
    }

    #[test]
    fn move_into_own_subtree_is_cycle() {
        let err = run(
            "(S (NP (DT the) (NN x)) (VP (VBZ is)))",
            "S < (NP=np < DT=d)",
            "move np after d",
        )
        .unwrap_err();
        assert!(matches!(err, EditError::Cycle { .. }));
    }

    #[test]
    fn prune_removes_empty_ancestors() {
        assert_eq!(
            run(
                "(S (NP (NP (NN x))) (VP (VBZ is)))",
                "S < (NP < (NP < NN=n))",
                "prune n"
            )
            .unwrap(),
            "(S (VP (VBZ is)))"
        );
        let err = run("(NP (NP (NN x)) (NN y))", "NP < (NP < NN=n)", "delete n").unwrap_err();
        assert!(matches!(err, EditError::Childless(_)));
    }

    #[test]
    fn root_restrictions() {
        assert!(run("(NP (NN x))", "NP=r", "delete r").is_err());
        assert!(run("(NP (NN x))", "NP=r", "insert (DT a) before r").is_err());
        assert!(run("(NP (NN x))", "NP < NN=n", "insert (DT a) first-child n").is_err());
        assert!(matches!(run("(NP (NN x))", "NP", "delete q"), Err(EditError::Unbound(_))));
    }

    #[test]
    fn script_parse_and_display() {
        let s = parse_edit_script(
            "insert (WHNP (WP What)) before ans\nmove m first-child s; # note\nprune p",
        )
        .unwrap();
        assert_eq!(s.commands.len(), 3);
        assert_eq!(
            s.to_string(),
            "insert (WHNP (WP What)) before ans; move m first-child s; prune p"
        );
        assert_eq!(parse_edit_script(&s.to_string()).unwrap(), s);
        assert!(parse_edit_script("explode x").is_err());
        assert!(parse_edit_script("insert (NN x before y").is_err());
        assert!(parse_edit_script("move a sideways b").is_err());
    }
}
