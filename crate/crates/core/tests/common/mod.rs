//! Helpers shared by integration tests: random trees and a brute-force
//! reference for every tree-query relation.
#![allow(dead_code)]

use rand::Rng;
use vqakit::tree::Node;
use vqakit::treequery::Relation;
use vqakit::{NodeId, ParseTree};

pub const LABELS: [&str; 3] = ["A", "B", "C"];
pub const WORDS: [&str; 8] = ["cells", "(", ")", "[", "non-specific", "1.5", "'s", "%"];

/// Random tree with `1..=max_nodes` nodes: each new node hangs off a
/// uniformly chosen earlier node; childless nodes become leaves.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> ParseTree {
    let n = rng.gen_range(1..=max_nodes);
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let p = rng.gen_range(0..i);
        children[p].push(i);
    }
    let labels: Vec<&str> = (0..n).map(|_| LABELS[rng.gen_range(0..LABELS.len())]).collect();
    let words: Vec<&str> = (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
    fn build(i: usize, children: &[Vec<usize>], labels: &[&str], words: &[&str]) -> Node {
        if children[i].is_empty() {
            Node::leaf(labels[i], words[i])
        } else {
            Node::phrase(labels[i], children[i].iter().map(|&c| build(c, children, labels, words)).collect())
        }
    }
    ParseTree::from_node(build(0, &children, &labels, &words))
}

/// Structural facts computed directly from child lists.
pub struct Facts {
    parent: Vec<Option<usize>>,
    position: Vec<usize>,
    first_leaf: Vec<usize>,
    last_leaf: Vec<usize>,
}

impl Facts {
    pub fn new(tree: &ParseTree) -> Facts {
        let n = tree.len();
        let mut f = Facts {
            parent: vec![None; n],
            position: vec![0; n],
            first_leaf: vec![0; n],
            last_leaf: vec![0; n],
        };
        let mut next_leaf = 0;
        f.walk(tree, tree.root().0, &mut next_leaf);
        f
    }

    fn walk(&mut self, tree: &ParseTree, id: usize, next_leaf: &mut usize) {
        let kids = tree.children(NodeId(id));
        if kids.is_empty() {
            self.first_leaf[id] = *next_leaf;
            self.last_leaf[id] = *next_leaf;
            *next_leaf += 1;
            return;
        }
        for (pos, k) in kids.iter().enumerate() {
            self.parent[k.0] = Some(id);
            self.position[k.0] = pos;
            self.walk(tree, k.0, next_leaf);
        }
        self.first_leaf[id] = self.first_leaf[kids[0].0];
        self.last_leaf[id] = self.last_leaf[kids[kids.len() - 1].0];
    }

    fn dominates(&self, a: usize, b: usize) -> bool {
        let mut cur = self.parent[b];
        while let Some(p) = cur {
            if p == a {
                return true;
            }
            cur = self.parent[p];
        }
        false
    }

    fn sisters(&self, a: usize, b: usize) -> bool {
        a != b && self.parent[a].is_some() && self.parent[a] == self.parent[b]
    }

    pub fn holds(&self, a: usize, rel: Relation, b: usize) -> bool {
        let (pa, pb) = (self.position[a], self.position[b]);
        match rel {
            Relation::Parent => self.parent[b] == Some(a),
            Relation::Child => self.parent[a] == Some(b),
            Relation::Dominates => self.dominates(a, b),
            Relation::DominatedBy => self.dominates(b, a),
            Relation::ImmediatelyPrecedes => self.last_leaf[a] + 1 == self.first_leaf[b],
            Relation::ImmediatelyFollows => self.last_leaf[b] + 1 == self.first_leaf[a],
            Relation::Precedes => self.last_leaf[a] < self.first_leaf[b],
            Relation::Follows => self.last_leaf[b] < self.first_leaf[a],
            Relation::Sister => self.sisters(a, b),
            Relation::ImmediateLeftSister => self.sisters(a, b) && pb == pa + 1,
            Relation::ImmediateRightSister => self.sisters(a, b) && pa == pb + 1,
            Relation::LeftSister => self.sisters(a, b) && pb > pa,
            Relation::RightSister => self.sisters(a, b) && pb < pa,
        }
    }
}

fn bound(tree: &ParseTree, pattern: &str, names: &[&str]) -> Result<Vec<Vec<usize>>, String> {
    let p = vqakit::treequery::compile_pattern(pattern).map_err(|e| format!("{pattern}: {e}"))?;
    let mut out: Vec<Vec<usize>> = vqakit::treequery::find_all(tree, &p)
        .iter()
        .map(|m| names.iter().map(|n| m.get(n).expect("capture bound").0).collect())
        .collect();
    let len = out.len();
    out.sort();
    out.dedup();
    if out.len() != len {
        return Err(format!("{pattern}: duplicate bindings"));
    }
    Ok(out)
}

/// Compares `find_all` with the brute-force reference for plain, negated,
/// label-restricted and chained uses of `rel`. Returns one message per
/// discrepancy.
pub fn check_relation(tree: &ParseTree, rel: Relation, chained_with: Relation) -> Vec<String> {
    let facts = Facts::new(tree);
    let n = tree.len();
    let label = |i: usize| tree.label(NodeId(i)).to_string();
    let sym = rel.symbol();
    let mut errors = Vec::new();
    let mut compare = |pattern: String, names: &[&str], expected: Vec<Vec<usize>>| match bound(tree, &pattern, names) {
        Ok(got) if got == expected => {}
        Ok(got) => errors.push(format!("{pattern} on {}: got {got:?}, expected {expected:?}", tree.render())),
        Err(e) => errors.push(e),
    };

    let pairs: Vec<Vec<usize>> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| facts.holds(a, rel, b))
        .map(|(a, b)| vec![a, b])
        .collect();
    compare(format!("__=a {sym} __=b"), &["a", "b"], pairs.clone());

    let lonely: Vec<Vec<usize>> = (0..n).filter(|&a| (0..n).all(|b| !facts.holds(a, rel, b))).map(|a| vec![a]).collect();
    compare(format!("__=a !{sym} __"), &["a"], lonely);

    for la in LABELS {
        for lb in LABELS {
            let expected = pairs.iter().filter(|p| label(p[0]) == la && label(p[1]) == lb).cloned().collect();
            compare(format!("{la}=a {sym} {lb}=b"), &["a", "b"], expected);
        }
    }

    let mut triples = Vec::new();
    for p in &pairs {
        for c in 0..n {
            if facts.holds(p[1], chained_with, c) {
                triples.push(vec![p[0], p[1], c]);
            }
        }
    }
    compare(format!("__=a {sym} (__=b {} __=c)", chained_with.symbol()), &["a", "b", "c"], triples);
    errors
}
