mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vqakit::treequery::{apply_edits, compile_pattern, find_all, parse_edit_script, Relation};
use vqakit::{parse_ptb, NodeId};

proptest! {
    #[test]
    fn find_all_agrees_with_brute_force(seed in any::<u64>(), r in 0usize..13, s in 0usize..13) {
        let tree = common::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let errors = common::check_relation(&tree, Relation::ALL[r], Relation::ALL[s]);
        prop_assert!(errors.is_empty(), "{errors:#?}");
    }

    #[test]
    fn deleting_a_leaf_leaves_other_subtrees_alone(seed in any::<u64>()) {
        let tree = common::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let pattern = compile_pattern("__=p < __=x").unwrap();
        let script = parse_edit_script("delete x").unwrap();
        for m in find_all(&tree, &pattern) {
            let x = m.get("x").unwrap();
            let p = m.get("p").unwrap();
            if tree.children(p).len() < 2 {
                prop_assert!(apply_edits(&tree, &script, &m).is_err());
                continue;
            }
            let out = apply_edits(&tree, &script, &m).unwrap();
            prop_assert_eq!(out.len(), tree.len() - tree.descendants(x).len());
            let mut expected: Vec<String> = tree.words(tree.root()).iter().map(|w| w.to_string()).collect();
            let first = tree.leaves().iter().position(|&l| l == tree.leaves_under(x)[0]).unwrap();
            expected.drain(first..first + tree.leaves_under(x).len());
            prop_assert_eq!(out.words(out.root()), expected);
            // sisters of the deleted node are untouched
            for &sib in tree.children(p).iter().filter(|&&c| c != x) {
                let sub = tree.subtree(sib).render();
                prop_assert!(out.render().contains(&sub));
            }
        }
    }
}

#[test]
fn relations_on_a_known_tree() {
    let t = parse_ptb("(S (NP (DT The) (NN lumen)) (VP (VBZ is) (ADJP (JJ dilated))))").unwrap();
    let facts = common::Facts::new(&t);
    assert!(facts.holds(0, Relation::Parent, 1));
    assert!(facts.holds(1, Relation::ImmediateLeftSister, 4));
    assert!(facts.holds(2, Relation::ImmediatelyPrecedes, 3));
    assert!(facts.holds(1, Relation::Precedes, 7));
    assert!(!facts.holds(1, Relation::Precedes, 0));
    assert_eq!(t.label(NodeId(4)), "VP");
}
