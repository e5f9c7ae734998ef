mod common;

use common::grid::{labels, story as grid_story};
use mas_resilience::kripke::{
    apply, check_frame, grid_world, refine, revise, BitSet, EpistemicAction, FrameConditions,
    KripkeError, Relation,
};
use mas_resilience::logic::eval;
use proptest::prelude::*;

#[test]
fn grid_initial_knowledge() {
    let (_, tr) = grid_story();
    for (f, want) in [
        ("K 1 H1", true),
        ("K 2 H3", true),
        ("P 1 B2", true),
        ("P 1 H2", true),
        ("P 1 H3", true),
        ("P 1 B3", true),
        ("P 2 H1", true),
        ("P 2 B1", true),
        ("P 2 H2", true),
        ("P 2 B2", true),
        ("K 1 H3", false),
        ("K 2 H1", false),
    ] {
        assert_eq!(eval(&tr, 0, &f.parse().unwrap()), Ok(want), "{f}");
    }
}

#[test]
fn grid_knowledge_after_exchange() {
    let (g, tr) = grid_story();
    for (f, want) in [
        ("K 1 H1 & K 1 H3", true),
        ("K 2 H1 & K 2 H3", true),
        ("E{1,2} H3", true),
        ("E{1,2} H1", true),
        ("P 1 H2 & P 1 B2", true),
        ("P 2 H2 & P 2 B2", true),
    ] {
        assert_eq!(eval(&tr, 1, &f.parse().unwrap()), Ok(want), "{f}");
    }
    let row = tr.model().relation(1).unwrap();
    let after = refine(row, &g.model.worlds_where("H3").unwrap(), g.actual).unwrap();
    assert_eq!(labels(&g, &after.row(g.actual).to_vec()), ["HBH", "HHH"]);
    assert!(after.is_subset(row) && after != *row);
}

#[test]
fn grid_revision_after_stressor() {
    let (g, tr) = grid_story();
    for (f, want) in [
        ("K 2 B3", true),
        ("K 1 B3", true),
        ("K 2 H3", false),
        ("K 1 H3", false),
        ("E{1,2} B3", true),
    ] {
        assert_eq!(eval(&tr, 2, &f.parse().unwrap()), Ok(want), "{f}");
    }
    let stressed = g.model.world("HBB").unwrap();
    let a2 = mas_resilience::logic::Structure::relation(&tr, 2, 2)
        .row(stressed)
        .to_vec();
    assert_eq!(labels(&g, &a2), ["HBB", "HHB"]);
    let a1 = mas_resilience::logic::Structure::relation(&tr, 1, 2)
        .row(stressed)
        .to_vec();
    let b3 = g.model.atom_id("B3").unwrap();
    assert!(a1.iter().all(|&w| g.model.holds(w, b3)));
    for agent in [1, 2] {
        assert!(check_frame(
            mas_resilience::logic::Structure::relation(&tr, agent, 2),
            FrameConditions::S5
        ));
    }
}

fn brute_frame(rel: &Relation, f: FrameConditions) -> bool {
    let n = rel.n_worlds();
    let r = |a, b| rel.contains(a, b);
    (!f.reflexive || (0..n).all(|a| r(a, a)))
        && (!f.symmetric || (0..n).all(|a| (0..n).all(|b| !r(a, b) || r(b, a))))
        && (!f.transitive
            || (0..n).all(|a| (0..n).all(|b| (0..n).all(|c| !(r(a, b) && r(b, c)) || r(a, c)))))
}

#[test]
fn grid_relations_pass_brute_force_frame_scan() {
    let g = grid_world();
    for agent in [1, 2] {
        assert!(brute_frame(
            g.model.relation(agent).unwrap(),
            FrameConditions::S5
        ));
    }
}

fn frame_strategy() -> impl Strategy<Value = FrameConditions> {
    prop::sample::select(vec![
        FrameConditions::NONE,
        FrameConditions::REFLEXIVE,
        FrameConditions::S4,
        FrameConditions::S5,
    ])
}

/// A random relation closed under `frame`.
fn relation_in(n: usize, frame: FrameConditions, bits: &[bool], labels: &[usize]) -> Relation {
    if frame.symmetric {
        return Relation::from_partition(n, |w| labels[w]);
    }
    let mut r = Relation::from_pairs(n, (0..n * n).filter(|&k| bits[k]).map(|k| (k / n, k % n)));
    if frame.reflexive {
        for w in 0..n {
            r.insert(w, w);
        }
    }
    if frame.transitive {
        loop {
            let mut changed = false;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if r.contains(a, b) && r.contains(b, c) && !r.contains(a, c) {
                            r.insert(a, c);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    r
}

#[derive(Clone, Debug)]
enum Op {
    Refine(Vec<bool>),
    Revise(Vec<bool>),
    Hold,
}

fn op(n: usize) -> impl Strategy<Value = Op> {
    prop_oneof![
        prop::collection::vec(any::<bool>(), n).prop_map(Op::Refine),
        prop::collection::vec(any::<bool>(), n).prop_map(Op::Revise),
        Just(Op::Hold),
    ]
}

fn set_of(bits: &[bool]) -> BitSet {
    BitSet::from_predicate(bits.len(), |i| bits[i])
}

proptest! {
    #[test]
    fn refine_is_idempotent_and_shrinking(
        frame in frame_strategy(),
        bits in prop::collection::vec(prop::bool::weighted(0.4), 36),
        part in prop::collection::vec(0usize..3, 6),
        ev in prop::collection::vec(any::<bool>(), 6),
        actual in 0usize..6,
    ) {
        let rel = relation_in(6, frame, &bits, &part);
        let evidence = set_of(&ev);
        match refine(&rel, &evidence, actual) {
            Ok(once) => {
                prop_assert!(once.is_subset(&rel));
                prop_assert_eq!(refine(&once, &evidence, actual).unwrap(), once.clone());
                prop_assert!(brute_frame(&once, frame));
                for w in once.row(actual).iter() {
                    prop_assert!(evidence.contains(w));
                }
            }
            Err(KripkeError::FalseEvidence(w)) => prop_assert!(!evidence.contains(w)),
            Err(KripkeError::EmptyRefinement(_)) => {}
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn revise_hits_target_exactly(
        frame in frame_strategy(),
        bits in prop::collection::vec(prop::bool::weighted(0.4), 36),
        part in prop::collection::vec(0usize..3, 6),
        target in prop::collection::vec(any::<bool>(), 6),
        actual in 0usize..6,
    ) {
        let rel = relation_in(6, frame, &bits, &part);
        let target = set_of(&target);
        prop_assume!(!target.is_empty());
        let out = revise(&rel, &target, actual, frame).unwrap();
        let mut want = target.clone();
        if frame.reflexive || frame.symmetric {
            want.insert(actual);
        }
        prop_assert_eq!(out.row(actual), &want);
        prop_assert!(brute_frame(&out, frame));
    }

    #[test]
    fn action_sequences_stay_in_frame(
        frame in frame_strategy(),
        bits in prop::collection::vec(prop::bool::weighted(0.4), 25),
        part in prop::collection::vec(0usize..3, 5),
        ops in prop::collection::vec(op(5), 1..12),
        actuals in prop::collection::vec(0usize..5, 12),
    ) {
        let mut rel = relation_in(5, frame, &bits, &part);
        prop_assert!(brute_frame(&rel, frame));
        for (o, &actual) in ops.iter().zip(&actuals) {
            let action = match o {
                Op::Refine(b) => EpistemicAction::Refine(set_of(b)),
                Op::Revise(b) if b.iter().any(|&x| x) => EpistemicAction::Revise(set_of(b)),
                _ => EpistemicAction::Hold,
            };
            if let Ok(next) = apply(&action, &rel, actual, frame) {
                rel = next;
            }
            prop_assert!(brute_frame(&rel, frame), "{:?} broke the frame", action);
            prop_assert_eq!(check_frame(&rel, frame), true);
        }
    }
}

#[test]
fn revise_to_everything_under_reflexive_frame() {
    let r = revise(
        &Relation::identity(6),
        &BitSet::full(6),
        4,
        FrameConditions::REFLEXIVE,
    )
    .unwrap();
    assert_eq!(r.row(4).count(), 6);
    for w in 0..6 {
        if w != 4 {
            assert_eq!(r.row(w).to_vec(), vec![w]);
        }
    }
}
