//! The two-agent grid fixture played through message exchange and a stressor.

use mas_resilience::kripke::{grid_world, refine, revise, FrameConditions, GridWorld};
use mas_resilience::trace::Trace;

pub fn labels(g: &GridWorld, ws: &[usize]) -> Vec<String> {
    let mut v: Vec<String> = ws.iter().map(|&w| g.model.label(w).to_string()).collect();
    v.sort();
    v
}

/// Steps 0 (initial), 1 (after exchanging K1 H1 and K2 H3), 2 (after the B3
/// stressor and both revisions).
pub fn story() -> (GridWorld, Trace) {
    let g = grid_world();
    let m = &g.model;
    let stressed = m.world("HBB").unwrap();
    let mut trace = Trace::new(m.clone());
    trace.push_state(g.actual, vec![true, true]).unwrap();
    trace.push_state(g.actual, vec![true, true]).unwrap();
    trace.push_state(stressed, vec![true, true]).unwrap();

    let r1 = refine(
        m.relation(1).unwrap(),
        &m.worlds_where("H3").unwrap(),
        g.actual,
    )
    .unwrap();
    let r2 = refine(
        m.relation(2).unwrap(),
        &m.worlds_where("H1").unwrap(),
        g.actual,
    )
    .unwrap();
    trace.record_relation(1, 1, r1.clone()).unwrap();
    trace.record_relation(2, 1, r2.clone()).unwrap();

    let b3 = m.worlds_where("B3").unwrap();
    let t2 = m.nearest_in(&b3, r2.row(g.actual));
    let r2 = revise(&r2, &t2, stressed, FrameConditions::S5).unwrap();
    let t1 = m.nearest_in(&b3, r1.row(g.actual));
    let r1 = revise(&r1, &t1, stressed, FrameConditions::S5).unwrap();
    trace.record_relation(1, 2, r1).unwrap();
    trace.record_relation(2, 2, r2).unwrap();
    (g, trace)
}
