//! Two agents on a three-cell strip: each sees one end cell, they exchange
//! what they know, then the middle-right cell flips and both revise.

use mas_resilience::kripke::{grid_world, refine, revise, FrameConditions, GridWorld, Relation};
use mas_resilience::logic::eval;
use mas_resilience::trace::Trace;

fn show(g: &GridWorld, rel: &Relation, at: usize) -> String {
    let mut names: Vec<&str> = rel.row(at).iter().map(|w| g.model.label(w)).collect();
    names.sort();
    format!("{{{}}}", names.join(", "))
}

fn report(trace: &Trace, t: usize, formulas: &[&str]) {
    for f in formulas {
        let v = eval(trace, t, &f.parse().expect("formula parses")).expect("atoms exist");
        println!("  {f:<18} {v}");
    }
}

fn main() {
    let g = grid_world();
    let m = &g.model;
    let stressed = m.world("HBB").unwrap();
    println!("actual world {}", m.label(g.actual));

    let mut trace = Trace::new(m.clone());
    trace.push_state(g.actual, vec![true, true]).unwrap();
    trace.push_state(g.actual, vec![true, true]).unwrap();
    trace.push_state(stressed, vec![true, true]).unwrap();

    println!("\nt=0, before talking");
    for agent in [1, 2] {
        println!(
            "  agent {agent} considers {}",
            show(&g, m.relation(agent).unwrap(), g.actual)
        );
    }
    report(&trace, 0, &["K 1 H1", "K 2 H3", "P 1 B2", "P 2 H2"]);

    // Agent 1 learns cell 3 from agent 2 and vice versa.
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
    println!("\nt=1, after the exchange");
    println!("  agent 1 considers {}", show(&g, &r1, g.actual));
    report(&trace, 1, &["K 1 H3", "E{1,2} H3", "P 1 H2 & P 1 B2"]);

    // Cell 3 turns to B; each agent moves to the closest worlds where it does.
    let b3 = m.worlds_where("B3").unwrap();
    let n1 = revise(
        &r1,
        &m.nearest_in(&b3, r1.row(g.actual)),
        stressed,
        FrameConditions::S5,
    )
    .unwrap();
    let n2 = revise(
        &r2,
        &m.nearest_in(&b3, r2.row(g.actual)),
        stressed,
        FrameConditions::S5,
    )
    .unwrap();
    trace.record_relation(1, 2, n1.clone()).unwrap();
    trace.record_relation(2, 2, n2.clone()).unwrap();
    println!("\nt=2, after the stressor (now {})", m.label(stressed));
    println!("  agent 1 considers {}", show(&g, &n1, stressed));
    println!("  agent 2 considers {}", show(&g, &n2, stressed));
    report(&trace, 2, &["K 1 B3", "K 2 B3", "K 2 H3"]);
}
