//! Recovery and durability metrics and the bounded monitor on a hand-made
//! run: a stressor at step 5, knowledge back at 9, optimal play from 11.

use mas_resilience::kripke::{FrameConditions, KripkeModel, Relation};
use mas_resilience::logic::Formula;
use mas_resilience::resilience::{check_resilience, measure, ResilienceSpec};
use mas_resilience::trace::Trace;

fn main() {
    let model = KripkeModel::new(
        vec!["before".into(), "after".into()],
        vec!["old".into(), "new".into()],
        vec![vec!["old".into()], vec!["new".into()]],
        2,
        FrameConditions::REFLEXIVE,
    )
    .unwrap();
    let t_v = 5;
    let mut trace = Trace::new(model);
    for t in 0..40 {
        let optimal = t < t_v || (11..30).contains(&t);
        trace
            .push_state(usize::from(t >= t_v), vec![optimal, optimal || t == 10])
            .unwrap();
    }
    let knows = Relation::identity(2);
    let lost = Relation::from_pairs(2, [(0, 0), (1, 0), (1, 1)]);
    trace.record_relation(1, 0, knows.clone()).unwrap();
    trace.record_relation(2, 0, knows.clone()).unwrap();
    trace.record_relation(1, t_v, lost.clone()).unwrap();
    trace.record_relation(2, t_v, lost).unwrap();
    trace.record_relation(1, 8, knows.clone()).unwrap();
    trace.record_relation(2, 9, knows).unwrap();

    let phi = Formula::atom("new");
    let m = measure(&trace, t_v, &phi, &[1, 2]).unwrap();
    println!("stressor at {t_v}");
    println!(
        "  epistemic recovery  {} (at step {:?})",
        m.dt_rec_epi, m.t_rec_epi
    );
    println!("  epistemic duration  {}", m.dt_dur_epi);
    println!(
        "  action recovery     {} (at step {:?})",
        m.dt_rec_act, m.t_rec_act
    );
    println!("  action duration     {}", m.dt_dur_act);

    for budgets in [
        (6, 10, 8, 10),
        (3, 10, 8, 10),
        (6, 10, 4, 10),
        (6, 10, 8, 25),
        (6, 40, 8, 10),
    ] {
        let spec = ResilienceSpec::new(budgets, phi.clone(), vec![1, 2]).unwrap();
        println!(
            "{budgets:?}: {:?}",
            check_resilience(&trace, t_v, &spec).unwrap()
        );
    }
}
