//! Parsing, printing and evaluating formulas, including verdicts that a
//! prefix of the run cannot settle yet.

use mas_resilience::kripke::{FrameConditions, KripkeModel, Relation};
use mas_resilience::logic::{compile, desugar, Formula, Structure};
use mas_resilience::trace::Trace;

fn main() {
    let model = KripkeModel::new(
        vec!["calm".into(), "storm".into()],
        vec!["safe".into(), "wind".into()],
        vec![vec!["safe".into()], vec!["wind".into()]],
        2,
        FrameConditions::REFLEXIVE,
    )
    .unwrap();
    let mut trace = Trace::new(model);
    for t in 0..12 {
        trace
            .push_state(
                usize::from(t >= 4),
                vec![!(4..7).contains(&t), !(4..8).contains(&t)],
            )
            .unwrap();
    }
    // Both agents confuse the two worlds until step 6, when they learn the truth.
    let unsure = Relation::from_pairs(2, [(0, 0), (0, 1), (1, 0), (1, 1)]);
    let sure = Relation::identity(2);
    for agent in [1, 2] {
        trace.record_relation(agent, 0, unsure.clone()).unwrap();
        trace.record_relation(agent, 6, sure.clone()).unwrap();
    }

    let texts = [
        "wind -> (true U[0,5] K 1 wind)",
        "E{1,2} wind",
        "G[0,3) pi_opt",
        "!K 2 wind U[0,4] K 2 wind",
        "P 1 safe & !K 1 safe",
    ];
    for text in texts {
        let f: Formula = text.parse().expect("parses");
        let c = compile(&trace, &f).expect("atoms are known");
        let row: String = (0..trace.len())
            .map(|t| match c.eval_prefix(&trace, t, 9) {
                Some(true) => 'T',
                Some(false) => '.',
                None => '?',
            })
            .collect();
        println!("{:<28} {row}", f.to_string());
        println!("{:<28} desugared: {}", "", desugar(&f));
    }
    println!("\nT true, . false, ? undetermined from the first 9 steps");
}
