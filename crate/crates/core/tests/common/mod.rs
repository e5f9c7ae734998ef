//! Random two-world runs for exercising the resilience monitor, plus a
//! straight-line scan of the four intervals that does not go through the
//! formula evaluator.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod grid;

use mas_resilience::kripke::{FrameConditions, KripkeModel, Relation};
use mas_resilience::logic::{Formula, Structure};
use mas_resilience::resilience::{Delay, ResilienceSpec};
use mas_resilience::trace::Trace;
use rand::Rng;

/// World 0 satisfies `g`, world 1 satisfies `h`; the stressor moves the run
/// from world 0 to world 1 at `t_v`.
pub struct Case {
    pub trace: Trace,
    pub t_v: usize,
    pub spec: ResilienceSpec,
}

pub fn knows_h() -> Relation {
    Relation::from_pairs(2, [(0, 0), (1, 1)])
}

pub fn unsure() -> Relation {
    Relation::from_pairs(2, [(0, 0), (1, 0), (1, 1)])
}

pub fn model(n: usize) -> KripkeModel {
    KripkeModel::new(
        vec!["w0".into(), "w1".into()],
        vec!["g".into(), "h".into()],
        vec![vec!["g".into()], vec!["h".into()]],
        n,
        FrameConditions::NONE,
    )
    .unwrap()
}

/// Build a run from per-agent knowledge toggle steps and per-step optimality.
pub fn build(
    n: usize,
    t_v: usize,
    len: usize,
    toggles: &[Vec<usize>],
    start_known: &[bool],
    optimal: &[Vec<bool>],
) -> Trace {
    let mut trace = Trace::new(model(n));
    for t in 0..len {
        trace
            .push_state(usize::from(t >= t_v), optimal[t].clone())
            .unwrap();
    }
    for i in 0..n {
        let mut known = start_known[i];
        trace
            .record_relation(i + 1, 0, if known { knows_h() } else { unsure() })
            .unwrap();
        for &s in &toggles[i] {
            known = !known;
            trace
                .record_relation(i + 1, s, if known { knows_h() } else { unsure() })
                .unwrap();
        }
    }
    trace
}

/// A random case. With `premises`, nobody knows `h` at `t_v` and the agents
/// do not all act optimally before everyone knows it.
pub fn random_case<R: Rng>(rng: &mut R, premises: bool) -> Case {
    let n = rng.random_range(1..=3);
    let (a1, b1, a2, b2) = (
        rng.random_range(1..=6),
        rng.random_range(1..=6),
        rng.random_range(1..=6),
        rng.random_range(1..=6),
    );
    let t_v = rng.random_range(0..=3);
    let bound = (a1 + b1).max(a2 + b2);
    let len = t_v + bound + rng.random_range(0..=4);
    let first = if premises { t_v + 1 } else { 0 };
    let mut toggles = Vec::new();
    for _ in 0..n {
        let k = rng.random_range(0..=3);
        let mut ts: Vec<usize> = (0..k)
            .map(|_| rng.random_range(first.min(len - 1)..len))
            .collect();
        ts.sort_unstable();
        ts.dedup();
        ts.retain(|&t| t >= first);
        toggles.push(ts);
    }
    let start_known: Vec<bool> = (0..n).map(|_| !premises && rng.random_bool(0.3)).collect();
    // Optimality in blocks, so long optimal stretches are common.
    let switch = rng.random_range(t_v..len);
    let p_before = if premises { 0.3 } else { 0.6 };
    let mut optimal: Vec<Vec<bool>> = (0..len)
        .map(|t| {
            (0..n)
                .map(|_| {
                    if t >= switch {
                        rng.random_bool(0.97)
                    } else {
                        rng.random_bool(p_before)
                    }
                })
                .collect()
        })
        .collect();
    let mut trace = build(n, t_v, len, &toggles, &start_known, &optimal);
    if premises {
        if let Delay::Finite(d) = scan(&trace, t_v).0 {
            for row in optimal.iter_mut().take(t_v + d).skip(t_v) {
                row[0] = false;
            }
        } else {
            for row in optimal.iter_mut().skip(t_v) {
                row[0] = false;
            }
        }
        trace = build(n, t_v, len, &toggles, &start_known, &optimal);
    }
    let spec =
        ResilienceSpec::new((a1, b1, a2, b2), Formula::atom("h"), (1..=n).collect()).unwrap();
    Case { trace, t_v, spec }
}

/// Everyone's accessible set at the run's world only contains `h` worlds.
pub fn mutual(trace: &Trace, t: usize) -> bool {
    let h = trace.model().atom_id("h").unwrap();
    let w = trace.worlds()[t];
    (1..=trace.model().n_agents()).all(|i| {
        trace
            .relation(i, t)
            .row(w)
            .iter()
            .all(|v| trace.model().holds(v, h))
    })
}

fn first(from: usize, len: usize, mut pred: impl FnMut(usize) -> bool) -> Option<usize> {
    (from..len).find(|&t| pred(t))
}

fn delay(found: Option<usize>, origin: usize) -> Delay {
    found.map_or(Delay::Infinite, |t| Delay::Finite(t - origin))
}

/// The four intervals by direct scanning.
pub fn scan(trace: &Trace, t_v: usize) -> (Delay, Delay, Delay, Delay) {
    let len = trace.len();
    let rec_epi = first(t_v + 1, len, |t| mutual(trace, t));
    let Some(te) = rec_epi else {
        return (
            Delay::Infinite,
            Delay::Infinite,
            Delay::Infinite,
            Delay::Infinite,
        );
    };
    let dur_epi = first(te + 1, len, |t| !mutual(trace, t));
    let rec_act = first(te, len, |t| trace.all_optimal(t));
    let dur_act = rec_act.and_then(|ta| first(ta, len, |t| !trace.all_optimal(t)));
    (
        delay(rec_epi, t_v),
        delay(dur_epi, te),
        delay(rec_act, te),
        match rec_act {
            Some(ta) => delay(dur_act, ta),
            None => Delay::Infinite,
        },
    )
}

/// Whether the scanned intervals meet the budgets of `spec`.
pub fn within_budgets(spec: &ResilienceSpec, m: (Delay, Delay, Delay, Delay)) -> bool {
    m.0.at_most(spec.alpha1)
        && m.1.at_least(spec.beta1)
        && m.2.at_most(spec.alpha2)
        && m.3.at_least(spec.beta2)
}
