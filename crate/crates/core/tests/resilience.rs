mod common;

use common::{build, random_case, scan, within_budgets};
use mas_resilience::logic::Formula;
use mas_resilience::resilience::{
    action_durability, action_recoverability, check_resilience, epistemic_durability,
    epistemic_recoverability, measure, CensorReason, Delay, ResilienceSpec, Verdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn h() -> Formula {
    Formula::atom("h")
}

/// One agent, ten steps, stressor at 2; knowledge toggles at `toggles`,
/// all-optimal exactly on `opt`.
fn ten_steps(toggles: &[usize], opt: impl Fn(usize) -> bool) -> mas_resilience::trace::Trace {
    let optimal: Vec<Vec<bool>> = (0..10).map(|t| vec![opt(t)]).collect();
    build(1, 2, 10, &[toggles.to_vec()], &[false], &optimal)
}

#[test]
fn epistemic_recovery_examples() {
    let tr = ten_steps(&[5], |_| false);
    assert_eq!(
        epistemic_recoverability(&tr, 2, &h(), &[1]),
        Ok(Delay::Finite(3))
    );
    let tr = ten_steps(&[], |_| false);
    assert_eq!(
        epistemic_recoverability(&tr, 2, &h(), &[1]),
        Ok(Delay::Infinite)
    );
    let tr = ten_steps(&[3], |_| false);
    assert_eq!(
        epistemic_recoverability(&tr, 2, &h(), &[1]),
        Ok(Delay::Finite(1))
    );
}

#[test]
fn epistemic_durability_examples() {
    // Known on [3, 7], lost at 8.
    let tr = ten_steps(&[3, 8], |_| false);
    assert_eq!(
        epistemic_durability(&tr, 3, &h(), &[1]),
        Ok(Delay::Finite(5))
    );
    let tr = ten_steps(&[3], |_| false);
    assert_eq!(
        epistemic_durability(&tr, 3, &h(), &[1]),
        Ok(Delay::Infinite)
    );
    let tr = ten_steps(&[3, 4], |_| false);
    assert_eq!(
        epistemic_durability(&tr, 3, &h(), &[1]),
        Ok(Delay::Finite(1))
    );
}

#[test]
fn action_interval_examples() {
    let tr = ten_steps(&[3], |t| t >= 3);
    assert_eq!(action_recoverability(&tr, 3), Ok(Delay::Finite(0)));
    let tr = ten_steps(&[3], |t| t >= 5);
    assert_eq!(action_recoverability(&tr, 3), Ok(Delay::Finite(2)));
    let tr = ten_steps(&[3], |_| false);
    assert_eq!(action_recoverability(&tr, 3), Ok(Delay::Infinite));

    let tr = ten_steps(&[3], |t| (4..8).contains(&t));
    assert_eq!(action_durability(&tr, 4), Ok(Delay::Finite(4)));
    let tr = ten_steps(&[3], |t| t >= 4);
    assert_eq!(action_durability(&tr, 4), Ok(Delay::Infinite));
    let tr = ten_steps(&[3], |t| t == 4);
    assert_eq!(action_durability(&tr, 4), Ok(Delay::Finite(1)));
}

#[test]
fn measure_chains_the_intervals() {
    let tr = ten_steps(&[4, 9], |t| (5..8).contains(&t));
    let m = measure(&tr, 2, &h(), &[1]).unwrap();
    assert_eq!(m.t_rec_epi, Some(4));
    assert_eq!(m.dt_rec_epi, Delay::Finite(2));
    assert_eq!(m.dt_dur_epi, Delay::Finite(5));
    assert_eq!(m.t_rec_act, Some(5));
    assert_eq!(m.dt_rec_act, Delay::Finite(1));
    assert_eq!(m.dt_dur_act, Delay::Finite(3));
    let never = measure(&ten_steps(&[], |_| true), 2, &h(), &[1]).unwrap();
    assert_eq!((never.t_rec_epi, never.t_rec_act), (None, None));
    assert!(never.dt_dur_act.is_infinite());
}

#[test]
fn monitor_examples() {
    // Known from t_v + 2 onwards, optimal from the same step.
    let tr = ten_steps(&[4], |t| t >= 4);
    let spec = ResilienceSpec::new((5, 3, 5, 3), h(), vec![1]).unwrap();
    assert_eq!(check_resilience(&tr, 2, &spec).unwrap(), Verdict::Satisfied);
    let tight = ResilienceSpec::new((1, 3, 5, 3), h(), vec![1]).unwrap();
    assert_eq!(
        check_resilience(&tr, 2, &tight).unwrap(),
        Verdict::ViolatedAt(3)
    );
    let long = ResilienceSpec::new((5, 30, 5, 3), h(), vec![1]).unwrap();
    assert_eq!(
        check_resilience(&tr, 2, &long).unwrap(),
        Verdict::Censored(CensorReason::TraceTooShort {
            needed: 37,
            len: 10
        })
    );
}

#[test]
fn satisfied_verdicts_imply_budgets_within_premises() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut satisfied, mut violated) = (0, 0);
    for _ in 0..2000 {
        let c = random_case(&mut rng, true);
        let m = scan(&c.trace, c.t_v);
        let rec = measure(&c.trace, c.t_v, &c.spec.phi2, &c.spec.agents).unwrap();
        assert_eq!(
            (
                rec.dt_rec_epi,
                rec.dt_dur_epi,
                rec.dt_rec_act,
                rec.dt_dur_act
            ),
            m
        );
        match check_resilience(&c.trace, c.t_v, &c.spec).unwrap() {
            Verdict::Satisfied => {
                satisfied += 1;
                assert!(within_budgets(&c.spec, m), "{:?} vs {:?}", c.spec, m);
            }
            Verdict::ViolatedAt(_) => violated += 1,
            Verdict::Censored(r) => panic!("generated runs are long enough: {r:?}"),
        }
    }
    assert!(
        satisfied > 100 && violated > 100,
        "{satisfied} satisfied, {violated} violated"
    );
}

#[test]
fn violations_are_witnessed_within_the_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let c = random_case(&mut rng, false);
        let b = c.spec.bound();
        let full = check_resilience(&c.trace, c.t_v, &c.spec).unwrap();
        if let Verdict::ViolatedAt(t) = full {
            assert!(
                (c.t_v..=c.t_v + b).contains(&t),
                "witness {t} outside [{}, {}]",
                c.t_v,
                c.t_v + b
            );
        }
        let cut = c.trace.truncated(c.t_v + b);
        assert_eq!(check_resilience(&cut, c.t_v, &c.spec).unwrap(), full);
    }
}

#[test]
fn knowledge_already_present_at_the_stressor_breaks_the_implication() {
    // Known on [t_v, t_v + 3) only: the formula is satisfied from t_v itself,
    // while the interval measured from the first strictly later step is short.
    let tr = ten_steps(&[2, 5], |_| true);
    let spec = ResilienceSpec::new((2, 3, 2, 3), h(), vec![1]).unwrap();
    assert_eq!(check_resilience(&tr, 2, &spec).unwrap(), Verdict::Satisfied);
    let m = scan(&tr, 2);
    assert_eq!(m.0, Delay::Finite(1));
    assert_eq!(m.1, Delay::Finite(2));
    assert!(!within_budgets(&spec, m));
}
