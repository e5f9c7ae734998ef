#![allow(clippy::needless_range_loop)]
use mas_resilience::config::ExperimentConfig;
use mas_resilience::env::{build_logic, WorldCatalog};
use mas_resilience::kripke::FrameConditions;
use mas_resilience::net::ConsensusWeights;
use mas_resilience::policies::{
    ucb_index, ActionIdentifier, Agent, AgentMode, Mode, Orientation, StepContext, UcbStats,
};
use mas_resilience::sensing::BroadcastMsg;

fn catalog() -> WorldCatalog {
    WorldCatalog::from_means(vec![
        vec![0.2, 0.9, 0.5, 0.4, 0.3],
        vec![1.0, 0.1, 0.5, 0.2, 0.6],
    ])
    .unwrap()
}

fn agent(mode: Mode, c: &WorldCatalog) -> Agent {
    let params = ExperimentConfig::default().policy_params(mode, 3);
    let logic = build_logic(c, 1, FrameConditions::REFLEXIVE);
    Agent::new(1, params, c, logic.model.relation(1).unwrap().clone())
}

#[test]
fn index_matches_direct_arithmetic() {
    let mut s = UcbStats::new(2, 1.0);
    for _ in 0..25 {
        s.discounted_update(0, 0.5);
    }
    let direct = 0.5 + (4.0 * 100f64.ln() / 25.0).sqrt();
    assert!((ucb_index(&s, 0, 99, 1.0) - direct).abs() < 1e-12);
    // 0.5 + sqrt(4·ln 100 / 25) = 1.358386 (python: math.log, math.sqrt).
    assert!((direct - 1.358386).abs() < 1e-6);
    assert_eq!(ucb_index(&s, 1, 99, 1.0), f64::INFINITY);

    // Same mean, fewer pulls: larger index.
    let mut few = UcbStats::new(2, 1.0);
    for _ in 0..5 {
        few.discounted_update(0, 0.5);
    }
    assert!(ucb_index(&few, 0, 99, 1.0) > ucb_index(&s, 0, 99, 1.0));
    assert_eq!(UcbStats::new(7, 0.9).argmax(0, 1.0, 1.0), 0);
}

#[test]
fn discounted_counts_saturate_and_track_a_step() {
    let gamma = 0.998;
    let mut s = UcbStats::new(1, gamma);
    for _ in 0..20_000 {
        s.discounted_update(0, 0.0);
    }
    assert!((s.count(0) - 1.0 / (1.0 - gamma)).abs() < 1e-6);
    // With the count saturated, the mean after m unit rewards is 1 - γ^m.
    for m in 1..=1500 {
        s.discounted_update(0, 1.0);
        if m % 250 == 0 {
            assert!((s.mean(0).unwrap() - (1.0 - gamma.powi(m))).abs() < 1e-6);
        }
    }
    let mut s = UcbStats::new(1, gamma);
    for _ in 0..20_000 {
        s.discounted_update(0, 0.0);
    }
    let steps = (0..).find(|_| {
        s.discounted_update(0, 1.0);
        s.mean(0).unwrap() >= 1.0 - (-1f64).exp()
    });
    assert!((495..=505).contains(&steps.unwrap()), "{steps:?}");

    let mut plain = UcbStats::new(1, 1.0);
    for r in [1.0, 2.0, 6.0] {
        plain.discounted_update(0, r);
    }
    assert_eq!((plain.count(0), plain.mean(0)), (3.0, Some(3.0)));
}

#[test]
fn exact_averaging_then_scaling_pools_the_statistics() {
    let mut agents: Vec<UcbStats> = (0..4).map(|_| UcbStats::new(3, 1.0)).collect();
    let mut pooled = [(0.0, 0.0); 3];
    for (i, s) in agents.iter_mut().enumerate() {
        for k in 0..=i {
            let arm = (i + k) % 3;
            let r = (i * 3 + k) as f64 * 0.1;
            s.discounted_update(arm, r);
            pooled[arm].0 += 1.0;
            pooled[arm].1 += r;
        }
    }
    let mixed = ConsensusWeights::exact_average(4)
        .mix(&agents.iter().map(UcbStats::to_vec).collect::<Vec<_>>())
        .unwrap();
    for (s, v) in agents.iter_mut().zip(&mixed) {
        s.set_from_slice(v);
        let global = s.scaled(4.0);
        for arm in 0..3 {
            assert!((global.count(arm) - pooled[arm].0).abs() < 1e-12);
            assert!((global.sum(arm) - pooled[arm].1).abs() < 1e-12);
        }
    }
}

#[test]
fn noiseless_rewards_try_each_arm_once_then_settle() {
    let means = [0.3, 0.8, 0.1, 0.7];
    let mut s = UcbStats::new(4, 1.0);
    let pulls: Vec<usize> = (0..40u64)
        .map(|t| {
            let a = s.argmax(t, 1e-9, 1.0);
            s.discounted_update(a, means[a]);
            a
        })
        .collect();
    assert_eq!(&pulls[..4], &[0, 1, 2, 3]);
    assert!(pulls[4..].iter().all(|&a| a == 1));
}

#[test]
fn identification_stops_where_the_radii_separate() {
    let (sigma, eta, policies, gap) = (1.0, 0.05, 16, 0.4);
    // Smallest k with 2·σ·sqrt(2·ln(2|Π|/η)/k) < gap.
    let want = (1..)
        .find(|&k| 2.0 * sigma * (2.0 * (2.0 * policies as f64 / eta).ln() / k as f64).sqrt() < gap)
        .unwrap();
    assert_eq!(want, 324);
    let stop_at = (1..1000)
        .find(|&k| {
            let mut id = ActionIdentifier::new(policies, sigma, eta, Orientation::Reward).unwrap();
            for p in 0..policies {
                id.record_many(p, if p == 5 { 1.0 } else { 1.0 - gap }, k as f64);
            }
            let r = id.identify();
            assert_eq!(r.best, 5);
            r.stop
        })
        .unwrap();
    assert_eq!(stop_at, want);
    let id = ActionIdentifier::new(policies, sigma, eta, Orientation::Cost).unwrap();
    assert!((1..50).all(|k| id.radius(k as f64 + 1.0) < id.radius(k as f64)));
}

#[test]
fn seeded_agents_start_on_the_believed_best_arm() {
    let c = catalog();
    for mode in [
        Mode::LightCoopKripke,
        Mode::LightCoopKripkeFast,
        Mode::CooperativeKripke,
    ] {
        let mut a = agent(mode, &c);
        assert_eq!(a.mode(), AgentMode::Committed { world: 0, since: 0 });
        assert_eq!(a.select_arm(&c, 0), 1);
    }
    let mut base = agent(Mode::IndependentDucb, &c);
    assert_eq!(base.mode(), AgentMode::Normal);
    assert_eq!(base.select_arm(&c, 0), 0);
}

#[test]
fn gathering_cycles_the_arms_from_the_entry_step() {
    let c = catalog();
    let mut a = agent(Mode::LightCoopKripke, &c);
    let mut entered = None;
    for t in 0..200 {
        let ctx = StepContext {
            t,
            catalog: &c,
            actual: 1,
        };
        a.begin_step(&ctx, &[]);
        let arm = a.select_arm(&c, t);
        // Shifted world-1 rewards, far from the believed means on arm 1.
        if a.observe(&ctx, arm, c.mean(1, arm) + 3.0).detected {
            entered = Some(t);
            break;
        }
    }
    let s = entered.expect("residuals of 3 exceed eps");
    assert!(a.is_gathering());
    let arms: Vec<usize> = (1..=10).map(|k| a.select_arm(&c, s + k)).collect();
    let want: Vec<usize> = (0..10).map(|k| (s + k) % 5).collect();
    assert_eq!(arms, want);
}

#[test]
fn fast_agents_follow_stronger_broadcasts_only() {
    let c = catalog();
    let mut a = agent(Mode::LightCoopKripkeFast, &c);
    let msg = |hypothesis, score, timestamp| BroadcastMsg {
        sender: 2,
        timestamp,
        hypothesis,
        score,
        ttl: 3,
    };
    let ctx = |t| StepContext {
        t,
        catalog: &c,
        actual: 1,
    };
    assert_eq!(a.begin_step(&ctx(5), &[msg(1, 11.0, 4)]).committed, Some(1));
    assert_eq!(a.believed(), 1);
    assert_eq!(a.select_arm(&c, 5), 0);
    assert_eq!(a.begin_step(&ctx(6), &[msg(0, 10.5, 5)]).committed, None);
    assert_eq!(a.believed(), 1);
    assert_eq!(a.begin_step(&ctx(7), &[msg(0, 12.0, 6)]).committed, Some(0));
    assert_eq!(a.believed(), 0);
    assert_eq!(a.mode(), AgentMode::Committed { world: 0, since: 7 });
}

#[test]
fn slow_agents_wait_for_the_deadline() {
    let c = catalog();
    let mut a = agent(Mode::LightCoopKripke, &c);
    let ctx = |t| StepContext {
        t,
        catalog: &c,
        actual: 1,
    };
    let m = |sender, hypothesis, score| BroadcastMsg {
        sender,
        timestamp: 4,
        hypothesis,
        score,
        ttl: 3,
    };
    assert_eq!(a.begin_step(&ctx(5), &[m(2, 1, 11.0)]).committed, None);
    assert_eq!(a.begin_step(&ctx(6), &[m(3, 0, 10.5)]).committed, None);
    // Deadline = first timestamp + l_comm = 7; the higher score wins.
    assert_eq!(a.begin_step(&ctx(7), &[]).committed, Some(1));
}
