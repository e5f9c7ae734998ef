//! One trial of one mode: environment, network and agents stepped in lockstep.
//!
//! Within step `t`: broadcasts sent at `t-1` are delivered, each agent (in id
//! order) handles its inbox, pulls an arm and updates locally, then
//! cooperative modes run one consensus round. Relations recorded for step `t`
//! are the agents' states at the end of the step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CommHorizon, ConfigError, ExperimentConfig};
use crate::env::{
    build_logic, make_catalog, BanditLogic, EnvError, RewardSampler, Schedule, WorldCatalog,
};
use crate::logic::EvalError;
use crate::net::{ConsensusWeights, Graph, MessageBus, NetError};
use crate::policies::{Agent, Mode, StepContext, StepReport};
use crate::resilience::{measure, MetricsRecord};
use crate::rng::{derive_seed, stream, Purpose};
use crate::sensing::EvidenceStep;
use crate::trace::{EventKind, Trace, TraceError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Everything a trial shares across modes: same catalog, schedule and graph.
#[derive(Clone, Debug)]
pub struct TrialSetup {
    pub trial: u64,
    pub catalog: WorldCatalog,
    pub schedule: Schedule,
    pub graph: Graph,
    pub l_comm: usize,
    pub logic: BanditLogic,
}

impl TrialSetup {
    pub fn new(config: &ExperimentConfig, trial: u64) -> Result<Self, SimError> {
        config.validate()?;
        let catalog = make_catalog(
            derive_seed(config.catalog_seed(), trial, 0, Purpose::Catalog),
            config.arms,
            config.worlds,
            config.change_rule,
        )?;
        let schedule = config.schedule()?;
        schedule.validate_for(&catalog)?;
        let graph = config.topology.build(
            config.agents,
            derive_seed(config.seed, trial, 0, Purpose::Graph),
        )?;
        let l_comm = match config.l_comm {
            CommHorizon::Diameter => graph.diameter()?,
            CommHorizon::Fixed(l) => l,
        };
        let logic = build_logic(&catalog, config.agents, config.frame);
        Ok(TrialSetup {
            trial,
            catalog,
            schedule,
            graph,
            l_comm,
            logic,
        })
    }
}

/// Per-step series and summary of one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub mode: Mode,
    pub trial: u64,
    pub seed: u64,
    /// Sum of sampled rewards over agents.
    pub total_reward: Vec<f64>,
    pub cumulative_reward: Vec<f64>,
    /// Expected regret summed over agents, accumulated.
    pub cumulative_regret: Vec<f64>,
    pub fraction_optimal: Vec<f64>,
    /// Mean over agents of `μ_a / μ*`.
    pub normalized_reward: Vec<f64>,
    pub metrics: MetricsRecord,
    pub flood_messages: u64,
    pub consensus_messages: u64,
    /// Steps at which some agent entered evidence gathering before the first change.
    pub early_detections: usize,
    /// World each agent committed to last, if any.
    pub final_commits: Vec<Option<usize>>,
}

impl TrialResult {
    pub fn total_messages(&self) -> u64 {
        self.flood_messages + self.consensus_messages
    }
}

/// Run `mode` on a prepared setup; returns the full trace as well.
pub fn simulate(
    config: &ExperimentConfig,
    setup: &TrialSetup,
    mode: Mode,
) -> Result<(Trace, TrialResult), SimError> {
    let n = config.agents;
    let horizon = config.horizon;
    let catalog = &setup.catalog;
    let params = config.policy_params(mode, setup.l_comm);
    let initial = setup
        .logic
        .model
        .relation(1)
        .expect("at least one agent")
        .clone();
    let mut agents: Vec<Agent> = (1..=n)
        .map(|i| Agent::new(i, params.clone(), catalog, initial.clone()))
        .collect();
    let mut reward_rngs: Vec<_> = (1..=n as u64)
        .map(|i| stream(config.seed, setup.trial, i, Purpose::Reward))
        .collect();
    let sampler = RewardSampler {
        sigma: config.sigma,
    };
    let weights = ConsensusWeights::metropolis_hastings(&setup.graph)?;
    let mut bus = MessageBus::new(setup.graph.clone());
    let mut trace = Trace::new(setup.logic.model.clone());
    let t_v = config.t_v();

    let mut total_reward = Vec::with_capacity(horizon);
    let mut cumulative_reward = Vec::with_capacity(horizon);
    let mut cumulative_regret = Vec::with_capacity(horizon);
    let mut fraction_optimal = Vec::with_capacity(horizon);
    let mut normalized_reward = Vec::with_capacity(horizon);
    let (mut cum_r, mut cum_g) = (0.0, 0.0);
    let mut early_detections = 0;
    let mut final_commits = vec![None; n];
    let mut inboxes: Vec<Vec<_>> = vec![Vec::new(); n];
    let h = catalog.n_worlds();

    for t in 0..horizon {
        let world = setup.schedule.world_at(t);
        let ctx = StepContext {
            t,
            catalog,
            actual: world,
        };
        for inbox in inboxes.iter_mut() {
            inbox.clear();
        }
        for (node, msg) in bus.deliver() {
            inboxes[node].push(msg);
        }
        let best = catalog.best_mean(world);
        let mut arms = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        let mut optimal = Vec::with_capacity(n);
        let mut increments: Vec<Vec<f64>> = Vec::new();
        let mut reports: Vec<StepReport> = Vec::with_capacity(n);
        for (idx, agent) in agents.iter_mut().enumerate() {
            let mut report = agent.begin_step(&ctx, &inboxes[idx]);
            let arm = agent.select_arm(catalog, t);
            let y = sampler.sample(catalog, world, arm, &mut reward_rngs[idx]);
            let observed = agent.observe(&ctx, arm, y);
            report.merge(observed);
            if mode == Mode::CooperativeKripke {
                increments.push(
                    Agent::evidence_increment(catalog, arm, y, config.sigma)
                        .as_slice()
                        .to_vec(),
                );
            }
            arms.push(arm as u32);
            rewards.push(y);
            optimal.push(catalog.is_optimal(world, arm));
            reports.push(report);
        }
        if mode.shares_stats() {
            consensus_round(&mut agents, &weights, mode == Mode::CooperativeKripke);
            bus.count_consensus_round();
        }
        if mode == Mode::CooperativeKripke {
            let mixed = weights.mix(&increments)?;
            for (idx, agent) in agents.iter_mut().enumerate() {
                if !agent.is_gathering() {
                    continue;
                }
                let mut pooled = EvidenceStep::zeros(h);
                for (p, v) in pooled.as_mut_slice().iter_mut().zip(&mixed[idx]) {
                    *p = v * n as f64;
                }
                let r = agent.absorb_pooled(&ctx, &pooled);
                reports[idx].merge(r);
            }
        }
        for (idx, report) in reports.into_iter().enumerate() {
            let id = idx + 1;
            if report.detected {
                trace.record_event(t, id, EventKind::Detect);
                if t < t_v {
                    early_detections += 1;
                }
            }
            if let Some(msg) = report.broadcast {
                bus.originate(idx, msg.clone());
                trace.record_event(t, id, EventKind::Broadcast(msg));
            }
            if let Some(w) = report.committed {
                trace.record_event(t, id, EventKind::Commit { world: w });
                final_commits[idx] = Some(w);
            }
            if let Some(rel) = agents[idx].take_relation_change() {
                trace.record_relation(id, t, rel.clone())?;
            }
        }

        let step_reward: f64 = rewards.iter().sum();
        let expected: f64 = arms.iter().map(|&a| catalog.mean(world, a as usize)).sum();
        cum_r += step_reward;
        cum_g += n as f64 * best - expected;
        total_reward.push(step_reward);
        cumulative_reward.push(cum_r);
        cumulative_regret.push(cum_g);
        fraction_optimal.push(optimal.iter().filter(|&&o| o).count() as f64 / n as f64);
        normalized_reward.push(expected / (n as f64 * best));
        trace.push_step(world, optimal, arms, rewards)?;
    }

    let phi2 = &setup.logic.phi[setup.schedule.world_at(t_v)];
    let agent_ids: Vec<usize> = (1..=n).collect();
    let metrics = measure(&trace, t_v.min(horizon.saturating_sub(1)), phi2, &agent_ids)?;
    let result = TrialResult {
        mode,
        trial: setup.trial,
        seed: config.seed,
        total_reward,
        cumulative_reward,
        cumulative_regret,
        fraction_optimal,
        normalized_reward,
        metrics,
        flood_messages: bus.flood_messages(),
        consensus_messages: bus.consensus_messages(),
        early_detections,
        final_commits,
    };
    Ok((trace, result))
}

/// One mixing round of the agents' statistics. With `by_belief`, weight on a
/// neighbour that believes a different world stays on the diagonal, so stale
/// statistics do not leak into freshly re-seeded ones.
fn consensus_round(agents: &mut [Agent], weights: &ConsensusWeights, by_belief: bool) {
    let values: Vec<Vec<f64>> = agents.iter().map(|a| a.stats().to_vec()).collect();
    let beliefs: Vec<usize> = agents.iter().map(Agent::believed).collect();
    for (i, agent) in agents.iter_mut().enumerate() {
        let mut out = vec![0.0; values[i].len()];
        let mut kept = 0.0;
        for &(j, w) in weights.row(i) {
            if by_belief && beliefs[j] != beliefs[i] {
                kept += w;
                continue;
            }
            for (o, x) in out.iter_mut().zip(&values[j]) {
                *o += w * x;
            }
        }
        for (o, x) in out.iter_mut().zip(&values[i]) {
            *o += kept * x;
        }
        agent.stats_mut().set_from_slice(&out);
    }
}

/// Build the setup for `trial` and run one mode.
pub fn run_trial(
    config: &ExperimentConfig,
    mode: Mode,
    trial: u64,
) -> Result<TrialResult, SimError> {
    let setup = TrialSetup::new(config, trial)?;
    Ok(simulate(config, &setup, mode)?.1)
}
