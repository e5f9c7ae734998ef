//! Time-indexed record of a run: true world, per-agent accessibility,
//! chosen arms, rewards, optimality flags and epistemic events.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kripke::{KripkeError, KripkeModel, Relation};
use crate::logic::Structure;
use crate::sensing::BroadcastMsg;
use crate::{AgentId, WorldId};

/// Atom true at `t` iff every agent's arm at `t` is optimal.
pub const OPT_ALL: &str = "pi_opt";
/// Prefix of the per-agent optimality atoms `pi_opt_<i>`.
pub const OPT_PREFIX: &str = "pi_opt_";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Kripke(#[from] KripkeError),
    #[error("step {got} recorded out of order (expected {expected})")]
    OutOfOrder { expected: usize, got: usize },
    #[error("expected {expected} agents, got {got}")]
    AgentCount { expected: usize, got: usize },
    #[error("invalid trace file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Epoch {
    from: usize,
    relation: Relation,
}

/// Something an agent did to its epistemic state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    Detect,
    Broadcast(BroadcastMsg),
    Commit { world: WorldId },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub step: usize,
    pub agent: AgentId,
    pub kind: EventKind,
}

/// The run `r` evaluated by the logic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    model: KripkeModel,
    worlds: Vec<WorldId>,
    timelines: Vec<Vec<Epoch>>,
    /// `optimal[t][i-1]`: agent i's arm at t is in the true argmax.
    optimal: Vec<Vec<bool>>,
    arms: Vec<Vec<u32>>,
    rewards: Vec<Vec<f64>>,
    events: Vec<Event>,
}

/// Resolved atom handle for [`Structure`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceAtom {
    World(usize),
    OptimalAll,
    Optimal(AgentId),
}

impl Trace {
    /// Empty run; each agent's initial relation is the model's.
    pub fn new(model: KripkeModel) -> Self {
        let timelines = (1..=model.n_agents())
            .map(|i| {
                vec![Epoch {
                    from: 0,
                    relation: model.relation(i).expect("agent exists").clone(),
                }]
            })
            .collect();
        Trace {
            model,
            worlds: Vec::new(),
            timelines,
            optimal: Vec::new(),
            arms: Vec::new(),
            rewards: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn model(&self) -> &KripkeModel {
        &self.model
    }

    /// Append a step without arm data (synthetic runs).
    pub fn push_state(&mut self, world: WorldId, optimal: Vec<bool>) -> Result<(), TraceError> {
        let n = self.model.n_agents();
        self.push_step(world, optimal, vec![0; n], vec![0.0; n])
    }

    pub fn push_step(
        &mut self,
        world: WorldId,
        optimal: Vec<bool>,
        arms: Vec<u32>,
        rewards: Vec<f64>,
    ) -> Result<(), TraceError> {
        let n = self.model.n_agents();
        for len in [optimal.len(), arms.len(), rewards.len()] {
            if len != n {
                return Err(TraceError::AgentCount {
                    expected: n,
                    got: len,
                });
            }
        }
        if world >= self.model.n_worlds() {
            return Err(KripkeError::UnknownWorld(world.to_string()).into());
        }
        self.worlds.push(world);
        self.optimal.push(optimal);
        self.arms.push(arms);
        self.rewards.push(rewards);
        Ok(())
    }

    /// `R_{agent,s} = relation` for every `s >= from` until the next record.
    pub fn record_relation(
        &mut self,
        agent: AgentId,
        from: usize,
        relation: Relation,
    ) -> Result<(), TraceError> {
        let line = agent
            .checked_sub(1)
            .and_then(|i| self.timelines.get_mut(i))
            .ok_or(KripkeError::UnknownAgent(agent))?;
        let last = line.last_mut().expect("timeline starts at step 0");
        if from < last.from {
            return Err(TraceError::OutOfOrder {
                expected: last.from,
                got: from,
            });
        }
        if last.relation == relation {
            return Ok(());
        }
        if from == last.from {
            last.relation = relation;
        } else {
            line.push(Epoch { from, relation });
        }
        Ok(())
    }

    pub fn record_event(&mut self, step: usize, agent: AgentId, kind: EventKind) {
        self.events.push(Event { step, agent, kind });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn arms(&self, t: usize) -> &[u32] {
        &self.arms[t]
    }

    pub fn rewards(&self, t: usize) -> &[f64] {
        &self.rewards[t]
    }

    pub fn optimal(&self, t: usize) -> &[bool] {
        &self.optimal[t]
    }

    /// `π^opt` at `t`: every agent acts optimally.
    pub fn all_optimal(&self, t: usize) -> bool {
        self.optimal[t].iter().all(|&b| b)
    }

    /// Number of relation changes recorded for `agent` (excluding the initial one).
    pub fn relation_changes(&self, agent: AgentId) -> usize {
        self.timelines[agent - 1].len() - 1
    }

    /// Copy of the first `len` steps.
    pub fn truncated(&self, len: usize) -> Trace {
        let len = len.min(self.len());
        let mut out = self.clone();
        out.worlds.truncate(len);
        out.optimal.truncate(len);
        out.arms.truncate(len);
        out.rewards.truncate(len);
        for line in &mut out.timelines {
            let keep = line.iter().filter(|e| e.from < len.max(1)).count().max(1);
            line.truncate(keep);
        }
        out.events.retain(|e| e.step < len);
        out
    }

    pub fn to_json(&self) -> Result<String, TraceError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        let mut t: Trace = serde_json::from_str(text)?;
        t.model.reindex()?;
        Ok(t)
    }
}

impl Structure for Trace {
    type Atom = TraceAtom;

    fn len(&self) -> usize {
        self.worlds.len()
    }

    fn n_agents(&self) -> usize {
        self.model.n_agents()
    }

    fn world_at(&self, t: usize) -> WorldId {
        self.worlds[t]
    }

    fn resolve(&self, atom: &str) -> Option<TraceAtom> {
        if let Some(id) = self.model.atom_id(atom) {
            return Some(TraceAtom::World(id));
        }
        if atom == OPT_ALL {
            return Some(TraceAtom::OptimalAll);
        }
        let agent: AgentId = atom.strip_prefix(OPT_PREFIX)?.parse().ok()?;
        (1..=self.n_agents())
            .contains(&agent)
            .then_some(TraceAtom::Optimal(agent))
    }

    fn holds(&self, atom: TraceAtom, t: usize, world: WorldId) -> bool {
        match atom {
            TraceAtom::World(id) => self.model.holds(world, id),
            TraceAtom::OptimalAll => self.all_optimal(t),
            TraceAtom::Optimal(i) => self.optimal[t][i - 1],
        }
    }

    fn relation(&self, agent: AgentId, t: usize) -> &Relation {
        let line = &self.timelines[agent - 1];
        let idx = line.partition_point(|e| e.from <= t);
        &line[idx - 1].relation
    }
}
