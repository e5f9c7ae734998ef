//! Discounted UCB, the five learning modes and best-policy identification.
//!
//! An [`Agent`] owns its statistics, residual window, evidence ledger and
//! accessibility relation. The simulation loop in [`crate::sim`] drives it
//! once per step in agent-id order:
//!
//! 1. [`Agent::begin_step`] with the broadcasts delivered this step,
//! 2. [`Agent::select_arm`],
//! 3. [`Agent::observe`] with the sampled reward,
//! 4. for cooperative modes, consensus mixing of [`Agent::stats_mut`] and,
//!    for Cooperative-Kripke, [`Agent::absorb_pooled`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::WorldCatalog;
use crate::kripke::{revise, BitSet, FrameConditions, Relation};
use crate::sensing::{
    residual, resolve_conflicts, BroadcastMsg, EvidenceLedger, EvidenceStep, ResidualWindow,
};
use crate::{AgentId, WorldId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("unknown {0} `{1}`")]
    UnknownOption(&'static str, String),
    #[error("need at least two candidate policies")]
    TooFewPolicies,
}

/// Exploration constant of the Gaussian UCB index.
pub const DEFAULT_EXPLORATION: f64 = 4.0;

/// Per-arm (possibly discounted) counts and reward sums.
#[derive(Clone, Debug, PartialEq)]
pub struct UcbStats {
    counts: Vec<f64>,
    sums: Vec<f64>,
    gamma: f64,
    steps: u64,
    exploration: f64,
}

impl UcbStats {
    pub fn new(arms: usize, gamma: f64) -> Self {
        assert!(
            gamma > 0.0 && gamma <= 1.0,
            "forgetting rate must be in (0, 1]"
        );
        UcbStats {
            counts: vec![0.0; arms],
            sums: vec![0.0; arms],
            gamma,
            steps: 0,
            exploration: DEFAULT_EXPLORATION,
        }
    }

    pub fn with_exploration(mut self, c: f64) -> Self {
        assert!(c > 0.0, "exploration constant must be positive");
        self.exploration = c;
        self
    }

    pub fn exploration(&self) -> f64 {
        self.exploration
    }

    /// `n0` virtual pulls of each arm at `means`.
    pub fn seeded(means: &[f64], n0: f64, gamma: f64) -> Self {
        let mut s = UcbStats::new(means.len(), gamma);
        s.reseed(means, n0);
        s
    }

    pub fn reseed(&mut self, means: &[f64], n0: f64) {
        for (a, &m) in means.iter().enumerate() {
            self.counts[a] = n0;
            self.sums[a] = n0 * m;
        }
        self.steps = 0;
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, arm: usize) -> f64 {
        self.counts[arm]
    }

    pub fn sum(&self, arm: usize) -> f64 {
        self.sums[arm]
    }

    /// Steps since creation or the last reseed.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0.0).then(|| self.sums[arm] / self.counts[arm])
    }

    /// Scale every arm by γ, then add the pull.
    pub fn discounted_update(&mut self, arm: usize, reward: f64) {
        for (c, s) in self.counts.iter_mut().zip(self.sums.iter_mut()) {
            *c *= self.gamma;
            *s *= self.gamma;
        }
        self.counts[arm] += 1.0;
        self.sums[arm] += reward;
        self.steps += 1;
    }

    /// Counts and sums as one flat vector, for consensus mixing.
    pub fn to_vec(&self) -> Vec<f64> {
        self.counts.iter().chain(&self.sums).copied().collect()
    }

    pub fn set_from_slice(&mut self, v: &[f64]) {
        let a = self.arms();
        self.counts.copy_from_slice(&v[..a]);
        self.sums.copy_from_slice(&v[a..2 * a]);
    }

    /// Counts and sums multiplied by `factor` (the network-size scaling).
    pub fn scaled(&self, factor: f64) -> UcbStats {
        UcbStats {
            counts: self.counts.iter().map(|c| c * factor).collect(),
            sums: self.sums.iter().map(|s| s * factor).collect(),
            gamma: self.gamma,
            steps: self.steps,
            exploration: self.exploration,
        }
    }

    /// Arm with the largest [`ucb_index`]; ties go to the lowest arm.
    pub fn argmax(&self, t: u64, sigma: f64, scale: f64) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for a in 0..self.arms() {
            let v = index_of(
                self.sums[a] * scale,
                self.counts[a] * scale,
                t,
                sigma,
                self.exploration,
            );
            if v > best_v {
                best = a;
                best_v = v;
            }
        }
        best
    }
}

#[inline]
fn index_of(sum: f64, count: f64, t: u64, sigma: f64, c: f64) -> f64 {
    if count <= 0.0 {
        return f64::INFINITY;
    }
    sum / count + sigma * (c * ((t + 1) as f64).ln() / count).sqrt()
}

/// `mean + σ·sqrt(c·ln(t+1)/count)`, or `+∞` for an unpulled arm. `c` is
/// the statistics' exploration constant, [`DEFAULT_EXPLORATION`] unless set.
pub fn ucb_index(stats: &UcbStats, arm: usize, t: u64, sigma: f64) -> f64 {
    index_of(
        stats.sums[arm],
        stats.counts[arm],
        t,
        sigma,
        stats.exploration,
    )
}

/// Which objective the identifier's means refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Cost,
    Reward,
}

/// Confidence-interval separation test over a finite policy set.
#[derive(Clone, Debug)]
pub struct ActionIdentifier {
    sums: Vec<f64>,
    counts: Vec<f64>,
    sigma: f64,
    eta_act: f64,
    orientation: Orientation,
}

/// Result of [`ActionIdentifier::identify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Identification {
    pub stop: bool,
    pub best: usize,
}

impl ActionIdentifier {
    pub fn new(
        policies: usize,
        sigma: f64,
        eta_act: f64,
        orientation: Orientation,
    ) -> Result<Self, PolicyError> {
        if policies < 2 {
            return Err(PolicyError::TooFewPolicies);
        }
        Ok(ActionIdentifier {
            sums: vec![0.0; policies],
            counts: vec![0.0; policies],
            sigma,
            eta_act,
            orientation,
        })
    }

    pub fn record(&mut self, policy: usize, outcome: f64) {
        self.record_many(policy, outcome, 1.0);
    }

    /// `weight` samples of value `outcome` (virtual rollouts).
    pub fn record_many(&mut self, policy: usize, outcome: f64, weight: f64) {
        self.sums[policy] += outcome * weight;
        self.counts[policy] += weight;
    }

    pub fn mean(&self, policy: usize) -> f64 {
        if self.counts[policy] > 0.0 {
            self.sums[policy] / self.counts[policy]
        } else {
            0.0
        }
    }

    /// `ζ = σ·sqrt(2·ln(2|Π|/η^act)/samples)`; infinite without samples.
    pub fn radius(&self, samples: f64) -> f64 {
        if samples <= 0.0 {
            return f64::INFINITY;
        }
        self.sigma * (2.0 * (2.0 * self.counts.len() as f64 / self.eta_act).ln() / samples).sqrt()
    }

    /// Best empirical policy, and whether its worst plausible value beats every
    /// other policy's best plausible value.
    pub fn identify(&self) -> Identification {
        let sign = match self.orientation {
            Orientation::Cost => 1.0,
            Orientation::Reward => -1.0,
        };
        // Work in cost units: smaller is better.
        let cost = |p: usize| sign * self.mean(p);
        let best = (0..self.counts.len())
            .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(a.cmp(&b)))
            .expect("at least two policies");
        let worst_best = cost(best) + self.radius(self.counts[best]);
        let stop = (0..self.counts.len())
            .filter(|&p| p != best)
            .all(|p| worst_best < cost(p) - self.radius(self.counts[p]));
        Identification { stop, best }
    }

    /// Candidate to sample next while not separated: the policy with the best
    /// optimistic value.
    pub fn most_promising(&self) -> usize {
        let sign = match self.orientation {
            Orientation::Cost => 1.0,
            Orientation::Reward => -1.0,
        };
        (0..self.counts.len())
            .min_by(|&a, &b| {
                let la = sign * self.mean(a) - self.radius(self.counts[a]);
                let lb = sign * self.mean(b) - self.radius(self.counts[b]);
                la.total_cmp(&lb).then(a.cmp(&b))
            })
            .expect("at least two policies")
    }
}

/// The five learning modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    IndependentDucb,
    CooperativeDucb,
    LightCoopKripke,
    LightCoopKripkeFast,
    CooperativeKripke,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::IndependentDucb,
        Mode::CooperativeDucb,
        Mode::LightCoopKripke,
        Mode::LightCoopKripkeFast,
        Mode::CooperativeKripke,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::IndependentDucb => "independent_ducb",
            Mode::CooperativeDucb => "cooperative_ducb",
            Mode::LightCoopKripke => "lightcoop_kripke",
            Mode::LightCoopKripkeFast => "lightcoop_kripke_fast",
            Mode::CooperativeKripke => "cooperative_kripke",
        }
    }

    pub fn is_kripke(self) -> bool {
        matches!(
            self,
            Mode::LightCoopKripke | Mode::LightCoopKripkeFast | Mode::CooperativeKripke
        )
    }

    /// Mixes action statistics by consensus every step.
    pub fn shares_stats(self) -> bool {
        matches!(self, Mode::CooperativeDucb | Mode::CooperativeKripke)
    }

    /// Commits without waiting for the flood to cover the network.
    pub fn commits_immediately(self) -> bool {
        matches!(self, Mode::LightCoopKripkeFast | Mode::CooperativeKripke)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = PolicyError;
    fn from_str(s: &str) -> Result<Self, PolicyError> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| PolicyError::UnknownMode(s.into()))
    }
}

/// Arm rule while gathering evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvidenceArmRule {
    RoundRobin,
    /// Arm with the largest mean gap between the two leading hypotheses.
    MostDiscriminative,
}

impl FromStr for EvidenceArmRule {
    type Err = PolicyError;
    fn from_str(s: &str) -> Result<Self, PolicyError> {
        match s {
            "round_robin" => Ok(EvidenceArmRule::RoundRobin),
            "most_discriminative" => Ok(EvidenceArmRule::MostDiscriminative),
            other => Err(PolicyError::UnknownOption(
                "evidence arm rule",
                other.into(),
            )),
        }
    }
}

/// Arm rule once committed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ActionLayer {
    Ucb,
    /// Confidence-interval identification with level η^act.
    Identify {
        eta_act: f64,
    },
}

/// Everything an agent needs to know about its mode and thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub mode: Mode,
    pub n_agents: usize,
    pub sigma: f64,
    /// Forgetting rate of the DUCB baselines.
    pub gamma: f64,
    /// Forgetting rate of the Kripke modes' learners.
    pub kripke_gamma: f64,
    /// Exploration constant `c` of the UCB index.
    pub ucb_c: f64,
    pub eps: f64,
    pub window: usize,
    pub e_th: usize,
    pub eta_epi: f64,
    pub n0: f64,
    pub l_comm: usize,
    pub evidence_arms: EvidenceArmRule,
    pub action_layer: ActionLayer,
    /// Drop the currently believed world from the hypothesis set while gathering.
    pub exclude_believed: bool,
    pub frame: FrameConditions,
}

/// Epistemic phase of an agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentMode {
    Normal,
    EvidenceGathering { since: usize },
    Committed { world: WorldId, since: usize },
}

/// Per-step view of the environment an agent may consult.
pub struct StepContext<'a> {
    pub t: usize,
    pub catalog: &'a WorldCatalog,
    /// True world, used only to place the agent's revised row.
    pub actual: WorldId,
}

/// What an agent did this step, for the trace.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub detected: bool,
    pub broadcast: Option<BroadcastMsg>,
    pub committed: Option<WorldId>,
}

impl StepReport {
    pub fn merge(&mut self, other: StepReport) {
        self.detected |= other.detected;
        if other.broadcast.is_some() {
            self.broadcast = other.broadcast;
        }
        if other.committed.is_some() {
            self.committed = other.committed;
        }
    }
}

/// One learner with its epistemic layer.
#[derive(Clone, Debug)]
pub struct Agent {
    id: AgentId,
    params: PolicyParams,
    mode: AgentMode,
    believed: WorldId,
    stats: UcbStats,
    identifier: Option<ActionIdentifier>,
    window: ResidualWindow,
    ledger: Option<EvidenceLedger>,
    rr_next: usize,
    /// Stopped on own evidence, waiting for the commit deadline.
    awaiting: bool,
    received: Vec<BroadcastMsg>,
    deadline: Option<usize>,
    /// Score and timestamp backing the current commitment.
    commit_score: f64,
    commit_stamp: usize,
    relation: Relation,
    relation_dirty: bool,
}

impl Agent {
    /// Kripke agents start committed to world 0 with seeded statistics;
    /// baselines start from empty statistics.
    pub fn new(
        id: AgentId,
        params: PolicyParams,
        catalog: &WorldCatalog,
        relation: Relation,
    ) -> Self {
        let arms = catalog.n_arms();
        let window =
            ResidualWindow::new(params.eps, params.window, params.e_th).expect("validated window");
        let kripke = params.mode.is_kripke();
        let gamma = if kripke {
            params.kripke_gamma
        } else {
            params.gamma
        };
        let mut agent = Agent {
            id,
            mode: if kripke {
                AgentMode::Committed { world: 0, since: 0 }
            } else {
                AgentMode::Normal
            },
            believed: 0,
            stats: UcbStats::new(arms, gamma).with_exploration(params.ucb_c),
            identifier: None,
            window,
            ledger: None,
            rr_next: 0,
            awaiting: false,
            received: Vec::new(),
            deadline: None,
            commit_score: f64::NEG_INFINITY,
            commit_stamp: 0,
            relation,
            relation_dirty: false,
            params,
        };
        if kripke {
            agent.seed_learner(catalog, 0);
        }
        agent
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn mode(&self) -> AgentMode {
        self.mode
    }

    pub fn believed(&self) -> WorldId {
        self.believed
    }

    pub fn stats(&self) -> &UcbStats {
        &self.stats
    }

    /// Consensus state of cooperative modes.
    pub fn stats_mut(&mut self) -> &mut UcbStats {
        &mut self.stats
    }

    pub fn relation(&self) -> &Relation {
        &self.relation
    }

    /// Relation changed since the last call.
    pub fn take_relation_change(&mut self) -> Option<&Relation> {
        if std::mem::take(&mut self.relation_dirty) {
            Some(&self.relation)
        } else {
            None
        }
    }

    pub fn is_gathering(&self) -> bool {
        matches!(self.mode, AgentMode::EvidenceGathering { .. })
    }

    /// Evidence ledger while gathering.
    pub fn ledger(&self) -> Option<&EvidenceLedger> {
        self.ledger.as_ref()
    }

    fn seed_learner(&mut self, catalog: &WorldCatalog, world: WorldId) {
        // Cooperative statistics hold network averages: n·z is what the
        // index sees, so seed z with n0/n.
        let scale = if self.params.mode.shares_stats() {
            self.params.n_agents as f64
        } else {
            1.0
        };
        self.stats
            .reseed(catalog.means(world), self.params.n0 / scale);
        if let ActionLayer::Identify { eta_act } = self.params.action_layer {
            let mut ident = ActionIdentifier::new(
                catalog.n_arms(),
                self.params.sigma,
                eta_act,
                Orientation::Reward,
            )
            .expect("at least two arms");
            for (a, &m) in catalog.means(world).iter().enumerate() {
                ident.record_many(a, m, self.params.n0);
            }
            self.identifier = Some(ident);
        }
    }

    fn set_row(&mut self, target: &BitSet, actual: WorldId) {
        let next =
            revise(&self.relation, target, actual, self.params.frame).expect("target is nonempty");
        if next != self.relation {
            self.relation = next;
            self.relation_dirty = true;
        }
    }

    /// Revise to `world`; statistics are re-seeded unless it is already the
    /// believed world.
    fn commit(
        &mut self,
        ctx: &StepContext<'_>,
        world: WorldId,
        score: f64,
        stamp: usize,
    ) -> WorldId {
        if world != self.believed {
            self.seed_learner(ctx.catalog, world);
            self.believed = world;
        }
        self.mode = AgentMode::Committed {
            world,
            since: ctx.t,
        };
        self.ledger = None;
        self.awaiting = false;
        self.window.clear();
        self.received.clear();
        self.deadline = None;
        self.commit_score = score;
        self.commit_stamp = stamp;
        let n = self.relation.n_worlds();
        self.set_row(&BitSet::from_iter(n, [world]), ctx.actual);
        world
    }

    /// Score a received broadcast has to beat to override this agent.
    fn local_score(&self, t: usize) -> f64 {
        if let Some(l) = &self.ledger {
            return l.best().1;
        }
        if t <= self.commit_stamp + self.params.l_comm {
            self.commit_score
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Handle the broadcasts delivered this step and any due commit.
    pub fn begin_step(&mut self, ctx: &StepContext<'_>, inbox: &[BroadcastMsg]) -> StepReport {
        let mut report = StepReport::default();
        if !self.params.mode.is_kripke() {
            return report;
        }
        for msg in inbox {
            if self.params.mode.commits_immediately() {
                if msg.score > self.local_score(ctx.t) {
                    report.committed =
                        Some(self.commit(ctx, msg.hypothesis, msg.score, msg.timestamp));
                }
            } else {
                self.received.push(msg.clone());
                if self.deadline.is_none() {
                    self.deadline = Some(msg.timestamp + self.params.l_comm);
                }
            }
        }
        if matches!(self.deadline, Some(d) if ctx.t >= d) {
            let winner = resolve_conflicts(&self.received)
                .cloned()
                .expect("deadline implies a broadcast");
            report.committed =
                Some(self.commit(ctx, winner.hypothesis, winner.score, winner.timestamp));
        }
        report
    }

    pub fn select_arm(&mut self, catalog: &WorldCatalog, t: usize) -> usize {
        if let Some(ledger) = &self.ledger {
            return match self.params.evidence_arms {
                EvidenceArmRule::RoundRobin => {
                    let a = self.rr_next;
                    self.rr_next = (self.rr_next + 1) % self.stats.arms();
                    a
                }
                EvidenceArmRule::MostDiscriminative => discriminative_arm(ledger, catalog),
            };
        }
        if let Some(ident) = &self.identifier {
            let id = ident.identify();
            return if id.stop {
                id.best
            } else {
                ident.most_promising()
            };
        }
        let scale = if self.params.mode.shares_stats() {
            self.params.n_agents as f64
        } else {
            1.0
        };
        let clock = if self.params.mode.is_kripke() {
            self.stats.steps()
        } else {
            t as u64
        };
        self.stats.argmax(clock, self.params.sigma, scale)
    }

    /// Learner update, residual check and (for the light modes) local evidence.
    pub fn observe(&mut self, ctx: &StepContext<'_>, arm: usize, y: f64) -> StepReport {
        let mut report = StepReport::default();
        self.stats.discounted_update(arm, y);
        if let Some(ident) = &mut self.identifier {
            ident.record(arm, y);
        }
        if !self.params.mode.is_kripke() {
            return report;
        }
        if self.ledger.is_none() {
            self.window
                .update(residual(y, ctx.catalog.mean(self.believed, arm)));
            if self.window.detect() {
                self.enter_gathering(ctx);
                report.detected = true;
            }
        } else if self.params.mode != Mode::CooperativeKripke && !self.awaiting {
            if let Some(ledger) = &mut self.ledger {
                ledger.update(arm, y, ctx.catalog, self.params.sigma);
            }
            report.merge(self.try_stop(ctx));
        }
        report
    }

    /// Pooled evidence over every catalog world (Cooperative-Kripke only).
    pub fn absorb_pooled(&mut self, ctx: &StepContext<'_>, pooled: &EvidenceStep) -> StepReport {
        let Some(ledger) = self.ledger.as_mut().filter(|_| !self.awaiting) else {
            return StepReport::default();
        };
        let hyps = ledger.hypotheses().to_vec();
        let mut step = EvidenceStep::zeros(hyps.len());
        let k = hyps.len();
        let full = ctx.catalog.n_worlds();
        for a in 0..k {
            for b in 0..k {
                step.as_mut_slice()[a * k + b] = pooled.as_slice()[hyps[a] * full + hyps[b]];
            }
        }
        ledger.add(&step);
        self.try_stop(ctx)
    }

    fn enter_gathering(&mut self, ctx: &StepContext<'_>) {
        let n = ctx.catalog.n_worlds();
        let mut hyps: Vec<WorldId> = (0..n).collect();
        if self.params.exclude_believed && n > 2 {
            hyps.retain(|&w| w != self.believed);
        }
        let ledger = EvidenceLedger::new(hyps.clone(), ctx.t, self.params.eta_epi)
            .expect("catalog has two worlds");
        self.ledger = Some(ledger);
        self.mode = AgentMode::EvidenceGathering { since: ctx.t };
        self.rr_next = ctx.t % self.stats.arms();
        self.window.clear();
        self.set_row(&BitSet::from_iter(n, hyps), ctx.actual);
    }

    fn try_stop(&mut self, ctx: &StepContext<'_>) -> StepReport {
        let mut report = StepReport::default();
        let Some(ledger) = &self.ledger else {
            return report;
        };
        if self.awaiting || !ledger.should_stop() {
            return report;
        }
        let (world, score) = ledger.best();
        let msg = BroadcastMsg {
            sender: self.id,
            timestamp: ctx.t,
            hypothesis: world,
            score,
            ttl: self.params.l_comm,
        };
        if self.params.mode.commits_immediately() {
            report.committed = Some(self.commit(ctx, world, score, ctx.t));
            report.broadcast = Some(msg);
        } else {
            // Keep sampling until the deadline; informed agents add their
            // own result without re-flooding it.
            self.awaiting = true;
            if self.deadline.is_none() {
                self.deadline = Some(ctx.t + self.params.l_comm);
                report.broadcast = Some(msg.clone());
            }
            self.received.push(msg);
        }
        report
    }

    /// Per-step evidence of one observation over every catalog world, as a
    /// flat `H×H` matrix.
    pub fn evidence_increment(
        catalog: &WorldCatalog,
        arm: usize,
        y: f64,
        sigma: f64,
    ) -> EvidenceStep {
        let h = catalog.n_worlds();
        let mut step = EvidenceStep::zeros(h);
        for a in 0..h {
            for b in 0..h {
                if a != b {
                    let v = ((y - catalog.mean(b, arm)).powi(2)
                        - (y - catalog.mean(a, arm)).powi(2))
                        / (2.0 * sigma * sigma);
                    step.as_mut_slice()[a * h + b] = v;
                }
            }
        }
        step
    }
}

/// Arm separating the two leading hypotheses the most.
fn discriminative_arm(ledger: &EvidenceLedger, catalog: &WorldCatalog) -> usize {
    let hyps = ledger.hypotheses();
    let k = hyps.len();
    let score = |a: usize| {
        (0..k)
            .filter(|&b| b != a)
            .map(|b| ledger.get(a, b))
            .fold(f64::INFINITY, f64::min)
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| score(y).total_cmp(&score(x)).then(x.cmp(&y)));
    let (h1, h2) = (hyps[order[0]], hyps[order[1]]);
    (0..catalog.n_arms())
        .max_by(|&a, &b| {
            let ga = (catalog.mean(h1, a) - catalog.mean(h2, a)).abs();
            let gb = (catalog.mean(h1, b) - catalog.mean(h2, b)).abs();
            ga.total_cmp(&gb).then(b.cmp(&a))
        })
        .expect("at least one arm")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ucb_index_examples() {
        let mut s = UcbStats::new(3, 1.0);
        assert_eq!(ucb_index(&s, 0, 0, 1.0), f64::INFINITY);
        s.discounted_update(1, 0.5);
        s.discounted_update(1, 0.7);
        let expected = 0.6 + (4.0 * 10f64.ln() / 2.0).sqrt();
        assert!((ucb_index(&s, 1, 9, 1.0) - expected).abs() < 1e-12);
        assert_eq!(s.argmax(9, 1.0, 1.0), 0);
    }

    #[test]
    fn discounting_scales_every_arm() {
        let mut s = UcbStats::new(2, 0.5);
        s.discounted_update(0, 1.0);
        s.discounted_update(1, 2.0);
        assert_eq!(s.count(0), 0.5);
        assert_eq!(s.sum(0), 0.5);
        assert_eq!(s.count(1), 1.0);
        assert_eq!(s.steps(), 2);
        let seeded = UcbStats::seeded(&[0.2, 0.9], 5.0, 1.0);
        assert_eq!(seeded.mean(1), Some(0.9));
        assert_eq!(seeded.count(0), 5.0);
        assert_eq!(seeded.argmax(0, 1.0, 1.0), 1);
    }

    #[test]
    fn identification_separates() {
        let mut id = ActionIdentifier::new(2, 0.1, 0.05, Orientation::Reward).unwrap();
        assert!(!id.identify().stop);
        id.record_many(0, 1.0, 50.0);
        id.record_many(1, 0.2, 50.0);
        assert_eq!(
            id.identify(),
            Identification {
                stop: true,
                best: 0
            }
        );
        let mut cost = ActionIdentifier::new(2, 0.1, 0.05, Orientation::Cost).unwrap();
        cost.record_many(0, 1.0, 50.0);
        cost.record_many(1, 0.2, 50.0);
        assert_eq!(cost.identify().best, 1);
        assert!(ActionIdentifier::new(1, 0.1, 0.05, Orientation::Cost).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("ucb".parse::<Mode>().is_err());
    }
}
