//! Piecewise-stationary Gaussian bandit: world catalog, change schedule,
//! reward sampling, and the catalog's Kripke encoding.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kripke::{FrameConditions, KripkeModel, Relation};
use crate::logic::Formula;
use crate::rng::{stream, Purpose};
use crate::WorldId;

pub const MEAN_LOW: f64 = 0.1;
pub const MEAN_HIGH: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("need at least {min} {what}, got {got}")]
    TooFew {
        what: &'static str,
        min: usize,
        got: usize,
    },
    #[error("change points must be strictly increasing and at least {gap} apart")]
    BadSchedule { gap: usize },
    #[error("change point refers to unknown world {0}")]
    UnknownWorld(WorldId),
    #[error("unknown change rule `{0}`")]
    UnknownRule(String),
}

/// How worlds after the first are derived from world 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangeRule {
    /// Fresh uniform means, redrawn until the optimal arm moves.
    FreshDraw,
    /// World 0's means with the arm ranking reversed (best becomes worst);
    /// further worlds are random permutations.
    Reverse,
    /// Random permutations of world 0's means with a different optimal arm.
    Shuffle,
}

impl FromStr for ChangeRule {
    type Err = EnvError;
    fn from_str(s: &str) -> Result<Self, EnvError> {
        match s {
            "fresh" => Ok(ChangeRule::FreshDraw),
            "reverse" => Ok(ChangeRule::Reverse),
            "shuffle" => Ok(ChangeRule::Shuffle),
            other => Err(EnvError::UnknownRule(other.into())),
        }
    }
}

impl fmt::Display for ChangeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChangeRule::FreshDraw => "fresh",
            ChangeRule::Reverse => "reverse",
            ChangeRule::Shuffle => "shuffle",
        })
    }
}

/// `H × A` matrix of arm means, one row per world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldCatalog {
    means: Vec<Vec<f64>>,
}

impl WorldCatalog {
    /// Every row must have the same nonzero length and there must be at least one row.
    pub fn from_means(means: Vec<Vec<f64>>) -> Result<Self, EnvError> {
        let arms = means.first().map_or(0, Vec::len);
        if arms == 0 || means.iter().any(|r| r.len() != arms) {
            return Err(EnvError::TooFew {
                what: "arms",
                min: 1,
                got: arms,
            });
        }
        Ok(WorldCatalog { means })
    }

    pub fn n_worlds(&self) -> usize {
        self.means.len()
    }

    pub fn n_arms(&self) -> usize {
        self.means[0].len()
    }

    pub fn mean(&self, world: WorldId, arm: usize) -> f64 {
        self.means[world][arm]
    }

    pub fn means(&self, world: WorldId) -> &[f64] {
        &self.means[world]
    }

    pub fn best_mean(&self, world: WorldId) -> f64 {
        self.means[world]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// All arms attaining the maximum mean of `world`.
    pub fn optimal_arms(&self, world: WorldId) -> Vec<usize> {
        let best = self.best_mean(world);
        (0..self.n_arms())
            .filter(|&a| self.means[world][a] == best)
            .collect()
    }

    pub fn is_optimal(&self, world: WorldId, arm: usize) -> bool {
        self.means[world][arm] == self.best_mean(world)
    }
}

fn first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Draw a catalog: world 0 uniform in `[0.1, 1.2]`, later worlds per `rule`,
/// each with an optimal arm different from world 0's and a distinct mean vector.
pub fn make_catalog(
    seed: u64,
    arms: usize,
    worlds: usize,
    rule: ChangeRule,
) -> Result<WorldCatalog, EnvError> {
    if arms < 2 {
        return Err(EnvError::TooFew {
            what: "arms",
            min: 2,
            got: arms,
        });
    }
    if worlds < 2 {
        return Err(EnvError::TooFew {
            what: "worlds",
            min: 2,
            got: worlds,
        });
    }
    let mut rng = stream(seed, 0, 0, Purpose::Catalog);
    let base: Vec<f64> = (0..arms)
        .map(|_| rng.random_range(MEAN_LOW..=MEAN_HIGH))
        .collect();
    let base_best = first_argmax(&base);
    let mut means = vec![base.clone()];
    while means.len() < worlds {
        let candidate: Vec<f64> = match (rule, means.len()) {
            (ChangeRule::FreshDraw, _) => (0..arms)
                .map(|_| rng.random_range(MEAN_LOW..=MEAN_HIGH))
                .collect(),
            (ChangeRule::Reverse, 1) => {
                let mut order: Vec<usize> = (0..arms).collect();
                order.sort_by(|&a, &b| base[b].total_cmp(&base[a]).then(a.cmp(&b)));
                let mut out = vec![0.0; arms];
                for (rank, &arm) in order.iter().enumerate() {
                    out[arm] = base[order[arms - 1 - rank]];
                }
                out
            }
            _ => {
                let mut out = base.clone();
                out.shuffle(&mut rng);
                out
            }
        };
        let distinct = means.iter().all(|m| *m != candidate);
        if first_argmax(&candidate) != base_best && distinct {
            means.push(candidate);
        }
    }
    Ok(WorldCatalog { means })
}

/// Regime switches: world 0 until the first change point, then the listed worlds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    changes: Vec<(usize, WorldId)>,
    min_gap: usize,
}

impl Schedule {
    pub fn new(changes: Vec<(usize, WorldId)>, min_gap: usize) -> Result<Self, EnvError> {
        for pair in changes.windows(2) {
            if pair[1].0 <= pair[0].0 || pair[1].0 - pair[0].0 < min_gap {
                return Err(EnvError::BadSchedule { gap: min_gap });
            }
        }
        Ok(Schedule { changes, min_gap })
    }

    /// No change at all.
    pub fn stationary() -> Self {
        Schedule {
            changes: Vec::new(),
            min_gap: 0,
        }
    }

    pub fn validate_for(&self, catalog: &WorldCatalog) -> Result<(), EnvError> {
        self.validate_for_worlds(catalog.n_worlds())
    }

    pub fn validate_for_worlds(&self, worlds: usize) -> Result<(), EnvError> {
        match self.changes.iter().find(|c| c.1 >= worlds) {
            Some(&(_, w)) => Err(EnvError::UnknownWorld(w)),
            None => Ok(()),
        }
    }

    pub fn changes(&self) -> &[(usize, WorldId)] {
        &self.changes
    }

    pub fn min_gap(&self) -> usize {
        self.min_gap
    }

    pub fn first_change(&self) -> Option<(usize, WorldId)> {
        self.changes.first().copied()
    }

    /// The world of the last change point `<= t`.
    pub fn world_at(&self, t: usize) -> WorldId {
        let idx = self.changes.partition_point(|&(tv, _)| tv <= t);
        if idx == 0 {
            0
        } else {
            self.changes[idx - 1].1
        }
    }
}

/// Draws `N(μ, σ²)` rewards from a caller-owned stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardSampler {
    pub sigma: f64,
}

impl RewardSampler {
    pub fn sample<R: Rng + ?Sized>(
        &self,
        catalog: &WorldCatalog,
        world: WorldId,
        arm: usize,
        rng: &mut R,
    ) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        catalog.mean(world, arm) + self.sigma * z
    }
}

/// Atom `p_{a}_{h}`: arm `a` has world `h`'s mean.
pub fn mean_atom(arm: usize, world: WorldId) -> String {
    format!("p_{arm}_{world}")
}

/// Atom `b_{a}`: arm `a` is optimal in the current world.
pub fn best_atom(arm: usize) -> String {
    format!("b_{arm}")
}

/// The catalog as a Kripke model with identity formulas per world.
#[derive(Clone, Debug)]
pub struct BanditLogic {
    pub model: KripkeModel,
    /// `φ_h = ∧_a p_{a,h}`.
    pub phi: Vec<Formula>,
}

impl BanditLogic {
    /// `ψ_h(a) = φ_h → b_a`: in world h, playing `a` is optimal.
    pub fn psi(&self, world: WorldId, arm: usize) -> Formula {
        Formula::implies(self.phi[world].clone(), Formula::atom(best_atom(arm)))
    }
}

/// One world per catalog row. Each agent starts reflexive with every world
/// pointing at world 0, so φ₀ is known initially and nothing is known after a
/// switch until the agent revises.
pub fn build_logic(catalog: &WorldCatalog, n_agents: usize, frame: FrameConditions) -> BanditLogic {
    let h = catalog.n_worlds();
    let a = catalog.n_arms();
    let labels: Vec<String> = (0..h).map(|w| format!("w{w}")).collect();
    let mut atoms: Vec<String> = (0..h)
        .flat_map(|w| (0..a).map(move |arm| mean_atom(arm, w)))
        .collect();
    atoms.extend((0..a).map(best_atom));
    let valuation: Vec<Vec<String>> = (0..h)
        .map(|w| {
            let mut v: Vec<String> = (0..a).map(|arm| mean_atom(arm, w)).collect();
            v.extend(catalog.optimal_arms(w).into_iter().map(best_atom));
            v
        })
        .collect();
    let mut model = KripkeModel::new(labels, atoms, valuation, n_agents, frame)
        .expect("catalog atoms are unique");
    let mut initial = Relation::identity(h);
    for w in 0..h {
        initial.insert(w, 0);
    }
    for agent in 1..=n_agents {
        // The initial relation is only reflexive; stronger frames keep identity.
        if crate::kripke::check_frame(&initial, frame) {
            model
                .set_relation(agent, initial.clone())
                .expect("checked above");
        }
    }
    let phi = (0..h)
        .map(|w| Formula::conjunction((0..a).map(|arm| Formula::atom(mean_atom(arm, w)))))
        .collect();
    BanditLogic { model, phi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Structure;
    use crate::trace::Trace;

    #[test]
    fn catalog_ranges_and_reordering() {
        for rule in [
            ChangeRule::FreshDraw,
            ChangeRule::Reverse,
            ChangeRule::Shuffle,
        ] {
            let c = make_catalog(11, 16, 3, rule).unwrap();
            for w in 0..3 {
                assert!(c
                    .means(w)
                    .iter()
                    .all(|m| (MEAN_LOW..=MEAN_HIGH).contains(m)));
            }
            assert_ne!(first_argmax(c.means(1)), first_argmax(c.means(0)));
            assert_eq!(c, make_catalog(11, 16, 3, rule).unwrap());
        }
    }

    #[test]
    fn reverse_swaps_best_and_worst() {
        let c = make_catalog(5, 8, 2, ChangeRule::Reverse).unwrap();
        let best0 = first_argmax(c.means(0));
        let worst0 = (0..8)
            .min_by(|&a, &b| c.mean(0, a).total_cmp(&c.mean(0, b)))
            .unwrap();
        assert_eq!(c.mean(1, best0), c.mean(0, worst0));
        assert_eq!(c.optimal_arms(1), vec![worst0]);
    }

    #[test]
    fn optimal_arms_with_tie() {
        let c = WorldCatalog::from_means(vec![vec![0.2, 0.9, 0.9], vec![0.5, 0.1, 0.1]]).unwrap();
        assert_eq!(c.optimal_arms(0), vec![1, 2]);
        assert_eq!(c.optimal_arms(1), vec![0]);
    }

    #[test]
    fn schedule_lookup() {
        let s = Schedule::new(vec![(10, 1), (30, 2)], 20).unwrap();
        assert_eq!(s.world_at(0), 0);
        assert_eq!(s.world_at(9), 0);
        assert_eq!(s.world_at(10), 1);
        assert_eq!(s.world_at(30), 2);
        assert!(Schedule::new(vec![(10, 1), (20, 2)], 20).is_err());
    }

    #[test]
    fn noiseless_sampler() {
        let c = make_catalog(3, 4, 2, ChangeRule::FreshDraw).unwrap();
        let mut rng = stream(1, 0, 0, Purpose::Reward);
        let y = RewardSampler { sigma: 1e-9 }.sample(&c, 1, 2, &mut rng);
        assert!((y - c.mean(1, 2)).abs() < 1e-6);
    }

    #[test]
    fn atoms_and_formulas() {
        let c = make_catalog(2, 16, 4, ChangeRule::FreshDraw).unwrap();
        let logic = build_logic(&c, 1, FrameConditions::REFLEXIVE);
        assert_eq!(logic.model.atoms().len(), 64 + 16);
        let mut trace = Trace::new(logic.model.clone());
        for w in 0..4 {
            trace.push_state(w, vec![true]).unwrap();
        }
        for h in 0..4 {
            for w in 0..4 {
                let c = crate::logic::compile(&trace, &logic.phi[h]).unwrap();
                assert_eq!(c.eval_with_world(&trace, w, w).unwrap(), h == w);
            }
            let best = c.optimal_arms(h)[0];
            let worse = (0..16).find(|&a| !c.is_optimal(h, a)).unwrap();
            assert!(crate::logic::eval(&trace, h, &logic.psi(h, best)).unwrap());
            assert!(!crate::logic::eval(&trace, h, &logic.psi(h, worse)).unwrap());
        }
        assert_eq!(trace.len(), 4);
    }
}
