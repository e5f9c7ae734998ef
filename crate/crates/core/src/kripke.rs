//! Kripke structures: worlds, valuations, per-agent accessibility relations,
//! the refine/revise updates and frame-condition checks.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{AgentId, WorldId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KripkeError {
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("unknown world {0}")]
    UnknownWorld(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("duplicate {0} `{1}`")]
    Duplicate(&'static str, String),
    #[error("evidence does not hold in the actual world {0}; revise instead")]
    FalseEvidence(WorldId),
    #[error("refinement leaves world {0} with no accessible world; revise instead")]
    EmptyRefinement(WorldId),
    #[error("revision target is unsatisfiable")]
    UnsatisfiableTarget,
    #[error("relation of agent {0} violates the declared frame conditions")]
    FrameViolation(AgentId),
    #[error("relation size {got} does not match {expected} worlds")]
    SizeMismatch { expected: usize, got: usize },
    #[error("model dump line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

/// Fixed-size set of small integers.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = BitSet::new(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn from_iter(len: usize, items: impl IntoIterator<Item = usize>) -> Self {
        let mut s = BitSet::new(len);
        for i in items {
            s.insert(i);
        }
        s
    }

    pub fn from_predicate(len: usize, pred: impl Fn(usize) -> bool) -> Self {
        BitSet::from_iter(len, (0..len).filter(|&i| pred(i)))
    }

    /// Universe size.
    pub fn capacity(&self) -> usize {
        self.len
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.len {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn difference_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Accessibility relation stored as one bitset per source world.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    rows: Vec<BitSet>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation {
            rows: vec![BitSet::new(n); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Relation::empty(n);
        for w in 0..n {
            r.insert(w, w);
        }
        r
    }

    pub fn complete(n: usize) -> Self {
        Relation {
            rows: vec![BitSet::full(n); n],
        }
    }

    /// Equivalence relation whose classes are the worlds sharing `key(w)`.
    pub fn from_partition<K: Eq>(n: usize, key: impl Fn(WorldId) -> K) -> Self {
        let mut r = Relation::empty(n);
        for a in 0..n {
            for b in 0..n {
                if key(a) == key(b) {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (WorldId, WorldId)>) -> Self {
        let mut r = Relation::empty(n);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    pub fn n_worlds(&self) -> usize {
        self.rows.len()
    }

    pub fn contains(&self, from: WorldId, to: WorldId) -> bool {
        self.rows[from].contains(to)
    }

    pub fn insert(&mut self, from: WorldId, to: WorldId) {
        self.rows[from].insert(to);
    }

    pub fn remove(&mut self, from: WorldId, to: WorldId) {
        self.rows[from].remove(to);
    }

    pub fn row(&self, from: WorldId) -> &BitSet {
        &self.rows[from]
    }

    pub fn set_row(&mut self, from: WorldId, row: BitSet) {
        assert_eq!(row.capacity(), self.n_worlds());
        self.rows[from] = row;
    }

    pub fn pairs(&self) -> impl Iterator<Item = (WorldId, WorldId)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().map(move |b| (a, b)))
    }

    pub fn pair_count(&self) -> usize {
        self.rows.iter().map(BitSet::count).sum()
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.rows
            .iter()
            .zip(&other.rows)
            .all(|(a, b)| a.is_subset(b))
    }
}

/// Structural constraints a relation must satisfy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameConditions {
    pub reflexive: bool,
    pub symmetric: bool,
    pub transitive: bool,
}

impl FrameConditions {
    pub const NONE: FrameConditions = FrameConditions {
        reflexive: false,
        symmetric: false,
        transitive: false,
    };
    pub const REFLEXIVE: FrameConditions = FrameConditions {
        reflexive: true,
        symmetric: false,
        transitive: false,
    };
    pub const S4: FrameConditions = FrameConditions {
        reflexive: true,
        symmetric: false,
        transitive: true,
    };
    pub const S5: FrameConditions = FrameConditions {
        reflexive: true,
        symmetric: true,
        transitive: true,
    };

    /// Parses a comma list such as `reflexive,transitive`; `s5`, `s4` and
    /// `none` are accepted as shorthands.
    pub fn parse(text: &str) -> Option<Self> {
        let mut out = FrameConditions::NONE;
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "reflexive" => out.reflexive = true,
                "symmetric" => out.symmetric = true,
                "transitive" => out.transitive = true,
                "s4" => out = FrameConditions::S4,
                "s5" => out = FrameConditions::S5,
                "none" => {}
                _ => return None,
            }
        }
        Some(out)
    }
}

impl fmt::Display for FrameConditions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [
            (self.reflexive, "reflexive"),
            (self.symmetric, "symmetric"),
            (self.transitive, "transitive"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

/// True iff every declared condition holds. Transitivity is a brute-force
/// triple scan.
pub fn check_frame(rel: &Relation, frame: FrameConditions) -> bool {
    let n = rel.n_worlds();
    if frame.reflexive && !(0..n).all(|w| rel.contains(w, w)) {
        return false;
    }
    if frame.symmetric && !rel.pairs().all(|(a, b)| rel.contains(b, a)) {
        return false;
    }
    if frame.transitive {
        for a in 0..n {
            for b in 0..n {
                if !rel.contains(a, b) {
                    continue;
                }
                for c in 0..n {
                    if rel.contains(b, c) && !rel.contains(a, c) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Shrink the relation with evidence that holds in the actual world.
///
/// Every pair whose endpoints disagree on `evidence` is cut. From sources
/// satisfying the evidence this removes exactly the pairs whose target
/// violates it; sources violating it keep only their violating neighbours,
/// which preserves reflexivity, symmetry and transitivity.
pub fn refine(rel: &Relation, evidence: &BitSet, actual: WorldId) -> Result<Relation, KripkeError> {
    let n = rel.n_worlds();
    if evidence.capacity() != n {
        return Err(KripkeError::SizeMismatch {
            expected: n,
            got: evidence.capacity(),
        });
    }
    if !evidence.contains(actual) {
        return Err(KripkeError::FalseEvidence(actual));
    }
    let mut violating = BitSet::full(n);
    violating.difference_with(evidence);
    let mut out = rel.clone();
    for w in 0..n {
        let keep = if evidence.contains(w) {
            evidence
        } else {
            &violating
        };
        out.rows[w].intersect_with(keep);
        if out.rows[w].is_empty() && !rel.rows[w].is_empty() {
            return Err(KripkeError::EmptyRefinement(w));
        }
    }
    Ok(out)
}

/// Re-wire the actual world's row to exactly `target`.
///
/// Without symmetry or transitivity only that row changes (plus the actual
/// self-loop under reflexivity). Otherwise the target becomes an isolated
/// cluster: its members see exactly the cluster and every other row drops
/// links into it, the smallest repair that keeps the row exact.
pub fn revise(
    rel: &Relation,
    target: &BitSet,
    actual: WorldId,
    frame: FrameConditions,
) -> Result<Relation, KripkeError> {
    let n = rel.n_worlds();
    if target.capacity() != n {
        return Err(KripkeError::SizeMismatch {
            expected: n,
            got: target.capacity(),
        });
    }
    if target.is_empty() {
        return Err(KripkeError::UnsatisfiableTarget);
    }
    let mut row = target.clone();
    if frame.reflexive || frame.symmetric {
        row.insert(actual);
    }
    let mut out = rel.clone();
    if !(frame.symmetric || frame.transitive) {
        out.rows[actual] = row;
        return Ok(out);
    }
    let mut cluster = row.clone();
    cluster.insert(actual);
    for w in 0..n {
        if w == actual {
            out.rows[w] = row.clone();
        } else if cluster.contains(w) {
            out.rows[w] = cluster.clone();
        } else {
            out.rows[w].difference_with(&cluster);
            if frame.reflexive {
                out.rows[w].insert(w);
            }
        }
    }
    Ok(out)
}

/// The epistemic actions of an agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EpistemicAction {
    Refine(BitSet),
    Revise(BitSet),
    Explore,
    Broadcast,
    Hold,
}

/// Apply an epistemic action; `Explore`, `Broadcast` and `Hold` leave the
/// relation unchanged.
pub fn apply(
    action: &EpistemicAction,
    rel: &Relation,
    actual: WorldId,
    frame: FrameConditions,
) -> Result<Relation, KripkeError> {
    match action {
        EpistemicAction::Refine(e) => refine(rel, e, actual),
        EpistemicAction::Revise(t) => revise(rel, t, actual, frame),
        EpistemicAction::Explore | EpistemicAction::Broadcast | EpistemicAction::Hold => {
            Ok(rel.clone())
        }
    }
}

/// Worlds, valuation and one relation per agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KripkeModel {
    labels: Vec<String>,
    atoms: Vec<String>,
    valuation: Vec<BitSet>,
    frame: FrameConditions,
    relations: Vec<Relation>,
    #[serde(skip)]
    atom_index: HashMap<String, usize>,
    #[serde(skip)]
    label_index: HashMap<String, WorldId>,
}

impl KripkeModel {
    /// Every agent starts with the identity relation.
    pub fn new(
        labels: Vec<String>,
        atoms: Vec<String>,
        valuation: Vec<Vec<String>>,
        n_agents: usize,
        frame: FrameConditions,
    ) -> Result<Self, KripkeError> {
        if valuation.len() != labels.len() {
            return Err(KripkeError::SizeMismatch {
                expected: labels.len(),
                got: valuation.len(),
            });
        }
        let mut model = KripkeModel {
            relations: vec![Relation::identity(labels.len()); n_agents],
            labels,
            atoms,
            valuation: Vec::new(),
            frame,
            atom_index: HashMap::new(),
            label_index: HashMap::new(),
        };
        model.rebuild_indices()?;
        let n_atoms = model.atoms.len();
        for names in valuation {
            let mut set = BitSet::new(n_atoms);
            for name in names {
                set.insert(model.atom_id(&name).ok_or(KripkeError::UnknownAtom(name))?);
            }
            model.valuation.push(set);
        }
        Ok(model)
    }

    fn rebuild_indices(&mut self) -> Result<(), KripkeError> {
        self.atom_index.clear();
        self.label_index.clear();
        for (i, a) in self.atoms.iter().enumerate() {
            if a.is_empty() || self.atom_index.insert(a.clone(), i).is_some() {
                return Err(KripkeError::Duplicate("atom", a.clone()));
            }
        }
        for (i, l) in self.labels.iter().enumerate() {
            if self.label_index.insert(l.clone(), i).is_some() {
                return Err(KripkeError::Duplicate("world", l.clone()));
            }
        }
        Ok(())
    }

    /// Restore lookup tables after deserialization.
    pub fn reindex(&mut self) -> Result<(), KripkeError> {
        self.rebuild_indices()
    }

    pub fn n_worlds(&self) -> usize {
        self.labels.len()
    }

    pub fn n_agents(&self) -> usize {
        self.relations.len()
    }

    pub fn frame(&self) -> FrameConditions {
        self.frame
    }

    pub fn label(&self, w: WorldId) -> &str {
        &self.labels[w]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn world(&self, label: &str) -> Option<WorldId> {
        self.label_index.get(label).copied()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn atom_id(&self, name: &str) -> Option<usize> {
        self.atom_index.get(name).copied()
    }

    /// Whether atom `atom` (by id) is true in world `w`.
    pub fn holds(&self, w: WorldId, atom: usize) -> bool {
        self.valuation[w].contains(atom)
    }

    pub fn valuation_of(&self, w: WorldId) -> &BitSet {
        &self.valuation[w]
    }

    /// Worlds where the named atom holds.
    pub fn worlds_where(&self, atom: &str) -> Result<BitSet, KripkeError> {
        let id = self
            .atom_id(atom)
            .ok_or_else(|| KripkeError::UnknownAtom(atom.into()))?;
        Ok(BitSet::from_predicate(self.n_worlds(), |w| {
            self.holds(w, id)
        }))
    }

    pub fn relation(&self, agent: AgentId) -> Result<&Relation, KripkeError> {
        agent
            .checked_sub(1)
            .and_then(|i| self.relations.get(i))
            .ok_or(KripkeError::UnknownAgent(agent))
    }

    /// Install a relation after checking the model's frame conditions.
    pub fn set_relation(&mut self, agent: AgentId, rel: Relation) -> Result<(), KripkeError> {
        if rel.n_worlds() != self.n_worlds() {
            return Err(KripkeError::SizeMismatch {
                expected: self.n_worlds(),
                got: rel.n_worlds(),
            });
        }
        if !check_frame(&rel, self.frame) {
            return Err(KripkeError::FrameViolation(agent));
        }
        let slot = agent
            .checked_sub(1)
            .and_then(|i| self.relations.get_mut(i))
            .ok_or(KripkeError::UnknownAgent(agent))?;
        *slot = rel;
        Ok(())
    }

    pub fn accessible_from(&self, agent: AgentId, w: WorldId) -> Result<Vec<WorldId>, KripkeError> {
        if w >= self.n_worlds() {
            return Err(KripkeError::UnknownWorld(w.to_string()));
        }
        Ok(self.relation(agent)?.row(w).to_vec())
    }

    /// Worlds of `target` closest (fewest differing atoms) to any world of
    /// `prior`: the minimal-change revision target.
    pub fn nearest_in(&self, target: &BitSet, prior: &BitSet) -> BitSet {
        let distance = |a: WorldId, b: WorldId| {
            let mut d = self.valuation[a].clone();
            let mut e = self.valuation[b].clone();
            d.difference_with(&self.valuation[b]);
            e.difference_with(&self.valuation[a]);
            d.count() + e.count()
        };
        let scored: Vec<(WorldId, usize)> = target
            .iter()
            .map(|w| (w, prior.iter().map(|p| distance(w, p)).min().unwrap_or(0)))
            .collect();
        let best = scored.iter().map(|&(_, d)| d).min().unwrap_or(0);
        BitSet::from_iter(
            self.n_worlds(),
            scored
                .into_iter()
                .filter(|&(_, d)| d == best)
                .map(|(w, _)| w),
        )
    }

    /// Text dump: `worlds:` line, one `label: atom,atom` line per world and
    /// one `agent i: from -> to` line per pair.
    pub fn dump(&self) -> String {
        let mut out = format!("worlds: {}\n", self.labels.join(" "));
        out.push_str(&format!("atoms: {}\n", self.atoms.join(" ")));
        for (w, label) in self.labels.iter().enumerate() {
            let names: Vec<&str> = self.valuation[w]
                .iter()
                .map(|a| self.atoms[a].as_str())
                .collect();
            out.push_str(&format!("{label}: {}\n", names.join(",")));
        }
        for (i, rel) in self.relations.iter().enumerate() {
            for (a, b) in rel.pairs() {
                out.push_str(&format!(
                    "agent {}: {} -> {}\n",
                    i + 1,
                    self.labels[a],
                    self.labels[b]
                ));
            }
        }
        out
    }

    /// Inverse of [`KripkeModel::dump`]. Relations are checked against `frame`.
    pub fn parse_dump(text: &str, frame: FrameConditions) -> Result<Self, KripkeError> {
        let err = |line: usize, msg: &str| KripkeError::Dump {
            line,
            msg: msg.into(),
        };
        let mut labels = Vec::new();
        let mut atoms = Vec::new();
        let mut val: Vec<(usize, String, Vec<String>)> = Vec::new();
        let mut pairs: Vec<(usize, AgentId, String, String)> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (head, rest) = line
                .split_once(':')
                .ok_or_else(|| err(no + 1, "missing `:`"))?;
            let rest = rest.trim();
            match head.trim() {
                "worlds" => labels = rest.split_whitespace().map(String::from).collect(),
                "atoms" => atoms = rest.split_whitespace().map(String::from).collect(),
                h if h.starts_with("agent ") => {
                    let id: AgentId = h[6..]
                        .trim()
                        .parse()
                        .map_err(|_| err(no + 1, "bad agent id"))?;
                    let (a, b) = rest
                        .split_once("->")
                        .ok_or_else(|| err(no + 1, "missing `->`"))?;
                    pairs.push((no + 1, id, a.trim().into(), b.trim().into()));
                }
                label => {
                    let names = rest
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect();
                    val.push((no + 1, label.to_string(), names));
                }
            }
        }
        let mut valuation = vec![Vec::new(); labels.len()];
        for (line, label, names) in val {
            let w = labels
                .iter()
                .position(|l| *l == label)
                .ok_or_else(|| err(line, "unknown world"))?;
            valuation[w] = names;
        }
        let n_agents = pairs.iter().map(|p| p.1).max().unwrap_or(0);
        let mut model = KripkeModel::new(labels, atoms, valuation, n_agents, frame)?;
        let mut rels = vec![Relation::empty(model.n_worlds()); n_agents];
        for (line, id, a, b) in pairs {
            let (a, b) = match (model.world(&a), model.world(&b)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(err(line, "unknown world")),
            };
            if id == 0 {
                return Err(err(line, "agent ids are 1-based"));
            }
            rels[id - 1].insert(a, b);
        }
        for (i, rel) in rels.into_iter().enumerate() {
            model.set_relation(i + 1, rel)?;
        }
        Ok(model)
    }
}

/// The three-cell grid: each cell is `H` or `B`, eight worlds `HHH..BBB`.
/// Agent 1 observes cell 1 and agent 2 observes cell 3, so their relations
/// are the partitions by the colour of that cell.
#[derive(Clone, Debug)]
pub struct GridWorld {
    pub model: KripkeModel,
    pub actual: WorldId,
}

pub fn grid_world() -> GridWorld {
    let labels: Vec<String> = (0..8u32)
        .map(|bits| {
            (0..3)
                .map(|c| if bits >> (2 - c) & 1 == 0 { 'H' } else { 'B' })
                .collect()
        })
        .collect();
    let atoms: Vec<String> = ["H1", "B1", "H2", "B2", "H3", "B3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let valuation: Vec<Vec<String>> = labels
        .iter()
        .map(|l| {
            l.chars()
                .enumerate()
                .map(|(c, ch)| format!("{ch}{}", c + 1))
                .collect()
        })
        .collect();
    let cell = |labels: &[String], w: WorldId, c: usize| labels[w].as_bytes()[c];
    let mut model = KripkeModel::new(labels.clone(), atoms, valuation, 2, FrameConditions::S5)
        .expect("grid fixture is well formed");
    model
        .set_relation(1, Relation::from_partition(8, |w| cell(&labels, w, 0)))
        .expect("partition relation is S5");
    model
        .set_relation(2, Relation::from_partition(8, |w| cell(&labels, w, 2)))
        .expect("partition relation is S5");
    let actual = model.world("HBH").expect("HBH exists");
    GridWorld { model, actual }
}
