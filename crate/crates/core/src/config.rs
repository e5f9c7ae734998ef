//! Experiment configuration: a flat `key = value` file with `[section]`
//! headers, overridable per key with `section.key=value`.
//!
//! ```text
//! # comment
//! [experiment]
//! agents = 12
//! modes = independent_ducb, cooperative_kripke
//! [network]
//! topology = ring
//! ```
//!
//! Keys are addressed as `section.key`; unknown keys are rejected. See
//! [`ExperimentConfig::keys`] for the full list with defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::env::{ChangeRule, Schedule};
use crate::kripke::FrameConditions;
use crate::logic::Formula;
use crate::net::Topology;
use crate::policies::{ActionLayer, EvidenceArmRule, Mode, PolicyParams};
use crate::resilience::ResilienceSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("override `{0}` is not of the form section.key=value")]
    BadOverride(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Raw `section.key -> value` pairs in file order of last assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv = KeyValues::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: i + 1,
                    msg: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected key = value, got `{line}`"),
            })?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            kv.entries.insert(key, v.trim().to_string());
        }
        Ok(kv)
    }

    /// Apply one `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::BadOverride(assignment.into()))?;
        if !k.contains('.') {
            return Err(ConfigError::BadOverride(assignment.into()));
        }
        self.entries
            .insert(k.trim().to_string(), v.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Recovery budget; `inf` disables the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    pub alpha1: usize,
    pub beta1: usize,
    pub alpha2: usize,
    pub beta2: usize,
}

/// Communication horizon: the graph diameter, or a fixed hop budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommHorizon {
    Diameter,
    Fixed(usize),
}

/// Full parameterization of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub agents: usize,
    pub arms: usize,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub smoothing: usize,
    pub output: PathBuf,
    pub modes: Vec<Mode>,
    pub topology: Topology,
    pub l_comm: CommHorizon,
    pub sigma: f64,
    pub worlds: usize,
    pub catalog_seed: Option<u64>,
    pub change_rule: ChangeRule,
    /// `(t_v, world)` pairs.
    pub changes: Vec<(usize, usize)>,
    /// Minimum spacing δ between changes.
    pub min_gap: usize,
    pub gamma: f64,
    pub kripke_gamma: f64,
    pub ucb_c: f64,
    pub eps: f64,
    pub window: usize,
    pub e_th: usize,
    pub eta_epi: f64,
    pub n0: f64,
    pub evidence_arms: EvidenceArmRule,
    pub action_layer: ActionLayer,
    pub exclude_believed: bool,
    pub frame: FrameConditions,
    pub budgets: Budgets,
    /// Recovery tolerance for the total-recovery measure, as a fraction.
    pub recovery_tolerance: f64,
    /// Steps averaged for the reward-after-recovery column.
    pub reward_window: usize,
    /// Normal z value of the confidence half-width.
    pub ci_z: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            agents: 12,
            arms: 16,
            horizon: 2500,
            trials: 10,
            seed: 1,
            smoothing: 50,
            output: PathBuf::from("out"),
            modes: Mode::ALL.to_vec(),
            topology: Topology::Ring,
            l_comm: CommHorizon::Diameter,
            sigma: 1.0,
            worlds: 2,
            catalog_seed: None,
            change_rule: ChangeRule::Reverse,
            changes: vec![(1400, 1)],
            min_gap: 500,
            gamma: 0.998,
            kripke_gamma: 1.0,
            ucb_c: 0.5,
            eps: 1.6,
            window: 30,
            e_th: 13,
            eta_epi: 10.0,
            n0: 20000.0,
            evidence_arms: EvidenceArmRule::RoundRobin,
            action_layer: ActionLayer::Ucb,
            exclude_believed: false,
            frame: FrameConditions::REFLEXIVE,
            budgets: Budgets {
                alpha1: 550,
                beta1: 600,
                alpha2: 174,
                beta2: 436,
            },
            recovery_tolerance: 0.02,
            reward_window: 200,
            ci_z: 1.96,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        }),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_changes(key: &str, value: &str) -> Result<Vec<(usize, usize)>, ConfigError> {
    let bad = || ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    };
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (t, w) = item.split_once(':').ok_or_else(bad)?;
            Ok((
                t.trim().parse().map_err(|_| bad())?,
                w.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

impl ExperimentConfig {
    /// Every accepted key, with its default rendered as text.
    pub fn keys() -> Vec<(&'static str, String)> {
        let d = ExperimentConfig::default();
        vec![
            ("experiment.agents", d.agents.to_string()),
            ("experiment.arms", d.arms.to_string()),
            ("experiment.horizon", d.horizon.to_string()),
            ("experiment.trials", d.trials.to_string()),
            ("experiment.seed", d.seed.to_string()),
            ("experiment.smoothing", d.smoothing.to_string()),
            ("experiment.output", d.output.display().to_string()),
            (
                "experiment.modes",
                d.modes
                    .iter()
                    .map(|m| m.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            ),
            (
                "experiment.recovery_tolerance",
                d.recovery_tolerance.to_string(),
            ),
            ("experiment.reward_window", d.reward_window.to_string()),
            ("experiment.ci_z", d.ci_z.to_string()),
            ("network.topology", "ring".into()),
            ("network.mean_degree", "4".into()),
            ("network.rewire", "0.1".into()),
            ("network.l_comm", "diameter".into()),
            ("environment.sigma", d.sigma.to_string()),
            ("environment.worlds", d.worlds.to_string()),
            ("environment.catalog_seed", "seed".into()),
            ("environment.change_rule", d.change_rule.to_string()),
            ("environment.changes", "1400:1".into()),
            ("environment.min_gap", d.min_gap.to_string()),
            ("policy.gamma", d.gamma.to_string()),
            ("policy.kripke_gamma", d.kripke_gamma.to_string()),
            ("policy.ucb_c", d.ucb_c.to_string()),
            ("policy.eps", d.eps.to_string()),
            ("policy.window", d.window.to_string()),
            ("policy.e_th", d.e_th.to_string()),
            ("policy.eta_epi", d.eta_epi.to_string()),
            ("policy.n0", d.n0.to_string()),
            ("policy.evidence_arms", "round_robin".into()),
            ("policy.action_layer", "ucb".into()),
            ("policy.eta_act", "0.05".into()),
            ("policy.exclude_believed", d.exclude_believed.to_string()),
            ("policy.frame", "reflexive".into()),
            ("spec.alpha1", d.budgets.alpha1.to_string()),
            ("spec.beta1", d.budgets.beta1.to_string()),
            ("spec.alpha2", d.budgets.alpha2.to_string()),
            ("spec.beta2", d.budgets.beta2.to_string()),
        ]
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let known: Vec<&str> = Self::keys().into_iter().map(|(k, _)| k).collect();
        if let Some(unknown) = kv.keys().find(|k| !known.contains(k)) {
            return Err(ConfigError::UnknownKey(unknown.into()));
        }
        let mut c = ExperimentConfig::default();
        let get = |k: &str| kv.get(k);
        macro_rules! num {
            ($key:literal, $field:expr) => {
                if let Some(v) = get($key) {
                    $field = parse_value($key, v)?;
                }
            };
        }
        num!("experiment.agents", c.agents);
        num!("experiment.arms", c.arms);
        num!("experiment.horizon", c.horizon);
        num!("experiment.trials", c.trials);
        num!("experiment.seed", c.seed);
        num!("experiment.smoothing", c.smoothing);
        num!("experiment.recovery_tolerance", c.recovery_tolerance);
        num!("experiment.reward_window", c.reward_window);
        num!("experiment.ci_z", c.ci_z);
        if let Some(v) = get("experiment.output") {
            c.output = PathBuf::from(v);
        }
        if let Some(v) = get("experiment.modes") {
            c.modes = parse_list("experiment.modes", v)?;
        }
        let mut degree = 4usize;
        let mut rewire = 0.1f64;
        if let Some(v) = get("network.mean_degree") {
            degree = parse_value("network.mean_degree", v)?;
        }
        if let Some(v) = get("network.rewire") {
            rewire = parse_value("network.rewire", v)?;
        }
        if let Some(v) = get("network.topology") {
            c.topology = parse_value("network.topology", v)?;
        }
        if let Topology::SmallWorld { .. } = c.topology {
            c.topology = Topology::SmallWorld {
                mean_degree: degree,
                rewire,
            };
        }
        if let Some(v) = get("network.l_comm") {
            c.l_comm = if v == "diameter" {
                CommHorizon::Diameter
            } else {
                CommHorizon::Fixed(parse_value("network.l_comm", v)?)
            };
        }
        num!("environment.sigma", c.sigma);
        num!("environment.worlds", c.worlds);
        if let Some(v) = get("environment.catalog_seed") {
            c.catalog_seed = Some(parse_value("environment.catalog_seed", v)?);
        }
        if let Some(v) = get("environment.change_rule") {
            c.change_rule = parse_value("environment.change_rule", v)?;
        }
        if let Some(v) = get("environment.changes") {
            c.changes = parse_changes("environment.changes", v)?;
        }
        num!("environment.min_gap", c.min_gap);
        num!("policy.gamma", c.gamma);
        num!("policy.kripke_gamma", c.kripke_gamma);
        num!("policy.ucb_c", c.ucb_c);
        num!("policy.eps", c.eps);
        num!("policy.window", c.window);
        num!("policy.e_th", c.e_th);
        num!("policy.eta_epi", c.eta_epi);
        num!("policy.n0", c.n0);
        if let Some(v) = get("policy.evidence_arms") {
            c.evidence_arms = parse_value("policy.evidence_arms", v)?;
        }
        let mut eta_act = 0.05f64;
        if let Some(v) = get("policy.eta_act") {
            eta_act = parse_value("policy.eta_act", v)?;
        }
        match get("policy.action_layer") {
            None | Some("ucb") => {}
            Some("identify") => c.action_layer = ActionLayer::Identify { eta_act },
            Some(other) => {
                return Err(ConfigError::BadValue {
                    key: "policy.action_layer".into(),
                    value: other.into(),
                })
            }
        }
        if let Some(v) = get("policy.exclude_believed") {
            c.exclude_believed = parse_bool("policy.exclude_believed", v)?;
        }
        if let Some(v) = get("policy.frame") {
            c.frame = FrameConditions::parse(v).ok_or_else(|| ConfigError::BadValue {
                key: "policy.frame".into(),
                value: v.into(),
            })?;
        }
        num!("spec.alpha1", c.budgets.alpha1);
        num!("spec.beta1", c.budgets.beta1);
        num!("spec.alpha2", c.budgets.alpha2);
        num!("spec.beta2", c.budgets.beta2);
        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut kv = KeyValues::parse(text)?;
        for o in overrides {
            kv.set(o)?;
        }
        Self::from_key_values(&kv)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        Self::parse(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Invalid(m));
        for (name, v) in [
            ("agents", self.agents),
            ("arms", self.arms),
            ("horizon", self.horizon),
            ("trials", self.trials),
            ("smoothing", self.smoothing),
            ("window", self.window),
            ("e_th", self.e_th),
            ("reward_window", self.reward_window),
        ] {
            if v == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        if self.agents < 3 {
            return fail("need at least 3 agents for a ring".into());
        }
        if self.arms < 2 {
            return fail("need at least 2 arms".into());
        }
        if self.worlds < 2 {
            return fail("need at least 2 worlds".into());
        }
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return fail("sigma must be positive".into());
        }
        if self.e_th > self.window {
            return fail("e_th must not exceed the window".into());
        }
        for (name, g) in [("gamma", self.gamma), ("kripke_gamma", self.kripke_gamma)] {
            if !(g > 0.0 && g <= 1.0) {
                return fail(format!("{name} must be in (0, 1]"));
            }
        }
        // NaN fails every comparison, so it is rejected here too.
        let positive = |x: f64| x > 0.0;
        if ![self.eps, self.n0, self.ucb_c].into_iter().all(positive)
            || self.eta_epi.is_nan()
            || self.eta_epi < 0.0
        {
            return fail("eps, n0 and ucb_c must be positive, eta_epi non-negative".into());
        }
        if self.modes.is_empty() {
            return fail("no modes selected".into());
        }
        if let CommHorizon::Fixed(0) = self.l_comm {
            return fail("l_comm must be positive".into());
        }
        let b = self.budgets;
        if [b.alpha1, b.beta1, b.alpha2, b.beta2].contains(&0) {
            return fail("resilience budgets must be positive".into());
        }
        self.schedule()?
            .validate_for_worlds(self.worlds)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.changes.iter().any(|&(t, _)| t >= self.horizon) {
            return fail("change point beyond the horizon".into());
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<Schedule, ConfigError> {
        Schedule::new(self.changes.clone(), self.min_gap)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn catalog_seed(&self) -> u64 {
        self.catalog_seed.unwrap_or(self.seed)
    }

    /// First change point, the reference for every metric.
    pub fn t_v(&self) -> usize {
        self.changes
            .first()
            .map(|&(t, _)| t)
            .unwrap_or(self.horizon)
    }

    /// Warning text when the change spacing leaves too little room for the
    /// budgets (a necessary condition only).
    pub fn budget_warning(&self) -> Option<String> {
        let b = self.budgets;
        let need = (b.alpha1 + b.beta1).max(b.alpha1 + b.alpha2 + b.beta2);
        (self.changes.len() > 1 && self.min_gap <= need).then(|| {
            format!("change spacing {} <= {need}: recovery and persistence cannot both fit between changes", self.min_gap)
        })
    }

    pub fn resilience_spec(&self, phi2: Formula) -> ResilienceSpec {
        let b = self.budgets;
        ResilienceSpec::new(
            (b.alpha1, b.beta1, b.alpha2, b.beta2),
            phi2,
            (1..=self.agents).collect(),
        )
        .expect("validated budgets")
    }

    pub fn policy_params(&self, mode: Mode, l_comm: usize) -> PolicyParams {
        PolicyParams {
            mode,
            n_agents: self.agents,
            sigma: self.sigma,
            gamma: self.gamma,
            kripke_gamma: self.kripke_gamma,
            ucb_c: self.ucb_c,
            eps: self.eps,
            window: self.window,
            e_th: self.e_th,
            eta_epi: self.eta_epi,
            n0: self.n0,
            l_comm,
            evidence_arms: self.evidence_arms,
            action_layer: self.action_layer,
            exclude_believed: self.exclude_believed,
            frame: self.frame,
        }
    }
}

impl fmt::Display for ExperimentConfig {
    /// Renders as a file that parses back to the same configuration.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[experiment]")?;
        writeln!(f, "agents = {}", self.agents)?;
        writeln!(f, "arms = {}", self.arms)?;
        writeln!(f, "horizon = {}", self.horizon)?;
        writeln!(f, "trials = {}", self.trials)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "smoothing = {}", self.smoothing)?;
        writeln!(f, "output = {}", self.output.display())?;
        writeln!(
            f,
            "modes = {}",
            self.modes
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(", ")
        )?;
        writeln!(f, "recovery_tolerance = {}", self.recovery_tolerance)?;
        writeln!(f, "reward_window = {}", self.reward_window)?;
        writeln!(f, "ci_z = {}", self.ci_z)?;
        writeln!(f, "\n[network]")?;
        writeln!(f, "topology = {}", self.topology.name())?;
        if let Topology::SmallWorld {
            mean_degree,
            rewire,
        } = self.topology
        {
            writeln!(f, "mean_degree = {mean_degree}")?;
            writeln!(f, "rewire = {rewire}")?;
        }
        match self.l_comm {
            CommHorizon::Diameter => writeln!(f, "l_comm = diameter")?,
            CommHorizon::Fixed(l) => writeln!(f, "l_comm = {l}")?,
        }
        writeln!(f, "\n[environment]")?;
        writeln!(f, "sigma = {}", self.sigma)?;
        writeln!(f, "worlds = {}", self.worlds)?;
        if let Some(s) = self.catalog_seed {
            writeln!(f, "catalog_seed = {s}")?;
        }
        writeln!(f, "change_rule = {}", self.change_rule)?;
        let changes: Vec<String> = self
            .changes
            .iter()
            .map(|(t, w)| format!("{t}:{w}"))
            .collect();
        writeln!(f, "changes = {}", changes.join(", "))?;
        writeln!(f, "min_gap = {}", self.min_gap)?;
        writeln!(f, "\n[policy]")?;
        writeln!(f, "gamma = {}", self.gamma)?;
        writeln!(f, "kripke_gamma = {}", self.kripke_gamma)?;
        writeln!(f, "ucb_c = {}", self.ucb_c)?;
        writeln!(f, "eps = {}", self.eps)?;
        writeln!(f, "window = {}", self.window)?;
        writeln!(f, "e_th = {}", self.e_th)?;
        writeln!(f, "eta_epi = {}", self.eta_epi)?;
        writeln!(f, "n0 = {}", self.n0)?;
        let arms_rule = match self.evidence_arms {
            EvidenceArmRule::RoundRobin => "round_robin",
            EvidenceArmRule::MostDiscriminative => "most_discriminative",
        };
        writeln!(f, "evidence_arms = {arms_rule}")?;
        match self.action_layer {
            ActionLayer::Ucb => writeln!(f, "action_layer = ucb")?,
            ActionLayer::Identify { eta_act } => {
                writeln!(f, "action_layer = identify")?;
                writeln!(f, "eta_act = {eta_act}")?;
            }
        }
        writeln!(f, "exclude_believed = {}", self.exclude_believed)?;
        writeln!(f, "frame = {}", self.frame)?;
        writeln!(f, "\n[spec]")?;
        writeln!(f, "alpha1 = {}", self.budgets.alpha1)?;
        writeln!(f, "beta1 = {}", self.budgets.beta1)?;
        writeln!(f, "alpha2 = {}", self.budgets.alpha2)?;
        writeln!(f, "beta2 = {}", self.budgets.beta2)
    }
}
