//! Recovery and durability metrics, and the bounded-horizon resilience monitor.
//!
//! With `E` = everyone in `N` knows φ₂ and `π` = every agent acts optimally:
//!
//! ```text
//! R_epi = (!E) U[0,α₁] (G[0,β₁) E)
//! R_act = (!π) U[0,α₂] (G[0,β₂) π)
//!
//! Δt_rec_epi = inf{ t >  t_v        : E }  − t_v
//! Δt_dur_epi = inf{ t >  t_rec_epi  : !E } − t_rec_epi
//! Δt_rec_act = inf{ t >= t_rec_epi  : π }  − t_rec_epi
//! Δt_dur_act = inf{ t >= t_rec_act  : !π } − t_rec_act
//! ```
//!
//! An empty set gives [`Delay::Infinite`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{compile, EvalError, Formula, Structure};
use crate::trace::{EventKind, Trace, OPT_ALL};
use crate::AgentId;

/// A step count, or censored by the end of the trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Delay {
    Finite(usize),
    Infinite,
}

impl Delay {
    pub fn finite(self) -> Option<usize> {
        match self {
            Delay::Finite(d) => Some(d),
            Delay::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Delay::Infinite
    }

    /// `self <= bound`, with `Infinite` larger than every step count.
    pub fn at_most(self, bound: usize) -> bool {
        self <= Delay::Finite(bound)
    }

    /// `self >= bound`, with `Infinite` larger than every step count.
    pub fn at_least(self, bound: usize) -> bool {
        self >= Delay::Finite(bound)
    }
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delay::Finite(d) => write!(f, "{d}"),
            Delay::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("agent set is empty")]
    NoAgents,
}

/// Recovery/durability budgets and the post-stressor condition.
#[derive(Clone, Debug, PartialEq)]
pub struct ResilienceSpec {
    pub alpha1: usize,
    pub beta1: usize,
    pub alpha2: usize,
    pub beta2: usize,
    pub phi2: Formula,
    pub agents: Vec<AgentId>,
}

impl ResilienceSpec {
    pub fn new(
        (alpha1, beta1, alpha2, beta2): (usize, usize, usize, usize),
        phi2: Formula,
        agents: Vec<AgentId>,
    ) -> Result<Self, SpecError> {
        for (name, v) in [
            ("alpha1", alpha1),
            ("beta1", beta1),
            ("alpha2", alpha2),
            ("beta2", beta2),
        ] {
            if v == 0 {
                return Err(SpecError::NonPositive(name));
            }
        }
        if agents.is_empty() {
            return Err(SpecError::NoAgents);
        }
        Ok(ResilienceSpec {
            alpha1,
            beta1,
            alpha2,
            beta2,
            phi2,
            agents,
        })
    }

    /// Steps after `t_v` that decide both specifications.
    pub fn bound(&self) -> usize {
        bound_b(self.alpha1, self.beta1, self.alpha2, self.beta2)
    }

    /// `E_N φ₂`.
    pub fn mutual(&self) -> Formula {
        Formula::mutual(self.agents.iter().copied(), self.phi2.clone())
    }

    pub fn epistemic_formula(&self) -> Formula {
        let e = self.mutual();
        Formula::until(
            self.alpha1,
            Formula::not(e.clone()),
            Formula::globally(self.beta1, e),
        )
    }

    pub fn action_formula(&self) -> Formula {
        let pi = Formula::atom(OPT_ALL);
        Formula::until(
            self.alpha2,
            Formula::not(pi.clone()),
            Formula::globally(self.beta2, pi),
        )
    }

    /// True when disturbances `delta` steps apart leave too little room to
    /// recover and persist: `delta <= max{α₁+β₁, α₁+α₂+β₂}`. Necessary, not
    /// sufficient.
    pub fn budget_too_tight(&self, delta: usize) -> bool {
        delta <= (self.alpha1 + self.beta1).max(self.alpha1 + self.alpha2 + self.beta2)
    }
}

/// `max{α₁+β₁, α₂+β₂}`.
pub fn bound_b(alpha1: usize, beta1: usize, alpha2: usize, beta2: usize) -> usize {
    (alpha1 + beta1).max(alpha2 + beta2)
}

fn first_after<S: Structure>(
    s: &S,
    from: usize,
    f: &Formula,
    want: bool,
) -> Result<Delay, EvalError> {
    let c = compile(s, f)?;
    for t in from..s.len() {
        if c.eval(s, t)? == want {
            return Ok(Delay::Finite(t));
        }
    }
    Ok(Delay::Infinite)
}

fn since(found: Delay, origin: usize) -> Delay {
    match found {
        Delay::Finite(t) => Delay::Finite(t - origin),
        Delay::Infinite => Delay::Infinite,
    }
}

/// First `t > t_v` with `E_N φ₂`, minus `t_v`.
pub fn epistemic_recoverability<S: Structure>(
    s: &S,
    t_v: usize,
    phi2: &Formula,
    agents: &[AgentId],
) -> Result<Delay, EvalError> {
    check_time(s, t_v)?;
    let e = Formula::mutual(agents.iter().copied(), phi2.clone());
    Ok(since(first_after(s, t_v + 1, &e, true)?, t_v))
}

/// First `t > t_rec` without `E_N φ₂`, minus `t_rec`.
pub fn epistemic_durability<S: Structure>(
    s: &S,
    t_rec: usize,
    phi2: &Formula,
    agents: &[AgentId],
) -> Result<Delay, EvalError> {
    check_time(s, t_rec)?;
    let e = Formula::mutual(agents.iter().copied(), phi2.clone());
    Ok(since(first_after(s, t_rec + 1, &e, false)?, t_rec))
}

/// First `t >= t_rec_epi` where every agent acts optimally, minus `t_rec_epi`.
pub fn action_recoverability<S: Structure>(s: &S, t_rec_epi: usize) -> Result<Delay, EvalError> {
    check_time(s, t_rec_epi)?;
    Ok(since(
        first_after(s, t_rec_epi, &Formula::atom(OPT_ALL), true)?,
        t_rec_epi,
    ))
}

/// First `t >= t_rec_act` where some agent acts suboptimally, minus `t_rec_act`.
pub fn action_durability<S: Structure>(s: &S, t_rec_act: usize) -> Result<Delay, EvalError> {
    check_time(s, t_rec_act)?;
    Ok(since(
        first_after(s, t_rec_act, &Formula::atom(OPT_ALL), false)?,
        t_rec_act,
    ))
}

fn check_time<S: Structure>(s: &S, t: usize) -> Result<(), EvalError> {
    if t >= s.len() {
        return Err(EvalError::OutOfRange { t, len: s.len() });
    }
    Ok(())
}

/// The four metrics of one run around one stressor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub t_v: usize,
    /// First detection by any agent at or after `t_v`.
    pub t_det: Option<usize>,
    pub t_rec_epi: Option<usize>,
    pub dt_rec_epi: Delay,
    pub dt_dur_epi: Delay,
    pub t_rec_act: Option<usize>,
    pub dt_rec_act: Delay,
    pub dt_dur_act: Delay,
}

/// Measure all four intervals; later ones are `Infinite` when an earlier
/// recovery never happens.
pub fn measure(
    trace: &Trace,
    t_v: usize,
    phi2: &Formula,
    agents: &[AgentId],
) -> Result<MetricsRecord, EvalError> {
    let t_det = trace
        .events()
        .iter()
        .filter(|e| e.step >= t_v && e.kind == EventKind::Detect)
        .map(|e| e.step)
        .min();
    let dt_rec_epi = epistemic_recoverability(trace, t_v, phi2, agents)?;
    let t_rec_epi = dt_rec_epi.finite().map(|d| t_v + d);
    let (dt_dur_epi, dt_rec_act) = match t_rec_epi {
        Some(t) => (
            epistemic_durability(trace, t, phi2, agents)?,
            action_recoverability(trace, t)?,
        ),
        None => (Delay::Infinite, Delay::Infinite),
    };
    let t_rec_act = match (t_rec_epi, dt_rec_act) {
        (Some(t), Delay::Finite(d)) => Some(t + d),
        _ => None,
    };
    let dt_dur_act = match t_rec_act {
        Some(t) => action_durability(trace, t)?,
        None => Delay::Infinite,
    };
    Ok(MetricsRecord {
        t_v,
        t_det,
        t_rec_epi,
        dt_rec_epi,
        dt_dur_epi,
        t_rec_act,
        dt_rec_act,
        dt_dur_act,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CensorReason {
    /// The run ends before `t_v + B`.
    TraceTooShort { needed: usize, len: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    /// Earliest step whose observation already falsifies the specification.
    ViolatedAt(usize),
    Censored(CensorReason),
}

/// Evaluate `R_epi ∧ R_act` at `t_v` using the steps `t_v .. t_v + B`.
///
/// A `Satisfied` verdict implies `Δt_rec_epi <= α₁`, `Δt_dur_epi >= β₁`,
/// `Δt_rec_act <= α₂` and `Δt_dur_act >= β₂` provided φ₂ is not already
/// mutually known at `t_v` and the agents do not all act optimally before
/// epistemic recovery; outside those conditions the formulas measure from
/// `t_v` rather than from the recovery times.
pub fn check_resilience(
    trace: &Trace,
    t_v: usize,
    spec: &ResilienceSpec,
) -> Result<Verdict, EvalError> {
    let needed = t_v + spec.bound();
    if trace.len() < needed {
        return Ok(Verdict::Censored(CensorReason::TraceTooShort {
            needed,
            len: trace.len(),
        }));
    }
    let f = Formula::and(spec.epistemic_formula(), spec.action_formula());
    let c = compile(trace, &f)?;
    match c.eval_prefix(trace, t_v, needed) {
        Some(true) => Ok(Verdict::Satisfied),
        Some(false) => {
            // Determinacy only grows with the prefix, so the first falsifying
            // prefix length can be found by bisection.
            let (mut lo, mut hi) = (t_v + 1, needed);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if c.eval_prefix(trace, t_v, mid) == Some(false) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Ok(Verdict::ViolatedAt(lo - 1))
        }
        None => Err(EvalError::HorizonExceeded { len: trace.len() }),
    }
}
