//! Residual exceedance detection, pairwise evidence ledgers and broadcast
//! conflict resolution.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::WorldCatalog;
use crate::{AgentId, WorldId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensingError {
    #[error("noise level must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("need 1 <= e_th <= L, got e_th={e_th}, L={window}")]
    BadWindow { e_th: usize, window: usize },
    #[error("evidence needs at least two hypotheses")]
    TooFewHypotheses,
}

/// `|y - ŷ|`.
pub fn residual(y: f64, predicted: f64) -> f64 {
    (y - predicted).abs()
}

/// Sliding count of residuals above `eps` over the last `window` steps.
#[derive(Clone, Debug)]
pub struct ResidualWindow {
    eps: f64,
    window: usize,
    e_th: usize,
    flags: VecDeque<bool>,
    count: usize,
}

impl ResidualWindow {
    pub fn new(eps: f64, window: usize, e_th: usize) -> Result<Self, SensingError> {
        if e_th == 0 || e_th > window {
            return Err(SensingError::BadWindow { e_th, window });
        }
        Ok(ResidualWindow {
            eps,
            window,
            e_th,
            flags: VecDeque::with_capacity(window),
            count: 0,
        })
    }

    /// Push one residual and return the exceedance count.
    pub fn update(&mut self, residual: f64) -> usize {
        let flag = residual > self.eps;
        self.flags.push_back(flag);
        self.count += flag as usize;
        if self.flags.len() > self.window && self.flags.pop_front() == Some(true) {
            self.count -= 1;
        }
        self.count
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn detect(&self) -> bool {
        self.count >= self.e_th
    }

    pub fn clear(&mut self) {
        self.flags.clear();
        self.count = 0;
    }
}

/// `log N(y; μ_k, σ²) − log N(y; μ_l, σ²)`.
pub fn gaussian_llr(y: f64, mu_k: f64, mu_l: f64, sigma: f64) -> Result<f64, SensingError> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(SensingError::NonPositiveSigma(sigma));
    }
    Ok(llr(y, mu_k, mu_l, sigma))
}

#[inline]
fn llr(y: f64, mu_k: f64, mu_l: f64, sigma: f64) -> f64 {
    ((y - mu_l).powi(2) - (y - mu_k).powi(2)) / (2.0 * sigma * sigma)
}

/// Antisymmetric matrix of per-step evidence for every ordered hypothesis pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EvidenceStep {
    k: usize,
    values: Vec<f64>,
}

impl EvidenceStep {
    pub fn zeros(k: usize) -> Self {
        EvidenceStep {
            k,
            values: vec![0.0; k * k],
        }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.k + b]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Cumulative pairwise evidence `Λ[k][l]` over a hypothesis set.
#[derive(Clone, Debug)]
pub struct EvidenceLedger {
    hypotheses: Vec<WorldId>,
    lambda: Vec<f64>,
    started: usize,
    eta: f64,
}

impl EvidenceLedger {
    /// `hypotheses` are sorted so ties resolve to the lowest world id.
    pub fn new(
        mut hypotheses: Vec<WorldId>,
        started: usize,
        eta: f64,
    ) -> Result<Self, SensingError> {
        hypotheses.sort_unstable();
        hypotheses.dedup();
        if hypotheses.len() < 2 {
            return Err(SensingError::TooFewHypotheses);
        }
        let k = hypotheses.len();
        Ok(EvidenceLedger {
            hypotheses,
            lambda: vec![0.0; k * k],
            started,
            eta,
        })
    }

    pub fn hypotheses(&self) -> &[WorldId] {
        &self.hypotheses
    }

    pub fn started(&self) -> usize {
        self.started
    }

    pub fn threshold(&self) -> f64 {
        self.eta
    }

    /// `Λ` entry for the pair at positions `(a, b)` of [`Self::hypotheses`].
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.lambda[a * self.hypotheses.len() + b]
    }

    /// Per-pair LLRs of one observation of `arm`.
    pub fn step_evidence(
        &self,
        arm: usize,
        y: f64,
        catalog: &WorldCatalog,
        sigma: f64,
    ) -> EvidenceStep {
        let k = self.hypotheses.len();
        let mut step = EvidenceStep::zeros(k);
        for a in 0..k {
            for b in a + 1..k {
                let v = llr(
                    y,
                    catalog.mean(self.hypotheses[a], arm),
                    catalog.mean(self.hypotheses[b], arm),
                    sigma,
                );
                step.values[a * k + b] = v;
                step.values[b * k + a] = -v;
            }
        }
        step
    }

    /// Add the evidence of one observation.
    pub fn update(&mut self, arm: usize, y: f64, catalog: &WorldCatalog, sigma: f64) {
        let step = self.step_evidence(arm, y, catalog, sigma);
        self.add(&step);
    }

    /// Add an externally computed (e.g. pooled) evidence step.
    pub fn add(&mut self, step: &EvidenceStep) {
        debug_assert_eq!(step.k, self.hypotheses.len());
        for (l, v) in self.lambda.iter_mut().zip(&step.values) {
            *l += v;
        }
    }

    /// Maximin hypothesis `argmax_k min_{l≠k} Λ[k][l]` and its score.
    pub fn best(&self) -> (WorldId, f64) {
        let k = self.hypotheses.len();
        let mut best = (self.hypotheses[0], f64::NEG_INFINITY);
        for a in 0..k {
            let score = (0..k)
                .filter(|&b| b != a)
                .map(|b| self.get(a, b))
                .fold(f64::INFINITY, f64::min);
            if score > best.1 {
                best = (self.hypotheses[a], score);
            }
        }
        best
    }

    pub fn should_stop(&self) -> bool {
        self.best().1 >= self.eta
    }
}

/// A hypothesis announcement, flooded with a hop budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BroadcastMsg {
    pub sender: AgentId,
    pub timestamp: usize,
    pub hypothesis: WorldId,
    pub score: f64,
    pub ttl: usize,
}

/// Highest score wins; ties go to the lowest sender, then the lowest hypothesis.
pub fn resolve_conflicts(received: &[BroadcastMsg]) -> Option<&BroadcastMsg> {
    received.iter().min_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.sender.cmp(&b.sender))
            .then(a.hypothesis.cmp(&b.hypothesis))
    })
}
