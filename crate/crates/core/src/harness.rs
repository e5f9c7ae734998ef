//! Trial execution, aggregation, recovery measurement, sweeps and CSV output.
//!
//! CSV schemas (floats printed with six decimals so reruns are byte-identical):
//!
//! * `curves.csv`: `step,mode,metric,mean,ci`, with `metric` one of
//!   `total_reward`, `cumulative_reward`, `cumulative_regret`,
//!   `fraction_optimal`. Curves are smoothed per trial before averaging.
//! * `metrics.csv`: `mode,trial,t_v,t_det,dt_rec_epi,dt_dur_epi,dt_rec_act,dt_dur_act,`
//!   `cens_rec_epi,cens_dur_epi,cens_rec_act,cens_dur_act,msgs_total`. A
//!   censored interval is written as the number of steps that were observed.
//! * `table2.csv`: `n,topology,mode,recovery,censored,reward_after,msgs_total,msgs_per_agent_step`.
//! * `eta.csv`: `eta,mode,dt_rec_epi,ci_rec_epi,dt_dur_epi,ci_dur_epi,censored`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::net::Topology;
use crate::policies::Mode;
use crate::resilience::Delay;
use crate::sim::{run_trial, SimError, TrialResult};

/// The four display curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CurveMetric {
    TotalReward,
    CumulativeReward,
    CumulativeRegret,
    FractionOptimal,
}

impl CurveMetric {
    pub const ALL: [CurveMetric; 4] = [
        CurveMetric::TotalReward,
        CurveMetric::CumulativeReward,
        CurveMetric::CumulativeRegret,
        CurveMetric::FractionOptimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveMetric::TotalReward => "total_reward",
            CurveMetric::CumulativeReward => "cumulative_reward",
            CurveMetric::CumulativeRegret => "cumulative_regret",
            CurveMetric::FractionOptimal => "fraction_optimal",
        }
    }

    pub fn series(self, r: &TrialResult) -> &[f64] {
        match self {
            CurveMetric::TotalReward => &r.total_reward,
            CurveMetric::CumulativeReward => &r.cumulative_reward,
            CurveMetric::CumulativeRegret => &r.cumulative_regret,
            CurveMetric::FractionOptimal => &r.fraction_optimal,
        }
    }
}

/// Mean and confidence half-width per step.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateCurve {
    pub mode: Mode,
    pub metric: CurveMetric,
    pub mean: Vec<f64>,
    pub ci: Vec<f64>,
}

/// Trailing moving average; the first `window - 1` entries average what is
/// available.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0, "window must be positive");
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        acc += v;
        if i >= window {
            acc -= values[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}

/// Sample mean and `z·s/√n` (zero for a single sample).
pub fn mean_ci(samples: &[f64], z: f64) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, z * var.sqrt() / (n as f64).sqrt())
}

/// Smooth each trial's series, then take the mean and CI across trials.
pub fn aggregate(
    results: &[TrialResult],
    metric: CurveMetric,
    window: usize,
    z: f64,
) -> AggregateCurve {
    let smoothed: Vec<Vec<f64>> = results
        .iter()
        .map(|r| moving_average(metric.series(r), window))
        .collect();
    let len = smoothed.iter().map(Vec::len).min().unwrap_or(0);
    let mut mean = Vec::with_capacity(len);
    let mut ci = Vec::with_capacity(len);
    let mut column = vec![0.0; smoothed.len()];
    for t in 0..len {
        for (c, s) in column.iter_mut().zip(&smoothed) {
            *c = s[t];
        }
        let (m, h) = mean_ci(&column, z);
        mean.push(m);
        ci.push(h);
    }
    AggregateCurve {
        mode: results.first().map_or(Mode::IndependentDucb, |r| r.mode),
        metric,
        mean,
        ci,
    }
}

/// Run every trial of one mode; results are in trial order.
pub fn run_trials(config: &ExperimentConfig, mode: Mode) -> Result<Vec<TrialResult>, SimError> {
    (0..config.trials as u64)
        .into_par_iter()
        .map(|k| run_trial(config, mode, k))
        .collect()
}

/// All trials of all configured modes.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub runs: Vec<(Mode, Vec<TrialResult>)>,
}

impl ExperimentOutput {
    pub fn results(&self, mode: Mode) -> Option<&[TrialResult]> {
        self.runs
            .iter()
            .find(|(m, _)| *m == mode)
            .map(|(_, r)| r.as_slice())
    }

    pub fn curves(&self) -> Vec<AggregateCurve> {
        self.runs
            .iter()
            .flat_map(|(_, rs)| {
                CurveMetric::ALL
                    .into_iter()
                    .map(|m| aggregate(rs, m, self.config.smoothing, self.config.ci_z))
            })
            .collect()
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, SimError> {
    config.validate()?;
    let runs = config
        .modes
        .iter()
        .map(|&m| run_trials(config, m).map(|r| (m, r)))
        .collect::<Result<_, _>>()?;
    Ok(ExperimentOutput {
        config: config.clone(),
        runs,
    })
}

/// Recovery of the trial-mean reward curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Recovery {
    pub steps: usize,
    /// The curve never came back before the horizon; `steps` is `T - t_v`.
    pub censored: bool,
}

/// First `t >= t_v` at which the trial-mean normalized expected reward,
/// averaged over the last `window` post-change steps, is within `tolerance`
/// of the optimum. Counted from `t_v`.
pub fn total_recovery(
    results: &[TrialResult],
    t_v: usize,
    tolerance: f64,
    window: usize,
) -> Recovery {
    let len = results
        .iter()
        .map(|r| r.normalized_reward.len())
        .min()
        .unwrap_or(0);
    let limit = len.saturating_sub(t_v);
    if results.is_empty() || t_v >= len {
        return Recovery {
            steps: limit,
            censored: true,
        };
    }
    let m = results.len() as f64;
    let curve: Vec<f64> = (t_v..len)
        .map(|t| results.iter().map(|r| r.normalized_reward[t]).sum::<f64>() / m)
        .collect();
    let smooth = moving_average(&curve, window);
    match smooth.iter().position(|&v| v >= 1.0 - tolerance) {
        Some(k) => Recovery {
            steps: k,
            censored: false,
        },
        None => Recovery {
            steps: limit,
            censored: true,
        },
    }
}

/// Mean per-agent sampled reward over the final `window` steps, averaged over trials.
pub fn reward_after(results: &[TrialResult], n_agents: usize, window: usize) -> f64 {
    let per_trial: Vec<f64> = results
        .iter()
        .map(|r| {
            let tail = &r.total_reward[r.total_reward.len().saturating_sub(window)..];
            tail.iter().sum::<f64>() / (tail.len() * n_agents) as f64
        })
        .collect();
    mean_ci(&per_trial, 0.0).0
}

/// Numeric value of an interval, censored ones replaced by `bound`.
pub fn delay_or(d: Delay, bound: usize) -> usize {
    d.finite().unwrap_or(bound)
}

/// One cell of the scalability table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table2Row {
    pub n: usize,
    pub topology: String,
    pub mode: Mode,
    pub recovery: Recovery,
    pub reward_after: f64,
    pub msgs_total: f64,
    pub msgs_per_agent_step: f64,
}

pub fn table2_rows(config: &ExperimentConfig, out: &ExperimentOutput) -> Vec<Table2Row> {
    out.runs
        .iter()
        .map(|(mode, rs)| {
            let msgs = rs.iter().map(|r| r.total_messages() as f64).sum::<f64>() / rs.len() as f64;
            Table2Row {
                n: config.agents,
                topology: config.topology.name().to_string(),
                mode: *mode,
                recovery: total_recovery(
                    rs,
                    config.t_v(),
                    config.recovery_tolerance,
                    config.smoothing,
                ),
                reward_after: reward_after(rs, config.agents, config.reward_window),
                msgs_total: msgs,
                msgs_per_agent_step: msgs / (config.agents * config.horizon) as f64,
            }
        })
        .collect()
}

/// Table-II style sweep over network sizes and topologies.
pub fn scalability_sweep(
    base: &ExperimentConfig,
    sizes: &[usize],
    topologies: &[Topology],
) -> Result<Vec<Table2Row>, SimError> {
    let mut rows = Vec::new();
    for topo in topologies {
        for &n in sizes {
            let config = ExperimentConfig {
                agents: n,
                topology: *topo,
                ..base.clone()
            };
            let out = run_experiment(&config)?;
            rows.extend(table2_rows(&config, &out));
        }
    }
    Ok(rows)
}

/// Epistemic recovery and durability at one evidence threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaRow {
    pub eta: f64,
    pub mode: Mode,
    pub rec_epi: (f64, f64),
    pub dur_epi: (f64, f64),
    /// Trials whose recovery was censored by the horizon.
    pub censored: usize,
}

/// Sweep `η^epi`; censored intervals count as the observed remainder.
pub fn eta_sweep(base: &ExperimentConfig, etas: &[f64]) -> Result<Vec<EtaRow>, SimError> {
    let mut rows = Vec::new();
    for &eta in etas {
        let config = ExperimentConfig {
            eta_epi: eta,
            ..base.clone()
        };
        let out = run_experiment(&config)?;
        for (mode, rs) in &out.runs {
            let t_v = config.t_v();
            let rec: Vec<f64> = rs
                .iter()
                .map(|r| delay_or(r.metrics.dt_rec_epi, config.horizon - t_v) as f64)
                .collect();
            let dur: Vec<f64> = rs
                .iter()
                .map(|r| {
                    let from = r.metrics.t_rec_epi.unwrap_or(t_v);
                    delay_or(r.metrics.dt_dur_epi, config.horizon - from) as f64
                })
                .collect();
            rows.push(EtaRow {
                eta,
                mode: *mode,
                rec_epi: mean_ci(&rec, config.ci_z),
                dur_epi: mean_ci(&dur, config.ci_z),
                censored: rs
                    .iter()
                    .filter(|r| r.metrics.dt_rec_epi.is_infinite())
                    .count(),
            });
        }
    }
    Ok(rows)
}

pub fn curves_csv(curves: &[AggregateCurve]) -> String {
    let mut s = String::from("step,mode,metric,mean,ci\n");
    for c in curves {
        for (t, (m, h)) in c.mean.iter().zip(&c.ci).enumerate() {
            writeln!(s, "{t},{},{},{m:.6},{h:.6}", c.mode, c.metric.name()).expect("string write");
        }
    }
    s
}

pub fn metrics_csv(out: &ExperimentOutput) -> String {
    let mut s = String::from(
        "mode,trial,t_v,t_det,dt_rec_epi,dt_dur_epi,dt_rec_act,dt_dur_act,\
         cens_rec_epi,cens_dur_epi,cens_rec_act,cens_dur_act,msgs_total\n",
    );
    let horizon = out.config.horizon;
    for (mode, rs) in &out.runs {
        for r in rs {
            let m = &r.metrics;
            let t_rec = m.t_rec_epi.unwrap_or(m.t_v);
            let t_act = m.t_rec_act.unwrap_or(t_rec);
            let fields = [
                (m.dt_rec_epi, horizon - m.t_v),
                (m.dt_dur_epi, horizon - t_rec),
                (m.dt_rec_act, horizon - t_rec),
                (m.dt_dur_act, horizon - t_act),
            ];
            let t_det = m.t_det.map(|t| t.to_string()).unwrap_or_default();
            let vals: Vec<String> = fields
                .iter()
                .map(|&(d, b)| delay_or(d, b).to_string())
                .collect();
            let flags: Vec<&str> = fields
                .iter()
                .map(|(d, _)| if d.is_infinite() { "1" } else { "0" })
                .collect();
            writeln!(
                s,
                "{mode},{},{},{t_det},{},{},{}",
                r.trial,
                m.t_v,
                vals.join(","),
                flags.join(","),
                r.total_messages()
            )
            .expect("string write");
        }
    }
    s
}

pub fn table2_csv(rows: &[Table2Row]) -> String {
    let mut s = String::from(
        "n,topology,mode,recovery,censored,reward_after,msgs_total,msgs_per_agent_step\n",
    );
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{:.6},{:.1},{:.6}",
            r.n,
            r.topology,
            r.mode,
            r.recovery.steps,
            r.recovery.censored as u8,
            r.reward_after,
            r.msgs_total,
            r.msgs_per_agent_step
        )
        .expect("string write");
    }
    s
}

pub fn eta_csv(rows: &[EtaRow]) -> String {
    let mut s = String::from("eta,mode,dt_rec_epi,ci_rec_epi,dt_dur_epi,ci_dur_epi,censored\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.eta, r.mode, r.rec_epi.0, r.rec_epi.1, r.dur_epi.0, r.dur_epi.1, r.censored
        )
        .expect("string write");
    }
    s
}

/// Write `curves.csv` and `metrics.csv` (and the resolved config) into `dir`.
pub fn write_experiment(dir: &Path, out: &ExperimentOutput) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), out.config.to_string())?;
    fs::write(dir.join("curves.csv"), curves_csv(&out.curves()))?;
    fs::write(dir.join("metrics.csv"), metrics_csv(out))
}
