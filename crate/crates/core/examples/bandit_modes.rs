//! The five learning modes on the default change-point experiment.
//!
//! `cargo run --release --example bandit_modes -- [trials] [out-dir]`

use mas_resilience::config::ExperimentConfig;
use mas_resilience::harness::{run_experiment, table2_rows, write_experiment};

fn main() {
    let mut args = std::env::args().skip(1);
    let mut config = ExperimentConfig::default();
    if let Some(trials) = args.next() {
        config.trials = trials.parse().expect("trials is a number");
    }
    let out = run_experiment(&config).unwrap();
    println!(
        "{} agents on a {}, change at {}, {} trials",
        config.agents,
        config.topology.name(),
        config.t_v(),
        config.trials
    );
    println!(
        "{:<22} {:>9} {:>9} {:>8} {:>9}",
        "mode", "regret", "recovery", "reward", "messages"
    );
    for row in table2_rows(&config, &out) {
        let rs = out.results(row.mode).unwrap();
        let regret = rs
            .iter()
            .map(|r| *r.cumulative_regret.last().unwrap())
            .sum::<f64>()
            / rs.len() as f64;
        let recovery = if row.recovery.censored {
            format!(">={}", row.recovery.steps)
        } else {
            row.recovery.steps.to_string()
        };
        println!(
            "{:<22} {regret:>9.1} {recovery:>9} {:>8.3} {:>9.0}",
            row.mode.name(),
            row.reward_after,
            row.msgs_total
        );
    }
    if let Some(dir) = args.next() {
        write_experiment(dir.as_ref(), &out).unwrap();
        println!("wrote {dir}");
    }
}
