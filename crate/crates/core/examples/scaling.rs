//! Recovery, reward and message cost as the network grows.
//!
//! `cargo run --release --example scaling -- [trials]`

use mas_resilience::config::ExperimentConfig;
use mas_resilience::harness::scalability_sweep;
use mas_resilience::net::Topology;

fn main() {
    let trials = std::env::args()
        .nth(1)
        .map_or(3, |t| t.parse().expect("trials is a number"));
    let config = ExperimentConfig {
        trials,
        ..Default::default()
    };
    let topologies = [
        Topology::Ring,
        Topology::SmallWorld {
            mean_degree: 4,
            rewire: 0.1,
        },
    ];
    let rows = scalability_sweep(&config, &[10, 150, 300], &topologies).unwrap();
    println!(
        "{:>4} {:<11} {:<22} {:>9} {:>7} {:>11} {:>8}",
        "n", "topology", "mode", "recovery", "reward", "messages", "per a·t"
    );
    for r in rows {
        let recovery = if r.recovery.censored {
            format!(">={}", r.recovery.steps)
        } else {
            r.recovery.steps.to_string()
        };
        println!(
            "{:>4} {:<11} {:<22} {recovery:>9} {:>7.3} {:>11.0} {:>8.3}",
            r.n,
            r.topology,
            r.mode.name(),
            r.reward_after,
            r.msgs_total,
            r.msgs_per_agent_step
        );
    }
}
