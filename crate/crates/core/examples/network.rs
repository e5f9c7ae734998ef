//! Flooding and consensus on rings and small-world graphs.

use mas_resilience::net::{flood_broadcast, ring, small_world, ConsensusWeights, Graph};

fn spread(values: &[Vec<f64>]) -> f64 {
    let hi = values.iter().map(|v| v[0]).fold(f64::MIN, f64::max);
    let lo = values.iter().map(|v| v[0]).fold(f64::MAX, f64::min);
    hi - lo
}

fn describe(name: &str, g: &Graph) {
    let d = g.diameter().unwrap();
    let flood = flood_broadcast(g, 0, d);
    let reached = flood.received_at.iter().filter(|r| r.is_some()).count();
    println!(
        "{name:<16} n={:<4} edges {:<5} diameter {d:<4} flood reaches {reached} nodes with {} messages",
        g.n(),
        g.edge_count(),
        flood.messages
    );
    let w = ConsensusWeights::metropolis_hastings(g).unwrap();
    let mut values: Vec<Vec<f64>> = (0..g.n())
        .map(|i| vec![if i == 0 { g.n() as f64 } else { 0.0 }])
        .collect();
    let rounds = (1..=5000).find(|_| {
        values = w.mix(&values).unwrap();
        spread(&values) < 1e-3
    });
    match rounds {
        Some(r) => println!(
            "{:<16} consensus within 1e-3 after {r} rounds, {} messages per round",
            "",
            2 * g.edge_count()
        ),
        None => println!("{:<16} consensus still spread after 5000 rounds", ""),
    }
}

fn main() {
    for n in [10, 50, 150] {
        describe("ring", &ring(n).unwrap());
        describe("small-world", &small_world(n, 4, 0.1, 7).unwrap());
    }
}
