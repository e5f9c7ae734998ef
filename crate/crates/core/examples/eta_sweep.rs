//! Epistemic recovery against the evidence threshold for the two
//! Kripke variants that differ in how evidence is shared.

use mas_resilience::config::ExperimentConfig;
use mas_resilience::harness::eta_sweep;
use mas_resilience::policies::Mode;

fn main() {
    let config = ExperimentConfig {
        modes: vec![Mode::LightCoopKripke, Mode::CooperativeKripke],
        ..Default::default()
    };
    let rows = eta_sweep(&config, &[2.0, 4.0, 6.0, 10.0, 14.0, 20.0]).unwrap();
    println!(
        "{:>5} {:<20} {:>16} {:>16}",
        "eta", "mode", "recovery", "durability"
    );
    for r in rows {
        println!(
            "{:>5} {:<20} {:>8.1} ± {:<5.1} {:>8.1} ± {:<5.1}",
            r.eta,
            r.mode.name(),
            r.rec_epi.0,
            r.rec_epi.1,
            r.dur_epi.0,
            r.dur_epi.1
        );
    }
}
