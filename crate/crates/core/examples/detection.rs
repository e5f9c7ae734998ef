//! Change detection on one agent's reward stream: the exceedance window
//! fires after the shift, then pairwise evidence picks the new world.

use mas_resilience::env::{make_catalog, ChangeRule, RewardSampler};
use mas_resilience::rng::{stream, Purpose};
use mas_resilience::sensing::{residual, EvidenceLedger, ResidualWindow};

fn main() {
    let sigma = 1.0;
    let catalog = make_catalog(3, 16, 3, ChangeRule::Reverse).unwrap();
    let sampler = RewardSampler { sigma };
    let mut rng = stream(3, 0, 1, Purpose::Reward);
    let change = 300;
    // The agent keeps pulling world 0's best arm until it notices.
    let arm = catalog.optimal_arms(0)[0];
    println!(
        "arm {arm}: mean {:.2} before, {:.2} after",
        catalog.mean(0, arm),
        catalog.mean(1, arm)
    );

    let mut window = ResidualWindow::new(1.6, 30, 13).unwrap();
    let mut detected = None;
    for t in 0..1000 {
        let world = usize::from(t >= change);
        let y = sampler.sample(&catalog, world, arm, &mut rng);
        window.update(residual(y, catalog.mean(0, arm)));
        if window.detect() {
            detected = Some(t);
            break;
        }
    }
    let Some(t_det) = detected else {
        println!("no detection within 1000 steps");
        return;
    };
    println!(
        "window fired at step {t_det} ({} after the change)",
        t_det as i64 - change as i64
    );

    let mut ledger = EvidenceLedger::new(vec![0, 1, 2], t_det, 10.0).unwrap();
    let mut t = t_det + 1;
    while !ledger.should_stop() {
        let a = t % catalog.n_arms();
        ledger.update(a, sampler.sample(&catalog, 1, a, &mut rng), &catalog, sigma);
        t += 1;
    }
    let (world, score) = ledger.best();
    println!(
        "evidence settled on world {world} with score {score:.2} after {} samples",
        t - t_det - 1
    );
    for a in 0..3 {
        let row: Vec<String> = (0..3)
            .map(|b| format!("{:>7.2}", ledger.get(a, b)))
            .collect();
        println!("  {}", row.join(" "));
    }
}
