use std::process::Command;

use mas_resilience::config::ExperimentConfig;
use mas_resilience::harness::{
    aggregate, curves_csv, mean_ci, metrics_csv, moving_average, run_experiment, total_recovery,
    write_experiment, CurveMetric,
};
use mas_resilience::policies::Mode;
use mas_resilience::sim::run_trial;

fn config(overrides: &[&str]) -> ExperimentConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::parse("", &o).unwrap()
}

fn small() -> ExperimentConfig {
    config(&[
        "experiment.trials=3",
        "experiment.horizon=1700",
        "experiment.agents=6",
    ])
}

#[test]
fn intervals_vanish_for_identical_or_single_samples() {
    assert_eq!(mean_ci(&[0.25; 7], 1.96), (0.25, 0.0));
    assert_eq!(mean_ci(&[4.0], 1.96), (4.0, 0.0));
    let c = config(&["experiment.trials=1", "experiment.horizon=1500"]);
    let r = run_trial(&c, Mode::CooperativeDucb, 0).unwrap();
    for metric in CurveMetric::ALL {
        let curve = aggregate(std::slice::from_ref(&r), metric, 50, 1.96);
        assert!(curve.ci.iter().all(|&h| h == 0.0));
        assert_eq!(curve.mean, moving_average(metric.series(&r), 50));
    }
}

#[test]
fn ci_matches_the_textbook_formula() {
    let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
    let n = xs.len() as f64;
    let mean = 5.0;
    let s = (xs.iter().map(|x: &f64| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let (m, h) = mean_ci(&xs, 1.96);
    assert_eq!(m, mean);
    assert!((h - 1.96 * s / n.sqrt()).abs() < 1e-12);
}

#[test]
fn csv_outputs_cover_every_mode_and_metric() {
    let c = small();
    let out = run_experiment(&c).unwrap();
    let curves = curves_csv(&out.curves());
    let mut lines = curves.lines();
    assert_eq!(lines.next(), Some("step,mode,metric,mean,ci"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5 * 4 * c.horizon);
    for mode in Mode::ALL {
        for metric in CurveMetric::ALL {
            let n = rows
                .iter()
                .filter(|r| r[1] == mode.name() && r[2] == metric.name())
                .count();
            assert_eq!(n, c.horizon, "{mode} {}", metric.name());
        }
    }
    assert!(rows
        .iter()
        .all(|r| r.len() == 5 && r[3].parse::<f64>().is_ok() && r[4].parse::<f64>().is_ok()));

    let metrics = metrics_csv(&out);
    let mut lines = metrics.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 13);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5 * c.trials);
    for r in &rows {
        assert_eq!(r.len(), 13);
        assert_eq!(r[2], "1400");
        let mode: Mode = r[0].parse().unwrap();
        let censored_rec = r[8] == "1";
        let res = out.results(mode).unwrap();
        let trial: usize = r[1].parse().unwrap();
        assert_eq!(censored_rec, res[trial].metrics.dt_rec_epi.is_infinite());
        if censored_rec {
            // A censored interval reports what was observed.
            assert_eq!(r[4], (c.horizon - 1400).to_string());
        }
    }
    // Baselines never form knowledge, so their epistemic recovery is censored.
    assert!(rows
        .iter()
        .filter(|r| r[0] == "independent_ducb")
        .all(|r| r[8] == "1"));
}

#[test]
fn reruns_write_identical_files() {
    let c = small();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_experiment(a.path(), &run_experiment(&c).unwrap()).unwrap();
    write_experiment(b.path(), &run_experiment(&c).unwrap()).unwrap();
    for f in ["metrics.csv", "curves.csv", "config.txt"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn recovery_is_censored_when_the_curve_never_returns() {
    let c = config(&[
        "experiment.trials=2",
        "experiment.horizon=1700",
        "experiment.modes=independent_ducb",
    ]);
    let out = run_experiment(&c).unwrap();
    let rec = total_recovery(
        out.results(Mode::IndependentDucb).unwrap(),
        c.t_v(),
        0.02,
        50,
    );
    assert!(rec.censored);
    assert_eq!(rec.steps, 300);
    assert!(total_recovery(&[], 10, 0.02, 50).censored);
}

#[test]
fn tight_change_spacing_warns() {
    let c = config(&[
        "environment.changes=1000:1,1600:0",
        "environment.min_gap=600",
    ]);
    assert!(c.budget_warning().unwrap().contains("600"));
    assert!(config(&[]).budget_warning().is_none());
    assert!(ExperimentConfig::parse("", &["policy.e_th=40".into()]).is_err());
    assert!(ExperimentConfig::parse("", &["policy.nope=1".into()]).is_err());
}

#[test]
fn cli_runs_and_checks_a_saved_trace() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_mas-resilience");
    let run = Command::new(bin)
        .args([
            "run",
            "--traces",
            "--set",
            "experiment.trials=2",
            "--set",
            "experiment.horizon=1700",
        ])
        .args([
            "--set",
            "experiment.modes=cooperative_kripke,independent_ducb",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("cooperative_kripke") && stdout.contains("wrote"));
    for f in [
        "curves.csv",
        "metrics.csv",
        "spec.txt",
        "trace_cooperative_kripke.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let check = Command::new(bin)
        .args(["check", "--trace"])
        .arg(dir.path().join("trace_cooperative_kripke.json"))
        .arg("--spec")
        .arg(dir.path().join("spec.txt"))
        .output()
        .unwrap();
    assert!(
        check.status.success(),
        "{}",
        String::from_utf8_lossy(&check.stderr)
    );
    let text = String::from_utf8_lossy(&check.stdout);
    assert!(text.starts_with("verdict"));
    assert!(text.contains("dt_rec_epi"));

    let bad = Command::new(bin)
        .args(["run", "--set", "policy.window=0"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
