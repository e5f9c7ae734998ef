use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mas_resilience::config::{ExperimentConfig, KeyValues};
use mas_resilience::harness::{self, Recovery};
use mas_resilience::logic::Formula;
use mas_resilience::net::Topology;
use mas_resilience::resilience::{check_resilience, measure, ResilienceSpec};
use mas_resilience::sim::{simulate, TrialSetup};
use mas_resilience::trace::Trace;

#[derive(Parser)]
#[command(version, about = "Resilience experiments for networked bandit agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment file; defaults apply to anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set policy.eta_epi=6`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides experiment.output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trials.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured mode and write curves.csv and metrics.csv.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write trial 0's trace per mode as JSON, plus a matching spec file.
        #[arg(long)]
        traces: bool,
    },
    /// Sweep network sizes and topologies (table2.csv), or evidence thresholds (eta.csv).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "10,150,300")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "ring,smallworld")]
        topologies: Vec<String>,
        /// Sweep η^epi over these values instead of network sizes.
        #[arg(long, value_delimiter = ',')]
        etas: Vec<f64>,
    },
    /// Run the resilience monitor on a saved trace.
    Check {
        #[arg(long)]
        trace: PathBuf,
        /// `[spec]` file with t_v, alpha1, beta1, alpha2, beta2, phi2 and optional agents.
        #[arg(long)]
        spec: PathBuf,
    },
}

type BoxError = Box<dyn std::error::Error>;

fn load(common: &Common) -> Result<ExperimentConfig, BoxError> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path, &common.set)?,
        None => ExperimentConfig::parse("", &common.set)?,
    };
    if let Some(out) = &common.out {
        config.output = out.clone();
    }
    if let Some(w) = config.budget_warning() {
        eprintln!("warning: {w}");
    }
    Ok(config)
}

fn show_recovery(r: Recovery) -> String {
    if r.censored {
        format!(">={}", r.steps)
    } else {
        r.steps.to_string()
    }
}

fn run(common: &Common, traces: bool) -> Result<(), BoxError> {
    let config = load(common)?;
    let out = harness::run_experiment(&config)?;
    harness::write_experiment(&config.output, &out)?;
    for row in harness::table2_rows(&config, &out) {
        let regret = out.results(row.mode).map_or(0.0, |rs| {
            rs.iter()
                .map(|r| r.cumulative_regret.last().copied().unwrap_or(0.0))
                .sum::<f64>()
                / rs.len() as f64
        });
        println!(
            "{:<22} regret {:>9.1}  recovery {:>6}  reward_after {:.3}  msgs {:.0}",
            row.mode.name(),
            regret,
            show_recovery(row.recovery),
            row.reward_after,
            row.msgs_total
        );
    }
    if traces {
        let setup = TrialSetup::new(&config, 0)?;
        for &mode in &config.modes {
            let (trace, _) = simulate(&config, &setup, mode)?;
            std::fs::write(
                config.output.join(format!("trace_{mode}.json")),
                trace.to_json()?,
            )?;
        }
        let post = setup.schedule.world_at(config.t_v());
        let b = config.budgets;
        let spec = format!(
            "[spec]\nt_v = {}\nalpha1 = {}\nbeta1 = {}\nalpha2 = {}\nbeta2 = {}\nphi2 = {}\n",
            config.t_v(),
            b.alpha1,
            b.beta1,
            b.alpha2,
            b.beta2,
            setup.logic.phi[post]
        );
        std::fs::write(config.output.join("spec.txt"), spec)?;
    }
    println!("wrote {}", config.output.display());
    Ok(())
}

fn sweep(
    common: &Common,
    sizes: &[usize],
    topologies: &[String],
    etas: &[f64],
) -> Result<(), BoxError> {
    let config = load(common)?;
    std::fs::create_dir_all(&config.output)?;
    if !etas.is_empty() {
        let rows = harness::eta_sweep(&config, etas)?;
        std::fs::write(config.output.join("eta.csv"), harness::eta_csv(&rows))?;
        for r in &rows {
            println!(
                "eta {:>5} {:<22} rec {:>8.1} ±{:<6.1} dur {:>8.1}",
                r.eta,
                r.mode.name(),
                r.rec_epi.0,
                r.rec_epi.1,
                r.dur_epi.0
            );
        }
    } else {
        let topos = topologies
            .iter()
            .map(|t| t.parse::<Topology>())
            .collect::<Result<Vec<_>, _>>()?;
        let rows = harness::scalability_sweep(&config, sizes, &topos)?;
        std::fs::write(config.output.join("table2.csv"), harness::table2_csv(&rows))?;
        for r in &rows {
            println!(
                "n={:<4} {:<10} {:<22} recovery {:>6}  reward {:.3}  msgs {:.0} ({:.2})",
                r.n,
                r.topology,
                r.mode.name(),
                show_recovery(r.recovery),
                r.reward_after,
                r.msgs_total,
                r.msgs_per_agent_step
            );
        }
    }
    println!("wrote {}", config.output.display());
    Ok(())
}

fn check(trace_path: &PathBuf, spec_path: &PathBuf) -> Result<(), BoxError> {
    let trace = Trace::from_json(&std::fs::read_to_string(trace_path)?)?;
    let kv = KeyValues::parse(&std::fs::read_to_string(spec_path)?)?;
    let get = |k: &str| {
        kv.get(&format!("spec.{k}"))
            .ok_or_else(|| format!("spec file is missing `{k}`"))
    };
    let num = |k: &str| -> Result<usize, BoxError> { Ok(get(k)?.parse()?) };
    let phi2: Formula = get("phi2")?.parse()?;
    let agents: Vec<usize> = match kv.get("spec.agents") {
        Some(list) => list
            .split(',')
            .map(|a| a.trim().parse())
            .collect::<Result<_, _>>()?,
        None => (1..=trace.model().n_agents()).collect(),
    };
    let t_v = num("t_v")?;
    let spec = ResilienceSpec::new(
        (num("alpha1")?, num("beta1")?, num("alpha2")?, num("beta2")?),
        phi2,
        agents,
    )?;
    let verdict = check_resilience(&trace, t_v, &spec)?;
    let m = measure(&trace, t_v, &spec.phi2, &spec.agents)?;
    println!("verdict     {verdict:?}");
    println!("dt_rec_epi  {}", m.dt_rec_epi);
    println!("dt_dur_epi  {}", m.dt_dur_epi);
    println!("dt_rec_act  {}", m.dt_rec_act);
    println!("dt_dur_act  {}", m.dt_dur_act);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, traces } => run(common, *traces),
        Command::Sweep {
            common,
            sizes,
            topologies,
            etas,
        } => sweep(common, sizes, topologies, etas),
        Command::Check { trace, spec } => check(trace, spec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
