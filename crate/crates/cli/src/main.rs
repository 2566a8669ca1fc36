use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use graphstate::pipeline::{self, DegreeMode, Model, RunConfig};
use graphstate::state::ClusterOn;

#[derive(Parser)]
#[command(
    name = "graphstate",
    version,
    about = "Learn latent states of a time-varying graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build snapshots, extract features, cluster into states and write outputs.
    Run(RunArgs),
    /// Generate a synthetic edge stream with planted events.
    Synth(SynthArgs),
    /// Score a state sequence against synthetic ground truth.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Discrete,
    Prob,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClusterOnArg {
    Detrended,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum DenominatorArg {
    Active,
    Global,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Edge list CSV with `src,dst,timestamp` rows.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "prob")]
    model: ModelArg,
    /// Discrete window length in days.
    #[arg(long)]
    delta_days: Option<f64>,
    /// Mean edge lifetime in days for the probabilistic model.
    #[arg(long)]
    tau_days: Option<f64>,
    /// Probability below which decayed edges are dropped.
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long, default_value_t = 7)]
    k: usize,
    #[arg(long, env = "GRAPHSTATE_SEED", default_value_t = 42)]
    seed: u64,
    /// KMeans runs with consecutive seeds; the lowest inertia wins.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, value_enum, default_value = "detrended")]
    cluster_on: ClusterOnArg,
    /// Cluster on unscaled features.
    #[arg(long)]
    no_standardize: bool,
    #[arg(long, value_enum, default_value = "active")]
    degree_denominator: DenominatorArg,
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write snapshots.jsonl.
    #[arg(long)]
    dump_snapshots: bool,
}

#[derive(clap::Args)]
struct SynthArgs {
    /// JSON generator config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "edges.csv")]
    edges: PathBuf,
    #[arg(long, default_value = "truth.csv")]
    truth: PathBuf,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    states: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// The generator config that produced the truth file.
    #[arg(long)]
    config: PathBuf,
}

fn run_config(args: RunArgs) -> RunConfig {
    let mut cfg = RunConfig::new(args.input, args.out_dir);
    cfg.model = match args.model {
        ModelArg::Discrete => Model::Discrete,
        ModelArg::Prob => Model::Prob,
    };
    let ignored = match cfg.model {
        Model::Discrete => [
            ("--tau-days", args.tau_days.is_some()),
            ("--cutoff", args.cutoff.is_some()),
        ]
        .into_iter()
        .filter_map(|(flag, set)| set.then_some(flag))
        .collect::<Vec<_>>(),
        Model::Prob => args
            .delta_days
            .map(|_| vec!["--delta-days"])
            .unwrap_or_default(),
    };
    for flag in ignored {
        eprintln!("warning: {flag} has no effect with the selected model");
    }
    if let Some(v) = args.delta_days {
        cfg.delta_days = v;
    }
    if let Some(v) = args.tau_days {
        cfg.tau_days = v;
    }
    if let Some(v) = args.cutoff {
        cfg.cutoff = v;
    }
    cfg.k = args.k;
    cfg.seed = args.seed;
    cfg.restarts = args.restarts;
    cfg.cluster_on = match args.cluster_on {
        ClusterOnArg::Detrended => ClusterOn::Detrended,
        ClusterOnArg::Raw => ClusterOn::Raw,
    };
    cfg.standardize = !args.no_standardize;
    cfg.degree_denominator = match args.degree_denominator {
        DenominatorArg::Active => DegreeMode::Active,
        DenominatorArg::Global => DegreeMode::Global,
    };
    cfg.dump_snapshots = args.dump_snapshots;
    cfg
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = run_config(args);
            let analysis = pipeline::run_pipeline(&cfg)?;
            eprintln!(
                "{} snapshots, {} states, inertia {}, outputs in {}",
                analysis.snapshots.len(),
                analysis.model.k,
                graphstate::format::sig(analysis.model.inertia),
                cfg.out_dir.display()
            );
        }
        Command::Synth(args) => {
            let cfg = pipeline::read_synth_config(&args.config)
                .with_context(|| format!("loading {}", args.config.display()))?;
            let stream = pipeline::run_synth(&cfg, &args.edges, &args.truth)?;
            eprintln!("{} edges over {} days", stream.len(), cfg.n_days);
        }
        Command::Eval(args) => {
            let cfg = pipeline::read_synth_config(&args.config)
                .with_context(|| format!("loading {}", args.config.display()))?;
            let report = pipeline::run_eval(&args.states, &args.truth, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
