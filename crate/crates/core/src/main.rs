use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use adbb::adbb::BbVariant;
use adbb::harness::{exit_code, run_experiment, Algorithm, ExperimentConfig, Problem, Topology};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProblemArg {
    Synthetic,
    Mushroom,
    Quadratic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgoArg {
    Adbb,
    Frost,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BbArg {
    #[value(name = "1")]
    Long,
    #[value(name = "2")]
    Short,
}

/// Run ADBB or FROST on a simulated directed network.
#[derive(Debug, Parser)]
#[command(name = "adbb", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "synthetic")]
    problem: ProblemArg,

    /// Mushroom data file (UCI agaricus-lepiota format).
    #[arg(long, default_value = "data/agaricus-lepiota.data")]
    data: PathBuf,

    /// `ten`, `twenty`, `random`, or an edge-list file. Defaults to the
    /// fixture matching `--m` (10 or 20 agents), otherwise `random`.
    #[arg(long)]
    topology: Option<String>,

    /// Extra-edge probability for random topologies.
    #[arg(long, default_value_t = 0.2)]
    density: f64,

    #[arg(long, default_value_t = 10)]
    m: usize,

    #[arg(long, default_value_t = 100)]
    n: usize,

    /// Total synthetic training samples.
    #[arg(long = "N", default_value_t = 1000)]
    samples: usize,

    #[arg(long, value_enum, default_value = "adbb")]
    algo: AlgoArg,

    /// Consensus rounds per variable per iteration.
    #[arg(long = "H", default_value_t = 5)]
    inner_loops: usize,

    #[arg(long, default_value_t = 1.2)]
    alpha0: f64,

    /// Barzilai-Borwein quotient: 1 = long step, 2 = short step.
    #[arg(long, value_enum, default_value = "1")]
    bb: BbArg,

    #[arg(long, default_value_t = 0.1)]
    beta: f64,

    #[arg(long, default_value_t = 1000)]
    max_iters: usize,

    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Keep the mushroom file order for the train/test split.
    #[arg(long)]
    file_order: bool,

    /// Output directory for trace, theory and classification files.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Run several inner-loop counts, e.g. `H=1,3,5,10`.
    #[arg(long, value_parser = parse_sweep)]
    sweep: Option<Sweep>,

    /// Add the certified inner-loop count and the empirical contraction check
    /// to the theory report.
    #[arg(long)]
    theory_check: bool,
}

#[derive(Debug, Clone)]
struct Sweep(Vec<usize>);

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let list = s.strip_prefix("H=").unwrap_or(s);
    list.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("bad inner-loop count {v:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Sweep)
}

fn topology(cli: &Cli) -> Topology {
    match cli.topology.as_deref() {
        Some("ten") => Topology::TenAgents,
        Some("twenty") => Topology::TwentyAgents,
        Some("random") => Topology::Random { density: cli.density },
        Some(path) => Topology::File(PathBuf::from(path)),
        None => match cli.m {
            10 => Topology::TenAgents,
            20 => Topology::TwentyAgents,
            _ => Topology::Random { density: cli.density },
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = ExperimentConfig {
        problem: match cli.problem {
            ProblemArg::Synthetic => Problem::Synthetic,
            ProblemArg::Mushroom => Problem::Mushroom(cli.data.clone()),
            ProblemArg::Quadratic => Problem::Quadratic,
        },
        topology: topology(&cli),
        algorithm: match cli.algo {
            AlgoArg::Adbb => Algorithm::Adbb,
            AlgoArg::Frost => Algorithm::Frost,
        },
        agents: cli.m,
        dim: cli.n,
        samples: cli.samples,
        inner_loops: cli.inner_loops,
        alpha0: cli.alpha0,
        bb_variant: match cli.bb {
            BbArg::Long => BbVariant::Bb1,
            BbArg::Short => BbVariant::Bb2,
        },
        beta: cli.beta,
        max_iters: cli.max_iters,
        residual_tol: cli.tol,
        seed: cli.seed,
        file_order: cli.file_order,
        output: cli.out.clone(),
        sweep: cli.sweep.clone().map(|s| s.0).unwrap_or_default(),
        theory_check: cli.theory_check,
    };
    let result = run_experiment(&cfg);
    match &result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if cli.out.is_none() {
                print!("{}", outcome.theory);
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
