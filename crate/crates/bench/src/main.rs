use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use psd_bench::report::{write_csv, write_csv_file, write_json_file};
use psd_bench::{run_experiment, run_timing, ExperimentConfig, Scenario};
use psd_cholesky::cholesky::{reduced_cholesky_direct, reduced_cholesky_spectral};
use psd_cholesky::psd_geometry::{distance_s, frechet_mean_s, geodesic_s, log_s, parallel_transport_s};
use psd_cholesky::{Matrix, Method, ProjectorNorm, PsdTangent, Restricted};

#[derive(Parser)]
#[command(name = "bench", version, about = "Distributed eigenspace benchmarks and PSD geometry tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score the estimators over replicated synthetic experiments.
    Run(RunArgs),
    /// Wall-clock comparison of the estimators on noisy matrices.
    Timing(TimingArgs),
    /// Geometry operations on matrices stored in text files.
    #[command(subcommand)]
    Geo(GeoCommand),
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: psd_cholesky::Error| e.to_string())
}

fn parse_norm(s: &str) -> Result<ProjectorNorm, String> {
    s.parse().map_err(|e: psd_cholesky::Error| e.to_string())
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    scenario: Scenario,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    m: usize,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: f64,
    /// Samples per site (random-vector only).
    #[arg(long, default_value_t = 0)]
    l: usize,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Comma-separated subset of lrc,dpca,eigv,fpca. Defaults to every
    /// method the scenario supports.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long, value_parser = parse_norm, default_value = "spectral")]
    norm: ProjectorNorm,
    #[arg(long)]
    out: PathBuf,
    /// Also write rows and per-replicate trials as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write zero for every time so that output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,200,500")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "lrc,dpca,eigv")]
    methods: Vec<Method>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Direct,
    Spectral,
}

#[derive(Subcommand)]
enum GeoCommand {
    /// Reduced Cholesky factor of a rank-p PSD matrix.
    Factorize {
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_enum, default_value = "direct")]
        route: Route,
    },
    /// Point at time t on the geodesic from A to B.
    Geodesic {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
    },
    /// Fréchet mean of several matrices.
    Mean {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Parallel transport of a tangent matrix from P to Q.
    Transport {
        from: PathBuf,
        to: PathBuf,
        tangent: PathBuf,
        #[arg(long)]
        rank: usize,
    },
    /// Geodesic distance between two matrices.
    Distance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        rank: usize,
    },
}

fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.parse().with_context(|| format!("cannot parse {}", path.display()))
}

fn read_point(path: &Path, rank: usize) -> Result<Restricted> {
    Restricted::new(read_matrix(path)?, rank).with_context(|| format!("{} is not a valid rank-{rank} point", path.display()))
}

fn geo(cmd: GeoCommand, out: &mut impl Write) -> Result<()> {
    match cmd {
        GeoCommand::Factorize { input, rank, route } => {
            let m = read_matrix(&input)?;
            let f = match route {
                Route::Direct => reduced_cholesky_direct(&m, rank)?,
                Route::Spectral => reduced_cholesky_spectral(&m, rank)?,
            };
            write!(out, "{}", f.as_matrix())?;
        }
        GeoCommand::Geodesic { a, b, rank, t } => {
            let (a, b) = (read_point(&a, rank)?, read_point(&b, rank)?);
            write!(out, "{}", geodesic_s(&a, &log_s(&a, &b)?, t)?.matrix())?;
        }
        GeoCommand::Mean { inputs, rank, weights } => {
            let points = inputs.iter().map(|p| read_point(p, rank)).collect::<Result<Vec<_>>>()?;
            write!(out, "{}", frechet_mean_s(&points, weights.as_deref())?.matrix())?;
        }
        GeoCommand::Transport { from, to, tangent, rank } => {
            let (p, q) = (read_point(&from, rank)?, read_point(&to, rank)?);
            let w = PsdTangent::new(&p, read_matrix(&tangent)?)?;
            write!(out, "{}", parallel_transport_s(&p, &q, &w)?.matrix())?;
        }
        GeoCommand::Distance { a, b, rank } => {
            writeln!(out, "{:e}", distance_s(&read_point(&a, rank)?, &read_point(&b, rank)?)?)?;
        }
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let methods = args.methods.unwrap_or_else(|| match args.scenario {
        Scenario::NoisyMatrix => vec![Method::Lrc, Method::Dpca, Method::EigvAve],
        Scenario::RandomVector => Method::ALL.to_vec(),
    });
    let config = ExperimentConfig {
        scenario: args.scenario,
        n: args.n,
        k: args.k,
        m: args.m,
        sigma: args.sigma,
        l: args.l,
        replicates: args.replicates,
        seed: args.seed,
        methods,
        norm: args.norm,
    };
    let mut outcome = match args.threads {
        Some(0) => bail!("--threads must be positive"),
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(|| run_experiment(&config))?,
        None => run_experiment(&config)?,
    };
    if args.no_timing {
        outcome = outcome.without_times();
    }
    write_csv_file(&outcome.rows, &args.out)?;
    if let Some(path) = args.json {
        write_json_file(&outcome, &path)?;
    }
    write_csv(&outcome.rows, io::stdout().lock())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(args),
        Command::Timing(args) => {
            let rows = run_timing(&args.n, args.m, args.replicates, args.seed, &args.methods)?;
            write_csv_file(&rows, &args.out)?;
            write_csv(&rows, io::stdout().lock())
        }
        Command::Geo(cmd) => geo(cmd, &mut io::stdout().lock()),
    }
}
