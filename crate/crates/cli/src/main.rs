use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use synclust::baselines::{dbscan, kmeans, DbscanParams};
use synclust::csvio::{read_points_file, write_labels, write_points, write_snapshots};
use synclust::datagen::{generate_dataset, GenSpec};
use synclust::esync::{validate_deltas, DEFAULT_EPSILON, DEFAULT_MAX_ITERS};
use synclust::report::{Report, ReportParams};
use synclust::{
    esync_run, iesync_run, msync_run, ssync_run_with, Error, Model, ModelParams, RunOptions,
    ShrinkOptions, StateVector,
};

#[derive(Parser)]
#[command(name = "synclust", version, about = "Clustering by synchronization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic blob data set.
    Gen(GenArgs),
    /// Cluster one data set and write a JSON report.
    Run(RunArgs),
    /// Cluster counts over a range of δ values.
    Sweep(SweepArgs),
    /// Run several algorithms over several δ values and tabulate the work done.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Named preset, ds1 to ds12.
    #[arg(long, conflicts_with_all = ["nc", "cs", "d"])]
    preset: Option<String>,
    /// Number of clusters.
    #[arg(long)]
    nc: Option<usize>,
    /// Cluster semidiameter.
    #[arg(long)]
    cs: Option<f64>,
    /// Dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Add uniform noise points.
    #[arg(long)]
    noise: bool,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Data CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truth labels, one per line, -1 for noise.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Esync,
    Iesync,
    Ssync,
    Msync,
    Dbscan,
    Kmeans,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Esync => "esync",
            Algo::Iesync => "iesync",
            Algo::Ssync => "ssync",
            Algo::Msync => "msync",
            Algo::Dbscan => "dbscan",
            Algo::Kmeans => "kmeans",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Lv,
    Ek,
    Ov,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Lv => Model::LinearVicsek,
            ModelArg::Ek => Model::ExtensiveKuramoto,
            ModelArg::Ov => Model::OriginalVicsek,
        }
    }
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long, value_enum, default_value = "lv")]
    model: ModelArg,
    /// Points closer than this are merged or share a cluster.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Grid cell side, one value for all dimensions or one per dimension.
    #[arg(long, value_delimiter = ',')]
    grid_r: Option<Vec<f64>>,
    /// Subsections for msync.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cluster count for kmeans.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 4)]
    min_pts: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Neighborhood radius; eps for dbscan.
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    input: PathBuf,
    /// Report JSON; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Directory for per-step coordinate files (esync and iesync).
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "esync")]
    algo: Algo,
    /// Explicit δ values, ascending.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "step"])]
    deltas: Option<Vec<f64>>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "esync,iesync,ssync"
    )]
    algos: Vec<Algo>,
    #[arg(long, value_delimiter = ',', required = true)]
    deltas: Vec<f64>,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_)
        | Error::DimensionMismatch { .. }
        | Error::GridCapExceeded { .. } => 2,
        Error::Io(_) | Error::Parse { .. } | Error::Json(_) => 3,
        Error::InfeasibleSpec(_) => 4,
        Error::IndexCorruption(_) => 1,
    }
}

fn config(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn sink(path: Option<&Path>) -> synclust::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn configure_threads() {
    if let Ok(v) = std::env::var("SYNC_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn cmd_gen(a: GenArgs) -> synclust::Result<()> {
    let spec = match &a.preset {
        Some(name) => {
            let mut spec = GenSpec::preset(name, a.n, a.seed)?;
            spec.with_noise |= a.noise;
            spec
        }
        None => {
            let (Some(nc), Some(cs), Some(d)) = (a.nc, a.cs, a.d) else {
                return Err(config(
                    "either --preset or all of --nc, --cs and --d are required",
                ));
            };
            GenSpec::new(nc, a.noise, cs, d, a.n, a.seed)
        }
    };
    let set = generate_dataset(&spec)?;
    let mut out = sink(a.out.as_deref())?;
    write_points(&mut out, &set.points)?;
    out.flush()?;
    if let Some(path) = &a.truth_out {
        let labels: Vec<i64> = set.truth.iter().map(|&l| l as i64).collect();
        let mut w = BufWriter::new(File::create(path)?);
        write_labels(&mut w, &labels)?;
        w.flush()?;
    }
    Ok(())
}

fn grid_lengths(r: &Option<Vec<f64>>, dim: usize) -> synclust::Result<Vec<f64>> {
    let r = r
        .as_ref()
        .ok_or_else(|| config("--grid-r is required for iesync"))?;
    match r.len() {
        1 => Ok(vec![r[0]; dim]),
        l if l == dim => Ok(r.clone()),
        l => Err(config(format!("--grid-r takes 1 or {dim} values, got {l}"))),
    }
}

struct Outcome {
    report: Report,
    snapshots: Vec<StateVector>,
    final_ave_len: f64,
}

fn execute(
    algo: Algo,
    delta: Option<f64>,
    e: &EngineArgs,
    data: &StateVector,
    snapshots: bool,
) -> synclust::Result<Outcome> {
    let mut params = ReportParams {
        delta,
        seed: Some(e.seed),
        ..Default::default()
    };
    let needs_delta =
        || delta.ok_or_else(|| config(format!("--delta is required for {}", algo.name())));
    if snapshots && !matches!(algo, Algo::Esync | Algo::Iesync) {
        return Err(config("snapshots are recorded by esync and iesync only"));
    }
    let opts = RunOptions {
        model: e.model.into(),
        max_iters: e.max_iters,
        epsilon_cluster: e.epsilon,
        record_snapshots: snapshots,
        ..RunOptions::default()
    };
    Ok(match algo {
        Algo::Esync | Algo::Iesync => {
            let mp = ModelParams::new(needs_delta()?)?;
            params.epsilon = Some(e.epsilon);
            let run = if algo == Algo::Esync {
                esync_run(data, &mp, &opts)?
            } else {
                if !matches!(e.model, ModelArg::Lv) {
                    return Err(config("iesync supports the lv model only"));
                }
                let r = grid_lengths(&e.grid_r, data.dim())?;
                params.grid_r = Some(r.clone());
                iesync_run(data, &mp, &opts, &r)?
            };
            Outcome {
                report: Report::from_run(algo.name(), &run, params),
                final_ave_len: run.final_ave_len(),
                snapshots: run.snapshots,
            }
        }
        Algo::Ssync | Algo::Msync => {
            if !matches!(e.model, ModelArg::Lv) {
                return Err(config(format!(
                    "{} supports the lv model only",
                    algo.name()
                )));
            }
            let so = ShrinkOptions::new(needs_delta()?, e.epsilon, e.max_iters)?;
            params.epsilon = Some(e.epsilon);
            let run = if algo == Algo::Ssync {
                ssync_run_with(data, &so)?
            } else {
                let m = e.m.ok_or_else(|| config("--m is required for msync"))?;
                params.m = Some(m);
                msync_run(data, m, e.seed, &so)?
            };
            Outcome {
                report: Report::from_ssync(algo.name(), &run, params),
                final_ave_len: run.per_iter.last().map_or(0.0, |s| s.ave_len),
                snapshots: Vec::new(),
            }
        }
        Algo::Dbscan => {
            let p = DbscanParams {
                eps: needs_delta()?,
                min_pts: e.min_pts,
            };
            Outcome {
                report: Report::from_dbscan(&dbscan(data, &p)?, data, params),
                final_ave_len: f64::NAN,
                snapshots: Vec::new(),
            }
        }
        Algo::Kmeans => {
            let k = e.k.ok_or_else(|| config("--k is required for kmeans"))?;
            Outcome {
                report: Report::from_kmeans(&kmeans(data, k, e.seed, e.max_iters)?, params),
                final_ave_len: f64::NAN,
                snapshots: Vec::new(),
            }
        }
    })
}

fn cmd_run(a: RunArgs) -> synclust::Result<()> {
    let data = read_points_file(&a.input)?;
    let outcome = execute(a.algo, a.delta, &a.engine, &data, a.snapshots.is_some())?;
    if let Some(dir) = &a.snapshots {
        write_snapshots(dir, &outcome.snapshots)?;
    }
    let mut out = sink(a.output.as_deref())?;
    writeln!(out, "{}", outcome.report.to_json()?)?;
    out.flush()?;
    Ok(())
}

fn sweep_deltas(a: &SweepArgs) -> synclust::Result<Vec<f64>> {
    let deltas = match (&a.deltas, a.from, a.to) {
        (Some(d), _, _) => d.clone(),
        (None, Some(from), Some(to)) => {
            if a.step.is_nan() || a.step <= 0.0 {
                return Err(config("--step must be positive"));
            }
            let count = ((to - from) / a.step + 1e-9).floor();
            if count.is_nan() || count < 0.0 {
                return Err(config("--to must not be below --from"));
            }
            (0..=count as usize)
                .map(|i| from + i as f64 * a.step)
                .collect()
        }
        _ => return Err(config("give --deltas or both --from and --to")),
    };
    validate_deltas(&deltas)?;
    Ok(deltas)
}

fn cmd_sweep(a: SweepArgs) -> synclust::Result<()> {
    if matches!(a.algo, Algo::Dbscan | Algo::Kmeans) {
        return Err(config("sweep runs the synchronization engines only"));
    }
    let deltas = sweep_deltas(&a)?;
    let data = read_points_file(&a.input)?;
    let mut out = sink(a.output.as_deref())?;
    writeln!(out, "delta,clusters,iterations")?;
    for delta in deltas {
        let o = execute(a.algo, Some(delta), &a.engine, &data, false)?;
        writeln!(
            out,
            "{},{},{}",
            delta,
            o.report.clusters.len(),
            o.report.iterations
        )?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> synclust::Result<()> {
    let data = read_points_file(&a.input)?;
    let mut out = sink(a.output.as_deref())?;
    writeln!(
        out,
        "algo,model,delta,iterations,clusters,converged,final_ave_len,distance_evals,active_counts,wall_time_ms"
    )?;
    for &delta in &a.deltas {
        for &algo in &a.algos {
            let start = Instant::now();
            let o = execute(algo, Some(delta), &a.engine, &data, false)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let r = &o.report;
            let active: Vec<String> = r.active_counts.iter().map(usize::to_string).collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{:.3}",
                r.algo,
                r.model.as_deref().unwrap_or(""),
                delta,
                r.iterations,
                r.clusters.len(),
                r.converged,
                o.final_ave_len,
                r.counters.distance_evals,
                active.join(";"),
                ms
            )?;
        }
    }
    out.flush()?;
    Ok(())
}
