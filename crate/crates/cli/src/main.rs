//! `rl1`: recovery, Monte Carlo experiments and theory checks.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 a solve did not converge,
//! 3 a verification check failed.

mod config;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reweight_l1::bench::{
    self, CompressibleConfig, CompressibleSummary, SparseGridConfig, SparseGridSummary, TrialRecord,
};
use reweight_l1::{io, Error, MeasurementSet, Method};
use serde::Serialize;

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "rl1", version, about = "Sparse recovery by weighted and reweighted l1 minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recover a signal from a matrix and measurement file.
    Recover(RecoverArgs),
    /// Exact-recovery sweep over (n, k) with sparse signals.
    SparseGrid(SparseGridArgs),
    /// MSE comparison on power-law compressible signals.
    Compressible(CompressibleArgs),
    /// Theory spot checks, brute-force RIP and the intersection simulator.
    Verify(verify::VerifyArgs),
    /// Solver checks on seeded random instances.
    Selftest(SelftestArgs),
    /// Write a random sensing matrix, sparse signal and measurements.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct RecoverArgs {
    /// l1, irl1 or sdrl1.
    #[arg(long)]
    method: String,
    /// Sensing matrix (binary dense format).
    #[arg(long)]
    matrix: PathBuf,
    /// Measurement vector (binary dense format).
    #[arg(long)]
    y: PathBuf,
    /// Noise bound; 0 selects the equality-constrained solver.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Output path for the recovered signal; diagnostics go to `<out>.json`.
    #[arg(long)]
    out: PathBuf,
    /// TOML file with outer-loop and solver settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Relative-change stopping threshold.
    #[arg(long)]
    tol: Option<f64>,
    /// Maximum number of outer iterations.
    #[arg(long)]
    max_outer: Option<usize>,
    /// Fixed SDRL1 support-size cap.
    #[arg(long)]
    k_hat: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML file with the experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of trials per grid point.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Methods to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Relative l2 error below which a trial counts as exact recovery.
    #[arg(long)]
    recovery_tol: Option<f64>,
    /// Fill the wall_ms column. Timed CSVs are not reproducible.
    #[arg(long)]
    record_timing: bool,
    /// Worker threads.
    #[arg(long, env = "RL1_WORKERS")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

impl RunArgs {
    fn apply(&self, trials: &mut usize, seed: &mut u64, tol: &mut f64, timing: &mut bool) {
        if let Some(t) = self.trials {
            *trials = t;
        }
        if let Some(s) = self.seed {
            *seed = s;
        }
        if let Some(t) = self.recovery_tol {
            *tol = t;
        }
        // A config file may enable timing; the flag can only add it.
        *timing |= self.record_timing;
    }
}

#[derive(Args, Debug)]
struct SparseGridArgs {
    /// Signal dimension.
    #[arg(long = "N")]
    dim: Option<usize>,
    /// Measurement fractions n/N, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_fractions: Option<Vec<f64>>,
    /// Sparsity ratios k/n, comma separated.
    #[arg(long, value_delimiter = ',')]
    k_over_n: Option<Vec<f64>>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct CompressibleArgs {
    /// Signal dimension.
    #[arg(long = "N")]
    dim: Option<usize>,
    /// Measurement fraction n/N.
    #[arg(long = "n-over-N")]
    n_over_n: Option<f64>,
    /// Decay powers, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Decay scale.
    #[arg(long)]
    c: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Number of random instances.
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long = "N")]
    dim: usize,
    #[arg(long)]
    n: usize,
    /// Number of nonzeros.
    #[arg(long)]
    k: usize,
    /// Norm of the additive noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for A.bin, x.bin and y.bin.
    #[arg(long)]
    out: PathBuf,
}

/// Error carrying the process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Recover(a) => recover(a),
        Command::SparseGrid(a) => sparse_grid(a),
        Command::Compressible(a) => compressible(a),
        Command::Verify(a) => verify::run(a),
        Command::Selftest(a) => selftest(a),
        Command::Generate(a) => generate(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("rl1: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct IterationDiagnostics {
    iteration: usize,
    relative_change: Option<f64>,
    objective: f64,
    feasibility_gap: f64,
    inner_iterations: usize,
    inner_converged: bool,
    s_t: Option<usize>,
    /// 1-based.
    weighted_support: Option<Vec<usize>>,
    /// 1-based.
    omega: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct RecoverDiagnostics<'a> {
    method: Method,
    converged: bool,
    outer_iterations: usize,
    k_hat: Option<usize>,
    epsilon: f64,
    residual_norm: f64,
    solution_norm: f64,
    nonzeros: usize,
    config: &'a reweight_l1::OuterConfig,
    iterations: Vec<IterationDiagnostics>,
}

fn recover(args: RecoverArgs) -> CmdResult {
    let method: Method = args.method.parse()?;
    let mut cfg = config::load_outer(args.config.as_deref())?;
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(m) = args.max_outer {
        cfg.max_outer = m;
    }
    if args.k_hat.is_some() {
        cfg.k_hat_override = args.k_hat;
    }
    let a = io::read_matrix(&args.matrix)
        .map_err(|e| Failure::usage(format!("{}: {}", args.matrix.display(), e)))?;
    let y = io::read_vector(&args.y).map_err(|e| Failure::usage(format!("{}: {}", args.y.display(), e)))?;
    if y.len() != a.rows() {
        return Err(Failure::usage(format!(
            "dimension mismatch: matrix {} is {}x{} but measurement {} has length {}",
            args.matrix.display(),
            a.rows(),
            a.cols(),
            args.y.display(),
            y.len()
        )));
    }
    let m = MeasurementSet::new(y, args.eps)?;
    let res = method.run(&a, &m, &cfg)?;

    io::write_vector(&args.out, res.solution.as_slice())?;
    let residual = reweight_l1::wbpdn::residual_norm(&a, &res.solution, &m.y);
    let diag = RecoverDiagnostics {
        method,
        converged: res.converged,
        outer_iterations: res.outer_iterations,
        k_hat: res.k_hat,
        epsilon: m.epsilon,
        residual_norm: residual,
        solution_norm: res.solution.norm2(),
        nonzeros: res.solution.count_nonzero(),
        config: &cfg,
        iterations: res
            .trace
            .iter()
            .map(|r| IterationDiagnostics {
                iteration: r.iteration,
                relative_change: r.relative_change.is_finite().then_some(r.relative_change),
                objective: r.objective,
                feasibility_gap: r.feasibility_gap,
                inner_iterations: r.inner_iterations,
                inner_converged: r.inner_converged,
                s_t: r.s_t,
                weighted_support: r.weighted_support.as_ref().map(|s| s.to_one_based()),
                omega: r.omega.as_ref().map(|s| s.to_one_based()),
            })
            .collect(),
    };
    write_json(&sidecar_path(&args.out), &diag)?;
    println!(
        "{}: {} outer iterations, {} nonzeros, residual {:.3e}, {}",
        method,
        res.outer_iterations,
        diag.nonzeros,
        residual,
        if res.converged { "converged" } else { "NOT converged" }
    );
    Ok(if res.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::usage(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Failure::usage(format!("cannot write {}: {}", path.display(), e)))
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, Failure> {
    names.iter().map(|s| s.trim().parse().map_err(Failure::from)).collect()
}

fn workers(requested: Option<usize>) -> Result<usize, Failure> {
    match requested {
        Some(0) => Err(Failure::usage("--workers must be at least 1")),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn prepare_out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("cannot create {}: {}", dir.display(), e)))
}

fn write_records(dir: &Path, stem: &str, records: &[TrialRecord]) -> Result<PathBuf, Failure> {
    let path = dir.join(format!("{}.csv", stem));
    let file = fs::File::create(&path).map_err(|e| Failure::usage(format!("cannot write {}: {}", path.display(), e)))?;
    bench::write_csv(std::io::BufWriter::new(file), records)?;
    Ok(path)
}

fn sparse_grid(args: SparseGridArgs) -> CmdResult {
    let mut cfg: SparseGridConfig = config::load(args.run.config.as_deref())?;
    if let Some(d) = args.dim {
        cfg.dim = d;
    }
    if let Some(v) = args.n_fractions {
        cfg.n_fractions = v;
    }
    if let Some(v) = args.k_over_n {
        cfg.k_over_n = v;
    }
    let r = &args.run;
    r.apply(&mut cfg.trials, &mut cfg.master_seed, &mut cfg.recovery_tol, &mut cfg.record_timing);
    if let Some(m) = &r.methods {
        cfg.methods = parse_methods(m)?;
    }
    cfg.validate()?;
    let workers = workers(r.workers)?;
    prepare_out_dir(&r.out)?;

    let records = bench::run_sparse_grid(&cfg, Some(workers))?;
    let csv = write_records(&r.out, "sparse_grid", &records)?;
    let summary = SparseGridSummary::new(&cfg, &records);
    write_json(&r.out.join("sparse_grid.json"), &summary)?;

    let mut points = summary.points.clone();
    points.sort_by_key(|p| (p.n, p.k));
    for chunk in points.chunk_by(|a, b| (a.n, a.k) == (b.n, b.k)) {
        let parts: Vec<String> = chunk
            .iter()
            .map(|p| format!("{} {:5.1}%", p.method, p.percentage))
            .collect();
        println!("n={:<5} k={:<5} k/n={:.2}  {}", chunk[0].n, chunk[0].k, chunk[0].k_over_n, parts.join("  "));
    }
    report_failures(summary.failures.len());
    eprintln!("wrote {} records to {}", records.len(), csv.display());
    Ok(0)
}

fn compressible(args: CompressibleArgs) -> CmdResult {
    let mut cfg: CompressibleConfig = config::load(args.run.config.as_deref())?;
    if let Some(d) = args.dim {
        cfg.dim = d;
    }
    if let Some(f) = args.n_over_n {
        cfg.n_over_n = f;
    }
    if let Some(p) = args.p {
        cfg.p_values = p;
    }
    if let Some(c) = args.c {
        cfg.c = c;
    }
    let r = &args.run;
    r.apply(&mut cfg.trials, &mut cfg.master_seed, &mut cfg.recovery_tol, &mut cfg.record_timing);
    if let Some(m) = &r.methods {
        cfg.methods = parse_methods(m)?;
    }
    cfg.validate()?;
    let workers = workers(r.workers)?;
    prepare_out_dir(&r.out)?;

    let records = bench::run_compressible(&cfg, Some(workers))?;
    let csv = write_records(&r.out, "compressible", &records)?;
    let summary = CompressibleSummary::new(&cfg, &records);
    write_json(&r.out.join("compressible.json"), &summary)?;
    for g in &summary.groups {
        let med = g.median.map_or("undefined".to_string(), |m| format!("{:.4}", m));
        println!(
            "p={:<5} median MSE {}/{} = {}  ({} ratios, {} undefined)",
            g.p,
            g.numerator,
            g.denominator,
            med,
            g.ratios.len(),
            g.undefined
        );
    }
    report_failures(summary.failures.len());
    eprintln!("wrote {} records to {}", records.len(), csv.display());
    Ok(0)
}

fn report_failures(count: usize) {
    if count > 0 {
        eprintln!("{} trials failed; see the summary JSON", count);
    }
}

fn selftest(args: SelftestArgs) -> CmdResult {
    let checks = verify::solver_selftest(args.instances, args.seed);
    Ok(verify::print_table(&checks))
}

fn generate(args: GenerateArgs) -> CmdResult {
    use reweight_l1::rng::{derive_seed, STREAM_MATRIX, STREAM_NOISE, STREAM_SIGNAL};
    let a = reweight_l1::gen_gaussian(args.n, args.dim, derive_seed(args.seed, &[STREAM_MATRIX]))?;
    let x = reweight_l1::signalgen::gen_sparse(args.dim, args.k, derive_seed(args.seed, &[STREAM_SIGNAL]))?;
    let m = reweight_l1::measure(&a, &x, args.noise, derive_seed(args.seed, &[STREAM_NOISE]))?;
    prepare_out_dir(&args.out)?;
    io::write_matrix(&args.out.join("A.bin"), &a)?;
    io::write_vector(&args.out.join("x.bin"), x.as_slice())?;
    io::write_vector(&args.out.join("y.bin"), &m.y)?;
    println!(
        "wrote A.bin ({}x{}), x.bin ({} nonzeros), y.bin to {}",
        args.n,
        args.dim,
        x.count_nonzero(),
        args.out.display()
    );
    Ok(0)
}
