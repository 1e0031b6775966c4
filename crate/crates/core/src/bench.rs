//! Monte Carlo harness for the sparse phase grid and the compressible
//! MSE-ratio experiment.
//!
//! Each trial draws its own matrix and signal from a seed derived from the
//! master seed and the trial's grid coordinates, and all requested methods
//! run on that same instance. Records are sorted by coordinates before they
//! are returned, so the output does not depend on the worker count.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reweight::{Method, OuterConfig};
use crate::rng::{derive_seed, STREAM_MATRIX, STREAM_SIGNAL};
use crate::sensing::{gen_gaussian, measure, MeasurementSet, SensingMatrix};
use crate::sigcore::SignalVector;
use crate::signalgen::{gen_compressible, gen_sparse};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 13] = [
    "experiment", "method", "N", "n", "k", "p", "trial", "seed", "exact", "rel_err", "mse",
    "outer_iters", "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SparseGrid,
    Compressible,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SparseGrid => "sparse-grid",
            Experiment::Compressible => "compressible",
        }
    }

    fn id(self) -> u64 {
        match self {
            Experiment::SparseGrid => 1,
            Experiment::Compressible => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparseGridConfig {
    #[serde(rename = "N")]
    pub dim: usize,
    pub n_fractions: Vec<f64>,
    pub k_over_n: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub recovery_tol: f64,
    pub methods: Vec<Method>,
    pub record_timing: bool,
    pub outer: OuterConfig,
}

impl Default for SparseGridConfig {
    fn default() -> Self {
        SparseGridConfig {
            dim: 2000,
            n_fractions: vec![0.1, 0.25, 0.5],
            k_over_n: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            trials: 100,
            master_seed: 0,
            recovery_tol: 1e-3,
            methods: Method::ALL.to_vec(),
            record_timing: false,
            outer: OuterConfig::default(),
        }
    }
}

impl SparseGridConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(self.dim, self.trials, &self.methods)?;
        check_fractions("n_fractions", &self.n_fractions)?;
        check_fractions("k_over_n", &self.k_over_n)?;
        if !(self.recovery_tol > 0.0) {
            return Err(Error::InvalidArgument("recovery_tol must be positive".into()));
        }
        self.outer.validate()
    }

    /// `(n, k)` for every grid point, in grid order.
    pub fn grid(&self) -> Vec<(usize, usize)> {
        let mut pts = Vec::new();
        for &f in &self.n_fractions {
            let n = ((f * self.dim as f64).round() as usize).max(1);
            for &r in &self.k_over_n {
                pts.push((n, ((r * n as f64).round() as usize).max(1)));
            }
        }
        pts
    }

    pub fn expected_records(&self) -> usize {
        self.grid().len() * self.methods.len() * self.trials
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressibleConfig {
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "n_over_N")]
    pub n_over_n: f64,
    pub p_values: Vec<f64>,
    pub c: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub recovery_tol: f64,
    pub methods: Vec<Method>,
    pub record_timing: bool,
    pub outer: OuterConfig,
}

impl Default for CompressibleConfig {
    fn default() -> Self {
        CompressibleConfig {
            dim: 2000,
            n_over_n: 0.1,
            p_values: vec![1.1, 1.5, 2.0],
            c: 1.0,
            trials: 100,
            master_seed: 0,
            recovery_tol: 1e-3,
            methods: vec![Method::Sdrl1, Method::Irl1],
            record_timing: false,
            outer: OuterConfig::default(),
        }
    }
}

impl CompressibleConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(self.dim, self.trials, &self.methods)?;
        check_fractions("n_over_N", &[self.n_over_n])?;
        if let Some(p) = self.p_values.iter().find(|&&p| !(p > 1.0)) {
            return Err(Error::InvalidArgument(format!("decay power {} must exceed 1", p)));
        }
        if self.p_values.is_empty() {
            return Err(Error::InvalidArgument("no decay powers given".into()));
        }
        self.outer.validate()
    }

    pub fn n(&self) -> usize {
        ((self.n_over_n * self.dim as f64).round() as usize).max(1)
    }

    pub fn expected_records(&self) -> usize {
        self.p_values.len() * self.methods.len() * self.trials
    }
}

fn check_common(dim: usize, trials: usize, methods: &[Method]) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods selected".into()));
    }
    let mut m = methods.to_vec();
    m.sort();
    m.dedup();
    if m.len() != methods.len() {
        return Err(Error::InvalidArgument("duplicate methods".into()));
    }
    Ok(())
}

fn check_fractions(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidArgument(format!("{} is empty", name)));
    }
    if let Some(f) = v.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::InvalidArgument(format!("{} value {} outside (0, 1]", name, f)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub experiment: Experiment,
    pub method: Method,
    #[serde(rename = "N")]
    pub dim: usize,
    pub n: usize,
    pub k: Option<usize>,
    pub p: Option<f64>,
    /// Position of the grid point (sparse) or decay power (compressible).
    pub point: usize,
    pub trial: usize,
    pub seed: u64,
    pub exact: bool,
    pub rel_err: f64,
    pub mse: f64,
    pub outer_iters: usize,
    pub wall_ms: Option<f64>,
    /// Set when the driver returned an error instead of a solution.
    pub error: Option<String>,
}

impl TrialRecord {
    fn sort_key(&self) -> (Experiment, usize, usize, Method) {
        (self.experiment, self.point, self.trial, self.method)
    }
}

/// `||x_hat - x|| / ||x|| <= tol`.
pub fn exact_recovery(x_hat: &SignalVector, x: &SignalVector, tol: f64) -> Result<bool> {
    Ok(relative_error(x_hat, x)? <= tol)
}

pub fn relative_error(x_hat: &SignalVector, x: &SignalVector) -> Result<f64> {
    if x_hat.len() != x.len() {
        return Err(Error::DimensionMismatch {
            what: "recovered signal length",
            expected: x.len(),
            got: x_hat.len(),
        });
    }
    let norm = x.norm2();
    if norm == 0.0 {
        return Err(Error::UndefinedCriterion("reference signal is zero".into()));
    }
    Ok(x_hat.distance(x) / norm)
}

/// `||x_hat - x||^2 / N`.
pub fn mse(x_hat: &SignalVector, x: &SignalVector) -> Result<f64> {
    if x_hat.len() != x.len() {
        return Err(Error::DimensionMismatch {
            what: "recovered signal length",
            expected: x.len(),
            got: x_hat.len(),
        });
    }
    let d = x_hat.distance(x);
    Ok(d * d / x.len() as f64)
}

/// One noiseless problem instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub a: SensingMatrix,
    pub x: SignalVector,
    pub m: MeasurementSet,
}

pub fn sparse_instance(dim: usize, n: usize, k: usize, seed: u64) -> Result<Instance> {
    let a = gen_gaussian(n, dim, derive_seed(seed, &[STREAM_MATRIX]))?;
    let x = gen_sparse(dim, k, derive_seed(seed, &[STREAM_SIGNAL]))?;
    let m = measure(&a, &x, 0.0, 0)?;
    Ok(Instance { a, x, m })
}

pub fn compressible_instance(dim: usize, n: usize, p: f64, c: f64, seed: u64) -> Result<Instance> {
    let a = gen_gaussian(n, dim, derive_seed(seed, &[STREAM_MATRIX]))?;
    let x = gen_compressible(dim, p, c, derive_seed(seed, &[STREAM_SIGNAL]))?;
    let m = measure(&a, &x, 0.0, 0)?;
    Ok(Instance { a, x, m })
}

struct Task {
    point: usize,
    trial: usize,
    n: usize,
    k: Option<usize>,
    p: Option<f64>,
    seed: u64,
}

fn run_task(
    experiment: Experiment,
    dim: usize,
    task: &Task,
    inst: Result<Instance>,
    methods: &[Method],
    outer: &OuterConfig,
    tol: f64,
    timing: bool,
) -> Vec<TrialRecord> {
    let base = |method: Method| TrialRecord {
        experiment,
        method,
        dim,
        n: task.n,
        k: task.k,
        p: task.p,
        point: task.point,
        trial: task.trial,
        seed: task.seed,
        exact: false,
        rel_err: f64::NAN,
        mse: f64::NAN,
        outer_iters: 0,
        wall_ms: None,
        error: None,
    };
    let inst = match inst {
        Ok(i) => i,
        Err(e) => {
            return methods
                .iter()
                .map(|&m| TrialRecord {
                    error: Some(e.to_string()),
                    ..base(m)
                })
                .collect()
        }
    };
    methods
        .iter()
        .map(|&method| {
            let mut rec = base(method);
            let start = Instant::now();
            let out = method.run(&inst.a, &inst.m, outer);
            if timing {
                rec.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            let scored = out.and_then(|r| {
                let rel = relative_error(&r.solution, &inst.x)?;
                Ok((r.outer_iterations, rel, mse(&r.solution, &inst.x)?))
            });
            match scored {
                Ok((iters, rel, m)) => {
                    rec.outer_iters = iters;
                    rec.rel_err = rel;
                    rec.exact = rel <= tol;
                    rec.mse = m;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect()
}

fn execute<F>(tasks: Vec<Task>, workers: Option<usize>, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(&Task) -> Vec<TrialRecord> + Sync + Send,
{
    let run = || -> Vec<TrialRecord> {
        let mut recs: Vec<TrialRecord> = tasks.par_iter().flat_map_iter(&f).collect();
        recs.sort_by_key(|r| r.sort_key());
        recs
    };
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("worker pool: {}", e)))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// Sparse recovery sweep over `(n, k)`. `workers = None` uses the global
/// rayon pool.
pub fn run_sparse_grid(cfg: &SparseGridConfig, workers: Option<usize>) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let exp = Experiment::SparseGrid;
    let mut tasks = Vec::new();
    for (point, (n, k)) in cfg.grid().into_iter().enumerate() {
        for trial in 0..cfg.trials {
            let seed = derive_seed(cfg.master_seed, &[exp.id(), point as u64, trial as u64]);
            tasks.push(Task {
                point,
                trial,
                n,
                k: Some(k),
                p: None,
                seed,
            });
        }
    }
    execute(tasks, workers, |t| {
        let inst = sparse_instance(cfg.dim, t.n, t.k.unwrap(), t.seed);
        run_task(exp, cfg.dim, t, inst, &cfg.methods, &cfg.outer, cfg.recovery_tol, cfg.record_timing)
    })
}

/// Compressible-signal sweep over decay powers.
pub fn run_compressible(cfg: &CompressibleConfig, workers: Option<usize>) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let exp = Experiment::Compressible;
    let n = cfg.n();
    let mut tasks = Vec::new();
    for (point, &p) in cfg.p_values.iter().enumerate() {
        for trial in 0..cfg.trials {
            let seed = derive_seed(cfg.master_seed, &[exp.id(), point as u64, trial as u64]);
            tasks.push(Task {
                point,
                trial,
                n,
                k: None,
                p: Some(p),
                seed,
            });
        }
    }
    execute(tasks, workers, |t| {
        let inst = compressible_instance(cfg.dim, t.n, t.p.unwrap(), cfg.c, t.seed);
        run_task(exp, cfg.dim, t, inst, &cfg.methods, &cfg.outer, cfg.recovery_tol, cfg.record_timing)
    })
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{:.16e}", v)
    }
}

/// Writes the records as CSV under [`CSV_HEADER`]. Floats carry 17
/// significant digits.
pub fn write_csv<W: Write>(w: W, records: &[TrialRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    out.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        out.write_record([
            r.experiment.name().to_string(),
            r.method.name().to_string(),
            r.dim.to_string(),
            r.n.to_string(),
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            r.p.map(fmt_float).unwrap_or_default(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.exact.to_string(),
            fmt_float(r.rel_err),
            fmt_float(r.mse),
            r.outer_iters.to_string(),
            r.wall_ms.map(fmt_float).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryPoint {
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub k_over_n: f64,
    pub trials: usize,
    pub successes: usize,
    pub percentage: f64,
    pub failures: usize,
}

/// Recovery percentage per grid point and method, in grid order.
pub fn recovery_summary(records: &[TrialRecord]) -> Vec<RecoveryPoint> {
    let mut out: Vec<RecoveryPoint> = Vec::new();
    let mut keys: Vec<(usize, Method)> = records
        .iter()
        .filter(|r| r.experiment == Experiment::SparseGrid)
        .map(|r| (r.point, r.method))
        .collect();
    keys.sort();
    keys.dedup();
    for (point, method) in keys {
        let group: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.experiment == Experiment::SparseGrid && r.point == point && r.method == method)
            .collect();
        let first = group[0];
        let successes = group.iter().filter(|r| r.exact).count();
        let k = first.k.unwrap_or(0);
        out.push(RecoveryPoint {
            method,
            n: first.n,
            k,
            k_over_n: k as f64 / first.n as f64,
            trials: group.len(),
            successes,
            percentage: 100.0 * successes as f64 / group.len() as f64,
            failures: group.iter().filter(|r| r.error.is_some()).count(),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioGroup {
    pub p: f64,
    pub numerator: Method,
    pub denominator: Method,
    /// Per-trial `MSE(numerator) / MSE(denominator)`, by trial index.
    pub ratios: Vec<f64>,
    /// Trials skipped because the denominator MSE was zero or missing.
    pub undefined: usize,
    pub median: Option<f64>,
}

pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    })
}

/// Per-trial MSE ratios for every decay power, in configuration order.
pub fn mse_ratio_summary(records: &[TrialRecord], numerator: Method, denominator: Method) -> Vec<RatioGroup> {
    let comp: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.experiment == Experiment::Compressible)
        .collect();
    let mut points: Vec<usize> = comp.iter().map(|r| r.point).collect();
    points.sort_unstable();
    points.dedup();
    points
        .into_iter()
        .map(|point| {
            let at = |m: Method| -> Vec<&TrialRecord> {
                comp.iter()
                    .copied()
                    .filter(|r| r.point == point && r.method == m)
                    .collect()
            };
            let nums = at(numerator);
            let dens = at(denominator);
            let mut ratios = Vec::new();
            let mut undefined = 0;
            for num in &nums {
                let den = dens.iter().find(|d| d.trial == num.trial);
                match den {
                    Some(d) if d.mse > 0.0 && d.mse.is_finite() && num.mse.is_finite() => {
                        ratios.push(num.mse / d.mse)
                    }
                    _ => undefined += 1,
                }
            }
            let p = nums.first().or(dens.first()).and_then(|r| r.p).unwrap_or(f64::NAN);
            RatioGroup {
                p,
                numerator,
                denominator,
                median: median(&ratios),
                ratios,
                undefined,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureNote {
    pub method: Method,
    pub point: usize,
    pub trial: usize,
    pub message: String,
}

pub fn failures(records: &[TrialRecord]) -> Vec<FailureNote> {
    records
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| FailureNote {
                method: r.method,
                point: r.point,
                trial: r.trial,
                message: e.clone(),
            })
        })
        .collect()
}

/// JSON summary of a sparse-grid run.
#[derive(Debug, Clone, Serialize)]
pub struct SparseGridSummary<'a> {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub config: &'a SparseGridConfig,
    pub recovery_tol: f64,
    pub records: usize,
    pub points: Vec<RecoveryPoint>,
    pub failures: Vec<FailureNote>,
}

impl<'a> SparseGridSummary<'a> {
    pub fn new(config: &'a SparseGridConfig, records: &[TrialRecord]) -> Self {
        SparseGridSummary {
            schema_version: SCHEMA_VERSION,
            experiment: Experiment::SparseGrid,
            config,
            recovery_tol: config.recovery_tol,
            records: records.len(),
            points: recovery_summary(records),
            failures: failures(records),
        }
    }
}

/// JSON summary of a compressible run: one ratio group per decay power,
/// the source data for the MSE-ratio histograms.
#[derive(Debug, Clone, Serialize)]
pub struct CompressibleSummary<'a> {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub config: &'a CompressibleConfig,
    pub records: usize,
    pub groups: Vec<RatioGroup>,
    pub failures: Vec<FailureNote>,
}

impl<'a> CompressibleSummary<'a> {
    pub fn new(config: &'a CompressibleConfig, records: &[TrialRecord]) -> Self {
        let (num, den) = match config.methods.as_slice() {
            [a, b, ..] => (*a, *b),
            [a] => (*a, *a),
            [] => (Method::Sdrl1, Method::Irl1),
        };
        CompressibleSummary {
            schema_version: SCHEMA_VERSION,
            experiment: Experiment::Compressible,
            config,
            records: records.len(),
            groups: mse_ratio_summary(records, num, den),
            failures: failures(records),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> SignalVector {
        SignalVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn exact_recovery_examples() {
        let x = sv(&[1.0, -2.0, 0.0]);
        assert!(exact_recovery(&x, &x, 1e-3).unwrap());
        assert!(!exact_recovery(&SignalVector::zeros(3), &x, 0.5).unwrap());
        // Relative error exactly 0.5: 3-4-5 triangle scaled.
        let x = sv(&[3.0, 4.0]);
        let xh = sv(&[4.5, 4.0]);
        assert_eq!(relative_error(&xh, &x).unwrap(), 0.3);
        assert!(exact_recovery(&xh, &x, 0.3).unwrap());
        assert!(matches!(
            exact_recovery(&x, &SignalVector::zeros(2), 1.0),
            Err(Error::UndefinedCriterion(_))
        ));
    }

    #[test]
    fn mse_examples() {
        let x = sv(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        assert_eq!(mse(&sv(&[2.0, 3.0, 4.0, 5.0]), &x).unwrap(), 1.0);
        let a = sv(&[0.5, -1.0, 2.0, 0.0]);
        let b = sv(&[1.0, 1.0, 1.0, 1.0]);
        let a2 = sv(&[1.0, -2.0, 4.0, 0.0]);
        let b2 = sv(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(mse(&a2, &b2).unwrap(), 4.0 * mse(&a, &b).unwrap());
    }

    #[test]
    fn grid_arithmetic() {
        let cfg = SparseGridConfig {
            dim: 400,
            ..Default::default()
        };
        let g = cfg.grid();
        assert_eq!(g.len(), 15);
        assert_eq!(g[0], (40, 4));
        assert_eq!(g[5], (100, 10));
        assert_eq!(g[14], (200, 100));
        assert_eq!(cfg.methods.len() * g.len() * 30, 1350);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SparseGridConfig::default();
        cfg.n_fractions = vec![0.0];
        assert!(cfg.validate().is_err());
        let mut cfg = SparseGridConfig::default();
        cfg.methods = vec![Method::L1, Method::L1];
        assert!(cfg.validate().is_err());
        let mut c = CompressibleConfig::default();
        c.p_values = vec![1.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let rec = TrialRecord {
            experiment: Experiment::SparseGrid,
            method: Method::Sdrl1,
            dim: 10,
            n: 5,
            k: Some(2),
            p: None,
            point: 0,
            trial: 3,
            seed: 42,
            exact: true,
            rel_err: 1e-9,
            mse: 0.25,
            outer_iters: 2,
            wall_ms: None,
            error: None,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rec]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,method,N,n,k,p,trial,seed,exact,rel_err,mse,outer_iters,wall_ms"
        );
        assert_eq!(
            lines.next().unwrap(),
            "sparse-grid,sdrl1,10,5,2,,3,42,true,1.0000000000000001e-9,2.5000000000000000e-1,2,"
        );
    }
}
