use std::path::PathBuf;

use clap::Args;
use reweight_l1::bench::{exact_recovery, sparse_instance};
use reweight_l1::rng::derive_seed;
use reweight_l1::sigcore::{IndexSet, SignalVector};
use reweight_l1::theory::{
    brute_force_rip, decay_condition_max_d1, eta, gamma, nsp_constant, prop2_accuracy, prop2_simulate,
    rip_condition_ok,
};
use reweight_l1::wbpdn::{residual_norm, solve, SolverConfig, WeightVector};
use reweight_l1::{io, measure, MeasurementSet, SensingMatrix};

use crate::{CmdResult, Failure};

pub const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Brute-force restricted isometry constants of orders 1..=k.
    #[arg(long)]
    rip: bool,
    /// Matrix for --rip (binary dense format); defaults to a built-in 2x3 fixture.
    #[arg(long, requires = "rip")]
    matrix: Option<PathBuf>,
    /// Largest order for --rip.
    #[arg(long, default_value_t = 2, requires = "rip")]
    k: usize,
    /// Compare the intersection-accuracy simulator with its closed form.
    #[arg(long)]
    prop2: bool,
    /// Simulation trials.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Prints the table and returns the exit code.
pub fn print_table(checks: &[Check]) -> u8 {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in checks {
        println!(
            "{}  {:width$}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail,
            width = width
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        0
    } else {
        EXIT_CHECK_FAILED
    }
}

fn fixture_2x3() -> SensingMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    SensingMatrix::from_row_slice(2, 3, &[1.0, 0.0, h, 0.0, 1.0, h]).expect("finite fixture")
}

pub fn run(args: VerifyArgs) -> CmdResult {
    let mut checks = Vec::new();
    if !args.rip && !args.prop2 {
        checks.extend(builtin_checks());
        checks.push(prop2_check(args.trials, args.seed)?);
    }
    if args.rip {
        let a = match &args.matrix {
            Some(p) => io::read_matrix(p).map_err(|e| Failure::usage(format!("{}: {}", p.display(), e)))?,
            None => fixture_2x3(),
        };
        if args.k == 0 || args.k > a.cols() {
            return Err(Failure::usage(format!("--k must lie in 1..={}", a.cols())));
        }
        for order in 1..=args.k {
            let est = brute_force_rip(&a, order)?;
            let note = if est.is_informative() { "" } else { " (not below 1)" };
            checks.push(check(
                &format!("delta_{} of {}x{} matrix", order, a.rows(), a.cols()),
                true,
                format!("{:.5}{}", est.delta, note),
            ));
        }
    }
    if args.prop2 {
        checks.push(prop2_check(args.trials, args.seed)?);
    }
    Ok(print_table(&checks))
}

fn prop2_check(trials: usize, seed: u64) -> Result<Check, Failure> {
    let sim = prop2_simulate(2000, 20, 10, 15, trials, seed)?;
    let formula = prop2_accuracy(10, 20, sim.rho)?.accuracy;
    let gap = (sim.accuracy - formula).abs();
    Ok(check(
        "intersection accuracy, simulated vs formula",
        gap <= 0.02,
        format!(
            "N=2000 k=20 s0=10 s1=15, {} trials: sim {:.4}, formula {:.4} at rho {:.4}, gap {:.4}",
            sim.used_trials, sim.accuracy, formula, sim.rho, gap
        ),
    ))
}

fn builtin_checks() -> Vec<Check> {
    let mut out = Vec::new();

    let all_gamma = (0..=100).all(|i| {
        let w = i as f64 / 100.0;
        (gamma(w, 1.0) - w).abs() <= 1e-15
    });
    out.push(check("gamma(w, 1) = w", all_gamma, "101 values on [0, 1]".into()));
    let g = gamma(0.0, 0.5);
    out.push(check("gamma(0, 1/2) = 1", (g - 1.0).abs() <= 1e-15, format!("{:.15}", g)));

    let s3 = 3f64.sqrt();
    let want = 2.0 * (1.0 + s3) / (s3 - 1.0);
    match eta(1.0, 0.75, 3.0, 0.0, 0.0) {
        Ok(e) => out.push(check("eta(1, a, 3, 0, 0)", (e - want).abs() <= 1e-12, format!("{:.12} (want {:.12})", e, want))),
        Err(e) => out.push(check("eta(1, a, 3, 0, 0)", false, e.to_string())),
    }
    match nsp_constant(4.0, 0.0, 0.0) {
        Ok(c) => out.push(check("nsp_constant(4, 0, 0) = 1.5", c == 1.5, format!("{}", c))),
        Err(e) => out.push(check("nsp_constant(4, 0, 0) = 1.5", false, e.to_string())),
    }
    let cond = rip_condition_ok(3.0, 1.0, 0.49) && !rip_condition_ok(3.0, 1.0, 0.51);
    out.push(check("RIP condition threshold at a=3, gamma=1", cond, "bound 0.5".into()));

    match brute_force_rip(&fixture_2x3(), 2) {
        Ok(r) => {
            let want = std::f64::consts::FRAC_1_SQRT_2;
            out.push(check("delta_2 of 2x3 fixture", (r.delta - want).abs() <= 1e-9, format!("{:.12}", r.delta)));
        }
        Err(e) => out.push(check("delta_2 of 2x3 fixture", false, e.to_string())),
    }
    match brute_force_rip(&SensingMatrix::identity(6), 3) {
        Ok(r) => out.push(check("delta_3 of identity", r.delta.abs() <= 1e-12, format!("{:.3e}", r.delta))),
        Err(e) => out.push(check("delta_3 of identity", false, e.to_string())),
    }

    // k-sparse signal with T0 its support: the tail is empty, so every
    // nonzero qualifies.
    let x = SignalVector::new(vec![0.0, 3.0, 0.0, -1.0, 0.5, 0.0, 2.0, 0.0]).expect("finite");
    let t0 = IndexSet::new(8, [1, 3, 4, 6]).expect("in range");
    let t_tilde = IndexSet::new(8, [0, 1, 2, 3]).expect("in range");
    let d1 = decay_condition_max_d1(&x, &t0, &t_tilde, 0.5, 4.0, 1);
    out.push(check("decay condition, 4-sparse, s0=1", matches!(d1, Ok(Some(3))), format!("{:?}", d1)));

    let geo = SignalVector::new((1..=30).map(|j| 0.5f64.powi(j)).collect()).expect("finite");
    let top5 = IndexSet::new(30, 0..5).expect("in range");
    let d1 = decay_condition_max_d1(&geo, &top5, &top5, 1.0, 1.0, 3);
    out.push(check("decay condition, geometric tail", matches!(d1, Ok(Some(1))), format!("{:?}", d1)));

    match prop2_accuracy(10, 20, 0.5) {
        Ok(p) => out.push(check("intersection accuracy at rho = s0/k", p.accuracy == 1.0, format!("{}", p.accuracy))),
        Err(e) => out.push(check("intersection accuracy at rho = s0/k", false, e.to_string())),
    }
    out
}

/// Seeded solver checks: feasibility, convergence, exact recovery in an easy
/// regime, cost no larger than the true signal's, and noisy feasibility.
pub fn solver_selftest(instances: usize, seed: u64) -> Vec<Check> {
    let cfg = SolverConfig::default();
    let mut out = Vec::new();

    let a = SensingMatrix::from_row_slice(1, 2, &[1.0, 2.0]).expect("finite");
    let m = MeasurementSet::new(vec![2.0], 0.0).expect("finite");
    for (w, want) in [([1.0, 1.0], [0.0, 1.0]), ([1.0, 3.0], [2.0, 0.0])] {
        let name = format!("A=[1 2], y=2, w={:?}", w);
        match solve(&a, &m, &WeightVector::new(w.to_vec()).expect("valid"), &cfg) {
            Ok(r) => {
                let err = r.solution.distance(&SignalVector::new(want.to_vec()).expect("finite"));
                out.push(check(&name, err <= 1e-8, format!("solution {:?}", r.solution.as_slice())));
            }
            Err(e) => out.push(check(&name, false, e.to_string())),
        }
    }

    let (mut feasible, mut converged, mut exact, mut cheaper, mut ball) = (0, 0, 0, 0, 0);
    let mut errors = Vec::new();
    for i in 0..instances {
        let s = derive_seed(seed, &[i as u64]);
        let dim = 20 + (s % 61) as usize;
        let n = dim / 2;
        let k = (n / 8).max(1);
        let inst = match sparse_instance(dim, n, k, s) {
            Ok(v) => v,
            Err(e) => {
                errors.push(e.to_string());
                continue;
            }
        };
        let w = WeightVector::ones(dim);
        match solve(&inst.a, &inst.m, &w, &cfg) {
            Ok(r) => {
                let y_norm = inst.m.y_norm();
                feasible += usize::from(residual_norm(&inst.a, &r.solution, &inst.m.y) <= 1e-8 * (1.0 + y_norm));
                converged += usize::from(r.converged);
                exact += usize::from(exact_recovery(&r.solution, &inst.x, 1e-3).unwrap_or(false));
                cheaper += usize::from(r.objective <= inst.x.norm1() * (1.0 + 1e-6));
            }
            Err(e) => errors.push(e.to_string()),
        }
        let noise = 0.05 * inst.m.y_norm();
        let noisy = measure(&inst.a, &inst.x, noise, s ^ 1).and_then(|m| solve(&inst.a, &m, &w, &cfg).map(|r| (m, r)));
        match noisy {
            Ok((m, r)) => ball += usize::from(residual_norm(&inst.a, &r.solution, &m.y) <= noise * (1.0 + 1e-6) + 1e-10),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let frac = |c: usize| format!("{}/{}", c, instances);
    out.push(check("equality feasibility <= 1e-8(1+|y|)", feasible == instances, frac(feasible)));
    out.push(check("solver converged", converged == instances, frac(converged)));
    out.push(check("objective <= |x|_1", cheaper == instances, frac(cheaper)));
    out.push(check("exact recovery at k = n/8, n = N/2", exact * 10 >= instances * 9, frac(exact)));
    out.push(check("noisy solution inside the ball", ball == instances, frac(ball)));
    if !errors.is_empty() {
        out.push(check("no solver errors", false, errors.join("; ")));
    }
    out
}
