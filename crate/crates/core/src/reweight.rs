//! Recovery drivers: plain l1, IRL1 and SDRL1.
//!
//! Each driver is an outer loop of cold-started weighted BPDN solves. The
//! reweighting loops stop once the relative change
//! `||x(t) - x(t-1)|| / ||x(t-1)||` drops to `tol`, after at least two outer
//! iterations, or when `max_outer` is reached.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::{MeasurementSet, SensingMatrix};
use crate::sigcore::{energy_support_size, top_support, IndexSet, SignalVector};
use crate::wbpdn::{solve, SolverConfig, SolverResult, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    L1,
    Irl1,
    Sdrl1,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::L1, Method::Irl1, Method::Sdrl1];

    pub fn name(self) -> &'static str {
        match self {
            Method::L1 => "l1",
            Method::Irl1 => "irl1",
            Method::Sdrl1 => "sdrl1",
        }
    }

    pub fn run(self, a: &SensingMatrix, m: &MeasurementSet, cfg: &OuterConfig) -> Result<RecoveryResult> {
        match self {
            Method::L1 => run_l1(a, m, cfg),
            Method::Irl1 => run_irl1(a, m, cfg),
            Method::Sdrl1 => run_sdrl1(a, m, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Method::L1),
            "irl1" => Ok(Method::Irl1),
            "sdrl1" => Ok(Method::Sdrl1),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{}' (expected l1, irl1 or sdrl1)",
                other
            ))),
        }
    }
}

/// Which pair of support estimates SDRL1 intersects to form `Omega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaRule {
    /// `Omega` is the previous support estimate intersected with the
    /// current one, i.e. `supp(x(t-2)|s(t-2)) ∩ T1`.
    PreviousEstimate,
    /// `Omega = supp(x(t-1)|s(t-1)) ∩ T1`. Since `T1` is itself
    /// `supp(x(t-1)|s(t-1))`, this makes `Omega = T1` from the second
    /// iteration on and `omega1` is never applied.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuterConfig {
    /// Relative-change stopping threshold.
    pub tol: f64,
    pub max_outer: usize,
    pub irl1_a_floor: f64,
    pub irl1_a_scale: f64,
    pub p_hat: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub k_hat_override: Option<usize>,
    pub omega_rule: OmegaRule,
    pub solver: SolverConfig,
}

impl Default for OuterConfig {
    fn default() -> Self {
        OuterConfig {
            tol: 1e-4,
            max_outer: 8,
            irl1_a_floor: 1e-6,
            irl1_a_scale: 0.1,
            p_hat: 0.99,
            omega1: 0.5,
            omega2: 0.0,
            k_hat_override: None,
            omega_rule: OmegaRule::PreviousEstimate,
            solver: SolverConfig::default(),
        }
    }
}

impl OuterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_outer < 2 {
            return bad(format!("max_outer must be at least 2, got {}", self.max_outer));
        }
        if !(self.irl1_a_floor > 0.0) || !(self.irl1_a_scale >= 0.0) {
            return bad("IRL1 stability parameters must be positive".into());
        }
        if !(self.p_hat > 0.0 && self.p_hat <= 1.0) {
            return bad(format!("p_hat must lie in (0, 1], got {}", self.p_hat));
        }
        for (name, w) in [("omega1", self.omega1), ("omega2", self.omega2)] {
            if !(0.0..=1.0).contains(&w) {
                return bad(format!("{} must lie in [0, 1], got {}", name, w));
            }
        }
        if self.k_hat_override == Some(0) {
            return bad("k_hat override must be positive".into());
        }
        self.solver.validate()
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterRecord {
    /// 1-based outer iteration `t`.
    pub iteration: usize,
    pub iterate: SignalVector,
    pub iterate_norm: f64,
    /// Relative change from the previous iterate; infinite at `t = 1`.
    pub relative_change: f64,
    pub weights: WeightVector,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub feasibility_gap: f64,
    pub objective: f64,
    /// SDRL1 only: the set `T1` the weights were built from.
    pub weighted_support: Option<IndexSet>,
    /// SDRL1 only: the intersection set `Omega`.
    pub omega: Option<IndexSet>,
    /// SDRL1 only: `s(t)` after the solve.
    pub s_t: Option<usize>,
    /// SDRL1 only: the updated support estimate `T1 = supp(x(t)|s(t))`.
    pub support_estimate: Option<IndexSet>,
}

impl OuterRecord {
    fn from_solve(t: usize, res: &SolverResult, prev: &SignalVector, weights: WeightVector) -> Self {
        OuterRecord {
            iteration: t,
            iterate_norm: res.solution.norm2(),
            relative_change: relative_change(&res.solution, prev),
            iterate: res.solution.clone(),
            weights,
            inner_iterations: res.iterations,
            inner_converged: res.converged,
            feasibility_gap: res.feasibility_gap,
            objective: res.objective,
            weighted_support: None,
            omega: None,
            s_t: None,
            support_estimate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryResult {
    pub method: Method,
    pub solution: SignalVector,
    pub outer_iterations: usize,
    pub trace: Vec<OuterRecord>,
    /// Every inner solve converged.
    pub converged: bool,
    /// SDRL1 only.
    pub k_hat: Option<usize>,
}

impl RecoveryResult {
    fn from_trace(method: Method, trace: Vec<OuterRecord>, k_hat: Option<usize>) -> Self {
        let last = trace.last().expect("at least one outer iteration");
        RecoveryResult {
            method,
            solution: last.iterate.clone(),
            outer_iterations: trace.len(),
            converged: trace.iter().all(|r| r.inner_converged),
            k_hat,
            trace,
        }
    }
}

/// `||x - prev|| / ||prev||`, with `0/0 = 0` and `d/0 = inf`.
pub fn relative_change(x: &SignalVector, prev: &SignalVector) -> f64 {
    let d = x.distance(prev);
    let p = prev.norm2();
    if p > 0.0 {
        d / p
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn done(t: usize, change: f64, cfg: &OuterConfig) -> bool {
    t >= cfg.max_outer || (t >= 2 && change <= cfg.tol)
}

/// A single unit-weight solve (BPDN).
pub fn run_l1(a: &SensingMatrix, m: &MeasurementSet, cfg: &OuterConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let w = WeightVector::ones(a.cols());
    let res = solve(a, m, &w, &cfg.solver)?;
    let rec = OuterRecord::from_solve(1, &res, &SignalVector::zeros(a.cols()), w);
    Ok(RecoveryResult::from_trace(Method::L1, vec![rec], None))
}

/// IRL1 weights `1 / (|x_i| + a)`.
pub fn irl1_weights(x: &SignalVector, a: f64) -> Result<WeightVector> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "stability parameter must be positive, got {}",
            a
        )));
    }
    WeightVector::new(x.as_slice().iter().map(|v| 1.0 / (v.abs() + a)).collect())
}

/// Stability parameter `a_t = max(scale * max_i |x_i|, floor)`.
pub fn irl1_stability(x: &SignalVector, cfg: &OuterConfig) -> f64 {
    (cfg.irl1_a_scale * x.max_abs()).max(cfg.irl1_a_floor)
}

pub fn run_irl1(a: &SensingMatrix, m: &MeasurementSet, cfg: &OuterConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let mut w = WeightVector::ones(a.cols());
    let mut prev = SignalVector::zeros(a.cols());
    let mut trace = Vec::new();
    for t in 1.. {
        let res = solve(a, m, &w, &cfg.solver)?;
        let next_w = irl1_weights(&res.solution, irl1_stability(&res.solution, cfg))?;
        let rec = OuterRecord::from_solve(t, &res, &prev, std::mem::replace(&mut w, next_w));
        let change = rec.relative_change;
        prev = res.solution;
        trace.push(rec);
        if done(t, change, cfg) {
            break;
        }
    }
    Ok(RecoveryResult::from_trace(Method::Irl1, trace, None))
}

/// `round(n ln(N/n) / 2)`, at least 1, unless overridden.
pub fn compute_k_hat(n: usize, big_n: usize, k_hat_override: Option<usize>) -> Result<usize> {
    if let Some(k) = k_hat_override {
        return Ok(k);
    }
    if n == 0 || n >= big_n {
        return Err(Error::InvalidArgument(format!(
            "k_hat needs 1 <= n < N, got n = {}, N = {}",
            n, big_n
        )));
    }
    let k = (n as f64 * (big_n as f64 / n as f64).ln() / 2.0).round() as usize;
    Ok(k.max(1))
}

/// Three-level SDRL1 weights: 1 off `T1`, `omega1` on `T1 \ Omega`,
/// `omega2` on `Omega`.
pub fn sdrl1_weights(
    t1: &IndexSet,
    omega: &IndexSet,
    omega1: f64,
    omega2: f64,
    dim: usize,
) -> Result<WeightVector> {
    if !omega.is_subset(t1) {
        return Err(Error::InvariantViolation(format!(
            "Omega {} is not contained in T1 {}",
            omega, t1
        )));
    }
    let mut w = vec![1.0; dim];
    for i in t1.iter() {
        w[i] = omega1;
    }
    for i in omega.iter() {
        w[i] = omega2;
    }
    WeightVector::new(w)
}

/// Returns `s(t) = min(l, k_hat)` and `T1 = supp(x|s(t))`, where `l` is the
/// energy support size of `x` at fraction `p_hat`.
pub fn sdrl1_support_update(x: &SignalVector, p_hat: f64, k_hat: usize) -> Result<(usize, IndexSet)> {
    let l = energy_support_size(x, p_hat)?;
    let s = l.min(k_hat);
    Ok((s, top_support(x, s)?))
}

/// `supp(x_prev|s_prev) ∩ T1`.
pub fn omega_update(x_prev: &SignalVector, s_prev: usize, t1: &IndexSet) -> Result<IndexSet> {
    Ok(top_support(x_prev, s_prev)?.intersection(t1))
}

pub fn run_sdrl1(a: &SensingMatrix, m: &MeasurementSet, cfg: &OuterConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let dim = a.cols();
    let k_hat = compute_k_hat(a.rows(), dim, cfg.k_hat_override)?;

    // (x, s) pairs for t-1 and t-2; both start at (0, 0).
    let mut last = (SignalVector::zeros(dim), 0usize);
    let mut before_last = last.clone();
    let mut t1 = IndexSet::empty(dim);
    let mut trace = Vec::new();

    for t in 1.. {
        let omega = match cfg.omega_rule {
            OmegaRule::PreviousEstimate => omega_update(&before_last.0, before_last.1, &t1)?,
            OmegaRule::Literal => omega_update(&last.0, last.1, &t1)?,
        };
        let w = sdrl1_weights(&t1, &omega, cfg.omega1, cfg.omega2, dim)?;
        let res = solve(a, m, &w, &cfg.solver)?;
        let (s_t, next_t1) = sdrl1_support_update(&res.solution, cfg.p_hat, k_hat)?;

        let mut rec = OuterRecord::from_solve(t, &res, &last.0, w);
        rec.weighted_support = Some(std::mem::replace(&mut t1, next_t1.clone()));
        rec.omega = Some(omega);
        rec.s_t = Some(s_t);
        rec.support_estimate = Some(next_t1);
        let change = rec.relative_change;
        trace.push(rec);

        before_last = std::mem::replace(&mut last, (res.solution, s_t));
        if done(t, change, cfg) {
            break;
        }
    }
    Ok(RecoveryResult::from_trace(Method::Sdrl1, trace, Some(k_hat)))
}
