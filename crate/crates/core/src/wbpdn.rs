//! Weighted basis pursuit denoise:
//!
//! ```text
//! minimize  sum_i w_i |u_i|   subject to  ||A u - y||_2 <= eps
//! ```
//!
//! Solved by ADMM. With `eps = 0` the splitting is `u = z` with `u`
//! constrained to the affine set `{A u = y}` (projection through the cached
//! `(A A^T)^{-1} A` factor) and `z` carrying the weighted l1 term. With
//! `eps > 0` the graph form is used: `u = z`, `A u = v`, with `v` projected
//! onto the ball of radius `eps` around `y` and the `u` step solved through
//! `(I + A A^T)^{-1}`.
//!
//! After the iterations the ADMM point is made exactly feasible. In the
//! equality case the solver then tries to polish it: it solves the
//! least-squares system on the detected support and keeps the result when it
//! is feasible and no worse. A polished vertex that also admits a dual
//! certificate `|A_j^T lambda| <= w_j` is optimal and is reported as
//! converged.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::{MeasurementSet, SensingMatrix};
use crate::sigcore::{norm2, SignalVector};

/// Nonnegative per-coordinate weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weight {} must be finite and nonnegative, got {}",
                i, w[i]
            )));
        }
        Ok(WeightVector(w))
    }

    pub fn ones(dim: usize) -> Self {
        WeightVector(vec![1.0; dim])
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `sum_i w_i |u_i|`.
    pub fn weighted_norm(&self, u: &[f64]) -> f64 {
        self.0.iter().zip(u).map(|(w, x)| w * x.abs()).sum()
    }

    /// Distinct weight values in increasing order.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// ADMM penalty `rho`.
    pub penalty: f64,
    pub adaptive_penalty: bool,
    /// Least-squares polish on the detected support (equality case only).
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 2000,
            abs_tol: 1e-7,
            rel_tol: 1e-5,
            penalty: 1.0,
            adaptive_penalty: true,
            polish: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        for (name, v) in [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("penalty", self.penalty),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{} must be positive, got {}",
                    name, v
                )));
            }
        }
        Ok(())
    }

    fn feasibility_tol(&self, y_norm: f64) -> f64 {
        self.abs_tol * (1.0 + y_norm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub solution: SignalVector,
    /// Weighted l1 norm of `solution`.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `max(0, ||A solution - y||_2 - eps)`.
    pub feasibility_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The solution came from the support least-squares polish.
    pub polished: bool,
}

const MAX_PENALTY_UPDATES: usize = 100;
const PENALTY_RATIO: f64 = 10.0;

/// Solves weighted BPDN. All-ones weights give plain BPDN.
pub fn solve(
    a: &SensingMatrix,
    m: &MeasurementSet,
    w: &WeightVector,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    if m.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            what: "measurement length vs matrix rows",
            expected: a.rows(),
            got: m.len(),
        });
    }
    if w.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            what: "weight length vs matrix columns",
            expected: a.cols(),
            got: w.len(),
        });
    }
    let y = DVector::from_column_slice(&m.y);
    let y_norm = y.norm();

    if y_norm <= m.epsilon {
        // u = 0 is feasible and has zero cost.
        return Ok(SolverResult {
            solution: SignalVector::zeros(a.cols()),
            objective: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            feasibility_gap: 0.0,
            iterations: 0,
            converged: true,
            polished: false,
        });
    }

    if m.epsilon == 0.0 {
        solve_equality(a, &y, w, cfg)
    } else {
        solve_ball(a, &y, m.epsilon, w, cfg)
    }
}

struct Penalty {
    rho: f64,
    updates: usize,
    adaptive: bool,
}

impl Penalty {
    /// Returns the factor the scaled duals must be multiplied by.
    fn adapt(&mut self, primal: f64, dual: f64) -> Option<f64> {
        if !self.adaptive || self.updates >= MAX_PENALTY_UPDATES {
            return None;
        }
        if primal > PENALTY_RATIO * dual {
            self.rho *= 2.0;
            self.updates += 1;
            Some(0.5)
        } else if dual > PENALTY_RATIO * primal {
            self.rho /= 2.0;
            self.updates += 1;
            Some(2.0)
        } else {
            None
        }
    }
}

fn soft_threshold_into(out: &mut DVector<f64>, v: &DVector<f64>, w: &[f64], tau: f64) {
    for ((o, &x), &wi) in out.iter_mut().zip(v.iter()).zip(w) {
        let t = tau * wi;
        *o = if x > t {
            x - t
        } else if x < -t {
            x + t
        } else {
            0.0
        };
    }
}

fn solve_equality(
    a: &SensingMatrix,
    y: &DVector<f64>,
    w: &WeightVector,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    let factor = match a.affine_factor() {
        Ok(f) => f,
        Err(e) => {
            check_range(a, y)?;
            return Err(e);
        }
    };
    let big_n = a.cols();
    let sqrt_n = (big_n as f64).sqrt();
    let weights = w.as_slice();

    let project = |v: &DVector<f64>| -> DVector<f64> {
        let r = a.apply_vec(v) - y;
        v - factor.tr_mul(&r)
    };

    let mut pen = Penalty {
        rho: cfg.penalty,
        updates: 0,
        adaptive: cfg.adaptive_penalty,
    };
    let mut z = DVector::zeros(big_n);
    let mut z_old = DVector::zeros(big_n);
    let mut u = DVector::zeros(big_n);
    let mut converged = false;
    let mut iterations = 0;
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);

    for it in 1..=cfg.max_iters {
        iterations = it;
        let x = project(&(&z - &u));
        std::mem::swap(&mut z, &mut z_old);
        let xu = &x + &u;
        soft_threshold_into(&mut z, &xu, weights, 1.0 / pen.rho);
        u = xu - &z;

        primal = (&x - &z).norm();
        dual = pen.rho * (&z - &z_old).norm();
        let eps_pri = cfg.abs_tol * sqrt_n + cfg.rel_tol * x.norm().max(z.norm());
        let eps_dual = cfg.abs_tol * sqrt_n + cfg.rel_tol * pen.rho * u.norm();
        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }
        if let Some(scale) = pen.adapt(primal, dual) {
            u *= scale;
        }
    }

    let mut solution = project(&z);
    let mut objective = w.weighted_norm(solution.as_slice());
    let mut polished = false;
    if cfg.polish {
        if let Some(p) = polish_support(a, y, w, &z, objective) {
            solution = p.solution;
            objective = p.objective;
            polished = true;
            converged |= p.certified;
        }
    }
    finish(a, y, 0.0, solution, objective, primal, dual, iterations, converged, polished, cfg)
}

fn solve_ball(
    a: &SensingMatrix,
    y: &DVector<f64>,
    eps: f64,
    w: &WeightVector,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    let factor = a.graph_factor()?;
    let big_n = a.cols();
    let n = a.rows();
    let sqrt_dim = ((big_n + n) as f64).sqrt();
    let weights = w.as_slice();

    let mut pen = Penalty {
        rho: cfg.penalty,
        updates: 0,
        adaptive: cfg.adaptive_penalty,
    };
    let mut z = DVector::zeros(big_n);
    let mut z_old = DVector::zeros(big_n);
    let mut v = y.clone();
    let mut u1 = DVector::<f64>::zeros(big_n);
    let mut u2 = DVector::<f64>::zeros(n);
    let mut converged = false;
    let mut iterations = 0;
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);

    for it in 1..=cfg.max_iters {
        iterations = it;
        // (I + A^T A) x = (z - u1) + A^T (v - u2), by Woodbury.
        let q = &z - &u1 + a.apply_t_vec(&(&v - &u2));
        let x = &q - a.apply_t_vec(&(factor.as_ref() * &q));
        let ax = a.apply_vec(&x);

        std::mem::swap(&mut z, &mut z_old);
        let xu = &x + &u1;
        soft_threshold_into(&mut z, &xu, weights, 1.0 / pen.rho);
        let v_old = v.clone();
        v = ball_project(&(&ax + &u2), y, eps);

        u1 = xu - &z;
        u2 += &ax - &v;

        let r1 = (&x - &z).norm_squared();
        let r2 = (&ax - &v).norm_squared();
        primal = (r1 + r2).sqrt();
        dual = pen.rho * ((&z - &z_old) + a.apply_t_vec(&(&v - &v_old))).norm();
        let eps_pri =
            cfg.abs_tol * sqrt_dim + cfg.rel_tol * (x.norm_squared() + ax.norm_squared()).sqrt().max(
                (z.norm_squared() + v.norm_squared()).sqrt(),
            );
        let eps_dual = cfg.abs_tol * sqrt_dim
            + cfg.rel_tol * pen.rho * (&u1 + a.apply_t_vec(&u2)).norm();
        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }
        if let Some(scale) = pen.adapt(primal, dual) {
            u1 *= scale;
            u2 *= scale;
        }
    }

    // Pull z back into the constraint set along the minimum-norm direction.
    let mut solution = z;
    let r = a.apply_vec(&solution) - y;
    let rn = r.norm();
    if rn > eps {
        if let Ok(aff) = a.affine_factor() {
            let theta = 1.0 - eps / rn;
            solution -= aff.tr_mul(&r) * theta;
        }
    }
    let objective = w.weighted_norm(solution.as_slice());
    finish(a, y, eps, solution, objective, primal, dual, iterations, converged, false, cfg)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    a: &SensingMatrix,
    y: &DVector<f64>,
    eps: f64,
    solution: DVector<f64>,
    objective: f64,
    primal_residual: f64,
    dual_residual: f64,
    iterations: usize,
    converged: bool,
    polished: bool,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    let gap = ((a.apply_vec(&solution) - y).norm() - eps).max(0.0);
    let converged = converged && gap <= cfg.feasibility_tol(y.norm());
    Ok(SolverResult {
        solution: SignalVector::new(solution.data.into())?,
        objective,
        primal_residual,
        dual_residual,
        feasibility_gap: gap,
        iterations,
        converged,
        polished,
    })
}

/// Distinguishes an inconsistent system from a merely rank-deficient one.
fn check_range(a: &SensingMatrix, y: &DVector<f64>) -> Result<()> {
    let svd = a.matrix().clone().svd(true, true);
    let x = svd
        .solve(y, 1e-12 * svd.singular_values.max())
        .map_err(|e| Error::Factorization(e.to_string()))?;
    let res = (a.apply_vec(&x) - y).norm();
    if res > 1e-9 * (1.0 + y.norm()) {
        return Err(Error::Infeasible(format!(
            "eps = 0 but y is outside the range of A (least-squares residual {:.3e})",
            res
        )));
    }
    Ok(())
}

struct Polished {
    solution: DVector<f64>,
    objective: f64,
    certified: bool,
}

fn polish_support(
    a: &SensingMatrix,
    y: &DVector<f64>,
    w: &WeightVector,
    z: &DVector<f64>,
    objective: f64,
) -> Option<Polished> {
    let n = a.rows();
    let scale = z.amax();
    if scale == 0.0 {
        return None;
    }
    let nonzero: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
    let mut candidates = Vec::new();
    if nonzero.len() <= n {
        candidates.push(nonzero.clone());
    }
    let mut by_size = nonzero;
    by_size.sort_by(|&i, &j| z[j].abs().total_cmp(&z[i].abs()).then(i.cmp(&j)));
    by_size.truncate(n);
    by_size.sort_unstable();
    if candidates.first() != Some(&by_size) {
        candidates.push(by_size);
    }

    let tol = 1e-10 * (1.0 + y.norm());
    let mut best: Option<Polished> = None;
    for support in candidates {
        let Some((x, lambda)) = support_least_squares(a, y, w, &support) else {
            continue;
        };
        if (a.apply_vec(&x) - y).norm() > tol {
            continue;
        }
        let obj = w.weighted_norm(x.as_slice());
        let bound = best.as_ref().map_or(objective, |b| b.objective);
        if obj > bound * (1.0 + 1e-9) + 1e-14 {
            continue;
        }
        let certified = certify(a, w, &support, &lambda);
        best = Some(Polished {
            solution: x,
            objective: obj,
            certified,
        });
    }
    best
}

/// Least squares on the columns in `support`, plus the minimum-norm dual
/// `lambda` with `A_S^T lambda = w_S sign(x_S)`.
fn support_least_squares(
    a: &SensingMatrix,
    y: &DVector<f64>,
    w: &WeightVector,
    support: &[usize],
) -> Option<(DVector<f64>, DVector<f64>)> {
    if support.is_empty() {
        return None;
    }
    let cols: Vec<_> = support.iter().map(|&j| a.matrix().column(j)).collect();
    let a_s = DMatrix::from_columns(&cols);
    let chol = (a_s.transpose() * &a_s).cholesky()?;
    let diag = chol.l_dirty().diagonal();
    if diag.min() <= 1e-7 * diag.max() {
        return None;
    }
    let xs = chol.solve(&a_s.tr_mul(y));
    let mut x = DVector::zeros(a.cols());
    let mut b = DVector::zeros(support.len());
    for (k, &j) in support.iter().enumerate() {
        x[j] = xs[k];
        b[k] = w.as_slice()[j] * xs[k].signum() * f64::from(xs[k] != 0.0);
    }
    let lambda = &a_s * chol.solve(&b);
    Some((x, lambda))
}

fn certify(a: &SensingMatrix, w: &WeightVector, support: &[usize], lambda: &DVector<f64>) -> bool {
    let corr = a.apply_t_vec(lambda);
    let ws = w.as_slice();
    let mut on = vec![false; ws.len()];
    for &j in support {
        on[j] = true;
    }
    (0..ws.len()).all(|j| on[j] || corr[j].abs() <= ws[j] * (1.0 + 1e-9) + 1e-12)
}

fn ball_project(v: &DVector<f64>, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let d = v - center;
    let dn = d.norm();
    if dn <= radius {
        v.clone()
    } else {
        center + d * (radius / dn)
    }
}

/// Proximal map of `tau * ||.||_{1,w}`: `sign(v_i) max(|v_i| - tau w_i, 0)`.
pub fn prox_weighted_l1(v: &SignalVector, w: &WeightVector, tau: f64) -> Result<SignalVector> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            what: "weight length vs signal length",
            expected: v.len(),
            got: w.len(),
        });
    }
    let vv = DVector::from_column_slice(v.as_slice());
    let mut out = DVector::zeros(v.len());
    soft_threshold_into(&mut out, &vv, w.as_slice(), tau);
    SignalVector::new(out.data.into())
}

/// Euclidean projection onto the ball `||. - center||_2 <= radius`.
pub fn project_l2_ball(v: &[f64], center: &[f64], radius: f64) -> Result<Vec<f64>> {
    if v.len() != center.len() {
        return Err(Error::DimensionMismatch {
            what: "ball center length",
            expected: v.len(),
            got: center.len(),
        });
    }
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative radius {}", radius)));
    }
    let out = ball_project(
        &DVector::from_column_slice(v),
        &DVector::from_column_slice(center),
        radius,
    );
    Ok(out.data.into())
}

/// Euclidean projection onto `{u : A u = y}`: `u - A^T (A A^T)^{-1} (A u - y)`.
pub fn project_affine(u: &SignalVector, a: &SensingMatrix, y: &[f64]) -> Result<SignalVector> {
    if u.len() != a.cols() || y.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            what: "projection operands",
            expected: a.cols(),
            got: u.len(),
        });
    }
    let factor = a.affine_factor()?;
    let uv = DVector::from_column_slice(u.as_slice());
    let r = a.apply_vec(&uv) - DVector::from_column_slice(y);
    SignalVector::new((uv - factor.tr_mul(&r)).data.into())
}

/// `||A u - y||_2`.
pub fn residual_norm(a: &SensingMatrix, u: &SignalVector, y: &[f64]) -> f64 {
    let au = a.apply(u.as_slice());
    norm2(&au.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>())
}
