//! Constants and sufficient conditions behind support-driven reweighting.
//!
//! Weighted recovery guarantee: with a support estimate `T~` of size `k` and
//! accuracy `alpha0 = s0/k > 1/2`, weight `omega` on `T~`, and
//! `gamma = omega + (1 - omega) sqrt(2 - 2 alpha0)`, a matrix with
//! `delta_{(a+1)k} < (a - gamma^2)/(a + gamma^2)` guarantees that the
//! largest `s0 + d1` entries of `x` land in the top-`k` support of the
//! weighted solution whenever
//!
//! ```text
//! |x(s0 + d1)| >= (omega eta + 1) ||x_{T0^c}||_1 + (1 - omega) eta ||x_{T0^c ∩ T~^c}||_1
//! ```
//!
//! Intersection accuracy: when membership events are independent and
//! equiprobable, `P(T0 | T~ ∩ T_omega) = s0 / (rho k)` with
//! `rho = P(T_omega | T~)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::sensing::SensingMatrix;
use crate::sigcore::{top_support, IndexSet, SignalVector};

/// A restricted isometry constant of order `k`, or an upper bound on one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RipEstimate {
    pub k: usize,
    pub delta: f64,
    /// Computed by exhaustive search rather than supplied as a bound.
    pub is_exact: bool,
}

impl RipEstimate {
    pub fn bound(k: usize, delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidArgument(format!(
                "RIP constant must lie in [0, 1), got {}",
                delta
            )));
        }
        Ok(RipEstimate {
            k,
            delta,
            is_exact: false,
        })
    }

    /// Whether the constant certifies anything (`delta < 1`).
    pub fn is_informative(&self) -> bool {
        self.delta < 1.0
    }
}

/// `gamma = omega + (1 - omega) sqrt(2 - 2 alpha)`.
pub fn gamma(omega: f64, alpha: f64) -> f64 {
    omega + (1.0 - omega) * (2.0 - 2.0 * alpha).max(0.0).sqrt()
}

/// `delta_{(a+1)k} < (a - gamma^2) / (a + gamma^2)`; false whenever the
/// bound is not positive.
pub fn rip_condition_ok(a: f64, gamma: f64, delta_a1k: f64) -> bool {
    let g2 = gamma * gamma;
    a > g2 && delta_a1k < (a - g2) / (a + g2)
}

/// The error-bound constant `eta_omega(alpha)` of the weighted l1-l1
/// instance-optimality estimate.
///
/// `2 (sqrt(1 + d_ak) + sqrt(a) sqrt(1 - d_(a+1)k)) / (sqrt(a) sqrt(1 - d_(a+1)k) - gamma sqrt(1 + d_ak))`.
/// Numerator and denominator share the same `delta_{(a+1)k}`.
pub fn eta(omega: f64, alpha: f64, a: f64, delta_ak: f64, delta_a1k: f64) -> Result<f64> {
    let g = gamma(omega, alpha);
    if !rip_condition_ok(a, g, delta_a1k) {
        return Err(Error::ConditionViolated(format!(
            "delta_(a+1)k = {} does not satisfy the RIP bound {} for a = {}, gamma = {}",
            delta_a1k,
            (a - g * g) / (a + g * g),
            a,
            g
        )));
    }
    let lower = a.sqrt() * (1.0 - delta_a1k).sqrt();
    let upper = (1.0 + delta_ak).sqrt();
    let denom = lower - g * upper;
    if !(denom > 0.0) {
        return Err(Error::ConditionViolated(format!(
            "eta denominator is not positive ({})",
            denom
        )));
    }
    Ok(2.0 * (upper + lower) / denom)
}

/// Null space property constant `c0 = 1 + sqrt(1 + delta_ak) / (sqrt(a) sqrt(1 - delta_(a+1)k))`.
pub fn nsp_constant(a: f64, delta_ak: f64, delta_a1k: f64) -> Result<f64> {
    if !(delta_a1k < 1.0) || !(a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need a > 0 and delta_(a+1)k < 1, got a = {}, delta = {}",
            a, delta_a1k
        )));
    }
    Ok(1.0 + (1.0 + delta_ak).sqrt() / (a.sqrt() * (1.0 - delta_a1k).sqrt()))
}

/// Right-hand side of the decay condition.
pub fn decay_threshold(x: &SignalVector, t0: &IndexSet, t_tilde: &IndexSet, omega: f64, eta: f64) -> f64 {
    let off_t0 = t0.complement();
    let off_both = t0.union(t_tilde).complement();
    (omega * eta + 1.0) * x.norm1_on(&off_t0) + (1.0 - omega) * eta * x.norm1_on(&off_both)
}

/// Largest `d1 >= 1` such that the `(s0 + d1)`-th largest magnitude of `x`
/// is nonzero and at least the decay threshold; `None` if no `d1` qualifies.
pub fn decay_condition_max_d1(
    x: &SignalVector,
    t0: &IndexSet,
    t_tilde: &IndexSet,
    omega: f64,
    eta: f64,
    s0: usize,
) -> Result<Option<usize>> {
    if s0 == 0 {
        return Err(Error::InvalidArgument("s0 must be at least 1".into()));
    }
    let rhs = decay_threshold(x, t0, t_tilde, omega, eta);
    let mut mags: Vec<f64> = x.as_slice().iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    // Magnitudes are sorted, so the qualifying ranks form a prefix.
    let qualifying = mags.iter().take_while(|&&m| m > 0.0 && m >= rhs).count();
    Ok(qualifying.checked_sub(s0).filter(|&d| d >= 1))
}

/// Inputs of the weighted recovery guarantee.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Inputs {
    pub omega: f64,
    pub a: f64,
    pub rip_ak: RipEstimate,
    pub rip_a1k: RipEstimate,
    pub s0: usize,
    pub k: usize,
}

impl Prop1Inputs {
    pub fn alpha0(&self) -> f64 {
        self.s0 as f64 / self.k as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::InvalidArgument(format!("omega {} outside [0, 1]", self.omega)));
        }
        if !(self.a > 1.0) {
            return Err(Error::InvalidArgument(format!("a must exceed 1, got {}", self.a)));
        }
        if self.k == 0 || 2 * self.s0 <= self.k || self.s0 > self.k {
            return Err(Error::HypothesisViolated(format!(
                "need k/2 < s0 <= k, got s0 = {}, k = {}",
                self.s0, self.k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Report {
    pub alpha0: f64,
    pub gamma: f64,
    pub rip_bound: f64,
    pub rip_ok: bool,
    pub eta: Option<f64>,
    pub threshold: Option<f64>,
    /// Largest `d1` satisfying the decay condition.
    pub d1: Option<usize>,
}

impl Prop1Report {
    /// Number of leading entries guaranteed to land in the top-`k` support
    /// of the weighted solution.
    pub fn guaranteed(&self, s0: usize) -> Option<usize> {
        match (self.rip_ok, self.d1) {
            (true, Some(d)) => Some(s0 + d),
            _ => None,
        }
    }
}

/// Evaluates every hypothesis of the weighted recovery guarantee for a given
/// signal and support estimate.
pub fn check_prop1(inputs: &Prop1Inputs, x: &SignalVector, t_tilde: &IndexSet) -> Result<Prop1Report> {
    inputs.validate()?;
    let alpha0 = inputs.alpha0();
    let g = gamma(inputs.omega, alpha0);
    let rip_ok = rip_condition_ok(inputs.a, g, inputs.rip_a1k.delta);
    let t0 = top_support(x, inputs.k)?;
    let eta = eta(inputs.omega, alpha0, inputs.a, inputs.rip_ak.delta, inputs.rip_a1k.delta).ok();
    let threshold = eta.map(|e| decay_threshold(x, &t0, t_tilde, inputs.omega, e));
    let d1 = match eta {
        Some(e) => decay_condition_max_d1(x, &t0, t_tilde, inputs.omega, e, inputs.s0)?,
        None => None,
    };
    Ok(Prop1Report {
        alpha0,
        gamma: g,
        rip_bound: (inputs.a - g * g) / (inputs.a + g * g),
        rip_ok,
        eta,
        threshold,
        d1,
    })
}

/// `supp(x_{s}) ⊆ supp(x_hat_k)`: the conclusion of the guarantee for `s = s0 + d1`.
pub fn leading_support_contained(x: &SignalVector, x_hat: &SignalVector, s: usize, k: usize) -> Result<bool> {
    Ok(top_support(x, s)?.is_subset(&top_support(x_hat, k)?))
}

pub const RIP_SUBSET_LIMIT: u128 = 1_000_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    c
}

/// Exact `delta_k = max_S max(lambda_max(A_S^T A_S) - 1, 1 - lambda_min(A_S^T A_S))`
/// over all `k`-column subsets `S`.
pub fn brute_force_rip(a: &SensingMatrix, k: usize) -> Result<RipEstimate> {
    let big_n = a.cols();
    if k == 0 || k > big_n {
        return Err(Error::InvalidArgument(format!(
            "RIP order must lie in 1..={}, got {}",
            big_n, k
        )));
    }
    let count = binomial(big_n, k);
    if count > RIP_SUBSET_LIMIT {
        return Err(Error::TooLarge(count, RIP_SUBSET_LIMIT));
    }
    let gram_full = a.matrix().tr_mul(a.matrix());
    let mut subset: Vec<usize> = (0..k).collect();
    let mut delta: f64 = 0.0;
    loop {
        let g = DMatrix::from_fn(k, k, |i, j| gram_full[(subset[i], subset[j])]);
        let eig = SymmetricEigen::new(g).eigenvalues;
        delta = delta.max(eig.max() - 1.0).max(1.0 - eig.min());
        if !next_combination(&mut subset, big_n) {
            break;
        }
    }
    Ok(RipEstimate {
        k,
        delta,
        is_exact: true,
    })
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop2Accuracy {
    /// `min(1, s0 / (rho k))`.
    pub accuracy: f64,
    pub raw: f64,
    /// The raw value exceeded 1.
    pub clamped: bool,
}

/// Intersection accuracy `s0 / (rho k)`.
pub fn prop2_accuracy(s0: usize, k: usize, rho: f64) -> Result<Prop2Accuracy> {
    if k == 0 || s0 > k {
        return Err(Error::InvalidArgument(format!("need 0 <= s0 <= k, k >= 1; got s0 = {}, k = {}", s0, k)));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1], got {}", rho)));
    }
    let base = s0 as f64 / k as f64;
    if rho < base {
        return Err(Error::HypothesisViolated(format!(
            "rho = {} is below s0/k = {}",
            rho, base
        )));
    }
    let raw = base / rho;
    Ok(Prop2Accuracy {
        accuracy: raw.min(1.0),
        raw,
        clamped: raw > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop2Simulation {
    /// Mean over used trials of `|T0 ∩ Omega| / |Omega|`.
    pub accuracy: f64,
    /// Mean over used trials of `|Omega| / |T~|`, the empirical `rho`.
    pub rho: f64,
    pub used_trials: usize,
    pub discarded_trials: usize,
}

/// Monte Carlo estimate of `P(i in T0 | i in T~ ∩ T_omega)`.
///
/// `T0 = {0..k}`. `T~` holds the `s0` leading indices plus `k - s0`
/// indices drawn uniformly without replacement from outside `T0`;
/// `T_omega` likewise with `s1`. The two draws are independent. Trials with
/// an empty intersection are discarded and counted.
pub fn prop2_simulate(
    big_n: usize,
    k: usize,
    s0: usize,
    s1: usize,
    trials: usize,
    seed: u64,
) -> Result<Prop2Simulation> {
    if !(s0 <= s1 && s1 <= k && k <= big_n) || trials == 0 {
        return Err(Error::InvalidArgument(format!(
            "need s0 <= s1 <= k <= N and trials >= 1; got s0 = {}, s1 = {}, k = {}, N = {}, trials = {}",
            s0, s1, k, big_n, trials
        )));
    }
    let pool = big_n - k;
    if k - s0 > pool {
        return Err(Error::InvalidArgument(format!(
            "cannot place {} off-support indices among {}",
            k - s0,
            pool
        )));
    }
    let mut rng = rng_from_seed(seed);
    let (mut acc_sum, mut rho_sum) = (0.0, 0.0);
    let mut used = 0usize;
    for _ in 0..trials {
        let mut extra0 = sample(&mut rng, pool, k - s0).into_vec();
        let extra1 = sample(&mut rng, pool, k - s1).into_vec();
        extra0.sort_unstable();
        let collisions = extra1.iter().filter(|i| extra0.binary_search(i).is_ok()).count();
        // T0 ∩ T~ ∩ T_omega = {0..s0}; the rest of Omega is collisions.
        let omega = s0 + collisions;
        if omega == 0 {
            continue;
        }
        used += 1;
        acc_sum += s0 as f64 / omega as f64;
        rho_sum += omega as f64 / k as f64;
    }
    if used == 0 {
        return Err(Error::Degenerate(format!(
            "all {} trials had an empty intersection",
            trials
        )));
    }
    Ok(Prop2Simulation {
        accuracy: acc_sum / used as f64,
        rho: rho_sum / used as f64,
        used_trials: used,
        discarded_trials: trials - used,
    })
}
