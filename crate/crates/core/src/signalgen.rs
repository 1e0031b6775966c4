//! Test signals: exactly k-sparse and power-law compressible.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::sigcore::SignalVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SignalSpec {
    /// `k` nonzeros at uniformly random positions, standard normal amplitudes.
    Sparse { dim: usize, k: usize, seed: u64 },
    /// `|x_i| = c i^{-p}` (1-based `i`) with independent random signs.
    Compressible { dim: usize, p: f64, c: f64, seed: u64 },
}

impl SignalSpec {
    pub fn generate(&self) -> Result<SignalVector> {
        match *self {
            SignalSpec::Sparse { dim, k, seed } => gen_sparse(dim, k, seed),
            SignalSpec::Compressible { dim, p, c, seed } => gen_compressible(dim, p, c, seed),
        }
    }
}

pub fn gen_sparse(dim: usize, k: usize, seed: u64) -> Result<SignalVector> {
    if k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!(
            "sparsity must lie in 1..={}, got {}",
            dim, k
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut x = vec![0.0; dim];
    for i in sample(&mut rng, dim, k) {
        let mut v = 0.0;
        while v == 0.0 {
            v = rng.sample(StandardNormal);
        }
        x[i] = v;
    }
    SignalVector::new(x)
}

pub fn gen_compressible(dim: usize, p: f64, c: f64, seed: u64) -> Result<SignalVector> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("decay power must exceed 1, got {}", p)));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {}", c)));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let x = (1..=dim)
        .map(|i| {
            let m = c * (i as f64).powf(-p);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    SignalVector::new(x)
}
