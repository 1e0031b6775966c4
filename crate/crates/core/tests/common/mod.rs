//! Test-only reference implementations.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reweight_l1::{MeasurementSet, SensingMatrix, WeightVector};

/// A basic feasible point of `A u = y`.
#[derive(Debug, Clone)]
pub struct Vertex {
    pub x: DVector<f64>,
    pub objective: f64,
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// All vertices of the equality-constrained weighted l1 problem: for every
/// column subset of size <= n with full column rank, the least-squares
/// solution on that subset, kept when it solves `A u = y`.
pub fn enumerate_vertices(a: &DMatrix<f64>, y: &DVector<f64>, w: &[f64]) -> Vec<Vertex> {
    let (n, big_n) = a.shape();
    let mut out = Vec::new();
    if y.norm() == 0.0 {
        out.push(Vertex {
            x: DVector::zeros(big_n),
            objective: 0.0,
        });
        return out;
    }
    for size in 1..=n.min(big_n) {
        combinations(big_n, size, &mut |s: &[usize]| {
            let cols: Vec<_> = s.iter().map(|&j| a.column(j)).collect();
            let a_s = DMatrix::from_columns(&cols);
            let svd = a_s.clone().svd(true, true);
            let smax = svd.singular_values.max();
            if svd.singular_values.min() <= 1e-10 * smax {
                return;
            }
            let xs = svd.solve(y, 0.0).unwrap();
            if (&a_s * &xs - y).norm() > 1e-9 * (1.0 + y.norm()) {
                return;
            }
            let mut x = DVector::zeros(big_n);
            for (k, &j) in s.iter().enumerate() {
                x[j] = xs[k];
            }
            let objective = x.iter().zip(w).map(|(v, wi)| wi * v.abs()).sum();
            out.push(Vertex { x, objective });
        });
    }
    out
}

/// Minimum-objective vertex.
pub fn vertex_oracle(a: &DMatrix<f64>, y: &DVector<f64>, w: &[f64]) -> Option<Vertex> {
    enumerate_vertices(a, y, w)
        .into_iter()
        .min_by(|p, q| p.objective.total_cmp(&q.objective))
}

/// Optimal point when it is unique by a clear margin among distinct vertices.
pub fn unique_optimum(a: &DMatrix<f64>, y: &DVector<f64>, w: &[f64]) -> Option<Vertex> {
    let mut vs = enumerate_vertices(a, y, w);
    vs.sort_by(|p, q| p.objective.total_cmp(&q.objective));
    let best = vs.first()?.clone();
    let runner_up = vs
        .iter()
        .skip(1)
        .find(|v| (&v.x - &best.x).norm() > 1e-7 * (1.0 + best.x.norm()));
    match runner_up {
        Some(r) if r.objective <= best.objective * (1.0 + 1e-4) + 1e-9 => None,
        _ => Some(best),
    }
}

/// A small random equality-constrained instance with weights in [0.1, 1].
pub struct SmallInstance {
    pub a: SensingMatrix,
    pub m: MeasurementSet,
    pub w: WeightVector,
}

pub fn small_instance(seed: u64) -> SmallInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let big_n = rng.random_range(2..=10usize);
    let n = rng.random_range(1..=big_n.min(6));
    let a = reweight_l1::gen_gaussian(n, big_n, rng.random()).unwrap();
    // Sparse ground truth so that y is typical of recovery problems.
    let k = rng.random_range(1..=big_n);
    let x = reweight_l1::signalgen::gen_sparse(big_n, k, rng.random()).unwrap();
    let m = reweight_l1::measure(&a, &x, 0.0, 0).unwrap();
    let w = WeightVector::new((0..big_n).map(|_| rng.random_range(0.1..=1.0)).collect()).unwrap();
    SmallInstance { a, m, w }
}
