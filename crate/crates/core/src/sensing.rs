//! Gaussian sensing matrices and measurements `y = A x + e`.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::sigcore::{norm2, SignalVector};

/// Dense `n x N` measurement matrix.
///
/// The factorizations needed by the solver are computed on first use and
/// cached; the cache is a `OnceLock`, so concurrent readers always observe
/// one consistent value.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    a: DMatrix<f64>,
    affine: OnceLock<std::result::Result<Arc<DMatrix<f64>>, Error>>,
    graph: OnceLock<std::result::Result<Arc<DMatrix<f64>>, Error>>,
}

impl SensingMatrix {
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidArgument("matrix has a zero dimension".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(SensingMatrix {
            a,
            affine: OnceLock::new(),
            graph: OnceLock::new(),
        })
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix data length",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(DMatrix::identity(dim, dim)).expect("identity is valid")
    }

    /// Number of measurements `n`.
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Ambient dimension `N`.
    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.a.len());
        for i in 0..self.rows() {
            out.extend(self.a.row(i).iter());
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.a * DVector::from_column_slice(x)).data.into()
    }

    pub(crate) fn apply_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    pub(crate) fn apply_t_vec(&self, r: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(r)
    }

    /// `(A A^T)^{-1} A`, used for the projection onto `{u : A u = y}`.
    pub(crate) fn affine_factor(&self) -> Result<Arc<DMatrix<f64>>> {
        self.affine
            .get_or_init(|| {
                let gram = &self.a * self.a.transpose();
                solve_spd(gram, &self.a, "A A^T").map(Arc::new)
            })
            .clone()
    }

    /// `(I + A A^T)^{-1} A`, used for the graph-form least-squares step.
    pub(crate) fn graph_factor(&self) -> Result<Arc<DMatrix<f64>>> {
        self.graph
            .get_or_init(|| {
                let n = self.rows();
                let gram = &self.a * self.a.transpose() + DMatrix::identity(n, n);
                solve_spd(gram, &self.a, "I + A A^T").map(Arc::new)
            })
            .clone()
    }
}

fn solve_spd(gram: DMatrix<f64>, rhs: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Factorization(format!("{} is not positive definite", name)))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    // Pivots below 1e-6 of the largest mean a condition number past 1e12.
    if !(lo > 1e-6 * hi) {
        return Err(Error::Factorization(format!(
            "{} is numerically rank deficient (pivot ratio {:.3e})",
            name,
            lo / hi
        )));
    }
    Ok(chol.solve(rhs))
}

/// Measurements together with the noise bound used by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub y: Vec<f64>,
    pub epsilon: f64,
}

impl MeasurementSet {
    pub fn new(y: Vec<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise bound must be finite and nonnegative, got {}",
                epsilon
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("measurements are not finite".into()));
        }
        Ok(MeasurementSet { y, epsilon })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y_norm(&self) -> f64 {
        norm2(&self.y)
    }
}

/// `n x N` matrix with i.i.d. `N(0, 1/n)` entries, filled in row-major order
/// from a ChaCha20 stream seeded with `seed`.
pub fn gen_gaussian(n: usize, big_n: usize, seed: u64) -> Result<SensingMatrix> {
    if n == 0 || big_n == 0 {
        return Err(Error::InvalidArgument(format!(
            "matrix dimensions must be positive, got {}x{}",
            n, big_n
        )));
    }
    let mut rng = rng_from_seed(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let data: Vec<f64> = (0..n * big_n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    SensingMatrix::from_row_slice(n, big_n, &data)
}

/// Takes measurements `y = A x + e` where `e` is uniform on the sphere of
/// radius `noise_norm`. The returned noise bound equals `noise_norm`.
pub fn measure(
    a: &SensingMatrix,
    x: &SignalVector,
    noise_norm: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            what: "signal length vs matrix columns",
            expected: a.cols(),
            got: x.len(),
        });
    }
    if !(noise_norm >= 0.0 && noise_norm.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise norm must be finite and nonnegative, got {}",
            noise_norm
        )));
    }
    let mut y = a.apply(x.as_slice());
    if noise_norm > 0.0 {
        let mut rng = rng_from_seed(seed);
        let mut e: Vec<f64> = Vec::with_capacity(y.len());
        let mut len = 0.0;
        while len == 0.0 {
            e = (0..y.len())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            len = norm2(&e);
        }
        for (yi, ei) in y.iter_mut().zip(&e) {
            *yi += noise_norm * ei / len;
        }
    }
    MeasurementSet::new(y, noise_norm)
}
