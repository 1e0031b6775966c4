//! Signal vectors, index sets and support selection.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite real vector of fixed ambient dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SignalVector(Vec<f64>);

impl SignalVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "signal entry {} is not finite ({})",
                i, values[i]
            )));
        }
        Ok(SignalVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        SignalVector(vec![0.0; dim])
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

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Number of nonzero entries.
    pub fn count_nonzero(&self) -> usize {
        self.0.iter().filter(|&&v| v != 0.0).count()
    }

    /// `||self - other||_2`.
    pub fn distance(&self, other: &SignalVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// l1 norm of the entries indexed by `set`.
    pub fn norm1_on(&self, set: &IndexSet) -> f64 {
        set.iter().map(|i| self.0[i].abs()).sum()
    }
}

impl TryFrom<Vec<f64>> for SignalVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SignalVector::new(v)
    }
}

impl From<SignalVector> for Vec<f64> {
    fn from(v: SignalVector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for SignalVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A set of coordinate indices in `0..dim`, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
    dim: usize,
}

impl IndexSet {
    pub fn empty(dim: usize) -> Self {
        IndexSet {
            indices: Vec::new(),
            dim,
        }
    }

    pub fn full(dim: usize) -> Self {
        IndexSet {
            indices: (0..dim).collect(),
            dim,
        }
    }

    /// Builds a set from 0-based indices in any order. Duplicates are merged.
    pub fn new(dim: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidArgument(format!(
                "index {} out of range for dimension {}",
                bad, dim
            )));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(IndexSet { indices, dim })
    }

    /// Builds a set from 1-based indices, as used in files and on the command line.
    pub fn from_one_based(dim: usize, indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidArgument(
                "1-based index set contains 0".into(),
            ));
        }
        IndexSet::new(dim, indices.iter().map(|&i| i - 1))
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|&i| i + 1).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        let indices = self
            .indices
            .iter()
            .copied()
            .filter(|&i| other.contains(i))
            .collect();
        IndexSet {
            indices,
            dim: self.dim,
        }
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut indices: Vec<usize> = self.iter().chain(other.iter()).collect();
        indices.sort_unstable();
        indices.dedup();
        IndexSet {
            indices,
            dim: self.dim.max(other.dim),
        }
    }

    pub fn complement(&self) -> IndexSet {
        IndexSet {
            indices: (0..self.dim).filter(|&i| !self.contains(i)).collect(),
            dim: self.dim,
        }
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (j, i) in self.indices.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

impl Serialize for IndexSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

/// Indices ordered by decreasing magnitude, ties by increasing index.
fn magnitude_order(v: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| match v[b].abs().total_cmp(&v[a].abs()) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    order
}

/// Indices of the `s` largest-magnitude entries of `v`.
///
/// Ties go to the smaller index. When `s` exceeds the number of nonzeros the
/// remaining slots are filled with the smallest-index zero entries, so the
/// result always has exactly `s` members.
pub fn top_support(v: &SignalVector, s: usize) -> Result<IndexSet> {
    if s > v.len() {
        return Err(Error::InvalidArgument(format!(
            "support size {} exceeds dimension {}",
            s,
            v.len()
        )));
    }
    let mut order = magnitude_order(v.as_slice());
    order.truncate(s);
    IndexSet::new(v.len(), order)
}

/// Smallest `l` such that the `l` largest-magnitude entries carry at least a
/// `p_hat` fraction of the l2 norm of `v`.
///
/// Returns 0 exactly when `v` is all zero; callers treat that as the
/// degenerate case.
pub fn energy_support_size(v: &SignalVector, p_hat: f64) -> Result<usize> {
    if !(p_hat > 0.0 && p_hat <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "energy fraction must lie in (0, 1], got {}",
            p_hat
        )));
    }
    let mut sq: Vec<f64> = v.as_slice().iter().map(|x| x * x).collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    // Summing in the scan order makes the final prefix equal the total exactly.
    let total: f64 = sq.iter().sum();
    if total == 0.0 {
        return Ok(0);
    }
    let target = p_hat * p_hat * total;
    let mut acc = 0.0;
    for (l, s) in sq.iter().enumerate() {
        acc += s;
        if acc >= target {
            return Ok(l + 1);
        }
    }
    Ok(sq.len())
}

/// Copy of `v` with all but its `k` largest-magnitude entries set to zero.
pub fn best_k_term(v: &SignalVector, k: usize) -> Result<SignalVector> {
    let keep = top_support(v, k)?;
    let mut out = vec![0.0; v.len()];
    for i in keep.iter() {
        out[i] = v[i];
    }
    Ok(SignalVector(out))
}

/// Fraction of `est` that lies inside `truth`.
pub fn support_accuracy(est: &IndexSet, truth: &IndexSet) -> Result<f64> {
    if est.is_empty() {
        return Err(Error::UndefinedAccuracy);
    }
    Ok(est.intersection(truth).len() as f64 / est.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> SignalVector {
        SignalVector::new(v.to_vec()).unwrap()
    }

    fn one_based(dim: usize, idx: &[usize]) -> IndexSet {
        IndexSet::from_one_based(dim, idx).unwrap()
    }

    #[test]
    fn top_support_examples() {
        let v = sv(&[3.0, -5.0, 0.0, 2.0]);
        assert_eq!(top_support(&v, 2).unwrap(), one_based(4, &[1, 2]));
        assert_eq!(
            top_support(&sv(&[1.0, 1.0, 1.0]), 2).unwrap(),
            one_based(3, &[1, 2])
        );
        assert!(top_support(&v, 0).unwrap().is_empty());
        assert!(matches!(top_support(&v, 5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn top_support_fills_with_low_index_zeros() {
        let v = sv(&[0.0, 0.0, 4.0, 0.0, 1.0]);
        assert_eq!(top_support(&v, 3).unwrap(), one_based(5, &[1, 3, 5]));
    }

    #[test]
    fn energy_support_examples() {
        let mut v = vec![0.0; 10];
        v[0] = 10.0;
        v[1] = 1.0;
        assert_eq!(energy_support_size(&sv(&v), 0.99).unwrap(), 1);
        assert_eq!(energy_support_size(&sv(&[1.0; 4]), 0.99).unwrap(), 4);
        assert_eq!(energy_support_size(&sv(&[5.0]), 1.0).unwrap(), 1);
        assert_eq!(energy_support_size(&sv(&[0.0; 3]), 0.5).unwrap(), 0);
        assert!(energy_support_size(&sv(&[1.0]), 0.0).is_err());
        assert!(energy_support_size(&sv(&[1.0]), 1.5).is_err());
    }

    #[test]
    fn energy_support_full_fraction_counts_all_nonzeros() {
        let v = sv(&[0.3, -0.1, 0.0, 7.0, 1e-3]);
        assert_eq!(energy_support_size(&v, 1.0).unwrap(), 4);
    }

    #[test]
    fn best_k_term_examples() {
        let v = sv(&[3.0, -5.0, 0.0, 2.0]);
        assert_eq!(best_k_term(&v, 2).unwrap(), sv(&[3.0, -5.0, 0.0, 0.0]));
        assert!(best_k_term(&v, 0).unwrap().is_zero());
        assert_eq!(best_k_term(&v, 4).unwrap(), v);
    }

    #[test]
    fn support_accuracy_examples() {
        let est = one_based(8, &[1, 2, 3, 4]);
        let truth = one_based(8, &[1, 2, 5, 6]);
        assert_eq!(support_accuracy(&est, &truth).unwrap(), 0.5);
        assert_eq!(support_accuracy(&truth, &truth).unwrap(), 1.0);
        assert_eq!(
            support_accuracy(&one_based(8, &[3, 4]), &one_based(8, &[5])).unwrap(),
            0.0
        );
        assert_eq!(
            support_accuracy(&IndexSet::empty(8), &truth),
            Err(Error::UndefinedAccuracy)
        );
    }

    #[test]
    fn rejects_non_finite() {
        assert!(SignalVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(SignalVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn index_set_boundaries() {
        assert!(IndexSet::new(3, [3]).is_err());
        assert!(IndexSet::from_one_based(3, &[0]).is_err());
        let s = IndexSet::new(5, [4, 1, 1]).unwrap();
        assert_eq!(s.as_slice(), &[1, 4]);
        assert_eq!(s.to_string(), "{2,5}");
        assert_eq!(s.complement().as_slice(), &[0, 2, 3]);
    }

    fn signal() -> impl Strategy<Value = Vec<f64>> {
        // Small integer-valued entries make magnitude ties common.
        prop::collection::vec((-4i32..=4).prop_map(f64::from), 1..24)
    }

    proptest! {
        #[test]
        fn top_support_is_nested(v in signal()) {
            let v = sv(&v);
            for s in 0..v.len() {
                let a = top_support(&v, s).unwrap();
                let b = top_support(&v, s + 1).unwrap();
                prop_assert_eq!(a.len(), s);
                prop_assert!(a.is_subset(&b));
            }
        }

        #[test]
        fn best_k_term_error_nonincreasing(v in signal()) {
            let v = sv(&v);
            let mut last = f64::INFINITY;
            for k in 0..=v.len() {
                let e = best_k_term(&v, k).unwrap().distance(&v);
                prop_assert!(e <= last);
                last = e;
            }
        }

        #[test]
        fn energy_support_monotone_in_fraction(
            v in prop::collection::vec(-10.0f64..10.0, 1..30),
            p in 0.01f64..1.0,
            q in 0.01f64..1.0,
        ) {
            let v = sv(&v);
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(energy_support_size(&v, lo).unwrap() <= energy_support_size(&v, hi).unwrap());
        }

        #[test]
        fn accuracy_invariant_under_permutation(
            est in prop::collection::btree_set(0usize..12, 1..12),
            truth in prop::collection::btree_set(0usize..12, 0..12),
            shift in 0usize..12,
        ) {
            let perm = |i: usize| (i + shift) % 12;
            let e = IndexSet::new(12, est.iter().copied()).unwrap();
            let t = IndexSet::new(12, truth.iter().copied()).unwrap();
            let pe = IndexSet::new(12, est.iter().map(|&i| perm(i))).unwrap();
            let pt = IndexSet::new(12, truth.iter().map(|&i| perm(i))).unwrap();
            prop_assert_eq!(support_accuracy(&e, &t).unwrap(), support_accuracy(&pe, &pt).unwrap());
        }
    }
}
