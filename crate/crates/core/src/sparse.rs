//! Sparse vectors, bipolar labels and the basic operations on them.
//!
//! Every vector is a dense `f64` buffer tagged with an optional sparsity
//! budget `k`. The sign convention puts the boundary of a halfspace inside
//! it, so `sign(0) = +1`.

use std::fmt;
use std::ops::Neg;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A label in `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BipolarLabel {
    Negative,
    Positive,
}

impl BipolarLabel {
    pub fn value(self) -> i8 {
        match self {
            BipolarLabel::Negative => -1,
            BipolarLabel::Positive => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn from_value(value: i64) -> Result<Self> {
        match value {
            1 => Ok(BipolarLabel::Positive),
            -1 => Ok(BipolarLabel::Negative),
            other => Err(invalid(format!("bipolar label must be -1 or +1, got {other}"))),
        }
    }

    /// Indicator form `(1 + y) / 2`.
    pub fn indicator(self) -> u8 {
        match self {
            BipolarLabel::Negative => 0,
            BipolarLabel::Positive => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == BipolarLabel::Positive
    }
}

impl Neg for BipolarLabel {
    type Output = BipolarLabel;

    fn neg(self) -> BipolarLabel {
        match self {
            BipolarLabel::Negative => BipolarLabel::Positive,
            BipolarLabel::Positive => BipolarLabel::Negative,
        }
    }
}

impl fmt::Display for BipolarLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for BipolarLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for BipolarLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(deserializer)?;
        BipolarLabel::from_value(v).map_err(de::Error::custom)
    }
}

/// Sign of `t` with the boundary mapped to `+1`.
pub fn sign_bipolar(t: f64) -> Result<BipolarLabel> {
    if !t.is_finite() {
        return Err(invalid(format!("sign of non-finite value {t}")));
    }
    Ok(sign_unchecked(t))
}

#[inline]
pub(crate) fn sign_unchecked(t: f64) -> BipolarLabel {
    if t >= 0.0 {
        BipolarLabel::Positive
    } else {
        BipolarLabel::Negative
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A real vector in `ℝⁿ` with an optional sparsity budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    values: Vec<f64>,
    sparsity_budget: Option<usize>,
}

impl SparseVector {
    pub fn new(values: Vec<f64>) -> Self {
        SparseVector { values, sparsity_budget: None }
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector::new(vec![0.0; dim])
    }

    /// Builds a vector and checks that its support fits in `k` entries.
    pub fn with_budget(values: Vec<f64>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("sparsity budget must be positive"));
        }
        let v = SparseVector::new(values);
        let nnz = v.nnz();
        if nnz > k {
            return Err(invalid(format!("vector has {nnz} nonzeros, budget is {k}")));
        }
        Ok(SparseVector { sparsity_budget: Some(k), ..v })
    }

    /// Builds a vector from `(index, value)` pairs (0-based indices).
    pub fn from_entries(dim: usize, entries: &[(usize, f64)]) -> Result<Self> {
        let mut values = vec![0.0; dim];
        for &(i, v) in entries {
            if i >= dim {
                return Err(invalid(format!("entry index {i} out of range for dimension {dim}")));
            }
            values[i] = v;
        }
        Ok(SparseVector::new(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn ambient_dim(&self) -> usize {
        self.values.len()
    }

    pub fn sparsity_budget(&self) -> Option<usize> {
        self.sparsity_budget
    }

    /// Indices of the nonzero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn entries(&self) -> Vec<(usize, f64)> {
        self.support().into_iter().map(|i| (i, self.values[i])).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.values, other)
    }

    pub fn scaled(&self, c: f64) -> SparseVector {
        SparseVector {
            values: self.values.iter().map(|v| v * c).collect(),
            sparsity_budget: self.sparsity_budget,
        }
    }

    /// Squared Euclidean distance to `other`.
    pub fn distance_sq(&self, other: &SparseVector) -> Result<f64> {
        check_same_dim(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn truncate_top_k(&self, k: usize) -> Result<SparseVector> {
        truncate_top_k(self, k)
    }

    pub fn normalize(&self) -> Result<SparseVector> {
        normalize_euclidean(self)
    }
}

pub(crate) fn check_same_dim(a: &SparseVector, b: &SparseVector) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(invalid(format!(
            "dimension mismatch: {} vs {}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    Ok(())
}

/// Keeps the `k` largest entries by magnitude; ties go to the lower index.
pub fn truncate_top_k(v: &SparseVector, k: usize) -> Result<SparseVector> {
    let n = v.ambient_dim();
    if k > n {
        return Err(invalid(format!("cannot keep {k} entries of a {n}-dimensional vector")));
    }
    let mut order = v.support();
    order.sort_by(|&i, &j| {
        v.values[j]
            .abs()
            .partial_cmp(&v.values[i].abs())
            .expect("finite entries")
            .then(i.cmp(&j))
    });
    let mut values = vec![0.0; n];
    for &i in order.iter().take(k) {
        values[i] = v.values[i];
    }
    Ok(SparseVector {
        values,
        sparsity_budget: if k > 0 { Some(k) } else { v.sparsity_budget },
    })
}

/// `v / ‖v‖₂`.
pub fn normalize_euclidean(v: &SparseVector) -> Result<SparseVector> {
    let norm = v.norm2();
    if norm == 0.0 {
        return Err(Error::DegenerateInput("cannot normalize the zero vector".into()));
    }
    if !norm.is_finite() {
        return Err(invalid("vector has non-finite norm"));
    }
    Ok(SparseVector {
        values: v.values.iter().map(|x| x / norm).collect(),
        sparsity_budget: v.sparsity_budget,
    })
}

impl Serialize for SparseVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.values.serialize(serializer)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VectorRepr {
    Dense(Vec<f64>),
    Sparse { dim: usize, entries: Vec<(usize, f64)> },
}

impl<'de> Deserialize<'de> for SparseVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match VectorRepr::deserialize(deserializer)? {
            VectorRepr::Dense(values) => Ok(SparseVector::new(values)),
            VectorRepr::Sparse { dim, entries } => {
                SparseVector::from_entries(dim, &entries).map_err(de::Error::custom)
            }
        }
    }
}

/// Serializes `v` in the `{dim, entries}` form.
pub fn to_sparse_json(v: &SparseVector) -> serde_json::Value {
    serde_json::json!({ "dim": v.ambient_dim(), "entries": v.entries() })
}
