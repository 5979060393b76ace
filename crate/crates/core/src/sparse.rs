//! Sparse feature vectors with 1-based, strictly ascending indices.
//!
//! All pairwise operations walk both index lists in lockstep, so a kernel
//! evaluation costs O(nnz(x) + nnz(z)) and never densifies either operand.

use std::fmt;

/// A sparse vector stored as parallel index/value arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

/// Reasons a list of entries cannot form a [`SparseVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparseError {
    ZeroIndex,
    NotAscending { prev: u32, next: u32 },
    NonFinite { index: u32 },
}

impl fmt::Display for SparseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparseError::ZeroIndex => write!(f, "feature indices are 1-based; found index 0"),
            SparseError::NotAscending { prev, next } => {
                write!(
                    f,
                    "feature indices must be strictly ascending ({prev} then {next})"
                )
            }
            SparseError::NonFinite { index } => write!(f, "non-finite value at index {index}"),
        }
    }
}

impl std::error::Error for SparseError {}

impl SparseVector {
    /// The zero vector.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(entries: impl IntoIterator<Item = (u32, f64)>) -> Result<Self, SparseError> {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (index, value) in entries {
            if index == 0 {
                return Err(SparseError::ZeroIndex);
            }
            if let Some(&prev) = indices.last() {
                if index <= prev {
                    return Err(SparseError::NotAscending { prev, next: index });
                }
            }
            if !value.is_finite() {
                return Err(SparseError::NonFinite { index });
            }
            indices.push(index);
            values.push(value);
        }
        Ok(Self { indices, values })
    }

    /// Builds a sparse vector from a dense slice, dropping exact zeros.
    /// Position `j` of the slice becomes index `j + 1`.
    ///
    /// # Panics
    /// If the slice contains a non-finite value.
    pub fn from_dense(dense: &[f64]) -> Self {
        Self::new(
            dense
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, &v)| (j as u32 + 1, v)),
        )
        .expect("dense input must be finite")
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Largest stored index, or 0 for the empty vector.
    pub fn max_index(&self) -> u32 {
        self.indices.last().copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Inner product by merged traversal of both index lists.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a_idx, a_val) = (&self.indices, &self.values);
        let (b_idx, b_val) = (&other.indices, &other.values);
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a_idx.len() && j < b_idx.len() {
            match a_idx[i].cmp(&b_idx[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a_val[i] * b_val[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    /// Squared Euclidean distance by merged traversal.
    pub fn dist_sq(&self, other: &SparseVector) -> f64 {
        let (a_idx, a_val) = (&self.indices, &self.values);
        let (b_idx, b_val) = (&other.indices, &other.values);
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a_idx.len() && j < b_idx.len() {
            match a_idx[i].cmp(&b_idx[j]) {
                std::cmp::Ordering::Less => {
                    sum += a_val[i] * a_val[i];
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    sum += b_val[j] * b_val[j];
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let d = a_val[i] - b_val[j];
                    sum += d * d;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum += a_val[i..].iter().map(|v| v * v).sum::<f64>();
        sum += b_val[j..].iter().map(|v| v * v).sum::<f64>();
        sum
    }

    /// Dense copy of length `dim`. Indices above `dim` are ignored.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (index, value) in self.iter() {
            if let Some(slot) = out.get_mut(index as usize - 1) {
                *slot = value;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(entries: &[(u32, f64)]) -> SparseVector {
        SparseVector::new(entries.iter().copied()).unwrap()
    }

    #[test]
    fn rejects_bad_entries() {
        assert_eq!(
            SparseVector::new([(0, 1.0)]).unwrap_err(),
            SparseError::ZeroIndex
        );
        assert_eq!(
            SparseVector::new([(2, 1.0), (2, 3.0)]).unwrap_err(),
            SparseError::NotAscending { prev: 2, next: 2 }
        );
        assert_eq!(
            SparseVector::new([(3, 1.0), (1, 3.0)]).unwrap_err(),
            SparseError::NotAscending { prev: 3, next: 1 }
        );
        assert_eq!(
            SparseVector::new([(1, f64::NAN)]).unwrap_err(),
            SparseError::NonFinite { index: 1 }
        );
    }

    #[test]
    fn merged_ops_match_dense() {
        let a = sv(&[(1, 1.0), (3, -2.0), (7, 0.5)]);
        let b = sv(&[(2, 4.0), (3, 3.0), (8, 1.0)]);
        let (da, db) = (a.to_dense(8), b.to_dense(8));
        let dot: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
        let dist: f64 = da.iter().zip(&db).map(|(x, y)| (x - y) * (x - y)).sum();
        assert_eq!(a.dot(&b), dot);
        assert_eq!(a.dist_sq(&b), dist);
        assert_eq!(a.dist_sq(&SparseVector::zero()), a.norm_sq());
        assert_eq!(a.max_index(), 7);
        assert_eq!(SparseVector::zero().max_index(), 0);
    }

    #[test]
    fn from_dense_drops_zeros() {
        let v = SparseVector::from_dense(&[0.0, 2.0, 0.0, -1.0]);
        assert_eq!(v.indices(), &[2, 4]);
        assert_eq!(v.values(), &[2.0, -1.0]);
    }
}
