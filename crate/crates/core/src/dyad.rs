//! Symmetric node-by-node matrices and their strict-upper-triangle view.
//!
//! Every dyadic statistic in the crate reads only pairs `(i, j)` with `i < j`.
//! The diagonal is stored so matrices print and compare cleanly, but no
//! statistic touches it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// What the stored diagonal means. It is inert for statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalConvention {
    /// `M[i][i] = 1` (proximity and correlation matrices).
    Unit,
    /// `M[i][i] = 0` (difference matrices).
    Zero,
}

impl DiagonalConvention {
    fn value<T: Scalar>(self) -> T {
        match self {
            DiagonalConvention::Unit => T::one(),
            DiagonalConvention::Zero => T::zero(),
        }
    }
}

/// Number of unordered pairs among `n` nodes.
#[inline]
pub fn dyad_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of pair `(i, j)`, `i < j`, in row-major strict-upper-triangle order.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_at(n: usize, k: usize) -> (usize, usize) {
    debug_assert!(k < dyad_count(n));
    let mut i = 0;
    let mut row_start = 0;
    loop {
        let row_len = n - i - 1;
        if k < row_start + row_len {
            return (i, i + 1 + (k - row_start));
        }
        row_start += row_len;
        i += 1;
    }
}

/// Dense symmetric `n x n` matrix indexed by the year's node set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadMatrix<T> {
    n: usize,
    data: Vec<T>,
    diagonal: DiagonalConvention,
    labels: Vec<String>,
}

impl<T: Scalar> DyadMatrix<T> {
    /// Build from a function evaluated once per pair `i < j` and mirrored.
    pub fn from_upper_fn<F>(labels: Vec<String>, diagonal: DiagonalConvention, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> T,
    {
        let n = labels.len();
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = diagonal.value();
            for j in (i + 1)..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DyadMatrix {
            n,
            data,
            diagonal,
            labels,
        }
    }

    /// Build from the strict-upper-triangle values in [`pair_index`] order.
    pub fn from_upper(labels: Vec<String>, diagonal: DiagonalConvention, upper: &[T]) -> Result<Self> {
        let n = labels.len();
        if upper.len() != dyad_count(n) {
            return Err(Error::DimensionMismatch {
                expected: dyad_count(n),
                found: upper.len(),
            });
        }
        let mut k = 0;
        Ok(Self::from_upper_fn(labels, diagonal, |_, _| {
            let v = upper[k];
            k += 1;
            v
        }))
    }

    /// Build from a full row-major matrix, which must be symmetric off the diagonal.
    /// The stored diagonal is replaced by the convention value.
    pub fn from_dense(labels: Vec<String>, diagonal: DiagonalConvention, dense: Vec<T>) -> Result<Self> {
        let n = labels.len();
        if dense.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: dense.len(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if dense[i * n + j] != dense[j * n + i] {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let mut data = dense;
        for i in 0..n {
            data[i * n + i] = diagonal.value();
        }
        Ok(DyadMatrix {
            n,
            data,
            diagonal,
            labels,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn diagonal(&self) -> DiagonalConvention {
        self.diagonal
    }

    pub fn dyad_count(&self) -> usize {
        dyad_count(self.n)
    }

    /// Strict-upper-triangle values in row-major order.
    pub fn upper(&self) -> DyadVector<T> {
        let mut values = Vec::with_capacity(self.dyad_count());
        for i in 0..self.n {
            values.extend_from_slice(&self.row(i)[i + 1..]);
        }
        DyadVector { n: self.n, values }
    }

    /// Principal submatrix on `nodes` (in the given order). Indices must be distinct.
    pub fn submatrix(&self, nodes: &[usize]) -> Self {
        let labels = nodes.iter().map(|&i| self.labels[i].clone()).collect();
        Self::from_upper_fn(labels, self.diagonal, |a, b| self.get(nodes[a], nodes[b]))
    }

    /// Apply `f` to every off-diagonal entry.
    pub fn map_off_diagonal<F: Fn(T) -> T>(&self, f: F) -> Self {
        Self::from_upper_fn(self.labels.clone(), self.diagonal, |i, j| f(self.get(i, j)))
    }

    /// Entrywise `self - other` off the diagonal; the result has a zero diagonal.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(Self::from_upper_fn(
            self.labels.clone(),
            DiagonalConvention::Zero,
            |i, j| self.get(i, j) - other.get(i, j),
        ))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| ((i + 1)..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Dense CSV with the node labels as header row and first column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = Vec::with_capacity(self.n + 1);
        header.push(String::new());
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec = Vec::with_capacity(self.n + 1);
            rec.push(self.labels[i].clone());
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Flattened strict upper triangle of a [`DyadMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct DyadVector<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> DyadVector<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != dyad_count(n) {
            return Err(Error::DimensionMismatch {
                expected: dyad_count(n),
                found: values.len(),
            });
        }
        Ok(DyadVector { n, values })
    }

    /// Node count of the source matrix.
    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node pair of position `k`.
    pub fn pair(&self, k: usize) -> (usize, usize) {
        pair_at(self.n, k)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[pair_index(self.n, a, b)]
    }
}
