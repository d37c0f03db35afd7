//! Row-major storage for one `d`-dimensional vector per node.

use crate::error::{Error, Result};

/// `n` vectors of dimension `d`, stored contiguously node after node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVectors {
    dim: usize,
    data: Vec<f64>,
}

impl NodeVectors {
    pub fn zeros(nodes: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; nodes * dim],
        }
    }

    /// Every node holds the same vector.
    pub fn broadcast(nodes: usize, v: &[f64]) -> Self {
        let mut data = Vec::with_capacity(nodes * v.len());
        for _ in 0..nodes {
            data.extend_from_slice(v);
        }
        Self { dim: v.len(), data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn nodes(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Coordinate-wise sum over nodes.
    pub fn sum(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for row in self.rows() {
            axpy(&mut acc, 1.0, row);
        }
        acc
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.nodes() as f64;
        self.sum().into_iter().map(|v| v / n).collect()
    }

    pub(crate) fn check_shape(&self, nodes: usize, dim: usize) -> Result<()> {
        if self.nodes() != nodes {
            return Err(Error::DimensionMismatch {
                expected: nodes,
                got: self.nodes(),
            });
        }
        if self.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim,
            });
        }
        Ok(())
    }
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[inline]
pub(crate) fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}
