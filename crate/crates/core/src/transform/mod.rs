//! Per-block graph construction, graph Fourier transform and the DCT
//! baseline.

mod dct;
mod eigen;
mod graph;
mod morton;

pub use dct::{forward_dct, inverse_dct};
pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use graph::{build_adjacency, sigma_sq_from_f, BlockGraph, GraphParams};
pub use morton::{morton_key, morton_order};

use crate::error::{Error, Result};

/// Orthonormal eigenbasis of a block Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTransform {
    size: usize,
    /// Row-major `size x size`; column `j` is the `j`-th eigenvector.
    basis: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl GraphTransform {
    /// The transform of a one-point block.
    pub fn identity1() -> Self {
        Self {
            size: 1,
            basis: vec![1.0],
            eigenvalues: vec![0.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Entry `(row, col)` of the basis matrix.
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.basis[row * self.size + col]
    }

    /// Bytes held by this transform; used to budget caching.
    pub fn heap_bytes(&self) -> usize {
        (self.basis.len() + self.eigenvalues.len()) * std::mem::size_of::<f64>()
    }
}

pub fn eigendecompose(graph: &BlockGraph) -> Result<GraphTransform> {
    let eig = symmetric_eigen(&graph.laplacian(), graph.size)?;
    Ok(GraphTransform {
        size: graph.size,
        basis: eig.vectors,
        eigenvalues: eig.eigenvalues,
    })
}

/// Graph transform of a block given its point positions. A single point
/// has the trivial 1x1 transform.
pub fn block_transform(positions: &[[f64; 3]], params: &GraphParams) -> Result<GraphTransform> {
    match positions.len() {
        0 => Err(Error::GraphTooSmall(0)),
        1 => Ok(GraphTransform::identity1()),
        _ => eigendecompose(&build_adjacency(positions, params)?),
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// Projects `signal` onto each eigenvector: `c_j = <y, a_j>`.
pub fn forward_gt(signal: &[f64], transform: &GraphTransform) -> Result<Vec<f64>> {
    let n = transform.size;
    check_len(n, signal.len())?;
    let mut coeffs = vec![0.0; n];
    for (i, &y) in signal.iter().enumerate() {
        let row = &transform.basis[i * n..(i + 1) * n];
        for (c, &a) in coeffs.iter_mut().zip(row) {
            *c += y * a;
        }
    }
    Ok(coeffs)
}

/// Synthesizes `y = A c`.
pub fn inverse_gt(coeffs: &[f64], transform: &GraphTransform) -> Result<Vec<f64>> {
    let n = transform.size;
    check_len(n, coeffs.len())?;
    Ok(transform
        .basis
        .chunks_exact(n)
        .map(|row| row.iter().zip(coeffs).map(|(a, c)| a * c).sum())
        .collect())
}

/// Gathers the positions of a block's points.
pub fn gather_positions(positions: &[[f64; 3]], indices: &[usize]) -> Vec<[f64; 3]> {
    indices.iter().map(|&i| positions[i]).collect()
}

pub fn gather_values(values: &[f64], indices: &[usize]) -> Vec<f64> {
    indices.iter().map(|&i| values[i]).collect()
}
