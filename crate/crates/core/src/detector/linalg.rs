//! Dense symmetric positive-definite solves for the detector's normal equations.

use alloc::vec::Vec;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: alloc::vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    /// Adds `scale * v v^T`, touching only the lower triangle. Call
    /// [`SquareMatrix::mirror_lower`] once accumulation is done.
    pub fn add_outer_lower(&mut self, v: &[f64], scale: f64) {
        for i in 0..self.dim {
            let vi = v[i] * scale;
            let row = &mut self.data[i * self.dim..i * self.dim + i + 1];
            for (cell, vj) in row.iter_mut().zip(v) {
                *cell += vi * vj;
            }
        }
    }

    pub fn mirror_lower(&mut self) {
        for i in 0..self.dim {
            for j in 0..i {
                self.data[j * self.dim + i] = self.data[i * self.dim + j];
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += value;
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.dim).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Solves `self * x = rhs` by Cholesky factorisation. Returns `None` if the
    /// matrix is not numerically positive definite.
    pub fn cholesky_solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim;
        let mut l = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum.is_nan() || sum <= 0.0 {
                        return None;
                    }
                    l[i * n + i] = libm::sqrt(sum);
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        // forward: L y = rhs
        let mut y = alloc::vec![0.0; n];
        for i in 0..n {
            let mut sum = rhs[i];
            for k in 0..i {
                sum -= l[i * n + k] * y[k];
            }
            y[i] = sum / l[i * n + i];
        }
        // backward: L^T x = y
        let mut x = alloc::vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in i + 1..n {
                sum -= l[k * n + i] * x[k];
            }
            x[i] = sum / l[i * n + i];
        }
        Some(x)
    }
}
