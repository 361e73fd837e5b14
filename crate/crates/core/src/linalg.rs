//! Norm helpers shared by every module.
//!
//! Vectors carry the max norm `max_i |x_i|` and matrices the norm it
//! induces, the maximum absolute row sum. A vector stored as an `n x 1`
//! matrix gets the same value from either routine.

use nalgebra::{DMatrix, DVector};

/// Induced max-row-sum norm.
pub fn matrix_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max norm of a vector.
pub fn vector_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
