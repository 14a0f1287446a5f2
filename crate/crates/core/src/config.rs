//! Numerical tolerances and size limits shared by every module.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Spectral comparisons (Hermiticity, projector checks, eigen-residuals).
    pub spectral: f64,
    /// `V†V = I` checks on isometries.
    pub isometry: f64,
    /// Eigenvalues of Γ_P at or above `1 - eigen_one` count as 1.
    pub eigen_one: f64,
    /// Margin used for `‖Γ_P‖ < 1 - condition`.
    pub condition: f64,
    /// Values below this are flushed to zero in the decay series.
    pub underflow: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            spectral: 1e-10,
            isometry: 1e-12,
            eigen_one: 1e-9,
            condition: 1e-9,
            underflow: 1e-300,
        }
    }
}

/// Largest Hilbert-space dimension a finite-scale state may have.
pub const DEFAULT_CONTRACTION_LIMIT: usize = 1 << 24;

/// Largest number of entries a dense matrix may have.
pub const MAX_MATRIX_ENTRIES: usize = 10_000_000;
