//! Explicit isometries and batch scans over Haar-random ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::diagnostics::{diagnose, DiagnosticsOptions, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::linalg::{
    c, haar_isometry, hermitian_eigensystem, identity, kron, operator_norm, ComplexMatrix, Isometry,
    MAX_SITE_DIM, MIN_SITE_DIM, C64,
};

/// Generalized Pauli shift `X|j⟩ = |j+1 mod d⟩`.
pub fn shift_operator(d: usize) -> ComplexMatrix {
    let mut x = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        x[((j + 1) % d, j)] = c(1.0, 0.0);
    }
    x
}

/// Generalized Pauli clock `Z|j⟩ = ω^j|j⟩`, `ω = exp(2πi/d)`.
pub fn clock_operator(d: usize) -> ComplexMatrix {
    let mut z = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let angle = 2.0 * std::f64::consts::PI * j as f64 / d as f64;
        z[(j, j)] = C64::from_polar(1.0, angle);
    }
    z
}

/// `S = X ⊗ Z`.
pub fn stabilizer_operator(d: usize) -> ComplexMatrix {
    kron(&shift_operator(d), &clock_operator(d)).expect("small d")
}

/// Isometry onto the `+1` eigenspace of `S = X ⊗ Z`.
///
/// `S^d = I`, so `(1/d) Σ_m S^m` projects onto that eigenspace. Columns come
/// from Gram–Schmidt on the projected standard basis vectors, taken in
/// index order and skipping those that vanish, which makes the basis
/// independent of any eigen-solver.
pub fn pauli_stabilizer_isometry(d: usize) -> Result<Isometry> {
    if d < MIN_SITE_DIM {
        return Err(Error::Precondition(format!("site dimension {d} must be at least {MIN_SITE_DIM}")));
    }
    let s = stabilizer_operator(d);
    let n = d * d;
    let mut power = identity(n);
    let mut proj = ComplexMatrix::zeros(n, n);
    for _ in 0..d {
        proj += &power;
        power = &s * power;
    }
    proj /= c(d as f64, 0.0);

    let mut columns: Vec<crate::linalg::StateVector> = Vec::with_capacity(d);
    for i in 0..n {
        if columns.len() == d {
            break;
        }
        let mut w = proj.column(i).into_owned();
        for q in &columns {
            let overlap = q.dotc(&w);
            w -= q * overlap;
        }
        let norm = w.norm();
        if norm > 1e-8 {
            columns.push(w.unscale(norm));
        }
    }
    if columns.len() != d {
        return Err(Error::Precondition(format!("stabilized space has dimension {} != {d}", columns.len())));
    }
    Isometry::new(ComplexMatrix::from_columns(&columns), 1e-12)
}

/// Spin-1 isometry onto the antisymmetric subspace of `1 ⊗ 1`, with the
/// coarse and fine bases ordered `(|1⟩, |0⟩, |-1⟩)`:
///
/// * `|1⟩ ↦ (|1,0⟩ - |0,1⟩)/√2`
/// * `|0⟩ ↦ (|1,-1⟩ - |-1,1⟩)/√2`
/// * `|-1⟩ ↦ (|0,-1⟩ - |-1,0⟩)/√2`
pub fn so3_isometry() -> Isometry {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Index of m = 1, 0, -1.
    let idx = |m: i32| (1 - m) as usize;
    let pair = |a: i32, b: i32| idx(a) * 3 + idx(b);
    let mut v = ComplexMatrix::zeros(9, 3);
    for (col, (a, b)) in [(1, 0), (1, -1), (0, -1)].into_iter().enumerate() {
        v[(pair(a, b), col)] = c(s, 0.0);
        v[(pair(b, a), col)] = c(-s, 0.0);
    }
    Isometry::new(v, 1e-15).expect("orthonormal columns")
}

/// The vector spanning `(𝒱⊗C^3) ∩ (C^3⊗𝒱)` for [`so3_isometry`], normalized:
/// `-|-1,0,1⟩ + |-1,1,0⟩ + |0,-1,1⟩ - |0,1,-1⟩ - |1,-1,0⟩ + |1,0,-1⟩`.
pub fn so3_intersection_vector() -> crate::linalg::StateVector {
    let idx = |m: i32| (1 - m) as usize;
    let mut w = crate::linalg::StateVector::zeros(27);
    let terms = [
        (-1.0, [-1, 0, 1]),
        (1.0, [-1, 1, 0]),
        (1.0, [0, -1, 1]),
        (-1.0, [0, 1, -1]),
        (-1.0, [1, -1, 0]),
        (1.0, [1, 0, -1]),
    ];
    for (sign, [a, b, cc]) in terms {
        w[idx(a) * 9 + idx(b) * 3 + idx(cc)] = c(sign / 6f64.sqrt(), 0.0);
    }
    w
}

/// Spin-1 angular momentum matrices `(J_x, J_y, J_z)` with `ħ = 1` in the
/// basis `(|1⟩, |0⟩, |-1⟩)`.
pub fn spin1_generators() -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let jx = ComplexMatrix::from_row_slice(3, 3, &[z, c(s, 0.0), z, c(s, 0.0), z, c(s, 0.0), z, c(s, 0.0), z]);
    let jy = ComplexMatrix::from_row_slice(
        3,
        3,
        &[z, c(0.0, -s), z, c(0.0, s), z, c(0.0, -s), z, c(0.0, s), z],
    );
    let jz = ComplexMatrix::from_row_slice(3, 3, &[c(1.0, 0.0), z, z, z, z, z, z, z, c(-1.0, 0.0)]);
    (jx, jy, jz)
}

/// `exp(iθH)` for Hermitian `H`, via its eigendecomposition.
pub fn unitary_exp(h: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    let (vals, vecs) = hermitian_eigensystem(h, 1e-12)?;
    let phases = crate::linalg::StateVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::from_polar(1.0, theta * l)));
    Ok(&vecs * ComplexMatrix::from_diagonal(&phases) * vecs.adjoint())
}

/// `‖V - (U⊗U) V U†‖`.
pub fn check_symmetry(v: &Isometry, u: &ComplexMatrix) -> Result<f64> {
    let d = v.d();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::DimensionMismatch { expected: format!("{d}x{d}"), got: format!("{}x{}", u.nrows(), u.ncols()) });
    }
    let defect = operator_norm(&(u.adjoint() * u - identity(d)))?;
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let rotated = kron(u, u)? * v.matrix() * u.adjoint();
    operator_norm(&(v.matrix() - rotated))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub d: usize,
    pub num_samples: usize,
    pub base_seed: u64,
    pub kmax: usize,
    pub tol: Tolerances,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::Precondition("num_samples must be at least 1".into()));
        }
        if !(MIN_SITE_DIM..=MAX_SITE_DIM).contains(&self.d) {
            return Err(Error::Precondition(format!("d = {} outside {MIN_SITE_DIM}..={MAX_SITE_DIM}", self.d)));
        }
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.num_samples as u64).map(move |i| self.base_seed.wrapping_add(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub d: usize,
    pub samples: usize,
    pub failures: usize,
    /// Smallest `1 - ‖(I⊗P)(P⊗I)‖` over the samples.
    pub min_margin: f64,
    pub min_genericity_det: f64,
}

pub fn haar_source(d: usize, seed: u64) -> String {
    format!("haar:d={d}:seed={seed}")
}

/// Diagnostics for the Haar isometries with seeds `base_seed..base_seed + num_samples`,
/// ordered by seed regardless of how the work was scheduled.
pub fn genericity_scan(cfg: &EnsembleConfig) -> Result<Vec<DiagnosticsReport>> {
    cfg.validate()?;
    let opts = DiagnosticsOptions { kmax: cfg.kmax, phi: None, psi: None, tol: cfg.tol };
    let seeds: Vec<u64> = cfg.seeds().collect();
    seeds
        .par_iter()
        .map(|&seed| {
            let v = haar_isometry(cfg.d, seed)?;
            diagnose(&v, &haar_source(cfg.d, seed), &opts)
        })
        .collect()
}

pub fn summarize(d: usize, reports: &[DiagnosticsReport]) -> ScanSummary {
    ScanSummary {
        d,
        samples: reports.len(),
        failures: reports.iter().filter(|r| !r.condition_holds).count(),
        min_margin: reports.iter().map(|r| r.certificate_margin).fold(f64::INFINITY, f64::min),
        min_genericity_det: reports.iter().map(|r| r.genericity_det).fold(f64::INFINITY, f64::min),
    }
}
