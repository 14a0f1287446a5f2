//! Continuity diagnostics for the representation built from an isometry `V`.
//!
//! * `x = (I⊗V†)(V⊗I)` and `R(z) = (I⊗V†)(z⊗I)(I⊗z)(V⊗I)` on `C^d⊗C^d`;
//!   `R^{∘(k-1)}(x)` is the overlap network of two depth-`k` trees offset
//!   by one site, with the wrap-around wire left open.
//! * `Γ_P = (P⊗I)(I⊗P)(P⊗I)` on `(C^d)^{⊗3}`, whose eigenvalue-1 space is
//!   `(𝒱⊗C^d) ∩ (C^d⊗𝒱)`.
//! * The rotated matrix element is `Tr(R^{∘(k-1)}(x) A(φ, ψ))` with
//!   `A(φ, ψ) = (|ψ⟩⟨φ| ⊗ I)·SWAP`: the first factor of `A` feeds `ψ` into
//!   the ket tree and the SWAP closes the periodic wire against the bra
//!   root `⟨φ|`.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigensystem, identity, kron, operator_norm, swap, trace_norm, ComplexMatrix, Isometry, StateVector,
    C64,
};

pub fn x_operator(v: &Isometry) -> ComplexMatrix {
    let i = identity(v.d());
    let left = kron(&i, &v.adjoint()).expect("d <= 8");
    let right = kron(v.matrix(), &i).expect("d <= 8");
    left * right
}

pub fn renorm_map(z: &ComplexMatrix, v: &Isometry) -> Result<ComplexMatrix> {
    let d = v.d();
    if z.nrows() != d * d || z.ncols() != d * d {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", d * d),
            got: format!("{}x{}", z.nrows(), z.ncols()),
        });
    }
    let i = identity(d);
    let z_i = kron(z, &i)?;
    let i_z = kron(&i, z)?;
    Ok(kron(&i, &v.adjoint())? * z_i * i_z * kron(v.matrix(), &i)?)
}

/// Iterates `R` from `x`, flushing to exactly zero once the norm drops
/// below the underflow threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferIterates {
    /// `R^{∘k}(x)` for `k = 0..=kmax`.
    pub operators: Vec<ComplexMatrix>,
    pub norms: Vec<f64>,
    /// First `k` at which the series was flushed to zero.
    pub underflow_at: Option<usize>,
}

pub fn transfer_iterates(v: &Isometry, kmax: usize, tol: &Tolerances) -> Result<TransferIterates> {
    let d2 = v.d() * v.d();
    let mut z = x_operator(v);
    let mut operators = Vec::with_capacity(kmax + 1);
    let mut norms = Vec::with_capacity(kmax + 1);
    let mut underflow_at = None;
    for k in 0..=kmax {
        if k > 0 {
            z = if underflow_at.is_some() { ComplexMatrix::zeros(d2, d2) } else { renorm_map(&z, v)? };
        }
        let mut norm = operator_norm(&z)?;
        if underflow_at.is_none() && norm < tol.underflow {
            underflow_at = Some(k);
        }
        if underflow_at.is_some() {
            z = ComplexMatrix::zeros(d2, d2);
            norm = 0.0;
        }
        operators.push(z.clone());
        norms.push(norm);
    }
    Ok(TransferIterates { operators, norms, underflow_at })
}

pub const MAX_DECAY_K: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    /// `‖R^{∘k}(x)‖` for `k = 0..=kmax`.
    pub norms: Vec<f64>,
    pub underflow_at: Option<usize>,
}

impl DecaySeries {
    /// `‖x‖^{2^k}` for each entry.
    pub fn closed_bounds(&self) -> Vec<f64> {
        let x = self.norms[0];
        (0..self.norms.len()).map(|k| x.powf((k as f64).exp2())).collect()
    }
}

pub fn decay_series(v: &Isometry, kmax: usize, tol: &Tolerances) -> Result<DecaySeries> {
    if kmax > MAX_DECAY_K {
        return Err(Error::Precondition(format!("kmax = {kmax} exceeds {MAX_DECAY_K}")));
    }
    let it = transfer_iterates(v, kmax, tol)?;
    Ok(DecaySeries { norms: it.norms, underflow_at: it.underflow_at })
}

fn check_projector(p: &ComplexMatrix, tol: f64) -> Result<()> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch { expected: "square".into(), got: format!("{}x{}", p.nrows(), p.ncols()) });
    }
    let herm = (p - p.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let idem = (p * p - p).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let defect = herm.max(idem);
    if defect > tol {
        return Err(Error::NotProjector(defect));
    }
    Ok(())
}

/// `(P⊗I)` and `(I⊗P)` on `(C^d)^{⊗3}`.
fn lifted_projectors(p: &ComplexMatrix, d: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if p.nrows() != d * d {
        return Err(Error::DimensionMismatch { expected: format!("{0}x{0}", d * d), got: format!("{}x{}", p.nrows(), p.ncols()) });
    }
    let i = identity(d);
    Ok((kron(p, &i)?, kron(&i, p)?))
}

pub fn gamma_operator(p: &ComplexMatrix, d: usize, tol: f64) -> Result<ComplexMatrix> {
    check_projector(p, tol)?;
    let (p1, p2) = lifted_projectors(p, d)?;
    Ok(&p1 * p2 * &p1)
}

/// `(I⊗P)(P⊗I)`, whose norm squared equals `‖Γ_P‖`.
pub fn projector_pair(p: &ComplexMatrix, d: usize, tol: f64) -> Result<ComplexMatrix> {
    check_projector(p, tol)?;
    let (p1, p2) = lifted_projectors(p, d)?;
    Ok(p2 * p1)
}

pub fn gamma_spectrum(v: &Isometry, tol: &Tolerances) -> Result<Vec<f64>> {
    let gamma = gamma_operator(&v.projector(), v.d(), tol.spectral)?;
    Ok(hermitian_eigensystem(&gamma, tol.spectral)?.0)
}

/// `dim((𝒱⊗C^d) ∩ (C^d⊗𝒱))`: eigenvalues of `Γ_P` at or above `1 - eigen_one`.
pub fn intersection_dimension(v: &Isometry, tol: &Tolerances) -> Result<usize> {
    Ok(gamma_spectrum(v, tol)?.iter().filter(|&&l| l >= 1.0 - tol.eigen_one).count())
}

/// Same dimension from the kernel of `2I - (P⊗I) - (I⊗P)`.
pub fn intersection_dimension_via_sum(v: &Isometry, tol: &Tolerances) -> Result<usize> {
    let d = v.d();
    let (p1, p2) = lifted_projectors(&v.projector(), d)?;
    let m = identity(d * d * d).scale(2.0) - p1 - p2;
    let (vals, _) = hermitian_eigensystem(&m, tol.spectral)?;
    Ok(vals.iter().filter(|&&l| l <= tol.eigen_one).count())
}

/// Unit vectors spanning the eigenvalue-1 space of `Γ_P`, as columns.
pub fn intersection_basis(v: &Isometry, tol: &Tolerances) -> Result<ComplexMatrix> {
    let gamma = gamma_operator(&v.projector(), v.d(), tol.spectral)?;
    let (vals, vecs) = hermitian_eigensystem(&gamma, tol.spectral)?;
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] >= 1.0 - tol.eigen_one).collect();
    Ok(ComplexMatrix::from_fn(vecs.nrows(), keep.len(), |r, c| vecs[(r, keep[c])]))
}

/// `det(I - Γ_P)`, the product of `1 - λ` over the spectrum of `Γ_P`.
pub fn genericity_polynomial(v: &Isometry, tol: &Tolerances) -> Result<f64> {
    Ok(gamma_spectrum(v, tol)?.iter().map(|l| 1.0 - l).product())
}

/// `A(φ, ψ) = (|ψ⟩⟨φ| ⊗ I)·SWAP`, with `Tr(R^{∘(k-1)}(x) A(φ, ψ))` the
/// rotated matrix element of [`crate::ttn::rotation_matrix_element`].
pub fn boundary_operator(phi: &StateVector, psi: &StateVector, v: &Isometry) -> Result<ComplexMatrix> {
    let d = v.d();
    if phi.len() != d || psi.len() != d {
        return Err(Error::DimensionMismatch { expected: format!("vectors in C^{d}"), got: format!("{}, {}", phi.len(), psi.len()) });
    }
    let outer = psi * phi.adjoint();
    Ok(kron(&outer, &identity(d))? * swap(d))
}

pub fn transfer_matrix_element(v: &Isometry, phi: &StateVector, psi: &StateVector, k: usize) -> Result<C64> {
    Ok(matrix_element_series(v, phi, psi, k, &Tolerances::default())?
        .pop()
        .expect("k >= 1 gives a nonempty series")
        .value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixElement {
    pub k: usize,
    pub value: C64,
    /// `‖R^{∘(k-1)}(x)‖ · ‖A(φ, ψ)‖₁`.
    pub hoelder_bound: f64,
}

/// `M_k = Tr(R^{∘(k-1)}(x) A(φ, ψ))` for `k = 1..=kmax`.
pub fn matrix_element_series(
    v: &Isometry,
    phi: &StateVector,
    psi: &StateVector,
    kmax: usize,
    tol: &Tolerances,
) -> Result<Vec<MatrixElement>> {
    if kmax == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let a = boundary_operator(phi, psi, v)?;
    let a_norm = trace_norm(&a)?;
    let it = transfer_iterates(v, kmax - 1, tol)?;
    Ok(it
        .operators
        .iter()
        .zip(&it.norms)
        .enumerate()
        .map(|(i, (z, norm))| MatrixElement { k: i + 1, value: (z * &a).trace(), hoelder_bound: norm * a_norm })
        .collect())
}

/// Smallest `k*` such that `|M_k| < threshold` for every `k*..=kmax`.
pub fn vanishing_index(series: &[MatrixElement], threshold: f64) -> Option<usize> {
    let last_large = series.iter().rposition(|m| m.value.norm() >= threshold);
    match last_large {
        None => series.first().map(|m| m.k),
        Some(i) => series.get(i + 1).map(|m| m.k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// The intersection condition holds with margin, so the representation
    /// is weakly discontinuous. `false` is inconclusive.
    pub discontinuous: bool,
    /// `1 - ‖(I⊗P)(P⊗I)‖`.
    pub margin: f64,
}

pub fn discontinuity_certificate(v: &Isometry, tol: &Tolerances) -> Result<Certificate> {
    let pair = projector_pair(&v.projector(), v.d(), tol.spectral)?;
    let margin = 1.0 - operator_norm(&pair)?;
    Ok(Certificate { discontinuous: margin > tol.condition, margin })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub k: usize,
    pub norm: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelementRow {
    pub k: usize,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub hoelder_bound: f64,
}

impl From<&MatrixElement> for MelementRow {
    fn from(m: &MatrixElement) -> Self {
        Self { k: m.k, re: m.value.re, im: m.value.im, abs: m.value.norm(), hoelder_bound: m.hoelder_bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub d: usize,
    pub source: String,
    pub norm_x: f64,
    pub norm_pair: f64,
    pub norm_gamma: f64,
    pub certificate_margin: f64,
    pub intersection_dim: usize,
    pub intersection_dim_crosscheck: usize,
    pub genericity_det: f64,
    pub decay_series: Vec<DecayRow>,
    pub decay_underflow_at: Option<usize>,
    pub melement_series: Vec<MelementRow>,
    pub condition_holds: bool,
    pub certificate: bool,
}

#[derive(Debug, Clone)]
pub struct DiagnosticsOptions {
    pub kmax: usize,
    pub phi: Option<StateVector>,
    pub psi: Option<StateVector>,
    pub tol: Tolerances,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { kmax: 8, phi: None, psi: None, tol: Tolerances::default() }
    }
}

/// Runs every diagnostic on `v`. `φ` and `ψ` default to the first basis vector.
pub fn diagnose(v: &Isometry, source: &str, opts: &DiagnosticsOptions) -> Result<DiagnosticsReport> {
    let tol = &opts.tol;
    let d = v.d();
    let e0 = crate::linalg::basis_vector(d, 0);
    let phi = opts.phi.clone().unwrap_or_else(|| e0.clone());
    let psi = opts.psi.clone().unwrap_or(e0);
    let decay = decay_series(v, opts.kmax, tol)?;
    let bounds = decay.closed_bounds();
    let decay_rows = decay
        .norms
        .iter()
        .zip(&bounds)
        .enumerate()
        .map(|(k, (&norm, &bound))| DecayRow { k, norm, bound })
        .collect();
    let melements = matrix_element_series(v, &phi, &psi, opts.kmax.max(1), tol)?;
    let gamma_spec = gamma_spectrum(v, tol)?;
    let norm_gamma = gamma_spec.last().copied().unwrap_or(0.0);
    let cert = discontinuity_certificate(v, tol)?;
    Ok(DiagnosticsReport {
        d,
        source: source.to_string(),
        norm_x: decay.norms[0],
        norm_pair: 1.0 - cert.margin,
        norm_gamma,
        certificate_margin: cert.margin,
        intersection_dim: gamma_spec.iter().filter(|&&l| l >= 1.0 - tol.eigen_one).count(),
        intersection_dim_crosscheck: intersection_dimension_via_sum(v, tol)?,
        genericity_det: gamma_spec.iter().map(|l| 1.0 - l).product(),
        decay_series: decay_rows,
        decay_underflow_at: decay.underflow_at,
        melement_series: melements.iter().map(MelementRow::from).collect(),
        condition_holds: norm_gamma < 1.0 - tol.condition,
        certificate: cert.discontinuous,
    })
}
