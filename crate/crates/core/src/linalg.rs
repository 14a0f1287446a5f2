//! Small dense complex linear algebra.
//!
//! Tensor factors follow one convention everywhere: on `(C^d)^{⊗m}` the
//! leftmost factor is the slowest-varying index, so `kron(A, B)` acts with
//! `A` on the first factor.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::MAX_MATRIX_ENTRIES;
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

pub const MIN_SITE_DIM: usize = 2;
pub const MAX_SITE_DIM: usize = 8;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match rows.zip(cols).and_then(|(r, c)| r.checked_mul(c)) {
        Some(n) if n <= MAX_MATRIX_ENTRIES => Ok(a.kronecker(b)),
        _ => Err(Error::SizeLimit(format!(
            "kron of {}x{} and {}x{} exceeds {MAX_MATRIX_ENTRIES} entries",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        ))),
    }
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
pub fn hermitian_eigensystem(m: &ComplexMatrix, tol: f64) -> Result<(Vec<f64>, ComplexMatrix)> {
    ensure_finite(m)?;
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermiticity_defect(m);
    if defect > tol * scale {
        return Err(Error::NotHermitian(defect));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Operator norm of `m†m - I`.
pub fn isometry_defect(m: &ComplexMatrix) -> Result<f64> {
    operator_norm(&(m.adjoint() * m - identity(m.ncols())))
}

/// `rows × cols` matrix with i.i.d. standard complex Gaussian entries,
/// drawn in row-major order.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        data.push(c(re * s, im * s));
    }
    ComplexMatrix::from_row_slice(rows, cols, &data)
}

/// First `cols` columns of a Haar-random unitary on `C^rows`: QR of a
/// Gaussian matrix with the triangular factor's diagonal made positive.
pub fn haar_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(cols <= rows, "need cols <= rows");
    let qr = complex_gaussian(rows, cols, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    haar_columns(n, n, rng)
}

/// Uniformly random unit vector in `C^dim`.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let g = complex_gaussian(dim, 1, rng);
    let v = StateVector::from_iterator(dim, g.iter().copied());
    let n = v.norm();
    v.unscale(n)
}

pub fn basis_vector(dim: usize, i: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[i] = c(1.0, 0.0);
    v
}

/// Operator on `C^d ⊗ C^d` exchanging the two factors.
pub fn swap(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            s[(b * d + a, a * d + b)] = c(1.0, 0.0);
        }
    }
    s
}

/// An isometry `V: C^d → C^d ⊗ C^d`, stored as a `d² × d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    d: usize,
    matrix: ComplexMatrix,
}

impl Isometry {
    /// Validates shape and `V†V = I_d` to within `tol`.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let d = matrix.ncols();
        if d == 0 || matrix.nrows() != d * d {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{d}", d * d),
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let defect = isometry_defect(&matrix)?;
        if defect > tol {
            return Err(Error::NotIsometry(defect));
        }
        Ok(Self { d, matrix })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        self.matrix.adjoint()
    }

    /// `P = VV†`, the projector onto the image of `V`.
    pub fn projector(&self) -> ComplexMatrix {
        &self.matrix * self.matrix.adjoint()
    }
}

/// Haar-random isometry `C^d → C^d ⊗ C^d`, deterministic in `seed`.
pub fn haar_isometry(d: usize, seed: u64) -> Result<Isometry> {
    if !(MIN_SITE_DIM..=MAX_SITE_DIM).contains(&d) {
        return Err(Error::Precondition(format!(
            "site dimension {d} outside {MIN_SITE_DIM}..={MAX_SITE_DIM}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = haar_columns(d * d, d, &mut rng);
    Ok(Isometry { d, matrix: v })
}

type Entry = [f64; 2];

pub fn matrix_to_nested(m: &ComplexMatrix) -> Vec<Vec<Entry>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn matrix_from_nested(rows: &[Vec<Entry>]) -> Result<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("matrix rows must be nonempty and of equal length".into()));
    }
    let m = ComplexMatrix::from_fn(nrows, ncols, |r, col| c(rows[r][col][0], rows[r][col][1]));
    ensure_finite(&m)?;
    Ok(m)
}

pub fn vector_to_pairs(v: &StateVector) -> Vec<Entry> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_pairs(pairs: &[Entry]) -> Result<StateVector> {
    if pairs.is_empty() {
        return Err(Error::Parse("empty vector".into()));
    }
    let v = StateVector::from_iterator(pairs.len(), pairs.iter().map(|p| c(p[0], p[1])));
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(v)
}

#[derive(Serialize, Deserialize)]
struct IsometryJson {
    d: usize,
    matrix: Vec<Vec<Entry>>,
}

impl Serialize for Isometry {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        IsometryJson { d: self.d, matrix: matrix_to_nested(&self.matrix) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Isometry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = IsometryJson::deserialize(deserializer)?;
        let m = matrix_from_nested(&raw.matrix).map_err(serde::de::Error::custom)?;
        if m.ncols() != raw.d {
            return Err(serde::de::Error::custom(format!("matrix has {} columns, d = {}", m.ncols(), raw.d)));
        }
        Isometry::new(m, 1e-12).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_diag(vals: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&StateVector::from_iterator(vals.len(), vals.iter().map(|&v| c(v, 0.0))))
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&identity(5)).unwrap() - 1.0).abs() < 1e-14);
        assert!((operator_norm(&real_diag(&[0.5, 0.2])).unwrap() - 0.5).abs() < 1e-14);
        let v = haar_isometry(3, 1).unwrap();
        assert!((operator_norm(&v.projector()).unwrap() - 1.0).abs() < 1e-12);
        let mut bad = identity(2);
        bad[(0, 1)] = c(f64::NAN, 0.0);
        assert_eq!(operator_norm(&bad), Err(Error::NonFinite));
    }

    #[test]
    fn eigensystem_examples() {
        let (vals, _) = hermitian_eigensystem(&identity(2), 1e-10).unwrap();
        assert_eq!(vals, vec![1.0, 1.0]);
        let (vals, vecs) = hermitian_eigensystem(&real_diag(&[0.0, 1.0]), 1e-10).unwrap();
        assert_eq!(vals, vec![0.0, 1.0]);
        assert!((vecs[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((vecs[(1, 1)].norm() - 1.0).abs() < 1e-14);
        let (vals, vecs) = hermitian_eigensystem(&pauli_x(), 1e-10).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Eigenvector for -1 is ±(1, -1)/√2 up to phase.
        let v0 = vecs.column(0);
        assert!(((v0[0] + v0[1]).norm()) < 1e-12 && (v0[0].norm() - s).abs() < 1e-12);
    }

    #[test]
    fn eigensystem_rejects_non_hermitian() {
        let mut m = identity(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(hermitian_eigensystem(&m, 1e-10), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigen_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 5, 9] {
            let g = complex_gaussian(n, n, &mut rng);
            let h = &g + g.adjoint();
            let (vals, vecs) = hermitian_eigensystem(&h, 1e-10).unwrap();
            let mut rebuilt = ComplexMatrix::zeros(n, n);
            for (i, &l) in vals.iter().enumerate() {
                let v = vecs.column(i);
                rebuilt += (v * v.adjoint()).scale(l);
            }
            let norm = operator_norm(&h).unwrap();
            assert!(operator_norm(&(rebuilt - &h)).unwrap() <= 1e-9 * norm);
            assert!(isometry_defect(&vecs).unwrap() < 1e-12);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&identity(2), &identity(2)).unwrap(), identity(4));
        let a = real_diag(&[2.0, 3.0]);
        assert_eq!(kron(&a, &identity(2)).unwrap(), real_diag(&[2.0, 2.0, 3.0, 3.0]));
        let big = ComplexMatrix::zeros(4000, 1);
        assert!(matches!(kron(&big, &big.transpose()), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn kron_index_convention() {
        // (A ⊗ B)|i,j⟩ has A on the slow index.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = complex_gaussian(2, 2, &mut rng);
        let b = complex_gaussian(3, 3, &mut rng);
        let k = kron(&a, &b).unwrap();
        for (ia, ib, ja, jb) in index_quads() {
            assert_eq!(k[(ia * 3 + ib, ja * 3 + jb)], a[(ia, ja)] * b[(ib, jb)]);
        }
    }

    fn index_quads() -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::new();
        for ia in 0..2 {
            for ib in 0..3 {
                for ja in 0..2 {
                    for jb in 0..3 {
                        out.push((ia, ib, ja, jb));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn haar_isometry_is_isometric_and_deterministic() {
        for d in 2..=8 {
            let v = haar_isometry(d, 42).unwrap();
            assert!(isometry_defect(v.matrix()).unwrap() < 1e-12);
            assert_eq!(v, haar_isometry(d, 42).unwrap());
        }
        assert_ne!(haar_isometry(2, 1).unwrap(), haar_isometry(2, 2).unwrap());
        assert!(haar_isometry(1, 0).is_err());
        assert!(haar_isometry(9, 0).is_err());
    }

    #[test]
    fn haar_qr_factor_has_positive_diagonal() {
        // Q†Z is the triangular factor; its diagonal should be real positive.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let z = complex_gaussian(9, 3, &mut rng);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let q = haar_columns(9, 3, &mut rng);
        let r = q.adjoint() * z;
        for j in 0..3 {
            assert!(r[(j, j)].re > 0.0 && r[(j, j)].im.abs() < 1e-12);
            for i in j + 1..3 {
                assert!(r[(i, j)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn isometry_json_round_trip() {
        let v = haar_isometry(2, 5).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        let back: Isometry = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let bad = r#"{"d":1,"matrix":[[[2.0,0.0]]]}"#;
        assert!(serde_json::from_str::<Isometry>(bad).is_err());
    }

    #[test]
    fn swap_exchanges_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_unit_vector(3, &mut rng);
        let b = random_unit_vector(3, &mut rng);
        let ab = a.kronecker(&b);
        let ba = b.kronecker(&a);
        assert!((swap(3) * ab - ba).norm() < 1e-15);
    }
}
