//! Finite-scale states of the semicontinuous limit and the tree networks
//! that relate them.
//!
//! A [`ScaleState`] on a partition `ℐ` lives in `(C^d)^{⊗|ℐ|}` with one
//! tensor factor per interval, ordered by left endpoint. Fine-graining
//! splits an interval at its midpoint and applies `V` to its factor, the
//! first output factor going to the left half.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::DEFAULT_CONTRACTION_LIMIT;
use crate::dyadic::{common_refinement, refines, DyadicPartition};
use crate::error::{Error, Result};
use crate::linalg::{c, vector_from_pairs, vector_to_pairs, ComplexMatrix, Isometry, StateVector, C64};
use crate::thompson::ThompsonElement;

/// `d^sites`, or a size-limit error when it exceeds [`DEFAULT_CONTRACTION_LIMIT`].
pub fn hilbert_dim(d: usize, sites: usize) -> Result<usize> {
    let too_big = || {
        Error::SizeLimit(format!(
            "{d}^{sites} exceeds the contraction limit {DEFAULT_CONTRACTION_LIMIT}"
        ))
    };
    let sites32 = u32::try_from(sites).map_err(|_| too_big())?;
    match d.checked_pow(sites32) {
        Some(n) if n <= DEFAULT_CONTRACTION_LIMIT => Ok(n),
        _ => Err(too_big()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleState {
    d: usize,
    partition: DyadicPartition,
    vector: StateVector,
}

impl ScaleState {
    pub fn new(d: usize, partition: DyadicPartition, vector: StateVector) -> Result<Self> {
        let dim = hilbert_dim(d, partition.len())?;
        if vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {d}^{} = {dim}", partition.len()),
                got: vector.len().to_string(),
            });
        }
        if vector.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { d, partition, vector })
    }

    /// The class of `(ℐ = {[0, 1]}, ψ)`.
    pub fn coarse(psi: StateVector) -> Self {
        Self { d: psi.len(), partition: DyadicPartition::trivial(), vector: psi }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn partition(&self) -> &DyadicPartition {
        &self.partition
    }

    pub fn vector(&self) -> &StateVector {
        &self.vector
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }
}

#[derive(Serialize, Deserialize)]
struct ScaleStateJson {
    d: usize,
    partition: DyadicPartition,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for ScaleState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ScaleStateJson {
            d: self.d,
            partition: self.partition.clone(),
            amplitudes: vector_to_pairs(&self.vector),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ScaleState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = ScaleStateJson::deserialize(deserializer)?;
        let v = vector_from_pairs(&raw.amplitudes).map_err(serde::de::Error::custom)?;
        ScaleState::new(raw.d, raw.partition, v).map_err(serde::de::Error::custom)
    }
}

/// Applies `V` to factor `site` of an `n_sites`-factor tensor, producing
/// `n_sites + 1` factors.
fn apply_at_site(vector: &StateVector, d: usize, n_sites: usize, site: usize, v: &ComplexMatrix) -> StateVector {
    let left = d.pow(site as u32);
    let right = d.pow((n_sites - site - 1) as u32);
    let mut out = StateVector::zeros(left * d * d * right);
    for l in 0..left {
        for ci in 0..d {
            let base_in = (l * d + ci) * right;
            for ab in 0..d * d {
                let coeff = v[(ab, ci)];
                if coeff == C64::new(0.0, 0.0) {
                    continue;
                }
                let base_out = (l * d * d + ab) * right;
                for r in 0..right {
                    out[base_out + r] += coeff * vector[base_in + r];
                }
            }
        }
    }
    out
}

/// Moves tensor factor `j` to position `dest[j]`.
pub fn permute_sites(vector: &StateVector, d: usize, dest: &[usize]) -> StateVector {
    let n = dest.len();
    let strides: Vec<usize> = (0..n).map(|pos| d.pow((n - 1 - pos) as u32)).collect();
    let mut out = StateVector::zeros(vector.len());
    for (idx, amp) in vector.iter().enumerate() {
        let mut rest = idx;
        let mut target = 0;
        for j in 0..n {
            let digit = rest / strides[j];
            rest %= strides[j];
            target += digit * strides[dest[j]];
        }
        out[target] = *amp;
    }
    out
}

/// Cyclic relabelling of `n` sites: the factor at site `j` moves to `j + steps mod n`.
pub fn cyclic_shift(vector: &StateVector, d: usize, n: usize, steps: isize) -> StateVector {
    let dest: Vec<usize> = (0..n).map(|j| (j as isize + steps).rem_euclid(n as isize) as usize).collect();
    permute_sites(vector, d, &dest)
}

/// Fine-grains `s` to the finer partition `target` by the forest of trees
/// hanging below each interval of `s.partition`.
pub fn refine_state(s: &ScaleState, target: &DyadicPartition, v: &Isometry) -> Result<ScaleState> {
    if v.d() != s.d {
        return Err(Error::DimensionMismatch { expected: format!("d = {}", s.d), got: format!("d = {}", v.d()) });
    }
    if !refines(&s.partition, target) {
        return Err(Error::Precondition(format!("{} does not refine {}", target, s.partition)));
    }
    hilbert_dim(s.d, target.len())?;
    let mut intervals = s.partition.intervals().to_vec();
    let mut vector = s.vector.clone();
    let mut site = 0;
    while site < intervals.len() {
        let current = intervals[site];
        let idx = target.locate(current.left()).expect("interval inside [0, 1]");
        if target.intervals()[idx] == current {
            site += 1;
            continue;
        }
        vector = apply_at_site(&vector, s.d, intervals.len(), site, v.matrix());
        let (a, b) = current.children()?;
        intervals[site] = a;
        intervals.insert(site + 1, b);
    }
    Ok(ScaleState { d: s.d, partition: target.clone(), vector })
}

/// `ι_ℐ^V`: the `d^{|ℐ|} × d` isometry of the binary tree whose leaves are
/// the intervals of `partition`.
pub fn tree_isometry(v: &Isometry, partition: &DyadicPartition) -> Result<ComplexMatrix> {
    let d = v.d();
    let rows = hilbert_dim(d, partition.len())?;
    let mut out = ComplexMatrix::zeros(rows, d);
    for col in 0..d {
        let mut e = StateVector::zeros(d);
        e[col] = c(1.0, 0.0);
        let fine = refine_state(&ScaleState::coarse(e), partition, v)?;
        out.set_column(col, fine.vector());
    }
    Ok(out)
}

/// Inner product of the classes of `s1` and `s2`, conjugate-linear in `s1`.
pub fn inner_product(s1: &ScaleState, s2: &ScaleState, v: &Isometry) -> Result<C64> {
    let k = common_refinement(&s1.partition, &s2.partition);
    inner_product_at(s1, s2, &k, v)
}

/// Inner product computed after fine-graining both states to `scale`.
pub fn inner_product_at(s1: &ScaleState, s2: &ScaleState, scale: &DyadicPartition, v: &Isometry) -> Result<C64> {
    if s1.d != s2.d {
        return Err(Error::DimensionMismatch { expected: format!("d = {}", s1.d), got: format!("d = {}", s2.d) });
    }
    let a = refine_state(s1, scale, v)?;
    let b = refine_state(s2, scale, v)?;
    Ok(a.vector.dotc(&b.vector))
}

/// `ρ^V(f)` on a representative: refine until `f` maps the partition to a
/// standard partition, then carry the factor on `K` over to `f(K)`.
pub fn apply_thompson(f: &ThompsonElement, s: &ScaleState, v: &Isometry) -> Result<ScaleState> {
    let refined_partition = f.refine_for(&s.partition);
    let refined = refine_state(s, &refined_partition, v)?;
    let images = f.map_partition(&refined_partition)?;
    let mut order: Vec<usize> = (0..images.len()).collect();
    order.sort_by_key(|&j| images[j].left());
    let mut dest = vec![0; images.len()];
    for (pos, &j) in order.iter().enumerate() {
        dest[j] = pos;
    }
    let sorted: Vec<_> = order.iter().map(|&j| images[j]).collect();
    Ok(ScaleState {
        d: s.d,
        partition: DyadicPartition::new(sorted)?,
        vector: permute_sites(&refined.vector, s.d, &dest),
    })
}

/// Brute-force `⟨W_k φ, T W_k ψ⟩` at uniform depth `k`, where `W_k` is the
/// homogeneous tree and `T` moves every factor of the second state one site
/// back (site `j` to `j - 1`, periodically).
///
/// With `ρ^V(f_k)` carrying factors forward, this is
/// `⟨Φ, ρ^V(f_k)^{-1} Ψ⟩ = ⟨ρ^V(f_k) Φ, Ψ⟩`. This is the orientation in
/// which the contracted network factors into the transfer operators of
/// [`crate::diagnostics`]; `f_k^{-1}` converges to the identity exactly
/// as `f_k` does.
pub fn rotation_matrix_element(v: &Isometry, phi: &StateVector, psi: &StateVector, k: u32) -> Result<C64> {
    let d = v.d();
    if phi.len() != d || psi.len() != d {
        return Err(Error::DimensionMismatch { expected: format!("vectors in C^{d}"), got: format!("{}, {}", phi.len(), psi.len()) });
    }
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let sites = 1usize.checked_shl(k).filter(|&n| n < 64).ok_or_else(|| {
        Error::SizeLimit(format!("{d}^(2^{k}) exceeds the contraction limit"))
    })?;
    hilbert_dim(d, sites)?;
    let uniform = DyadicPartition::uniform(k)?;
    let bra = refine_state(&ScaleState::coarse(phi.clone()), &uniform, v)?;
    let ket = refine_state(&ScaleState::coarse(psi.clone()), &uniform, v)?;
    let shifted = cyclic_shift(&ket.vector, d, sites, -1);
    Ok(bra.vector.dotc(&shifted))
}
