mod common;

use common::{max_abs_diff, power_norm};
use dyadic_limit::config::Tolerances;
use dyadic_limit::diagnostics::{
    decay_series, diagnose, discontinuity_certificate, gamma_operator, genericity_polynomial, intersection_dimension,
    intersection_dimension_via_sum, matrix_element_series, projector_pair, renorm_map, transfer_matrix_element,
    x_operator, DiagnosticsOptions,
};
use dyadic_limit::ensembles::{
    genericity_scan, pauli_stabilizer_isometry, so3_isometry, stabilizer_operator, EnsembleConfig,
};
use dyadic_limit::linalg::{
    haar_isometry, haar_unitary, hermitian_eigensystem, identity, kron, random_unit_vector, ComplexMatrix, Isometry,
    C64,
};
use dyadic_limit::ttn::rotation_matrix_element;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

/// `x[(i,n),(k,m)] = Σ_j V[(i,j),k] conj(V[(j,m),n])`.
fn x_oracle(v: &Isometry) -> ComplexMatrix {
    let d = v.d();
    let w = v.matrix();
    ComplexMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, n) = (row / d, row % d);
        let (k, m) = (col / d, col % d);
        (0..d).map(|j| w[(i * d + j, k)] * w[(j * d + m, n)].conj()).sum()
    })
}

/// `R(z)` contracted index by index: `|k,m⟩ → V → |i,j,m⟩ → (I⊗z) → (z⊗I) → (I⊗V†)`.
fn renorm_oracle(z: &ComplexMatrix, v: &Isometry) -> ComplexMatrix {
    let d = v.d();
    let w = v.matrix();
    let mut out = ComplexMatrix::zeros(d * d, d * d);
    for k in 0..d {
        for m in 0..d {
            // ψ(i,j,l) after each stage
            let mut psi = vec![C64::new(0.0, 0.0); d * d * d];
            for i in 0..d {
                for j in 0..d {
                    psi[(i * d + j) * d + m] = w[(i * d + j, k)];
                }
            }
            let mut stage = vec![C64::new(0.0, 0.0); d * d * d];
            for i in 0..d {
                for a in 0..d * d {
                    stage[i * d * d + a] = (0..d * d).map(|b| z[(a, b)] * psi[i * d * d + b]).sum();
                }
            }
            let mut stage2 = vec![C64::new(0.0, 0.0); d * d * d];
            for a in 0..d * d {
                for l in 0..d {
                    stage2[a * d + l] = (0..d * d).map(|b| z[(a, b)] * stage[b * d + l]).sum();
                }
            }
            for i in 0..d {
                for n in 0..d {
                    out[(i * d + n, k * d + m)] = (0..d * d).map(|jl| w[(jl, n)].conj() * stage2[i * d * d + jl]).sum();
                }
            }
        }
    }
    out
}

#[test]
fn transfer_operators_match_index_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in 2..=4 {
        for seed in 0..5 {
            let v = haar_isometry(d, seed).unwrap();
            assert!(max_abs_diff(&x_operator(&v), &x_oracle(&v)) < 1e-13);
            let z = dyadic_limit::linalg::complex_gaussian(d * d, d * d, &mut rng);
            assert!(max_abs_diff(&renorm_map(&z, &v).unwrap(), &renorm_oracle(&z, &v)) < 1e-12);
        }
    }
}

#[test]
fn transfer_formula_matches_brute_force_for_all_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases: Vec<(Isometry, u32)> = vec![(so3_isometry(), 3)];
    for d in [2, 3] {
        cases.push((pauli_stabilizer_isometry(d).unwrap(), if d == 2 { 4 } else { 3 }));
        cases.push((haar_isometry(d, 77).unwrap(), if d == 2 { 4 } else { 3 }));
    }
    for (v, kmax) in cases {
        let phi = random_unit_vector(v.d(), &mut rng);
        let psi = random_unit_vector(v.d(), &mut rng);
        for k in 1..=kmax {
            let t = transfer_matrix_element(&v, &phi, &psi, k as usize).unwrap();
            let b = rotation_matrix_element(&v, &phi, &psi, k).unwrap();
            assert!((t - b).norm() <= 1e-9, "d={} k={k}: {t} vs {b}", v.d());
        }
    }
}

#[test]
fn gamma_is_a_positive_contraction() {
    for d in 2..=4 {
        for seed in 0..10 {
            let v = haar_isometry(d, seed).unwrap();
            let g = gamma_operator(&v.projector(), d, 1e-10).unwrap();
            assert!(max_abs_diff(&g, &g.adjoint()) < 1e-10);
            let (vals, _) = hermitian_eigensystem(&g, 1e-10).unwrap();
            assert!(vals.iter().all(|&l| (-1e-10..=1.0 + 1e-10).contains(&l)));
            let b = projector_pair(&v.projector(), d, 1e-10).unwrap();
            let nb = power_norm(&b);
            assert!((nb * nb - vals.last().unwrap()).abs() < 1e-8);
            assert!(power_norm(&x_operator(&v)) <= nb + 1e-8);
        }
    }
}

#[test]
fn decay_obeys_both_bounds() {
    for d in 2..=4 {
        for seed in 0..20 {
            let v = haar_isometry(d, seed).unwrap();
            let s = decay_series(&v, 8, &tol()).unwrap();
            let closed = s.closed_bounds();
            for (norm, bound) in s.norms.iter().zip(&closed) {
                assert!(*norm <= bound * (1.0 + 1e-9));
            }
            for w in s.norms.windows(2) {
                assert!(w[1] <= w[0].powi(2) * (1.0 + 1e-10));
            }
        }
    }
}

#[test]
fn intersection_dimension_crosscheck_agrees() {
    let mut isos: Vec<Isometry> = vec![so3_isometry()];
    for d in 2..=5 {
        isos.push(pauli_stabilizer_isometry(d).unwrap());
        isos.push(haar_isometry(d, 3).unwrap());
    }
    for v in &isos {
        assert_eq!(intersection_dimension(v, &tol()).unwrap(), intersection_dimension_via_sum(v, &tol()).unwrap());
    }
}

#[test]
fn product_structure_forces_an_intersection() {
    // V|j⟩ = |j⟩⊗|0⟩: both embedded copies contain every |a,0,0⟩
    let d = 3;
    let m = ComplexMatrix::from_fn(d * d, d, |r, c| if r == c * d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let v = Isometry::new(m, 1e-12).unwrap();
    assert_eq!(intersection_dimension(&v, &tol()).unwrap(), d);
    assert!(genericity_polynomial(&v, &tol()).unwrap().abs() < 1e-12);
    assert!(!discontinuity_certificate(&v, &tol()).unwrap().discontinuous);
}

#[test]
fn diagnostics_depend_only_on_the_image() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in [2, 3, 5] {
        let v = pauli_stabilizer_isometry(d).unwrap();
        let u = haar_unitary(d, &mut rng);
        let w = Isometry::new(v.matrix() * &u, 1e-11).unwrap();
        assert!(max_abs_diff(&v.projector(), &w.projector()) < 1e-12);
        let a = discontinuity_certificate(&v, &tol()).unwrap();
        let b = discontinuity_certificate(&w, &tol()).unwrap();
        assert!((a.margin - b.margin).abs() < 1e-10);
        assert_eq!(a.discontinuous, b.discontinuous);
        let (ga, gb) = (genericity_polynomial(&v, &tol()).unwrap(), genericity_polynomial(&w, &tol()).unwrap());
        assert!((ga - gb).abs() < 1e-10);
    }
}

#[test]
fn stabilizer_copies_do_not_commute() {
    for d in 2..=6 {
        let s = stabilizer_operator(d);
        let i = identity(d);
        let s1 = kron(&s, &i).unwrap();
        let s2 = kron(&i, &s).unwrap();
        let comm = &s1 * &s2 - &s2 * &s1;
        assert!(comm.norm() > 1e-3);
    }
}

#[test]
fn haar_entries_have_the_right_second_moment() {
    let d = 2;
    let n = 4000;
    let mut sum = ComplexMatrix::zeros(d * d, d);
    let mut sq = vec![0.0; d * d * d];
    for seed in 0..n {
        let v = haar_isometry(d, seed).unwrap();
        sum += v.matrix();
        for (acc, z) in sq.iter_mut().zip(v.matrix().iter()) {
            *acc += z.norm_sqr();
        }
    }
    for s in sq {
        assert!((s / n as f64 - 0.25).abs() < 0.02, "{}", s / n as f64);
    }
    // phases are uniform, so the entries average to zero
    assert!(sum.iter().all(|z| z.norm() / (n as f64) < 0.03));
}

#[test]
fn matrix_elements_respect_hoelder_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in 2..=4 {
        let v = haar_isometry(d, 12).unwrap();
        let phi = random_unit_vector(d, &mut rng);
        let psi = random_unit_vector(d, &mut rng);
        for m in matrix_element_series(&v, &phi, &psi, 30, &tol()).unwrap() {
            assert!(m.value.norm() <= m.hoelder_bound * (1.0 + 1e-9) + 1e-300);
        }
    }
}

#[test]
fn scan_is_independent_of_thread_count() {
    let cfg = EnsembleConfig { d: 3, num_samples: 12, base_seed: 100, kmax: 4, tol: tol() };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| genericity_scan(&cfg)).unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| genericity_scan(&cfg)).unwrap();
    assert_eq!(one, many);
    for (r, seed) in one.iter().zip(cfg.seeds()) {
        let single = diagnose(&haar_isometry(3, seed).unwrap(), &r.source, &DiagnosticsOptions { kmax: 4, ..Default::default() });
        assert_eq!(&single.unwrap(), r);
    }
}
