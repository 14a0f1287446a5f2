//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's own algorithms for the quantity being checked.
#![allow(dead_code)]

use dyadic_limit::dyadic::{DyadicPartition, DyadicRational, StandardDyadicInterval};
use dyadic_limit::linalg::{ComplexMatrix, C64};
use dyadic_limit::thompson::ThompsonElement;

/// All partitions of [0,1] into standard dyadic intervals of depth ≤ `max_depth`,
/// each as the list of `(p, n)` pairs, by recursive splitting.
pub fn all_partitions(max_depth: u32) -> Vec<Vec<(u64, u32)>> {
    fn expand(p: u64, n: u32, max_depth: u32) -> Vec<Vec<(u64, u32)>> {
        let mut out = vec![vec![(p, n)]];
        if n < max_depth {
            let left = expand(2 * p, n + 1, max_depth);
            let right = expand(2 * p + 1, n + 1, max_depth);
            for l in &left {
                for r in &right {
                    out.push(l.iter().chain(r).copied().collect());
                }
            }
        }
        out
    }
    expand(0, 0, max_depth)
}

pub fn to_partition(pairs: &[(u64, u32)]) -> DyadicPartition {
    DyadicPartition::new(pairs.iter().map(|&(p, n)| StandardDyadicInterval::new(p, n).unwrap()).collect()).unwrap()
}

/// Interior breakpoints on the grid of 2^`depth` as a bitmask (bit j ↔ j/2^depth).
pub fn breakpoint_mask(pairs: &[(u64, u32)], depth: u32) -> u64 {
    pairs[1..].iter().fold(0, |m, &(p, n)| m | 1 << (p << (depth - n)))
}

/// `f(t)` computed directly from the piece list: find the domain piece holding
/// `t` (half-open) and apply the affine map in exact i128 arithmetic on a 2^60 grid.
pub fn naive_eval(f: &ThompsonElement, t: DyadicRational) -> (i128, u32) {
    const G: u32 = 60;
    let scale = |x: DyadicRational| (x.numerator() as i128) << (G - x.exponent());
    let tt = scale(t);
    for (a, b) in f.pieces() {
        let (al, ar) = (scale(a.left()), scale(a.right()));
        if tt >= al && tt < ar {
            let (bl, br) = (scale(b.left()), scale(b.right()));
            let y = bl + (tt - al) * (br - bl) / (ar - al);
            return (y.rem_euclid(1 << G), G);
        }
    }
    panic!("t outside [0,1)")
}

pub fn grid(depth: u32) -> impl Iterator<Item = DyadicRational> {
    (0..1i64 << depth).map(move |j| DyadicRational::new(j, depth).unwrap())
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest singular value via power iteration on `M†M`; independent of the SVD
/// used in the library.
pub fn power_norm(m: &ComplexMatrix) -> f64 {
    let g = m.adjoint() * m;
    let n = g.ncols();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| C64::new(1.0 + i as f64 * 0.37, 0.11 * i as f64));
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let w = &g * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw / v.norm();
        v = w / C64::new(nw, 0.0);
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}
