//! Exact dyadic arithmetic on `[0, 1]`: dyadic rationals, standard dyadic
//! intervals `[p/2^n, (p+1)/2^n]` and partitions of `[0, 1]` into them.
//!
//! The circle identification `0 ~ 1` is not made here; partitions always
//! start at 0 and end at 1.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest denominator exponent a [`DyadicRational`] may carry.
pub const MAX_EXPONENT: u32 = 62;

/// The number `numerator / 2^exponent`, always stored in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    numerator: i64,
    exponent: u32,
}

impl DyadicRational {
    pub const ZERO: Self = Self { numerator: 0, exponent: 0 };
    pub const ONE: Self = Self { numerator: 1, exponent: 0 };

    pub fn new(numerator: i64, exponent: u32) -> Result<Self> {
        let (mut num, mut exp) = (numerator, exponent);
        if num == 0 {
            return Ok(Self::ZERO);
        }
        let tz = num.trailing_zeros().min(exp);
        num >>= tz;
        exp -= tz;
        if exp > MAX_EXPONENT {
            return Err(Error::Overflow(format!("{numerator}/2^{exponent} needs exponent > {MAX_EXPONENT}")));
        }
        Ok(Self { numerator: num, exponent: exp })
    }

    pub fn from_int(n: i64) -> Self {
        Self { numerator: n, exponent: 0 }
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }

    /// Numerator rescaled to denominator `2^exp`; `exp` must be at least `self.exponent`.
    fn scaled_numerator(&self, exp: u32) -> Result<i64> {
        debug_assert!(exp >= self.exponent);
        let shift = exp - self.exponent;
        if shift > 62 {
            return Err(Error::Overflow(format!("cannot rescale {self} to 2^{exp}")));
        }
        self.numerator
            .checked_mul(1i64 << shift)
            .ok_or_else(|| Error::Overflow(format!("cannot rescale {self} to 2^{exp}")))
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        let exp = self.exponent.max(other.exponent);
        let a = self.scaled_numerator(exp)?;
        let b = other.scaled_numerator(exp)?;
        let sum = a.checked_add(b).ok_or_else(|| Error::Overflow(format!("{self} + {other}")))?;
        Self::new(sum, exp)
    }

    pub fn checked_sub(self, other: Self) -> Result<Self> {
        self.checked_add(other.checked_neg()?)
    }

    pub fn checked_neg(self) -> Result<Self> {
        let numerator = self
            .numerator
            .checked_neg()
            .ok_or_else(|| Error::Overflow(format!("-({self})")))?;
        Ok(Self { numerator, exponent: self.exponent })
    }

    pub fn checked_mul(self, other: Self) -> Result<Self> {
        let num = self
            .numerator
            .checked_mul(other.numerator)
            .ok_or_else(|| Error::Overflow(format!("{self} * {other}")))?;
        Self::new(num, self.exponent + other.exponent)
    }

    /// Multiplies by `2^power` (negative powers divide).
    pub fn mul_pow2(self, power: i32) -> Result<Self> {
        if self.is_zero() {
            return Ok(self);
        }
        if power >= 0 {
            let power = power as u32;
            if power <= self.exponent {
                return Self::new(self.numerator, self.exponent - power);
            }
            let shift = power - self.exponent;
            if shift > 62 {
                return Err(Error::Overflow(format!("{self} * 2^{power}")));
            }
            let num = self
                .numerator
                .checked_mul(1i64 << shift)
                .ok_or_else(|| Error::Overflow(format!("{self} * 2^{power}")))?;
            Self::new(num, 0)
        } else {
            Self::new(self.numerator, self.exponent + power.unsigned_abs())
        }
    }

    /// Reduces into `[0, 1)`.
    pub fn fract(self) -> Self {
        if self.exponent == 0 {
            return Self::ZERO;
        }
        let den = 1i64 << self.exponent;
        Self { numerator: self.numerator.rem_euclid(den), exponent: self.exponent }
    }

    pub fn abs(self) -> Result<Self> {
        if self.numerator < 0 {
            self.checked_neg()
        } else {
            Ok(self)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / (self.exponent as f64).exp2()
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let exp = self.exponent.max(other.exponent);
        let a = (self.numerator as i128) << (exp - self.exponent);
        let b = (other.numerator as i128) << (exp - other.exponent);
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, 1u64 << self.exponent)
        }
    }
}

impl FromStr for DyadicRational {
    type Err = Error;

    /// Accepts `"p"`, `"p/q"` with `q` a power of two, and `"p/2^n"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not a dyadic rational: {s:?}"));
        let s = s.trim();
        let Some((num, den)) = s.split_once('/') else {
            return s.parse::<i64>().map(Self::from_int).map_err(|_| bad());
        };
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den = den.trim();
        let exp = if let Some(pow) = den.strip_prefix("2^") {
            pow.parse::<u32>().map_err(|_| bad())?
        } else {
            let q: u64 = den.parse().map_err(|_| bad())?;
            if q == 0 || !q.is_power_of_two() {
                return Err(bad());
            }
            q.trailing_zeros()
        };
        Self::new(num, exp)
    }
}

impl Serialize for DyadicRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DyadicRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// True iff `a = p/2^n` and `b = (p+1)/2^n` for some integers `p, n`.
pub fn is_standard(a: DyadicRational, b: DyadicRational) -> bool {
    StandardDyadicInterval::from_endpoints(a, b).is_ok()
}

/// The interval `[p/2^n, (p+1)/2^n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StandardDyadicInterval {
    p: u64,
    n: u32,
}

impl StandardDyadicInterval {
    pub const UNIT: Self = Self { p: 0, n: 0 };

    pub fn new(p: u64, n: u32) -> Result<Self> {
        if n > MAX_EXPONENT - 1 {
            return Err(Error::Overflow(format!("interval depth {n} exceeds {}", MAX_EXPONENT - 1)));
        }
        if p >= 1u64 << n {
            return Err(Error::InvalidInterval(format!("p = {p} out of range for n = {n}")));
        }
        Ok(Self { p, n })
    }

    pub fn from_endpoints(a: DyadicRational, b: DyadicRational) -> Result<Self> {
        let err = || Error::InvalidInterval(format!("[{a}, {b}] is not standard dyadic"));
        if a < DyadicRational::ZERO || b > DyadicRational::ONE || a >= b {
            return Err(err());
        }
        let len = b.checked_sub(a)?;
        // A standard interval has length exactly 2^-n.
        if len.numerator() != 1 {
            return Err(err());
        }
        let n = len.exponent();
        if a.exponent() > n {
            return Err(err());
        }
        let p = a.scaled_numerator(n)?;
        Self::new(p as u64, n)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn depth(&self) -> u32 {
        self.n
    }

    pub fn left(&self) -> DyadicRational {
        DyadicRational::new(self.p as i64, self.n).expect("interval endpoints are in range")
    }

    pub fn right(&self) -> DyadicRational {
        DyadicRational::new(self.p as i64 + 1, self.n).expect("interval endpoints are in range")
    }

    pub fn length(&self) -> DyadicRational {
        DyadicRational::new(1, self.n).expect("interval length is in range")
    }

    pub fn midpoint(&self) -> DyadicRational {
        DyadicRational::new(2 * self.p as i64 + 1, self.n + 1).expect("depth bounded below MAX_EXPONENT")
    }

    /// The two halves obtained by splitting at the midpoint.
    pub fn children(&self) -> Result<(Self, Self)> {
        Ok((Self::new(2 * self.p, self.n + 1)?, Self::new(2 * self.p + 1, self.n + 1)?))
    }

    pub fn parent(&self) -> Option<Self> {
        (self.n > 0).then(|| Self { p: self.p / 2, n: self.n - 1 })
    }

    pub fn is_left_child(&self) -> bool {
        self.n > 0 && self.p.is_multiple_of(2)
    }

    /// `left <= t < right`.
    pub fn contains_point(&self, t: DyadicRational) -> bool {
        self.left() <= t && t < self.right()
    }

    pub fn contains(&self, other: &Self) -> bool {
        other.n >= self.n && (other.p >> (other.n - self.n)) == self.p
    }

    /// True when the interiors intersect.
    pub fn overlaps(&self, other: &Self) -> bool {
        self.contains(other) || other.contains(self)
    }
}

impl fmt::Display for StandardDyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.left(), self.right())
    }
}

/// A tiling of `[0, 1]` by standard dyadic intervals, ordered left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicPartition {
    intervals: Vec<StandardDyadicInterval>,
}

impl DyadicPartition {
    pub fn new(intervals: Vec<StandardDyadicInterval>) -> Result<Self> {
        let Some(first) = intervals.first() else {
            return Err(Error::InvalidPartition("empty partition".into()));
        };
        if !first.left().is_zero() {
            return Err(Error::InvalidPartition(format!("first interval {first} does not start at 0")));
        }
        for w in intervals.windows(2) {
            if w[0].right() != w[1].left() {
                return Err(Error::InvalidPartition(format!("{} and {} are not adjacent", w[0], w[1])));
            }
        }
        let last = intervals.last().expect("nonempty");
        if last.right() != DyadicRational::ONE {
            return Err(Error::InvalidPartition(format!("last interval {last} does not end at 1")));
        }
        Ok(Self { intervals })
    }

    pub fn trivial() -> Self {
        Self { intervals: vec![StandardDyadicInterval::UNIT] }
    }

    /// `2^depth` intervals of equal length.
    pub fn uniform(depth: u32) -> Result<Self> {
        if depth > 30 {
            return Err(Error::Overflow(format!("uniform partition of depth {depth}")));
        }
        let intervals = (0..1u64 << depth)
            .map(|p| StandardDyadicInterval::new(p, depth))
            .collect::<Result<_>>()?;
        Ok(Self { intervals })
    }

    /// Builds the partition with the given breakpoints. `0` and `1` may be
    /// omitted; every consecutive pair must bound a standard interval.
    pub fn from_breakpoints(points: &[DyadicRational]) -> Result<Self> {
        let mut pts: Vec<DyadicRational> = Vec::with_capacity(points.len() + 2);
        if points.first() != Some(&DyadicRational::ZERO) {
            pts.push(DyadicRational::ZERO);
        }
        pts.extend_from_slice(points);
        if points.last() != Some(&DyadicRational::ONE) {
            pts.push(DyadicRational::ONE);
        }
        let intervals = pts
            .windows(2)
            .map(|w| StandardDyadicInterval::from_endpoints(w[0], w[1]))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidPartition(e.to_string()))?;
        Self::new(intervals)
    }

    /// All endpoints, `0` and `1` included.
    pub fn breakpoints(&self) -> Vec<DyadicRational> {
        std::iter::once(DyadicRational::ZERO)
            .chain(self.intervals.iter().map(|i| i.right()))
            .collect()
    }

    pub fn intervals(&self) -> &[StandardDyadicInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The sites `ℳ_ℐ` carrying the tensor factors.
    pub fn midpoints(&self) -> Vec<DyadicRational> {
        self.intervals.iter().map(|i| i.midpoint()).collect()
    }

    pub fn depth(&self) -> u32 {
        self.intervals.iter().map(|i| i.depth()).max().unwrap_or(0)
    }

    /// Index of the interval `[left, right)` containing `t`; `t = 1` maps to the last one.
    pub fn locate(&self, t: DyadicRational) -> Option<usize> {
        if t < DyadicRational::ZERO || t > DyadicRational::ONE {
            return None;
        }
        let idx = self.intervals.partition_point(|i| i.right() <= t);
        Some(idx.min(self.intervals.len() - 1))
    }

    /// Index of the interval of `self` that contains `sub`, if any.
    pub fn enclosing(&self, sub: &StandardDyadicInterval) -> Option<usize> {
        let idx = self.locate(sub.left())?;
        self.intervals[idx].contains(sub).then_some(idx)
    }

    /// `self ⪯ fine`.
    pub fn is_refined_by(&self, fine: &Self) -> bool {
        refines(self, fine)
    }
}

impl fmt::Display for DyadicPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{iv}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for DyadicPartition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.breakpoints().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DyadicPartition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let points = Vec::<DyadicRational>::deserialize(deserializer)?;
        Self::from_breakpoints(&points).map_err(serde::de::Error::custom)
    }
}

/// `coarse ⪯ fine`: every interval of `coarse` is a union of consecutive
/// intervals of `fine`. For two tilings this is endpoint-set inclusion.
pub fn refines(coarse: &DyadicPartition, fine: &DyadicPartition) -> bool {
    let fine_points = fine.breakpoints();
    coarse
        .breakpoints()
        .iter()
        .all(|p| fine_points.binary_search(p).is_ok())
}

/// The coarsest partition refining both inputs.
pub fn common_refinement(a: &DyadicPartition, b: &DyadicPartition) -> DyadicPartition {
    let mut points = a.breakpoints();
    points.extend(b.breakpoints());
    points.sort();
    points.dedup();
    // Standard intervals nest or have disjoint interiors, so every gap
    // between merged breakpoints is itself standard.
    let intervals = points
        .windows(2)
        .map(|w| StandardDyadicInterval::from_endpoints(w[0], w[1]).expect("merged breakpoints bound standard intervals"))
        .collect();
    DyadicPartition { intervals }
}
