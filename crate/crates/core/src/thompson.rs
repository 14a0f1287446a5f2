//! Elements of Thompson's group T stored as partition pairs with a cyclic
//! offset: the `i`-th interval of `domain` is mapped affinely onto the
//! `(i + offset) mod n`-th interval of `range`.
//!
//! Every constructor reduces to the coarsest pair, so two elements compare
//! equal exactly when they are the same map of the circle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{common_refinement, DyadicPartition, DyadicRational, StandardDyadicInterval};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawElement", into = "RawElement")]
pub struct ThompsonElement {
    domain: DyadicPartition,
    range: DyadicPartition,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct RawElement {
    domain: DyadicPartition,
    range: DyadicPartition,
    offset: i64,
}

impl TryFrom<RawElement> for ThompsonElement {
    type Error = Error;

    fn try_from(raw: RawElement) -> Result<Self> {
        let n = raw.domain.len() as i64;
        if raw.offset < 0 || raw.offset >= n {
            return Err(Error::InvalidElement(format!("offset {} out of range 0..{n}", raw.offset)));
        }
        Self::new(raw.domain, raw.range, raw.offset as usize)
    }
}

impl From<ThompsonElement> for RawElement {
    fn from(f: ThompsonElement) -> Self {
        Self { domain: f.domain, range: f.range, offset: f.offset as i64 }
    }
}

/// Affine image of `sub ⊆ from` under the orientation-preserving map `from → to`.
fn affine_image(
    from: &StandardDyadicInterval,
    to: &StandardDyadicInterval,
    sub: &StandardDyadicInterval,
) -> Result<StandardDyadicInterval> {
    debug_assert!(from.contains(sub));
    let rel_depth = sub.depth() - from.depth();
    let rel_index = sub.p() - (from.p() << rel_depth);
    StandardDyadicInterval::new((to.p() << rel_depth) + rel_index, to.depth() + rel_depth)
}

/// Distance from `g` to the nearest integer, for `-1 < g < 1`.
fn distance_to_integer(g: DyadicRational) -> Result<DyadicRational> {
    let a = g.abs()?;
    let half = DyadicRational::new(1, 1)?;
    if a <= half {
        Ok(a)
    } else {
        DyadicRational::ONE.checked_sub(a)
    }
}

impl ThompsonElement {
    pub fn new(domain: DyadicPartition, range: DyadicPartition, offset: usize) -> Result<Self> {
        let n = domain.len();
        if range.len() != n {
            return Err(Error::InvalidElement(format!(
                "domain has {n} intervals but range has {}",
                range.len()
            )));
        }
        if offset >= n {
            return Err(Error::InvalidElement(format!("offset {offset} out of range 0..{n}")));
        }
        let pairs = (0..n)
            .map(|i| (domain.intervals()[i], range.intervals()[(i + offset) % n]))
            .collect();
        Ok(Self::from_pairs(pairs))
    }

    pub fn identity() -> Self {
        Self { domain: DyadicPartition::trivial(), range: DyadicPartition::trivial(), offset: 0 }
    }

    /// Translation `t ↦ t + 2^-k mod 1`.
    pub fn rotation(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("rotation index must be at least 1".into()));
        }
        let uniform = DyadicPartition::uniform(k)?;
        Ok(Self { domain: uniform.clone(), range: uniform, offset: 1 })
    }

    pub fn domain(&self) -> &DyadicPartition {
        &self.domain
    }

    pub fn range(&self) -> &DyadicPartition {
        &self.range
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// `(domain interval, image interval)` in domain order.
    pub fn pieces(&self) -> impl Iterator<Item = (StandardDyadicInterval, StandardDyadicInterval)> + '_ {
        let n = self.domain.len();
        (0..n).map(move |i| (self.domain.intervals()[i], self.range.intervals()[(i + self.offset) % n]))
    }

    /// Builds an element from its pieces listed in domain order and reduces it.
    fn from_pairs(mut pairs: Vec<(StandardDyadicInterval, StandardDyadicInterval)>) -> Self {
        // Cancel common carets: sibling domain pieces whose images are
        // sibling range pieces, in the same order, merge into their parents.
        let mut i = 0;
        while i + 1 < pairs.len() {
            let (d0, r0) = pairs[i];
            let (d1, r1) = pairs[i + 1];
            let mergeable = d0.is_left_child()
                && r0.is_left_child()
                && d0.parent() == d1.parent()
                && r0.parent() == r1.parent();
            if mergeable {
                pairs[i] = (d0.parent().expect("left child"), r0.parent().expect("left child"));
                pairs.remove(i + 1);
                i = i.saturating_sub(1);
            } else {
                i += 1;
            }
        }
        let domain: Vec<_> = pairs.iter().map(|p| p.0).collect();
        let mut range: Vec<_> = pairs.iter().map(|p| p.1).collect();
        range.sort_by_key(|r| r.left());
        let offset = range.iter().position(|r| *r == pairs[0].1).expect("image is in range");
        Self {
            domain: DyadicPartition::new(domain).expect("domain pieces tile [0, 1]"),
            range: DyadicPartition::new(range).expect("image pieces tile [0, 1]"),
            offset,
        }
    }

    /// Image of a standard interval lying inside one domain piece.
    pub fn map_interval(&self, sub: &StandardDyadicInterval) -> Result<StandardDyadicInterval> {
        let i = self.domain.enclosing(sub).ok_or_else(|| {
            Error::Precondition(format!("{sub} does not lie inside a single domain piece"))
        })?;
        let n = self.domain.len();
        affine_image(&self.domain.intervals()[i], &self.range.intervals()[(i + self.offset) % n], sub)
    }

    /// Images of every interval of `partition`, in the partition's order.
    /// Requires `domain ⪯ partition`.
    pub fn map_partition(&self, partition: &DyadicPartition) -> Result<Vec<StandardDyadicInterval>> {
        partition.intervals().iter().map(|iv| self.map_interval(iv)).collect()
    }

    pub fn evaluate(&self, t: DyadicRational) -> Result<DyadicRational> {
        if t < DyadicRational::ZERO || t >= DyadicRational::ONE {
            return Err(Error::Precondition(format!("evaluation point {t} outside [0, 1)")));
        }
        let i = self.domain.locate(t).expect("t in [0, 1)");
        let d = self.domain.intervals()[i];
        let r = self.range.intervals()[(i + self.offset) % self.domain.len()];
        let slope = d.depth() as i32 - r.depth() as i32;
        r.left().checked_add(t.checked_sub(d.left())?.mul_pow2(slope)?)
    }

    pub fn inverse(&self) -> Self {
        let n = self.domain.len();
        Self {
            domain: self.range.clone(),
            range: self.domain.clone(),
            offset: (n - self.offset) % n,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let middle = common_refinement(other.range(), self.domain());
        let back = other.inverse();
        let pairs = middle
            .intervals()
            .iter()
            .map(|k| Ok((back.map_interval(k)?, self.map_interval(k)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut pairs = pairs;
        // `middle` is ordered by the intermediate point; rotate so the
        // piece starting at 0 in the domain comes first.
        let start = pairs
            .iter()
            .position(|(d, _)| d.left().is_zero())
            .expect("some preimage starts at 0");
        pairs.rotate_left(start);
        Ok(Self::from_pairs(pairs))
    }

    /// `sup_t d(f(t), t)` with `d` the distance on the circle `[0, 1)/~`.
    pub fn circle_distance_to_identity(&self) -> Result<DyadicRational> {
        let half = DyadicRational::new(1, 1)?;
        let mut best = DyadicRational::ZERO;
        for (d, r) in self.pieces() {
            // Lifted displacement is affine on the piece, between these values.
            let g0 = r.left().checked_sub(d.left())?;
            let g1 = r.right().checked_sub(d.right())?;
            let (lo, hi) = if g0 <= g1 { (g0, g1) } else { (g1, g0) };
            let neg_half = half.checked_neg()?;
            if (lo <= half && half <= hi) || (lo <= neg_half && neg_half <= hi) {
                return Ok(half);
            }
            best = best.max(distance_to_integer(g0)?).max(distance_to_integer(g1)?);
        }
        Ok(best)
    }

    /// Coarsest refinement `ℐ′` of `partition` on which the element is affine
    /// piecewise, so that the image of `ℐ′` is again a standard partition.
    pub fn refine_for(&self, partition: &DyadicPartition) -> DyadicPartition {
        common_refinement(partition, &self.domain)
    }
}

/// Random partition with exactly `leaves` intervals, none deeper than `max_depth`.
pub fn random_partition<R: Rng + ?Sized>(rng: &mut R, leaves: usize, max_depth: u32) -> Result<DyadicPartition> {
    if leaves == 0 || leaves > 1usize << max_depth {
        return Err(Error::Precondition(format!(
            "cannot build {leaves} intervals with depth at most {max_depth}"
        )));
    }
    let mut intervals = vec![StandardDyadicInterval::UNIT];
    while intervals.len() < leaves {
        let splittable: Vec<usize> = (0..intervals.len()).filter(|&i| intervals[i].depth() < max_depth).collect();
        let i = splittable[rng.random_range(0..splittable.len())];
        let (a, b) = intervals[i].children()?;
        intervals[i] = a;
        intervals.insert(i + 1, b);
    }
    DyadicPartition::new(intervals)
}

/// Random element whose partitions have depth at most `max_depth`.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R, max_depth: u32) -> Result<ThompsonElement> {
    let cap = 1usize << max_depth.min(5);
    let leaves = rng.random_range(1..=cap);
    let domain = random_partition(rng, leaves, max_depth)?;
    let range = random_partition(rng, leaves, max_depth)?;
    let offset = rng.random_range(0..leaves);
    ThompsonElement::new(domain, range, offset)
}
