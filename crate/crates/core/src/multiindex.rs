//! Multi-indices over `m` base directions and the combinatorial identities
//! that the velocity-momentum formalism relies on.
//!
//! Slot indices (`i` in `I + 1_i`) are zero-based throughout the crate; the
//! text syntax is one-based.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::Rational;

/// An `m`-tuple of differentiation counts.
///
/// Ordering is graded lexicographic: first by [`order`](Self::order), then by
/// components, larger leading components first, so that the second-order
/// indices over two slots enumerate as `[2,0] < [1,1] < [0,2]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(m: usize) -> Self {
        MultiIndex(vec![0; m])
    }

    /// `1_i`: zero everywhere except slot `i`.
    pub fn unit(i: usize, m: usize) -> Result<Self> {
        if i >= m {
            return Err(Error::usage(format!("slot {} out of range for m = {m}", i + 1)));
        }
        let mut c = vec![0; m];
        c[i] = 1;
        Ok(MultiIndex(c))
    }

    /// Number of slots `m`.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|I|`, the total differentiation order.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `I!`, the product of the component factorials.
    pub fn factorial(&self) -> BigInt {
        self.0.iter().fold(BigInt::one(), |acc, &c| {
            acc * (1..=c).fold(BigInt::one(), |f, v| f * BigInt::from(v))
        })
    }

    pub fn checked_add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        self.same_dim(other)?;
        Ok(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// Componentwise difference, or `None` when some component would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Result<Option<MultiIndex>> {
        self.same_dim(other)?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex))
    }

    /// `I + 1_i`.
    pub fn raised(&self, i: usize) -> MultiIndex {
        let mut c = self.0.clone();
        c[i] += 1;
        MultiIndex(c)
    }

    /// `I - 1_i`, if still a multi-index.
    pub fn lowered(&self, i: usize) -> Option<MultiIndex> {
        if self.0[i] == 0 {
            return None;
        }
        let mut c = self.0.clone();
        c[i] -= 1;
        Some(MultiIndex(c))
    }

    /// All pairs `(I, i)` with `I + 1_i = self`, by ascending `i`.
    pub fn decompositions(&self) -> Vec<(MultiIndex, usize)> {
        (0..self.dim())
            .filter_map(|i| self.lowered(i).map(|lower| (lower, i)))
            .collect()
    }

    fn same_dim(&self, other: &MultiIndex) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::usage(format!(
                "multi-index length mismatch: {self} vs {other}"
            )));
        }
        Ok(())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim()
            .cmp(&other.dim())
            .then(self.order().cmp(&other.order()))
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (n, c) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, j| acc * (n - j) / (j + 1))
}

/// Number of multi-indices of order exactly `l` over `m` slots.
pub fn count(m: usize, l: u32) -> usize {
    binomial(m as u64 - 1 + l as u64, m as u64 - 1) as usize
}

/// All multi-indices of order exactly `l` over `m` slots, in graded-lex order.
pub fn enumerate(m: usize, l: u32) -> Vec<MultiIndex> {
    assert!(m >= 1, "multi-indices need at least one slot");
    let mut out = Vec::with_capacity(count(m, l));
    let mut current = vec![0u32; m];
    fill(&mut current, 0, l, &mut out);
    out
}

// Emits compositions with larger leading components first.
fn fill(current: &mut Vec<u32>, slot: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    let m = current.len();
    if slot == m - 1 {
        current[slot] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for c in (0..=remaining).rev() {
        current[slot] = c;
        fill(current, slot + 1, remaining - c, out);
    }
    current[slot] = 0;
}

/// All multi-indices of order `0..=max_order`, in graded-lex order.
pub fn enumerate_up_to(m: usize, max_order: u32) -> Vec<MultiIndex> {
    (0..=max_order).flat_map(|l| enumerate(m, l)).collect()
}

/// The weight `(I(i)+1)/(|I|+1)` attached to the decomposition `(I, i)`.
pub fn decomposition_weight(lower: &MultiIndex, i: usize) -> Rational {
    Rational::new(
        BigInt::from(lower.get(i) + 1),
        BigInt::from(lower.order() + 1),
    )
}

/// Exact sum of the decomposition weights of `j`; always one for `|J| >= 1`.
pub fn identity_weight_sum(j: &MultiIndex) -> Result<Rational> {
    if j.order() == 0 {
        return Err(Error::usage("weight identity needs |J| >= 1"));
    }
    Ok(j.decompositions()
        .iter()
        .map(|(lower, i)| decomposition_weight(lower, *i))
        .fold(Rational::zero(), |acc, w| acc + w))
}

/// A rational family indexed by `(I, i)`.
pub type PairFamily = BTreeMap<(MultiIndex, usize), Rational>;

/// A rational family indexed by a single multi-index.
pub type IndexFamily = BTreeMap<MultiIndex, Rational>;

fn pair_entry<'a>(family: &'a PairFamily, lower: &MultiIndex, i: usize) -> Result<&'a Rational> {
    family
        .get(&(lower.clone(), i))
        .ok_or_else(|| Error::usage(format!("family has no entry for ({lower}, {})", i + 1)))
}

fn index_entry<'a>(family: &'a IndexFamily, j: &MultiIndex) -> Result<&'a Rational> {
    family
        .get(j)
        .ok_or_else(|| Error::usage(format!("family has no entry for {j}")))
}

/// Checks that summing a pair family over `|I| = l-1, i` agrees with summing
/// it over `|J| = l` and the decompositions of each `J`.
pub fn fubini_check(family: &PairFamily, m: usize, l: u32) -> Result<bool> {
    if l == 0 {
        return Err(Error::usage("fubini check needs l >= 1"));
    }
    let mut lhs = Rational::zero();
    for lower in enumerate(m, l - 1) {
        for i in 0..m {
            lhs += pair_entry(family, &lower, i)?;
        }
    }
    let mut rhs = Rational::zero();
    for j in enumerate(m, l) {
        for (lower, i) in j.decompositions() {
            rhs += pair_entry(family, &lower, i)?;
        }
    }
    Ok(lhs == rhs)
}

/// Whether a pair family `Q` is invisible to every weighted decomposition sum
/// of order `l`: `sum_{I+1_i=J} (I(i)+1)/(|I|+1) Q^{I,i} = 0` for all `|J| = l`.
pub fn q_family_is_admissible(q: &PairFamily, m: usize, l: u32) -> Result<bool> {
    for j in enumerate(m, l) {
        let mut s = Rational::zero();
        for (lower, i) in j.decompositions() {
            s += decomposition_weight(&lower, i) * pair_entry(q, &lower, i)?;
        }
        if !s.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks the redistribution identity
/// `sum_{|J|=l} b^J a_J = sum_{|I|=l-1} sum_i w(I,i) (b^{I+1_i} + Q^{I,i}) a_{I+1_i}`.
///
/// Fails with a precondition error when `q` is not admissible.
pub fn redistribution_check(
    b: &IndexFamily,
    a: &IndexFamily,
    q: &PairFamily,
    m: usize,
    l: u32,
) -> Result<bool> {
    if l == 0 {
        return Err(Error::usage("redistribution identity needs l >= 1"));
    }
    if !q_family_is_admissible(q, m, l)? {
        return Err(Error::precondition(
            "Q family has a nonzero weighted sum for some |J| = l",
        ));
    }
    let mut lhs = Rational::zero();
    for j in enumerate(m, l) {
        lhs += index_entry(b, &j)? * index_entry(a, &j)?;
    }
    let mut rhs = Rational::zero();
    for lower in enumerate(m, l - 1) {
        for i in 0..m {
            let j = lower.raised(i);
            let w = decomposition_weight(&lower, i);
            rhs += w * (index_entry(b, &j)? + pair_entry(q, &lower, i)?) * index_entry(a, &j)?;
        }
    }
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(c: &[u32]) -> MultiIndex {
        MultiIndex::new(c.to_vec())
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    // Brute force: every tuple in [0, l]^m with the right sum.
    fn brute_enumerate(m: usize, l: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let total = (l as usize + 1).pow(m as u32);
        for code in 0..total {
            let mut c = Vec::with_capacity(m);
            let mut rest = code;
            for _ in 0..m {
                c.push((rest % (l as usize + 1)) as u32);
                rest /= l as usize + 1;
            }
            if c.iter().sum::<u32>() == l {
                out.push(MultiIndex::new(c));
            }
        }
        out
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(mi(&[1, 0]).checked_add(&mi(&[0, 1])).unwrap(), mi(&[1, 1]));
        assert_eq!(mi(&[0, 2, 1]).checked_add(&mi(&[0, 0, 0])).unwrap(), mi(&[0, 2, 1]));
        assert_eq!(mi(&[2, 0]).checked_add(&mi(&[0, 2])).unwrap(), mi(&[2, 2]));
        assert!(matches!(mi(&[1]).checked_add(&mi(&[1, 0])), Err(Error::Usage(_))));

        assert_eq!(mi(&[1, 1]).checked_sub(&mi(&[1, 0])).unwrap(), Some(mi(&[0, 1])));
        assert_eq!(mi(&[1, 0]).checked_sub(&mi(&[0, 1])).unwrap(), None);
        assert_eq!(mi(&[2, 2]).checked_sub(&mi(&[1, 1])).unwrap(), Some(mi(&[1, 1])));

        assert_eq!(mi(&[0, 2, 1]).order(), 3);
        assert_eq!(mi(&[2, 1]).factorial(), BigInt::from(2));
        assert_eq!(MultiIndex::unit(1, 3).unwrap(), mi(&[0, 1, 0]));
        assert!(MultiIndex::unit(3, 3).is_err());
        assert_eq!(mi(&[2, 0]).to_string(), "[2,0]");
    }

    #[test]
    fn enumeration_matches_brute_force() {
        assert_eq!(enumerate(2, 2), vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
        assert_eq!(enumerate(1, 5), vec![mi(&[5])]);
        assert_eq!(enumerate(3, 1).len(), 3);
        for m in 1..=4 {
            for l in 0..=5 {
                let fast = enumerate(m, l);
                let mut slow = brute_enumerate(m, l);
                slow.sort();
                assert_eq!(fast, slow, "m={m} l={l}");
                assert_eq!(fast.len(), count(m, l));
                assert!(fast.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        assert_eq!(
            mi(&[1, 1]).decompositions(),
            vec![(mi(&[0, 1]), 0), (mi(&[1, 0]), 1)]
        );
        assert_eq!(mi(&[2, 0]).decompositions(), vec![(mi(&[1, 0]), 0)]);
        assert_eq!(mi(&[1, 1, 1]).decompositions().len(), 3);
        assert!(mi(&[0, 0]).decompositions().is_empty());
    }

    #[test]
    fn decompositions_witness_a_bijection() {
        for m in 1..=4 {
            for l in 1..=5 {
                let mut from_j: Vec<(MultiIndex, usize)> =
                    enumerate(m, l).iter().flat_map(|j| j.decompositions()).collect();
                let mut from_i: Vec<(MultiIndex, usize)> = enumerate(m, l - 1)
                    .into_iter()
                    .flat_map(|lower| (0..m).map(move |i| (lower.clone(), i)))
                    .collect();
                from_j.sort();
                from_i.sort();
                let before = from_j.len();
                from_j.dedup();
                assert_eq!(before, from_j.len());
                assert_eq!(from_j, from_i);
            }
        }
    }

    #[test]
    fn weight_identity() {
        assert_eq!(identity_weight_sum(&mi(&[1, 1])).unwrap(), Rational::one());
        assert_eq!(identity_weight_sum(&mi(&[3, 0])).unwrap(), Rational::one());
        assert_eq!(identity_weight_sum(&mi(&[2, 1, 1])).unwrap(), Rational::one());
        assert!(identity_weight_sum(&mi(&[0, 0])).is_err());
        // The two halves of [1,1].
        let parts: Vec<Rational> = mi(&[1, 1])
            .decompositions()
            .iter()
            .map(|(lower, i)| decomposition_weight(lower, *i))
            .collect();
        assert_eq!(parts, vec![r(1, 2), r(1, 2)]);
    }

    #[test]
    fn fubini_constant_family() {
        let mut family = PairFamily::new();
        for lower in enumerate(2, 1) {
            for i in 0..2 {
                family.insert((lower.clone(), i), Rational::one());
            }
        }
        assert!(fubini_check(&family, 2, 2).unwrap());
        let lhs: Rational = family.values().cloned().sum();
        assert_eq!(lhs, r(4, 1));
        family.remove(&(mi(&[1, 0]), 0));
        assert!(matches!(fubini_check(&family, 2, 2), Err(Error::Usage(_))));
    }

    #[test]
    fn redistribution_examples() {
        let mut b = IndexFamily::new();
        let mut a = IndexFamily::new();
        for (n, j) in enumerate(2, 2).into_iter().enumerate() {
            b.insert(j.clone(), r(n as i64 + 2, 3));
            a.insert(j, r(5 - n as i64, 7));
        }
        let mut q = PairFamily::new();
        for lower in enumerate(2, 1) {
            for i in 0..2 {
                q.insert((lower.clone(), i), Rational::zero());
            }
        }
        assert!(redistribution_check(&b, &a, &q, 2, 2).unwrap());

        q.insert((mi(&[0, 1]), 0), r(2, 1));
        q.insert((mi(&[1, 0]), 1), r(-2, 1));
        assert!(redistribution_check(&b, &a, &q, 2, 2).unwrap());

        q.insert((mi(&[1, 0]), 1), r(1, 1));
        assert!(matches!(
            redistribution_check(&b, &a, &q, 2, 2),
            Err(Error::Precondition(_))
        ));
    }
}
