//! Truncated normal-crossing ring `B = Q[[x1..xn]]/(x1...xr)`.
//!
//! A monomial `x^k` survives in `B` iff `min(k1..kr) = 0` and its degree is at
//! most the truncation bound. Elements may also carry a polynomial variable
//! `u` of bounded degree; for plain series the `u`-bound is 0.
//!
//! Invariants of [`Series`]:
//! - every stored key is admissible for the ring and within the `u`-bound;
//! - no stored coefficient is zero, so `==` is structural equality.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Q;

/// Shape of the truncated ring.
///
/// `tail_weight` is the degree weight of the last variable. It is 1 for every
/// user-facing ring; descent along a crossing produces rings whose last
/// variable stands for a product `x_{n-1} x_n` and therefore weighs more.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingSpec {
    pub n: usize,
    pub r: usize,
    pub trunc: u32,
    pub tail_weight: u32,
}

impl RingSpec {
    pub fn new(n: usize, r: usize, trunc: u32) -> Result<Self> {
        if n == 0 || r == 0 || r > n {
            return Err(Error::InvalidRing(format!(
                "need 1 <= r <= n, got n={n}, r={r}"
            )));
        }
        Ok(RingSpec {
            n,
            r,
            trunc,
            tail_weight: 1,
        })
    }

    pub fn with_tail_weight(mut self, w: u32) -> Self {
        assert!(w >= 1);
        self.tail_weight = w;
        self
    }

    pub fn with_trunc(mut self, trunc: u32) -> Self {
        self.trunc = trunc;
        self
    }

    pub fn weighted_degree(&self, k: &[u32]) -> u32 {
        let plain: u32 = k.iter().sum();
        match k.last() {
            Some(&last) => plain + (self.tail_weight - 1) * last,
            None => 0,
        }
    }

    pub fn is_admissible(&self, k: &MultiIndex) -> bool {
        k.0.len() == self.n
            && k.0[..self.r].contains(&0)
            && self.weighted_degree(&k.0) <= self.trunc
    }

    /// All admissible monomials, in processing order.
    pub fn monomials(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.n];
        self.enumerate(0, 0, &mut cur, &mut out);
        out.sort();
        out
    }

    fn enumerate(&self, pos: usize, used: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos == self.n {
            let k = MultiIndex(cur.clone());
            if self.is_admissible(&k) {
                out.push(k);
            }
            return;
        }
        let w = if pos + 1 == self.n { self.tail_weight } else { 1 };
        let mut e = 0;
        while used + w * e <= self.trunc {
            cur[pos] = e;
            self.enumerate(pos + 1, used + w * e, cur, out);
            e += 1;
        }
        cur[pos] = 0;
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={},r={},N={}", self.n, self.r, self.trunc)?;
        if self.tail_weight != 1 {
            write!(f, ",w={}", self.tail_weight)?;
        }
        write!(f, ")")
    }
}

/// Exponent vector. Ordered by total degree, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut k = vec![0; n];
        k[i] = 1;
        MultiIndex(k)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when `other <= self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Componentwise `self <= other`.
    pub fn divides(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Key of a stored coefficient: `x^k u^j`.
pub type Term = (MultiIndex, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    ring: RingSpec,
    u_trunc: u32,
    terms: BTreeMap<Term, Q>,
}

impl Series {
    pub fn zero(ring: RingSpec) -> Self {
        Self::zero_u(ring, 0)
    }

    pub fn zero_u(ring: RingSpec, u_trunc: u32) -> Self {
        Series {
            ring,
            u_trunc,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ring: RingSpec, c: Q) -> Self {
        Self::constant_u(ring, 0, c)
    }

    pub fn constant_u(ring: RingSpec, u_trunc: u32, c: Q) -> Self {
        let mut s = Self::zero_u(ring, u_trunc);
        s.add_term(MultiIndex::zero(ring.n), 0, c);
        s
    }

    pub fn one(ring: RingSpec) -> Self {
        Self::constant(ring, Q::one())
    }

    /// `c x^k`; errors if `k` is not admissible.
    pub fn monomial(ring: RingSpec, k: MultiIndex, c: Q) -> Result<Self> {
        Self::monomial_u(ring, 0, k, 0, c)
    }

    pub fn monomial_u(ring: RingSpec, u_trunc: u32, k: MultiIndex, j: u32, c: Q) -> Result<Self> {
        if !ring.is_admissible(&k) {
            return Err(Error::Inadmissible(format!("x^{k} in {ring}")));
        }
        if j > u_trunc {
            return Err(Error::Inadmissible(format!("u^{j} beyond u-bound {u_trunc}")));
        }
        let mut s = Self::zero_u(ring, u_trunc);
        s.add_term(k, j, c);
        Ok(s)
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn u_trunc(&self) -> u32 {
        self.u_trunc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, u32, &Q)> {
        self.terms.iter().map(|((k, j), c)| (k, *j, c))
    }

    pub fn coeff(&self, k: &MultiIndex, j: u32) -> Q {
        self.terms
            .get(&(k.clone(), j))
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&MultiIndex::zero(self.ring.n), 0)
    }

    /// Adds `c x^k u^j`, silently dropping keys that vanish in the ring.
    pub fn add_term(&mut self, k: MultiIndex, j: u32, c: Q) {
        if c.is_zero() || j > self.u_trunc || !self.ring.is_admissible(&k) {
            return;
        }
        let key = (k, j);
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn same_ring(&self, other: &Series) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(self.ring, other.ring));
        }
        if self.u_trunc != other.u_trunc {
            return Err(Error::UTruncMismatch(self.u_trunc, other.u_trunc));
        }
        Ok(())
    }

    fn assert_same(&self, other: &Series) {
        if let Err(e) = self.same_ring(other) {
            panic!("{e}");
        }
    }

    pub fn add(&self, other: &Series) -> Series {
        self.assert_same(other);
        let mut out = self.clone();
        for ((k, j), c) in &other.terms {
            out.add_term(k.clone(), *j, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Series) -> Series {
        self.assert_same(other);
        let mut out = self.clone();
        for ((k, j), c) in &other.terms {
            out.add_term(k.clone(), *j, -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Series {
        Series {
            ring: self.ring,
            u_trunc: self.u_trunc,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> Series {
        if c.is_zero() {
            return Series::zero_u(self.ring, self.u_trunc);
        }
        Series {
            ring: self.ring,
            u_trunc: self.u_trunc,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Series) -> Series {
        self.assert_same(other);
        let ring = self.ring;
        let mut acc: BTreeMap<Term, Q> = BTreeMap::new();
        for ((ka, ja), ca) in &self.terms {
            let da = ring.weighted_degree(&ka.0);
            for ((kb, jb), cb) in &other.terms {
                let j = ja + jb;
                if j > self.u_trunc || da + ring.weighted_degree(&kb.0) > ring.trunc {
                    continue;
                }
                let k = ka.add(kb);
                if !k.0[..ring.r].contains(&0) {
                    continue;
                }
                *acc.entry((k, j)).or_insert_with(Q::zero) += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Series {
            ring,
            u_trunc: self.u_trunc,
            terms: acc,
        }
    }

    /// Keeps terms of weighted `x`-degree `<= max_x` and `u`-degree `<= max_u`.
    /// Negative bounds keep nothing.
    pub fn truncated(&self, max_x: i64, max_u: i64) -> Series {
        let ring = self.ring;
        Series {
            ring,
            u_trunc: self.u_trunc,
            terms: self
                .terms
                .iter()
                .filter(|((k, j), _)| {
                    (ring.weighted_degree(&k.0) as i64) <= max_x && (*j as i64) <= max_u
                })
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    /// Rebuilds the series over another ring, relabelling each monomial.
    /// Keys mapped to `None` or to vanishing monomials are dropped.
    pub fn map_monomials<F>(&self, ring: RingSpec, u_trunc: u32, mut f: F) -> Series
    where
        F: FnMut(&MultiIndex, u32) -> Option<(MultiIndex, u32)>,
    {
        let mut out = Series::zero_u(ring, u_trunc);
        for ((k, j), c) in &self.terms {
            if let Some((k2, j2)) = f(k, *j) {
                out.add_term(k2, j2, c.clone());
            }
        }
        out
    }

    /// Same coefficients viewed with another `u`-bound.
    pub fn with_u_trunc(&self, u_trunc: u32) -> Series {
        self.map_monomials(self.ring, u_trunc, |k, j| Some((k.clone(), j)))
    }

    /// `(x)`-adic valuation; `None` stands for infinity.
    pub fn valuation(&self) -> Option<u32> {
        self.terms.keys().map(|(k, _)| k.degree()).min()
    }

    /// Least degree among terms with `k_i != k_j` (1-based indices); `None`
    /// when every term is balanced in the pair.
    pub fn delta(&self, i: usize, j: usize) -> Option<u32> {
        assert!(i != j && i >= 1 && j >= 1 && i <= self.ring.n && j <= self.ring.n);
        self.terms
            .keys()
            .filter(|(k, _)| k.0[i - 1] != k.0[j - 1])
            .map(|(k, _)| k.degree())
            .min()
    }

    /// Largest weighted degree present.
    pub fn top_degree(&self) -> Option<u32> {
        self.terms
            .keys()
            .map(|(k, _)| self.ring.weighted_degree(&k.0))
            .max()
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, ((k, j), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            if !k.is_zero() {
                write!(f, "*x^{k}")?;
            }
            if *j > 0 {
                write!(f, "*u^{j}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Sub,
    Mul,
}

/// Checked ring operation.
pub fn series_arith(a: &Series, b: &Series, op: SeriesOp) -> Result<Series> {
    a.same_ring(b)?;
    Ok(match op {
        SeriesOp::Add => a.add(b),
        SeriesOp::Sub => a.sub(b),
        SeriesOp::Mul => a.mul(b),
    })
}

/// Basis derivations. Indices are 1-based as in the usual coordinates.
///
/// - `Log(i)`, `i < r`: `x^k -> (k_i - k_{i+1}) x^k`.
/// - `Log(r)` (absolute only): `x^k u^j -> k_r x^k u^j + j x^k u^{j-1}`.
/// - `Partial(j)`, `j > r`: `x^k -> k_j x^{k - e_j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Derivation {
    Log(usize),
    Partial(usize),
}

impl Derivation {
    pub fn is_log(&self) -> bool {
        matches!(self, Derivation::Log(_))
    }

    /// Eigenvalue of a log derivation on `x^k`.
    pub fn log_eigenvalue(&self, ring: &RingSpec, k: &[u32]) -> i64 {
        match *self {
            Derivation::Log(i) if i < ring.r => k[i - 1] as i64 - k[i] as i64,
            Derivation::Log(i) => k[i - 1] as i64,
            Derivation::Partial(_) => panic!("partial derivation has no eigenvalue"),
        }
    }

    pub fn apply(&self, f: &Series) -> Series {
        let ring = f.ring();
        let mut out = Series::zero_u(ring, f.u_trunc());
        match *self {
            Derivation::Log(i) => {
                for (k, j, c) in f.terms() {
                    let e = self.log_eigenvalue(&ring, &k.0);
                    if e != 0 {
                        out.add_term(k.clone(), j, c * Q::from_integer(e.into()));
                    }
                    if i == ring.r && j > 0 {
                        out.add_term(k.clone(), j - 1, c * Q::from_integer(j.into()));
                    }
                }
            }
            Derivation::Partial(p) => {
                for (k, j, c) in f.terms() {
                    let e = k.0[p - 1];
                    if e > 0 {
                        let mut k2 = k.clone();
                        k2.0[p - 1] -= 1;
                        out.add_term(k2, j, c * Q::from_integer(e.into()));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Derivation::Log(i) => write!(f, "log{i}"),
            Derivation::Partial(j) => write!(f, "partial{j}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn x(ring: RingSpec, k: &[u32]) -> Series {
        Series::monomial(ring, MultiIndex(k.to_vec()), q(1)).unwrap()
    }

    #[test]
    fn crossing_relation_kills_mixed_products() {
        let ring = RingSpec::new(2, 2, 5).unwrap();
        assert!(x(ring, &[1, 0]).mul(&x(ring, &[0, 1])).is_zero());
    }

    #[test]
    fn truncation_drops_high_degree() {
        let ring = RingSpec::new(2, 2, 2).unwrap();
        assert!(x(ring, &[1, 0]).mul(&x(ring, &[2, 0])).is_zero());
        let big = RingSpec::new(2, 2, 5).unwrap();
        assert_eq!(x(big, &[1, 0]).mul(&x(big, &[2, 0])), x(big, &[3, 0]));
    }

    #[test]
    fn mismatched_rings_are_a_usage_error() {
        let a = RingSpec::new(2, 2, 5).unwrap();
        let b = RingSpec::new(2, 2, 4).unwrap();
        assert!(series_arith(&Series::one(a), &Series::one(b), SeriesOp::Add).is_err());
    }

    #[test]
    fn derivation_examples() {
        let r22 = RingSpec::new(2, 2, 5).unwrap();
        assert_eq!(Derivation::Log(1).apply(&x(r22, &[2, 0])), x(r22, &[2, 0]).scale(&q(2)));
        let r32 = RingSpec::new(3, 2, 5).unwrap();
        assert_eq!(
            Derivation::Partial(3).apply(&x(r32, &[1, 0, 2])),
            x(r32, &[1, 0, 1]).scale(&q(2))
        );
        let r33 = RingSpec::new(3, 3, 5).unwrap();
        assert!(Derivation::Log(1).apply(&x(r33, &[1, 1, 0])).is_zero());
    }

    #[test]
    fn log_r_differentiates_u() {
        let ring = RingSpec::new(2, 2, 3).unwrap();
        let u = Series::monomial_u(ring, 2, MultiIndex::zero(2), 1, q(1)).unwrap();
        assert_eq!(Derivation::Log(2).apply(&u), Series::constant_u(ring, 2, q(1)));
        assert!(Derivation::Log(1).apply(&u).is_zero());
    }

    #[test]
    fn valuation_and_delta() {
        let ring = RingSpec::new(2, 2, 5).unwrap();
        assert_eq!(Series::zero(ring).valuation(), None);
        assert_eq!(Series::constant(ring, q(3)).add(&x(ring, &[1, 0])).valuation(), Some(0));
        assert_eq!(x(ring, &[2, 0]).sub(&x(ring, &[0, 3])).valuation(), Some(2));
        let r3 = RingSpec::new(3, 3, 5).unwrap();
        assert_eq!(x(r3, &[1, 1, 0]).delta(1, 2), None);
        assert_eq!(x(r3, &[1, 0, 0]).delta(1, 2), Some(1));
    }

    #[test]
    fn monomial_enumeration_respects_admissibility() {
        let ring = RingSpec::new(3, 3, 6).unwrap();
        let ms = ring.monomials();
        assert_eq!(ms.len(), 64);
        assert!(ms.windows(2).all(|w| w[0] < w[1]));
        let weighted = RingSpec::new(2, 2, 4).unwrap().with_tail_weight(2);
        assert!(weighted.is_admissible(&MultiIndex(vec![0, 2])));
        assert!(!weighted.is_admissible(&MultiIndex(vec![0, 3])));
    }
}
