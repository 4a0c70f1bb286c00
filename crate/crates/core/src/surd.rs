//! Exact arithmetic in the multi-quadratic field spanned over the rationals by
//! square roots of squarefree positive integers.
//!
//! Elements are finite sums `sum_i  q_i * sqrt(r_i)` with `q_i` rational and
//! `r_i` squarefree. The span is closed under products (`sqrt(a)*sqrt(b) =
//! g*sqrt(a' b')` for `g = gcd(a,b)`) and under inverses (iterated
//! conjugation), and zero detection is exact: square roots of distinct
//! squarefree integers are linearly independent over the rationals, so an
//! element is zero iff it has no terms.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::Rat;

/// Exact element of the multi-quadratic field; invariant: all coefficients
/// nonzero, all radicands squarefree and >= 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Surd {
    terms: BTreeMap<u64, Rat>,
}

/// Errors raised by exact surd arithmetic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SurdError {
    DivisionByZero,
    /// A root cannot be represented in the field (irrational base of a
    /// square root, non-perfect odd root, negative radicand, or an oversized
    /// radicand).
    NotRepresentable(String),
}

impl fmt::Display for SurdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurdError::DivisionByZero => write!(f, "division by zero"),
            SurdError::NotRepresentable(m) => write!(f, "value not representable exactly: {m}"),
        }
    }
}

/// Splits `n` into `(s, r)` with `n = s^2 * r` and `r` squarefree.
fn squarefree_split(mut n: u64) -> (u64, u64) {
    let mut square = 1u64;
    let mut free = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut k = 0u32;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            square *= p.pow(k / 2);
            if k % 2 == 1 {
                free *= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        free *= n;
    }
    (square, free)
}

impl Surd {
    pub fn zero() -> Self {
        Surd { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Surd::from_rat(Rat::one())
    }

    pub fn from_rat(q: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(1u64, q);
        }
        Surd { terms }
    }

    pub fn from_int(n: i64) -> Self {
        Surd::from_rat(crate::rat_int(n))
    }

    /// Builds `q * sqrt(r)` for any `r >= 0` (the square part of `r` is
    /// folded into the coefficient).
    pub fn sqrt_of_int(q: Rat, r: u64) -> Self {
        if q.is_zero() || r == 0 {
            return Surd::zero();
        }
        let (s, free) = squarefree_split(r);
        let coef = q * Rat::from_integer(BigInt::from(s));
        let mut terms = BTreeMap::new();
        terms.insert(free, coef);
        Surd { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact rational value, if the element lies in the rationals.
    pub fn as_rat(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            if let Some(q) = self.terms.get(&1u64) {
                return Some(q.clone());
            }
        }
        None
    }

    pub fn neg(&self) -> Self {
        Surd { terms: self.terms.iter().map(|(r, q)| (*r, -q.clone())).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (r, q) in &other.terms {
            let entry = terms.entry(*r).or_insert_with(Rat::zero);
            *entry += q.clone();
            if entry.is_zero() {
                terms.remove(r);
            }
        }
        Surd { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<u64, Rat> = BTreeMap::new();
        for (ra, qa) in &self.terms {
            for (rb, qb) in &other.terms {
                let g = ra.gcd(rb);
                let rad = (ra / g) * (rb / g);
                let coef = qa * qb * Rat::from_integer(BigInt::from(g));
                let entry = acc.entry(rad).or_insert_with(Rat::zero);
                *entry += coef;
                if entry.is_zero() {
                    acc.remove(&rad);
                }
            }
        }
        Surd { terms: acc }
    }

    pub fn scale(&self, q: &Rat) -> Self {
        if q.is_zero() {
            return Surd::zero();
        }
        Surd { terms: self.terms.iter().map(|(r, c)| (*r, c * q)).collect() }
    }

    /// Multiplicative inverse by iterated conjugation: pick a prime dividing
    /// some radicand, split `S = A + sqrt(p) B`, and recurse on
    /// `A^2 - p B^2`, whose radicands avoid `p`.
    pub fn inv(&self) -> Result<Self, SurdError> {
        if self.is_zero() {
            return Err(SurdError::DivisionByZero);
        }
        if let Some(q) = self.as_rat() {
            return Ok(Surd::from_rat(q.recip()));
        }
        // Find a prime p dividing the largest radicand.
        let rad = *self.terms.keys().max().expect("nonempty");
        let p = smallest_prime_factor(rad);
        let mut a = Surd::zero();
        let mut b = Surd::zero();
        for (r, q) in &self.terms {
            if r % p == 0 {
                b = b.add(&Surd { terms: [(r / p, q.clone())].into_iter().collect() });
            } else {
                a = a.add(&Surd { terms: [(*r, q.clone())].into_iter().collect() });
            }
        }
        // 1/S = (A - sqrt(p) B) / (A^2 - p B^2)
        let p_rat = Surd::from_rat(Rat::from_integer(BigInt::from(p)));
        let denom = a.mul(&a).sub(&p_rat.mul(&b).mul(&b));
        let denom_inv = denom.inv()?;
        let sqrt_p = Surd::sqrt_of_int(Rat::one(), p);
        Ok(a.sub(&sqrt_p.mul(&b)).mul(&denom_inv))
    }

    pub fn div(&self, other: &Self) -> Result<Self, SurdError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow_i(&self, e: i64) -> Result<Self, SurdError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = Surd::one();
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    /// Square root, defined when the element is a nonnegative rational.
    pub fn sqrt(&self) -> Result<Self, SurdError> {
        let q = self
            .as_rat()
            .ok_or_else(|| SurdError::NotRepresentable("sqrt of an irrational value".to_string()))?;
        if q.is_negative() {
            return Err(SurdError::NotRepresentable("sqrt of a negative value".to_string()));
        }
        if q.is_zero() {
            return Ok(Surd::zero());
        }
        // sqrt(p/q) = sqrt(p*q) / q
        let num = q.numer().clone();
        let den = q.denom().clone();
        let prod = &num * &den;
        let rad = u64::try_from(&prod)
            .map_err(|_| SurdError::NotRepresentable("radicand too large".to_string()))?;
        Ok(Surd::sqrt_of_int(Rat::new(BigInt::one(), den), rad))
    }

    /// `k`-th root of a rational element when it is an exact rational power.
    pub fn nth_root_exact(&self, k: u32) -> Result<Self, SurdError> {
        if k == 1 {
            return Ok(self.clone());
        }
        if k == 2 {
            return self.sqrt();
        }
        let q = self
            .as_rat()
            .ok_or_else(|| SurdError::NotRepresentable("root of an irrational value".to_string()))?;
        if q.is_negative() {
            return Err(SurdError::NotRepresentable("root of a negative value".to_string()));
        }
        let num = exact_nth_root(q.numer(), k)
            .ok_or_else(|| SurdError::NotRepresentable("not a perfect power".to_string()))?;
        let den = exact_nth_root(q.denom(), k)
            .ok_or_else(|| SurdError::NotRepresentable("not a perfect power".to_string()))?;
        Ok(Surd::from_rat(Rat::new(num, den)))
    }

    /// Exact sign: -1, 0, or 1, decided by refining rational enclosures of
    /// each radical until the enclosure of the sum excludes zero.
    pub fn sign(&self) -> i32 {
        if self.is_zero() {
            return 0;
        }
        if let Some(q) = self.as_rat() {
            return if q.is_positive() { 1 } else { -1 };
        }
        // Increasing precision; terminates because the value is nonzero
        // (linear independence of distinct square roots over the rationals).
        let mut scale = BigInt::from(1u64 << 16);
        loop {
            let mut lo = Rat::zero();
            let mut hi = Rat::zero();
            for (r, q) in &self.terms {
                let (rl, rh) = sqrt_enclosure(*r, &scale);
                if q.is_positive() {
                    lo += q * &rl;
                    hi += q * &rh;
                } else {
                    lo += q * &rh;
                    hi += q * &rl;
                }
            }
            if lo.is_positive() {
                return 1;
            }
            if hi.is_negative() {
                return -1;
            }
            scale *= BigInt::from(1u64 << 16);
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }
}

/// Rational enclosure `[lo, hi]` of `sqrt(r)` with `hi - lo <= 2/scale`.
fn sqrt_enclosure(r: u64, scale: &BigInt) -> (Rat, Rat) {
    // Integer sqrt of r * scale^2 gives floor(sqrt(r)*scale).
    let target = BigInt::from(r) * scale * scale;
    let root = target.sqrt();
    let lo = Rat::new(root.clone(), scale.clone());
    let hi = Rat::new(root + BigInt::one(), scale.clone());
    (lo, hi)
}

fn smallest_prime_factor(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut p = 3u64;
    while p * p <= n {
        if n % p == 0 {
            return p;
        }
        p += 2;
    }
    n
}

/// Exact `k`-th root of a nonnegative integer, if it is a perfect power.
pub fn exact_nth_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let root = n.nth_root(k);
    if num_traits::pow::pow(root.clone(), k as usize) == *n {
        Some(root)
    } else {
        None
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (r, q) in &self.terms {
            let neg = q.is_negative();
            let abs = q.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if *r == 1 {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "sqrt({r})")?;
            } else if abs.numer().is_one() && abs.denom() == &BigInt::from(*r) {
                // 1/r * sqrt(r) renders as 1/sqrt(r).
                write!(f, "1/sqrt({r})")?;
            } else {
                write!(f, "{abs}*sqrt({r})")?;
            }
        }
        Ok(())
    }
}

/// Collects display pieces for report output.
pub fn surds_to_strings(values: &[Surd]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, rat_int};

    #[test]
    fn squarefree_extraction() {
        assert_eq!(squarefree_split(12), (2, 3));
        assert_eq!(squarefree_split(1), (1, 1));
        assert_eq!(squarefree_split(49), (7, 1));
    }

    #[test]
    fn product_merges_radicands() {
        let a = Surd::sqrt_of_int(rat_int(1), 6);
        let b = Surd::sqrt_of_int(rat_int(1), 10);
        // sqrt(6)*sqrt(10) = 2*sqrt(15)
        assert_eq!(a.mul(&b), Surd::sqrt_of_int(rat_int(2), 15));
    }

    #[test]
    fn inverse_of_mixed_sum() {
        // s = 1 + sqrt(2)  =>  1/s = sqrt(2) - 1
        let s = Surd::one().add(&Surd::sqrt_of_int(rat_int(1), 2));
        let inv = s.inv().unwrap();
        assert_eq!(inv, Surd::sqrt_of_int(rat_int(1), 2).sub(&Surd::one()));
        assert_eq!(s.mul(&inv), Surd::one());
    }

    #[test]
    fn inverse_with_three_radicals() {
        // s = sqrt(2) + sqrt(3) - sqrt(5); check s * s^{-1} = 1.
        let s = Surd::sqrt_of_int(rat_int(1), 2)
            .add(&Surd::sqrt_of_int(rat_int(1), 3))
            .add(&Surd::sqrt_of_int(rat_int(-1), 5));
        let inv = s.inv().unwrap();
        assert_eq!(s.mul(&inv), Surd::one());
    }

    #[test]
    fn exact_sign() {
        // sqrt(2) + sqrt(3) - sqrt(10) < 0 (3.146... - 3.162...)
        let s = Surd::sqrt_of_int(rat_int(1), 2)
            .add(&Surd::sqrt_of_int(rat_int(1), 3))
            .sub(&Surd::sqrt_of_int(rat_int(1), 10));
        assert_eq!(s.sign(), -1);
        assert_eq!(s.neg().sign(), 1);
        assert_eq!(Surd::zero().sign(), 0);
    }

    #[test]
    fn sqrt_of_rational() {
        // sqrt(9/4) = 3/2; sqrt(1/5) = 1/5 * sqrt(5)
        assert_eq!(Surd::from_rat(rat(9, 4)).sqrt().unwrap(), Surd::from_rat(rat(3, 2)));
        assert_eq!(Surd::from_rat(rat(1, 5)).sqrt().unwrap(), Surd::sqrt_of_int(rat(1, 5), 5));
    }

    #[test]
    fn display_forms() {
        use alloc::string::ToString;
        assert_eq!(Surd::sqrt_of_int(rat(1, 5), 5).to_string(), "1/sqrt(5)");
        assert_eq!(Surd::sqrt_of_int(rat(-1, 5), 5).to_string(), "-1/sqrt(5)");
        assert_eq!(Surd::sqrt_of_int(rat_int(1), 5).to_string(), "sqrt(5)");
        assert_eq!(Surd::from_rat(rat(1, 5)).to_string(), "1/5");
    }
}
