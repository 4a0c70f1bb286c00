//! Sparse polynomials: rational linear combinations of monomials.
//!
//! Invariant: no zero coefficients are stored; the zero polynomial is the
//! empty map. `Surd` exponent overflow produced by monomial merges is folded
//! back in by polynomial multiplication, so canonical equality is structural
//! equality.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::Rat;
use super::atom::{Atom, Monomial};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn single(m: Monomial, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn var(name: &str) -> Self {
        Poly::single(Monomial::unit_power(Atom::coord(name)), Rat::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    /// Exact rational value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    /// The single `(monomial, coefficient)` pair if the polynomial has
    /// exactly one term.
    pub fn as_single(&self) -> Option<(&Monomial, &Rat)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn add_assign_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            let key = self
                .terms
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_assign_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_depth(other, 0)
    }

    fn mul_depth(&self, other: &Self, depth: u32) -> Self {
        assert!(depth < 64, "runaway surd folding during polynomial multiplication");
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let (m, fold) = ma.mul(mb);
                let mut piece = Poly::single(m, ca * cb);
                for (base, k) in fold.factors {
                    for _ in 0..k {
                        piece = piece.mul_depth(&base, depth + 1);
                    }
                }
                out = out.add(&piece);
            }
        }
        out
    }

    pub fn pow_u32(&self, k: u32) -> Self {
        let mut acc = Poly::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Per-atom minimum exponent across all terms (absent atoms count as 0),
    /// as a monomial; extracting it leaves every exponent nonnegative with at
    /// least one term free of each extracted atom. `Surd` atoms are skipped:
    /// their fractional exponents must stay attached to whole atoms.
    pub fn content_monomial(&self) -> Monomial {
        let mut mins: BTreeMap<Atom, Rat> = BTreeMap::new();
        for atom in self.atoms() {
            if matches!(atom, Atom::Surd(_)) {
                continue;
            }
            let mut min: Option<Rat> = None;
            for m in self.terms.keys() {
                let e = m.powers.get(&atom).cloned().unwrap_or_else(Rat::zero);
                min = Some(match min {
                    None => e,
                    Some(v) if e < v => e,
                    Some(v) => v,
                });
            }
            if let Some(min) = min {
                if !min.is_zero() {
                    mins.insert(atom, min);
                }
            }
        }
        Monomial { powers: mins }
    }

    /// Divides every term by the given monomial (exponent subtraction).
    /// Sound only for monomials obtained from `content_monomial`.
    pub fn divide_by_monomial(&self, m: &Monomial) -> Poly {
        if m.powers.is_empty() {
            return self.clone();
        }
        let mut out = Poly::zero();
        for (mono, c) in &self.terms {
            let mut raw = mono.powers.clone();
            for (a, e) in &m.powers {
                let entry = raw.entry(a.clone()).or_insert_with(Rat::zero);
                *entry -= e.clone();
            }
            raw.retain(|_, e| !e.is_zero());
            let (mm, fold) = Monomial::from_powers(raw);
            debug_assert!(fold.factors.is_empty(), "content division produced folds");
            out.add_assign_term(mm, c.clone());
        }
        out
    }

    /// Rational content: positive rational `c` such that `self / c` has
    /// coprime integer coefficients; sign chosen so the leading (maximal)
    /// monomial's coefficient becomes positive.
    pub fn rational_content(&self) -> Rat {
        if self.is_zero() {
            return Rat::one();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(c.numer());
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut content = Rat::new(num_gcd, den_lcm);
        if let Some((_, lead)) = self.terms.iter().next_back() {
            if lead.is_negative() {
                content = -content;
            }
        }
        content
    }

    /// Collects every distinct atom appearing in any term.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut set: BTreeMap<Atom, ()> = BTreeMap::new();
        for m in self.terms.keys() {
            for a in m.powers.keys() {
                set.insert(a.clone(), ());
            }
        }
        set.into_keys().collect()
    }

    pub fn coords_only(&self) -> bool {
        self.terms.keys().all(|m| m.coords_only())
    }
}
