//! Atoms and monomials: the multiplicative building blocks of polynomials.
//!
//! A monomial is a product of atom powers. Exponent invariants:
//! - `Coord` and `Jet` atoms carry any nonzero rational exponent (Laurent and
//!   fractional powers are legal inside numerators).
//! - `Exp` atoms always carry exponent 1; powers are folded into the argument
//!   (`exp(a)^k = exp(k*a)`) and at most one `Exp` atom survives per monomial.
//! - `Surd` atoms carry an exponent strictly between 0 and 1; integer excess
//!   is returned to the caller as polynomial factors to multiply out.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::Rat;
use super::poly::Poly;
use super::Expr;

/// A single multiplicative atom.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Atom {
    /// A chart coordinate or free scalar symbol.
    Coord(String),
    /// An opaque smooth function applied to argument expressions, carrying a
    /// formal partial-derivative multi-order (one entry per argument).
    Jet {
        name: String,
        orders: Vec<u32>,
        args: Vec<Expr>,
    },
    /// The exponential of an expression; the argument is canonically nonzero.
    Exp(Expr),
    /// A fractional power base: an integer-primitive, content-free polynomial
    /// that is not a single monomial, or a non-perfect integer constant >= 2.
    Surd(Poly),
}

impl Atom {
    pub fn coord(name: &str) -> Self {
        Atom::Coord(String::from(name))
    }

    /// The atom's base as an expression (for `Surd` this is the radicand
    /// polynomial, not the root).
    pub fn base_expr(&self) -> Expr {
        match self {
            Atom::Surd(p) => Expr::from_poly(p.clone()),
            other => Expr::from_poly(Poly::single(
                Monomial::unit_power(other.clone()),
                Rat::one(),
            )),
        }
    }
}

/// Product of atom powers; the map never stores zero exponents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Monomial {
    pub powers: BTreeMap<Atom, Rat>,
}

/// Polynomial factors that fell out of a monomial merge (integer parts of
/// `Surd` exponents); the caller multiplies them back in at the `Poly` level.
#[derive(Clone, Debug, Default)]
pub struct MonoFold {
    pub factors: Vec<(Poly, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn unit_power(atom: Atom) -> Self {
        let mut powers = BTreeMap::new();
        powers.insert(atom, Rat::one());
        Monomial { powers }
    }

    /// Rebuilds a monomial from raw exponents, enforcing the atom invariants.
    /// Integer parts of `Surd` exponents are handed back as fold factors.
    pub fn from_powers(raw: BTreeMap<Atom, Rat>) -> (Self, MonoFold) {
        let mut powers: BTreeMap<Atom, Rat> = BTreeMap::new();
        let mut fold = MonoFold::default();
        let mut exp_arg: Option<Expr> = None;
        for (atom, e) in raw {
            if e.is_zero() {
                continue;
            }
            match atom {
                Atom::Exp(arg) => {
                    let scaled = arg.scale_rat(&e);
                    exp_arg = Some(match exp_arg {
                        None => scaled,
                        Some(acc) => acc.add(&scaled),
                    });
                }
                Atom::Surd(base) => {
                    debug_assert!(e.is_positive(), "negative surd exponent in monomial");
                    let floor = e.floor();
                    let frac = &e - &floor;
                    let n = floor.to_integer();
                    if n > num_bigint::BigInt::zero() {
                        let k = u32::try_from(&n).expect("surd fold exponent fits u32");
                        fold.factors.push((base.clone(), k));
                    }
                    if !frac.is_zero() {
                        powers
                            .entry(Atom::Surd(base))
                            .and_modify(|x| *x += frac.clone())
                            .or_insert(frac);
                    }
                }
                other => {
                    powers
                        .entry(other)
                        .and_modify(|x| *x += e.clone())
                        .or_insert(e);
                }
            }
        }
        powers.retain(|_, e| !e.is_zero());
        if let Some(arg) = exp_arg {
            if !arg.is_zero_expr() {
                powers.insert(Atom::Exp(arg), Rat::one());
            }
        }
        // Re-entrancy guard: merging equal Surd keys above may have pushed an
        // exponent to or past 1; split again until stable.
        let mut needs_resplit = powers.iter().any(|(a, e)| {
            matches!(a, Atom::Surd(_)) && (e.is_integer() || *e > Rat::one())
        });
        while needs_resplit {
            let (m, extra) = Monomial::from_powers(core::mem::take(&mut powers));
            powers = m.powers;
            fold.factors.extend(extra.factors);
            needs_resplit = powers.iter().any(|(a, e)| {
                matches!(a, Atom::Surd(_)) && (e.is_integer() || *e > Rat::one())
            });
        }
        (Monomial { powers }, fold)
    }

    /// Merges two monomials by adding exponents.
    pub fn mul(&self, other: &Self) -> (Self, MonoFold) {
        let mut raw = self.powers.clone();
        for (atom, e) in &other.powers {
            raw.entry(atom.clone())
                .and_modify(|x| *x += e.clone())
                .or_insert_with(|| e.clone());
        }
        Monomial::from_powers(raw)
    }

    /// Raises to a positive integer power.
    pub fn pow_u32(&self, k: u32) -> (Self, MonoFold) {
        let factor = Rat::from_integer(num_bigint::BigInt::from(k));
        let raw: BTreeMap<Atom, Rat> =
            self.powers.iter().map(|(a, e)| (a.clone(), e * &factor)).collect();
        Monomial::from_powers(raw)
    }

    /// Scales every exponent by a rational in (0, 1]; used by fractional
    /// powers of single-monomial polynomials. Exponents of `Exp` atoms move
    /// into the argument; `Surd` exponents shrink and stay in range.
    pub fn pow_frac(&self, f: &Rat) -> (Self, MonoFold) {
        debug_assert!(f.is_positive() && *f <= Rat::one());
        let raw: BTreeMap<Atom, Rat> =
            self.powers.iter().map(|(a, e)| (a.clone(), e * f)).collect();
        Monomial::from_powers(raw)
    }

    /// True when every atom is a `Coord`.
    pub fn coords_only(&self) -> bool {
        self.powers.keys().all(|a| matches!(a, Atom::Coord(_)))
    }
}
