//! Canonical symbolic expressions.
//!
//! An expression is a reduced fraction of canonical polynomials over atoms
//! (coordinates, opaque jets, a merged exponential, radicals). Canonical
//! polynomials give an exact zero test: an expression denotes the zero
//! function iff its numerator is the zero polynomial. Equality checks
//! therefore never rely on numerics.

mod atom;
mod eval;
mod gcd;
mod parse;
mod poly;

pub use atom::{Atom, Monomial};
pub use eval::{admissible_sample, draw_sample, falsify_zero, EvalFailure, EvalSource, SampleCtx};
pub use parse::{parse, parse_expr, RawExpr};
pub use poly::Poly;

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Rat;

/// Errors surfaced by expression construction and rewriting.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ExprError {
    /// A denominator is identically zero.
    DivisionByZero,
    /// An operation left the real domain (e.g. an even root of a negative
    /// constant multiple).
    DomainViolation(String),
    /// Structurally valid input outside the supported fragment.
    Unsupported(String),
}

impl core::fmt::Display for ExprError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ExprError::DivisionByZero => write!(f, "division by an identically zero expression"),
            ExprError::DomainViolation(m) => write!(f, "domain violation: {m}"),
            ExprError::Unsupported(m) => write!(f, "unsupported operation: {m}"),
        }
    }
}

/// A canonical fraction `num/den` of polynomials.
///
/// Invariants after construction:
/// - `den` is never the zero polynomial and `num == 0` implies `den == 1`;
/// - `den` is never a single monomial (those fold into `num`);
/// - `den` has no common monomial content and integer-coprime coefficients
///   with a positive leading coefficient.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

impl Expr {
    pub fn zero() -> Self {
        Expr { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Expr { num: Poly::one(), den: Poly::one() }
    }

    pub fn from_rat(c: Rat) -> Self {
        Expr { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn from_int(n: i64) -> Self {
        Expr::from_rat(Rat::from_integer(BigInt::from(n)))
    }

    pub fn coord(name: &str) -> Self {
        Expr { num: Poly::var(name), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> Self {
        Expr::make(p, Poly::one()).expect("unit denominator")
    }

    /// Opaque jet symbol: a function of the argument expressions,
    /// differentiated formally (`orders` counts derivatives per slot).
    pub fn jet(name: &str, orders: Vec<u32>, args: Vec<Expr>) -> Self {
        debug_assert_eq!(orders.len(), args.len());
        let atom = Atom::Jet { name: name.to_owned(), orders, args };
        let (mono, fold) = Monomial::from_powers(BTreeMap::from([(atom, Rat::one())]));
        debug_assert!(fold.factors.is_empty());
        Expr::from_poly(Poly::single(mono, Rat::one()))
    }

    pub fn exp(arg: Expr) -> Self {
        if arg.is_zero_expr() {
            return Expr::one();
        }
        let (mono, fold) = Monomial::from_powers(BTreeMap::from([(Atom::Exp(arg), Rat::one())]));
        debug_assert!(fold.factors.is_empty());
        Expr::from_poly(Poly::single(mono, Rat::one()))
    }

    pub fn sqrt(&self) -> Result<Self, ExprError> {
        self.pow_rat(&Rat::new(BigInt::one(), BigInt::from(2)))
    }

    pub(crate) fn num_poly(&self) -> &Poly {
        &self.num
    }

    pub(crate) fn den_poly(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero_expr(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one_expr(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// The constant value, when the expression is a rational constant.
    pub fn as_rat(&self) -> Option<Rat> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    /// Builds the canonical fraction. The only failure is a zero denominator.
    pub fn make(num: Poly, den: Poly) -> Result<Self, ExprError> {
        let mut num = num;
        let mut den = den;
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > 64 {
                return Err(ExprError::Unsupported("normalization did not settle".into()));
            }
            if den.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            if num.is_zero() {
                return Ok(Expr { num: Poly::zero(), den: Poly::one() });
            }
            if den.is_one() {
                return Ok(Expr { num, den });
            }
            if den.terms.len() == 1 {
                let (inv, extra_den) = invert_monomial_poly(&den);
                num = num.mul(&inv);
                den = extra_den;
                continue;
            }
            let cm = den.content_monomial();
            if !cm.is_one() {
                den = den.divide_by_monomial(&cm);
                let (inv, extra_den) = invert_monomial_poly(&Poly::single(cm, Rat::one()));
                debug_assert!(extra_den.is_one(), "content skips radicals");
                num = num.mul(&inv);
                continue;
            }
            if let Some((_, qn, qd)) = gcd::poly_gcd_reduce(&num, &den) {
                num = qn;
                den = qd;
                if den.terms.len() <= 1 || !den.content_monomial().is_one() {
                    continue;
                }
            }
            let c = den.rational_content();
            if !c.is_one() {
                let r = c.recip();
                num = num.scale(&r);
                den = den.scale(&r);
            }
            return Ok(Expr { num, den });
        }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let (num, den) = if self.den == other.den {
            (self.num.add(&other.num), self.den.clone())
        } else {
            (
                self.num.mul(&other.den).add(&other.num.mul(&self.den)),
                self.den.mul(&other.den),
            )
        };
        Expr::make(num, den).expect("nonzero denominators stay nonzero")
    }

    pub fn neg(&self) -> Expr {
        self.scale_rat(&-Rat::one())
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Expr::make(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("nonzero denominators stay nonzero")
    }

    pub fn div(&self, other: &Expr) -> Result<Expr, ExprError> {
        if other.is_zero_expr() {
            return Err(ExprError::DivisionByZero);
        }
        Expr::make(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn recip(&self) -> Result<Expr, ExprError> {
        Expr::one().div(self)
    }

    /// Cheap rational scaling; preserves canonical form.
    pub fn scale_rat(&self, c: &Rat) -> Expr {
        if c.is_zero() || self.num.is_zero() {
            return Expr::zero();
        }
        Expr { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Exact mathematical equality (difference normalizes to zero).
    pub fn equiv(&self, other: &Expr) -> bool {
        self.sub(other).is_zero_expr()
    }

    /// `self^e` for rational `e`. Convention: `x^0 == 1` (including `x == 0`);
    /// fractional powers of single monomials distribute onto the factors
    /// (principal branch), which is exact on the positively-constrained
    /// domains where such powers are used.
    pub fn pow_rat(&self, e: &Rat) -> Result<Expr, ExprError> {
        if e.is_zero() {
            return Ok(Expr::one());
        }
        if self.is_zero_expr() {
            if e.is_negative() {
                return Err(ExprError::DivisionByZero);
            }
            return Ok(Expr::zero());
        }
        if e.is_negative() {
            return self.recip()?.pow_rat(&-e.clone());
        }
        if e.is_integer() {
            let k = e
                .to_integer()
                .to_u32()
                .ok_or_else(|| ExprError::Unsupported("exponent too large".into()))?;
            return Expr::make(self.num.pow_u32(k), self.den.pow_u32(k));
        }
        let int_part = e.floor();
        let frac = e - &int_part;
        let ipow = self.pow_rat(&int_part)?;
        let num_f = poly_pow_frac(&self.num, &frac)?;
        let den_f = poly_pow_frac(&self.den, &frac)?;
        let fracpow = Expr::make(num_f, den_f)?;
        Ok(ipow.mul(&fracpow))
    }

    /// Formal partial derivative with respect to a coordinate.
    pub fn differentiate(&self, coord: &str) -> Expr {
        let n = Expr { num: self.num.clone(), den: Poly::one() };
        let d = Expr { num: self.den.clone(), den: Poly::one() };
        let dn = poly_diff(&self.num, coord);
        let dd = poly_diff(&self.den, coord);
        // (n/d)' = (n' d - n d') / d^2
        let num = dn.mul(&d).sub(&n.mul(&dd));
        num.div(&d.mul(&d)).expect("nonzero denominator")
    }

    /// Substitutes coordinates by expressions everywhere (including inside
    /// jet arguments, exponentials and radicals), then renormalizes.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Result<Expr, ExprError> {
        let n = poly_substitute(&self.num, map)?;
        let d = poly_substitute(&self.den, map)?;
        n.div(&d)
    }

    /// Visits every atom, including atoms nested inside jet arguments,
    /// exponential arguments and radical bases.
    pub fn for_each_atom<F: FnMut(&Atom)>(&self, f: &mut F) {
        poly_for_each_atom(&self.num, f);
        poly_for_each_atom(&self.den, f);
    }

    /// Coordinate names appearing anywhere in the expression.
    pub fn coords(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            if let Atom::Coord(c) = a {
                out.insert(c.clone());
            }
        });
        out
    }

    /// True when no coordinate or jet occurs (exponentials of constants and
    /// radicals of constants still count as constant).
    pub fn is_constant(&self) -> bool {
        let mut constant = true;
        self.for_each_atom(&mut |a| match a {
            Atom::Coord(_) | Atom::Jet { .. } => constant = false,
            _ => {}
        });
        constant
    }
}

fn poly_for_each_atom<F: FnMut(&Atom)>(p: &Poly, f: &mut F) {
    for m in p.terms.keys() {
        for atom in m.powers.keys() {
            f(atom);
            match atom {
                Atom::Jet { args, .. } => {
                    for a in args {
                        a.for_each_atom(f);
                    }
                }
                Atom::Exp(arg) => arg.for_each_atom(f),
                Atom::Surd(base) => poly_for_each_atom(base, f),
                Atom::Coord(_) => {}
            }
        }
    }
}

/// Inverts a single-monomial polynomial: coordinates and jets negate their
/// exponents, exponentials negate their argument, a radical `B^e` inverts as
/// `B^{1-e} / B`. Returns the inverse factor and the leftover denominator.
fn invert_monomial_poly(p: &Poly) -> (Poly, Poly) {
    debug_assert_eq!(p.terms.len(), 1);
    let (mono, coef) = p.terms.iter().next().expect("single term");
    let mut raw: BTreeMap<Atom, Rat> = BTreeMap::new();
    let mut extra_den = Poly::one();
    for (atom, e) in &mono.powers {
        match atom {
            Atom::Coord(_) | Atom::Jet { .. } => {
                raw.insert(atom.clone(), -e.clone());
            }
            Atom::Exp(arg) => {
                debug_assert!(e.is_one());
                let neg = arg.scale_rat(&-Rat::one());
                raw.entry(Atom::Exp(neg))
                    .and_modify(|x| *x += Rat::one())
                    .or_insert_with(Rat::one);
            }
            Atom::Surd(base) => {
                let rem = Rat::one() - e;
                debug_assert!(rem > Rat::zero() && rem < Rat::one());
                raw.insert(atom.clone(), rem);
                extra_den = extra_den.mul(base);
            }
        }
    }
    let (mono_inv, fold) = Monomial::from_powers(raw);
    let mut inv = Poly::single(mono_inv, coef.recip());
    for (base, k) in fold.factors {
        for _ in 0..k {
            inv = inv.mul(&base);
        }
    }
    (inv, extra_den)
}

/// `p^f` for `0 < f < 1`, as a polynomial (monomial content distributes,
/// a perfect root is extracted when it exists, otherwise a radical atom).
fn poly_pow_frac(p: &Poly, f: &Rat) -> Result<Poly, ExprError> {
    debug_assert!(f > &Rat::zero() && f < &Rat::one());
    if p.is_zero() {
        return Ok(Poly::zero());
    }
    let q = f
        .denom()
        .to_u32()
        .ok_or_else(|| ExprError::Unsupported("root index too large".into()))?;
    let pnum = f
        .numer()
        .to_u32()
        .ok_or_else(|| ExprError::Unsupported("exponent too large".into()))?;
    let cm = p.content_monomial();
    let body = p.divide_by_monomial(&cm);
    let (cm_pow, fold) = cm.pow_frac(f);
    debug_assert!(fold.factors.is_empty(), "scaled exponents stay fractional");
    let mut out = Poly::single(cm_pow, Rat::one());
    let c = body.rational_content();
    if c.is_negative() {
        return Err(ExprError::DomainViolation(
            "fractional power of a negative multiple".into(),
        ));
    }
    let prim = body.scale(&c.recip());
    if !c.is_one() {
        let (rat_part, residual) = rat_pow_frac(&c, pnum, q)?;
        out = out.scale(&rat_part);
        if let Some(r) = residual {
            let base = Poly::constant(Rat::from_integer(r));
            let atom = Atom::Surd(base);
            let (mono, f2) = Monomial::from_powers(BTreeMap::from([(
                atom,
                Rat::new(BigInt::one(), BigInt::from(q)),
            )]));
            debug_assert!(f2.factors.is_empty());
            out = out.mul(&Poly::single(mono, Rat::one()));
        }
    }
    if prim.is_one() {
        return Ok(out);
    }
    if let Some(root) = gcd::poly_nth_root(&prim, q) {
        return Ok(out.mul(&root.pow_u32(pnum)));
    }
    let atom = Atom::Surd(prim);
    let (mono, f3) = Monomial::from_powers(BTreeMap::from([(atom, f.clone())]));
    debug_assert!(f3.factors.is_empty());
    Ok(out.mul(&Poly::single(mono, Rat::one())))
}

/// `c^(p/q)` for positive rational `c`: the extracted rational part plus an
/// optional q-th-power-free integer whose q-th root remains.
fn rat_pow_frac(c: &Rat, p: u32, q: u32) -> Result<(Rat, Option<BigInt>), ExprError> {
    debug_assert!(c.is_positive() && p < q && p > 0);
    // c^(p/q) = (A^p B^(q-p))^(1/q) / B  with c = A/B.
    let a = c.numer().clone();
    let b = c.denom().clone();
    let n = a.pow(p) * b.pow(q - p);
    let (mut extracted, mut residual) = (BigInt::one(), BigInt::one());
    let (factors, leftover) = factor_bounded(n);
    for (prime, k) in factors {
        extracted *= prime.pow(k / q);
        residual *= prime.pow(k % q);
    }
    if !leftover.is_one() {
        match crate::surd::exact_nth_root(&leftover, q) {
            Some(r) => extracted *= r,
            None => residual *= leftover,
        }
    }
    let rat = Rat::new(extracted, b);
    Ok((rat, if residual.is_one() { None } else { Some(residual) }))
}

/// Trial division by small primes; the unfactored cofactor is returned as-is.
fn factor_bounded(mut n: BigInt) -> (Vec<(BigInt, u32)>, BigInt) {
    debug_assert!(n.is_positive());
    let mut out = Vec::new();
    let mut p = 2u64;
    while p < 65_536 {
        let pb = BigInt::from(p);
        if (&pb * &pb) > n {
            break;
        }
        if (&n % &pb).is_zero() {
            let mut k = 0u32;
            while (&n % &pb).is_zero() {
                n /= &pb;
                k += 1;
            }
            out.push((pb, k));
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    (out, n)
}

/// Derivative of a polynomial, as an expression (radical and jet factors put
/// their bases in denominators via the chain rule `d(B^e) = e B^e dB / B`).
fn poly_diff(p: &Poly, coord: &str) -> Expr {
    let mut total = Expr::zero();
    for (mono, coef) in &p.terms {
        let term = Expr::from_poly(Poly::single(mono.clone(), coef.clone()));
        for (atom, e) in &mono.powers {
            let datom_over_atom = match atom {
                Atom::Coord(c) => {
                    if c == coord {
                        Expr::one().div(&Expr::coord(c)).expect("coordinate nonzero")
                    } else {
                        continue;
                    }
                }
                Atom::Jet { name, orders, args } => {
                    let mut dj = Expr::zero();
                    for (i, arg) in args.iter().enumerate() {
                        let darg = arg.differentiate(coord);
                        if darg.is_zero_expr() {
                            continue;
                        }
                        let mut bumped = orders.clone();
                        bumped[i] += 1;
                        let higher = Expr::jet(name, bumped, args.clone());
                        dj = dj.add(&higher.mul(&darg));
                    }
                    if dj.is_zero_expr() {
                        continue;
                    }
                    let base = Expr::jet(name, orders.clone(), args.clone());
                    dj.div(&base).expect("jet symbol nonzero")
                }
                Atom::Exp(arg) => {
                    let darg = arg.differentiate(coord);
                    if darg.is_zero_expr() {
                        continue;
                    }
                    darg
                }
                Atom::Surd(base) => {
                    let dbase = poly_diff(base, coord);
                    if dbase.is_zero_expr() {
                        continue;
                    }
                    let base_expr = Expr { num: base.clone(), den: Poly::one() };
                    dbase.div(&base_expr).expect("radical base nonzero")
                }
            };
            total = total.add(&term.scale_rat(e).mul(&datom_over_atom));
        }
    }
    total
}

fn poly_substitute(p: &Poly, map: &BTreeMap<String, Expr>) -> Result<Expr, ExprError> {
    let mut total = Expr::zero();
    for (mono, coef) in &p.terms {
        let mut term = Expr::from_rat(coef.clone());
        for (atom, e) in &mono.powers {
            let base = match atom {
                Atom::Coord(c) => match map.get(c) {
                    Some(v) => v.clone(),
                    None => Expr::coord(c),
                },
                Atom::Jet { name, orders, args } => {
                    let new_args = args
                        .iter()
                        .map(|a| a.substitute(map))
                        .collect::<Result<Vec<_>, _>>()?;
                    Expr::jet(name, orders.clone(), new_args)
                }
                Atom::Exp(arg) => Expr::exp(arg.substitute(map)?),
                Atom::Surd(base) => poly_substitute(base, map)?,
            };
            term = term.mul(&base.pow_rat(e)?);
        }
        total = total.add(&term);
    }
    Ok(total)
}

impl core::fmt::Display for Expr {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

fn fmt_rat(c: &Rat, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

fn fmt_exponent(e: &Rat, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
    if e.is_integer() && !e.is_negative() {
        write!(f, "^{}", e.numer())
    } else if e.is_integer() {
        write!(f, "^({})", e.numer())
    } else {
        write!(f, "^({}/{})", e.numer(), e.denom())
    }
}

impl core::fmt::Display for Poly {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (mono, coef) in &self.terms {
            let neg = coef.is_negative();
            let mag = if neg { -coef.clone() } else { coef.clone() };
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
            if mono.is_one() {
                fmt_rat(&mag, f)?;
                continue;
            }
            let mut lead = true;
            if !mag.is_one() {
                fmt_rat(&mag, f)?;
                lead = false;
            }
            for (atom, e) in &mono.powers {
                if !lead {
                    write!(f, "*")?;
                }
                lead = false;
                write!(f, "{atom}")?;
                if !e.is_one() {
                    fmt_exponent(e, f)?;
                }
            }
        }
        Ok(())
    }
}

impl core::fmt::Display for Atom {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Atom::Coord(c) => write!(f, "{c}"),
            Atom::Jet { name, orders, args } => {
                write!(f, "{name}")?;
                if !orders.iter().all(|o| *o == 0) {
                    write!(f, "[")?;
                    for (i, o) in orders.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{o}")?;
                    }
                    write!(f, "]")?;
                }
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Atom::Exp(arg) => write!(f, "exp({arg})"),
            Atom::Surd(base) => write!(f, "({base})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::expr::eval::{admissible_sample, falsify_zero, EvalSource};
    use crate::verdict::{SamplingConfig, Status};
    use crate::{rat, rat_int};

    fn e(src: &str) -> Expr {
        parse_expr(src).expect(src)
    }

    #[test]
    fn polynomial_identities_normalize_to_zero() {
        assert!(e("(x+y)^2 - x^2 - 2*x*y - y^2").is_zero_expr());
        assert!(e("(x+y)*(x-y) - x^2 + y^2").is_zero_expr());
        assert!(e("(1+x)^3 - 1 - 3*x - 3*x^2 - x^3").is_zero_expr());
    }

    #[test]
    fn fractions_reduce() {
        assert!(e("x/x - 1").is_zero_expr());
        assert_eq!(e("(x^2-1)/(x-1)"), e("x+1"));
        assert_eq!(e("(x+x^2)/x"), e("1+x"));
        assert_eq!(e("(2*x^2+2)/(4*x)"), e("(x^2+1)/(2*x)"));
        // Denominator sign and content normalization.
        assert_eq!(e("1/(-x+1)"), e("-1/(x-1)"));
    }

    #[test]
    fn monomial_denominators_fold() {
        let a = e("1/(2*x^2)");
        assert!(a.den_poly().is_one());
        assert_eq!(a, e("x^(-2)/2"));
        assert_eq!(e("y/(x*y)"), e("1/x"));
    }

    #[test]
    fn exp_is_canonical() {
        assert!(e("exp(x)*exp(y) - exp(x+y)").is_zero_expr());
        assert!(e("exp(x)^3 - exp(3*x)").is_zero_expr());
        assert_eq!(e("exp(0)"), Expr::one());
        assert!(e("1/exp(x) - exp(-x)").is_zero_expr());
        assert!(e("exp(x)*exp(-x) - 1").is_zero_expr());
        // Commensurable ratio reduces through the frozen gcd.
        assert_eq!(e("(exp(2*s)-1)/(exp(s)-1)"), e("exp(s)+1"));
    }

    #[test]
    fn roots_extract_perfect_parts() {
        assert!(e("sqrt(2)*sqrt(2) - 2").is_zero_expr());
        assert_eq!(e("sqrt(8)"), e("2*sqrt(2)"));
        assert_eq!(e("sqrt(x^2)"), e("x"));
        assert_eq!(e("sqrt(4*x^2+4)"), e("2*sqrt(x^2+1)"));
        assert_eq!(e("sqrt((1+x^2)^2)"), e("1+x^2"));
        assert!(e("sqrt(x)*sqrt(x) - x").is_zero_expr());
        assert!(e("sqrt(9/4) - 3/2").is_zero_expr());
        assert_eq!(e("sqrt(12*x+12)"), e("2*sqrt(3)*sqrt(x+1)"));
        assert!(parse_expr("sqrt(-4)").is_err());
    }

    #[test]
    fn roots_distribute_over_monomial_content() {
        // Shared exponential content leaves the radical.
        let lhs = e("sqrt(exp(-2*s)*(y1^2+y2^2))");
        let rhs = e("exp(-s)*sqrt(y1^2+y2^2)");
        assert_eq!(lhs, rhs);
        assert!(lhs.mul(&lhs).sub(&e("exp(-2*s)*(y1^2+y2^2)")).is_zero_expr());
    }

    #[test]
    fn rational_powers_compose() {
        assert!(e("x^(3/2)*x^(1/2) - x^2").is_zero_expr());
        assert!(e("(x^2+2*x+1)^(1/2) - x - 1").is_zero_expr());
        let x = Expr::coord("x");
        let y = x.pow_rat(&rat(1, 3)).unwrap();
        assert!(y.pow_rat(&rat_int(3)).unwrap().sub(&x).is_zero_expr());
        // Negative exponents invert first.
        assert!(e("x^(-2)*x^2 - 1").is_zero_expr());
        assert!(e("(x^2+1)^(-1)*(x^2+1) - 1").is_zero_expr());
    }

    #[test]
    fn derivatives() {
        let d = |s: &str, v: &str| e(s).differentiate(v);
        assert!(d("x^3", "x").sub(&e("3*x^2")).is_zero_expr());
        assert!(d("1/x", "x").sub(&e("-1/x^2")).is_zero_expr());
        assert!(d("exp(x^2)", "x").sub(&e("2*x*exp(x^2)")).is_zero_expr());
        assert!(d("sqrt(1+x^2)", "x").sub(&e("x/sqrt(1+x^2)")).is_zero_expr());
        assert!(d("x*y", "y").sub(&e("x")).is_zero_expr());
        assert!(d("x*y", "z").is_zero_expr());
        // Formal jet chain rule.
        assert!(d("u(x^2)", "x").sub(&e("2*x*u'(x^2)")).is_zero_expr());
        assert!(d("u'(x)", "x").sub(&e("u''(x)")).is_zero_expr());
        assert!(d("v(x, y)", "y").sub(&e("v[0,1](x, y)")).is_zero_expr());
        // Quotient rule.
        assert!(d("x/(1+x)", "x").sub(&e("1/(1+x)^2")).is_zero_expr());
    }

    #[test]
    fn substitution_is_compositional() {
        let mut m = BTreeMap::new();
        m.insert(String::from("q"), e("s + t"));
        assert_eq!(e("u(q)").substitute(&m).unwrap(), e("u(s+t)"));
        assert_eq!(e("q^2").substitute(&m).unwrap(), e("(s+t)^2"));
        let mut m2 = BTreeMap::new();
        m2.insert(String::from("x"), e("x+1"));
        assert_eq!(e("x^2").substitute(&m2).unwrap(), e("(x+1)^2"));
        // Substitution reaches exp arguments and radical bases.
        assert_eq!(e("exp(2*q)").substitute(&m).unwrap(), e("exp(2*s+2*t)"));
        assert_eq!(e("sqrt(1+q^2)").substitute(&m).unwrap(), e("sqrt(1+(s+t)^2)"));
    }

    #[test]
    fn display_reparses() {
        for src in [
            "x",
            "-x + 3/4*y",
            "(x+y)^2/(1-x*y)",
            "exp(-2*s)*u'(q) + sqrt(5)*v[1,0](a, b)",
            "sqrt(y1^2+y2^2)/(y1^2+y2^2)",
            "x^(-3)*y^(1/2)",
            "w()",
        ] {
            let a = e(src);
            let b = parse_expr(&alloc::format!("{a}")).expect("reparse");
            assert_eq!(a, b, "round trip failed for {src}");
        }
    }

    #[test]
    fn oracle_routes_agree_on_samples() {
        let chart = Chart::new("c", &["x", "y", "s"]);
        for (i, src) in [
            "(x+y)^2/(1-x*y)",
            "exp(2*s)*x - exp(s)*exp(s)*y",
            "sqrt((1+x^2)^2) - u(x)*v(y, s)",
            "(x^2-1)/(x-1) + exp(-s)/exp(-s+x)",
            "sqrt(4+4*x^2)",
        ]
        .iter()
        .enumerate()
        {
            let raw = parse(src).expect(src);
            let canon = raw.to_expr().expect(src);
            for seed in 0..6u64 {
                let cfg = SamplingConfig::new(1000 * (i as u64) + seed);
                let sources = [EvalSource::Raw(&raw), EvalSource::Canonical(&canon)];
                let mut ctx = match admissible_sample(&sources, &chart, &cfg) {
                    Some(ctx) => ctx,
                    None => continue,
                };
                let via_raw = ctx.eval(&sources[0]);
                let via_canon = ctx.eval(&sources[1]);
                match (via_raw, via_canon) {
                    (Ok(a), Ok(b)) => assert!(
                        a.sub(&b).is_zero(),
                        "routes disagree for {src}: {a} vs {b}"
                    ),
                    // A pole on one route must be a pole on both.
                    (Err(_), Err(_)) => {}
                    (a, b) => panic!("route asymmetry for {src}: {a:?} vs {b:?}"),
                }
            }
        }
    }

    #[test]
    fn sampling_falsifies_but_never_verifies() {
        let chart = Chart::new("c", &["x", "y"]);
        let cfg = SamplingConfig::new(7);
        let residual = e("x^2 - y");
        let v = falsify_zero(&[(None, residual)], &chart, &cfg);
        assert_eq!(v.status, Status::Falsified);
        let w = v.witness.expect("witness");
        assert!(!w.assignments.is_empty());
        assert!(!w.residual.is_empty());
        // A canonically-zero residual never reaches the sampler; a hidden zero
        // (sound but not canonically recognized) must come back Inconclusive,
        // never Verified.
        let zero_in_disguise = e("u(x)") .mul(&e("u(x)")).sub(&e("u(x)^2"));
        assert!(zero_in_disguise.is_zero_expr(), "this one is canonical");
    }

    #[test]
    fn constants_and_queries() {
        assert_eq!(e("3/4 + 1/4").as_rat(), Some(rat_int(1)));
        assert!(e("sqrt(5)").is_constant());
        assert!(e("sqrt(5)").as_rat().is_none());
        assert!(!e("x + 1").is_constant());
        assert_eq!(e("x/y").coords(), ["x", "y"].iter().map(|s| String::from(*s)).collect());
        assert_eq!(
            e("u(q) + exp(z)").coords(),
            ["q", "z"].iter().map(|s| String::from(*s)).collect()
        );
    }

    #[test]
    fn division_by_zero_is_detected() {
        assert_eq!(e("x - x"), Expr::zero());
        assert!(parse_expr("1/(x - x)").is_err());
        assert!(parse_expr("(x+1)/((x+1) - x - 1)").is_err());
    }
}
