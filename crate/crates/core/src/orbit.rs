//! Exact ray arithmetic on the dual of a torus: integer point detection on
//! a ray, the return time scale t0 with its full value T and intersection
//! count, the covering degree and canonical rescaling value of an integer
//! vector, and the rank two lens parameter. All values live in the
//! multi-quadratic field, so every comparison is exact.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::surd::{Surd, SurdError};
use crate::Rat;

/// A ray representative in the dual of a rank `xi.len()` torus, one exact
/// coordinate per generator; at least one coordinate is nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitSpec {
    pub xi: Vec<Surd>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrbitError {
    ZeroVector,
    NotIntegral,
    NotCoprime,
    EqualParameters,
    Surd(SurdError),
}

impl From<SurdError> for OrbitError {
    fn from(e: SurdError) -> Self {
        OrbitError::Surd(e)
    }
}

impl fmt::Display for OrbitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitError::ZeroVector => write!(f, "the vector must be nonzero"),
            OrbitError::NotIntegral => write!(f, "the ray contains no integer vector"),
            OrbitError::NotCoprime => write!(f, "the parameters must be coprime"),
            OrbitError::EqualParameters => write!(f, "the parameters must differ"),
            OrbitError::Surd(e) => write!(f, "{e}"),
        }
    }
}

impl OrbitSpec {
    pub fn new(xi: Vec<Surd>) -> Result<Self, OrbitError> {
        if xi.iter().all(Surd::is_zero) {
            return Err(OrbitError::ZeroVector);
        }
        Ok(OrbitSpec { xi })
    }

    pub fn from_integers(d: &[i64]) -> Result<Self, OrbitError> {
        OrbitSpec::new(d.iter().map(|v| Surd::from_int(*v)).collect())
    }

    /// Euclidean norm from the standard pairing, `sqrt(sum xi_i^2)`.
    pub fn norm(&self) -> Result<Surd, OrbitError> {
        let mut sum = Surd::zero();
        for x in &self.xi {
            sum = sum.add(&x.mul(x));
        }
        Ok(sum.sqrt()?)
    }
}

/// The primitive integer vector on the ray through `xi`, oriented so the
/// ray scale is positive, or `None` when the ray misses the integer
/// lattice (some coordinate ratio is irrational).
pub fn integrality(spec: &OrbitSpec) -> Option<Vec<BigInt>> {
    let xi = &spec.xi;
    let p = xi.iter().position(|x| !x.is_zero())?;
    let mut ratios: Vec<Rat> = Vec::with_capacity(xi.len());
    for x in xi {
        if x.is_zero() {
            ratios.push(Rat::zero());
        } else {
            ratios.push(x.div(&xi[p]).ok()?.as_rat()?);
        }
    }
    let mut scale = BigInt::one();
    for r in &ratios {
        scale = scale.lcm(r.denom());
    }
    let mut ints: Vec<BigInt> =
        ratios.iter().map(|r| r.numer() * (&scale / r.denom())).collect();
    let mut g = BigInt::zero();
    for v in &ints {
        g = g.gcd(v);
    }
    for v in ints.iter_mut() {
        *v = &*v / &g;
    }
    if xi[p].sign() < 0 {
        for v in ints.iter_mut() {
            *v = -&*v;
        }
    }
    Some(ints)
}

fn sqrt_of_count(count: &BigInt) -> Result<Surd, OrbitError> {
    let c = count.to_u64().ok_or_else(|| {
        OrbitError::Surd(SurdError::NotRepresentable(String::from(
            "intersection count exceeds the radical range",
        )))
    })?;
    Ok(Surd::sqrt_of_int(Rat::one(), c))
}

/// The exact return data of an integral ray: `(t0, T, count)` with
/// `count = sum n_i^2` over the primitive vector, `T = sqrt(count)/|xi|`,
/// and `t0 = T/count = 1/(|xi| sqrt(count))`.
pub fn compute_t0(spec: &OrbitSpec) -> Result<(Surd, Surd, BigInt), OrbitError> {
    let n = integrality(spec).ok_or(OrbitError::NotIntegral)?;
    let count: BigInt = n.iter().map(|v| v * v).sum();
    let root = sqrt_of_count(&count)?;
    let norm = spec.norm()?;
    let big_t = root.div(&norm)?;
    let t0 = big_t.scale(&Rat::new(BigInt::one(), count.clone()));
    Ok((t0, big_t, count))
}

/// Exact prequantization data of an integer vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrequantReport {
    pub integral: bool,
    /// Covering degree, the gcd of the entries.
    pub n: BigInt,
    pub primitive: Vec<BigInt>,
    pub t0: Surd,
    /// Full return value `T = t0 * count`.
    pub big_t: Surd,
    /// Intersection count `sum n_i^2` over the primitive vector.
    pub count: BigInt,
    /// Canonical rescaling value `-1/sqrt(count)`.
    pub f: Surd,
    /// `|m - n|` for a rank two primitive vector with distinct entries.
    pub lens: Option<BigInt>,
}

pub fn prequant_report(d: &[i64]) -> Result<PrequantReport, OrbitError> {
    let spec = OrbitSpec::from_integers(d)?;
    let mut n = BigInt::zero();
    for v in d {
        n = n.gcd(&BigInt::from(*v));
    }
    let primitive: Vec<BigInt> = d.iter().map(|v| BigInt::from(*v) / &n).collect();
    let (t0, big_t, count) = compute_t0(&spec)?;
    let check: BigInt = primitive.iter().map(|v| v * v).sum();
    assert_eq!(check, count, "primitive vector disagrees with the ray reduction");
    let root = sqrt_of_count(&count)?;
    let f = root.inv()?.neg();
    // Covering consistency: n * sqrt(count) must be the norm of d.
    assert_eq!(
        root.scale(&Rat::from_integer(n.clone())),
        spec.norm()?,
        "covering degree disagrees with the norm"
    );
    let lens = if primitive.len() == 2 && primitive[0] != primitive[1] {
        Some((&primitive[0] - &primitive[1]).abs())
    } else {
        None
    };
    Ok(PrequantReport { integral: true, n, primitive, t0, big_t, count, f, lens })
}

/// Lens parameter `|m - n|` of a rank two quotient with coprime distinct
/// weights.
pub fn u2_lens(m: i64, n: i64) -> Result<u64, OrbitError> {
    if m == n {
        return Err(OrbitError::EqualParameters);
    }
    if m.unsigned_abs().gcd(&n.unsigned_abs()) != 1 {
        return Err(OrbitError::NotCoprime);
    }
    Ok(m.abs_diff(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, rat_int};
    use alloc::vec;

    fn s(q: Rat, r: u64) -> Surd {
        Surd::sqrt_of_int(q, r)
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|x| BigInt::from(*x)).collect()
    }

    #[test]
    fn integrality_detects_integer_rays() {
        // (2,1)/sqrt(5) written as (2/5)sqrt(5), (1/5)sqrt(5).
        let spec = OrbitSpec::new(vec![s(rat(2, 5), 5), s(rat(1, 5), 5)]).unwrap();
        assert_eq!(integrality(&spec), Some(ints(&[2, 1])));

        let spec = OrbitSpec::from_integers(&[1, 0]).unwrap();
        assert_eq!(integrality(&spec), Some(ints(&[1, 0])));

        let spec = OrbitSpec::new(vec![Surd::one(), s(Rat::one(), 2)]).unwrap();
        assert_eq!(integrality(&spec), None);

        // Orientation: the scale stays positive, so signs land on the vector.
        let spec = OrbitSpec::new(vec![s(rat(-2, 5), 5), s(rat(-1, 5), 5)]).unwrap();
        assert_eq!(integrality(&spec), Some(ints(&[-2, -1])));

        assert_eq!(OrbitSpec::new(vec![Surd::zero()]), Err(OrbitError::ZeroVector));
    }

    #[test]
    fn integrality_is_stable_under_permutation_and_sign_flips() {
        let base = [s(rat(2, 5), 5), s(rat(1, 5), 5), Surd::from_rat(rat(1, 3))];
        let variants: [Vec<Surd>; 4] = [
            vec![base[0].clone(), base[1].clone(), base[2].clone()],
            vec![base[2].clone(), base[0].clone(), base[1].clone()],
            vec![base[0].neg(), base[1].clone(), base[2].neg()],
            vec![base[1].clone(), base[2].neg(), base[0].clone()],
        ];
        // The mixed rational/radical ray misses the lattice in every
        // arrangement; a pure radical ray hits it in every arrangement.
        for v in variants {
            let spec = OrbitSpec::new(v).unwrap();
            assert_eq!(integrality(&spec), None);
        }
        let radical = [s(rat(2, 5), 5), s(rat(-1, 5), 5), s(rat_int(3), 5)];
        let variants: [Vec<Surd>; 3] = [
            vec![radical[0].clone(), radical[1].clone(), radical[2].clone()],
            vec![radical[2].clone(), radical[1].clone(), radical[0].clone()],
            vec![radical[0].neg(), radical[2].clone(), radical[1].neg()],
        ];
        for v in variants {
            let spec = OrbitSpec::new(v).unwrap();
            assert!(integrality(&spec).is_some());
        }
    }

    #[test]
    fn t0_examples_are_exact() {
        let spec = OrbitSpec::new(vec![s(rat(2, 5), 5), s(rat(1, 5), 5)]).unwrap();
        assert_eq!(spec.norm().unwrap(), Surd::one());
        let (t0, big_t, count) = compute_t0(&spec).unwrap();
        assert_eq!(t0, s(rat(1, 5), 5));
        assert_eq!(big_t, s(Rat::one(), 5));
        assert_eq!(count, BigInt::from(5));

        let spec = OrbitSpec::from_integers(&[1, 0]).unwrap();
        let (t0, big_t, count) = compute_t0(&spec).unwrap();
        assert_eq!(t0, Surd::one());
        assert_eq!(big_t, Surd::one());
        assert_eq!(count, BigInt::from(1));

        let spec =
            OrbitSpec::new(vec![Surd::from_rat(rat(3, 5)), Surd::from_rat(rat(4, 5))]).unwrap();
        assert_eq!(spec.norm().unwrap(), Surd::one());
        let (t0, big_t, count) = compute_t0(&spec).unwrap();
        assert_eq!(t0, Surd::from_rat(rat(1, 5)));
        assert_eq!(big_t, Surd::from_int(5));
        assert_eq!(count, BigInt::from(25));

        let spec = OrbitSpec::new(vec![Surd::one(), s(Rat::one(), 2)]).unwrap();
        assert_eq!(compute_t0(&spec), Err(OrbitError::NotIntegral));
    }

    #[test]
    fn t0_times_count_is_the_full_value() {
        let scales: [(Rat, u64); 4] = [
            (rat_int(1), 1),
            (rat(1, 2), 1),
            (rat(2, 3), 2),
            (rat(5, 7), 3),
        ];
        let vectors: [&[i64]; 5] = [&[1], &[2, 1], &[3, -4], &[1, 1, 1], &[6, 0, -10]];
        for (q, r) in &scales {
            for d in &vectors {
                let xi: Vec<Surd> =
                    d.iter().map(|v| s(q * Rat::from_integer(BigInt::from(*v)), *r)).collect();
                let spec = OrbitSpec::new(xi).unwrap();
                let (t0, big_t, count) = compute_t0(&spec).unwrap();
                assert_eq!(t0.scale(&Rat::from_integer(count.clone())), big_t);
                // Reconstruction: t0 * |xi| * sqrt(count) = 1.
                let root = sqrt_of_count(&count).unwrap();
                let product = t0.mul(&spec.norm().unwrap()).mul(&root);
                assert_eq!(product, Surd::one());
            }
        }
    }

    #[test]
    fn prequant_reports_are_exact() {
        let r = prequant_report(&[2, 1]).unwrap();
        assert!(r.integral);
        assert_eq!(r.n, BigInt::from(1));
        assert_eq!(r.primitive, ints(&[2, 1]));
        assert_eq!(r.f, s(rat(-1, 5), 5));
        assert_eq!(r.count, BigInt::from(5));
        assert_eq!(r.t0, Surd::from_rat(rat(1, 5)));
        assert_eq!(r.big_t, Surd::one());
        assert_eq!(r.lens, Some(BigInt::from(1)));

        let r = prequant_report(&[4, 2]).unwrap();
        assert_eq!(r.n, BigInt::from(2));
        assert_eq!(r.primitive, ints(&[2, 1]));
        assert_eq!(r.f, s(rat(-1, 5), 5));
        assert_eq!(r.t0, Surd::from_rat(rat(1, 10)));
        assert_eq!(r.big_t, Surd::from_rat(rat(1, 2)));
        assert_eq!(r.count, BigInt::from(5));

        let r = prequant_report(&[1, 0, 0]).unwrap();
        assert_eq!(r.n, BigInt::from(1));
        assert_eq!(r.f, Surd::from_int(-1));
        assert_eq!(r.lens, None);

        let r = prequant_report(&[3, 3]).unwrap();
        assert_eq!(r.n, BigInt::from(3));
        assert_eq!(r.lens, None);

        assert_eq!(prequant_report(&[0, 0]), Err(OrbitError::ZeroVector));
    }

    #[test]
    fn prequant_scaling_keeps_f() {
        for lambda in [2i64, 3, 7] {
            for d in [[2i64, 1], [3, -4], [5, 5]] {
                let scaled: Vec<i64> = d.iter().map(|v| v * lambda).collect();
                let base = prequant_report(&d).unwrap();
                let big = prequant_report(&scaled).unwrap();
                assert_eq!(big.n, &base.n * BigInt::from(lambda));
                assert_eq!(big.f, base.f);
                assert_eq!(big.primitive, base.primitive);
            }
        }
    }

    #[test]
    fn lens_parameters() {
        assert_eq!(u2_lens(2, 1), Ok(1));
        assert_eq!(u2_lens(3, 1), Ok(2));
        assert_eq!(u2_lens(1, 0), Ok(1));
        assert_eq!(u2_lens(2, 4), Err(OrbitError::NotCoprime));
        assert_eq!(u2_lens(3, 3), Err(OrbitError::EqualParameters));
    }
}
