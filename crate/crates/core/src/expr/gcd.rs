//! Best-effort polynomial gcd and exact polynomial roots.
//!
//! Polynomials are frozen into a free ring: every atom becomes a variable
//! with integer exponents (fractional exponents are scaled by a per-atom
//! lattice constant, exp-atoms with commensurable arguments share one
//! variable). Divisibility proved in the free ring maps to the real ring
//! under the evaluation homomorphism, so results are verified there before
//! use; any failure degrades to "gcd = 1", which is always sound.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Rat;
use super::atom::{Atom, Monomial};
use super::poly::Poly;
use super::Expr;

const TERM_BUDGET: usize = 20_000;
const DIV_ITER_BUDGET: usize = 50_000;

#[derive(Clone, Debug)]
enum FrozenVar {
    /// Variable stands for `atom^(1/scale)`.
    Plain { atom: Atom, scale: u32 },
    /// Variable stands for `exp(base/scale)`.
    ExpFamily { base: Expr, scale: u32 },
}

#[derive(Clone, Debug)]
struct Frozen {
    vars: Vec<FrozenVar>,
}

type Key = Vec<i64>;

#[derive(Clone, PartialEq, Eq, Debug)]
struct MPoly {
    nvars: usize,
    terms: BTreeMap<Key, Rat>,
}

impl MPoly {
    fn zero(nvars: usize) -> Self {
        MPoly { nvars, terms: BTreeMap::new() }
    }

    fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = MPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(alloc::vec![0; nvars], c);
        }
        p
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn is_constant(&self) -> bool {
        self.terms.keys().all(|k| k.iter().all(|e| *e == 0))
    }

    fn add_term(&mut self, k: Key, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(k.clone()).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&k);
        }
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    fn neg(&self) -> Self {
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c.clone())).collect(),
        }
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    fn mul_term(&self, k: &Key, c: &Rat) -> Self {
        let mut out = MPoly::zero(self.nvars);
        for (kk, cc) in &self.terms {
            let key: Key = kk.iter().zip(k.iter()).map(|(a, b)| a + b).collect();
            out.add_term(key, cc * c);
        }
        out
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = MPoly::zero(self.nvars);
        for (k, c) in &other.terms {
            out = out.add(&self.mul_term(k, c));
        }
        out
    }

    fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return MPoly::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    /// Leading term under lexicographic order on exponent vectors.
    fn lead(&self) -> Option<(&Key, &Rat)> {
        self.terms.iter().next_back()
    }

    fn deg_in(&self, var: usize) -> i64 {
        self.terms.keys().map(|k| k[var]).max().unwrap_or(i64::MIN)
    }

    /// Shifts exponents so every variable has minimum exponent 0; returns the
    /// extracted shift vector.
    fn extract_shift(&self) -> (Key, MPoly) {
        if self.terms.is_empty() {
            return (alloc::vec![0; self.nvars], self.clone());
        }
        let mut mins = alloc::vec![i64::MAX; self.nvars];
        for k in self.terms.keys() {
            for (i, e) in k.iter().enumerate() {
                if *e < mins[i] {
                    mins[i] = *e;
                }
            }
        }
        let shifted = MPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| {
                    (k.iter().zip(mins.iter()).map(|(e, m)| e - m).collect(), c.clone())
                })
                .collect(),
        };
        (mins, shifted)
    }

    /// Makes coefficients coprime integers with a positive leading one.
    fn normalized(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(c.numer());
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut content = Rat::new(num_gcd, den_lcm);
        if self.lead().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            content = -content;
        }
        self.scale(&content.recip())
    }

    /// Exact division; `None` when the quotient does not exist in the ring.
    fn try_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        let mut rem = self.clone();
        let mut quot = MPoly::zero(self.nvars);
        let (dk, dc) = {
            let (k, c) = d.lead()?;
            (k.clone(), c.clone())
        };
        let mut iters = 0usize;
        while !rem.is_zero() {
            iters += 1;
            if iters > DIV_ITER_BUDGET {
                return None;
            }
            let (rk, rc) = {
                let (k, c) = rem.lead().unwrap();
                (k.clone(), c.clone())
            };
            let qk: Key = rk.iter().zip(dk.iter()).map(|(a, b)| a - b).collect();
            if qk.iter().any(|e| *e < 0) {
                return None;
            }
            let qc = rc / &dc;
            quot.add_term(qk.clone(), qc.clone());
            rem = rem.sub(&d.mul_term(&qk, &qc));
        }
        Some(quot)
    }

    /// Coefficients of the univariate view in `var` (keys keep `var` at 0).
    fn univariate(&self, var: usize) -> BTreeMap<i64, MPoly> {
        let mut out: BTreeMap<i64, MPoly> = BTreeMap::new();
        for (k, c) in &self.terms {
            let d = k[var];
            let mut kk = k.clone();
            kk[var] = 0;
            out.entry(d).or_insert_with(|| MPoly::zero(self.nvars)).add_term(kk, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

}

/// Pseudo-remainder of `u` by `v` with respect to `var`.
fn prem(u: &MPoly, v: &MPoly, var: usize) -> MPoly {
    let dv = v.deg_in(var);
    let uni_v = v.univariate(var);
    let lc_v = uni_v.get(&dv).cloned().expect("nonzero divisor");
    let mut r = u.clone();
    let mut guard = 0;
    while !r.is_zero() && r.deg_in(var) >= dv {
        guard += 1;
        if guard > 512 {
            // Budget blown; report a nonzero junk remainder so the caller's
            // gcd attempt degrades to 1.
            return MPoly::constant(u.nvars, Rat::one());
        }
        let dr = r.deg_in(var);
        let uni_r = r.univariate(var);
        let lc_r = uni_r.get(&dr).cloned().expect("lead exists");
        // r := lc_v * r - lc_r * x^(dr-dv) * v
        let mut shift_key = alloc::vec![0i64; u.nvars];
        shift_key[var] = dr - dv;
        r = r.mul(&lc_v).sub(&v.mul(&lc_r).mul_term(&shift_key, &Rat::one()));
    }
    r
}

/// Content of `u` with respect to `var`: gcd of its univariate coefficients.
fn content_wrt(u: &MPoly, var: usize, depth: u32) -> MPoly {
    let uni = u.univariate(var);
    let mut acc: Option<MPoly> = None;
    for p in uni.values() {
        acc = Some(match acc {
            None => p.clone(),
            Some(a) => mp_gcd(&a, p, depth + 1),
        });
    }
    acc.unwrap_or_else(|| MPoly::constant(u.nvars, Rat::one()))
}

/// Primitive PRS gcd; result is normalized. Degrades to the constant 1 on
/// any internal budget overrun (always a sound answer for callers).
fn mp_gcd(a: &MPoly, b: &MPoly, depth: u32) -> MPoly {
    let one = MPoly::constant(a.nvars, Rat::one());
    if depth > 24 || a.terms.len() > TERM_BUDGET || b.terms.len() > TERM_BUDGET {
        return one;
    }
    if a.is_zero() {
        return b.normalized();
    }
    if b.is_zero() {
        return a.normalized();
    }
    if a.is_constant() || b.is_constant() {
        return one;
    }
    let main = (0..a.nvars)
        .rev()
        .find(|v| a.deg_in(*v) > 0 || b.deg_in(*v) > 0);
    let main = match main {
        Some(v) => v,
        None => return one,
    };
    let cont_a = content_wrt(a, main, depth);
    let cont_b = content_wrt(b, main, depth);
    let prim_a = match a.try_div(&cont_a) {
        Some(p) => p,
        None => return one,
    };
    let prim_b = match b.try_div(&cont_b) {
        Some(p) => p,
        None => return one,
    };
    let g_cont = mp_gcd(&cont_a, &cont_b, depth + 1);
    let (mut u, mut v) = if prim_a.deg_in(main) >= prim_b.deg_in(main) {
        (prim_a, prim_b)
    } else {
        (prim_b, prim_a)
    };
    let mut guard = 0;
    while !v.is_zero() {
        guard += 1;
        if guard > 64 || u.terms.len() > TERM_BUDGET || v.terms.len() > TERM_BUDGET {
            return one;
        }
        let r = prem(&u, &v, main);
        u = v;
        v = if r.is_zero() {
            MPoly::zero(r.nvars)
        } else {
            let c = content_wrt(&r, main, depth);
            match r.try_div(&c) {
                Some(p) => p.normalized(),
                None => return one,
            }
        };
    }
    if u.deg_in(main) <= 0 {
        return g_cont.normalized();
    }
    g_cont.mul(&u).normalized()
}

/// Structural test that `cand == r * base` for canonical expressions and a
/// rational `r`; avoids full expression division (no normalization cycles).
fn rational_multiple_of(cand: &Expr, base: &Expr) -> Option<Rat> {
    if cand.den_poly() != base.den_poly() {
        return None;
    }
    let (bn, cn) = (base.num_poly(), cand.num_poly());
    let (bm, bc) = bn.terms.iter().next()?;
    let cc = cn.terms.get(bm)?;
    let r = cc / bc;
    if bn.scale(&r) == *cn {
        Some(r)
    } else {
        None
    }
}

fn lcm_u32(a: u32, b: u32) -> u32 {
    (a / a.gcd(&b)).saturating_mul(b)
}

/// Freezes polynomials into the shared free ring.
fn freeze(polys: &[&Poly]) -> Option<(Frozen, Vec<MPoly>)> {
    let mut atoms: Vec<Atom> = Vec::new();
    for p in polys {
        for a in p.atoms() {
            if !atoms.contains(&a) {
                atoms.push(a);
            }
        }
    }
    atoms.sort();
    // Try to put all exp atoms on a single commensurable basis.
    let exp_args: Vec<Expr> = atoms
        .iter()
        .filter_map(|a| match a {
            Atom::Exp(arg) => Some(arg.clone()),
            _ => None,
        })
        .collect();
    let mut exp_ratios: Option<Vec<Rat>> = None;
    if exp_args.len() > 1 {
        let base = &exp_args[0];
        let mut ratios = Vec::new();
        let mut ok = true;
        for arg in &exp_args {
            match rational_multiple_of(arg, base) {
                Some(r) => ratios.push(r),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            exp_ratios = Some(ratios);
        }
    }
    let mut vars: Vec<FrozenVar> = Vec::new();
    // atom -> (var index, exponent multiplier numerator per unit exponent)
    let mut assignment: BTreeMap<Atom, (usize, Rat)> = BTreeMap::new();
    if let Some(ratios) = &exp_ratios {
        let mut scale: u32 = 1;
        for r in ratios {
            let d = r.denom().to_u32()?;
            scale = lcm_u32(scale, d);
        }
        let var = vars.len();
        vars.push(FrozenVar::ExpFamily { base: exp_args[0].clone(), scale });
        for (arg, r) in exp_args.iter().zip(ratios.iter()) {
            // exp(arg) = var^(r * scale); stored per unit exponent.
            let mult = r * Rat::from_integer(BigInt::from(scale));
            assignment.insert(Atom::Exp(arg.clone()), (var, mult));
        }
    }
    for atom in &atoms {
        if assignment.contains_key(atom) {
            continue;
        }
        // Lattice: lcm of exponent denominators of this atom anywhere.
        let mut scale: u32 = 1;
        for p in polys {
            for m in p.terms.keys() {
                if let Some(e) = m.powers.get(atom) {
                    scale = lcm_u32(scale, e.denom().to_u32()?);
                }
            }
        }
        let var = vars.len();
        vars.push(FrozenVar::Plain { atom: atom.clone(), scale });
        assignment.insert(
            atom.clone(),
            (var, Rat::from_integer(BigInt::from(scale))),
        );
    }
    let nvars = vars.len();
    let mut out = Vec::new();
    for p in polys {
        let mut mp = MPoly::zero(nvars);
        for (m, c) in &p.terms {
            let mut key = alloc::vec![0i64; nvars];
            for (a, e) in &m.powers {
                let (var, mult) = assignment.get(a).expect("atom assigned");
                let scaled = e * mult;
                if !scaled.is_integer() {
                    return None;
                }
                key[*var] += scaled.to_integer().to_i64()?;
            }
            mp.add_term(key, c.clone());
        }
        out.push(mp);
    }
    Some((Frozen { vars }, out))
}

/// Maps a frozen polynomial back to the atom world.
fn unfreeze(frozen: &Frozen, mp: &MPoly) -> Poly {
    let mut out = Poly::zero();
    for (k, c) in &mp.terms {
        let mut raw: BTreeMap<Atom, Rat> = BTreeMap::new();
        for (i, e) in k.iter().enumerate() {
            if *e == 0 {
                continue;
            }
            match &frozen.vars[i] {
                FrozenVar::Plain { atom, scale } => {
                    let exp = Rat::new(BigInt::from(*e), BigInt::from(*scale));
                    raw.entry(atom.clone()).and_modify(|x| *x += exp.clone()).or_insert(exp);
                }
                FrozenVar::ExpFamily { base, scale } => {
                    let factor = Rat::new(BigInt::from(*e), BigInt::from(*scale));
                    let arg = base.scale_rat(&factor);
                    raw.entry(Atom::Exp(arg)).and_modify(|x| *x += Rat::one()).or_insert_with(Rat::one);
                }
            }
        }
        let (mono, fold) = Monomial::from_powers(raw);
        let mut piece = Poly::single(mono, c.clone());
        for (base, kk) in fold.factors {
            for _ in 0..kk {
                piece = piece.mul(&base);
            }
        }
        out = out.add(&piece);
    }
    out
}

/// Best-effort gcd with verified quotients: returns `(g, a/g, b/g)` with
/// `g` nontrivial, or `None` (callers then keep `a`, `b` untouched).
pub(super) fn poly_gcd_reduce(a: &Poly, b: &Poly) -> Option<(Poly, Poly, Poly)> {
    if a.is_zero() || b.is_zero() || a.is_one() || b.is_one() {
        return None;
    }
    if a.terms.len().saturating_mul(b.terms.len()) > TERM_BUDGET {
        return None;
    }
    let (frozen, mps) = freeze(&[a, b])?;
    let (sa, ma) = mps[0].extract_shift();
    let (sb, mb) = mps[1].extract_shift();
    let g = mp_gcd(&ma, &mb, 0);
    if g.is_constant() {
        return None;
    }
    let qa = ma.try_div(&g)?;
    let qb = mb.try_div(&g)?;
    let restore = |shift: &Key, mp: &MPoly| -> MPoly {
        mp.mul_term(shift, &Rat::one())
    };
    let g_poly = unfreeze(&frozen, &g);
    let qa_poly = unfreeze(&frozen, &restore(&sa, &qa));
    let qb_poly = unfreeze(&frozen, &restore(&sb, &qb));
    // Sound gate: verify the factorization in the real ring.
    if g_poly.mul(&qa_poly) != *a || g_poly.mul(&qb_poly) != *b {
        return None;
    }
    Some((g_poly, qa_poly, qb_poly))
}

/// Exact `q`-th root of a polynomial, when one exists in the expression ring.
pub(super) fn poly_nth_root(p: &Poly, q: u32) -> Option<Poly> {
    if q == 0 {
        return None;
    }
    if q == 1 || p.is_zero() {
        return Some(p.clone());
    }
    if p.terms.len() > TERM_BUDGET / 4 {
        return None;
    }
    let (frozen, mps) = freeze(&[p])?;
    let mp = &mps[0];
    let (shift, body) = mp.extract_shift();
    if shift.iter().any(|e| e % (q as i64) != 0) {
        return None;
    }
    let (lk, lc) = {
        let (k, c) = body.lead()?;
        (k.clone(), c.clone())
    };
    if lk.iter().any(|e| e % (q as i64) != 0) {
        return None;
    }
    if lc.is_negative() {
        return None;
    }
    let root_num = crate::surd::exact_nth_root(lc.numer(), q)?;
    let root_den = crate::surd::exact_nth_root(lc.denom(), q)?;
    let lead_key: Key = lk.iter().map(|e| e / (q as i64)).collect();
    let mut root = MPoly::zero(mp.nvars);
    root.add_term(lead_key.clone(), Rat::new(root_num, root_den));
    let mut guard = 0usize;
    loop {
        guard += 1;
        if guard > 4096 {
            return None;
        }
        let mut power = MPoly::constant(mp.nvars, Rat::one());
        for _ in 0..q {
            power = power.mul(&root);
        }
        let rem = body.sub(&power);
        if rem.is_zero() {
            break;
        }
        // next correction t = lead(rem) / (q * lead(root)^(q-1))
        let (rk, rc) = {
            let (k, c) = rem.lead().unwrap();
            (k.clone(), c.clone())
        };
        let (root_lk, root_lc) = {
            let (k, c) = root.lead().unwrap();
            (k.clone(), c.clone())
        };
        let mut denom_key: Key = alloc::vec![0; mp.nvars];
        let mut denom_coef = Rat::from_integer(BigInt::from(q));
        for _ in 0..(q - 1) {
            denom_key = denom_key.iter().zip(root_lk.iter()).map(|(a, b)| a + b).collect();
            denom_coef *= root_lc.clone();
        }
        let tk: Key = rk.iter().zip(denom_key.iter()).map(|(a, b)| a - b).collect();
        // Corrections must sit strictly below the root's leading term.
        if tk.iter().any(|e| *e < 0) || tk >= root_lk {
            return None;
        }
        let tc = rc / denom_coef;
        root.add_term(tk, tc);
    }
    let restored: Key = shift.iter().map(|e| e / (q as i64)).collect();
    let result = unfreeze(&frozen, &root.mul_term(&restored, &Rat::one()));
    // Sound gate in the real ring.
    if result.pow_u32(q) == *p {
        Some(result)
    } else {
        None
    }
}
