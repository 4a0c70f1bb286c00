//! Exact sampling of expressions in the multi-quadratic field.
//!
//! A sample assigns random rationals to coordinates and to jet symbols, and
//! interprets every exponential atom as a genuine power of one shared
//! positive rational base (so `exp` is an exact homomorphism on the sampled
//! lattice of arguments). All arithmetic is exact; a nonzero value at a
//! sample is a proof of nonvanishing, while a zero value proves nothing.
//! Sampling therefore never produces a `Verified` verdict.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand_core::{RngCore, SeedableRng};

use crate::chart::{Chart, Constraint, ConstraintKind};
use crate::surd::{Surd, SurdError};
use crate::verdict::{SamplingConfig, Verdict, Witness};
use crate::Rat;

use super::atom::Atom;
use super::poly::Poly;
use super::{Expr, RawExpr};

type Rng = rand_chacha::ChaCha8Rng;

/// Something the sampler can evaluate: a canonical expression or a raw parse
/// tree (the latter gives an arithmetic route independent of normalization).
#[derive(Clone, Copy, Debug)]
pub enum EvalSource<'a> {
    Canonical(&'a Expr),
    Raw(&'a RawExpr),
}

/// Why a sample attempt was abandoned (all cases trigger a redraw).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EvalFailure {
    /// Division by zero at the sample point.
    Pole,
    /// A value left the multi-quadratic field (nested exponential, imperfect
    /// higher root, square root of a negative or irrational value, overflow).
    NotRepresentable,
    /// A chart constraint failed at the sample point.
    ConstraintViolated,
}

impl From<SurdError> for EvalFailure {
    fn from(e: SurdError) -> Self {
        match e {
            SurdError::DivisionByZero => EvalFailure::Pole,
            SurdError::NotRepresentable(_) => EvalFailure::NotRepresentable,
        }
    }
}

/// One admissible sample point with its lazy jet valuation.
pub struct SampleCtx {
    /// Exact values assigned to coordinates (stray scalar symbols are drawn
    /// lazily and recorded here as well).
    pub assignment: BTreeMap<String, Rat>,
    /// Shared exponential basis: `exp(v) := g^(v*l)` for lattice values `v`.
    exp_base: Option<(Rat, BigInt)>,
    jet_memo: BTreeMap<(String, Vec<u32>, Vec<Surd>), Rat>,
    rng: Rng,
}

fn draw_u64(rng: &mut Rng) -> u64 {
    rng.next_u64()
}

/// Nonzero rational with small numerator and denominator.
fn draw_rat(rng: &mut Rng) -> Rat {
    let num = loop {
        let n = (draw_u64(rng) % 19) as i64 - 9;
        if n != 0 {
            break n;
        }
    };
    let den = (draw_u64(rng) % 4) as i64 + 1;
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Positive rational basis for exponentials, never 1.
fn draw_exp_base(rng: &mut Rng) -> Rat {
    const PALETTE: [(i64, i64); 8] =
        [(2, 3), (3, 2), (2, 1), (1, 2), (5, 3), (3, 5), (5, 2), (2, 5)];
    let (n, d) = PALETTE[(draw_u64(rng) % 8) as usize];
    Rat::new(BigInt::from(n), BigInt::from(d))
}

impl SampleCtx {
    pub fn eval(&mut self, src: &EvalSource<'_>) -> Result<Surd, EvalFailure> {
        match src {
            EvalSource::Canonical(e) => self.eval_expr(e),
            EvalSource::Raw(r) => self.eval_raw(r),
        }
    }

    pub fn eval_expr(&mut self, e: &Expr) -> Result<Surd, EvalFailure> {
        let num = self.eval_poly(e.num_poly())?;
        let den = self.eval_poly(e.den_poly())?;
        if den.is_zero() {
            return Err(EvalFailure::Pole);
        }
        Ok(num.div(&den)?)
    }

    fn eval_poly(&mut self, p: &Poly) -> Result<Surd, EvalFailure> {
        let mut acc = Surd::zero();
        for (mono, coef) in &p.terms {
            let mut term = Surd::from_rat(coef.clone());
            for (atom, e) in &mono.powers {
                let v = self.eval_atom(atom)?;
                term = term.mul(&apply_pow(v, e)?);
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    fn eval_atom(&mut self, atom: &Atom) -> Result<Surd, EvalFailure> {
        match atom {
            Atom::Coord(c) => Ok(Surd::from_rat(self.coord_value(c))),
            Atom::Jet { name, orders, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval_expr(a)?);
                }
                Ok(Surd::from_rat(self.jet_value(name, orders, vals)))
            }
            Atom::Exp(arg) => {
                let v = self.eval_expr(arg)?;
                let r = v.as_rat().ok_or(EvalFailure::NotRepresentable)?;
                self.exp_value(&r)
            }
            Atom::Surd(base) => self.eval_poly(base),
        }
    }

    fn eval_raw(&mut self, r: &RawExpr) -> Result<Surd, EvalFailure> {
        match r {
            RawExpr::Num(c) => Ok(Surd::from_rat(c.clone())),
            RawExpr::Coord(c) => Ok(Surd::from_rat(self.coord_value(c))),
            RawExpr::Add(a, b) => Ok(self.eval_raw(a)?.add(&self.eval_raw(b)?)),
            RawExpr::Sub(a, b) => Ok(self.eval_raw(a)?.sub(&self.eval_raw(b)?)),
            RawExpr::Mul(a, b) => Ok(self.eval_raw(a)?.mul(&self.eval_raw(b)?)),
            RawExpr::Div(a, b) => {
                let d = self.eval_raw(b)?;
                if d.is_zero() {
                    return Err(EvalFailure::Pole);
                }
                Ok(self.eval_raw(a)?.div(&d)?)
            }
            RawExpr::Neg(a) => Ok(self.eval_raw(a)?.neg()),
            RawExpr::Pow(a, e) => {
                let v = self.eval_raw(a)?;
                apply_pow(v, e)
            }
            RawExpr::Jet { name, orders, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval_raw(a)?);
                }
                Ok(Surd::from_rat(self.jet_value(name, orders, vals)))
            }
            RawExpr::Exp(a) => {
                let v = self.eval_raw(a)?;
                let r = v.as_rat().ok_or(EvalFailure::NotRepresentable)?;
                self.exp_value(&r)
            }
            RawExpr::Sqrt(a) => {
                let v = self.eval_raw(a)?;
                Ok(v.sqrt()?)
            }
        }
    }

    fn coord_value(&mut self, name: &str) -> Rat {
        if let Some(v) = self.assignment.get(name) {
            return v.clone();
        }
        let v = draw_rat(&mut self.rng);
        self.assignment.insert(name.to_string(), v.clone());
        v
    }

    fn jet_value(&mut self, name: &str, orders: &[u32], args: Vec<Surd>) -> Rat {
        let key = (name.to_string(), orders.to_vec(), args);
        if let Some(v) = self.jet_memo.get(&key) {
            return v.clone();
        }
        let v = draw_rat(&mut self.rng);
        self.jet_memo.insert(key, v.clone());
        v
    }

    fn exp_value(&self, arg: &Rat) -> Result<Surd, EvalFailure> {
        let (g, l) = self.exp_base.as_ref().ok_or(EvalFailure::NotRepresentable)?;
        let scaled = arg * Rat::from_integer(l.clone());
        if !scaled.is_integer() {
            return Err(EvalFailure::NotRepresentable);
        }
        let k = scaled.to_integer().to_i64().ok_or(EvalFailure::NotRepresentable)?;
        if k.unsigned_abs() > 512 {
            return Err(EvalFailure::NotRepresentable);
        }
        Ok(Surd::from_rat(g.clone()).pow_i(k)?)
    }

    /// Witness assembly: exact printed assignments, jet values and residual.
    fn witness(&self, component: Option<String>, residual: &Surd) -> Witness {
        let assignments = self
            .assignment
            .iter()
            .map(|(k, v)| (k.clone(), fmt_rat(v)))
            .collect();
        let jets = self
            .jet_memo
            .iter()
            .map(|((name, orders, args), v)| {
                let args_s: Vec<String> =
                    args.iter().map(|a| a.to_string()).collect();
                let key = if orders.iter().all(|o| *o == 0) {
                    format!("{name}({})", args_s.join(", "))
                } else {
                    let os: Vec<String> = orders.iter().map(|o| o.to_string()).collect();
                    format!("{name}[{}]({})", os.join(","), args_s.join(", "))
                };
                (key, fmt_rat(v))
            })
            .collect();
        Witness { assignments, jets, residual: residual.to_string(), component }
    }
}

fn fmt_rat(v: &Rat) -> String {
    if v.is_integer() {
        format!("{}", v.numer())
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

fn apply_pow(v: Surd, e: &Rat) -> Result<Surd, EvalFailure> {
    if e.is_zero() {
        return Ok(Surd::one());
    }
    if e.is_integer() {
        let k = e.to_integer().to_i64().ok_or(EvalFailure::NotRepresentable)?;
        return Ok(v.pow_i(k)?);
    }
    let p = e.numer().to_i64().ok_or(EvalFailure::NotRepresentable)?;
    let q = e.denom().to_u32().ok_or(EvalFailure::NotRepresentable)?;
    let powed = v.pow_i(p)?;
    if q == 2 {
        Ok(powed.sqrt()?)
    } else {
        Ok(powed.nth_root_exact(q)?)
    }
}

fn collect_exp_args_expr(e: &Expr, out: &mut Vec<Expr>) {
    e.for_each_atom(&mut |a| {
        if let Atom::Exp(arg) = a {
            out.push(arg.clone());
        }
    });
}

fn collect_exp_args_raw(r: &RawExpr, out: &mut Vec<RawExpr>) {
    match r {
        RawExpr::Num(_) | RawExpr::Coord(_) => {}
        RawExpr::Add(a, b) | RawExpr::Sub(a, b) | RawExpr::Mul(a, b) | RawExpr::Div(a, b) => {
            collect_exp_args_raw(a, out);
            collect_exp_args_raw(b, out);
        }
        RawExpr::Neg(a) | RawExpr::Sqrt(a) => collect_exp_args_raw(a, out),
        RawExpr::Pow(a, _) => collect_exp_args_raw(a, out),
        RawExpr::Jet { args, .. } => {
            for a in args {
                collect_exp_args_raw(a, out);
            }
        }
        RawExpr::Exp(a) => {
            out.push((**a).clone());
            collect_exp_args_raw(a, out);
        }
    }
}

/// One sample attempt: draws coordinates, fixes a shared exponential basis
/// covering every `exp` argument in `sources` and `constraints`, and checks
/// the constraints. Any failure means the caller should redraw.
pub fn draw_sample(
    sources: &[EvalSource<'_>],
    coords: &[String],
    constraints: &[Constraint],
    master: &mut Rng,
) -> Result<SampleCtx, EvalFailure> {
    let mut assignment = BTreeMap::new();
    for c in coords {
        assignment.insert(c.clone(), draw_rat(master));
    }
    let child = Rng::seed_from_u64(master.next_u64());
    let mut ctx = SampleCtx { assignment, exp_base: None, jet_memo: BTreeMap::new(), rng: child };

    // Exponentials: gather every argument (including those inside the
    // constraints), require each to evaluate to a rational, and put them on
    // one lattice so exp becomes an exact homomorphism on the sample.
    let mut exp_exprs: Vec<Expr> = Vec::new();
    let mut exp_raws: Vec<RawExpr> = Vec::new();
    for s in sources {
        match s {
            EvalSource::Canonical(e) => collect_exp_args_expr(e, &mut exp_exprs),
            EvalSource::Raw(r) => collect_exp_args_raw(r, &mut exp_raws),
        }
    }
    for c in constraints {
        collect_exp_args_expr(&c.expr, &mut exp_exprs);
    }
    let mut alphas: Vec<Rat> = Vec::new();
    for arg in &exp_exprs {
        let v = ctx.eval_expr(arg)?;
        alphas.push(v.as_rat().ok_or(EvalFailure::NotRepresentable)?);
    }
    for arg in &exp_raws {
        let v = ctx.eval_raw(arg)?;
        alphas.push(v.as_rat().ok_or(EvalFailure::NotRepresentable)?);
    }
    if !alphas.is_empty() {
        let mut l = BigInt::one();
        for a in &alphas {
            l = l.lcm(a.denom());
        }
        for a in &alphas {
            let k = a * Rat::from_integer(l.clone());
            let k = k.to_integer();
            if k.magnitude().to_u64().map(|m| m > 512).unwrap_or(true) {
                return Err(EvalFailure::NotRepresentable);
            }
        }
        ctx.exp_base = Some((draw_exp_base(master), l));
    }

    for c in constraints {
        let v = ctx.eval_expr(&c.expr)?;
        let ok = match c.kind {
            ConstraintKind::Positive => v.sign() > 0,
            ConstraintKind::NonZero => !v.is_zero(),
        };
        if !ok {
            return Err(EvalFailure::ConstraintViolated);
        }
    }
    Ok(ctx)
}

/// Tries to falsify `component == 0` for each labelled residual by exact
/// sampling on the chart. Returns `Falsified` with a witness on the first
/// exact nonzero value, otherwise `Inconclusive`; by design this function
/// can never return `Verified`.
pub fn falsify_zero(
    components: &[(Option<String>, Expr)],
    chart: &Chart,
    cfg: &SamplingConfig,
) -> Verdict {
    let mut master = Rng::seed_from_u64(cfg.seed);
    let sources: Vec<EvalSource<'_>> =
        components.iter().map(|(_, e)| EvalSource::Canonical(e)).collect();
    let mut constraints = chart.constraints.clone();
    constraints.extend(cfg.constraints.iter().cloned());
    let mut accepted = 0u32;
    let mut attempts = 0u32;
    let attempt_budget = cfg.max_retries.saturating_add(cfg.samples);
    while accepted < cfg.samples {
        if attempts >= attempt_budget {
            return Verdict::inconclusive(Some(format!(
                "exhausted {attempts} sample attempts ({accepted} admissible, all residuals zero)"
            )));
        }
        attempts += 1;
        let mut ctx = match draw_sample(&sources, &chart.coords, &constraints, &mut master) {
            Ok(ctx) => ctx,
            Err(_) => continue,
        };
        let mut clean = true;
        for (label, e) in components {
            match ctx.eval_expr(e) {
                Err(_) => {
                    clean = false;
                    break;
                }
                Ok(v) => {
                    if !v.is_zero() {
                        return Verdict::falsified(ctx.witness(label.clone(), &v));
                    }
                }
            }
        }
        if clean {
            accepted += 1;
        }
    }
    Verdict::inconclusive(Some(format!(
        "residual is not in canonical zero form, yet vanished at {accepted} exact samples"
    )))
}

/// Draws one admissible sample (up to `cfg.max_retries` attempts) for the
/// given sources; used by tests to compare evaluation routes pointwise.
pub fn admissible_sample(
    sources: &[EvalSource<'_>],
    chart: &Chart,
    cfg: &SamplingConfig,
) -> Option<SampleCtx> {
    let mut master = Rng::seed_from_u64(cfg.seed);
    let mut constraints = chart.constraints.clone();
    constraints.extend(cfg.constraints.iter().cloned());
    for _ in 0..cfg.max_retries.max(1) {
        if let Ok(ctx) = draw_sample(sources, &chart.coords, &constraints, &mut master) {
            return Some(ctx);
        }
    }
    None
}
