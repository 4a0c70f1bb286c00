//! Contact groupoids as coordinate data: structural axiom checks,
//! multiplicativity of the contact form and its scaling function, base
//! compatibility, kernel characterizations, pointwise isotropy tangents, and
//! the convention/rescaling transformations.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::chart::{Chart, ConstraintKind};
use crate::expr::{admissible_sample, EvalSource, Expr, ExprError};
use crate::jacobi::{
    contact_to_jacobi, form_residuals, hamiltonian_vf, residual_verdict,
    verify_conformal_jacobi_map, verify_jacobi_map, ContactForm, JacobiStructure, LeafType,
};
use crate::linalg;
use crate::map::SmoothMap;
use crate::surd::Surd;
use crate::tensor::DiffForm;
use crate::tensor::MultiVector;
use crate::verdict::{SamplingConfig, Verdict, Witness};
use crate::Rat;

/// A groupoid in chart data. The fiber product is user-supplied as a chart
/// with projections; the unit sections embed `Γ` into it along the unit maps
/// so that the unit laws are expressible as map identities.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GroupoidChart {
    pub gamma: Arc<Chart>,
    pub base: Arc<Chart>,
    /// `s: Γ → Γ₀`.
    pub source: SmoothMap,
    /// `t: Γ → Γ₀`.
    pub target: SmoothMap,
    /// `Γ₀ → Γ`.
    pub unit: SmoothMap,
    /// `Γ → Γ`.
    pub inverse: SmoothMap,
    /// Chart parametrizing `{(g,h): s(g) = t(h)}`.
    pub fp: Arc<Chart>,
    pub pr1: SmoothMap,
    pub pr2: SmoothMap,
    pub mult: SmoothMap,
    /// `g ↦ (unit(t(g)), g)` into the fiber product.
    pub left_unit_section: SmoothMap,
    /// `g ↦ (g, unit(s(g)))` into the fiber product.
    pub right_unit_section: SmoothMap,
    /// Contact form on `Γ`.
    pub theta: DiffForm,
    /// Multiplicative scaling function on `Γ`.
    pub f: Expr,
    /// Optional two-function convention pair `(f_L, f_R)`; the right-handed
    /// normal form is `(1, f)` and is assumed when absent.
    pub f_pair: Option<(Expr, Expr)>,
}

/// Basis of the isotropy tangent space at a unit point, with the leaf type
/// of the base point and the bundled annihilation checks.
#[derive(Clone, Debug)]
pub struct IsotropyTangent {
    pub point: Vec<Rat>,
    /// Coordinates of `unit(x)` on `Γ` (exact constants).
    pub unit_point: Vec<Expr>,
    /// Tangent vectors at `unit(x)` as `Γ`-component lists.
    pub basis: Vec<Vec<Expr>>,
    pub leaf: LeafType,
    /// Exact annihilation checks: `ds`, `dt`, and `θ_Γ` (contact leaf) or
    /// `df` (lcs leaf) on every basis vector.
    pub lemma: Verdict,
}

impl GroupoidChart {
    /// The convention pair, defaulting to the right-handed `(1, f)`.
    pub fn convention_pair(&self) -> (Expr, Expr) {
        self.f_pair
            .clone()
            .unwrap_or_else(|| (Expr::one(), self.f.clone()))
    }

    /// The Jacobi pair of the contact form.
    pub fn jacobi(&self) -> Result<JacobiStructure, ExprError> {
        contact_to_jacobi(&ContactForm { chart: self.gamma.clone(), theta: self.theta.clone() })
    }
}

/// Componentwise residuals of the map identity `a = b`.
pub(crate) fn map_residuals(
    label: &str,
    a: &SmoothMap,
    b: &SmoothMap,
) -> Result<Vec<(Option<String>, Expr)>, ExprError> {
    if a.source != b.source || a.target != b.target {
        return Err(ExprError::Unsupported(format!(
            "map identity {label} compares maps with different charts"
        )));
    }
    Ok(a.components
        .iter()
        .zip(b.components.iter())
        .enumerate()
        .map(|(i, (x, y))| (Some(format!("{label} component {i}")), x.sub(y)))
        .collect())
}

/// Verifies the structural groupoid identities: source/target compatibility
/// of the fiber product and multiplication, unit laws along the supplied
/// sections, and the inversion laws.
pub fn verify_groupoid(g: &GroupoidChart, cfg: &SamplingConfig) -> Result<Verdict, ExprError> {
    let mut on_fp: Vec<(Option<String>, Expr)> = Vec::new();
    on_fp.extend(map_residuals(
        "s∘pr1 = t∘pr2",
        &g.source.compose(&g.pr1)?,
        &g.target.compose(&g.pr2)?,
    )?);
    on_fp.extend(map_residuals(
        "s∘mult = s∘pr2",
        &g.source.compose(&g.mult)?,
        &g.source.compose(&g.pr2)?,
    )?);
    on_fp.extend(map_residuals(
        "t∘mult = t∘pr1",
        &g.target.compose(&g.mult)?,
        &g.target.compose(&g.pr1)?,
    )?);

    let id_base = SmoothMap::identity(g.base.clone());
    let mut on_base: Vec<(Option<String>, Expr)> = Vec::new();
    on_base.extend(map_residuals("s∘unit = id", &g.source.compose(&g.unit)?, &id_base)?);
    on_base.extend(map_residuals("t∘unit = id", &g.target.compose(&g.unit)?, &id_base)?);

    let id_gamma = SmoothMap::identity(g.gamma.clone());
    let mut on_gamma: Vec<(Option<String>, Expr)> = Vec::new();
    on_gamma.extend(map_residuals(
        "pr1∘lsec = unit∘t",
        &g.pr1.compose(&g.left_unit_section)?,
        &g.unit.compose(&g.target)?,
    )?);
    on_gamma.extend(map_residuals(
        "pr2∘lsec = id",
        &g.pr2.compose(&g.left_unit_section)?,
        &id_gamma,
    )?);
    on_gamma.extend(map_residuals(
        "mult∘lsec = id",
        &g.mult.compose(&g.left_unit_section)?,
        &id_gamma,
    )?);
    on_gamma.extend(map_residuals(
        "pr1∘rsec = id",
        &g.pr1.compose(&g.right_unit_section)?,
        &id_gamma,
    )?);
    on_gamma.extend(map_residuals(
        "pr2∘rsec = unit∘s",
        &g.pr2.compose(&g.right_unit_section)?,
        &g.unit.compose(&g.source)?,
    )?);
    on_gamma.extend(map_residuals(
        "mult∘rsec = id",
        &g.mult.compose(&g.right_unit_section)?,
        &id_gamma,
    )?);
    on_gamma.extend(map_residuals("inv∘inv = id", &g.inverse.compose(&g.inverse)?, &id_gamma)?);
    on_gamma.extend(map_residuals("s∘inv = t", &g.source.compose(&g.inverse)?, &g.target)?);

    let v = residual_verdict(on_fp, &g.fp, cfg)
        .and(residual_verdict(on_base, &g.base, &cfg.derive(1)))
        .and(residual_verdict(on_gamma, &g.gamma, &cfg.derive(2)));
    Ok(v)
}

/// The multiplicativity residual of the contact form on the fiber product:
/// `mult*θ - pr2*f · pr1*θ - pr2*θ`.
pub fn contact_multiplicativity_residual(g: &GroupoidChart) -> Result<DiffForm, ExprError> {
    let lhs = g.theta.pullback(&g.mult)?;
    let f2 = g.pr2.pull_scalar(&g.f)?;
    let rhs = g.theta.pullback(&g.pr1)?.scale(&f2).add(&g.theta.pullback(&g.pr2)?)?;
    lhs.sub(&rhs)
}

/// Verifies the contact-groupoid conditions: the form is contact, the form
/// and the scaling function are multiplicative, and `df` annihilates the
/// Reeb field.
pub fn verify_contact_groupoid(
    g: &GroupoidChart,
    cfg: &SamplingConfig,
) -> Result<Verdict, ExprError> {
    // (i) θ is contact: the Jacobi pair must exist (Reeb solve and bivector
    // solve both succeed).
    let jac = g.jacobi()?;

    // (ii) multiplicativity of θ on the fiber product.
    let mut on_fp = form_residuals("mult*θ - pr2*f·pr1*θ - pr2*θ", &contact_multiplicativity_residual(g)?);
    // (iii) multiplicativity of f.
    let f_res = g
        .mult
        .pull_scalar(&g.f)?
        .sub(&g.pr1.pull_scalar(&g.f)?.mul(&g.pr2.pull_scalar(&g.f)?));
    on_fp.push((Some("mult*f - pr1*f·pr2*f".into()), f_res));

    // (iv) df(E) = 0 on Γ.
    let df = DiffForm::scalar(g.gamma.clone(), g.f.clone()).d();
    let dfe = df.pair(&jac.reeb_like)?;
    let on_gamma = alloc::vec![(Some(String::from("df(E)")), dfe)];

    let v = residual_verdict(on_fp, &g.fp, cfg)
        .and(residual_verdict(on_gamma, &g.gamma, &cfg.derive(1)));
    Ok(v)
}

/// Verifies that the source map is a Jacobi map and the target map is a
/// `-f`-conformal Jacobi map onto the given base structure.
pub fn verify_base_compatibility(
    g: &GroupoidChart,
    s0: &JacobiStructure,
    cfg: &SamplingConfig,
) -> Result<Verdict, ExprError> {
    if s0.chart != g.base {
        return Err(ExprError::Unsupported("base structure lives on a different chart".into()));
    }
    let jac = g.jacobi()?;
    let v_s = verify_jacobi_map(&g.source, &jac, s0, cfg)?;
    let v_t = verify_conformal_jacobi_map(&g.target, &jac, s0, &g.f.neg(), &cfg.derive(1))?;
    Ok(v_s.and(v_t))
}

/// An opaque scalar on the chart, represented by a formal jet in all its
/// coordinates.
pub fn opaque_scalar(name: &str, chart: &Chart) -> Expr {
    let args: Vec<Expr> = chart.coords.iter().map(|c| Expr::coord(c)).collect();
    Expr::jet(name, alloc::vec![0; args.len()], args)
}

/// Components of `dφ(v)` for every component `φ_i` of the map.
pub(crate) fn differential_applied(map: &SmoothMap, v: &MultiVector) -> Result<Vec<Expr>, ExprError> {
    let mut out = Vec::new();
    for c in &map.components {
        let dc = DiffForm::scalar(map.source.clone(), c.clone()).d();
        out.push(dc.pair(v)?);
    }
    Ok(out)
}

/// Verifies that Hamiltonian fields of source pullbacks annihilate `dt` and
/// Hamiltonian fields of `f`-scaled target pullbacks annihilate `ds`
/// (canonically, for an opaque scalar), then checks the kernel dimension
/// count at exact sample points.
pub fn verify_kernel_characterization(
    g: &GroupoidChart,
    cfg: &SamplingConfig,
) -> Result<Verdict, ExprError> {
    let jac = g.jacobi()?;
    let mut residuals: Vec<(Option<String>, Expr)> = Vec::new();

    let u = opaque_scalar("u", &g.base);
    let su = g.source.pull_scalar(&u)?;
    let x_su = hamiltonian_vf(&jac, &su)?;
    for (i, r) in differential_applied(&g.target, &x_su)?.into_iter().enumerate() {
        residuals.push((Some(format!("dt(X_s*u) component {i}")), r));
    }

    let v = opaque_scalar("v", &g.base);
    let ftv = g.f.mul(&g.target.pull_scalar(&v)?);
    let x_ftv = hamiltonian_vf(&jac, &ftv)?;
    for (i, r) in differential_applied(&g.source, &x_ftv)?.into_iter().enumerate() {
        residuals.push((Some(format!("ds(X_f·t*v) component {i}")), r));
    }

    let canonical = residual_verdict(residuals, &g.gamma, cfg);
    if !canonical.is_verified() {
        return Ok(canonical);
    }
    dimension_check(g, &jac, cfg).map(|v| canonical.and(v))
}

/// At exact sample points the span of `X_{s*u}` over `u ∈ {1, coords}` must
/// have the fiber dimension `dim Γ - dim Γ₀`, and `t` must be a submersion.
fn dimension_check(
    g: &GroupoidChart,
    jac: &JacobiStructure,
    cfg: &SamplingConfig,
) -> Result<Verdict, ExprError> {
    let n = g.gamma.dim();
    let k = g.base.dim();
    // Candidate spanning fields: X_{s*1} = E and X_{s*y_i}.
    let mut fields: Vec<Vec<Expr>> = alloc::vec![jac.reeb_like.components()];
    for c in &g.base.coords {
        let su = g.source.pull_scalar(&Expr::coord(c))?;
        fields.push(hamiltonian_vf(jac, &su)?.components());
    }
    let jac_t = g.target.jacobian();

    let mut sources: Vec<EvalSource<'_>> = Vec::new();
    for row in fields.iter().chain(jac_t.iter()) {
        sources.extend(row.iter().map(EvalSource::Canonical));
    }

    let mut checked = 0u32;
    for salt in 0..cfg.max_retries.max(1) {
        let sub = cfg.derive(u64::from(salt) ^ 0x6b65726e);
        let Some(mut ctx) = admissible_sample(&sources, &g.gamma, &sub) else {
            continue;
        };
        let eval_matrix = |ctx: &mut crate::expr::SampleCtx,
                           m: &[Vec<Expr>]|
         -> Option<Vec<Vec<Surd>>> {
            let mut out = Vec::new();
            for row in m {
                let mut r = Vec::new();
                for e in row {
                    r.push(ctx.eval_expr(e).ok()?);
                }
                out.push(r);
            }
            Some(out)
        };
        let (Some(fm), Some(tm)) = (eval_matrix(&mut ctx, &fields), eval_matrix(&mut ctx, &jac_t))
        else {
            continue;
        };
        let rank_t = linalg::rank_surd(&tm);
        let rank_span = linalg::rank_surd(&fm);
        if rank_t != k || rank_span != n - k {
            let assignments = ctx
                .assignment
                .iter()
                .map(|(c, v)| (c.clone(), format!("{v}")))
                .collect();
            let witness = Witness {
                assignments,
                jets: Vec::new(),
                residual: format!(
                    "rank dt = {rank_t} (want {k}), span rank = {rank_span} (want {})",
                    n - k
                ),
                component: Some("kernel dimension".into()),
            };
            return Ok(Verdict::falsified(witness)
                .with_detail("kernel dimension mismatch at a sample point".into()));
        }
        checked += 1;
        if checked >= 2 {
            return Ok(Verdict::verified());
        }
    }
    Ok(Verdict::inconclusive(Some("no admissible sample for the dimension check".into())))
}

/// Exact leaf-type classification of a base point: lcs when the vector part
/// lies in the image of the bivector at the point, contact otherwise.
pub fn leaf_type_at(s0: &JacobiStructure, x: &[Rat]) -> Result<LeafType, ExprError> {
    let (m, e0) = pointwise_structure(s0, x)?;
    match linalg::solve(&m, &e0.iter().map(Expr::neg).collect::<Vec<_>>())? {
        Some(_) => Ok(LeafType::Lcs),
        None => Ok(LeafType::Contact),
    }
}

/// Substitution of an exact point into a chart's scalars.
pub(crate) fn point_substitution(
    chart: &Chart,
    x: &[Rat],
) -> Result<alloc::collections::BTreeMap<String, Expr>, ExprError> {
    if x.len() != chart.dim() {
        return Err(ExprError::Unsupported(format!(
            "point has {} coordinates but chart {} has {}",
            x.len(),
            chart.name,
            chart.dim()
        )));
    }
    Ok(chart
        .coords
        .iter()
        .cloned()
        .zip(x.iter().map(|r| Expr::from_rat(r.clone())))
        .collect())
}

/// Checks the chart's domain constraints at an exact point.
pub(crate) fn check_point_domain(chart: &Chart, x: &[Rat]) -> Result<(), ExprError> {
    use num_traits::Zero;
    let sub = point_substitution(chart, x)?;
    for c in &chart.constraints {
        let val = c.expr.substitute(&sub)?;
        let Some(r) = val.as_rat() else {
            return Err(ExprError::Unsupported(
                "cannot decide a chart constraint at the point".into(),
            ));
        };
        let ok = match c.kind {
            ConstraintKind::Positive => r > Rat::zero(),
            ConstraintKind::NonZero => !r.is_zero(),
        };
        if !ok {
            return Err(ExprError::DomainViolation(format!(
                "point violates chart constraint on {}",
                chart.name
            )));
        }
    }
    Ok(())
}

/// The matrix `M[j][i] = Λ^{ij}(x)` (so `M·η = ♯Λ(η)`) and the vector
/// `E(x)`, both as exact constants.
fn pointwise_structure(
    s0: &JacobiStructure,
    x: &[Rat],
) -> Result<(Vec<Vec<Expr>>, Vec<Expr>), ExprError> {
    check_point_domain(&s0.chart, x)?;
    let sub = point_substitution(&s0.chart, x)?;
    let k = s0.chart.dim();
    let mut m = alloc::vec![alloc::vec![Expr::zero(); k]; k];
    for (key, c) in &s0.bivector.terms {
        let (a, b) = (usize::from(key[0]), usize::from(key[1]));
        let v = c.substitute(&sub)?;
        m[b][a] = v.clone();
        m[a][b] = v.neg();
    }
    let mut e0 = Vec::new();
    for c in &s0.reeb_like.components() {
        e0.push(c.substitute(&sub)?);
    }
    Ok((m, e0))
}

/// Affine base functions whose source pullbacks generate the isotropy at
/// `x`: one `u` (vanishing at `x`) per kernel direction of `♯Λ₀(x)`, plus,
/// on lcs leaves, the `u₀` solving `♯Λ₀(du₀) + E₀ = 0` at `x`.
pub fn isotropy_functions(
    s0: &JacobiStructure,
    x: &[Rat],
) -> Result<(Vec<Expr>, Option<Expr>, LeafType), ExprError> {
    let (m, e0) = pointwise_structure(s0, x)?;
    let affine = |eta: &[Expr]| -> Expr {
        let mut u = Expr::zero();
        for (i, c) in s0.chart.coords.iter().enumerate() {
            if eta[i].is_zero_expr() {
                continue;
            }
            let shifted = Expr::coord(c).sub(&Expr::from_rat(x[i].clone()));
            u = u.add(&eta[i].mul(&shifted));
        }
        u
    };
    let mut kernel = Vec::new();
    for eta in linalg::nullspace(&m)? {
        kernel.push(affine(&eta));
    }
    let neg_e0: Vec<Expr> = e0.iter().map(Expr::neg).collect();
    match linalg::solve(&m, &neg_e0)? {
        Some(eta0) => Ok((kernel, Some(affine(&eta0)), LeafType::Lcs)),
        None => Ok((kernel, None, LeafType::Contact)),
    }
}

/// Isotropy tangent basis at `unit(x)`: Hamiltonian fields `X_{s*u}` for
/// affine `u` vanishing at `x` with `du(x) ∈ ker ♯Λ₀(x)`, plus, on lcs
/// leaves, `X_{s*u} + E_Γ` for the affine `u` solving `♯Λ₀(du) + E₀ = 0`.
pub fn isotropy_tangent(
    g: &GroupoidChart,
    x: &[Rat],
    s0: &JacobiStructure,
) -> Result<IsotropyTangent, ExprError> {
    if s0.chart != g.base {
        return Err(ExprError::Unsupported("base structure lives on a different chart".into()));
    }
    let jac = g.jacobi()?;
    let (kernel_us, extra_u, leaf) = isotropy_functions(s0, x)?;
    let base_sub = point_substitution(&g.base, x)?;

    // unit(x) as exact Γ-coordinates.
    let unit_point: Vec<Expr> = g
        .unit
        .components
        .iter()
        .map(|c| c.substitute(&base_sub))
        .collect::<Result<_, _>>()?;
    let gamma_sub: alloc::collections::BTreeMap<String, Expr> = g
        .gamma
        .coords
        .iter()
        .cloned()
        .zip(unit_point.iter().cloned())
        .collect();

    let field_at_unit = |u: &Expr| -> Result<Vec<Expr>, ExprError> {
        let su = g.source.pull_scalar(u)?;
        let xv = hamiltonian_vf(&jac, &su)?;
        xv.components()
            .iter()
            .map(|c| c.substitute(&gamma_sub))
            .collect()
    };

    let mut basis: Vec<Vec<Expr>> = Vec::new();
    for u in &kernel_us {
        basis.push(field_at_unit(u)?);
    }
    if let Some(u0) = &extra_u {
        let su = g.source.pull_scalar(u0)?;
        let xv = hamiltonian_vf(&jac, &su)?.add(&jac.reeb_like)?;
        let v: Vec<Expr> = xv
            .components()
            .iter()
            .map(|c| c.substitute(&gamma_sub))
            .collect::<Result<_, _>>()?;
        basis.push(v);
    }

    // Bundled exact checks: ds, dt annihilate the basis; θ (contact) or df
    // (lcs) annihilates it too.
    let mut residuals: Vec<(Option<String>, Expr)> = Vec::new();
    let pair_at = |row: &[Expr], v: &[Expr]| -> Result<Expr, ExprError> {
        let mut acc = Expr::zero();
        for (a, b) in row.iter().zip(v.iter()) {
            acc = acc.add(&a.substitute(&gamma_sub)?.mul(b));
        }
        Ok(acc)
    };
    let js = g.source.jacobian();
    let jt = g.target.jacobian();
    let theta_row: Vec<Expr> = (0..g.gamma.dim())
        .map(|i| g.theta.coefficient(&[i as u8]))
        .collect();
    let df = DiffForm::scalar(g.gamma.clone(), g.f.clone()).d();
    let df_row: Vec<Expr> = (0..g.gamma.dim()).map(|i| df.coefficient(&[i as u8])).collect();
    for (bi, v) in basis.iter().enumerate() {
        for (ri, row) in js.iter().enumerate() {
            residuals.push((Some(format!("ds row {ri} on basis {bi}")), pair_at(row, v)?));
        }
        for (ri, row) in jt.iter().enumerate() {
            residuals.push((Some(format!("dt row {ri} on basis {bi}")), pair_at(row, v)?));
        }
        match leaf {
            LeafType::Contact => {
                residuals.push((Some(format!("θ on basis {bi}")), pair_at(&theta_row, v)?));
            }
            LeafType::Lcs => {
                residuals.push((Some(format!("df on basis {bi}")), pair_at(&df_row, v)?));
            }
        }
    }
    let lemma = residual_verdict(residuals, &g.gamma, &SamplingConfig::new(0));

    Ok(IsotropyTangent { point: x.to_vec(), unit_point, basis, leaf, lemma })
}

/// Re-expresses right-handed data in the left-handed convention:
/// `θ_l = -(1/f) θ`, `f_l = 1/f`, convention pair `(f_l, 1)`.
pub fn convention_switch(g: &GroupoidChart) -> Result<GroupoidChart, ExprError> {
    let (fl, fr) = g.convention_pair();
    if !fl.is_one_expr() {
        return Err(ExprError::Unsupported(
            "convention switch expects right-handed data (f_L = 1)".into(),
        ));
    }
    let inv_f = fr.recip()?;
    let theta = g.theta.scale(&inv_f.neg());
    let mut out = g.clone();
    out.theta = theta;
    out.f = inv_f.clone();
    out.f_pair = Some((inv_f, Expr::one()));
    Ok(out)
}

/// Verifies the two-function multiplicativity identity
/// `mult*θ = pr2*f_R · pr1*θ + pr1*f_L · pr2*θ`.
pub fn verify_flfr(g: &GroupoidChart, cfg: &SamplingConfig) -> Result<Verdict, ExprError> {
    let (fl, fr) = g.convention_pair();
    let lhs = g.theta.pullback(&g.mult)?;
    let a = g.theta.pullback(&g.pr1)?.scale(&g.pr2.pull_scalar(&fr)?);
    let b = g.theta.pullback(&g.pr2)?.scale(&g.pr1.pull_scalar(&fl)?);
    let res = lhs.sub(&a.add(&b)?)?;
    Ok(residual_verdict(
        form_residuals("mult*θ - pr2*f_R·pr1*θ - pr1*f_L·pr2*θ", &res),
        &g.fp,
        cfg,
    ))
}

/// The left anchor field `s*u · X_{f_L} + f_L · ♯Λ(d(s*u))` of an opaque or
/// concrete scalar `u` on the base.
pub fn anchor_left(
    g: &GroupoidChart,
    jac: &JacobiStructure,
    u: &Expr,
) -> Result<MultiVector, ExprError> {
    let (fl, _) = g.convention_pair();
    let su = g.source.pull_scalar(u)?;
    let dsu = DiffForm::scalar(g.gamma.clone(), su.clone()).d();
    let x_fl = hamiltonian_vf(jac, &fl)?;
    x_fl.scale(&su).add(&jac.bivector.sharp(&dsu)?.scale(&fl))
}

/// The right anchor field `t*u · X_{f_R} + f_R · ♯Λ(d(t*u))`.
pub fn anchor_right(
    g: &GroupoidChart,
    jac: &JacobiStructure,
    u: &Expr,
) -> Result<MultiVector, ExprError> {
    let (_, fr) = g.convention_pair();
    let tu = g.target.pull_scalar(u)?;
    let dtu = DiffForm::scalar(g.gamma.clone(), tu.clone()).d();
    let x_fr = hamiltonian_vf(jac, &fr)?;
    x_fr.scale(&tu).add(&jac.bivector.sharp(&dtu)?.scale(&fr))
}

/// Verifies that left anchor images lie in `ker dt` and right anchor images
/// lie in `ker ds` for an opaque scalar.
pub fn verify_anchor_maps(g: &GroupoidChart, cfg: &SamplingConfig) -> Result<Verdict, ExprError> {
    let jac = g.jacobi()?;
    let mut residuals: Vec<(Option<String>, Expr)> = Vec::new();
    let u = opaque_scalar("u", &g.base);
    let vl = anchor_left(g, &jac, &u)?;
    for (i, r) in differential_applied(&g.target, &vl)?.into_iter().enumerate() {
        residuals.push((Some(format!("dt on left anchor, component {i}")), r));
    }
    let w = opaque_scalar("v", &g.base);
    let vr = anchor_right(g, &jac, &w)?;
    for (i, r) in differential_applied(&g.source, &vr)?.into_iter().enumerate() {
        residuals.push((Some(format!("ds on right anchor, component {i}")), r));
    }
    Ok(residual_verdict(residuals, &g.gamma, cfg))
}

/// Conformal rescaling by a nonvanishing base scalar `u`:
/// `θ ↦ s*u · θ`, `f ↦ f · s*u / t*u`.
pub fn conformal_rescale_groupoid(
    g: &GroupoidChart,
    u: &Expr,
) -> Result<GroupoidChart, ExprError> {
    if u.is_zero_expr() {
        return Err(ExprError::Unsupported("rescaling factor must be nonvanishing".into()));
    }
    let su = g.source.pull_scalar(u)?;
    let tu = g.target.pull_scalar(u)?;
    let mut out = g.clone();
    out.theta = g.theta.scale(&su);
    out.f = g.f.mul(&su).div(&tu)?;
    out.f_pair = None;
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::rat_int;
    use crate::tensor::bivector;
    use crate::verdict::Status;

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn cfg() -> SamplingConfig {
        SamplingConfig::new(23)
    }

    fn mapv(src: &Arc<Chart>, tgt: &Arc<Chart>, comps: &[&str]) -> SmoothMap {
        SmoothMap::new(src.clone(), tgt.clone(), comps.iter().map(|c| e(c)).collect()).unwrap()
    }

    /// The groupoid on (p,q,s) over the line, with multiplication
    /// (p,q,s)·(q,q2,s2) = (p,q2,s+s2).
    pub(crate) fn r3_groupoid() -> GroupoidChart {
        let gamma = Chart::new("r3g", &["p", "q", "s"]);
        let base = Chart::new("r3b", &["t"]);
        let fp = Chart::new("r3fp", &["p", "q", "s", "q2", "s2"]);
        let theta = DiffForm::one_form(
            gamma.clone(),
            alloc::vec![e("-exp(-s)"), e("1"), e("0")],
        )
        .unwrap();
        GroupoidChart {
            source: mapv(&gamma, &base, &["q"]),
            target: mapv(&gamma, &base, &["p"]),
            unit: mapv(&base, &gamma, &["t", "t", "0"]),
            inverse: mapv(&gamma, &gamma, &["q", "p", "-s"]),
            pr1: mapv(&fp, &gamma, &["p", "q", "s"]),
            pr2: mapv(&fp, &gamma, &["q", "q2", "s2"]),
            mult: mapv(&fp, &gamma, &["p", "q2", "s + s2"]),
            left_unit_section: mapv(&gamma, &fp, &["p", "p", "0", "q", "s"]),
            right_unit_section: mapv(&gamma, &fp, &["p", "q", "s", "q", "0"]),
            theta,
            f: e("exp(-s)"),
            f_pair: None,
            gamma,
            base,
            fp,
        }
    }

    /// Abelian cotangent-times-line groupoid on (xi, g, r) over (xi0).
    pub(crate) fn abelian_groupoid() -> GroupoidChart {
        let gamma = Chart::new("abg", &["xi", "g", "r"]);
        let base = Chart::new("abb", &["xi0"]);
        let fp = Chart::new("abfp", &["xi", "g", "r", "g2", "r2"]);
        let theta = DiffForm::one_form(
            gamma.clone(),
            alloc::vec![e("0"), e("xi"), e("1")],
        )
        .unwrap();
        GroupoidChart {
            source: mapv(&gamma, &base, &["xi"]),
            target: mapv(&gamma, &base, &["xi"]),
            unit: mapv(&base, &gamma, &["xi0", "0", "0"]),
            inverse: mapv(&gamma, &gamma, &["xi", "-g", "-r"]),
            pr1: mapv(&fp, &gamma, &["xi", "g", "r"]),
            pr2: mapv(&fp, &gamma, &["xi", "g2", "r2"]),
            mult: mapv(&fp, &gamma, &["xi", "g + g2", "r + r2"]),
            left_unit_section: mapv(&gamma, &fp, &["xi", "0", "0", "g", "r"]),
            right_unit_section: mapv(&gamma, &fp, &["xi", "g", "r", "0", "0"]),
            theta,
            f: e("1"),
            f_pair: None,
            gamma,
            base,
            fp,
        }
    }

    fn base_line_structure(g: &GroupoidChart, e_coeff: &str) -> JacobiStructure {
        let bv = MultiVector::zero(g.base.clone(), 2);
        let ev = MultiVector::vector_field(g.base.clone(), alloc::vec![e(e_coeff)]).unwrap();
        JacobiStructure::new(g.base.clone(), bv, ev).unwrap()
    }

    #[test]
    fn structural_axioms_hold() {
        assert!(verify_groupoid(&r3_groupoid(), &cfg()).unwrap().is_verified());
        assert!(verify_groupoid(&abelian_groupoid(), &cfg()).unwrap().is_verified());
    }

    #[test]
    fn broken_multiplication_fails_the_unit_law() {
        let mut g = r3_groupoid();
        g.mult = mapv(&g.fp, &g.gamma, &["p", "q2", "s*s2"]);
        let v = verify_groupoid(&g, &cfg()).unwrap();
        assert_eq!(v.status, Status::Falsified);
    }

    #[test]
    fn contact_groupoid_conditions() {
        assert!(verify_contact_groupoid(&r3_groupoid(), &cfg()).unwrap().is_verified());
        assert!(verify_contact_groupoid(&abelian_groupoid(), &cfg()).unwrap().is_verified());
    }

    #[test]
    fn wrong_scaling_function_is_falsified_with_witness() {
        let mut g = r3_groupoid();
        g.f = e("1");
        let v = verify_contact_groupoid(&g, &cfg()).unwrap();
        assert_eq!(v.status, Status::Falsified);
        assert!(v.witness.is_some());
    }

    #[test]
    fn base_compatibility_on_the_line() {
        let g = r3_groupoid();
        let s0 = base_line_structure(&g, "1");
        assert!(verify_base_compatibility(&g, &s0, &cfg()).unwrap().is_verified());
        let wrong = base_line_structure(&g, "2");
        let v = verify_base_compatibility(&g, &wrong, &cfg()).unwrap();
        assert_eq!(v.status, Status::Falsified);
    }

    #[test]
    fn abelian_base_is_the_zero_structure() {
        let g = abelian_groupoid();
        let s0 = JacobiStructure::new(
            g.base.clone(),
            MultiVector::zero(g.base.clone(), 2),
            MultiVector::zero(g.base.clone(), 1),
        )
        .unwrap();
        assert!(verify_base_compatibility(&g, &s0, &cfg()).unwrap().is_verified());
    }

    #[test]
    fn hamiltonian_field_of_a_source_pullback() {
        let g = r3_groupoid();
        let jac = g.jacobi().unwrap();
        // X_{s*u} = u(q) ∂q - u'(q) ∂s.
        let u = opaque_scalar("u", &g.base);
        let su = g.source.pull_scalar(&u).unwrap();
        let x = hamiltonian_vf(&jac, &su).unwrap();
        let uq = Expr::jet("u", alloc::vec![0], alloc::vec![e("q")]);
        let upq = Expr::jet("u", alloc::vec![1], alloc::vec![e("q")]);
        let expected = MultiVector::vector_field(
            g.gamma.clone(),
            alloc::vec![Expr::zero(), uq, upq.neg()],
        )
        .unwrap();
        assert!(x.equiv(&expected));
    }

    #[test]
    fn kernel_characterization() {
        assert!(verify_kernel_characterization(&r3_groupoid(), &cfg()).unwrap().is_verified());
        assert!(verify_kernel_characterization(&abelian_groupoid(), &cfg()).unwrap().is_verified());
    }

    #[test]
    fn swapped_kernel_check_fails() {
        let g = r3_groupoid();
        let jac = g.jacobi().unwrap();
        let u = opaque_scalar("u", &g.base);
        let su = g.source.pull_scalar(&u).unwrap();
        let x = hamiltonian_vf(&jac, &su).unwrap();
        // ds(X_{s*u}) = u(q), generically nonzero.
        let res = differential_applied(&g.source, &x).unwrap();
        let v = residual_verdict(
            res.into_iter().map(|r| (None, r)).collect(),
            &g.gamma,
            &cfg(),
        );
        assert_eq!(v.status, Status::Falsified);
    }

    #[test]
    fn isotropy_at_the_origin_of_the_line() {
        let g = r3_groupoid();
        let s0 = base_line_structure(&g, "1");
        let iso = isotropy_tangent(&g, &[rat_int(0)], &s0).unwrap();
        assert_eq!(iso.leaf, LeafType::Contact);
        assert_eq!(iso.basis.len(), 1);
        // Spanned by -∂s at unit(0) = (0,0,0).
        assert!(iso.basis[0][0].is_zero_expr());
        assert!(iso.basis[0][1].is_zero_expr());
        assert!(iso.basis[0][2].add(&Expr::one()).is_zero_expr());
        assert!(iso.lemma.is_verified());
    }

    #[test]
    fn abelian_isotropy_is_the_whole_fiber() {
        let g = abelian_groupoid();
        let s0 = JacobiStructure::new(
            g.base.clone(),
            MultiVector::zero(g.base.clone(), 2),
            MultiVector::zero(g.base.clone(), 1),
        )
        .unwrap();
        let iso = isotropy_tangent(&g, &[rat_int(1)], &s0).unwrap();
        assert_eq!(iso.leaf, LeafType::Lcs);
        assert_eq!(iso.basis.len(), 2);
        // Span must be {∂g, ∂r}: no ξ-component, rank 2.
        assert!(iso.basis.iter().all(|v| v[0].is_zero_expr()));
        assert_eq!(linalg::rank(&iso.basis).unwrap(), 2);
        assert!(iso.lemma.is_verified());
    }

    #[test]
    fn lie_poisson_points_are_lcs_type() {
        // Poisson (vanishing vector part) always has E(x) = 0 in the image.
        let chart = Chart::new("dual", &["m1", "m2", "m3"]);
        let bv = bivector(&chart, &[(0, 1, e("-m3")), (0, 2, e("-m2")), (1, 2, e("m1"))]).unwrap();
        let s0 =
            JacobiStructure::new(chart.clone(), bv, MultiVector::zero(chart, 1)).unwrap();
        let lt = leaf_type_at(&s0, &[rat_int(1), rat_int(0), rat_int(1)]).unwrap();
        assert_eq!(lt, LeafType::Lcs);
    }

    #[test]
    fn point_outside_domain_is_rejected() {
        let gamma = Chart::new("halfg", &["a", "b", "c"]);
        let base = Chart::with_constraints(
            "halfb",
            &["w"],
            alloc::vec![crate::chart::Constraint::positive(e("w"))],
        );
        let fp = Chart::new("halffp", &["a", "b", "c", "b2", "c2"]);
        let mut g = r3_groupoid();
        g.gamma = gamma.clone();
        g.base = base.clone();
        g.fp = fp.clone();
        g.source = mapv(&gamma, &base, &["b"]);
        g.target = mapv(&gamma, &base, &["a"]);
        g.unit = mapv(&base, &gamma, &["w", "w", "0"]);
        g.inverse = mapv(&gamma, &gamma, &["b", "a", "-c"]);
        g.pr1 = mapv(&fp, &gamma, &["a", "b", "c"]);
        g.pr2 = mapv(&fp, &gamma, &["b", "b2", "c2"]);
        g.mult = mapv(&fp, &gamma, &["a", "b2", "c + c2"]);
        g.left_unit_section = mapv(&gamma, &fp, &["a", "a", "0", "b", "c"]);
        g.right_unit_section = mapv(&gamma, &fp, &["a", "b", "c", "b", "0"]);
        g.theta = DiffForm::one_form(
            gamma.clone(),
            alloc::vec![e("-exp(-c)"), e("1"), e("0")],
        )
        .unwrap();
        g.f = e("exp(-c)");
        let s0 = base_line_structure(&g, "1");
        assert!(isotropy_tangent(&g, &[rat_int(-1)], &s0).is_err());
        assert!(isotropy_tangent(&g, &[rat_int(1)], &s0).is_ok());
    }

    #[test]
    fn convention_switch_left_form() {
        let g = r3_groupoid();
        let left = convention_switch(&g).unwrap();
        // θ_l = dp - e^s dq, f_l = e^s.
        assert!(left.theta.coefficient(&[0]).sub(&e("1")).is_zero_expr());
        assert!(left.theta.coefficient(&[1]).add(&e("exp(s)")).is_zero_expr());
        assert!(left.f.sub(&e("exp(s)")).is_zero_expr());
        assert!(verify_flfr(&left, &cfg()).unwrap().is_verified());
        // Right-handed data satisfies the same identity with (1, f).
        assert!(verify_flfr(&g, &cfg()).unwrap().is_verified());
        // Switching the f ≡ 1 groupoid just negates θ.
        let ab = abelian_groupoid();
        let left_ab = convention_switch(&ab).unwrap();
        assert!(left_ab.theta.equiv(&ab.theta.neg()));
        assert!(left_ab.f.is_one_expr());
    }

    #[test]
    fn anchor_images_lie_in_the_kernels() {
        let g = r3_groupoid();
        assert!(verify_anchor_maps(&g, &cfg()).unwrap().is_verified());
        let left = convention_switch(&g).unwrap();
        assert!(verify_anchor_maps(&left, &cfg()).unwrap().is_verified());
    }

    #[test]
    fn conformal_rescaling_stays_a_contact_groupoid() {
        let g = r3_groupoid();
        let scaled = conformal_rescale_groupoid(&g, &e("exp(t)")).unwrap();
        assert!(scaled.f.sub(&e("exp(q - p - s)")).is_zero_expr());
        assert!(verify_contact_groupoid(&scaled, &cfg()).unwrap().is_verified());
        let doubled = conformal_rescale_groupoid(&g, &e("2")).unwrap();
        assert!(doubled.f.equiv(&g.f));
        assert!(doubled.theta.equiv(&g.theta.scale_rat(2, 1)));
        assert!(verify_contact_groupoid(&doubled, &cfg()).unwrap().is_verified());
    }

    #[test]
    fn unit_embedding_is_legendrian_and_f_inverts() {
        for g in [r3_groupoid(), abelian_groupoid()] {
            let pulled = g.theta.pullback(&g.unit).unwrap();
            assert!(pulled.is_zero());
            let finv = g.inverse.pull_scalar(&g.f).unwrap();
            assert!(finv.mul(&g.f).sub(&Expr::one()).is_zero_expr());
        }
    }
}
