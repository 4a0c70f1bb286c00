//! Contact groupoid actions in explicit chart data: action axioms, the
//! multiplicative pullback identity, moment compatibility, transport of
//! base Hamiltonians, pointwise freeness, multiplicative rescaling
//! functions, and point reduction along user supplied slices with a named
//! certificate per descent condition. A final constructor promotes plain
//! Hamiltonian group action data to a groupoid action.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::chart::{Chart, Constraint};
use crate::expr::{admissible_sample, EvalSource, Expr, ExprError};
use crate::groupoid::{
    check_point_domain, differential_applied, isotropy_functions, leaf_type_at, map_residuals,
    opaque_scalar, point_substitution, verify_groupoid, GroupoidChart,
};
use crate::jacobi::{
    contact_to_jacobi, form_residuals, hamiltonian_vf, jacobi_bracket, residual_verdict,
    verify_contact, verify_jacobi_map, ContactForm, JacobiStructure, LcsStructure, LeafType,
};
use crate::linalg;
use crate::map::SmoothMap;
use crate::surd::Surd;
use crate::tensor::{DiffForm, MultiVector};
use crate::verdict::{SamplingConfig, Status, Verdict, Witness};
use crate::Rat;

/// A contact groupoid action in explicit chart data.
///
/// `afp` parametrizes the action fiber product `{(m, γ) : J(m) = t(γ)}`
/// with legs `pr_m`, `pr_gamma` and action map `act` into the acted chart.
/// `moment` is the complete moment map `J` into the groupoid base and
/// `unit_section` embeds the acted chart as `m ↦ (m, unit(J(m)))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionChart {
    pub groupoid: GroupoidChart,
    pub m: Arc<Chart>,
    pub theta_m: DiffForm,
    pub moment: SmoothMap,
    pub afp: Arc<Chart>,
    pub pr_m: SmoothMap,
    pub pr_gamma: SmoothMap,
    pub act: SmoothMap,
    pub unit_section: SmoothMap,
    /// Composable-triple parametrization; associativity is only checked
    /// when one is supplied.
    pub assoc: Option<AssocData>,
}

impl ActionChart {
    /// The Jacobi pair of the acted contact form.
    pub fn jacobi_m(&self) -> Result<JacobiStructure, ExprError> {
        contact_to_jacobi(&ContactForm { chart: self.m.clone(), theta: self.theta_m.clone() })
    }
}

/// A parametrized chart of composable triples `(m, γ₁, γ₂)` together with
/// the four comparison maps associativity needs. The maps must satisfy the
/// leg identities below, which are checked alongside the axiom itself.
#[derive(Clone, Debug, PartialEq)]
pub struct AssocData {
    pub triples: Arc<Chart>,
    /// `triples → afp`, the pair `(m, γ₁)`.
    pub first: SmoothMap,
    /// `triples → fp`, the pair `(γ₁, γ₂)`.
    pub pair: SmoothMap,
    /// `triples → afp`, the pair `(act(m, γ₁), γ₂)`.
    pub after: SmoothMap,
    /// `triples → afp`, the pair `(m, γ₁γ₂)`.
    pub joined: SmoothMap,
}

/// Input selecting a point reduction: a rational base point, a nowhere zero
/// rescaling function on the acted chart, and a slice whose image lies in
/// the moment level over the point.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionInput {
    pub x: Vec<Rat>,
    pub f: Expr,
    pub slice: SmoothMap,
    /// Orbit directions along the level; derived from the isotropy
    /// functions of the induced base structure when absent.
    pub orbit_directions: Option<Vec<MultiVector>>,
}

#[derive(Clone, Debug)]
pub enum ReducedKind {
    Contact(ContactForm),
    Lcs(LcsStructure),
}

/// A reduced structure on the slice chart plus the certification record,
/// one named verdict per descent condition in declaration order.
#[derive(Clone, Debug)]
pub struct ReducedStructure {
    pub kind: ReducedKind,
    pub certificates: Vec<(String, Verdict)>,
}

/// Pointwise freeness report: `free` iff `reasons` is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalFreeness {
    pub free: bool,
    pub rank: usize,
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug)]
pub enum ActionError {
    /// The leaf type at the point does not match the requested reduction.
    WrongLeafType { requested: LeafType, found: LeafType },
    /// A descent condition failed; the record names the condition.
    DescentFailure { condition: String, verdict: Verdict },
    /// A generator does not pair with the stated moment component.
    NotHamiltonian { generator: usize, residual: Expr },
    /// Structurally invalid input data.
    Input(String),
    Expr(ExprError),
}

impl From<ExprError> for ActionError {
    fn from(e: ExprError) -> Self {
        ActionError::Expr(e)
    }
}

/// Reads the base Jacobi pair off a groupoid whose source map is a plain
/// coordinate projection: the projected components of the fiber Reeb field
/// and the projected bivector block, renamed to base coordinates. A zero
/// dimensional base carries the zero structure.
pub fn induced_base_structure(g: &GroupoidChart) -> Result<JacobiStructure, ExprError> {
    let k = g.base.dim();
    if k == 0 {
        return JacobiStructure::new(
            g.base.clone(),
            MultiVector::zero(g.base.clone(), 2),
            MultiVector::zero(g.base.clone(), 1),
        );
    }
    let mut idx = Vec::new();
    for (i, comp) in g.source.components.iter().enumerate() {
        let pos = g
            .gamma
            .coords
            .iter()
            .position(|c| Expr::coord(c) == *comp)
            .ok_or_else(|| {
                ExprError::Unsupported(format!("source component {i} is not a coordinate projection"))
            })?;
        if idx.contains(&pos) {
            return Err(ExprError::Unsupported("source projection repeats a coordinate".into()));
        }
        idx.push(pos);
    }
    let jac = g.jacobi()?;
    let rename: BTreeMap<String, Expr> = idx
        .iter()
        .zip(&g.base.coords)
        .map(|(&p, b)| (g.gamma.coords[p].clone(), Expr::coord(b)))
        .collect();
    let into_base = |e: &Expr| -> Result<Expr, ExprError> {
        let r = e.substitute(&rename)?;
        for c in r.coords() {
            if g.base.index_of(&c).is_none() {
                return Err(ExprError::Unsupported(format!(
                    "structure component depends on the fiber coordinate {c}"
                )));
            }
        }
        Ok(r)
    };
    let fiber_e = jac.reeb_like.components();
    let mut e0 = Vec::new();
    for &p in &idx {
        e0.push(into_base(&fiber_e[p])?);
    }
    let mut terms = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let (pa, pb) = (idx[a], idx[b]);
            let coeff = if pa < pb {
                jac.bivector.coefficient(&[pa as u8, pb as u8])
            } else {
                jac.bivector.coefficient(&[pb as u8, pa as u8]).neg()
            };
            let c = into_base(&coeff)?;
            if !c.is_zero_expr() {
                terms.push((alloc::vec![a as u8, b as u8], c));
            }
        }
    }
    JacobiStructure::new(
        g.base.clone(),
        MultiVector::from_terms(g.base.clone(), 2, terms)?,
        MultiVector::vector_field(g.base.clone(), e0)?,
    )
}

/// Action axioms on the supplied parametrizations: the two fiber product
/// legs, the unit law along the unit section, and, when a triple chart is
/// present, associativity together with the leg identities tying the
/// triple maps to the action data. Without a triple chart the axiom
/// conjunction stays inconclusive.
pub fn verify_groupoid_action(a: &ActionChart, cfg: &SamplingConfig) -> Result<Verdict, ExprError> {
    let g = &a.groupoid;
    let mut on_afp = map_residuals(
        "target compatibility t(pr_gamma) = J(pr_m)",
        &g.target.compose(&a.pr_gamma)?,
        &a.moment.compose(&a.pr_m)?,
    )?;
    on_afp.extend(map_residuals(
        "moment equivariance J(act) = s(pr_gamma)",
        &a.moment.compose(&a.act)?,
        &g.source.compose(&a.pr_gamma)?,
    )?);

    let id_m = SmoothMap::identity(a.m.clone());
    let mut on_m = map_residuals(
        "unit section left leg",
        &a.pr_m.compose(&a.unit_section)?,
        &id_m,
    )?;
    on_m.extend(map_residuals(
        "unit section right leg",
        &a.pr_gamma.compose(&a.unit_section)?,
        &g.unit.compose(&a.moment)?,
    )?);
    on_m.extend(map_residuals(
        "unit acts trivially",
        &a.act.compose(&a.unit_section)?,
        &id_m,
    )?);

    let mut v = residual_verdict(on_afp, &a.afp, cfg)
        .and(residual_verdict(on_m, &a.m, &cfg.derive(1)));

    match &a.assoc {
        Some(t) => {
            let mut on_t = map_residuals(
                "triple leg after",
                &a.pr_m.compose(&t.after)?,
                &a.act.compose(&t.first)?,
            )?;
            on_t.extend(map_residuals(
                "triple leg pair second",
                &a.pr_gamma.compose(&t.after)?,
                &g.pr2.compose(&t.pair)?,
            )?);
            on_t.extend(map_residuals(
                "triple leg pair first",
                &a.pr_gamma.compose(&t.first)?,
                &g.pr1.compose(&t.pair)?,
            )?);
            on_t.extend(map_residuals(
                "triple leg joined base",
                &a.pr_m.compose(&t.joined)?,
                &a.pr_m.compose(&t.first)?,
            )?);
            on_t.extend(map_residuals(
                "triple leg joined product",
                &a.pr_gamma.compose(&t.joined)?,
                &g.mult.compose(&t.pair)?,
            )?);
            on_t.extend(map_residuals(
                "associativity act(after) = act(joined)",
                &a.act.compose(&t.after)?,
                &a.act.compose(&t.joined)?,
            )?);
            v = v.and(residual_verdict(on_t, &t.triples, &cfg.derive(2)));
        }
        None => {
            v = v.and(Verdict::inconclusive(Some(
                "associativity unchecked: no triple-space parametrization supplied".into(),
            )));
        }
    }
    Ok(v)
}

/// The multiplicativity defect on the action fiber product:
/// `act*θ_M - pr_gamma*f · pr_m*θ_M - pr_gamma*θ_Γ`.
pub fn contact_action_residual(a: &ActionChart) -> Result<DiffForm, ExprError> {
    let lhs = a.theta_m.pullback(&a.act)?;
    let f = a.pr_gamma.pull_scalar(&a.groupoid.f)?;
    let rhs = a
        .theta_m
        .pullback(&a.pr_m)?
        .scale(&f)
        .add(&a.groupoid.theta.pullback(&a.pr_gamma)?)?;
    lhs.sub(&rhs)
}

/// The action must pull the acted form back to its `f`-twisted sum with the
/// multiplicative form.
pub fn verify_contact_action(a: &ActionChart, cfg: &SamplingConfig) -> Result<Verdict, ExprError> {
    let res = form_residuals("action pullback identity", &contact_action_residual(a)?);
    Ok(residual_verdict(res, &a.afp, cfg))
}

/// The complete moment condition: the moment map must relate the acted
/// Jacobi pair to the supplied base structure.
pub fn verify_moment_jacobi(
    a: &ActionChart,
    s0: &JacobiStructure,
    cfg: &SamplingConfig,
) -> Result<Verdict, ExprError> {
    verify_jacobi_map(&a.moment, &a.jacobi_m()?, s0, cfg)
}

/// Transport of one base function `u`: the `pr_m`-vertical lift of
/// `X_{s*u}` through `pr_gamma` must push through `act` onto `X_{J*u}`.
/// Inconclusive when the lift does not exist on the supplied fiber product
/// parametrization.
pub fn verify_hamil_identity_for(
    a: &ActionChart,
    u: &Expr,
    cfg: &SamplingConfig,
) -> Result<Verdict, ExprError> {
    let jac_gamma = a.groupoid.jacobi()?;
    let su = a.groupoid.source.pull_scalar(u)?;
    let x_gamma = hamiltonian_vf(&jac_gamma, &su)?;
    let gamma_sub = a.pr_gamma.substitution();
    let mut rows = a.pr_m.jacobian();
    rows.extend(a.pr_gamma.jacobian());
    let mut rhs = alloc::vec![Expr::zero(); a.m.dim()];
    for comp in x_gamma.components() {
        rhs.push(comp.substitute(&gamma_sub)?);
    }
    let Some(lift) = linalg::solve(&rows, &rhs)? else {
        return Ok(Verdict::inconclusive(Some(
            "no vertical lift on the supplied fiber product parametrization".into(),
        )));
    };
    let z = MultiVector::vector_field(a.afp.clone(), lift)?;
    let pushed = differential_applied(&a.act, &z)?;
    let ju = a.moment.pull_scalar(u)?;
    let x_m = hamiltonian_vf(&a.jacobi_m()?, &ju)?;
    let act_sub = a.act.substitution();
    let mut residuals = Vec::new();
    for (i, (p, xc)) in pushed.iter().zip(x_m.components()).enumerate() {
        let res = p.sub(&xc.substitute(&act_sub)?);
        residuals.push((Some(format!("generator transport component {i}")), res));
    }
    Ok(residual_verdict(residuals, &a.afp, cfg))
}

/// Transport of an opaque base function, covering all of them at once.
pub fn verify_hamil_identity(a: &ActionChart, cfg: &SamplingConfig) -> Result<Verdict, ExprError> {
    verify_hamil_identity_for(a, &opaque_scalar("u", &a.groupoid.base), cfg)
}

/// Pointwise freeness: the moment must be a submersion at the point and the
/// level tangent space must leave the contact hyperplane. Both conditions
/// are exact linear algebra at the rational point.
pub fn check_locally_free(a: &ActionChart, point: &[Rat]) -> Result<LocalFreeness, ExprError> {
    check_point_domain(&a.m, point)?;
    let sub = point_substitution(&a.m, point)?;
    let mut rows = Vec::new();
    for row in a.moment.jacobian() {
        let mut out = Vec::new();
        for entry in row {
            out.push(entry.substitute(&sub)?);
        }
        rows.push(out);
    }
    let n = a.m.dim();
    let rank = linalg::rank(&rows)?;
    let mut reasons = Vec::new();
    if rank < a.groupoid.base.dim() {
        reasons.push("the moment map is not a submersion at the point".to_string());
    }
    let kernel = if rows.is_empty() {
        (0..n)
            .map(|i| {
                let mut v = alloc::vec![Expr::zero(); n];
                v[i] = Expr::one();
                v
            })
            .collect()
    } else {
        linalg::nullspace(&rows)?
    };
    let mut theta_at = Vec::new();
    for i in 0..n {
        theta_at.push(a.theta_m.coefficient(&[i as u8]).substitute(&sub)?);
    }
    let transverse = kernel.iter().any(|v| {
        let mut pairing = Expr::zero();
        for (c, vi) in theta_at.iter().zip(v) {
            pairing = pairing.add(&c.mul(vi));
        }
        !pairing.is_zero_expr()
    });
    if !transverse {
        reasons.push("the level tangent space lies inside the contact hyperplane".to_string());
    }
    Ok(LocalFreeness { free: reasons.is_empty(), rank, reasons })
}

/// Checks that `big_f` rescales multiplicatively under the action, is
/// constant along the Reeb direction (also jointly with a supplied
/// invariant), and that its plain Hamiltonian field is tangent to the
/// moment level (after level restriction when a point is given).
pub fn verify_f_multiplicative(
    a: &ActionChart,
    big_f: &Expr,
    invariant: Option<&Expr>,
    level: Option<&[Rat]>,
    cfg: &SamplingConfig,
) -> Result<Verdict, ActionError> {
    let lhs = a.act.pull_scalar(big_f)?;
    let f_gamma = a.pr_gamma.pull_scalar(&a.groupoid.f)?;
    let rhs = a.pr_m.pull_scalar(big_f)?.mul(&f_gamma);
    let on_afp = alloc::vec![(
        Some("multiplicativity act*F = pr_m*F pr_gamma*f".to_string()),
        lhs.sub(&rhs),
    )];

    let jac_m = a.jacobi_m()?;
    let d_big = DiffForm::scalar(a.m.clone(), big_f.clone()).d();
    let mut on_m = alloc::vec![(
        Some("dF along the Reeb direction".to_string()),
        d_big.pair(&jac_m.reeb_like)?,
    )];
    if let Some(u) = invariant {
        let res = a.act.pull_scalar(u)?.sub(&a.pr_m.pull_scalar(u)?);
        if !res.is_zero_expr() {
            return Err(ActionError::Input(
                "the supplied comparison function is not invariant".to_string(),
            ));
        }
        let fu = DiffForm::scalar(a.m.clone(), big_f.mul(u)).d();
        on_m.push((
            Some("d(F u) along the Reeb direction".to_string()),
            fu.pair(&jac_m.reeb_like)?,
        ));
    }
    let x_f = hamiltonian_vf(&jac_m, big_f)?;
    let level_sub = match level {
        Some(x) => Some(level_restriction(&a.moment, x)?),
        None => None,
    };
    for (i, t) in differential_applied(&a.moment, &x_f)?.into_iter().enumerate() {
        let t = match &level_sub {
            Some(s) => t.substitute(s)?,
            None => t,
        };
        on_m.push((Some(format!("dJ(X_F) component {i}")), t));
    }
    Ok(residual_verdict(on_afp, &a.afp, cfg).and(residual_verdict(on_m, &a.m, &cfg.derive(5))))
}

/// Solves the level set equations `J = x` for coordinates occurring
/// linearly with constant coefficient and returns the eliminating
/// substitution. Errors when the equations are inconsistent or not
/// linearly solvable in the chart coordinates.
pub fn level_restriction(
    moment: &SmoothMap,
    x: &[Rat],
) -> Result<BTreeMap<String, Expr>, ExprError> {
    use num_traits::Zero;
    if x.len() != moment.target.dim() {
        return Err(ExprError::Unsupported("level point has the wrong dimension".into()));
    }
    check_point_domain(&moment.target, x)?;
    let mut eqs: Vec<Expr> = moment
        .components
        .iter()
        .zip(x)
        .map(|(c, xi)| c.sub(&Expr::from_rat(xi.clone())))
        .collect();
    let mut solved: BTreeMap<String, Expr> = BTreeMap::new();
    loop {
        eqs.retain(|e| !e.is_zero_expr());
        if eqs.is_empty() {
            return Ok(solved);
        }
        for eq in &eqs {
            if eq.coords().is_empty() {
                return Err(ExprError::Unsupported(
                    "level set equations are inconsistent at the point".into(),
                ));
            }
        }
        let mut found: Option<(usize, String, Expr)> = None;
        'search: for (i, eq) in eqs.iter().enumerate() {
            for c in eq.coords() {
                let Some(k) = eq.differentiate(&c).as_rat() else { continue };
                if k.is_zero() {
                    continue;
                }
                let rest = eq.sub(&Expr::coord(&c).scale_rat(&k));
                if rest.coords().contains(&c) {
                    continue;
                }
                found = Some((i, c.clone(), rest.scale_rat(&(-k.recip()))));
                break 'search;
            }
        }
        let Some((i, c, value)) = found else {
            return Err(ExprError::Unsupported(
                "level set equations are not linearly solvable in the chart coordinates".into(),
            ));
        };
        eqs.remove(i);
        let single: BTreeMap<String, Expr> = BTreeMap::from([(c.clone(), value.clone())]);
        for e in eqs.iter_mut() {
            *e = e.substitute(&single)?;
        }
        for v in solved.values_mut() {
            *v = v.substitute(&single)?;
        }
        solved.insert(c, value);
    }
}

/// Orbit directions at the level over `x`: one Hamiltonian field per
/// isotropy kernel function, plus the Reeb corrected direction on lcs
/// leaves.
pub fn derived_orbit_directions(
    a: &ActionChart,
    s0: &JacobiStructure,
    x: &[Rat],
) -> Result<Vec<MultiVector>, ExprError> {
    let jac_m = a.jacobi_m()?;
    let (kernel, extra, _) = isotropy_functions(s0, x)?;
    let mut dirs = Vec::new();
    for u in &kernel {
        dirs.push(hamiltonian_vf(&jac_m, &a.moment.pull_scalar(u)?)?);
    }
    if let Some(u0) = extra {
        let x0 = hamiltonian_vf(&jac_m, &a.moment.pull_scalar(&u0)?)?;
        dirs.push(x0.add(&jac_m.reeb_like)?);
    }
    Ok(dirs)
}

/// Exact rank immersion check at admissible rational sample points:
/// Falsified on any rank drop, Verified after two clean samples.
pub fn immersion_verdict(map: &SmoothMap, cfg: &SamplingConfig) -> Result<Verdict, ExprError> {
    let d = map.source.dim();
    if d == 0 {
        return Ok(Verdict::verified());
    }
    let jac = map.jacobian();
    let mut sources: Vec<EvalSource<'_>> = Vec::new();
    for row in &jac {
        sources.extend(row.iter().map(EvalSource::Canonical));
    }
    let mut checked = 0u32;
    for salt in 0..cfg.max_retries.max(1) {
        let sub = cfg.derive(u64::from(salt) ^ 0x696d6d65);
        let Some(mut ctx) = admissible_sample(&sources, &map.source, &sub) else {
            continue;
        };
        let mut matrix: Vec<Vec<Surd>> = Vec::new();
        let mut ok = true;
        for row in &jac {
            let mut out = Vec::new();
            for entry in row {
                match ctx.eval_expr(entry) {
                    Ok(v) => out.push(v),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
            matrix.push(out);
        }
        if !ok {
            continue;
        }
        let rank = linalg::rank_surd(&matrix);
        if rank < d {
            let assignments = ctx
                .assignment
                .iter()
                .map(|(c, v)| (c.clone(), format!("{v}")))
                .collect();
            let witness = Witness {
                assignments,
                jets: Vec::new(),
                residual: format!("slice differential rank {rank} (want {d})"),
                component: Some("slice immersion".into()),
            };
            return Ok(Verdict::falsified(witness)
                .with_detail("slice differential drops rank at a sample point".into()));
        }
        checked += 1;
        if checked >= 2 {
            return Ok(Verdict::verified());
        }
    }
    Ok(Verdict::inconclusive(Some("no admissible sample for the immersion check".into())))
}

struct ReductionPrep {
    dirs: Vec<MultiVector>,
    level: BTreeMap<String, Expr>,
    certs: Vec<(String, Verdict)>,
}

fn prepare_reduction(
    a: &ActionChart,
    r: &ReductionInput,
    s0: &JacobiStructure,
    cfg: &SamplingConfig,
) -> Result<ReductionPrep, ActionError> {
    if r.x.len() != a.groupoid.base.dim() {
        return Err(ActionError::Input("base point has the wrong dimension".to_string()));
    }
    if r.slice.target != a.m {
        return Err(ActionError::Input("the slice must land in the acted chart".to_string()));
    }
    if r.f.is_zero_expr() {
        return Err(ActionError::Input("the rescaling function must be nonzero".to_string()));
    }
    let level_img = a.moment.compose(&r.slice)?;
    for (i, (c, xi)) in level_img.components.iter().zip(&r.x).enumerate() {
        if !c.sub(&Expr::from_rat(xi.clone())).is_zero_expr() {
            return Err(ActionError::Input(format!(
                "the slice leaves the moment level in component {i}"
            )));
        }
    }
    let level = level_restriction(&a.moment, &r.x)?;
    let dirs = match &r.orbit_directions {
        Some(list) => {
            for v in list {
                if v.chart != a.m || v.degree != 1 {
                    return Err(ActionError::Input(
                        "orbit directions must be vector fields on the acted chart".to_string(),
                    ));
                }
            }
            list.clone()
        }
        None => derived_orbit_directions(a, s0, &r.x)?,
    };
    let mut certs = Vec::new();
    certs.push(("slice immersion".to_string(), immersion_verdict(&r.slice, cfg)?));
    Ok(ReductionPrep { dirs, level, certs })
}

fn fail_on_falsified(certs: &[(String, Verdict)]) -> Result<(), ActionError> {
    for (name, v) in certs {
        if v.status == Status::Falsified {
            return Err(ActionError::DescentFailure {
                condition: name.clone(),
                verdict: v.clone(),
            });
        }
    }
    Ok(())
}

/// Point reduction at a contact leaf: pulls `-F⁻¹ θ_M` back along the slice
/// and certifies the slice immersion, orbit invariance of the rescaled form
/// along the level, the orbit kernel condition, and nondegeneracy of the
/// reduced form. Any refuted condition surfaces as `DescentFailure`.
pub fn reduce_contact(
    a: &ActionChart,
    r: &ReductionInput,
    cfg: &SamplingConfig,
) -> Result<ReducedStructure, ActionError> {
    let s0 = induced_base_structure(&a.groupoid)?;
    let found = leaf_type_at(&s0, &r.x)?;
    if found != LeafType::Contact {
        return Err(ActionError::WrongLeafType { requested: LeafType::Contact, found });
    }
    if r.slice.source.dim() % 2 != 1 {
        return Err(ActionError::Input(
            "a contact reduction needs an odd dimensional slice".to_string(),
        ));
    }
    let mut prep = prepare_reduction(a, r, &s0, cfg)?;
    let scaled = a.theta_m.scale(&r.f.recip()?);
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for (i, v) in prep.dirs.iter().enumerate() {
        for (label, res) in form_residuals(&format!("direction {i} invariance"), &scaled.lie(v)?) {
            c1.push((label, res.substitute(&prep.level)?));
        }
        c2.push((
            Some(format!("pairing with direction {i} on the level")),
            a.theta_m.pair(v)?.substitute(&prep.level)?,
        ));
    }
    prep.certs.push(("C1 orbit invariance".to_string(), residual_verdict(c1, &a.m, &cfg.derive(11))));
    prep.certs.push(("C2 orbit kernel".to_string(), residual_verdict(c2, &a.m, &cfg.derive(12))));
    fail_on_falsified(&prep.certs)?;
    let alpha = scaled.scale_rat(-1, 1).pullback(&r.slice)?;
    let nondegenerate = verify_contact(
        &ContactForm { chart: r.slice.source.clone(), theta: alpha.clone() },
        &cfg.derive(13),
    )?;
    if nondegenerate.status != Status::Verified {
        return Err(ActionError::DescentFailure {
            condition: "C3 contact nondegeneracy".to_string(),
            verdict: nondegenerate,
        });
    }
    prep.certs.push(("C3 contact nondegeneracy".to_string(), nondegenerate));
    Ok(ReducedStructure {
        kind: ReducedKind::Contact(ContactForm { chart: r.slice.source.clone(), theta: alpha }),
        certificates: prep.certs,
    })
}

/// Point reduction at an lcs leaf: pulls `(-F⁻¹ dθ_M, -F⁻¹ dF)` back along
/// the slice and certifies the slice immersion, orbit invariance of both
/// forms along the level, closedness of the Lee form, the lcs equation,
/// and nondegeneracy. A zero dimensional slice passes vacuously.
pub fn reduce_lcs(
    a: &ActionChart,
    r: &ReductionInput,
    cfg: &SamplingConfig,
) -> Result<ReducedStructure, ActionError> {
    let s0 = induced_base_structure(&a.groupoid)?;
    let found = leaf_type_at(&s0, &r.x)?;
    if found != LeafType::Lcs {
        return Err(ActionError::WrongLeafType { requested: LeafType::Lcs, found });
    }
    let d = r.slice.source.dim();
    if d % 2 != 0 {
        return Err(ActionError::Input(
            "an lcs reduction needs an even dimensional slice".to_string(),
        ));
    }
    let mut prep = prepare_reduction(a, r, &s0, cfg)?;
    let minus_inv = r.f.recip()?.neg();
    let two = a.theta_m.d().scale(&minus_inv);
    let lee = DiffForm::scalar(a.m.clone(), r.f.clone()).d().scale(&minus_inv);
    let mut c1 = Vec::new();
    for (i, v) in prep.dirs.iter().enumerate() {
        for (label, res) in
            form_residuals(&format!("direction {i} two form invariance"), &two.lie(v)?)
        {
            c1.push((label, res.substitute(&prep.level)?));
        }
        for (label, res) in
            form_residuals(&format!("direction {i} Lee form invariance"), &lee.lie(v)?)
        {
            c1.push((label, res.substitute(&prep.level)?));
        }
    }
    prep.certs.push(("C1 orbit invariance".to_string(), residual_verdict(c1, &a.m, &cfg.derive(11))));
    let omega = two.pullback(&r.slice)?;
    let lee_r = lee.pullback(&r.slice)?;
    let sl = r.slice.source.clone();
    prep.certs.push((
        "C2 closed Lee form".to_string(),
        residual_verdict(form_residuals("d of the Lee form", &lee_r.d()), &sl, &cfg.derive(12)),
    ));
    let lcs_eq = omega.d().sub(&lee_r.wedge(&omega)?)?;
    prep.certs.push((
        "C3 lcs equation".to_string(),
        residual_verdict(form_residuals("lcs equation", &lcs_eq), &sl, &cfg.derive(13)),
    ));
    fail_on_falsified(&prep.certs)?;
    if d > 0 {
        let mut top = omega.clone();
        for _ in 1..(d / 2) {
            top = top.wedge(&omega)?;
        }
        if top.is_zero() {
            return Err(ActionError::DescentFailure {
                condition: "C4 nondegeneracy".to_string(),
                verdict: Verdict::inconclusive(Some(
                    "the top power of the reduced two form vanishes identically".to_string(),
                )),
            });
        }
    }
    prep.certs.push(("C4 nondegeneracy".to_string(), Verdict::verified()));
    Ok(ReducedStructure {
        kind: ReducedKind::Lcs(LcsStructure { chart: sl, two_form: omega, lee_form: lee_r }),
        certificates: prep.certs,
    })
}

/// The bracket of the `u`-rescaled structure computed through the plain
/// one: `{h,k}_u = u⁻¹ {u h, u k}`.
pub fn conformal_bracket(
    j: &JacobiStructure,
    u: &Expr,
    h: &Expr,
    k: &Expr,
) -> Result<Expr, ExprError> {
    jacobi_bracket(j, &u.mul(h), &u.mul(k))?.div(u)
}

/// Invariant functions must stay closed under the `-F`-rescaled bracket:
/// checks invariance of `h`, `k` (errors otherwise) and then of the
/// bracket itself.
pub fn verify_invariant_bracket_closure(
    a: &ActionChart,
    big_f: &Expr,
    h: &Expr,
    k: &Expr,
    cfg: &SamplingConfig,
) -> Result<Verdict, ActionError> {
    let invariance = |w: &Expr| -> Result<bool, ExprError> {
        Ok(a.act.pull_scalar(w)?.sub(&a.pr_m.pull_scalar(w)?).is_zero_expr())
    };
    if !invariance(h)? {
        return Err(ActionError::Input("h is not invariant under the action".to_string()));
    }
    if !invariance(k)? {
        return Err(ActionError::Input("k is not invariant under the action".to_string()));
    }
    let bracket = conformal_bracket(&a.jacobi_m()?, &big_f.neg(), h, k)?;
    let res = a.act.pull_scalar(&bracket)?.sub(&a.pr_m.pull_scalar(&bracket)?);
    Ok(residual_verdict(
        alloc::vec![(Some("invariance of the rescaled bracket".to_string()), res)],
        &a.afp,
        cfg,
    ))
}

/// Cross-check of a contact reduction: the Hamiltonian field of an
/// invariant `h` in the `-F`-rescaled structure, written along the slice as
/// slice pushforward plus orbit directions, must satisfy
/// `α(W) = h ∘ slice`. Inconclusive when the field is not projectable.
pub fn verify_reduction_consistency(
    a: &ActionChart,
    r: &ReductionInput,
    red: &ReducedStructure,
    h: &Expr,
    cfg: &SamplingConfig,
) -> Result<Verdict, ActionError> {
    let ReducedKind::Contact(alpha) = &red.kind else {
        return Err(ActionError::Input(
            "the consistency check applies to contact reductions".to_string(),
        ));
    };
    let jac_m = a.jacobi_m()?;
    let twisted = crate::jacobi::conformal_change(&jac_m, &r.f.neg())?;
    let x_h = hamiltonian_vf(&twisted, h)?;
    let s0 = induced_base_structure(&a.groupoid)?;
    let dirs = match &r.orbit_directions {
        Some(list) => list.clone(),
        None => derived_orbit_directions(a, &s0, &r.x)?,
    };
    let sub = r.slice.substitution();
    let d = r.slice.source.dim();
    let jac_slice = r.slice.jacobian();
    let mut rows = Vec::new();
    for i in 0..a.m.dim() {
        let mut row = jac_slice[i].clone();
        for v in &dirs {
            row.push(v.components()[i].substitute(&sub)?);
        }
        rows.push(row);
    }
    let mut rhs = Vec::new();
    for comp in x_h.components() {
        rhs.push(comp.substitute(&sub)?);
    }
    let Some(sol) = linalg::solve(&rows, &rhs)? else {
        return Ok(Verdict::inconclusive(Some(
            "the rescaled Hamiltonian field is not projectable along the supplied directions"
                .into(),
        )));
    };
    let mut paired = Expr::zero();
    for j in 0..d {
        paired = paired.add(&alpha.theta.coefficient(&[j as u8]).mul(&sol[j]));
    }
    let res = paired.sub(&h.substitute(&sub)?);
    Ok(residual_verdict(
        alloc::vec![(Some("reduced dynamics pairing".to_string()), res)],
        &r.slice.source,
        cfg,
    ))
}

/// A parametrized abelian factor: a chart for the group, a chart of
/// ordered pairs (second copy under fresh names), the group law, and
/// inversion. The unit must sit at the coordinate origin.
#[derive(Clone, Debug, PartialEq)]
pub struct AbelianFactor {
    pub chart: Arc<Chart>,
    pub pair: Arc<Chart>,
    pub mult: SmoothMap,
    pub inverse: SmoothMap,
}

impl AbelianFactor {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn second_names(&self) -> &[String] {
        &self.pair.coords[self.chart.dim()..]
    }

    fn validate(&self, label: &str) -> Result<(), ActionError> {
        let d = self.dim();
        if self.pair.dim() != 2 * d || self.pair.coords[..d] != self.chart.coords[..] {
            return Err(ActionError::Input(format!(
                "{label}: pair chart must extend the factor chart by a fresh copy"
            )));
        }
        if self.mult.source != self.pair || self.mult.target != self.chart {
            return Err(ActionError::Input(format!(
                "{label}: group law must map the pair chart to the factor chart"
            )));
        }
        if self.inverse.source != self.chart || self.inverse.target != self.chart {
            return Err(ActionError::Input(format!(
                "{label}: inversion must be a self map of the factor chart"
            )));
        }
        Ok(())
    }

    fn is_additive(&self) -> bool {
        (0..self.dim()).all(|i| {
            let sum = Expr::coord(&self.chart.coords[i]).add(&Expr::coord(&self.second_names()[i]));
            self.mult.components[i] == sum
        })
    }

    fn pair_constraints(&self) -> Vec<Constraint> {
        self.pair.constraints.clone()
    }
}

/// Input for promoting a Hamiltonian group action to a groupoid action: an
/// acted contact chart, a parametrized abelian symmetry factor with its
/// action and moment components, and a parametrized reparametrization
/// factor ("time") whose flow realizes the Reeb direction of the rescaled
/// form.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianInput {
    pub m: Arc<Chart>,
    pub theta_m: DiffForm,
    pub group: AbelianFactor,
    /// Group action on the product layout `m.coords ++ group coords`.
    pub act_g: SmoothMap,
    /// Moment components on the acted chart, one per group coordinate.
    pub moment: Vec<Expr>,
    pub time: AbelianFactor,
    /// Flow on the product layout `m.coords ++ time coord`.
    pub flow: SmoothMap,
    pub route: HamiltonianRoute,
}

/// Construction route for the synthesized groupoid.
#[derive(Clone, Debug, PartialEq)]
pub enum HamiltonianRoute {
    /// Normalize the moment to 1 and act over a point base; the
    /// multiplicative form is read off along the section through the
    /// rational anchor point.
    Normalized { anchor: Vec<Rat> },
    /// Keep the moment and act over the dual chart.
    Unnormalized { dual: Arc<Chart> },
}

/// The synthesized action together with its recorded verdicts.
#[derive(Clone, Debug)]
pub struct HamiltonianActionResult {
    pub action: ActionChart,
    pub groupoid_axioms: Verdict,
    pub action_axioms: Verdict,
    pub multiplicativity: Verdict,
}

/// Builds a groupoid action from Hamiltonian data. Every group generator
/// must pair with its moment component under the contact form; the axiom
/// and multiplicativity verdicts of the synthesized action are recorded.
pub fn hamiltonian_to_action(
    h: &HamiltonianInput,
    cfg: &SamplingConfig,
) -> Result<HamiltonianActionResult, ActionError> {
    h.group.validate("group factor")?;
    h.time.validate("time factor")?;
    if h.time.dim() != 1 {
        return Err(ActionError::Input("the time factor must be one dimensional".to_string()));
    }
    let gd = h.group.dim();
    if h.moment.len() != gd {
        return Err(ActionError::Input(
            "one moment component per group coordinate is required".to_string(),
        ));
    }
    if h.theta_m.chart != h.m || h.theta_m.degree != 1 {
        return Err(ActionError::Input("theta_m must be a one form on the acted chart".to_string()));
    }
    let mut act_names = h.m.coords.clone();
    act_names.extend(h.group.chart.coords.iter().cloned());
    if h.act_g.source.coords != act_names || h.act_g.target != h.m {
        return Err(ActionError::Input(
            "the group action must use the product layout onto the acted chart".to_string(),
        ));
    }
    let mut flow_names = h.m.coords.clone();
    flow_names.extend(h.time.chart.coords.iter().cloned());
    if h.flow.source.coords != flow_names || h.flow.target != h.m {
        return Err(ActionError::Input(
            "the flow must use the product layout onto the acted chart".to_string(),
        ));
    }
    let unit_sub: BTreeMap<String, Expr> =
        h.group.chart.coords.iter().map(|c| (c.clone(), Expr::zero())).collect();
    for i in 0..gd {
        let gi = &h.group.chart.coords[i];
        let mut gen = Vec::new();
        for comp in &h.act_g.components {
            gen.push(comp.differentiate(gi).substitute(&unit_sub)?);
        }
        let field = MultiVector::vector_field(h.m.clone(), gen)?;
        let res = h.theta_m.pair(&field)?.sub(&h.moment[i]);
        if !res.is_zero_expr() {
            return Err(ActionError::NotHamiltonian { generator: i, residual: res });
        }
    }
    match &h.route {
        HamiltonianRoute::Normalized { anchor } => normalized_route(h, anchor, cfg),
        HamiltonianRoute::Unnormalized { dual } => unnormalized_route(h, dual, cfg),
    }
}

fn coord_exprs(names: &[String]) -> Vec<Expr> {
    names.iter().map(|c| Expr::coord(c)).collect()
}

/// Synthesizes the composable triple chart for a product shaped action
/// fiber product: triples extend `afp` by a second copy of the groupoid
/// fiber coordinates.
fn synth_assoc(
    afp: &Arc<Chart>,
    fp: &Arc<Chart>,
    act: &SmoothMap,
    mult: &SmoothMap,
    fiber_names: &[String],
    second_names: &[String],
    pair_prefix: &[Expr],
    extra_constraints: &[Constraint],
    name: &str,
) -> Result<AssocData, ExprError> {
    let mut coords = afp.coords.clone();
    coords.extend(second_names.iter().cloned());
    let mut constraints = afp.constraints.clone();
    constraints.extend(extra_constraints.iter().cloned());
    let triples = Arc::new(Chart { name: name.to_string(), coords, constraints });

    let first = SmoothMap::new(triples.clone(), afp.clone(), coord_exprs(&afp.coords))?;
    let mut pair_comps = pair_prefix.to_vec();
    pair_comps.extend(coord_exprs(fiber_names));
    pair_comps.extend(coord_exprs(second_names));
    let pair = SmoothMap::new(triples.clone(), fp.clone(), pair_comps)?;
    let mut after_comps = act.components.clone();
    after_comps.extend(coord_exprs(second_names));
    let after = SmoothMap::new(triples.clone(), afp.clone(), after_comps)?;
    let m_dim = afp.dim() - fiber_names.len();
    let mut joined_comps = coord_exprs(&afp.coords[..m_dim]);
    let tail = &mult.components[mult.components.len() - fiber_names.len()..];
    joined_comps.extend(tail.iter().cloned());
    let joined = SmoothMap::new(triples.clone(), afp.clone(), joined_comps)?;
    Ok(AssocData { triples, first, pair, after, joined })
}

fn finish_result(
    action: ActionChart,
    cfg: &SamplingConfig,
) -> Result<HamiltonianActionResult, ActionError> {
    let groupoid_axioms = verify_groupoid(&action.groupoid, cfg)?;
    let action_axioms = verify_groupoid_action(&action, &cfg.derive(31))?;
    let multiplicativity = verify_contact_action(&action, &cfg.derive(32))?;
    Ok(HamiltonianActionResult { action, groupoid_axioms, action_axioms, multiplicativity })
}

/// Point base route: rescale by the (one signed) moment, synthesize the
/// two dimensional symmetry groupoid over a point, and read the
/// multiplicative form off along the anchor section.
fn normalized_route(
    h: &HamiltonianInput,
    anchor: &[Rat],
    cfg: &SamplingConfig,
) -> Result<HamiltonianActionResult, ActionError> {
    if h.group.dim() != 1 {
        return Err(ActionError::Input(
            "the normalized route takes one group generator".to_string(),
        ));
    }
    check_point_domain(&h.m, anchor)?;
    let phi = &h.moment[0];
    let theta = h.theta_m.scale(&phi.recip()?);
    let g_name = h.group.chart.coords[0].clone();
    let t_name = h.time.chart.coords[0].clone();
    let sec_g = h.group.second_names()[0].clone();
    let sec_t = h.time.second_names()[0].clone();

    let base = Chart::new(&format!("{}_base", h.m.name), &[]);
    let gamma = Chart::product(&format!("{}_sym", h.m.name), &h.group.chart, &h.time.chart);
    let mut fp_coords = gamma.coords.clone();
    fp_coords.push(sec_g.clone());
    fp_coords.push(sec_t.clone());
    let mut fp_cons = gamma.constraints.clone();
    fp_cons.extend(h.group.pair_constraints());
    fp_cons.extend(h.time.pair_constraints());
    let fp = Arc::new(Chart {
        name: format!("{}_sympair", h.m.name),
        coords: fp_coords,
        constraints: fp_cons,
    });

    let source = SmoothMap::new(gamma.clone(), base.clone(), Vec::new())?;
    let target = source.clone();
    let unit = SmoothMap::new(base.clone(), gamma.clone(), alloc::vec![Expr::zero(); 2])?;
    let inverse = SmoothMap::new(
        gamma.clone(),
        gamma.clone(),
        alloc::vec![h.group.inverse.components[0].clone(), h.time.inverse.components[0].clone()],
    )?;
    let pr1 = SmoothMap::new(fp.clone(), gamma.clone(), coord_exprs(&[g_name.clone(), t_name.clone()]))?;
    let pr2 = SmoothMap::new(fp.clone(), gamma.clone(), coord_exprs(&[sec_g.clone(), sec_t.clone()]))?;
    let mult = SmoothMap::new(
        fp.clone(),
        gamma.clone(),
        alloc::vec![h.group.mult.components[0].clone(), h.time.mult.components[0].clone()],
    )?;
    let mut lsec_comps = alloc::vec![Expr::zero(); 2];
    lsec_comps.extend(coord_exprs(&[g_name.clone(), t_name.clone()]));
    let left_unit_section = SmoothMap::new(gamma.clone(), fp.clone(), lsec_comps)?;
    let mut rsec_comps = coord_exprs(&[g_name.clone(), t_name.clone()]);
    rsec_comps.extend(alloc::vec![Expr::zero(); 2]);
    let right_unit_section = SmoothMap::new(gamma.clone(), fp.clone(), rsec_comps)?;

    let mg = Chart::product(&format!("{}_grp", h.m.name), &h.m, &h.group.chart);
    let afp = Chart::product(&format!("{}_afp", h.m.name), &mg, &h.time.chart);
    let pr_m = SmoothMap::new(afp.clone(), h.m.clone(), coord_exprs(&h.m.coords))?;
    let pr_gamma =
        SmoothMap::new(afp.clone(), gamma.clone(), coord_exprs(&[g_name.clone(), t_name.clone()]))?;
    let mut embed_comps = h.act_g.components.clone();
    embed_comps.push(Expr::coord(&t_name));
    let embed = SmoothMap::new(afp.clone(), h.flow.source.clone(), embed_comps)?;
    let act = h.flow.compose(&embed)?;
    let moment = SmoothMap::new(h.m.clone(), base.clone(), Vec::new())?;
    let mut us_comps = coord_exprs(&h.m.coords);
    us_comps.extend(alloc::vec![Expr::zero(); 2]);
    let unit_section = SmoothMap::new(h.m.clone(), afp.clone(), us_comps)?;

    let mut sigma_comps: Vec<Expr> = anchor.iter().map(|v| Expr::from_rat(v.clone())).collect();
    sigma_comps.extend(coord_exprs(&[g_name.clone(), t_name.clone()]));
    let sigma = SmoothMap::new(gamma.clone(), afp.clone(), sigma_comps)?;
    let defect = theta.pullback(&act)?.sub(&theta.pullback(&pr_m)?)?;
    let theta_gamma = defect.pullback(&sigma)?;

    let groupoid = GroupoidChart {
        gamma,
        base,
        source,
        target,
        unit,
        inverse,
        fp: fp.clone(),
        pr1,
        pr2,
        mult: mult.clone(),
        left_unit_section,
        right_unit_section,
        theta: theta_gamma,
        f: Expr::one(),
        f_pair: None,
    };
    let fiber_names = alloc::vec![g_name, t_name];
    let second_names = alloc::vec![sec_g, sec_t];
    let mut extra = h.group.pair_constraints();
    extra.extend(h.time.pair_constraints());
    let assoc = synth_assoc(
        &afp,
        &fp,
        &act,
        &mult,
        &fiber_names,
        &second_names,
        &[],
        &extra,
        &format!("{}_triples", h.m.name),
    )?;
    let action = ActionChart {
        groupoid,
        m: h.m.clone(),
        theta_m: theta,
        moment,
        afp,
        pr_m,
        pr_gamma,
        act,
        unit_section,
        assoc: Some(assoc),
    };
    finish_result(action, cfg)
}

/// Dual base route for additive parametrizations: the symmetry groupoid is
/// the product `dual × group × time` with the tautological multiplicative
/// form and the untouched moment.
fn unnormalized_route(
    h: &HamiltonianInput,
    dual: &Arc<Chart>,
    cfg: &SamplingConfig,
) -> Result<HamiltonianActionResult, ActionError> {
    let gd = h.group.dim();
    if dual.dim() != gd {
        return Err(ActionError::Input(
            "the dual chart must match the group dimension".to_string(),
        ));
    }
    if !h.group.is_additive() || !h.time.is_additive() {
        return Err(ActionError::Input(
            "the unnormalized route needs additive factor parametrizations".to_string(),
        ));
    }
    let gt = Chart::product(&format!("{}_grt", h.m.name), &h.group.chart, &h.time.chart);
    let gamma = Chart::product(&format!("{}_sym", h.m.name), dual, &gt);
    let mut coeffs = alloc::vec![Expr::zero(); gamma.dim()];
    for i in 0..gd {
        coeffs[gd + i] = Expr::coord(&dual.coords[i]);
    }
    coeffs[2 * gd] = Expr::one();
    let theta_gamma = DiffForm::one_form(gamma.clone(), coeffs)?;

    let xi = coord_exprs(&dual.coords);
    let source = SmoothMap::new(gamma.clone(), dual.clone(), xi.clone())?;
    let target = source.clone();
    let mut unit_comps = xi.clone();
    unit_comps.extend(alloc::vec![Expr::zero(); gd + 1]);
    let unit = SmoothMap::new(dual.clone(), gamma.clone(), unit_comps)?;
    let mut inv_comps = xi.clone();
    for c in h.group.chart.coords.iter().chain(h.time.chart.coords.iter()) {
        inv_comps.push(Expr::coord(c).neg());
    }
    let inverse = SmoothMap::new(gamma.clone(), gamma.clone(), inv_comps)?;

    let mut second_names: Vec<String> = h.group.second_names().to_vec();
    second_names.push(h.time.second_names()[0].clone());
    let mut fp_coords = gamma.coords.clone();
    fp_coords.extend(second_names.iter().cloned());
    let fp = Arc::new(Chart {
        name: format!("{}_sympair", h.m.name),
        coords: fp_coords,
        constraints: gamma.constraints.clone(),
    });
    let pr1 = SmoothMap::new(fp.clone(), gamma.clone(), coord_exprs(&gamma.coords))?;
    let mut pr2_comps = xi.clone();
    pr2_comps.extend(coord_exprs(&second_names));
    let pr2 = SmoothMap::new(fp.clone(), gamma.clone(), pr2_comps)?;
    let mut mult_comps = xi.clone();
    for i in 0..gd {
        mult_comps.push(h.group.mult.components[i].clone());
    }
    mult_comps.push(h.time.mult.components[0].clone());
    let mult = SmoothMap::new(fp.clone(), gamma.clone(), mult_comps)?;
    let mut fiber_names: Vec<String> = h.group.chart.coords.clone();
    fiber_names.push(h.time.chart.coords[0].clone());
    let mut lsec_comps = xi.clone();
    lsec_comps.extend(alloc::vec![Expr::zero(); gd + 1]);
    lsec_comps.extend(coord_exprs(&fiber_names));
    let left_unit_section = SmoothMap::new(gamma.clone(), fp.clone(), lsec_comps)?;
    let mut rsec_comps = coord_exprs(&gamma.coords);
    rsec_comps.extend(alloc::vec![Expr::zero(); gd + 1]);
    let right_unit_section = SmoothMap::new(gamma.clone(), fp.clone(), rsec_comps)?;

    let groupoid = GroupoidChart {
        gamma: gamma.clone(),
        base: dual.clone(),
        source,
        target,
        unit,
        inverse,
        fp: fp.clone(),
        pr1,
        pr2,
        mult: mult.clone(),
        left_unit_section,
        right_unit_section,
        theta: theta_gamma,
        f: Expr::one(),
        f_pair: None,
    };
    let moment = SmoothMap::new(h.m.clone(), dual.clone(), h.moment.clone())?;
    let mg = Chart::product(&format!("{}_grp", h.m.name), &h.m, &h.group.chart);
    let afp = Chart::product(&format!("{}_afp", h.m.name), &mg, &h.time.chart);
    let pr_m = SmoothMap::new(afp.clone(), h.m.clone(), coord_exprs(&h.m.coords))?;
    let mut prg_comps = h.moment.clone();
    prg_comps.extend(coord_exprs(&fiber_names));
    let pr_gamma = SmoothMap::new(afp.clone(), gamma, prg_comps)?;
    let mut embed_comps = h.act_g.components.clone();
    embed_comps.push(Expr::coord(&h.time.chart.coords[0]));
    let embed = SmoothMap::new(afp.clone(), h.flow.source.clone(), embed_comps)?;
    let act = h.flow.compose(&embed)?;
    let mut us_comps = coord_exprs(&h.m.coords);
    us_comps.extend(alloc::vec![Expr::zero(); gd + 1]);
    let unit_section = SmoothMap::new(h.m.clone(), afp.clone(), us_comps)?;
    let assoc = synth_assoc(
        &afp,
        &fp,
        &act,
        &mult,
        &fiber_names,
        &second_names,
        &h.moment,
        &[],
        &format!("{}_triples", h.m.name),
    )?;
    let action = ActionChart {
        groupoid,
        m: h.m.clone(),
        theta_m: h.theta_m.clone(),
        moment,
        afp,
        pr_m,
        pr_gamma,
        act,
        unit_section,
        assoc: Some(assoc),
    };
    finish_result(action, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::groupoid::tests::{abelian_groupoid, r3_groupoid};
    use crate::{rat, rat_int};

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn cfg() -> SamplingConfig {
        SamplingConfig::new(29)
    }

    fn mapv(src: &Arc<Chart>, tgt: &Arc<Chart>, comps: &[&str]) -> SmoothMap {
        SmoothMap::new(src.clone(), tgt.clone(), comps.iter().map(|c| e(c)).collect()).unwrap()
    }

    fn base_line(g: &GroupoidChart) -> JacobiStructure {
        JacobiStructure::new(
            g.base.clone(),
            MultiVector::zero(g.base.clone(), 2),
            MultiVector::vector_field(g.base.clone(), alloc::vec![Expr::one()]).unwrap(),
        )
        .unwrap()
    }

    /// A groupoid acting on itself by multiplication from the right.
    fn right_mult(g: &GroupoidChart) -> ActionChart {
        ActionChart {
            groupoid: g.clone(),
            m: g.gamma.clone(),
            theta_m: g.theta.clone(),
            moment: g.source.clone(),
            afp: g.fp.clone(),
            pr_m: g.pr1.clone(),
            pr_gamma: g.pr2.clone(),
            act: g.mult.clone(),
            unit_section: g.right_unit_section.clone(),
            assoc: None,
        }
    }

    fn r3_right_mult_with_assoc() -> ActionChart {
        let g = r3_groupoid();
        let mut a = right_mult(&g);
        let t = Chart::new("r3t", &["p", "q", "s", "q2", "s2", "q3", "s3"]);
        a.assoc = Some(AssocData {
            triples: t.clone(),
            first: mapv(&t, &g.fp, &["p", "q", "s", "q2", "s2"]),
            pair: mapv(&t, &g.fp, &["q", "q2", "s2", "q3", "s3"]),
            after: mapv(&t, &g.fp, &["p", "q2", "s+s2", "q3", "s3"]),
            joined: mapv(&t, &g.fp, &["p", "q", "s", "q3", "s2+s3"]),
        });
        a
    }

    fn abelian_right_mult_with_assoc() -> ActionChart {
        let g = abelian_groupoid();
        let mut a = right_mult(&g);
        let t = Chart::new("abt", &["xi", "g", "r", "g2", "r2", "g3", "r3"]);
        a.assoc = Some(AssocData {
            triples: t.clone(),
            first: mapv(&t, &g.fp, &["xi", "g", "r", "g2", "r2"]),
            pair: mapv(&t, &g.fp, &["xi", "g2", "r2", "g3", "r3"]),
            after: mapv(&t, &g.fp, &["xi", "g+g2", "r+r2", "g3", "r3"]),
            joined: mapv(&t, &g.fp, &["xi", "g", "r", "g2+g3", "r2+r3"]),
        });
        a
    }

    /// Scaling action on the contact chart (x, y, z) with form
    /// dz + x dy - y dx; `third` and `y_comp` select broken variants.
    fn heisenberg_action(third: &str, y_comp: &str) -> ActionChart {
        let g = r3_groupoid();
        let m = Chart::new("heis", &["x", "y", "z"]);
        let theta_m = DiffForm::one_form(m.clone(), alloc::vec![e("-y"), e("x"), e("1")]).unwrap();
        let afp = Chart::new("heis_afp", &["x", "y", "z", "q", "s"]);
        let act = mapv(&afp, &m, &["exp(-s/2)*x", y_comp, third]);
        let t = Chart::new("heis_t", &["x", "y", "z", "q", "s", "q2", "s2"]);
        let mut after_comps: Vec<Expr> = act.components.clone();
        after_comps.push(e("q2"));
        after_comps.push(e("s2"));
        let assoc = AssocData {
            triples: t.clone(),
            first: mapv(&t, &afp, &["x", "y", "z", "q", "s"]),
            pair: mapv(&t, &g.fp, &["z", "q", "s", "q2", "s2"]),
            after: SmoothMap::new(t.clone(), afp.clone(), after_comps).unwrap(),
            joined: mapv(&t, &afp, &["x", "y", "z", "q2", "s+s2"]),
        };
        ActionChart {
            groupoid: g.clone(),
            m: m.clone(),
            theta_m,
            moment: mapv(&m, &g.base, &["z"]),
            afp: afp.clone(),
            pr_m: mapv(&afp, &m, &["x", "y", "z"]),
            pr_gamma: mapv(&afp, &g.gamma, &["z", "q", "s"]),
            act,
            unit_section: mapv(&m, &afp, &["x", "y", "z", "z", "0"]),
            assoc: Some(assoc),
        }
    }

    fn heisenberg_slice(m: &Arc<Chart>) -> SmoothMap {
        let sl = Chart::new("heis_sl", &["l"]);
        mapv(&sl, m, &["(1-l^2)/(1+l^2)", "2*l/(1+l^2)", "0"])
    }

    #[test]
    fn right_multiplication_satisfies_action_axioms() {
        let a = r3_right_mult_with_assoc();
        let v = verify_groupoid_action(&a, &cfg()).unwrap();
        assert_eq!(v.status, Status::Verified);
        assert_eq!(verify_contact_action(&a, &cfg()).unwrap().status, Status::Verified);

        let mut no_assoc = a.clone();
        no_assoc.assoc = None;
        let v = verify_groupoid_action(&no_assoc, &cfg()).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
        assert!(v.detail.unwrap().contains("associativity"));
    }

    #[test]
    fn right_multiplication_moment_and_transport() {
        let a = r3_right_mult_with_assoc();
        let s0 = base_line(&a.groupoid);
        assert_eq!(verify_moment_jacobi(&a, &s0, &cfg()).unwrap().status, Status::Verified);
        assert_eq!(verify_hamil_identity(&a, &cfg()).unwrap().status, Status::Verified);
        assert_eq!(
            verify_hamil_identity_for(&a, &Expr::one(), &cfg()).unwrap().status,
            Status::Verified
        );
    }

    #[test]
    fn rescaled_bracket_of_invariants_is_exact_and_closed() {
        let a = r3_right_mult_with_assoc();
        let jac_m = a.jacobi_m().unwrap();
        let b = conformal_bracket(&jac_m, &e("-exp(-s)"), &e("p"), &e("p^2")).unwrap();
        assert_eq!(b, e("p^2"));
        let v = verify_invariant_bracket_closure(&a, &e("exp(-s)"), &e("p"), &e("p^2"), &cfg())
            .unwrap();
        assert_eq!(v.status, Status::Verified);
        assert!(matches!(
            verify_invariant_bracket_closure(&a, &e("exp(-s)"), &e("q"), &e("p"), &cfg()),
            Err(ActionError::Input(_))
        ));
    }

    #[test]
    fn heisenberg_scaling_suite() {
        let a = heisenberg_action("q", "exp(-s/2)*y");
        assert_eq!(verify_groupoid_action(&a, &cfg()).unwrap().status, Status::Verified);
        assert_eq!(verify_contact_action(&a, &cfg()).unwrap().status, Status::Verified);
        let s0 = base_line(&a.groupoid);
        assert_eq!(verify_moment_jacobi(&a, &s0, &cfg()).unwrap().status, Status::Verified);
        assert_eq!(verify_hamil_identity(&a, &cfg()).unwrap().status, Status::Verified);

        // The transported Hamiltonian field of an opaque base function.
        let u = opaque_scalar("u", &a.groupoid.base);
        let ju = a.moment.pull_scalar(&u).unwrap();
        let x = hamiltonian_vf(&a.jacobi_m().unwrap(), &ju).unwrap();
        let uz = Expr::jet("u", alloc::vec![0], alloc::vec![Expr::coord("z")]);
        let upz = Expr::jet("u", alloc::vec![1], alloc::vec![Expr::coord("z")]);
        let half = rat(1, 2);
        let expected = alloc::vec![
            Expr::coord("x").mul(&upz).scale_rat(&half),
            Expr::coord("y").mul(&upz).scale_rat(&half),
            uz,
        ];
        assert_eq!(x.components(), expected);
    }

    #[test]
    fn heisenberg_broken_moment_refutes_axioms() {
        let mut a = heisenberg_action("z", "exp(-s/2)*y");
        a.assoc = None;
        let v = verify_groupoid_action(&a, &cfg()).unwrap();
        assert_eq!(v.status, Status::Falsified);
        assert!(v.witness.unwrap().component.unwrap().contains("moment equivariance"));
    }

    #[test]
    fn heisenberg_partial_scaling_refutes_multiplicativity() {
        let a = heisenberg_action("q", "y");
        assert_eq!(verify_groupoid_action(&a, &cfg()).unwrap().status, Status::Verified);
        let v = verify_contact_action(&a, &cfg()).unwrap();
        assert_eq!(v.status, Status::Falsified);
    }

    #[test]
    fn local_freeness_classifies_points() {
        let a = heisenberg_action("q", "exp(-s/2)*y");
        let free = check_locally_free(&a, &[rat_int(1), rat_int(0), rat_int(0)]).unwrap();
        assert!(free.free, "{:?}", free.reasons);
        let origin = check_locally_free(&a, &[rat_int(0), rat_int(0), rat_int(0)]).unwrap();
        assert!(!origin.free);
        assert!(origin.reasons[0].contains("contact hyperplane"));
        let axis = check_locally_free(&a, &[rat_int(0), rat_int(0), rat_int(5)]).unwrap();
        assert!(!axis.free);

        let mut degenerate = a.clone();
        degenerate.moment = mapv(&a.m, &a.groupoid.base, &["0"]);
        let r = check_locally_free(&degenerate, &[rat_int(1), rat_int(0), rat_int(0)]).unwrap();
        assert!(!r.free);
        assert!(r.reasons[0].contains("submersion"));
    }

    #[test]
    fn rescaling_function_multiplicativity() {
        let a = heisenberg_action("q", "exp(-s/2)*y");
        let v = verify_f_multiplicative(
            &a,
            &e("x^2+y^2"),
            Some(&e("x/y")),
            Some(&[rat_int(0)]),
            &cfg(),
        )
        .unwrap();
        assert_eq!(v.status, Status::Verified);

        let v = verify_f_multiplicative(&a, &Expr::one(), None, None, &cfg()).unwrap();
        assert_eq!(v.status, Status::Falsified);
        assert!(v.witness.unwrap().component.unwrap().contains("multiplicativity"));

        assert!(matches!(
            verify_f_multiplicative(&a, &e("x^2+y^2"), Some(&e("x")), None, &cfg()),
            Err(ActionError::Input(_))
        ));
    }

    #[test]
    fn level_restriction_solves_linear_levels() {
        let a = heisenberg_action("q", "exp(-s/2)*y");
        let level = level_restriction(&a.moment, &[rat_int(0)]).unwrap();
        assert_eq!(level.len(), 1);
        assert_eq!(level.get("z").unwrap(), &Expr::zero());

        let quadratic = mapv(&a.m, &a.groupoid.base, &["z^2"]);
        assert!(level_restriction(&quadratic, &[rat_int(1)]).is_err());

        let plane = Chart::new("lvl2", &["t", "t2"]);
        let clash = mapv(&a.m, &plane, &["z", "z"]);
        assert!(level_restriction(&clash, &[rat_int(0), rat_int(1)]).is_err());
    }

    #[test]
    fn heisenberg_circle_reduction() {
        let a = heisenberg_action("q", "exp(-s/2)*y");
        let s0 = induced_base_structure(&a.groupoid).unwrap();
        let dirs = derived_orbit_directions(&a, &s0, &[rat_int(0)]).unwrap();
        assert_eq!(dirs.len(), 1);
        assert_eq!(dirs[0].components(), alloc::vec![e("x/2"), e("y/2"), e("z")]);

        let r = ReductionInput {
            x: alloc::vec![rat_int(0)],
            f: e("x^2+y^2"),
            slice: heisenberg_slice(&a.m),
            orbit_directions: None,
        };
        let red = reduce_contact(&a, &r, &cfg()).unwrap();
        let names: Vec<&str> = red.certificates.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            ["slice immersion", "C1 orbit invariance", "C2 orbit kernel", "C3 contact nondegeneracy"]
        );
        for (name, v) in &red.certificates {
            assert_eq!(v.status, Status::Verified, "{name}");
        }
        let ReducedKind::Contact(alpha) = &red.kind else { panic!("expected a contact form") };
        let expected =
            DiffForm::one_form(alpha.chart.clone(), alloc::vec![e("-2/(1+l^2)")]).unwrap();
        assert!(alpha.theta.equiv(&expected));

        assert_eq!(
            verify_reduction_consistency(&a, &r, &red, &Expr::one(), &cfg()).unwrap().status,
            Status::Verified
        );
        assert_eq!(
            verify_reduction_consistency(&a, &r, &red, &e("z"), &cfg()).unwrap().status,
            Status::Verified
        );
    }

    #[test]
    fn trivial_rescaling_fails_descent() {
        let a = heisenberg_action("q", "exp(-s/2)*y");
        let r = ReductionInput {
            x: alloc::vec![rat_int(0)],
            f: Expr::one(),
            slice: heisenberg_slice(&a.m),
            orbit_directions: None,
        };
        match reduce_contact(&a, &r, &cfg()) {
            Err(ActionError::DescentFailure { condition, verdict }) => {
                assert_eq!(condition, "C1 orbit invariance");
                assert_eq!(verdict.status, Status::Falsified);
            }
            other => panic!("expected a descent failure, got {other:?}"),
        }
    }

    #[test]
    fn leaf_type_gates_reduction_kind() {
        let a = heisenberg_action("q", "exp(-s/2)*y");
        let r = ReductionInput {
            x: alloc::vec![rat_int(0)],
            f: e("x^2+y^2"),
            slice: heisenberg_slice(&a.m),
            orbit_directions: None,
        };
        match reduce_lcs(&a, &r, &cfg()) {
            Err(ActionError::WrongLeafType { requested, found }) => {
                assert_eq!(requested, LeafType::Lcs);
                assert_eq!(found, LeafType::Contact);
            }
            other => panic!("expected a leaf type error, got {other:?}"),
        }

        let ab = abelian_right_mult_with_assoc();
        let pt = Chart::new("abpt", &[]);
        let r = ReductionInput {
            x: alloc::vec![rat_int(1)],
            f: Expr::one(),
            slice: mapv(&pt, &ab.m, &["1", "0", "0"]),
            orbit_directions: None,
        };
        match reduce_contact(&ab, &r, &cfg()) {
            Err(ActionError::WrongLeafType { requested, found }) => {
                assert_eq!(requested, LeafType::Contact);
                assert_eq!(found, LeafType::Lcs);
            }
            other => panic!("expected a leaf type error, got {other:?}"),
        }
    }

    #[test]
    fn abelian_zero_dimensional_reduction_is_vacuous() {
        let a = abelian_right_mult_with_assoc();
        assert_eq!(verify_groupoid_action(&a, &cfg()).unwrap().status, Status::Verified);
        assert_eq!(verify_contact_action(&a, &cfg()).unwrap().status, Status::Verified);

        let s0 = induced_base_structure(&a.groupoid).unwrap();
        assert!(s0.bivector.is_zero());
        assert!(s0.reeb_like.is_zero());
        let dirs = derived_orbit_directions(&a, &s0, &[rat_int(1)]).unwrap();
        let comps: Vec<Vec<Expr>> = dirs.iter().map(|d| d.components()).collect();
        assert_eq!(
            comps,
            alloc::vec![
                alloc::vec![e("0"), e("1"), e("-1")],
                alloc::vec![e("0"), e("0"), e("1")],
            ]
        );

        let pt = Chart::new("abpt", &[]);
        let r = ReductionInput {
            x: alloc::vec![rat_int(1)],
            f: Expr::one(),
            slice: mapv(&pt, &a.m, &["1", "0", "0"]),
            orbit_directions: None,
        };
        let red = reduce_lcs(&a, &r, &cfg()).unwrap();
        let names: Vec<&str> = red.certificates.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            [
                "slice immersion",
                "C1 orbit invariance",
                "C2 closed Lee form",
                "C3 lcs equation",
                "C4 nondegeneracy"
            ]
        );
        for (name, v) in &red.certificates {
            assert_eq!(v.status, Status::Verified, "{name}");
        }
        let ReducedKind::Lcs(l) = &red.kind else { panic!("expected an lcs structure") };
        assert!(l.two_form.is_zero());
        assert!(l.lee_form.is_zero());
    }

    fn additive_factor(n1: &str, n2: &str) -> AbelianFactor {
        let chart = Chart::new(&alloc::format!("fac_{n1}"), &[n1]);
        let pair = Chart::new(&alloc::format!("facp_{n1}"), &[n1, n2]);
        let mult = mapv(&pair, &chart, &[&alloc::format!("{n1}+{n2}")]);
        let inverse = mapv(&chart, &chart, &[&alloc::format!("-{n1}")]);
        AbelianFactor { chart, pair, mult, inverse }
    }

    fn mobius_factor(n1: &str, n2: &str) -> AbelianFactor {
        let chart = Chart::new(&alloc::format!("fac_{n1}"), &[n1]);
        let pair = Arc::new(Chart {
            name: alloc::format!("facp_{n1}"),
            coords: alloc::vec![n1.to_string(), n2.to_string()],
            constraints: alloc::vec![Constraint::nonzero(e(&alloc::format!("1-{n1}*{n2}")))],
        });
        let mult = mapv(&pair, &chart, &[&alloc::format!("({n1}+{n2})/(1-{n1}*{n2})")]);
        let inverse = mapv(&chart, &chart, &[&alloc::format!("-{n1}")]);
        AbelianFactor { chart, pair, mult, inverse }
    }

    #[test]
    fn translation_action_promotes_to_groupoid_action() {
        let m = Chart::new("line", &["z"]);
        let theta_m = DiffForm::one_form(m.clone(), alloc::vec![e("1")]).unwrap();
        let group = additive_factor("g", "g2");
        let time = additive_factor("r", "r2");
        let mg = Chart::new("line_zg", &["z", "g"]);
        let mt = Chart::new("line_zr", &["z", "r"]);
        let dual = Chart::new("line_xi", &["xi"]);
        let input = HamiltonianInput {
            m: m.clone(),
            theta_m,
            group,
            act_g: mapv(&mg, &m, &["z+g"]),
            moment: alloc::vec![e("1")],
            time,
            flow: mapv(&mt, &m, &["z+r"]),
            route: HamiltonianRoute::Unnormalized { dual },
        };
        let out = hamiltonian_to_action(&input, &cfg()).unwrap();
        assert_eq!(out.groupoid_axioms.status, Status::Verified);
        assert_eq!(out.action_axioms.status, Status::Verified);
        assert_eq!(out.multiplicativity.status, Status::Verified);
        assert_eq!(out.action.act.components, alloc::vec![e("z+g+r")]);
        let expected_theta = DiffForm::one_form(
            out.action.groupoid.gamma.clone(),
            alloc::vec![e("0"), e("xi"), e("1")],
        )
        .unwrap();
        assert!(out.action.groupoid.theta.equiv(&expected_theta));
        assert_eq!(verify_hamil_identity(&out.action, &cfg()).unwrap().status, Status::Verified);

        let mut bad = input.clone();
        bad.moment = alloc::vec![e("2")];
        assert!(matches!(
            hamiltonian_to_action(&bad, &cfg()),
            Err(ActionError::NotHamiltonian { generator: 0, .. })
        ));
    }

    #[test]
    fn cone_rotation_promotes_through_the_normalized_route() {
        let m = Arc::new(Chart {
            name: "cone".to_string(),
            coords: alloc::vec![
                "x1".to_string(),
                "y1".to_string(),
                "x2".to_string(),
                "y2".to_string()
            ],
            constraints: alloc::vec![Constraint::positive(e("x1^2+y1^2+x2^2+y2^2"))],
        });
        let theta_m = DiffForm::one_form(
            m.clone(),
            alloc::vec![e("-y1"), e("x1"), e("-y2"), e("x2")],
        )
        .unwrap();
        let group = mobius_factor("w", "w2");
        let time = additive_factor("r", "r2");
        let mg = Chart::new("cone_gw", &["x1", "y1", "x2", "y2", "w"]);
        let mt = Chart::new("cone_tr", &["x1", "y1", "x2", "y2", "r"]);
        let c = "(1-w^2)/(1+w^2)";
        let s = "2*w/(1+w^2)";
        let input = HamiltonianInput {
            m: m.clone(),
            theta_m,
            group,
            act_g: mapv(
                &mg,
                &m,
                &[
                    &alloc::format!("({c})*x1-({s})*y1"),
                    &alloc::format!("({s})*x1+({c})*y1"),
                    &alloc::format!("({c})*x2-({s})*y2"),
                    &alloc::format!("({s})*x2+({c})*y2"),
                ],
            ),
            moment: alloc::vec![e("2*(x1^2+y1^2+x2^2+y2^2)")],
            time,
            flow: mapv(
                &mt,
                &m,
                &["exp(r/2)*x1", "exp(r/2)*y1", "exp(r/2)*x2", "exp(r/2)*y2"],
            ),
            route: HamiltonianRoute::Normalized {
                anchor: alloc::vec![rat_int(1), rat_int(0), rat_int(0), rat_int(0)],
            },
        };
        let out = hamiltonian_to_action(&input, &cfg()).unwrap();
        assert_eq!(out.groupoid_axioms.status, Status::Verified);
        assert_eq!(out.action_axioms.status, Status::Verified);
        assert_eq!(out.multiplicativity.status, Status::Verified);
        let expected_theta = DiffForm::one_form(
            out.action.groupoid.gamma.clone(),
            alloc::vec![e("1/(1+w^2)"), e("0")],
        )
        .unwrap();
        assert!(out.action.groupoid.theta.equiv(&expected_theta));
    }

    /// Rotations of the round sphere in a stereographic chart. The composed
    /// action map is entered in closed form (same block angles add under
    /// the tangent half angle sum); the multiplicative form is derived by
    /// restricting the action pullback to the section over the origin,
    /// where the base leg pulls back to zero.
    #[test]
    fn sphere_rotation_reduces_to_lcs() {
        let m = Chart::new("sst", &["a", "b", "c"]);
        let r4 = Chart::new("sr4", &["v1", "v2", "v3", "v4"]);
        let rho = "(a^2+b^2+c^2)";
        let psi = |src: &Arc<Chart>| {
            mapv(
                src,
                &r4,
                &[
                    &alloc::format!("2*a/(1+{rho})"),
                    &alloc::format!("2*b/(1+{rho})"),
                    &alloc::format!("2*c/(1+{rho})"),
                    &alloc::format!("(1-{rho})/(1+{rho})"),
                ],
            )
        };
        let stereo = mapv(&r4, &m, &["v1/(1+v4)", "v2/(1+v4)", "v3/(1+v4)"]);
        let theta_std = DiffForm::one_form(
            r4.clone(),
            alloc::vec![e("-v2"), e("v1"), e("-v4"), e("v3")],
        )
        .unwrap();
        let theta_m = theta_std.pullback(&psi(&m)).unwrap();

        // The rotation generator pairs with the constant moment 2.
        let mg = Chart::new("sst_gw", &["a", "b", "c", "w"]);
        let cw = "(1-w^2)/(1+w^2)";
        let sw = "2*w/(1+w^2)";
        let r4w = Chart::new("sr4_w", &["v1", "v2", "v3", "v4", "w"]);
        let psi_w = SmoothMap::new(
            mg.clone(),
            r4w.clone(),
            psi(&mg).components.iter().cloned().chain([Expr::coord("w")]).collect(),
        )
        .unwrap();
        let rw = mapv(
            &r4w,
            &r4,
            &[
                &alloc::format!("({cw})*v1-({sw})*v2"),
                &alloc::format!("({sw})*v1+({cw})*v2"),
                &alloc::format!("({cw})*v3-({sw})*v4"),
                &alloc::format!("({sw})*v3+({cw})*v4"),
            ],
        );
        let act_g = stereo.compose(&rw).unwrap().compose(&psi_w).unwrap();
        let unit_sub: BTreeMap<String, Expr> =
            BTreeMap::from([("w".to_string(), Expr::zero())]);
        let mut gen = Vec::new();
        for comp in &act_g.components {
            gen.push(comp.differentiate("w").substitute(&unit_sub).unwrap());
        }
        let field = MultiVector::vector_field(m.clone(), gen).unwrap();
        assert!(theta_m.pair(&field).unwrap().sub(&e("2")).is_zero_expr());

        // Normalize by the moment and build the symmetry groupoid over a
        // point, with a second tangent half angle factor as the time.
        let theta = theta_m.scale_rat(1, 2);
        let base = Chart::new("sst_base", &[]);
        let gamma = Chart::new("sst_sym", &["w", "p"]);
        let fp = Arc::new(Chart {
            name: "sst_sympair".to_string(),
            coords: alloc::vec![
                "w".to_string(),
                "p".to_string(),
                "w2".to_string(),
                "p2".to_string()
            ],
            constraints: alloc::vec![
                Constraint::nonzero(e("1-w*w2")),
                Constraint::nonzero(e("1-p*p2")),
            ],
        });
        let afp = Arc::new(Chart {
            name: "sst_afp".to_string(),
            coords: alloc::vec![
                "a".to_string(),
                "b".to_string(),
                "c".to_string(),
                "w".to_string(),
                "p".to_string()
            ],
            constraints: Vec::new(),
        });

        // The action in closed form: both factors rotate the same blocks,
        // so the angles combine by the half angle sum.
        let u = "((w+p)/(1-w*p))";
        let cu = alloc::format!("(1-{u}^2)/(1+{u}^2)");
        let su = alloc::format!("2*{u}/(1+{u}^2)");
        let r4u = Chart::new("sr4_u", &["v1", "v2", "v3", "v4", "w", "p"]);
        let psi_u = SmoothMap::new(
            afp.clone(),
            r4u.clone(),
            psi(&afp)
                .components
                .iter()
                .cloned()
                .chain([Expr::coord("w"), Expr::coord("p")])
                .collect(),
        )
        .unwrap();
        let ru = mapv(
            &r4u,
            &r4,
            &[
                &alloc::format!("({cu})*v1-({su})*v2"),
                &alloc::format!("({su})*v1+({cu})*v2"),
                &alloc::format!("({cu})*v3-({su})*v4"),
                &alloc::format!("({su})*v3+({cu})*v4"),
            ],
        );
        let act = stereo.compose(&ru).unwrap().compose(&psi_u).unwrap();

        let sigma = SmoothMap::new(
            gamma.clone(),
            afp.clone(),
            alloc::vec![e("0"), e("0"), e("0"), e("w"), e("p")],
        )
        .unwrap();
        let theta_gamma = theta.pullback(&act.compose(&sigma).unwrap()).unwrap();
        let expected_theta = DiffForm::one_form(
            gamma.clone(),
            alloc::vec![e("1/(1+w^2)"), e("1/(1+p^2)")],
        )
        .unwrap();
        assert!(theta_gamma.equiv(&expected_theta));

        let groupoid = GroupoidChart {
            gamma: gamma.clone(),
            base: base.clone(),
            source: SmoothMap::new(gamma.clone(), base.clone(), Vec::new()).unwrap(),
            target: SmoothMap::new(gamma.clone(), base.clone(), Vec::new()).unwrap(),
            unit: SmoothMap::new(base.clone(), gamma.clone(), alloc::vec![e("0"), e("0")])
                .unwrap(),
            inverse: mapv(&gamma, &gamma, &["-w", "-p"]),
            fp: fp.clone(),
            pr1: mapv(&fp, &gamma, &["w", "p"]),
            pr2: mapv(&fp, &gamma, &["w2", "p2"]),
            mult: mapv(&fp, &gamma, &["(w+w2)/(1-w*w2)", "(p+p2)/(1-p*p2)"]),
            left_unit_section: mapv(&gamma, &fp, &["0", "0", "w", "p"]),
            right_unit_section: mapv(&gamma, &fp, &["w", "p", "0", "0"]),
            theta: theta_gamma,
            f: Expr::one(),
            f_pair: None,
        };
        assert_eq!(verify_groupoid(&groupoid, &cfg()).unwrap().status, Status::Verified);

        let a = ActionChart {
            groupoid,
            m: m.clone(),
            theta_m: theta,
            moment: SmoothMap::new(m.clone(), base, Vec::new()).unwrap(),
            afp: afp.clone(),
            pr_m: mapv(&afp, &m, &["a", "b", "c"]),
            pr_gamma: mapv(&afp, &gamma, &["w", "p"]),
            act,
            unit_section: mapv(&m, &afp, &["a", "b", "c", "0", "0"]),
            assoc: None,
        };
        let v = verify_groupoid_action(&a, &cfg()).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
        assert!(v.detail.unwrap().contains("associativity"));

        // Reduction across the zero dimensional base: every point is lcs
        // and the only derived orbit direction is the Reeb field.
        let s0 = induced_base_structure(&a.groupoid).unwrap();
        let dirs = derived_orbit_directions(&a, &s0, &[]).unwrap();
        assert_eq!(dirs.len(), 1);
        assert_eq!(dirs[0], a.jacobi_m().unwrap().reeb_like);

        let sl = Chart::new("ssl", &["u", "v"]);
        let n = e("1+u^2+v^2");
        let inv_sqrt = n.pow_rat(&rat(-1, 2)).unwrap();
        let slice = SmoothMap::new(
            sl.clone(),
            m.clone(),
            alloc::vec![
                Expr::coord("u").mul(&inv_sqrt),
                Expr::coord("v").mul(&inv_sqrt),
                inv_sqrt.clone(),
            ],
        )
        .unwrap();
        let r = ReductionInput {
            x: Vec::new(),
            f: Expr::one(),
            slice,
            orbit_directions: None,
        };
        let red = reduce_lcs(&a, &r, &cfg()).unwrap();
        for (name, v) in &red.certificates {
            assert_eq!(v.status, Status::Verified, "{name}");
        }
        let ReducedKind::Lcs(l) = &red.kind else { panic!("expected an lcs structure") };
        assert!(l.lee_form.is_zero());
        let expected = DiffForm::from_terms(
            sl.clone(),
            2,
            alloc::vec![(alloc::vec![0u8, 1u8], e("-1/(1+u^2+v^2)^2"))],
        )
        .unwrap();
        assert!(l.two_form.equiv(&expected));
    }

    #[test]
    fn cosphere_scaling_suite() {
        let g = r3_groupoid();
        let m = Arc::new(Chart {
            name: "cosph".to_string(),
            coords: alloc::vec!["x1".to_string(), "y1".to_string(), "z".to_string()],
            constraints: alloc::vec![Constraint::positive(e("y1"))],
        });
        let theta_m =
            DiffForm::one_form(m.clone(), alloc::vec![e("y1"), e("0"), e("1")]).unwrap();
        let afp = Chart::new("cosph_afp", &["x1", "y1", "z", "q", "s"]);
        let a = ActionChart {
            groupoid: g.clone(),
            m: m.clone(),
            theta_m,
            moment: mapv(&m, &g.base, &["z"]),
            afp: afp.clone(),
            pr_m: mapv(&afp, &m, &["x1", "y1", "z"]),
            pr_gamma: mapv(&afp, &g.gamma, &["z", "q", "s"]),
            act: mapv(&afp, &m, &["x1", "exp(-s)*y1", "q"]),
            unit_section: mapv(&m, &afp, &["x1", "y1", "z", "z", "0"]),
            assoc: None,
        };
        assert_eq!(verify_contact_action(&a, &cfg()).unwrap().status, Status::Verified);
        assert_eq!(verify_hamil_identity(&a, &cfg()).unwrap().status, Status::Verified);
        assert_eq!(
            verify_f_multiplicative(&a, &e("y1"), None, Some(&[rat_int(0)]), &cfg())
                .unwrap()
                .status,
            Status::Verified
        );

        let u = opaque_scalar("u", &a.groupoid.base);
        let x = hamiltonian_vf(&a.jacobi_m().unwrap(), &a.moment.pull_scalar(&u).unwrap())
            .unwrap();
        let uz = Expr::jet("u", alloc::vec![0], alloc::vec![Expr::coord("z")]);
        let upz = Expr::jet("u", alloc::vec![1], alloc::vec![Expr::coord("z")]);
        assert_eq!(
            x.components(),
            alloc::vec![Expr::zero(), Expr::coord("y1").mul(&upz), uz]
        );

        let sl = Chart::new("cosph_sl", &["x1"]);
        let r = ReductionInput {
            x: alloc::vec![rat_int(0)],
            f: e("y1"),
            slice: mapv(&sl, &m, &["x1", "1", "0"]),
            orbit_directions: None,
        };
        let red = reduce_contact(&a, &r, &cfg()).unwrap();
        for (name, v) in &red.certificates {
            assert_eq!(v.status, Status::Verified, "{name}");
        }
        let ReducedKind::Contact(alpha) = &red.kind else { panic!("expected a contact form") };
        let expected = DiffForm::one_form(sl.clone(), alloc::vec![e("-1")]).unwrap();
        assert!(alpha.theta.equiv(&expected));
    }
}
