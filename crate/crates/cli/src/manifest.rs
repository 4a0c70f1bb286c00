//! Manifest ingestion: a JSON document names charts, forms, structures,
//! groupoids, actions, reductions and orbit computations, and lists the
//! tasks to run against them. Loading validates the full object graph, so
//! every dangling reference is reported by name before anything executes.
//!
//! All scalar entries are expression strings in the grammar accepted by
//! `jacored_core::expr::parse_expr`; points and levels are rational strings
//! such as `"3/5"`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use jacored_core::action::{
    AbelianFactor, ActionChart, AssocData, HamiltonianInput, HamiltonianRoute, ReductionInput,
};
use jacored_core::expr::parse_expr;
use jacored_core::groupoid::GroupoidChart;
use jacored_core::jacobi::{lie_poisson, ContactForm, JacobiStructure, LcsStructure};
use jacored_core::map::SmoothMap;
use jacored_core::tensor::{DiffForm, MultiVector};
use jacored_core::{Chart, Constraint, Expr, ExprError, Rat};

pub const VERSION_TAG: &str = "1";

/// Errors surfaced while reading or validating a manifest. Every variant
/// maps to process exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read manifest: {0}")]
    Io(String),
    /// Carries the serde line/column position of the syntax error.
    #[error("manifest parse error: {0}")]
    Parse(String),
    #[error("unknown manifest version {found:?}; this build reads version \"{VERSION_TAG}\"")]
    Version { found: String },
    #[error("duplicate {kind} name {name:?}")]
    Duplicate { kind: &'static str, name: String },
    #[error("dangling reference: {referrer} refers to unknown {kind} {name:?}")]
    Dangling { kind: &'static str, name: String, referrer: String },
    #[error("invalid {context}: {message}")]
    Invalid { context: String, message: String },
}

impl InputError {
    pub fn invalid(context: impl fmt::Display, message: impl fmt::Display) -> Self {
        InputError::Invalid { context: context.to_string(), message: message.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestDoc {
    pub version: String,
    #[serde(default)]
    pub charts: Vec<ChartDoc>,
    #[serde(default)]
    pub forms: Vec<FormDoc>,
    #[serde(default)]
    pub structures: Vec<StructureDoc>,
    #[serde(default)]
    pub groupoids: Vec<GroupoidDoc>,
    #[serde(default)]
    pub actions: Vec<ActionDoc>,
    #[serde(default)]
    pub reductions: Vec<ReductionDoc>,
    #[serde(default)]
    pub orbits: Vec<OrbitDoc>,
    #[serde(default)]
    pub tasks: Vec<TaskDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDoc {
    pub name: String,
    pub coords: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<ConstraintDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub kind: ConstraintKindDoc,
    pub expr: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKindDoc {
    Positive,
    Nonzero,
}

/// Antisymmetric tensor serialization: strictly increasing index tuples
/// paired with coefficient expressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormDoc {
    pub name: String,
    pub chart: String,
    pub degree: usize,
    pub terms: Vec<(Vec<u8>, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureDoc {
    /// Bivector terms plus the components of the vector part.
    Jacobi { name: String, chart: String, bivector: Vec<(Vec<u8>, String)>, reeb_like: Vec<String> },
    ContactForm { name: String, chart: String, theta: String },
    Lcs { name: String, chart: String, two_form: String, lee_form: String },
    /// Structure constants as rational triples `(i, j, l, c)` meaning
    /// `[e_i, e_j] = sum_l c e_l`; omitted entries are zero.
    LieAlgebra { name: String, chart: String, constants: Vec<(usize, usize, usize, String)> },
}

impl StructureDoc {
    pub fn name(&self) -> &str {
        match self {
            StructureDoc::Jacobi { name, .. }
            | StructureDoc::ContactForm { name, .. }
            | StructureDoc::Lcs { name, .. }
            | StructureDoc::LieAlgebra { name, .. } => name,
        }
    }
}

/// All maps are coordinate expression lists; source and target charts are
/// fixed by the slot (e.g. `mult` maps the fiber product to the arrow chart).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupoidDoc {
    pub name: String,
    pub gamma: String,
    pub base: String,
    pub fp: String,
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub unit: Vec<String>,
    pub inverse: Vec<String>,
    pub pr1: Vec<String>,
    pub pr2: Vec<String>,
    pub mult: Vec<String>,
    pub left_unit_section: Vec<String>,
    pub right_unit_section: Vec<String>,
    /// Reference to a degree-1 form on `gamma`.
    pub theta: String,
    pub f: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_pair: Option<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionDoc {
    GroupoidAction {
        name: String,
        groupoid: String,
        m: String,
        /// Reference to a degree-1 form on `m`.
        theta_m: String,
        moment: Vec<String>,
        afp: String,
        pr_m: Vec<String>,
        pr_gamma: Vec<String>,
        act: Vec<String>,
        unit_section: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        assoc: Option<AssocDoc>,
    },
    Hamiltonian {
        name: String,
        m: String,
        theta_m: String,
        group: FactorDoc,
        /// Components of the group action on the layout `m coords ++ group coords`.
        act_g: Vec<String>,
        moment: Vec<String>,
        time: FactorDoc,
        /// Components of the flow on the layout `m coords ++ time coord`.
        flow: Vec<String>,
        route: RouteDoc,
    },
}

impl ActionDoc {
    pub fn name(&self) -> &str {
        match self {
            ActionDoc::GroupoidAction { name, .. } | ActionDoc::Hamiltonian { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssocDoc {
    pub triples: String,
    pub first: Vec<String>,
    pub pair: Vec<String>,
    pub after: Vec<String>,
    pub joined: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDoc {
    pub chart: String,
    /// Chart extending `chart` by a fresh second copy of its coordinates.
    pub pair: String,
    pub mult: Vec<String>,
    pub inverse: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "route", rename_all = "snake_case", deny_unknown_fields)]
pub enum RouteDoc {
    Normalized { anchor: Vec<String> },
    Unnormalized { dual: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKindDoc {
    Contact,
    Lcs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionDoc {
    pub name: String,
    pub action: String,
    pub kind: ReductionKindDoc,
    /// Rational base point.
    pub x: Vec<String>,
    /// Nowhere zero rescaling function on the acted chart.
    pub f: String,
    pub slice: SliceDoc,
    /// Orbit direction fields on the acted chart; derived when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceDoc {
    pub source: String,
    pub components: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrbitDoc {
    /// First return time of the rational ray through `xi`.
    T0 { name: String, xi: Vec<String> },
    /// Prequantization report of an integer direction vector.
    Prequant { name: String, d: Vec<i64> },
    /// Lens invariant of a diagonal torus weight pair.
    U2Lens { name: String, m: i64, n: i64 },
}

impl OrbitDoc {
    pub fn name(&self) -> &str {
        match self {
            OrbitDoc::T0 { name, .. }
            | OrbitDoc::Prequant { name, .. }
            | OrbitDoc::U2Lens { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDoc {
    pub name: String,
    pub operation: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
}

/// A named verification structure resolved from its manifest block.
#[derive(Clone, Debug)]
pub enum Structure {
    Jacobi(JacobiStructure),
    Contact(ContactForm),
    Lcs(LcsStructure),
}

impl Structure {
    /// The underlying Jacobi pair, for bracket and verification tasks.
    pub fn jacobi(&self) -> Result<JacobiStructure, ExprError> {
        match self {
            Structure::Jacobi(j) => Ok(j.clone()),
            Structure::Contact(c) => jacored_core::jacobi::contact_to_jacobi(c),
            Structure::Lcs(_) => Err(ExprError::Unsupported(
                "an lcs structure does not define a Jacobi pair in this runner".into(),
            )),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        match self {
            Structure::Jacobi(j) => &j.chart,
            Structure::Contact(c) => &c.chart,
            Structure::Lcs(l) => &l.chart,
        }
    }
}

#[derive(Clone, Debug)]
pub enum ActionEntry {
    Action(ActionChart),
    Hamiltonian(HamiltonianInput),
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub action: String,
    pub kind: ReductionKindDoc,
    pub input: ReductionInput,
}

/// A fully resolved manifest: every reference checked, every expression
/// parsed, every map built on its declared charts.
#[derive(Clone, Debug)]
pub struct Manifest {
    pub doc: ManifestDoc,
    pub charts: BTreeMap<String, Arc<Chart>>,
    pub forms: BTreeMap<String, DiffForm>,
    pub structures: BTreeMap<String, Structure>,
    pub groupoids: BTreeMap<String, GroupoidChart>,
    pub actions: BTreeMap<String, ActionEntry>,
    pub reductions: BTreeMap<String, Reduction>,
    pub orbits: BTreeMap<String, OrbitDoc>,
}

impl Manifest {
    pub fn tasks(&self) -> &[TaskDoc] {
        &self.doc.tasks
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest, InputError> {
    let text = fs::read_to_string(path)
        .map_err(|e| InputError::Io(format!("{}: {e}", path.display())))?;
    manifest_from_str(&text)
}

pub fn manifest_from_str(text: &str) -> Result<Manifest, InputError> {
    let doc: ManifestDoc =
        serde_json::from_str(text).map_err(|e| InputError::Parse(e.to_string()))?;
    resolve(doc)
}

pub fn parse_in(context: &str, src: &str) -> Result<Expr, InputError> {
    parse_expr(src).map_err(|e| InputError::invalid(context, format!("{src:?}: {e}")))
}

pub fn parse_rat(context: &str, src: &str) -> Result<Rat, InputError> {
    Rat::from_str(src)
        .map_err(|e| InputError::invalid(context, format!("{src:?} is not rational: {e}")))
}

pub fn parse_point(context: &str, src: &[String]) -> Result<Vec<Rat>, InputError> {
    src.iter().map(|s| parse_rat(context, s)).collect()
}

fn chart_ref<'a>(
    charts: &'a BTreeMap<String, Arc<Chart>>,
    name: &str,
    referrer: &str,
) -> Result<&'a Arc<Chart>, InputError> {
    charts.get(name).ok_or_else(|| InputError::Dangling {
        kind: "chart",
        name: name.to_string(),
        referrer: referrer.to_string(),
    })
}

fn form_ref<'a>(
    forms: &'a BTreeMap<String, DiffForm>,
    name: &str,
    referrer: &str,
    chart: &Arc<Chart>,
    degree: usize,
) -> Result<&'a DiffForm, InputError> {
    let f = forms.get(name).ok_or_else(|| InputError::Dangling {
        kind: "form",
        name: name.to_string(),
        referrer: referrer.to_string(),
    })?;
    if f.chart != *chart || f.degree != degree {
        return Err(InputError::invalid(
            referrer,
            format!("form {name:?} must live on chart {:?} with degree {degree}", chart.name),
        ));
    }
    Ok(f)
}

fn build_map(
    context: &str,
    source: &Arc<Chart>,
    target: &Arc<Chart>,
    comps: &[String],
) -> Result<SmoothMap, InputError> {
    let components = comps
        .iter()
        .map(|c| parse_in(context, c))
        .collect::<Result<Vec<Expr>, InputError>>()?;
    SmoothMap::new(source.clone(), target.clone(), components)
        .map_err(|e| InputError::invalid(context, e))
}

fn insert_unique<T>(
    table: &mut BTreeMap<String, T>,
    kind: &'static str,
    name: &str,
    value: T,
) -> Result<(), InputError> {
    if table.insert(name.to_string(), value).is_some() {
        return Err(InputError::Duplicate { kind, name: name.to_string() });
    }
    Ok(())
}

fn resolve_chart(doc: &ChartDoc) -> Result<Arc<Chart>, InputError> {
    let context = format!("chart {:?}", doc.name);
    let constraints = doc
        .constraints
        .iter()
        .map(|c| {
            let e = parse_in(&context, &c.expr)?;
            Ok(match c.kind {
                ConstraintKindDoc::Positive => Constraint::positive(e),
                ConstraintKindDoc::Nonzero => Constraint::nonzero(e),
            })
        })
        .collect::<Result<Vec<Constraint>, InputError>>()?;
    Ok(Arc::new(Chart {
        name: doc.name.clone(),
        coords: doc.coords.clone(),
        constraints,
    }))
}

fn parse_terms(context: &str, terms: &[(Vec<u8>, String)]) -> Result<Vec<(Vec<u8>, Expr)>, InputError> {
    terms
        .iter()
        .map(|(k, v)| Ok((k.clone(), parse_in(context, v)?)))
        .collect()
}

fn resolve_form(
    charts: &BTreeMap<String, Arc<Chart>>,
    doc: &FormDoc,
) -> Result<DiffForm, InputError> {
    let context = format!("form {:?}", doc.name);
    let chart = chart_ref(charts, &doc.chart, &context)?;
    let terms = parse_terms(&context, &doc.terms)?;
    DiffForm::from_terms(chart.clone(), doc.degree, terms)
        .map_err(|e| InputError::invalid(&context, e))
}

fn resolve_structure(
    charts: &BTreeMap<String, Arc<Chart>>,
    forms: &BTreeMap<String, DiffForm>,
    doc: &StructureDoc,
) -> Result<Structure, InputError> {
    match doc {
        StructureDoc::Jacobi { name, chart, bivector, reeb_like } => {
            let context = format!("structure {name:?}");
            let chart = chart_ref(charts, chart, &context)?;
            let terms = parse_terms(&context, bivector)?;
            let bivector = MultiVector::from_terms(chart.clone(), 2, terms)
                .map_err(|e| InputError::invalid(&context, e))?;
            let comps = reeb_like
                .iter()
                .map(|c| parse_in(&context, c))
                .collect::<Result<Vec<Expr>, InputError>>()?;
            let reeb = MultiVector::vector_field(chart.clone(), comps)
                .map_err(|e| InputError::invalid(&context, e))?;
            let j = JacobiStructure::new(chart.clone(), bivector, reeb)
                .map_err(|e| InputError::invalid(&context, e))?;
            Ok(Structure::Jacobi(j))
        }
        StructureDoc::ContactForm { name, chart, theta } => {
            let context = format!("structure {name:?}");
            let chart = chart_ref(charts, chart, &context)?;
            let theta = form_ref(forms, theta, &context, chart, 1)?;
            Ok(Structure::Contact(ContactForm { chart: chart.clone(), theta: theta.clone() }))
        }
        StructureDoc::Lcs { name, chart, two_form, lee_form } => {
            let context = format!("structure {name:?}");
            let chart = chart_ref(charts, chart, &context)?;
            let two_form = form_ref(forms, two_form, &context, chart, 2)?.clone();
            let lee_form = form_ref(forms, lee_form, &context, chart, 1)?.clone();
            Ok(Structure::Lcs(LcsStructure { chart: chart.clone(), two_form, lee_form }))
        }
        StructureDoc::LieAlgebra { name, chart, constants } => {
            let context = format!("structure {name:?}");
            let chart = chart_ref(charts, chart, &context)?;
            let n = chart.dim();
            let mut c = vec![vec![vec![Rat::from_integer(0.into()); n]; n]; n];
            for (i, j, l, q) in constants {
                if *i >= n || *j >= n || *l >= n {
                    return Err(InputError::invalid(
                        &context,
                        format!("constant index ({i},{j},{l}) out of range for dimension {n}"),
                    ));
                }
                c[*i][*j][*l] = parse_rat(&context, q)?;
            }
            let j = lie_poisson(chart.clone(), &c).map_err(|e| InputError::invalid(&context, e))?;
            Ok(Structure::Jacobi(j))
        }
    }
}

fn resolve_groupoid(
    charts: &BTreeMap<String, Arc<Chart>>,
    forms: &BTreeMap<String, DiffForm>,
    doc: &GroupoidDoc,
) -> Result<GroupoidChart, InputError> {
    let context = format!("groupoid {:?}", doc.name);
    let gamma = chart_ref(charts, &doc.gamma, &context)?.clone();
    let base = chart_ref(charts, &doc.base, &context)?.clone();
    let fp = chart_ref(charts, &doc.fp, &context)?.clone();
    let theta = form_ref(forms, &doc.theta, &context, &gamma, 1)?.clone();
    let f = parse_in(&context, &doc.f)?;
    let f_pair = match &doc.f_pair {
        None => None,
        Some((l, r)) => Some((parse_in(&context, l)?, parse_in(&context, r)?)),
    };
    Ok(GroupoidChart {
        source: build_map(&context, &gamma, &base, &doc.source)?,
        target: build_map(&context, &gamma, &base, &doc.target)?,
        unit: build_map(&context, &base, &gamma, &doc.unit)?,
        inverse: build_map(&context, &gamma, &gamma, &doc.inverse)?,
        pr1: build_map(&context, &fp, &gamma, &doc.pr1)?,
        pr2: build_map(&context, &fp, &gamma, &doc.pr2)?,
        mult: build_map(&context, &fp, &gamma, &doc.mult)?,
        left_unit_section: build_map(&context, &gamma, &fp, &doc.left_unit_section)?,
        right_unit_section: build_map(&context, &gamma, &fp, &doc.right_unit_section)?,
        theta,
        f,
        f_pair,
        gamma,
        base,
        fp,
    })
}

fn resolve_factor(
    charts: &BTreeMap<String, Arc<Chart>>,
    context: &str,
    doc: &FactorDoc,
) -> Result<AbelianFactor, InputError> {
    let chart = chart_ref(charts, &doc.chart, context)?.clone();
    let pair = chart_ref(charts, &doc.pair, context)?.clone();
    Ok(AbelianFactor {
        mult: build_map(context, &pair, &chart, &doc.mult)?,
        inverse: build_map(context, &chart, &chart, &doc.inverse)?,
        chart,
        pair,
    })
}

/// Layout chart `left coords ++ right coords` for the group-action and flow
/// maps of a Hamiltonian block, mirroring how such inputs are written by
/// hand: plain product coordinates, constraints carried by the factors.
fn layout_chart(name: String, left: &Chart, right: &Chart) -> Arc<Chart> {
    let mut coords = left.coords.clone();
    coords.extend(right.coords.iter().cloned());
    let mut constraints = left.constraints.clone();
    constraints.extend(right.constraints.iter().cloned());
    Arc::new(Chart { name, coords, constraints })
}

fn resolve_action(
    charts: &BTreeMap<String, Arc<Chart>>,
    forms: &BTreeMap<String, DiffForm>,
    groupoids: &BTreeMap<String, GroupoidChart>,
    doc: &ActionDoc,
) -> Result<ActionEntry, InputError> {
    match doc {
        ActionDoc::GroupoidAction {
            name,
            groupoid,
            m,
            theta_m,
            moment,
            afp,
            pr_m,
            pr_gamma,
            act,
            unit_section,
            assoc,
        } => {
            let context = format!("action {name:?}");
            let g = groupoids
                .get(groupoid)
                .ok_or_else(|| InputError::Dangling {
                    kind: "groupoid",
                    name: groupoid.clone(),
                    referrer: context.clone(),
                })?
                .clone();
            let m = chart_ref(charts, m, &context)?.clone();
            let theta_m = form_ref(forms, theta_m, &context, &m, 1)?.clone();
            let afp = chart_ref(charts, afp, &context)?.clone();
            let assoc = match assoc {
                None => None,
                Some(a) => {
                    let triples = chart_ref(charts, &a.triples, &context)?.clone();
                    Some(AssocData {
                        first: build_map(&context, &triples, &afp, &a.first)?,
                        pair: build_map(&context, &triples, &g.fp, &a.pair)?,
                        after: build_map(&context, &triples, &afp, &a.after)?,
                        joined: build_map(&context, &triples, &afp, &a.joined)?,
                        triples,
                    })
                }
            };
            Ok(ActionEntry::Action(ActionChart {
                moment: build_map(&context, &m, &g.base, moment)?,
                pr_m: build_map(&context, &afp, &m, pr_m)?,
                pr_gamma: build_map(&context, &afp, &g.gamma, pr_gamma)?,
                act: build_map(&context, &afp, &m, act)?,
                unit_section: build_map(&context, &m, &afp, unit_section)?,
                groupoid: g,
                m,
                theta_m,
                afp,
                assoc,
            }))
        }
        ActionDoc::Hamiltonian { name, m, theta_m, group, act_g, moment, time, flow, route } => {
            let context = format!("action {name:?}");
            let m = chart_ref(charts, m, &context)?.clone();
            let theta_m = form_ref(forms, theta_m, &context, &m, 1)?.clone();
            let group = resolve_factor(charts, &context, group)?;
            let time = resolve_factor(charts, &context, time)?;
            let mg = layout_chart(format!("{name}.actg"), &m, &group.chart);
            let mt = layout_chart(format!("{name}.flow"), &m, &time.chart);
            let moment = moment
                .iter()
                .map(|c| parse_in(&context, c))
                .collect::<Result<Vec<Expr>, InputError>>()?;
            let route = match route {
                RouteDoc::Normalized { anchor } => {
                    HamiltonianRoute::Normalized { anchor: parse_point(&context, anchor)? }
                }
                RouteDoc::Unnormalized { dual } => {
                    HamiltonianRoute::Unnormalized { dual: chart_ref(charts, dual, &context)?.clone() }
                }
            };
            Ok(ActionEntry::Hamiltonian(HamiltonianInput {
                act_g: build_map(&context, &mg, &m, act_g)?,
                flow: build_map(&context, &mt, &m, flow)?,
                m,
                theta_m,
                group,
                moment,
                time,
                route,
            }))
        }
    }
}

fn resolve_reduction(
    charts: &BTreeMap<String, Arc<Chart>>,
    actions: &BTreeMap<String, ActionEntry>,
    doc: &ReductionDoc,
) -> Result<Reduction, InputError> {
    let context = format!("reduction {:?}", doc.name);
    let entry = actions.get(&doc.action).ok_or_else(|| InputError::Dangling {
        kind: "action",
        name: doc.action.clone(),
        referrer: context.clone(),
    })?;
    let ActionEntry::Action(action) = entry else {
        return Err(InputError::invalid(
            &context,
            "reductions apply to groupoid_action entries, not hamiltonian blocks",
        ));
    };
    let x = parse_point(&context, &doc.x)?;
    if x.len() != action.groupoid.base.dim() {
        return Err(InputError::invalid(
            &context,
            format!("base point has {} entries, chart needs {}", x.len(), action.groupoid.base.dim()),
        ));
    }
    let f = parse_in(&context, &doc.f)?;
    let slice_source = chart_ref(charts, &doc.slice.source, &context)?;
    let slice = build_map(&context, slice_source, &action.m, &doc.slice.components)?;
    let orbit_directions = match &doc.directions {
        None => None,
        Some(dirs) => {
            let mut out = Vec::new();
            for comps in dirs {
                let comps = comps
                    .iter()
                    .map(|c| parse_in(&context, c))
                    .collect::<Result<Vec<Expr>, InputError>>()?;
                out.push(
                    MultiVector::vector_field(action.m.clone(), comps)
                        .map_err(|e| InputError::invalid(&context, e))?,
                );
            }
            Some(out)
        }
    };
    Ok(Reduction {
        action: doc.action.clone(),
        kind: doc.kind,
        input: ReductionInput { x, f, slice, orbit_directions },
    })
}

/// Operations a task may name, with the object table each one draws from.
pub const OPERATIONS: &[&str] = &[
    "verify_groupoid",
    "contact_multiplicativity",
    "convention_flfr",
    "anchor_annihilation",
    "rescale_reverify",
    "verify_jacobi",
    "verify_contact",
    "verify_lcs",
    "casimir",
    "verify_action",
    "contact_action",
    "hamil_identity",
    "f_multiplicative",
    "locally_free",
    "promote",
    "reduce",
    "orbit",
];

fn validate_task(man: &Manifest, t: &TaskDoc) -> Result<(), InputError> {
    let context = format!("task {:?}", t.name);
    let dangling = |kind: &'static str| InputError::Dangling {
        kind,
        name: t.target.clone(),
        referrer: context.clone(),
    };
    let arity = |want: usize, what: &str| {
        if t.args.len() == want {
            Ok(())
        } else {
            Err(InputError::invalid(&context, format!("operation needs {what}")))
        }
    };
    match t.operation.as_str() {
        "verify_groupoid" | "contact_multiplicativity" | "convention_flfr"
        | "anchor_annihilation" => {
            man.groupoids.get(&t.target).ok_or_else(|| dangling("groupoid"))?;
            arity(0, "no arguments")
        }
        "rescale_reverify" => {
            man.groupoids.get(&t.target).ok_or_else(|| dangling("groupoid"))?;
            arity(1, "one argument: the rescaling expression on the base")
        }
        "verify_jacobi" => {
            let s = man.structures.get(&t.target).ok_or_else(|| dangling("structure"))?;
            if matches!(s, Structure::Lcs(_)) {
                return Err(InputError::invalid(
                    &context,
                    "verify_jacobi applies to jacobi, lie_algebra or contact_form structures",
                ));
            }
            arity(0, "no arguments")
        }
        "verify_contact" => {
            let s = man.structures.get(&t.target).ok_or_else(|| dangling("structure"))?;
            if !matches!(s, Structure::Contact(_)) {
                return Err(InputError::invalid(&context, "verify_contact needs a contact_form structure"));
            }
            arity(0, "no arguments")
        }
        "verify_lcs" => {
            let s = man.structures.get(&t.target).ok_or_else(|| dangling("structure"))?;
            if !matches!(s, Structure::Lcs(_)) {
                return Err(InputError::invalid(&context, "verify_lcs needs an lcs structure"));
            }
            arity(0, "no arguments")
        }
        "casimir" => {
            let s = man.structures.get(&t.target).ok_or_else(|| dangling("structure"))?;
            if matches!(s, Structure::Lcs(_)) {
                return Err(InputError::invalid(&context, "casimir needs a structure with a Jacobi pair"));
            }
            if t.args.len() < 2 {
                return Err(InputError::invalid(
                    &context,
                    "casimir needs the candidate followed by at least one bracket partner",
                ));
            }
            Ok(())
        }
        "verify_action" | "contact_action" | "hamil_identity" => {
            match man.actions.get(&t.target) {
                None => Err(dangling("action")),
                Some(ActionEntry::Hamiltonian(_)) => Err(InputError::invalid(
                    &context,
                    "this operation applies to groupoid_action entries; use promote for hamiltonian blocks",
                )),
                Some(ActionEntry::Action(_)) => arity(0, "no arguments"),
            }
        }
        "f_multiplicative" => match man.actions.get(&t.target) {
            None => Err(dangling("action")),
            Some(ActionEntry::Hamiltonian(_)) => {
                Err(InputError::invalid(&context, "f_multiplicative applies to groupoid_action entries"))
            }
            Some(ActionEntry::Action(a)) => {
                let base = a.groupoid.base.dim();
                if t.args.len() == 1 || t.args.len() == 1 + base {
                    Ok(())
                } else {
                    Err(InputError::invalid(
                        &context,
                        format!("needs the function, optionally followed by a {base}-entry level point"),
                    ))
                }
            }
        },
        "locally_free" => match man.actions.get(&t.target) {
            None => Err(dangling("action")),
            Some(ActionEntry::Hamiltonian(_)) => {
                Err(InputError::invalid(&context, "locally_free applies to groupoid_action entries"))
            }
            Some(ActionEntry::Action(a)) => arity(a.m.dim(), "one rational per acted coordinate"),
        },
        "promote" => match man.actions.get(&t.target) {
            None => Err(dangling("action")),
            Some(ActionEntry::Action(_)) => Err(InputError::invalid(
                &context,
                "promote applies to hamiltonian blocks; the entry is already a groupoid action",
            )),
            Some(ActionEntry::Hamiltonian(_)) => arity(0, "no arguments"),
        },
        "reduce" => {
            man.reductions.get(&t.target).ok_or_else(|| dangling("reduction"))?;
            arity(0, "no arguments")
        }
        "orbit" => {
            man.orbits.get(&t.target).ok_or_else(|| dangling("orbit"))?;
            arity(0, "no arguments")
        }
        other => Err(InputError::invalid(
            &context,
            format!("unknown operation {other:?}; known operations: {}", OPERATIONS.join(", ")),
        )),
    }
}

fn resolve(doc: ManifestDoc) -> Result<Manifest, InputError> {
    if doc.version != VERSION_TAG {
        return Err(InputError::Version { found: doc.version });
    }

    let mut charts = BTreeMap::new();
    for c in &doc.charts {
        insert_unique(&mut charts, "chart", &c.name, resolve_chart(c)?)?;
    }
    let mut forms = BTreeMap::new();
    for f in &doc.forms {
        insert_unique(&mut forms, "form", &f.name, resolve_form(&charts, f)?)?;
    }
    let mut structures = BTreeMap::new();
    for s in &doc.structures {
        insert_unique(&mut structures, "structure", s.name(), resolve_structure(&charts, &forms, s)?)?;
    }
    let mut groupoids = BTreeMap::new();
    for g in &doc.groupoids {
        insert_unique(&mut groupoids, "groupoid", &g.name, resolve_groupoid(&charts, &forms, g)?)?;
    }
    let mut actions = BTreeMap::new();
    for a in &doc.actions {
        insert_unique(&mut actions, "action", a.name(), resolve_action(&charts, &forms, &groupoids, a)?)?;
    }
    let mut reductions = BTreeMap::new();
    for r in &doc.reductions {
        insert_unique(&mut reductions, "reduction", &r.name, resolve_reduction(&charts, &actions, r)?)?;
    }
    let mut orbits = BTreeMap::new();
    for o in &doc.orbits {
        insert_unique(&mut orbits, "orbit", o.name(), o.clone())?;
    }

    let man = Manifest { doc, charts, forms, structures, groupoids, actions, reductions, orbits };
    let mut names = BTreeMap::new();
    for t in &man.doc.tasks {
        insert_unique(&mut names, "task", &t.name, ())?;
        validate_task(&man, t)?;
    }
    Ok(man)
}
