//! Task execution. Tasks are independent and run in parallel up to the
//! requested thread count; each draws a sampler configuration derived from
//! the run seed and its declaration index, and the report lists tasks in
//! declaration order regardless of completion order.

use std::time::Instant;

use rayon::prelude::*;

use jacored_core::action::{
    check_locally_free, hamiltonian_to_action, reduce_contact, reduce_lcs, verify_contact_action,
    verify_f_multiplicative, verify_groupoid_action, verify_hamil_identity, ActionError,
    ReducedKind,
};
use jacored_core::expr::falsify_zero;
use jacored_core::groupoid::{
    conformal_rescale_groupoid, convention_switch, verify_anchor_maps, verify_contact_groupoid,
    verify_flfr, verify_groupoid,
};
use jacored_core::jacobi::{jacobi_bracket, verify_contact, verify_jacobi, verify_lcs};
use jacored_core::orbit::{compute_t0, prequant_report, u2_lens, OrbitError, OrbitSpec};
use jacored_core::surd::Surd;
use jacored_core::{Expr, Rat, SamplingConfig, Verdict};

use crate::manifest::{
    parse_in, parse_point, ActionEntry, InputError, Manifest, OrbitDoc, ReductionKindDoc,
    Structure, TaskDoc, VERSION_TAG,
};
use crate::report::{
    contact_outcome, lcs_outcome, CertificateDoc, Header, Outcome, Report, TaskReport, VerdictDoc,
};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub samples: u32,
    /// Worker threads; 0 picks the rayon default.
    pub parallel: usize,
    /// Record wall times per task. Off by default so that reports are
    /// byte-identical given (manifest, seed).
    pub timings: bool,
    pub format: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: crate::DEFAULT_SEED,
            samples: 8,
            parallel: 0,
            timings: false,
            format: "json".to_string(),
        }
    }
}

/// Runs every task of the manifest. `label` names the manifest source in
/// the report header (a path, or `corpus:<entry>`).
pub fn run(man: &Manifest, opts: &RunOptions, label: &str) -> Result<Report, InputError> {
    let indexed: Vec<(usize, &TaskDoc)> = man.tasks().iter().enumerate().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallel)
        .build()
        .map_err(|e| InputError::invalid("run", format!("cannot build thread pool: {e}")))?;
    let tasks: Result<Vec<TaskReport>, InputError> = pool.install(|| {
        indexed
            .par_iter()
            .map(|(i, t)| run_task(man, t, *i, opts))
            .collect()
    });
    Ok(Report { header: header(opts, label), tasks: tasks? })
}

/// Runs exactly one named task (the `reduce` subcommand). The task keeps
/// the sampler seed it would receive in a full run.
pub fn run_single(man: &Manifest, name: &str, opts: &RunOptions, label: &str) -> Result<Report, InputError> {
    let (index, task) = man
        .tasks()
        .iter()
        .enumerate()
        .find(|(_, t)| t.name == name)
        .ok_or_else(|| InputError::Dangling {
            kind: "task",
            name: name.to_string(),
            referrer: "reduce invocation".to_string(),
        })?;
    if task.operation != "reduce" {
        return Err(InputError::invalid(
            format!("task {name:?}"),
            format!("the reduce subcommand runs reduce tasks; this one is {:?}", task.operation),
        ));
    }
    let report = run_task(man, task, index, opts)?;
    Ok(Report { header: header(opts, label), tasks: vec![report] })
}

fn header(opts: &RunOptions, label: &str) -> Header {
    Header {
        manifest: label.to_string(),
        version: VERSION_TAG.to_string(),
        seed: opts.seed,
        samples: opts.samples,
        parallel: opts.parallel,
        format: opts.format.clone(),
        timings: opts.timings,
    }
}

fn run_task(man: &Manifest, t: &TaskDoc, index: usize, opts: &RunOptions) -> Result<TaskReport, InputError> {
    let cfg = SamplingConfig::new(opts.seed).with_samples(opts.samples).derive(index as u64);
    let seed = cfg.seed;
    let started = Instant::now();
    let outcome = execute(man, t, &cfg)?;
    let wall_ms = opts.timings.then(|| started.elapsed().as_millis() as u64);
    Ok(TaskReport { name: t.name.clone(), operation: t.operation.clone(), seed, outcome, wall_ms })
}

fn verdict_outcome(v: Verdict) -> Outcome {
    Outcome::Verdict { verdict: VerdictDoc::from(&v) }
}

fn expr_err(context: &str, e: jacored_core::ExprError) -> InputError {
    InputError::invalid(context, e)
}

fn action_err(context: &str, e: ActionError) -> InputError {
    match e {
        ActionError::WrongLeafType { requested, found } => InputError::invalid(
            context,
            format!("wrong leaf type: the reduction asks for {requested:?} but the point sits on a {found:?} leaf"),
        ),
        ActionError::DescentFailure { condition, verdict } => InputError::invalid(
            context,
            format!("descent failure in {condition} ({:?})", verdict.status),
        ),
        ActionError::NotHamiltonian { generator, residual } => InputError::invalid(
            context,
            format!("generator {generator} does not pair with its moment component; residual {residual}"),
        ),
        ActionError::Input(m) => InputError::invalid(context, m),
        ActionError::Expr(e) => InputError::invalid(context, e),
    }
}

fn orbit_err(context: &str, e: OrbitError) -> InputError {
    InputError::invalid(context, e)
}

fn execute(man: &Manifest, t: &TaskDoc, cfg: &SamplingConfig) -> Result<Outcome, InputError> {
    let ctx = format!("task {:?}", t.name);
    match t.operation.as_str() {
        "verify_groupoid" => {
            let g = &man.groupoids[&t.target];
            Ok(verdict_outcome(verify_groupoid(g, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "contact_multiplicativity" => {
            let g = &man.groupoids[&t.target];
            Ok(verdict_outcome(verify_contact_groupoid(g, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "convention_flfr" => {
            let g = &man.groupoids[&t.target];
            let switched = convention_switch(g).map_err(|e| expr_err(&ctx, e))?;
            Ok(verdict_outcome(verify_flfr(&switched, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "anchor_annihilation" => {
            let g = &man.groupoids[&t.target];
            Ok(verdict_outcome(verify_anchor_maps(g, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "rescale_reverify" => {
            let g = &man.groupoids[&t.target];
            let u = parse_in(&ctx, &t.args[0])?;
            let rescaled = conformal_rescale_groupoid(g, &u).map_err(|e| expr_err(&ctx, e))?;
            let v = verify_groupoid(&rescaled, cfg)
                .map_err(|e| expr_err(&ctx, e))?
                .and(verify_contact_groupoid(&rescaled, &cfg.derive(1)).map_err(|e| expr_err(&ctx, e))?);
            Ok(verdict_outcome(v))
        }
        "verify_jacobi" => {
            let s = &man.structures[&t.target];
            let j = s.jacobi().map_err(|e| expr_err(&ctx, e))?;
            Ok(verdict_outcome(verify_jacobi(&j, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "verify_contact" => {
            let Structure::Contact(c) = &man.structures[&t.target] else { unreachable!() };
            Ok(verdict_outcome(verify_contact(c, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "verify_lcs" => {
            let Structure::Lcs(l) = &man.structures[&t.target] else { unreachable!() };
            Ok(verdict_outcome(verify_lcs(l, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "casimir" => {
            let s = &man.structures[&t.target];
            let j = s.jacobi().map_err(|e| expr_err(&ctx, e))?;
            let f = parse_in(&ctx, &t.args[0])?;
            let mut residuals: Vec<(Option<String>, Expr)> = Vec::new();
            for g in &t.args[1..] {
                let ge = parse_in(&ctx, g)?;
                let b = jacobi_bracket(&j, &f, &ge).map_err(|e| expr_err(&ctx, e))?;
                residuals.push((Some(format!("bracket with {g}")), b));
            }
            residuals.retain(|(_, e)| !e.is_zero_expr());
            let v = if residuals.is_empty() {
                Verdict::verified()
            } else {
                falsify_zero(&residuals, &j.chart, cfg)
            };
            Ok(verdict_outcome(v))
        }
        "verify_action" => {
            let ActionEntry::Action(a) = &man.actions[&t.target] else { unreachable!() };
            Ok(verdict_outcome(verify_groupoid_action(a, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "contact_action" => {
            let ActionEntry::Action(a) = &man.actions[&t.target] else { unreachable!() };
            Ok(verdict_outcome(verify_contact_action(a, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "hamil_identity" => {
            let ActionEntry::Action(a) = &man.actions[&t.target] else { unreachable!() };
            Ok(verdict_outcome(verify_hamil_identity(a, cfg).map_err(|e| expr_err(&ctx, e))?))
        }
        "f_multiplicative" => {
            let ActionEntry::Action(a) = &man.actions[&t.target] else { unreachable!() };
            let big_f = parse_in(&ctx, &t.args[0])?;
            let level: Option<Vec<Rat>> = if t.args.len() > 1 {
                Some(parse_point(&ctx, &t.args[1..])?)
            } else {
                None
            };
            let v = verify_f_multiplicative(a, &big_f, None, level.as_deref(), cfg)
                .map_err(|e| action_err(&ctx, e))?;
            Ok(verdict_outcome(v))
        }
        "locally_free" => {
            let ActionEntry::Action(a) = &man.actions[&t.target] else { unreachable!() };
            let point = parse_point(&ctx, &t.args)?;
            let r = check_locally_free(a, &point).map_err(|e| expr_err(&ctx, e))?;
            let mut fields = std::collections::BTreeMap::new();
            fields.insert("free".to_string(), r.free.to_string());
            fields.insert("rank".to_string(), r.rank.to_string());
            fields.insert("reasons".to_string(), r.reasons.join("; "));
            Ok(Outcome::Object { fields })
        }
        "promote" => {
            let ActionEntry::Hamiltonian(h) = &man.actions[&t.target] else { unreachable!() };
            let out = hamiltonian_to_action(h, cfg).map_err(|e| action_err(&ctx, e))?;
            Ok(Outcome::Promoted {
                groupoid_axioms: VerdictDoc::from(&out.groupoid_axioms),
                action_axioms: VerdictDoc::from(&out.action_axioms),
                multiplicativity: VerdictDoc::from(&out.multiplicativity),
            })
        }
        "reduce" => {
            let red = &man.reductions[&t.target];
            let ActionEntry::Action(a) = &man.actions[&red.action] else { unreachable!() };
            let result = match red.kind {
                ReductionKindDoc::Contact => reduce_contact(a, &red.input, cfg),
                ReductionKindDoc::Lcs => reduce_lcs(a, &red.input, cfg),
            };
            match result {
                Ok(rs) => {
                    let certificates: Vec<CertificateDoc> = rs
                        .certificates
                        .iter()
                        .map(|(name, v)| CertificateDoc { name: name.clone(), verdict: VerdictDoc::from(v) })
                        .collect();
                    Ok(match &rs.kind {
                        ReducedKind::Contact(c) => contact_outcome(c, certificates),
                        ReducedKind::Lcs(l) => lcs_outcome(l, certificates),
                    })
                }
                // A failed descent condition is a legitimate verification
                // outcome, not an input error: surface its verdict.
                Err(ActionError::DescentFailure { condition, verdict }) => {
                    let mut doc = VerdictDoc::from(&verdict);
                    let note = format!("descent failure: {condition}");
                    doc.detail = Some(match doc.detail.take() {
                        Some(d) => format!("{note}; {d}"),
                        None => note,
                    });
                    Ok(Outcome::Verdict { verdict: doc })
                }
                Err(e) => Err(action_err(&ctx, e)),
            }
        }
        "orbit" => orbit_outcome(&ctx, &man.orbits[&t.target]),
        _ => unreachable!("operations are validated at load time"),
    }
}

fn orbit_outcome(ctx: &str, doc: &OrbitDoc) -> Result<Outcome, InputError> {
    match doc {
        OrbitDoc::T0 { xi, .. } => {
            let values = parse_point(ctx, xi)?
                .into_iter()
                .map(|q| Surd::from_rat(q))
                .collect::<Vec<Surd>>();
            let spec = OrbitSpec::new(values).map_err(|e| orbit_err(ctx, e))?;
            let (t0, period, count) = compute_t0(&spec).map_err(|e| orbit_err(ctx, e))?;
            let mut fields = std::collections::BTreeMap::new();
            fields.insert("t0".to_string(), t0.to_string());
            fields.insert("period".to_string(), period.to_string());
            fields.insert("count".to_string(), count.to_string());
            Ok(Outcome::Object { fields })
        }
        OrbitDoc::Prequant { d, .. } => {
            let r = prequant_report(d).map_err(|e| orbit_err(ctx, e))?;
            Ok(Outcome::Object { fields: prequant_fields(&r) })
        }
        OrbitDoc::U2Lens { m, n, .. } => {
            let v = u2_lens(*m, *n).map_err(|e| orbit_err(ctx, e))?;
            Ok(Outcome::Value { value: v.to_string() })
        }
    }
}

pub fn prequant_fields(
    r: &jacored_core::orbit::PrequantReport,
) -> std::collections::BTreeMap<String, String> {
    let mut fields = std::collections::BTreeMap::new();
    fields.insert("integral".to_string(), r.integral.to_string());
    fields.insert("n".to_string(), r.n.to_string());
    let prim: Vec<String> = r.primitive.iter().map(|v| v.to_string()).collect();
    fields.insert("primitive".to_string(), format!("[{}]", prim.join(", ")));
    fields.insert("t0".to_string(), r.t0.to_string());
    fields.insert("period".to_string(), r.big_t.to_string());
    fields.insert("count".to_string(), r.count.to_string());
    fields.insert("f".to_string(), r.f.to_string());
    fields.insert(
        "lens".to_string(),
        match &r.lens {
            Some(l) => l.to_string(),
            None => "none".to_string(),
        },
    );
    fields
}
