//! Report assembly and emission. A report is deterministic for a fixed
//! (manifest, seed) pair: task order follows the declaration order, all
//! maps are ordered, and wall times are only recorded when explicitly
//! requested, so default JSON output is byte-identical across runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use jacored_core::jacobi::{ContactForm, LcsStructure};
use jacored_core::tensor::DiffForm;
use jacored_core::{Method, Status, Verdict, Witness};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub header: Header,
    pub tasks: Vec<TaskReport>,
}

/// Mirrors every run flag so a report is self-describing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub manifest: String,
    pub version: String,
    pub seed: u64,
    pub samples: u32,
    pub parallel: usize,
    pub format: String,
    pub timings: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub name: String,
    pub operation: String,
    /// Sampler seed the task actually used (derived from the run seed and
    /// the task's declaration index).
    pub seed: u64,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    /// A verification verdict.
    Verdict { verdict: VerdictDoc },
    /// A reduced structure: its forms plus one verdict per descent condition.
    Reduced {
        kind: String,
        chart: String,
        forms: BTreeMap<String, Vec<(Vec<u8>, String)>>,
        certificates: Vec<CertificateDoc>,
    },
    /// The recorded verdicts of a promoted Hamiltonian action.
    Promoted {
        groupoid_axioms: VerdictDoc,
        action_axioms: VerdictDoc,
        multiplicativity: VerdictDoc,
    },
    /// A single computed exact value.
    Value { value: String },
    /// A computed record, field by field, every value an exact string.
    Object { fields: BTreeMap<String, String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub name: String,
    pub verdict: VerdictDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictDoc {
    pub status: StatusDoc,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusDoc {
    Verified,
    Inconclusive,
    Falsified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub assignments: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jets: Vec<(String, String)>,
    pub residual: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
}

impl From<&Witness> for WitnessDoc {
    fn from(w: &Witness) -> Self {
        WitnessDoc {
            assignments: w.assignments.clone(),
            jets: w.jets.clone(),
            residual: w.residual.clone(),
            component: w.component.clone(),
        }
    }
}

impl From<&Verdict> for VerdictDoc {
    fn from(v: &Verdict) -> Self {
        VerdictDoc {
            status: match v.status {
                Status::Verified => StatusDoc::Verified,
                Status::Falsified => StatusDoc::Falsified,
                Status::Inconclusive => StatusDoc::Inconclusive,
            },
            method: match v.method {
                Method::CanonicalZero => "canonical_zero".to_string(),
                Method::Sampling => "sampling".to_string(),
            },
            witness: v.witness.as_ref().map(WitnessDoc::from),
            detail: v.detail.clone(),
        }
    }
}

fn form_terms(f: &DiffForm) -> Vec<(Vec<u8>, String)> {
    f.terms.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
}

pub fn contact_outcome(c: &ContactForm, certificates: Vec<CertificateDoc>) -> Outcome {
    let mut forms = BTreeMap::new();
    forms.insert("theta".to_string(), form_terms(&c.theta));
    Outcome::Reduced { kind: "contact".to_string(), chart: c.chart.name.clone(), forms, certificates }
}

pub fn lcs_outcome(l: &LcsStructure, certificates: Vec<CertificateDoc>) -> Outcome {
    let mut forms = BTreeMap::new();
    forms.insert("two_form".to_string(), form_terms(&l.two_form));
    forms.insert("lee_form".to_string(), form_terms(&l.lee_form));
    Outcome::Reduced { kind: "lcs".to_string(), chart: l.chart.name.clone(), forms, certificates }
}

impl Outcome {
    /// Worst verification status carried by the outcome; computed values
    /// carry none and never affect the exit code.
    pub fn worst_status(&self) -> Option<StatusDoc> {
        match self {
            Outcome::Verdict { verdict } => Some(verdict.status),
            Outcome::Reduced { certificates, .. } => {
                certificates.iter().map(|c| c.verdict.status).max()
            }
            Outcome::Promoted { groupoid_axioms, action_axioms, multiplicativity } => {
                [groupoid_axioms.status, action_axioms.status, multiplicativity.status]
                    .into_iter()
                    .max()
            }
            Outcome::Value { .. } | Outcome::Object { .. } => None,
        }
    }
}

/// Exit-code contract: 0 all verified or computed, 1 any falsified,
/// 2 any inconclusive without a falsification, 3 input errors (mapped by
/// the caller before a report exists).
pub fn exit_code(report: &Report) -> u8 {
    let worst = report.tasks.iter().filter_map(|t| t.outcome.worst_status()).max();
    match worst {
        Some(StatusDoc::Falsified) => 1,
        Some(StatusDoc::Inconclusive) => 2,
        Some(StatusDoc::Verified) | None => 0,
    }
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization is infallible");
    s.push('\n');
    s
}

fn status_word(s: StatusDoc) -> &'static str {
    match s {
        StatusDoc::Verified => "Verified",
        StatusDoc::Falsified => "Falsified",
        StatusDoc::Inconclusive => "Inconclusive",
    }
}

fn push_verdict_line(out: &mut String, indent: &str, label: &str, v: &VerdictDoc) {
    let _ = write!(out, "{indent}{label}: {} ({})", status_word(v.status), v.method);
    if let Some(d) = &v.detail {
        let _ = write!(out, " [{d}]");
    }
    if let Some(w) = &v.witness {
        let at: Vec<String> = w.assignments.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        let _ = write!(out, " witness residual {} at {}", w.residual, at.join(", "));
        if let Some(c) = &w.component {
            let _ = write!(out, " in {c}");
        }
    }
    out.push('\n');
}

pub fn to_text(report: &Report) -> String {
    let mut out = String::new();
    let h = &report.header;
    let _ = writeln!(
        out,
        "manifest {} (version {}), seed {}, samples {}, parallel {}, timings {}",
        h.manifest, h.version, h.seed, h.samples, h.parallel, h.timings
    );
    for t in &report.tasks {
        let timing = match t.wall_ms {
            Some(ms) => format!(" [{ms} ms]"),
            None => String::new(),
        };
        match &t.outcome {
            Outcome::Verdict { verdict } => {
                push_verdict_line(
                    &mut out,
                    "",
                    &format!("{} ({}, seed {}){}", t.name, t.operation, t.seed, timing),
                    verdict,
                );
            }
            Outcome::Reduced { kind, chart, forms, certificates } => {
                let _ = writeln!(
                    out,
                    "{} ({}, seed {}){}: reduced {kind} structure on {chart}",
                    t.name, t.operation, t.seed, timing
                );
                for (name, terms) in forms {
                    let body: Vec<String> =
                        terms.iter().map(|(k, v)| format!("{k:?}: {v}")).collect();
                    let _ = writeln!(out, "  {name}: {}", body.join(", "));
                }
                for c in certificates {
                    push_verdict_line(&mut out, "  ", &c.name, &c.verdict);
                }
            }
            Outcome::Promoted { groupoid_axioms, action_axioms, multiplicativity } => {
                let _ = writeln!(out, "{} ({}, seed {}){}: promoted", t.name, t.operation, t.seed, timing);
                push_verdict_line(&mut out, "  ", "groupoid axioms", groupoid_axioms);
                push_verdict_line(&mut out, "  ", "action axioms", action_axioms);
                push_verdict_line(&mut out, "  ", "multiplicativity", multiplicativity);
            }
            Outcome::Value { value } => {
                let _ = writeln!(out, "{} ({}, seed {}){}: {value}", t.name, t.operation, t.seed, timing);
            }
            Outcome::Object { fields } => {
                let body: Vec<String> = fields.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                let _ = writeln!(
                    out,
                    "{} ({}, seed {}){}: {}",
                    t.name, t.operation, t.seed, timing, body.join(", ")
                );
            }
        }
    }
    out
}
