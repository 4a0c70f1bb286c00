//! Built-in corpus: frozen manifests embedded in the binary, one per
//! worked example family. Keys are stable identifiers for scripting.

use serde::{Deserialize, Serialize};

use crate::manifest::{manifest_from_str, InputError, Manifest, ManifestDoc};

pub struct CorpusEntry {
    pub key: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

pub const ENTRIES: &[CorpusEntry] = &[
    CorpusEntry {
        key: "r3_groupoid",
        description: "Exponential-scaling groupoid on three-space with its multiplicative contact form",
        json: include_str!("../corpus/r3_groupoid.json"),
    },
    CorpusEntry {
        key: "example_6_1",
        description: "Heisenberg contact spaces (one and two oscillator pairs) under the scaling action, with circle and three-sphere reductions",
        json: include_str!("../corpus/example_6_1.json"),
    },
    CorpusEntry {
        key: "cosphere_6_2",
        description: "Unit cosphere reductions of flat one-jet spaces over one and two base dimensions",
        json: include_str!("../corpus/cosphere_6_2.json"),
    },
    CorpusEntry {
        key: "abelian_tstar",
        description: "Abelian cotangent-times-line groupoids for one and two dimensional translation groups",
        json: include_str!("../corpus/abelian_tstar.json"),
    },
    CorpusEntry {
        key: "sl2_casimir",
        description: "Linear Poisson structure on the dual of sl(2) with its quadratic Casimir",
        json: include_str!("../corpus/sl2_casimir.json"),
    },
    CorpusEntry {
        key: "u2_orbits",
        description: "Torus orbit arithmetic: first return times, prequantization integers, lens invariants",
        json: include_str!("../corpus/u2_orbits.json"),
    },
    CorpusEntry {
        key: "albert_abelian",
        description: "Promotion of an abelian Hamiltonian translation flow to a groupoid action",
        json: include_str!("../corpus/albert_abelian.json"),
    },
    CorpusEntry {
        key: "appendix_transforms",
        description: "Conformal rescaling, convention switch, and anchor annihilation on the exponential groupoid",
        json: include_str!("../corpus/appendix_transforms.json"),
    },
];

/// One row of the machine-readable listing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusListing {
    pub key: String,
    pub description: String,
    pub tasks: usize,
}

pub fn corpus_list() -> Vec<CorpusListing> {
    ENTRIES
        .iter()
        .map(|e| {
            let doc: ManifestDoc = serde_json::from_str(e.json)
                .expect("embedded corpus entries parse by construction");
            CorpusListing {
                key: e.key.to_string(),
                description: e.description.to_string(),
                tasks: doc.tasks.len(),
            }
        })
        .collect()
}

pub fn entry(key: &str) -> Option<&'static CorpusEntry> {
    ENTRIES.iter().find(|e| e.key == key)
}

pub fn entry_manifest(key: &str) -> Result<Manifest, InputError> {
    let e = entry(key).ok_or_else(|| InputError::Dangling {
        kind: "corpus entry",
        name: key.to_string(),
        referrer: "corpus run".to_string(),
    })?;
    manifest_from_str(e.json)
}
