//! Tri-state verification verdicts and the sampling configuration they share.
//!
//! The contract is asymmetric on purpose: only canonical normalization may
//! claim `Verified`, while sampling may only strengthen a report to
//! `Falsified` (with an exact witness) or leave it `Inconclusive`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::chart::Constraint;

/// Outcome of an identity check.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum Status {
    /// The residual normalizes to the zero canonical form.
    Verified,
    /// Some exact sample point evaluates the residual to a nonzero value.
    Falsified,
    /// Neither: canonically nonzero but every drawn sample vanished.
    Inconclusive,
}

/// How a verdict was reached.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Method {
    CanonicalZero,
    Sampling,
}

/// Exact counterexample attached to a `Falsified` verdict.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Witness {
    /// Coordinate assignments, printed exactly (`name = value`).
    pub assignments: Vec<(String, String)>,
    /// Values assigned to opaque jet atoms, printed exactly.
    pub jets: Vec<(String, String)>,
    /// Exact nonzero residual value at the sample.
    pub residual: String,
    /// Which component of a multi-part identity failed, when applicable.
    pub component: Option<String>,
}

/// Result of verifying one identity (or a conjunction of identities).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Verdict {
    pub status: Status,
    pub method: Method,
    pub witness: Option<Witness>,
    /// Free-form note (e.g. which sub-identity drove the verdict).
    pub detail: Option<String>,
}

impl Verdict {
    pub fn verified() -> Self {
        Verdict { status: Status::Verified, method: Method::CanonicalZero, witness: None, detail: None }
    }

    pub fn inconclusive(detail: Option<String>) -> Self {
        Verdict { status: Status::Inconclusive, method: Method::Sampling, witness: None, detail }
    }

    pub fn falsified(witness: Witness) -> Self {
        Verdict { status: Status::Falsified, method: Method::Sampling, witness: Some(witness), detail: None }
    }

    pub fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn is_verified(&self) -> bool {
        self.status == Status::Verified
    }

    /// Conjunction: Verified only if all are; Falsified dominates Inconclusive;
    /// the first witness is kept.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self.status, other.status) {
            (Status::Falsified, _) => self,
            (_, Status::Falsified) => other,
            (Status::Verified, Status::Verified) => Verdict {
                // Verified is only ever produced canonically.
                status: Status::Verified,
                method: Method::CanonicalZero,
                witness: None,
                detail: self.detail.or(other.detail),
            },
            (Status::Inconclusive, _) => self,
            (_, Status::Inconclusive) => other,
        }
    }

    /// Conjunction over an iterator, starting from `Verified`.
    pub fn all<I: IntoIterator<Item = Verdict>>(parts: I) -> Verdict {
        let mut acc = Verdict::verified();
        for p in parts {
            acc = acc.and(p);
            if acc.status == Status::Falsified {
                return acc;
            }
        }
        acc
    }
}

/// Configuration for the exact sampler used by `is_zero`-style checks.
///
/// The sampler is the only stateful object in the crate; it is constructed
/// per check from the explicit `seed`, so runs are reproducible.
#[derive(Clone, Debug)]
pub struct SamplingConfig {
    pub seed: u64,
    /// Number of accepted sample points per scalar residual.
    pub samples: u32,
    /// Bound on redraws when a sample hits a pole or violates a constraint.
    pub max_retries: u32,
    /// Domain constraints the samples must satisfy.
    pub constraints: Vec<Constraint>,
}

impl SamplingConfig {
    pub fn new(seed: u64) -> Self {
        SamplingConfig { seed, samples: 8, max_retries: 64, constraints: Vec::new() }
    }

    pub fn with_samples(mut self, samples: u32) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_constraints(mut self, constraints: Vec<Constraint>) -> Self {
        self.constraints = constraints;
        self
    }

    /// Derive an independent child configuration, used to decorrelate the
    /// sub-checks of a compound verification without sharing stream state.
    pub fn derive(&self, salt: u64) -> Self {
        let mut child = self.clone();
        // SplitMix64 step keeps derived seeds deterministic and well spread.
        let mut z = self.seed.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(salt.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        child.seed = z ^ (z >> 31);
        child
    }
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig::new(1)
    }
}
