//! Manifest-driven verification runner over `jacored-core`.
//!
//! A manifest is a JSON document declaring charts, forms, structures,
//! groupoids, actions, reductions, and orbit computations by name, plus a
//! task list referencing them. Loading resolves the whole object graph up
//! front so every task failure after that point is a mathematical outcome,
//! not plumbing. Reports are deterministic given (manifest, seed): tasks
//! appear in declaration order and each derives its own sampler stream.

pub mod corpus;
pub mod manifest;
pub mod report;
pub mod runner;

/// Base sampler seed when neither the flag nor the environment sets one.
pub const DEFAULT_SEED: u64 = 1729;
