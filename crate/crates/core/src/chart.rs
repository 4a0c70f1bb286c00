//! Coordinate charts: named coordinate tuples with optional open-domain
//! constraints that guide exact sampling away from poles and branch points.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::expr::Expr;

/// Side condition restricting a chart to an open subdomain.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum ConstraintKind {
    /// The expression must evaluate to a strictly positive value.
    Positive,
    /// The expression must evaluate to a nonzero value.
    NonZero,
}

/// A constraint attached to a chart; samples violating it are redrawn.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Constraint {
    pub expr: Expr,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn positive(expr: Expr) -> Self {
        Constraint { expr, kind: ConstraintKind::Positive }
    }

    pub fn nonzero(expr: Expr) -> Self {
        Constraint { expr, kind: ConstraintKind::NonZero }
    }
}

/// An ordered coordinate chart; tensors and maps refer to coordinates by
/// index into `coords`. Zero-dimensional charts (a single point) are legal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Chart {
    pub name: String,
    pub coords: Vec<String>,
    pub constraints: Vec<Constraint>,
}

/// Maximum chart dimension accepted by tensor operations.
pub const MAX_DIM: usize = 8;

impl Chart {
    pub fn new(name: &str, coords: &[&str]) -> Arc<Self> {
        Arc::new(Chart {
            name: String::from(name),
            coords: coords.iter().map(|c| String::from(*c)).collect(),
            constraints: Vec::new(),
        })
    }

    pub fn with_constraints(name: &str, coords: &[&str], constraints: Vec<Constraint>) -> Arc<Self> {
        Arc::new(Chart {
            name: String::from(name),
            coords: coords.iter().map(|c| String::from(*c)).collect(),
            constraints,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn index_of(&self, coord: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == coord)
    }

    /// Concatenates two charts into a product chart; coordinate names must
    /// stay distinct.
    pub fn product(name: &str, left: &Chart, right: &Chart) -> Arc<Self> {
        let mut coords: Vec<String> = left.coords.clone();
        coords.extend(right.coords.iter().cloned());
        let mut constraints = left.constraints.clone();
        constraints.extend(right.constraints.iter().cloned());
        Arc::new(Chart { name: String::from(name), coords, constraints })
    }
}
