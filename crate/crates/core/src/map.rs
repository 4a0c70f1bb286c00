//! Smooth maps between charts, written in coordinates.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::chart::Chart;
use crate::expr::{Expr, ExprError};

/// A map `source -> target`: one expression per target coordinate, written
/// in the source coordinates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SmoothMap {
    pub source: Arc<Chart>,
    pub target: Arc<Chart>,
    pub components: Vec<Expr>,
}

impl SmoothMap {
    /// Validates arity and that components only mention source coordinates.
    pub fn new(
        source: Arc<Chart>,
        target: Arc<Chart>,
        components: Vec<Expr>,
    ) -> Result<Self, ExprError> {
        if components.len() != target.dim() {
            return Err(ExprError::Unsupported(format!(
                "map into {} needs {} components, got {}",
                target.name,
                target.dim(),
                components.len()
            )));
        }
        for (i, c) in components.iter().enumerate() {
            for coord in c.coords() {
                if source.index_of(&coord).is_none() {
                    return Err(ExprError::Unsupported(format!(
                        "component {} of map {} -> {} uses unknown coordinate {}",
                        i, source.name, target.name, coord
                    )));
                }
            }
        }
        Ok(SmoothMap { source, target, components })
    }

    pub fn identity(chart: Arc<Chart>) -> Self {
        let components = chart.coords.iter().map(|c| Expr::coord(c)).collect();
        SmoothMap { source: chart.clone(), target: chart, components }
    }

    /// The substitution `target coord -> component` realizing this map.
    pub fn substitution(&self) -> BTreeMap<String, Expr> {
        self.target
            .coords
            .iter()
            .cloned()
            .zip(self.components.iter().cloned())
            .collect()
    }

    /// Pulls a scalar on the target back to the source: `f` becomes `f∘φ`.
    pub fn pull_scalar(&self, f: &Expr) -> Result<Expr, ExprError> {
        for coord in f.coords() {
            if self.target.index_of(&coord).is_none() {
                return Err(ExprError::Unsupported(format!(
                    "scalar uses coordinate {} not on chart {}",
                    coord, self.target.name
                )));
            }
        }
        f.substitute(&self.substitution())
    }

    /// `self ∘ inner` (apply `inner` first); charts must agree exactly.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap, ExprError> {
        if inner.target != self.source {
            return Err(ExprError::Unsupported(format!(
                "cannot compose: inner lands in {} but outer starts at {}",
                inner.target.name, self.source.name
            )));
        }
        let sub = inner.substitution();
        let components = self
            .components
            .iter()
            .map(|c| c.substitute(&sub))
            .collect::<Result<Vec<_>, _>>()?;
        SmoothMap::new(inner.source.clone(), self.target.clone(), components)
    }

    /// Jacobian matrix: `rows = target components`, `cols = source coords`.
    pub fn jacobian(&self) -> Vec<Vec<Expr>> {
        self.components
            .iter()
            .map(|c| {
                self.source
                    .coords
                    .iter()
                    .map(|x| c.differentiate(x))
                    .collect()
            })
            .collect()
    }

    /// Componentwise exact equality of maps on the same charts.
    pub fn equiv(&self, other: &SmoothMap) -> bool {
        self.source == other.source
            && self.target == other.target
            && self
                .components
                .iter()
                .zip(other.components.iter())
                .all(|(a, b)| a.equiv(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn compose_is_substitution() {
        let line = Chart::new("line", &["t"]);
        let plane = Chart::new("plane", &["x", "y"]);
        let f = SmoothMap::new(line.clone(), plane.clone(), alloc::vec![e("t"), e("t^2")]).unwrap();
        let g = SmoothMap::new(plane.clone(), line.clone(), alloc::vec![e("x*y")]).unwrap();
        let h = g.compose(&f).unwrap();
        assert!(h.components[0].sub(&e("t^3")).is_zero_expr());
        let id = SmoothMap::identity(plane.clone());
        assert!(g.compose(&id).unwrap().equiv(&g));
    }

    #[test]
    fn pullback_of_scalars() {
        let line = Chart::new("line", &["t"]);
        let plane = Chart::new("plane", &["x", "y"]);
        let f = SmoothMap::new(line, plane, alloc::vec![e("exp(t)"), e("1/t")]).unwrap();
        let s = f.pull_scalar(&e("x*y")).unwrap();
        assert!(s.sub(&e("exp(t)/t")).is_zero_expr());
        assert!(f.pull_scalar(&e("z")).is_err());
    }

    #[test]
    fn jacobian_rows_follow_targets() {
        let plane = Chart::new("plane", &["x", "y"]);
        let f = SmoothMap::new(plane.clone(), plane.clone(), alloc::vec![e("x^2"), e("x*y")]).unwrap();
        let j = f.jacobian();
        assert!(j[0][0].sub(&e("2*x")).is_zero_expr());
        assert!(j[0][1].is_zero_expr());
        assert!(j[1][0].sub(&e("y")).is_zero_expr());
        assert!(j[1][1].sub(&e("x")).is_zero_expr());
    }

    #[test]
    fn arity_and_coordinate_validation() {
        let line = Chart::new("line", &["t"]);
        let plane = Chart::new("plane", &["x", "y"]);
        assert!(SmoothMap::new(line.clone(), plane.clone(), alloc::vec![e("t")]).is_err());
        assert!(SmoothMap::new(line, plane, alloc::vec![e("t"), e("w")]).is_err());
    }
}
